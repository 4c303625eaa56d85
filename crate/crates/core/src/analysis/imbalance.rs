//! Imbalance from the eigen-decomposition and from tower overlaps.

use crate::error::{Error, Result};
use rayon::prelude::*;

use crate::spectral::Eigensystem;
use crate::Complex64;

/// Largest sector handled by [`imbalance_spectral_oracle`].
pub const ORACLE_BUDGET: usize = 2_000;

/// `I(t) = (1/L) Σ_{β,n,m} z_β c_n c_m V_βn V_βm e^{−i(E_m − E_n) t}` with
/// `z_β = Σ_i s_{α,i} s_{β,i}` and `c_n = ⟨α|E_n⟩`; the sums over `n` and `m`
/// factor into `|Σ_n V_βn c_n e^{−iE_n t}|²`.
pub fn imbalance_spectral_oracle(eig: &Eigensystem, alpha: u64, times: &[f64]) -> Result<Vec<f64>> {
    let sector = eig.sector();
    let dim = sector.dim();
    if dim > ORACLE_BUDGET {
        return Err(Error::Capacity(format!(
            "the spectral imbalance oracle is limited to dimension {ORACLE_BUDGET}, got {dim}"
        )));
    }
    let l = sector.sites() as i64;
    // s_{α,i} s_{β,i} = +1 where the occupations agree
    let z: Vec<f64> = sector
        .iter()
        .map(|b| (l - 2 * (b ^ alpha).count_ones() as i64) as f64)
        .collect();
    let vectors: Vec<Vec<f64>> = (0..dim).map(|n| eig.vector(n)).collect::<Result<_>>()?;
    let a = sector.rank(alpha)?;
    let c: Vec<f64> = vectors.iter().map(|v| v[a]).collect();
    let e = eig.energies();
    Ok(times
        .par_iter()
        .map(|&t| {
            let mut amp = vec![Complex64::default(); dim];
            for n in 0..dim {
                let p = Complex64::from_polar(c[n], -e[n] * t);
                amp.iter_mut().zip(&vectors[n]).for_each(|(x, &v)| *x += p * v);
            }
            amp.iter().zip(&z).map(|(x, zb)| zb * x.norm_sqr()).sum::<f64>() / l as f64
        })
        .collect())
}

/// Tower weights `a²` placed symmetrically about the centre:
/// `[a1, a2, …]` becomes `[…, a2, a1, a1, a2, …]` for `even` layouts and
/// `[…, a2, a1, a0, a1, a2, …]` (with `a0` the first entry) otherwise.
pub fn mirrored_tower_weights(a2: &[f64], even: bool) -> Vec<f64> {
    let mut out: Vec<f64> = a2.iter().rev().copied().collect();
    let tail = if even { a2 } else { a2.get(1..).unwrap_or(&[]) };
    out.extend_from_slice(tail);
    out
}

/// `I₀ + Σ_{j≠j'} a²_j a²_{j'} cos((j − j') ΔE t)` over towers at positions `j`.
pub fn imbalance_from_towers(weights: &[f64], delta_e: f64, i0: f64, times: &[f64]) -> Vec<f64> {
    let k = weights.len();
    // collect the weight of every separation d = j − j' > 0
    let pair: Vec<f64> = (1..k)
        .map(|d| 2.0 * (0..k - d).map(|j| weights[j] * weights[j + d]).sum::<f64>())
        .collect();
    times
        .iter()
        .map(|&t| {
            i0 + pair
                .iter()
                .enumerate()
                .map(|(d, w)| w * ((d + 1) as f64 * delta_e * t).cos())
                .sum::<f64>()
        })
        .collect()
}

/// Leading term `I₀ + 2 Σ_j a²_j a²_{j+1} cos(ΔE t)`; for the even symmetric
/// layout this is `(4 a²_2 a²_1 + 2 a⁴_1) cos(ΔE t)`.
pub fn leading_tower_term(weights: &[f64], delta_e: f64, i0: f64, times: &[f64]) -> Vec<f64> {
    let amp = 2.0 * weights.windows(2).map(|w| w[0] * w[1]).sum::<f64>();
    times.iter().map(|&t| i0 + amp * (delta_e * t).cos()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_pair() {
        let a1 = 0.3;
        let w = mirrored_tower_weights(&[a1], true);
        assert_eq!(w, vec![a1, a1]);
        let t = [0.0, 1.0, 2.5];
        let full = imbalance_from_towers(&w, 0.7, 0.1, &t);
        for (k, &tt) in t.iter().enumerate() {
            assert!((full[k] - 0.1 - 2.0 * a1 * a1 * (0.7 * tt).cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn leading_term_formula() {
        let (a1, a2) = (0.3, 0.1);
        let w = mirrored_tower_weights(&[a1, a2], true);
        assert_eq!(w, vec![a2, a1, a1, a2]);
        let lead = leading_tower_term(&w, 1.0, 0.0, &[0.0]);
        assert!((lead[0] - (4.0 * a2 * a1 + 2.0 * a1 * a1)).abs() < 1e-15);
        assert_eq!(mirrored_tower_weights(&[0.4, 0.2], false), vec![0.2, 0.4, 0.2]);
    }
}
