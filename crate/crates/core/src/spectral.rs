//! Dense diagonalization and spectral diagnostics.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use faer::prelude::*;
use faer::Side;
use rayon::prelude::*;

use crate::dynamics::{entropy_vn, reduced_density_matrix};
use crate::error::{Error, Result};
use crate::hamiltonian::SparseHamiltonian;
use crate::hilbert::BasisSector;
use crate::symmetry::{BlockLabel, SymmetryBasis, SymmetryGroup};
use crate::Complex64;

/// Largest sector handled by dense diagonalization.
pub const DENSE_BUDGET: usize = 70_000;

/// Spacings below this are treated as degenerate (rad/ns).
pub const DEGENERATE_SPACING: f64 = 1e-12;

/// Eigenvalue gaps below this are flagged as degeneracies (rad/ns).
pub const DEGENERACY_FLAG: f64 = 1e-10;

/// Default number of density-of-states bins.
pub const DOS_BINS: usize = 50;

/// Full spectrum of a sector, optionally resolved into symmetry blocks.
#[derive(Debug)]
pub struct Eigensystem {
    basis: SymmetryBasis,
    energies: Vec<f64>,
    /// `(block, index within block)` of every eigenstate in ascending order.
    origin: Vec<(usize, usize)>,
    block_energies: Vec<Vec<f64>>,
    block_vectors: Option<Vec<Mat<f64>>>,
}

/// Diagonalizes `h` on the whole sector without symmetry resolution.
pub fn diagonalize(h: &SparseHamiltonian, want_vectors: bool) -> Result<Eigensystem> {
    diagonalize_with(h, want_vectors, SymmetryGroup::NONE)
}

/// Diagonalizes `h` block by block. The caller is responsible for `group`
/// commuting with `h`; see [`SymmetryGroup::detect`].
pub fn diagonalize_with(h: &SparseHamiltonian, want_vectors: bool, group: SymmetryGroup) -> Result<Eigensystem> {
    let dim = h.dim();
    if dim > DENSE_BUDGET {
        return Err(Error::Capacity(format!(
            "dense diagonalization is limited to dimension {DENSE_BUDGET}, got {dim}"
        )));
    }
    let basis = SymmetryBasis::new(h.sector(), group)?;
    let mut block_energies = Vec::new();
    let mut block_vectors = Vec::new();
    for k in 0..basis.blocks().len() {
        let n = basis.blocks()[k].dim();
        if n == 0 {
            block_energies.push(Vec::new());
            block_vectors.push(Mat::zeros(0, 0));
            continue;
        }
        let m = {
            let dense = basis.block_matrix(h, k);
            Mat::<f64>::from_fn(n, n, |i, j| dense[i * n + j])
        };
        let fail = |e| Error::LinearAlgebra(format!("eigensolver failed on block {k}: {e:?}"));
        if want_vectors {
            let eig = m.self_adjoint_eigen(Side::Lower).map_err(fail)?;
            let s = eig.S().column_vector();
            block_energies.push((0..n).map(|i| s[i]).collect());
            block_vectors.push(eig.U().to_owned());
        } else {
            let mut e = m.self_adjoint_eigenvalues(Side::Lower).map_err(fail)?;
            e.sort_by(f64::total_cmp);
            block_energies.push(e);
        }
    }
    let mut origin: Vec<(usize, usize)> = block_energies
        .iter()
        .enumerate()
        .flat_map(|(b, e)| (0..e.len()).map(move |i| (b, i)))
        .collect();
    origin.sort_by(|x, y| {
        block_energies[x.0][x.1]
            .total_cmp(&block_energies[y.0][y.1])
            .then(x.cmp(y))
    });
    let energies = origin.iter().map(|&(b, i)| block_energies[b][i]).collect();
    Ok(Eigensystem {
        basis,
        energies,
        origin,
        block_energies,
        block_vectors: want_vectors.then_some(block_vectors),
    })
}

impl Eigensystem {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Ascending energies in rad/ns.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn sector(&self) -> &BasisSector {
        self.basis.sector()
    }

    pub fn symmetry(&self) -> &SymmetryBasis {
        &self.basis
    }

    pub fn has_vectors(&self) -> bool {
        self.block_vectors.is_some()
    }

    /// Symmetry label of eigenstate `n`.
    pub fn label(&self, n: usize) -> BlockLabel {
        self.basis.blocks()[self.origin[n].0].label
    }

    /// Block index and position within the block of eigenstate `n`.
    pub fn origin(&self, n: usize) -> (usize, usize) {
        self.origin[n]
    }

    /// Energies of each symmetry block, ascending.
    pub fn block_energies(&self) -> &[Vec<f64>] {
        &self.block_energies
    }

    fn vectors(&self) -> Result<&[Mat<f64>]> {
        self.block_vectors
            .as_deref()
            .ok_or_else(|| Error::State("eigenvectors were not computed".into()))
    }

    /// Eigenvector `n` in the sector basis.
    pub fn vector(&self, n: usize) -> Result<Vec<f64>> {
        let v = self.block_vector(n)?;
        Ok(self.basis.expand(self.origin[n].0, &v))
    }

    /// Eigenvector `n` in the basis of its symmetry block.
    pub fn block_vector(&self, n: usize) -> Result<Vec<f64>> {
        let (b, i) = self.origin[n];
        let col = self.vectors()?[b].col(i);
        Ok((0..col.nrows()).map(|k| col[k]).collect())
    }

    /// `⟨s|E_n⟩` for every `n`, where `s` is a sector index.
    pub fn amplitudes(&self, s: usize) -> Result<Vec<f64>> {
        let vecs = self.vectors()?;
        let per_block: Vec<Vec<f64>> = vecs
            .iter()
            .enumerate()
            .map(|(b, u)| {
                (0..u.ncols())
                    .map(|i| {
                        let col = u.col(i);
                        self.basis.amplitude_with(b, s, |p| col[p])
                    })
                    .collect()
            })
            .collect();
        Ok(self.origin.iter().map(|&(b, i)| per_block[b][i]).collect())
    }

    /// Number of adjacent eigenvalue pairs closer than [`DEGENERACY_FLAG`].
    pub fn degenerate_pairs(&self) -> usize {
        self.energies
            .windows(2)
            .filter(|w| w[1] - w[0] < DEGENERACY_FLAG)
            .count()
    }

    /// Largest `‖H v_n − E_n v_n‖` over all eigenstates.
    pub fn max_residual(&self, h: &SparseHamiltonian) -> Result<f64> {
        (0..self.len())
            .into_par_iter()
            .map(|n| {
                let v = self.vector(n)?;
                let hv = h.apply(&v)?;
                let e = self.energies[n];
                Ok(hv.iter().zip(&v).map(|(a, b)| (a - e * b).powi(2)).sum::<f64>().sqrt())
            })
            .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
    }
}

/// `|⟨α|E_n⟩|²` for basis state `bits`, indexed by eigenstate.
pub fn overlaps(eigsys: &Eigensystem, bits: u64) -> Result<Vec<f64>> {
    let s = eigsys.sector().rank(bits)?;
    Ok(eigsys.amplitudes(s)?.into_iter().map(|a| a * a).collect())
}

/// Gap-ratio statistics of a spectrum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapRatio {
    pub mean: f64,
    /// Ratios averaged.
    pub count: usize,
    /// Ratios dropped because a spacing was degenerate.
    pub excluded: usize,
}

/// Mean `r_n = min(s_n, s_{n+1}) / max(s_n, s_{n+1})` over the bulk of the
/// spectrum, after dropping `discard_fraction` of the levels at each edge.
pub fn mean_gap_ratio(energies: &[f64], discard_fraction: f64) -> Result<GapRatio> {
    let ratios = gap_ratios(energies, discard_fraction)?;
    let count = ratios.iter().filter(|r| r.is_some()).count();
    if count == 0 {
        return Err(Error::Domain("every spacing in the bulk is degenerate".into()));
    }
    let sum: f64 = ratios.iter().flatten().sum();
    Ok(GapRatio {
        mean: sum / count as f64,
        count,
        excluded: ratios.len() - count,
    })
}

fn gap_ratios(energies: &[f64], discard_fraction: f64) -> Result<Vec<Option<f64>>> {
    if !(0.0..0.5).contains(&discard_fraction) {
        return Err(Error::Domain(format!(
            "discard fraction {discard_fraction} must lie in [0, 0.5)"
        )));
    }
    let mut e = energies.to_vec();
    e.sort_by(f64::total_cmp);
    let cut = (discard_fraction * e.len() as f64).floor() as usize;
    let bulk = &e[cut..e.len() - cut];
    if bulk.len() < 100 {
        return Err(Error::Domain(format!(
            "gap ratio needs at least 100 bulk levels, got {}",
            bulk.len()
        )));
    }
    let s: Vec<f64> = bulk.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(s.windows(2)
        .map(|p| {
            if p[0] < DEGENERATE_SPACING || p[1] < DEGENERATE_SPACING {
                None
            } else {
                Some(p[0].min(p[1]) / p[0].max(p[1]))
            }
        })
        .collect())
}

/// Gap ratio evaluated inside each symmetry block and pooled over blocks.
pub fn sector_resolved_gap_ratio(eigsys: &Eigensystem, discard_fraction: f64) -> Result<GapRatio> {
    let (mut sum, mut count, mut excluded) = (0.0, 0, 0);
    for e in eigsys.block_energies() {
        let r = gap_ratios(e, discard_fraction)?;
        for x in &r {
            match x {
                Some(v) => {
                    sum += v;
                    count += 1;
                }
                None => excluded += 1,
            }
        }
    }
    if count == 0 {
        return Err(Error::Domain("every spacing in the bulk is degenerate".into()));
    }
    Ok(GapRatio {
        mean: sum / count as f64,
        count,
        excluded,
    })
}

/// Histogram of energies.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    /// `bins + 1` edges (rad/ns).
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

pub fn density_of_states(energies: &[f64], bins: usize) -> Result<Histogram> {
    if bins == 0 || energies.is_empty() {
        return Err(Error::Domain(
            "density of states needs energies and at least one bin".into(),
        ));
    }
    let lo = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let edges = (0..=bins).map(|k| lo + k as f64 * width).collect();
    let mut counts = vec![0; bins];
    for &e in energies {
        counts[(((e - lo) / width) as usize).min(bins - 1)] += 1;
    }
    Ok(Histogram { edges, counts })
}

/// Von Neumann entropy of `ρ_A` for every eigenstate, in eigenstate order.
pub fn eigenstate_entropies(eigsys: &Eigensystem, sites_a: &[usize]) -> Result<Vec<f64>> {
    let map = eigsys.sector().subsystem_map(sites_a)?;
    eigsys.vectors()?;
    (0..eigsys.len())
        .into_par_iter()
        .map(|n| {
            let v: Vec<Complex64> = eigsys.vector(n)?.into_iter().map(Complex64::from).collect();
            Ok(entropy_vn(&reduced_density_matrix(&v, &map)?))
        })
        .collect()
}

/// Tower selection parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TowerPolicy {
    /// Overlap threshold in units of the sector mean `1/dim`.
    pub threshold_factor: f64,
    /// Merge width in units of the tower spacing.
    pub merge_fraction: f64,
    /// Smallest number of towers that counts as a detection.
    pub min_towers: usize,
}

impl Default for TowerPolicy {
    fn default() -> Self {
        Self {
            threshold_factor: 4.0,
            merge_fraction: 0.25,
            min_towers: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tower {
    /// Overlap-weighted mean energy (rad/ns).
    pub energy: f64,
    /// Summed overlap.
    pub weight: f64,
    /// Eigenstate indices.
    pub members: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TowerReport {
    pub detected: bool,
    /// Every eigenstate above threshold, ascending in energy.
    pub selected: Vec<usize>,
    pub towers: Vec<Tower>,
    /// Mean adjacent tower spacing (rad/ns); NaN when fewer than two towers.
    pub delta_e: f64,
    /// Largest `|spacing − ΔE| / ΔE`.
    pub uniformity_residual: f64,
    pub threshold: f64,
    pub policy: TowerPolicy,
}

impl TowerReport {
    pub fn count(&self) -> usize {
        self.towers.len()
    }
}

fn weighted_mean(members: &[usize], overlaps: &[f64], energies: &[f64]) -> Tower {
    let weight: f64 = members.iter().map(|&n| overlaps[n]).sum();
    let energy = members.iter().map(|&n| overlaps[n] * energies[n]).sum::<f64>() / weight;
    Tower {
        energy,
        weight,
        members: members.to_vec(),
    }
}

/// Spacing maximizing the weighted comb periodogram `|Σ w_n exp(2πi E_n/Δ)|`
/// over `Δ ∈ [range/200, range/2]`, promoted to its largest integer multiple
/// scoring at least 80% of the peak, together with the comb offset.
fn comb_estimate(selected: &[usize], overlaps: &[f64], energies: &[f64]) -> (f64, f64) {
    const GRID: usize = 20_000;
    let lo = energies[selected[0]];
    let range = energies[*selected.last().unwrap()] - lo;
    let phasor = |d: f64| -> Complex64 {
        selected
            .iter()
            .map(|&n| Complex64::from_polar(overlaps[n], TAU * (energies[n] - lo) / d))
            .sum()
    };
    let (a, b) = (range / 200.0, range / 2.0);
    let best = (0..GRID)
        .into_par_iter()
        .map(|k| {
            let d = a + (b - a) * k as f64 / (GRID - 1) as f64;
            (phasor(d).norm(), d)
        })
        .reduce(|| (-1.0, a), |x, y| if y.0 > x.0 { y } else { x });
    // a comb of spacing Δ also scores at Δ/m; keep the largest multiple that holds up
    let mut d = best.1;
    for m in (2..=(b / best.1).floor() as usize).rev() {
        if phasor(m as f64 * best.1).norm() >= 0.8 * best.0 {
            d = m as f64 * best.1;
            break;
        }
    }
    let best = d;
    let offset = lo + phasor(best).arg() / TAU * best;
    (best, offset)
}

/// Groups high-overlap eigenstates into evenly spaced towers.
///
/// States with overlap above `threshold_factor / dim` are fitted to a comb
/// `E_0 + kΔ`: the spacing starts at the peak of the weighted periodogram of
/// their energies, every state within `merge_fraction · Δ` of a tooth joins
/// that tower, and `E_0`, `Δ` are refitted by weighted least squares on the
/// tower centers until the assignment is stable. States between teeth stay
/// selected but belong to no tower.
pub fn detect_towers(overlaps: &[f64], energies: &[f64], policy: TowerPolicy) -> Result<TowerReport> {
    if overlaps.len() != energies.len() || overlaps.is_empty() {
        return Err(Error::Domain(
            "overlaps and energies must be non-empty and of equal length".into(),
        ));
    }
    let threshold = policy.threshold_factor / overlaps.len() as f64;
    let mut selected: Vec<usize> = (0..overlaps.len()).filter(|&n| overlaps[n] > threshold).collect();
    selected.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]));
    let mut report = TowerReport {
        detected: false,
        selected: selected.clone(),
        towers: Vec::new(),
        delta_e: f64::NAN,
        uniformity_residual: f64::NAN,
        threshold,
        policy,
    };
    if selected.is_empty() {
        return Ok(report);
    }
    let range = energies[*selected.last().unwrap()] - energies[selected[0]];
    if selected.len() < 2 || range <= DEGENERATE_SPACING {
        report.towers = vec![weighted_mean(&selected, overlaps, energies)];
        return Ok(report);
    }
    let (mut delta, mut origin) = comb_estimate(&selected, overlaps, energies);
    let mut teeth: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for _ in 0..50 {
        let mut next: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for &n in &selected {
            let x = (energies[n] - origin) / delta;
            let k = x.round();
            if (x - k).abs() <= policy.merge_fraction {
                next.entry(k as i64).or_default().push(n);
            }
        }
        let stable = next == teeth;
        teeth = next;
        if stable || teeth.len() < 2 {
            break;
        }
        // weighted least squares of tower centers against tooth index
        let fit: Vec<(f64, f64, f64)> = teeth
            .iter()
            .map(|(&k, m)| {
                let t = weighted_mean(m, overlaps, energies);
                (k as f64, t.energy, t.weight)
            })
            .collect();
        let sw: f64 = fit.iter().map(|f| f.2).sum();
        let mk = fit.iter().map(|f| f.2 * f.0).sum::<f64>() / sw;
        let me = fit.iter().map(|f| f.2 * f.1).sum::<f64>() / sw;
        let skk: f64 = fit.iter().map(|f| f.2 * (f.0 - mk).powi(2)).sum();
        let ske: f64 = fit.iter().map(|f| f.2 * (f.0 - mk) * (f.1 - me)).sum();
        delta = ske / skk;
        origin = me - delta * mk;
    }
    let keys: Vec<i64> = teeth.keys().copied().collect();
    let towers: Vec<Tower> = teeth.values().map(|m| weighted_mean(m, overlaps, energies)).collect();
    if towers.len() >= 2 {
        let span = (keys[keys.len() - 1] - keys[0]) as f64;
        let delta_e = (towers[towers.len() - 1].energy - towers[0].energy) / span;
        report.uniformity_residual = towers
            .windows(2)
            .zip(keys.windows(2))
            .map(|(t, k)| ((t[1].energy - t[0].energy) / (k[1] - k[0]) as f64 - delta_e).abs() / delta_e)
            .fold(0.0, f64::max);
        report.delta_e = delta_e;
    }
    report.detected = towers.len() >= policy.min_towers;
    report.towers = towers;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::StorageMode;
    use crate::model::{Boundary, CouplingGraph, OnsitePattern};
    use crate::{angular, states};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn chain(l: usize, cross: bool) -> (CouplingGraph, BasisSector, SparseHamiltonian) {
        let mut g = CouplingGraph::chain(l, Boundary::Open, -9.0, -6.0).unwrap();
        if cross {
            g.add_cross_couplings(0.3, 1.2, 11).unwrap();
        }
        let s = BasisSector::new(l, l / 2).unwrap();
        let h = SparseHamiltonian::assemble(&g, &s, StorageMode::Auto).unwrap();
        (g, s, h)
    }

    #[test]
    fn dimer_closed_form() {
        let mut g = CouplingGraph::chain(2, Boundary::Open, -9.0, 0.0).unwrap();
        g.set_onsite(&OnsitePattern::Uniform(5.0)).unwrap();
        let s = BasisSector::new(2, 1).unwrap();
        let h = SparseHamiltonian::assemble(&g, &s, StorageMode::Auto).unwrap();
        let e = diagonalize(&h, true).unwrap();
        let (w0, wa) = (angular(5.0), angular(9.0));
        assert!((e.energies()[0] - (w0 - wa)).abs() < 1e-14);
        assert!((e.energies()[1] - (w0 + wa)).abs() < 1e-14);
    }

    #[test]
    fn four_site_spectrum_against_nalgebra() {
        let (_, s, h) = chain(4, false);
        let mut m = nalgebra::DMatrix::<f64>::zeros(6, 6);
        for u in 0..6 {
            h.for_each_in_row(u, |v, x| m[(u, v)] += x);
        }
        let mut oracle: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        oracle.sort_by(f64::total_cmp);
        let e = diagonalize(&h, false).unwrap();
        for (a, b) in e.energies().iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
        // zero on-site terms: spectrum symmetric about trace/6 = 0
        for k in 0..3 {
            assert!((e.energies()[k] + e.energies()[5 - k]).abs() < 1e-12);
        }
        assert_eq!(s.dim(), 6);
    }

    #[test]
    fn symmetry_blocks_reproduce_full_spectrum() {
        let (g, s, h) = chain(10, false);
        let full = diagonalize(&h, true).unwrap();
        let group = SymmetryGroup::detect(&g, &s);
        assert!(group.reflection && group.flip);
        let blocks = diagonalize_with(&h, true, group).unwrap();
        for (a, b) in full.energies().iter().zip(blocks.energies()) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(blocks.max_residual(&h).unwrap() < 1e-10);
        // block eigenvectors are orthonormal in the sector basis
        let vs: Vec<Vec<f64>> = (0..blocks.len())
            .step_by(17)
            .map(|n| blocks.vector(n).unwrap())
            .collect();
        for i in 0..vs.len() {
            for j in 0..vs.len() {
                let d: f64 = vs[i].iter().zip(&vs[j]).map(|(a, b)| a * b).sum();
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn overlaps_reconstruct_energy() {
        let (g, s, h) = chain(10, true);
        let e = diagonalize_with(&h, true, SymmetryGroup::detect(&g, &s)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let bits = s.state(rng.random_range(0..s.dim()));
            let o = overlaps(&e, bits).unwrap();
            assert!((o.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            assert!(o.iter().all(|&x| x >= 0.0));
            let recon: f64 = o.iter().zip(e.energies()).map(|(a, b)| a * b).sum();
            assert!((recon - h.matrix_element(bits, bits)).abs() < 1e-10);
        }
    }

    #[test]
    fn diagonal_hamiltonian_gives_indicator_overlaps() {
        let mut g = CouplingGraph::empty(6);
        g.set_onsite(&OnsitePattern::Explicit(vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0]))
            .unwrap();
        let s = BasisSector::new(6, 3).unwrap();
        let h = SparseHamiltonian::assemble(&g, &s, StorageMode::Auto).unwrap();
        let e = diagonalize(&h, true).unwrap();
        let o = overlaps(&e, 0b101010).unwrap();
        assert_eq!(o.iter().filter(|&&x| (x - 1.0).abs() < 1e-12).count(), 1);
        assert!((o.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn poisson_gap_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut e = vec![0.0];
        for _ in 0..200_000 {
            let x: f64 = rng.random();
            e.push(e.last().unwrap() - (1.0 - x).ln());
        }
        let r = mean_gap_ratio(&e, 0.1).unwrap();
        assert!((r.mean - (2.0 * 2f64.ln() - 1.0)).abs() < 0.005, "{}", r.mean);
        assert!(mean_gap_ratio(&e[..50], 0.1).is_err());
    }

    #[test]
    fn degenerate_spacings_are_excluded() {
        let mut e: Vec<f64> = (0..300).map(|k| k as f64 * 0.01).collect();
        e.push(1.0);
        let r = mean_gap_ratio(&e, 0.0).unwrap();
        assert_eq!(r.excluded, 2);
    }

    #[test]
    fn dos_counts_every_level() {
        let e: Vec<f64> = (0..1000).map(|k| (k as f64).sin()).collect();
        let hgram = density_of_states(&e, DOS_BINS).unwrap();
        assert_eq!(hgram.counts.iter().sum::<usize>(), 1000);
        assert_eq!(hgram.edges.len(), DOS_BINS + 1);
    }

    #[test]
    fn product_eigenstates_have_zero_entropy() {
        let mut g = CouplingGraph::empty(6);
        g.set_onsite(&OnsitePattern::Explicit(vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0]))
            .unwrap();
        let s = BasisSector::new(6, 3).unwrap();
        let h = SparseHamiltonian::assemble(&g, &s, StorageMode::Auto).unwrap();
        let e = diagonalize(&h, true).unwrap();
        let ent = eigenstate_entropies(&e, &[0, 1, 2]).unwrap();
        assert!(ent.iter().all(|&x| x.abs() < 1e-12));
    }

    #[test]
    fn free_dimers_towers() {
        // decoupled dimers: towers are the free multiplets spaced by 2|ω_a|
        let g = CouplingGraph::chain(12, Boundary::Open, -9.0, 0.0).unwrap();
        let s = BasisSector::new(12, 6).unwrap();
        let h = SparseHamiltonian::assemble(&g, &s, StorageMode::Auto).unwrap();
        let e = diagonalize(&h, true).unwrap();
        let o = overlaps(&e, states::pi_state(12).unwrap()).unwrap();
        let r = detect_towers(&o, e.energies(), TowerPolicy::default()).unwrap();
        assert!(r.detected);
        assert!((r.delta_e - 2.0 * angular(9.0)).abs() < 1e-10);
        assert!(r.uniformity_residual < 1e-10);
    }

    #[test]
    fn satellites_between_teeth_are_ignored() {
        // five teeth at 3 + 2k with split members, plus off-comb satellites
        let mut e = Vec::new();
        let mut o = Vec::new();
        for k in -2..=2 {
            let c = 3.0 + 2.0 * k as f64;
            e.extend([c - 0.037, c + 0.061]);
            o.extend([0.1, 0.1]);
        }
        e.extend([4.13, 6.02, -1.87]);
        o.extend([0.03, 0.03, 0.03]);
        e.extend((0..200).map(|k| -8.0 + 0.08 * k as f64));
        o.extend(std::iter::repeat_n(1e-5, 200));
        let r = detect_towers(&o, &e, TowerPolicy::default()).unwrap();
        assert!(r.detected);
        assert_eq!(r.count(), 5);
        assert!((r.delta_e - 2.0).abs() < 1e-12, "{}", r.delta_e);
        assert_eq!(r.selected.len(), 13);
        assert!(r.towers.iter().all(|t| t.members.len() == 2));
    }

    #[test]
    fn too_few_towers_is_reported_not_raised() {
        let o = vec![1.0, 0.0, 0.0];
        let r = detect_towers(&o, &[0.0, 1.0, 2.0], TowerPolicy::default()).unwrap();
        assert!(!r.detected);
    }

    #[test]
    fn values_only_has_no_vectors() {
        let (_, _, h) = chain(6, false);
        let e = diagonalize(&h, false).unwrap();
        assert!(!e.has_vectors());
        assert!(matches!(e.vector(0), Err(Error::State(_))));
    }
}
