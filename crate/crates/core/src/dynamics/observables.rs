//! Observables of a single sector state.

use faer::prelude::*;
use faer::Side;

use crate::error::{Error, Result};
use crate::hilbert::{BasisSector, SubsystemMap};
use crate::Complex64;

/// Eigenvalues of `ρ` below this are dropped from the entropy.
pub const ENTROPY_CUTOFF: f64 = 1e-14;

/// `⟨n_i⟩` for every site.
pub fn populations(psi: &[Complex64], sector: &BasisSector) -> Vec<f64> {
    let mut n = vec![0.0; sector.sites()];
    for (amp, mut bits) in psi.iter().zip(sector.iter()) {
        let p = amp.norm_sqr();
        if p == 0.0 {
            continue;
        }
        while bits != 0 {
            n[bits.trailing_zeros() as usize] += p;
            bits &= bits - 1;
        }
    }
    n
}

/// `(1/L) Σ_i z_i(0) (2 n_i − 1)` for an initial basis state `initial`.
pub fn imbalance_of(populations: &[f64], initial: u64) -> f64 {
    let l = populations.len();
    populations
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            if initial >> i & 1 == 1 {
                2.0 * n - 1.0
            } else {
                1.0 - 2.0 * n
            }
        })
        .sum::<f64>()
        / l as f64
}

/// The basis word of `psi` when it is a single computational state.
pub fn as_basis_state(psi: &[Complex64], sector: &BasisSector) -> Result<u64> {
    let mut found = None;
    for (k, a) in psi.iter().enumerate() {
        if a.norm_sqr() > 1e-24 {
            if found.is_some() {
                return Err(Error::Domain("initial state is not a computational basis state".into()));
            }
            found = Some(k);
        }
    }
    match found {
        Some(k) if (psi[k].norm_sqr() - 1.0).abs() < 1e-12 => Ok(sector.state(k)),
        _ => Err(Error::Domain("initial state is not a computational basis state".into())),
    }
}

/// One photon-number block of a reduced density matrix.
#[derive(Clone, Debug)]
pub struct DensityBlock {
    /// Photons inside `A`.
    pub photons: usize,
    /// Local configurations of `A` labelling rows and columns.
    pub configs: Vec<usize>,
    pub matrix: Mat<Complex64>,
}

/// Reduced density matrix stored as its photon-number blocks.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    sites: Vec<usize>,
    blocks: Vec<DensityBlock>,
}

impl DensityMatrix {
    /// Builds from explicit blocks; `configs` of different blocks must be disjoint.
    pub fn from_blocks(sites: Vec<usize>, blocks: Vec<DensityBlock>) -> Self {
        Self { sites, blocks }
    }

    /// `ρ = I / 2^|A|`.
    pub fn maximally_mixed(sites: Vec<usize>) -> Self {
        let a = sites.len();
        let blocks = (0..=a)
            .map(|k| {
                let configs: Vec<usize> = (0..1usize << a).filter(|c| c.count_ones() as usize == k).collect();
                let n = configs.len();
                let w = 1.0 / (1u64 << a) as f64;
                DensityBlock {
                    photons: k,
                    configs,
                    matrix: Mat::from_fn(n, n, |i, j| Complex64::new(if i == j { w } else { 0.0 }, 0.0)),
                }
            })
            .collect();
        Self { sites, blocks }
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn blocks(&self) -> &[DensityBlock] {
        &self.blocks
    }

    pub fn local_dim(&self) -> usize {
        1 << self.sites.len()
    }

    /// `⟨a|ρ|b⟩` for local configurations `a`, `b`.
    pub fn element(&self, a: usize, b: usize) -> Complex64 {
        for blk in &self.blocks {
            if let (Some(i), Some(j)) = (
                blk.configs.iter().position(|&c| c == a),
                blk.configs.iter().position(|&c| c == b),
            ) {
                return blk.matrix[(i, j)];
            }
        }
        Complex64::default()
    }

    /// Full `2^|A| × 2^|A|` matrix.
    pub fn to_dense(&self) -> Mat<Complex64> {
        let d = self.local_dim();
        let mut m = Mat::<Complex64>::zeros(d, d);
        for blk in &self.blocks {
            for (i, &a) in blk.configs.iter().enumerate() {
                for (j, &b) in blk.configs.iter().enumerate() {
                    m[(a, b)] = blk.matrix[(i, j)];
                }
            }
        }
        m
    }

    pub fn trace(&self) -> Complex64 {
        self.blocks
            .iter()
            .map(|b| (0..b.configs.len()).map(|i| b.matrix[(i, i)]).sum::<Complex64>())
            .sum()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let n = b.configs.len();
                (0..n)
                    .flat_map(|i| (0..n).map(move |j| (i, j)))
                    .map(|(i, j)| b.matrix[(i, j)].norm_sqr())
                    .sum::<f64>()
            })
            .sum()
    }

    /// Largest `|ρ_ab − conj(ρ_ba)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut e: f64 = 0.0;
        for b in &self.blocks {
            let n = b.configs.len();
            for i in 0..n {
                for j in 0..n {
                    e = e.max((b.matrix[(i, j)] - b.matrix[(j, i)].conj()).norm());
                }
            }
        }
        e
    }

    /// Eigenvalues of every block, concatenated.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.blocks
            .iter()
            .filter(|b| !b.configs.is_empty())
            .flat_map(|b| {
                b.matrix
                    .self_adjoint_eigenvalues(Side::Lower)
                    .expect("eigensolver on a small Hermitian block")
            })
            .collect()
    }
}

/// `ρ_A = Tr_B |ψ⟩⟨ψ|`, assembled block by block from the Schmidt matrices.
pub fn reduced_density_matrix(psi: &[Complex64], map: &SubsystemMap) -> Result<DensityMatrix> {
    if psi.len() != map.len() {
        return Err(Error::Domain(format!(
            "state length {} does not match the subsystem map ({})",
            psi.len(),
            map.len()
        )));
    }
    let a = map.sites_a().len();
    let mut position = vec![0usize; 1 << a];
    let mut configs: Vec<Vec<usize>> = vec![Vec::new(); a + 1];
    for (c, p) in position.iter_mut().enumerate() {
        let k = c.count_ones() as usize;
        *p = configs[k].len();
        configs[k].push(c);
    }
    let mut schmidt: Vec<Mat<Complex64>> = (0..=a)
        .map(|k| Mat::zeros(configs[k].len(), map.complement_class_size(k)))
        .collect();
    for (idx, &amp) in psi.iter().enumerate() {
        let (ca, b) = map.split(idx);
        schmidt[ca.count_ones() as usize][(position[ca], b)] = amp;
    }
    let blocks = schmidt
        .into_iter()
        .zip(configs)
        .enumerate()
        .filter(|(_, (m, _))| m.ncols() > 0 && m.nrows() > 0)
        .map(|(k, (m, configs))| DensityBlock {
            photons: k,
            configs,
            matrix: &m * m.adjoint(),
        })
        .collect();
    Ok(DensityMatrix {
        sites: map.sites_a().to_vec(),
        blocks,
    })
}

/// `−Tr ρ ln ρ`, dropping eigenvalues below [`ENTROPY_CUTOFF`].
pub fn entropy_vn(rho: &DensityMatrix) -> f64 {
    rho.eigenvalues()
        .into_iter()
        .filter(|&l| l > ENTROPY_CUTOFF)
        .map(|l| -l * l.ln())
        .sum::<f64>()
        .max(0.0)
}

/// `⟨φ_A|ρ_A|φ_A⟩` for the product configuration `phi_local` of `A`
/// (bit `k` is the occupation of the `k`-th subsystem site).
pub fn subsystem_fidelity(rho: &DensityMatrix, phi_local: usize) -> f64 {
    rho.element(phi_local, phi_local).re
}
