//! Quench dynamics from product states and time-dependent observables.
//!
//! Times are in ns and `H` in rad/ns, so `ψ(t) = exp(−iHt) ψ(0)` directly.

mod krylov;
mod observables;

pub use krylov::{evolve_krylov_visit, KrylovOptions, KrylovStats};
pub use observables::{
    as_basis_state, entropy_vn, imbalance_of, populations, reduced_density_matrix, subsystem_fidelity, DensityBlock,
    DensityMatrix, ENTROPY_CUTOFF,
};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonian::SparseHamiltonian;
use crate::hilbert::{gather_bits, BasisSector, SubsystemMap};
use crate::spectral::{diagonalize_with, Eigensystem};
use crate::symmetry::SymmetryGroup;
use crate::Complex64;

/// Largest sector evolved by full diagonalization.
pub const DENSE_EVOLUTION_BUDGET: usize = 20_000;

/// Uniform grid `0, dt, …, t_max`.
pub fn time_grid(t_max: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !(t_max >= 0.0) {
        return Err(Error::Domain(format!("invalid grid t_max={t_max}, dt={dt}")));
    }
    let n = (t_max / dt + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| k as f64 * dt).collect())
}

/// Sector vector of a single basis word.
pub fn basis_vector(sector: &BasisSector, bits: u64) -> Result<Vec<Complex64>> {
    let mut v = vec![Complex64::default(); sector.dim()];
    v[sector.rank(bits)?] = Complex64::new(1.0, 0.0);
    Ok(v)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    Krylov { options: KrylovOptions, stats: KrylovStats },
    Dense,
}

/// States `ψ(t_k)` on a time grid.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<Complex64>>,
    pub psi0: Vec<Complex64>,
    pub sector: BasisSector,
    pub method: Method,
}

/// Krylov propagation retaining every sample.
pub fn evolve_krylov(
    h: &SparseHamiltonian,
    psi0: &[Complex64],
    times: &[f64],
    options: KrylovOptions,
) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(times.len());
    let stats = evolve_krylov_visit(h, psi0, times, options, |_, psi| {
        states.push(psi.to_vec());
        Ok(())
    })?;
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        psi0: psi0.to_vec(),
        sector: h.sector().clone(),
        method: Method::Krylov { options, stats },
    })
}

/// Exact propagation through a full eigen-decomposition of `h`.
pub fn evolve_dense(h: &SparseHamiltonian, psi0: &[Complex64], times: &[f64]) -> Result<Trajectory> {
    if h.dim() > DENSE_EVOLUTION_BUDGET {
        return Err(Error::Capacity(format!(
            "dense evolution is limited to dimension {DENSE_EVOLUTION_BUDGET}, got {}",
            h.dim()
        )));
    }
    krylov::check_grid(h, psi0, times)?;
    let eig = diagonalize_with(h, true, SymmetryGroup::NONE)?;
    evolve_spectral(&eig, psi0, times)
}

/// `ψ(t) = Σ_n e^{−iE_n t} ⟨E_n|ψ0⟩ |E_n⟩` from an eigensystem with vectors.
pub fn evolve_spectral(eig: &Eigensystem, psi0: &[Complex64], times: &[f64]) -> Result<Trajectory> {
    if !eig.has_vectors() {
        return Err(Error::State("spectral evolution needs eigenvectors".into()));
    }
    if psi0.len() != eig.sector().dim() {
        return Err(Error::Domain(
            "initial state does not match the eigensystem sector".into(),
        ));
    }
    let basis = eig.symmetry();
    let nblocks = basis.blocks().len();
    let mut vecs: Vec<Vec<Vec<f64>>> = vec![Vec::new(); nblocks];
    let mut energies: Vec<Vec<f64>> = vec![Vec::new(); nblocks];
    for n in 0..eig.len() {
        let (b, _) = eig.origin(n);
        let local = eig.block_vector(n)?;
        vecs[b].push(local);
        energies[b].push(eig.energies()[n]);
    }
    let coeffs: Vec<Vec<Complex64>> = (0..nblocks)
        .map(|b| {
            let p = basis.project(b, psi0);
            vecs[b]
                .iter()
                .map(|v| v.iter().zip(&p).map(|(a, x)| x * *a).sum())
                .collect()
        })
        .collect();
    let states = times
        .par_iter()
        .map(|&t| {
            if t == 0.0 {
                return psi0.to_vec();
            }
            let mut out = vec![Complex64::default(); psi0.len()];
            for b in 0..nblocks {
                let n = basis.blocks()[b].dim();
                let mut local = vec![Complex64::default(); n];
                for ((v, &c), &e) in vecs[b].iter().zip(&coeffs[b]).zip(&energies[b]) {
                    let a = c * Complex64::from_polar(1.0, -e * t);
                    local.iter_mut().zip(v).for_each(|(l, &x)| *l += a * x);
                }
                basis.expand_add(b, &local, &mut out);
            }
            out
        })
        .collect();
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        psi0: psi0.to_vec(),
        sector: eig.sector().clone(),
        method: Method::Dense,
    })
}

/// `n_i(t)` for every retained time.
pub fn site_populations(traj: &Trajectory) -> Vec<Vec<f64>> {
    traj.states.par_iter().map(|s| populations(s, &traj.sector)).collect()
}

/// Generalized imbalance; the initial state must be a basis state.
pub fn imbalance(traj: &Trajectory) -> Result<Vec<f64>> {
    let initial = as_basis_state(&traj.psi0, &traj.sector)?;
    Ok(site_populations(traj)
        .iter()
        .map(|n| imbalance_of(n, initial))
        .collect())
}

/// `|⟨ψ(0)|ψ(t)⟩|²`.
pub fn global_fidelity(traj: &Trajectory) -> Vec<f64> {
    traj.states
        .par_iter()
        .map(|s| overlap(&traj.psi0, s).norm_sqr())
        .collect()
}

fn overlap(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Norm and energy conservation along a trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariantReport {
    pub max_norm_deviation: f64,
    /// Largest `|⟨H⟩(t) − ⟨H⟩(0)|` relative to `max(|⟨H⟩(0)|, ΔH)`, where
    /// `ΔH` is the energy spread of the initial state.
    pub energy_drift: f64,
}

pub fn check_invariants(traj: &Trajectory, h: &SparseHamiltonian) -> Result<InvariantReport> {
    let e0 = h.expectation(&traj.psi0)?.re;
    let h2: f64 = h.apply(&traj.psi0)?.iter().map(|x| x.norm_sqr()).sum();
    let spread = (h2 - e0 * e0).max(0.0).sqrt();
    let scale = e0.abs().max(spread).max(1e-300);
    let mut max_norm_deviation: f64 = 0.0;
    let mut energy_drift: f64 = 0.0;
    for s in &traj.states {
        let n = s.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        max_norm_deviation = max_norm_deviation.max((n - 1.0).abs());
        energy_drift = energy_drift.max((h.expectation(s)?.re - e0).abs() / scale);
    }
    Ok(InvariantReport {
        max_norm_deviation,
        energy_drift,
    })
}

/// Observables recorded along a run without keeping the states.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ObservableSeries {
    pub times: Vec<f64>,
    pub imbalance: Vec<f64>,
    pub fidelity: Vec<f64>,
    /// Subsystem fidelity; empty without a subsystem.
    pub subsystem_fidelity: Vec<f64>,
    /// Subsystem entropy; empty without a subsystem.
    pub subsystem_entropy: Vec<f64>,
    pub populations: Vec<Vec<f64>>,
    pub stats: KrylovStats,
}

/// Which observables [`observe`] records.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ObservableSet {
    pub populations: bool,
    pub subsystem: bool,
}

impl ObservableSet {
    pub const ALL: Self = Self {
        populations: true,
        subsystem: true,
    };
    /// Imbalance and fidelity only.
    pub const GLOBAL: Self = Self {
        populations: false,
        subsystem: false,
    };
}

/// Evolves the basis state `initial` with Krylov steps and records the
/// imbalance, fidelity and, when `subsystem` is given and requested, the
/// subsystem fidelity and entropy.
pub fn observe(
    h: &SparseHamiltonian,
    initial: u64,
    times: &[f64],
    options: KrylovOptions,
    subsystem: Option<&SubsystemMap>,
    set: ObservableSet,
) -> Result<ObservableSeries> {
    let sector = h.sector();
    let psi0 = basis_vector(sector, initial)?;
    let i0 = sector.rank(initial)?;
    let phi_local = subsystem.map(|m| gather_bits(initial, m.sites_a()) as usize);
    let mut series = ObservableSeries {
        times: times.to_vec(),
        ..Default::default()
    };
    let stats = evolve_krylov_visit(h, &psi0, times, options, |_, psi| {
        let n = populations(psi, sector);
        series.imbalance.push(imbalance_of(&n, initial));
        series.fidelity.push(psi[i0].norm_sqr());
        if let (Some(map), Some(phi), true) = (subsystem, phi_local, set.subsystem) {
            let rho = reduced_density_matrix(psi, map)?;
            series.subsystem_fidelity.push(subsystem_fidelity(&rho, phi));
            series.subsystem_entropy.push(entropy_vn(&rho));
        }
        if set.populations {
            series.populations.push(n);
        }
        Ok(())
    })?;
    series.stats = stats;
    Ok(series)
}
