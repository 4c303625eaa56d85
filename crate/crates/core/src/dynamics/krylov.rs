//! Lanczos propagation of `exp(-iHt) ψ`.

use faer::prelude::*;
use faer::Side;

use crate::error::{Error, Result};
use crate::hamiltonian::SparseHamiltonian;
use crate::Complex64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovOptions {
    /// Local error bound per propagation step.
    pub tol: f64,
    /// Largest Krylov subspace.
    pub max_dim: usize,
    /// Step halvings allowed before giving up.
    pub max_halvings: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_dim: 30,
            max_halvings: 60,
        }
    }
}

/// Work done by one propagation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KrylovStats {
    pub bases: usize,
    pub matvecs: usize,
    pub halvings: usize,
    /// Largest error estimate accepted.
    pub max_error: f64,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// An orthonormal Krylov basis with the eigen-decomposition of its
/// tridiagonal projection.
struct Subspace {
    vectors: Vec<Vec<Complex64>>,
    theta: Vec<f64>,
    /// Row-major eigenvectors of the tridiagonal matrix.
    s: Vec<f64>,
    /// Norm of the starting vector.
    beta0: f64,
    /// Coupling to the next, unbuilt basis vector; zero on breakdown.
    beta_next: f64,
}

impl Subspace {
    fn build(h: &SparseHamiltonian, psi: &[Complex64], max_dim: usize, stats: &mut KrylovStats) -> Result<Self> {
        let beta0 = norm(psi);
        let mut vectors = vec![psi.iter().map(|x| x / beta0).collect::<Vec<_>>()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut w = vec![Complex64::default(); psi.len()];
        let mut beta_next = 0.0;
        let scale_floor = 1e-13;
        for j in 0..max_dim {
            h.apply_into(&vectors[j], &mut w)?;
            stats.matvecs += 1;
            let a = dot(&vectors[j], &w).re;
            alpha.push(a);
            // two passes of classical Gram-Schmidt against the whole basis
            for _ in 0..2 {
                for v in &vectors {
                    let c = dot(v, &w);
                    w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
                }
            }
            let b = norm(&w);
            let scale = a.abs() + beta.last().copied().unwrap_or(0.0);
            if b <= scale_floor * scale.max(1e-300) || j + 1 == psi.len() {
                beta_next = 0.0;
                break;
            }
            if j + 1 == max_dim {
                beta_next = b;
                break;
            }
            beta.push(b);
            vectors.push(w.iter().map(|x| x / b).collect());
        }
        let m = alpha.len();
        vectors.truncate(m);
        let t = Mat::<f64>::from_fn(m, m, |i, k| {
            if i == k {
                alpha[i]
            } else if i == k + 1 {
                beta[k]
            } else if k == i + 1 {
                beta[i]
            } else {
                0.0
            }
        });
        let eig = t
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::LinearAlgebra(format!("tridiagonal eigensolver failed: {e:?}")))?;
        let theta_col = eig.S().column_vector();
        let theta = (0..m).map(|i| theta_col[i]).collect();
        let u = eig.U();
        let s = (0..m * m).map(|k| u[(k / m, k % m)]).collect();
        stats.bases += 1;
        Ok(Self {
            vectors,
            theta,
            s,
            beta0,
            beta_next,
        })
    }

    fn dim(&self) -> usize {
        self.theta.len()
    }

    /// Coefficients `β0 · exp(-iTτ) e1` and the error estimate.
    fn coefficients(&self, tau: f64) -> (Vec<Complex64>, f64) {
        let m = self.dim();
        let phases: Vec<Complex64> = (0..m)
            .map(|k| Complex64::from_polar(self.s[k] * self.beta0, -self.theta[k] * tau))
            .collect();
        let y: Vec<Complex64> = (0..m)
            .map(|i| (0..m).map(|k| phases[k] * self.s[i * m + k]).sum())
            .collect();
        let err = self.beta_next * y[m - 1].norm();
        (y, err)
    }

    fn combine(&self, y: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|x| *x = Complex64::default());
        for (v, c) in self.vectors.iter().zip(y) {
            out.iter_mut().zip(v).for_each(|(o, x)| *o += c * x);
        }
    }
}

/// Propagates `psi0` and calls `visit(k, ψ(times[k]))` for every sample in order.
///
/// Each Krylov basis is reused for as many consecutive samples as its error
/// estimate `β_m |y_m(τ)|` allows; when not even the next sample is reachable,
/// the step is halved until it is, and propagation restarts from there.
pub fn evolve_krylov_visit(
    h: &SparseHamiltonian,
    psi0: &[Complex64],
    times: &[f64],
    opts: KrylovOptions,
    mut visit: impl FnMut(usize, &[Complex64]) -> Result<()>,
) -> Result<KrylovStats> {
    check_grid(h, psi0, times)?;
    if opts.max_dim < 2 || !(opts.tol > 0.0) {
        return Err(Error::Domain(
            "Krylov options need max_dim ≥ 2 and a positive tolerance".into(),
        ));
    }
    let mut stats = KrylovStats::default();
    let mut psi = psi0.to_vec();
    let mut t_cur = 0.0;
    let mut k = 0;
    let mut out = vec![Complex64::default(); psi.len()];
    while k < times.len() {
        if times[k] == t_cur {
            visit(k, &psi)?;
            k += 1;
            continue;
        }
        let sub = Subspace::build(h, &psi, opts.max_dim, &mut stats)?;
        let mut last = None;
        while k < times.len() {
            let tau = times[k] - t_cur;
            let (y, err) = sub.coefficients(tau);
            if err > opts.tol {
                break;
            }
            stats.max_error = stats.max_error.max(err);
            sub.combine(&y, &mut out);
            visit(k, &out)?;
            last = Some(times[k]);
            k += 1;
        }
        match last {
            Some(t) => {
                std::mem::swap(&mut psi, &mut out);
                t_cur = t;
            }
            None => {
                let mut tau = times[k] - t_cur;
                let mut accepted = None;
                for _ in 0..opts.max_halvings {
                    tau *= 0.5;
                    stats.halvings += 1;
                    let (y, err) = sub.coefficients(tau);
                    if err <= opts.tol {
                        stats.max_error = stats.max_error.max(err);
                        accepted = Some((tau, y));
                        break;
                    }
                }
                let Some((tau, y)) = accepted else {
                    return Err(Error::Integration {
                        time_ns: t_cur,
                        reason: format!(
                            "no step met tolerance {:e} with a {}-dimensional subspace after {} halvings",
                            opts.tol,
                            sub.dim(),
                            opts.max_halvings
                        ),
                    });
                };
                sub.combine(&y, &mut psi);
                t_cur += tau;
            }
        }
    }
    Ok(stats)
}

pub(crate) fn check_grid(h: &SparseHamiltonian, psi0: &[Complex64], times: &[f64]) -> Result<()> {
    if psi0.len() != h.dim() {
        return Err(Error::Domain(format!(
            "initial state has length {} but the sector has dimension {}",
            psi0.len(),
            h.dim()
        )));
    }
    let n = norm(psi0);
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!("initial state is not normalized (norm {n})")));
    }
    if times.first().is_some_and(|&t| t < 0.0) || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain(
            "times must be strictly ascending and start at t ≥ 0".into(),
        ));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::Domain("times must be finite".into()));
    }
    Ok(())
}
