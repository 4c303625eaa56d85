//! Scar diagnostics built on trajectories and spectra.

mod fourier;
mod hypercube;
mod imbalance;
mod scan;

pub use fourier::{fourier_amplitude, peak_at, uniform_step, FourierSpectrum};
pub use hypercube::{hypercube_report, hypercube_vertices, HypercubeReport};
pub use imbalance::{
    imbalance_from_towers, imbalance_spectral_oracle, leading_tower_term, mirrored_tower_weights, ORACLE_BUDGET,
};
pub use scan::{imbalance_spectrum, scan_sources, scan_states, ProbeFrequency, ScanConfig, ScanRecord, ScanResult};

use crate::error::{Error, Result};

/// Default zero-padded length of imbalance transforms (ns).
pub const DEFAULT_PAD_NS: f64 = 4000.0;

/// Default half-width of the window around `f₁` (MHz).
pub const DEFAULT_HALFWIDTH_MHZ: f64 = 2.0;

/// `(1/L) ln F`; `F = 0` maps to `−∞`.
pub fn fidelity_density(fidelity: f64, sites: usize) -> Result<f64> {
    if sites == 0 || !(0.0..=1.0 + 1e-9).contains(&fidelity) {
        return Err(Error::Domain(format!(
            "fidelity density needs F in [0, 1] and L > 0, got F={fidelity}, L={sites}"
        )));
    }
    if fidelity == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(fidelity.min(1.0).ln() / sites as f64)
}

/// Smallest rise of a revival above the preceding minimum, relative to the
/// initial drop.
pub const REVIVAL_PROMINENCE: f64 = 0.01;

/// First local maximum rising above the running minimum by at least
/// [`REVIVAL_PROMINENCE`] of the initial drop, as `(index, value)`.
pub fn first_revival(series: &[f64]) -> Option<(usize, f64)> {
    first_revival_with(series, REVIVAL_PROMINENCE)
}

/// [`first_revival`] with an explicit relative prominence.
pub fn first_revival_with(series: &[f64], prominence: f64) -> Option<(usize, f64)> {
    let n = series.len();
    let first_min = (1..n.saturating_sub(1)).find(|&k| series[k] <= series[k - 1] && series[k] < series[k + 1])?;
    let mut low = series[first_min];
    for k in first_min + 1..n - 1 {
        low = low.min(series[k]);
        let peak = series[k] >= series[k - 1] && series[k] > series[k + 1];
        if peak && series[k] - low >= prominence * (series[0] - low) {
            return Some((k, series[k]));
        }
    }
    None
}
