//! Fourier-peak scans over many initial product states.

use rayon::prelude::*;

use super::fourier::{fourier_amplitude, peak_at, FourierSpectrum};
use crate::dynamics::{observe, KrylovOptions, ObservableSet};
use crate::error::{Error, Result};
use crate::hamiltonian::SparseHamiltonian;
use crate::hilbert::BasisSector;
use crate::states::random_basis_states;

/// How the probe frequency `f₁` is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProbeFrequency {
    Fixed(f64),
    /// Global peak of the imbalance spectrum of this basis state.
    PeakOf(u64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanConfig {
    pub times: Vec<f64>,
    pub pad_ns: f64,
    pub halfwidth_mhz: f64,
    pub probe: ProbeFrequency,
    /// A record is a scar candidate when its `g²` exceeds this multiple of the scan median.
    pub separation_factor: f64,
    pub krylov: KrylovOptions,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanRecord {
    pub label: String,
    pub bits: u64,
    /// `g(f₁)²`; `None` when the evolution failed.
    pub g2: Option<f64>,
    pub error: Option<String>,
    pub is_scar_candidate: bool,
    /// 1 for the largest `g²`; failed records rank last.
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanResult {
    pub f1_mhz: f64,
    /// `separation_factor` × median `g²`.
    pub threshold: f64,
    pub records: Vec<ScanRecord>,
}

/// Named states followed by `random_count` distinct random basis states.
pub fn scan_sources(
    sector: &BasisSector,
    named: &[(String, u64)],
    random_count: usize,
    seed: u64,
) -> Result<Vec<(String, u64)>> {
    let exclude: Vec<u64> = named.iter().map(|(_, b)| *b).collect();
    let mut out = named.to_vec();
    for (k, b) in random_basis_states(sector, random_count, seed, &exclude)?
        .into_iter()
        .enumerate()
    {
        out.push((format!("random_{k}"), b));
    }
    Ok(out)
}

/// Imbalance spectrum of one basis state.
pub fn imbalance_spectrum(
    h: &SparseHamiltonian,
    bits: u64,
    times: &[f64],
    pad_ns: f64,
    krylov: KrylovOptions,
) -> Result<FourierSpectrum> {
    let s = observe(h, bits, times, krylov, None, ObservableSet::GLOBAL)?;
    fourier_amplitude(times, &s.imbalance, pad_ns, &format!("imbalance:0x{bits:x}"))
}

/// Evolves every source state, measures `g(f₁)²` and ranks the results.
pub fn scan_states(h: &SparseHamiltonian, sources: &[(String, u64)], config: &ScanConfig) -> Result<ScanResult> {
    for (label, b) in sources {
        if !h.sector().contains(*b) {
            return Err(Error::Domain(format!(
                "scan state {label} (0x{b:x}) is outside the sector"
            )));
        }
    }
    let spectra: Vec<Result<FourierSpectrum>> = sources
        .par_iter()
        .map(|(_, b)| imbalance_spectrum(h, *b, &config.times, config.pad_ns, config.krylov))
        .collect();
    let f1_mhz = match config.probe {
        ProbeFrequency::Fixed(f) => f,
        ProbeFrequency::PeakOf(bits) => {
            let reference = match sources.iter().position(|(_, b)| *b == bits) {
                Some(k) => match &spectra[k] {
                    Ok(s) => s.clone(),
                    Err(e) => {
                        return Err(Error::Integration {
                            time_ns: 0.0,
                            reason: format!("reference state failed: {e}"),
                        })
                    }
                },
                None => imbalance_spectrum(h, bits, &config.times, config.pad_ns, config.krylov)?,
            };
            reference
                .global_peak()
                .ok_or_else(|| Error::Domain("reference spectrum is empty".into()))?
                .0
        }
    };
    let mut records: Vec<ScanRecord> = sources
        .iter()
        .zip(spectra)
        .map(|((label, bits), s)| {
            let g = s.and_then(|s| peak_at(&s, f1_mhz, config.halfwidth_mhz));
            let (g2, error) = match g {
                Ok(g) => (Some(g * g), None),
                Err(e) => (None, Some(e.to_string())),
            };
            ScanRecord {
                label: label.clone(),
                bits: *bits,
                g2,
                error,
                is_scar_candidate: false,
                rank: 0,
            }
        })
        .collect();
    let mut values: Vec<f64> = records.iter().filter_map(|r| r.g2).collect();
    values.sort_by(f64::total_cmp);
    let median = match values.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => values[n / 2],
        n => 0.5 * (values[n / 2 - 1] + values[n / 2]),
    };
    let threshold = config.separation_factor * median;
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| {
        let key = |r: &ScanRecord| r.g2.unwrap_or(f64::NEG_INFINITY);
        key(&records[b]).total_cmp(&key(&records[a])).then(a.cmp(&b))
    });
    for (rank, &k) in order.iter().enumerate() {
        records[k].rank = rank + 1;
        records[k].is_scar_candidate = records[k].g2.is_some_and(|g| g > threshold);
    }
    Ok(ScanResult {
        f1_mhz,
        threshold,
        records,
    })
}
