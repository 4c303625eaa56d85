//! Single-sided Fourier amplitudes of sampled series.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Relative tolerance on sample spacing.
const GRID_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct FourierSpectrum {
    /// Bin frequencies in MHz, starting at the first non-DC bin.
    pub frequencies_mhz: Vec<f64>,
    /// `2 |X_k| / N_raw` of the mean-subtracted series.
    pub amplitudes: Vec<f64>,
    pub source: String,
    pub raw_len: usize,
    pub padded_len: usize,
    pub dt_ns: f64,
}

impl FourierSpectrum {
    /// Bin width in MHz.
    pub fn resolution_mhz(&self) -> f64 {
        1e3 / (self.padded_len as f64 * self.dt_ns)
    }

    /// Frequency and amplitude of the largest bin.
    pub fn global_peak(&self) -> Option<(f64, f64)> {
        self.amplitudes
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, &a)| (self.frequencies_mhz[k], a))
    }

    /// Factor converting an amplitude to `|X_k| / N_pad`, the plain FFT
    /// normalization over the padded window.
    pub fn padded_convention_factor(&self) -> f64 {
        self.raw_len as f64 / (2.0 * self.padded_len as f64)
    }

    /// `(N_raw / N_pad) Σ a² / 2`, the power carried by the bins; a Nyquist
    /// bin counts half.
    pub fn power(&self) -> f64 {
        let mut sum: f64 = self.amplitudes.iter().map(|a| a * a).sum();
        if self.padded_len.is_multiple_of(2) {
            if let Some(last) = self.amplitudes.last() {
                sum -= 0.5 * last * last;
            }
        }
        self.raw_len as f64 / self.padded_len as f64 * sum / 2.0
    }
}

/// Sample spacing of a uniform grid.
pub fn uniform_step(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::Domain("a Fourier transform needs at least two samples".into()));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(Error::Domain("sample times must increase".into()));
    }
    for (k, w) in times.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > GRID_TOLERANCE * dt.max(1.0) {
            return Err(Error::Domain(format!("sample grid is not uniform at index {}", k + 1)));
        }
    }
    Ok(dt)
}

/// Amplitude spectrum of `series` sampled at `times`, zero-padded to `pad_to_ns`.
///
/// The series is mean-subtracted; bin `k ≥ 1` carries `2|X_k|/N_raw`, so a
/// cosine of unit amplitude on a bin frequency yields 1.
pub fn fourier_amplitude(times: &[f64], series: &[f64], pad_to_ns: f64, source: &str) -> Result<FourierSpectrum> {
    if times.len() != series.len() {
        return Err(Error::Domain("times and series differ in length".into()));
    }
    let dt = uniform_step(times)?;
    let raw = series.len();
    let duration = raw as f64 * dt;
    if pad_to_ns + GRID_TOLERANCE * duration < duration {
        return Err(Error::Domain(format!(
            "padding length {pad_to_ns} ns is shorter than the series ({duration} ns)"
        )));
    }
    let padded = ((pad_to_ns / dt).round() as usize).max(raw);
    let mean = series.iter().sum::<f64>() / raw as f64;
    let mut buf: Vec<Complex<f64>> = series.iter().map(|&x| Complex::new(x - mean, 0.0)).collect();
    buf.resize(padded, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(padded).process(&mut buf);
    let bins = padded / 2;
    let scale = 2.0 / raw as f64;
    Ok(FourierSpectrum {
        frequencies_mhz: (1..=bins).map(|k| k as f64 / (padded as f64 * dt) * 1e3).collect(),
        amplitudes: (1..=bins).map(|k| buf[k].norm() * scale).collect(),
        source: source.to_string(),
        raw_len: raw,
        padded_len: padded,
        dt_ns: dt,
    })
}

/// Largest amplitude within `[f1 − halfwidth, f1 + halfwidth]`.
pub fn peak_at(spectrum: &FourierSpectrum, f1_mhz: f64, halfwidth_mhz: f64) -> Result<f64> {
    let (lo, hi) = (f1_mhz - halfwidth_mhz, f1_mhz + halfwidth_mhz);
    let fmax = spectrum.frequencies_mhz.last().copied().unwrap_or(0.0);
    if !(halfwidth_mhz >= 0.0) || hi < spectrum.frequencies_mhz.first().copied().unwrap_or(0.0) || lo > fmax {
        return Err(Error::Domain(format!(
            "window [{lo}, {hi}] MHz lies outside the spectrum (up to {fmax} MHz)"
        )));
    }
    spectrum
        .frequencies_mhz
        .iter()
        .zip(&spectrum.amplitudes)
        .filter(|(f, _)| (lo..=hi).contains(*f))
        .map(|(_, &a)| a)
        .reduce(f64::max)
        .ok_or_else(|| Error::Domain(format!("no frequency bin inside [{lo}, {hi}] MHz")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn grid(n: usize, dt: f64) -> Vec<f64> {
        (0..n).map(|k| k as f64 * dt).collect()
    }

    #[test]
    fn cosine_peak() {
        let t = grid(400, 1.0);
        let f0 = 20.0;
        let x: Vec<f64> = t.iter().map(|&t| (TAU * f0 * 1e-3 * t).cos()).collect();
        let s = fourier_amplitude(&t, &x, 4000.0, "cos").unwrap();
        let (f, a) = s.global_peak().unwrap();
        assert!((f - f0).abs() <= s.resolution_mhz());
        assert!((a - 1.0).abs() < 0.02, "{a}");
        assert!((peak_at(&s, f0, 2.0).unwrap() - a).abs() < 1e-15);
        assert!((s.resolution_mhz() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn constant_series_is_flat_zero() {
        let t = grid(100, 1.0);
        let s = fourier_amplitude(&t, &vec![0.7; 100], 1000.0, "c").unwrap();
        assert!(s.amplitudes.iter().all(|&a| a < 1e-14));
    }

    #[test]
    fn rejects_bad_input() {
        let t = vec![0.0, 1.0, 2.5];
        assert!(fourier_amplitude(&t, &[1.0, 2.0, 3.0], 100.0, "x").is_err());
        let t = grid(100, 1.0);
        assert!(fourier_amplitude(&t, &vec![1.0; 100], 50.0, "x").is_err());
        let s = fourier_amplitude(&t, &vec![1.0; 100], 400.0, "x").unwrap();
        assert!(peak_at(&s, 900.0, 2.0).is_err());
    }

    #[test]
    fn parseval_bound() {
        let t = grid(400, 1.0);
        let x: Vec<f64> = t
            .iter()
            .map(|&t| (0.13 * t).cos() * 0.3 + (0.021 * t * t).sin() * 0.1 + (t * 1.7).sin() * 0.05)
            .collect();
        let mean = x.iter().sum::<f64>() / 400.0;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 400.0;
        for pad in [400.0, 1000.0, 4000.0] {
            let s = fourier_amplitude(&t, &x, pad, "x").unwrap();
            assert!(s.power() <= var * (1.0 + 1e-10), "{} > {var}", s.power());
        }
    }
}
