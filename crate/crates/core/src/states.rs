//! Named product states and seeded random basis states.
//!
//! Bit `i` of a word is the occupation of site `i`. On the chain, dimer `k` is
//! `(2k, 2k+1)`; `d+ = |10⟩` puts the photon on site `2k`.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hilbert::BasisSector;

fn even_sites(sites: usize) -> Result<()> {
    if sites < 2 || sites % 2 == 1 || sites > crate::hilbert::MAX_SITES {
        return Err(Error::Domain(format!(
            "collective dimer states need an even number of sites, got {sites}"
        )));
    }
    Ok(())
}

/// `|Π⟩ = d+ d- d+ d- …`.
pub fn pi_state(sites: usize) -> Result<u64> {
    even_sites(sites)?;
    Ok((0..sites / 2)
        .map(|k| {
            if k % 2 == 0 {
                1u64 << (2 * k)
            } else {
                1u64 << (2 * k + 1)
            }
        })
        .sum())
}

/// `|Π'⟩`, the complement of `|Π⟩`.
pub fn pi_prime_state(sites: usize) -> Result<u64> {
    Ok(!pi_state(sites)? & full_mask(sites))
}

/// Comb `|Θ⟩`: every backbone site `2k` occupied.
pub fn theta_state(sites: usize) -> Result<u64> {
    even_sites(sites)?;
    Ok((0..sites / 2).map(|k| 1u64 << (2 * k)).sum())
}

/// Comb `|Θ'⟩`: every tooth `2k+1` occupied.
pub fn theta_prime_state(sites: usize) -> Result<u64> {
    Ok(!theta_state(sites)? & full_mask(sites))
}

fn full_mask(sites: usize) -> u64 {
    (1u64 << sites) - 1
}

/// `count` distinct basis states of `sector`, drawn uniformly with a seeded
/// ChaCha8 stream and skipping anything in `exclude`.
pub fn random_basis_states(sector: &BasisSector, count: usize, seed: u64, exclude: &[u64]) -> Result<Vec<u64>> {
    let excluded: BTreeSet<u64> = exclude.iter().copied().filter(|&b| sector.contains(b)).collect();
    let available = sector.dim() - excluded.len();
    if count > available {
        return Err(Error::Domain(format!(
            "requested {count} distinct states but only {available} are available"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = excluded;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let bits = sector.unrank(rng.random_range(0..sector.dim()))?;
        if seen.insert(bits) {
            out.push(bits);
        }
    }
    Ok(out)
}

/// Site occupations as a string, site 0 first.
pub fn occupation_string(bits: u64, sites: usize) -> String {
    (0..sites).map(|i| if bits >> i & 1 == 1 { '1' } else { '0' }).collect()
}

/// Hex form used in output files.
pub fn bits_hex(bits: u64) -> String {
    format!("0x{bits:x}")
}

/// Parses a `0x…` hex word or a site-0-first occupation string.
pub fn parse_bits(text: &str, sites: usize) -> Result<u64> {
    let t = text.trim();
    if let Some(hex) = t.strip_prefix("0x") {
        return u64::from_str_radix(hex, 16).map_err(|e| Error::Parse(format!("bad hex state {t}: {e}")));
    }
    if t.len() != sites || !t.chars().all(|c| c == '0' || c == '1') {
        return Err(Error::Parse(format!(
            "state {t} is neither 0x-hex nor a {sites}-character occupation string"
        )));
    }
    Ok(t.chars()
        .enumerate()
        .filter(|&(_, c)| c == '1')
        .map(|(i, _)| 1u64 << i)
        .sum())
}
