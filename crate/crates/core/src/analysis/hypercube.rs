//! The hypercube of states with one photon per dimer.

use std::collections::BTreeMap;

use crate::angular;
use crate::error::{Error, Result};
use crate::hilbert::BasisSector;
use crate::model::{CouplingGraph, EdgeKind};

/// All `2^N` words with exactly one photon in every dimer, ascending.
pub fn hypercube_vertices(sector: &BasisSector, dimers: &[(usize, usize)]) -> Result<Vec<u64>> {
    let n = dimers.len();
    if 2 * n != sector.sites() || sector.photons() != n {
        return Err(Error::Domain(format!(
            "the hypercube needs N = L/2 photons in {} dimers; sector has L={} N={}",
            n,
            sector.sites(),
            sector.photons()
        )));
    }
    let mut v: Vec<u64> = (0..1u64 << n)
        .map(|m| {
            dimers
                .iter()
                .enumerate()
                .map(|(k, &(a, b))| if m >> k & 1 == 0 { 1u64 << a } else { 1u64 << b })
                .sum()
        })
        .collect();
    v.sort_unstable();
    Ok(v)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypercubeReport {
    pub n_dimers: usize,
    pub vertices: usize,
    /// Summed `|H_uv|` over unordered vertex pairs (rad/ns).
    pub delta: f64,
    /// Summed `|H_uv|` from vertices to exterior states (rad/ns).
    pub gamma: f64,
    /// `gamma` split by edge kind name.
    pub gamma_by_category: BTreeMap<String, f64>,
    /// `delta` split by edge kind name.
    pub delta_by_category: BTreeMap<String, f64>,
    pub ratio: f64,
}

/// Sums of identical magnitudes are formed as `count · value`, so a clean chain
/// reproduces `Δ = N 2^{N−1} |ω_a|` bit for bit.
#[derive(Default)]
struct Tally(BTreeMap<(EdgeKind, u64), u64>);

impl Tally {
    fn add(&mut self, kind: EdgeKind, value: f64) {
        *self.0.entry((kind, value.abs().to_bits())).or_default() += 1;
    }

    fn by_kind(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for (&(kind, bits), &count) in &self.0 {
            *out.entry(kind.name().to_string()).or_insert(0.0) += count as f64 * f64::from_bits(bits);
        }
        out
    }
}

/// Intra-hypercube and hypercube-to-exterior coupling sums for `graph`.
pub fn hypercube_report(graph: &CouplingGraph, sector: &BasisSector) -> Result<HypercubeReport> {
    let dimers = graph
        .dimers()
        .ok_or_else(|| Error::State("the graph has no dimer partition".into()))?;
    let vertices = hypercube_vertices(sector, dimers)?;
    let set: std::collections::HashSet<u64> = vertices.iter().copied().collect();
    let (mut intra, mut exterior) = (Tally::default(), Tally::default());
    for &v in &vertices {
        for e in graph.edges() {
            let mask = (1u64 << e.i) | (1u64 << e.j);
            if (v & mask).count_ones() != 1 {
                continue;
            }
            let t = v ^ mask;
            if set.contains(&t) {
                if v < t {
                    intra.add(e.kind, angular(e.f_mhz));
                }
            } else {
                exterior.add(e.kind, angular(e.f_mhz));
            }
        }
    }
    let delta_by_category = intra.by_kind();
    let gamma_by_category = exterior.by_kind();
    let delta: f64 = delta_by_category.values().sum();
    let gamma: f64 = gamma_by_category.values().sum();
    Ok(HypercubeReport {
        n_dimers: dimers.len(),
        vertices: vertices.len(),
        delta,
        gamma,
        gamma_by_category,
        delta_by_category,
        ratio: delta / gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Boundary;
    use crate::states::{occupation_string, pi_prime_state, pi_state};

    #[test]
    fn four_site_vertices() {
        let g = CouplingGraph::chain(4, Boundary::Open, -9.0, -6.0).unwrap();
        let s = BasisSector::new(4, 2).unwrap();
        let v = hypercube_vertices(&s, g.dimers().unwrap()).unwrap();
        let mut strs: Vec<String> = v.iter().map(|&b| occupation_string(b, 4)).collect();
        strs.sort();
        assert_eq!(strs, vec!["0101", "0110", "1001", "1010"]);
    }

    #[test]
    fn contains_collective_states() {
        let g = CouplingGraph::chain(20, Boundary::Open, -9.0, -6.0).unwrap();
        let s = BasisSector::new(20, 10).unwrap();
        let v = hypercube_vertices(&s, g.dimers().unwrap()).unwrap();
        assert_eq!(v.len(), 1024);
        assert!(v.binary_search(&pi_state(20).unwrap()).is_ok());
        assert!(v.binary_search(&pi_prime_state(20).unwrap()).is_ok());
        assert!(hypercube_vertices(&BasisSector::new(20, 9).unwrap(), g.dimers().unwrap()).is_err());
    }

    #[test]
    fn clean_chain_delta_is_exact() {
        for n in 2..=6usize {
            let g = CouplingGraph::chain(2 * n, Boundary::Open, -9.0, -6.0).unwrap();
            let s = BasisSector::new(2 * n, n).unwrap();
            let r = hypercube_report(&g, &s).unwrap();
            assert_eq!(r.delta, (n as f64 * (1u64 << (n - 1)) as f64) * angular(9.0).abs());
            let ge = ((n - 1) as f64 * (1u64 << (n - 1)) as f64) * angular(6.0);
            assert!((r.gamma - ge).abs() < 1e-12 * ge);
        }
    }

    #[test]
    fn cross_links_never_join_vertices() {
        let mut g = CouplingGraph::chain(16, Boundary::Open, -9.0, -6.0).unwrap();
        g.add_cross_couplings(0.3, 1.2, 3).unwrap();
        let s = BasisSector::new(16, 8).unwrap();
        let r = hypercube_report(&g, &s).unwrap();
        assert!(!r.delta_by_category.contains_key("cross"));
        let sum_x: f64 = g
            .edges()
            .iter()
            .filter(|e| e.kind == EdgeKind::Cross)
            .map(|e| angular(e.f_mhz).abs())
            .sum();
        let gx = r.gamma_by_category["cross"];
        assert!((gx - 128.0 * sum_x).abs() < 1e-10 * gx);
    }
}
