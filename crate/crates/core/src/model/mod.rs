//! Coupling graphs for the effective XY model
//!
//! ```text
//! H / ħ = Σ_{(i,j)} J_ij (S⁻_i S⁺_j + S⁺_i S⁻_j) + Σ_i Ω_i S⁺_i S⁻_i
//! ```
//!
//! All stored couplings are ordinary frequencies `f = J / 2π` in MHz. Attractive
//! couplings are negative, e.g. the intra-dimer coupling `-9 MHz`.

mod circuit;
mod geometry;

pub use circuit::{
    effective_from_circuit, read_device_csv, CircuitParams, Coupler, CouplerRecord, DeviceTable, QubitRecord,
    DEFAULT_INTERACTION_GHZ,
};
pub use geometry::{snake_grid_embedding, OnsitePattern, DEVICE_COLUMNS, PRNG_NAME};

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Origin of an edge, used to break couplings down by category.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    /// Inside a dimer (`J_a`).
    Intra,
    /// Between neighbouring dimers (`J_e`).
    Inter,
    /// Diagonal cross coupling (`J_x`).
    Cross,
    /// Chain bond `(i, i+3)` (`J_nn`).
    NextNextNearest,
    /// Loaded from an edge list.
    Explicit,
    /// Produced by coupler elimination.
    Circuit,
}

impl EdgeKind {
    pub fn name(self) -> &'static str {
        match self {
            EdgeKind::Intra => "intra",
            EdgeKind::Inter => "inter",
            EdgeKind::Cross => "cross",
            EdgeKind::NextNextNearest => "next_next_nearest",
            EdgeKind::Explicit => "explicit",
            EdgeKind::Circuit => "circuit",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    /// Smaller site index.
    pub i: usize,
    /// Larger site index.
    pub j: usize,
    /// Coupling `J_ij / 2π` in MHz.
    pub f_mhz: f64,
    pub kind: EdgeKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    Chain(Boundary),
    Comb,
    Custom,
}

/// Sites, hopping edges, on-site frequencies and optional dimer/grid data.
#[derive(Clone, Debug)]
pub struct CouplingGraph {
    sites: usize,
    edges: Vec<Edge>,
    lookup: HashMap<(usize, usize), usize>,
    onsite: Vec<f64>,
    dimers: Option<Vec<(usize, usize)>>,
    embedding: Option<Vec<(usize, usize)>>,
    topology: Topology,
    provenance: Vec<String>,
}

impl CouplingGraph {
    /// Graph with `sites` isolated sites and zero on-site terms.
    pub fn empty(sites: usize) -> Self {
        Self {
            sites,
            edges: Vec::new(),
            lookup: HashMap::new(),
            onsite: vec![0.0; sites],
            dimers: None,
            embedding: None,
            topology: Topology::Custom,
            provenance: Vec::new(),
        }
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// On-site frequencies `Ω_i / 2π` in MHz.
    pub fn onsite(&self) -> &[f64] {
        &self.onsite
    }

    pub fn dimers(&self) -> Option<&[(usize, usize)]> {
        self.dimers.as_deref()
    }

    /// Grid coordinates `(row, col)` per site.
    pub fn embedding(&self) -> Option<&[(usize, usize)]> {
        self.embedding.as_deref()
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    /// Human-readable notes on how the couplings were generated.
    pub fn provenance(&self) -> &[String] {
        &self.provenance
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.provenance.push(text.into());
    }

    pub fn edge(&self, a: usize, b: usize) -> Option<&Edge> {
        self.lookup.get(&(a.min(b), a.max(b))).map(|&k| &self.edges[k])
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.lookup.contains_key(&(a.min(b), a.max(b)))
    }

    /// Adds an edge. Self-edges and duplicate pairs are rejected.
    pub fn add_edge(&mut self, a: usize, b: usize, f_mhz: f64, kind: EdgeKind) -> Result<()> {
        if a == b {
            return Err(Error::Domain(format!("self-edge on site {a}")));
        }
        if a >= self.sites || b >= self.sites {
            return Err(Error::Domain(format!(
                "edge ({a}, {b}) outside register of {} sites",
                self.sites
            )));
        }
        if !f_mhz.is_finite() {
            return Err(Error::Domain(format!("edge ({a}, {b}) has non-finite strength")));
        }
        let key = (a.min(b), a.max(b));
        if self.lookup.contains_key(&key) {
            return Err(Error::Domain(format!("duplicate edge ({}, {})", key.0, key.1)));
        }
        self.lookup.insert(key, self.edges.len());
        self.edges.push(Edge {
            i: key.0,
            j: key.1,
            f_mhz,
            kind,
        });
        Ok(())
    }

    /// Sets the dimer partition; it must cover every site exactly once.
    pub fn set_dimers(&mut self, dimers: Vec<(usize, usize)>) -> Result<()> {
        let mut seen = vec![false; self.sites];
        for &(a, b) in &dimers {
            for s in [a, b] {
                if s >= self.sites || std::mem::replace(&mut seen[s], true) {
                    return Err(Error::Domain(format!(
                        "dimer partition is not a partition of the {} sites",
                        self.sites
                    )));
                }
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::Domain("dimer partition leaves sites uncovered".into()));
        }
        self.dimers = Some(dimers);
        Ok(())
    }

    pub fn set_embedding(&mut self, embedding: Vec<(usize, usize)>) -> Result<()> {
        if embedding.len() != self.sites {
            return Err(Error::Domain(format!(
                "embedding has {} coordinates for {} sites",
                embedding.len(),
                self.sites
            )));
        }
        self.embedding = Some(embedding);
        Ok(())
    }

    pub(crate) fn set_topology(&mut self, topology: Topology) {
        self.topology = topology;
    }

    pub(crate) fn onsite_mut(&mut self) -> &mut [f64] {
        &mut self.onsite
    }

    /// Adds `delta_mhz` to every on-site term. Within a fixed photon-number
    /// sector this only changes the global phase.
    pub fn shift_onsite(&mut self, delta_mhz: f64) {
        self.onsite.iter_mut().for_each(|w| *w += delta_mhz);
    }

    /// Dimer index of every site, when a partition is present.
    pub fn dimer_of_site(&self) -> Option<Vec<usize>> {
        let dimers = self.dimers.as_ref()?;
        let mut owner = vec![0; self.sites];
        for (k, &(a, b)) in dimers.iter().enumerate() {
            owner[a] = k;
            owner[b] = k;
        }
        Some(owner)
    }

    /// Whether the graph is invariant under the site reflection `i → L-1-i`.
    pub fn is_reflection_symmetric(&self) -> bool {
        let l = self.sites;
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * (1.0 + x.abs().max(y.abs()));
        let onsite_ok = (0..l).all(|i| close(self.onsite[i], self.onsite[l - 1 - i]));
        onsite_ok
            && self.edges.iter().all(|e| {
                self.edge(l - 1 - e.i, l - 1 - e.j)
                    .is_some_and(|m| close(m.f_mhz, e.f_mhz))
            })
    }

    /// Whether all on-site terms are equal.
    pub fn has_uniform_onsite(&self) -> bool {
        self.onsite.windows(2).all(|w| w[0] == w[1])
    }

    /// Adds edges read from an `i,j,f_MHz` CSV file (0-indexed sites).
    pub fn add_edges_from_csv(&mut self, path: &Path) -> Result<usize> {
        let edges = read_edge_csv(path)?;
        let n = edges.len();
        for (i, j, f) in edges {
            self.add_edge(i, j, f, EdgeKind::Explicit)?;
        }
        self.note(format!("{n} explicit edges loaded from {}", path.display()));
        Ok(n)
    }
}

/// Reads an `i,j,f_MHz` edge list.
pub fn read_edge_csv(path: &Path) -> Result<Vec<(usize, usize, f64)>> {
    #[derive(serde::Deserialize)]
    struct Row {
        i: usize,
        j: usize,
        #[serde(rename = "f_MHz")]
        f_mhz: f64,
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    reader
        .deserialize::<Row>()
        .map(|r| r.map(|r| (r.i, r.j, r.f_mhz)).map_err(Error::from))
        .collect()
}

/// Writes edges as an `i,j,f_MHz` CSV with 17 significant digits.
pub fn write_edge_csv(path: &Path, edges: &[Edge]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["i", "j", "f_MHz"])?;
    for e in edges {
        w.write_record([e.i.to_string(), e.j.to_string(), format!("{:.16e}", e.f_mhz)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_self_and_duplicate_edges() {
        let mut g = CouplingGraph::empty(3);
        assert!(g.add_edge(1, 1, 1.0, EdgeKind::Explicit).is_err());
        g.add_edge(0, 2, 1.0, EdgeKind::Explicit).unwrap();
        assert!(g.add_edge(2, 0, 2.0, EdgeKind::Explicit).is_err());
        assert!(g.add_edge(0, 3, 1.0, EdgeKind::Explicit).is_err());
        assert_eq!(g.edge(2, 0).unwrap().f_mhz, 1.0);
    }

    #[test]
    fn dimer_partition_must_cover() {
        let mut g = CouplingGraph::empty(4);
        assert!(g.set_dimers(vec![(0, 1)]).is_err());
        assert!(g.set_dimers(vec![(0, 1), (1, 2)]).is_err());
        g.set_dimers(vec![(0, 1), (2, 3)]).unwrap();
        assert_eq!(g.dimer_of_site().unwrap(), vec![0, 0, 1, 1]);
    }

    #[test]
    fn edge_csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("edges.csv");
        let mut g = CouplingGraph::empty(4);
        g.add_edge(0, 2, 0.3125, EdgeKind::Cross).unwrap();
        g.add_edge(1, 3, -1.0 / 3.0, EdgeKind::Cross).unwrap();
        write_edge_csv(&path, g.edges()).unwrap();
        let mut h = CouplingGraph::empty(4);
        assert_eq!(h.add_edges_from_csv(&path).unwrap(), 2);
        assert_eq!(h.edge(1, 3).unwrap().f_mhz, -1.0 / 3.0);
    }
}
