use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Boundary, CouplingGraph, EdgeKind, Topology};
use crate::error::{Error, Result};

/// Columns of the processor's qubit grid; default width for snake layouts.
pub const DEVICE_COLUMNS: usize = 6;

/// Name of the generator used for random cross couplings.
pub const PRNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.9, seed_from_u64)";

/// On-site frequency patterns.
#[derive(Clone, Debug, PartialEq)]
pub enum OnsitePattern {
    /// Every site at `f` MHz.
    Uniform(f64),
    /// The last two sites at `f` MHz, all others zero.
    EndImpurity(f64),
    /// Dimer `n` (1-based) at `n · step` MHz.
    Staircase(f64),
    /// One value per site.
    Explicit(Vec<f64>),
}

/// Row-by-row serpentine placement of `sites` on a `rows × cols` grid.
pub fn snake_grid_embedding(sites: usize, rows: usize, cols: usize) -> Result<Vec<(usize, usize)>> {
    if sites > rows * cols {
        return Err(Error::Capacity(format!(
            "{sites} sites do not fit on a {rows}×{cols} grid"
        )));
    }
    Ok((0..sites)
        .map(|k| {
            let row = k / cols;
            let c = k % cols;
            (row, if row.is_multiple_of(2) { c } else { cols - 1 - c })
        })
        .collect())
}

impl CouplingGraph {
    /// Dimerized chain: `f_intra` on bonds `(2k, 2k+1)`, `f_inter` on
    /// `(2k+1, 2k+2)`, plus `(L-1, 0)` when periodic. The chain carries a snake
    /// embedding on a grid [`DEVICE_COLUMNS`] wide.
    pub fn chain(sites: usize, boundary: Boundary, f_intra: f64, f_inter: f64) -> Result<Self> {
        if sites < 2 || sites % 2 == 1 {
            return Err(Error::Domain(format!(
                "a dimerized chain needs an even number of sites ≥ 2, got {sites}"
            )));
        }
        let mut g = CouplingGraph::empty(sites);
        for i in 0..sites - 1 {
            let (f, kind) = if i % 2 == 0 {
                (f_intra, EdgeKind::Intra)
            } else {
                (f_inter, EdgeKind::Inter)
            };
            g.add_edge(i, i + 1, f, kind)?;
        }
        if boundary == Boundary::Periodic && sites > 2 {
            g.add_edge(sites - 1, 0, f_inter, EdgeKind::Inter)?;
        }
        g.set_dimers((0..sites / 2).map(|k| (2 * k, 2 * k + 1)).collect())?;
        let rows = sites.div_ceil(DEVICE_COLUMNS);
        g.set_embedding(snake_grid_embedding(sites, rows, DEVICE_COLUMNS)?)?;
        g.set_topology(Topology::Chain(boundary));
        Ok(g)
    }

    /// Comb: backbone sites `b_k = 2k` joined by `f_inter`, each carrying a
    /// tooth `t_k = 2k+1` through `f_intra`. Dimer `k` is `(b_k, t_k)`. The
    /// backbone sits on grid row 0 and the teeth on row 1.
    pub fn comb(n_dimers: usize, f_intra: f64, f_inter: f64) -> Result<Self> {
        if n_dimers < 2 {
            return Err(Error::Domain(format!(
                "a comb needs at least two dimers, got {n_dimers}"
            )));
        }
        let sites = 2 * n_dimers;
        let mut g = CouplingGraph::empty(sites);
        for k in 0..n_dimers {
            g.add_edge(2 * k, 2 * k + 1, f_intra, EdgeKind::Intra)?;
            if k + 1 < n_dimers {
                g.add_edge(2 * k, 2 * k + 2, f_inter, EdgeKind::Inter)?;
            }
        }
        g.set_dimers((0..n_dimers).map(|k| (2 * k, 2 * k + 1)).collect())?;
        g.set_embedding((0..sites).map(|s| (s % 2, s / 2)).collect())?;
        g.set_topology(Topology::Comb);
        Ok(g)
    }

    /// Adds a coupling drawn uniformly from `[f_lo, f_hi]` MHz between every
    /// pair of grid-diagonal sites (distance √2) that is not already coupled.
    ///
    /// Pairs are visited by increasing larger index, then smaller index, so a
    /// longer chain with the same seed extends the couplings of a shorter one.
    pub fn add_cross_couplings(&mut self, f_lo: f64, f_hi: f64, seed: u64) -> Result<usize> {
        if !(f_lo.is_finite() && f_hi.is_finite()) || f_lo > f_hi {
            return Err(Error::Domain(format!("cross-coupling range [{f_lo}, {f_hi}] is empty")));
        }
        let embedding = self
            .embedding()
            .ok_or_else(|| Error::State("cross couplings need a grid embedding".into()))?
            .to_vec();
        let owner = self.dimer_of_site();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut added = 0;
        for j in 0..self.sites() {
            for i in 0..j {
                let (ri, ci) = embedding[i];
                let (rj, cj) = embedding[j];
                let diagonal = ri.abs_diff(rj) == 1 && ci.abs_diff(cj) == 1;
                let same_dimer = owner.as_ref().is_some_and(|o| o[i] == o[j]);
                if !diagonal || same_dimer || self.has_edge(i, j) {
                    continue;
                }
                let f = if f_lo == f_hi {
                    f_lo
                } else {
                    rng.random_range(f_lo..=f_hi)
                };
                self.add_edge(i, j, f, EdgeKind::Cross)?;
                added += 1;
            }
        }
        self.note(format!(
            "{added} diagonal cross couplings uniform in [{f_lo}, {f_hi}] MHz, {PRNG_NAME}, seed {seed}"
        ));
        Ok(added)
    }

    /// Adds `(i, i+3)` bonds of strength `f_nn` on a chain.
    pub fn add_nnn_couplings(&mut self, f_nn: f64) -> Result<usize> {
        let Topology::Chain(boundary) = self.topology() else {
            return Err(Error::Domain("next-next-nearest couplings need a chain".into()));
        };
        let l = self.sites();
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for i in 0..l {
            let j = i + 3;
            let j = match boundary {
                Boundary::Open if j < l => j,
                Boundary::Periodic if l > 3 => j % l,
                _ => continue,
            };
            let key = (i.min(j), i.max(j));
            if !pairs.contains(&key) {
                pairs.push(key);
            }
        }
        for &(i, j) in &pairs {
            if self.has_edge(i, j) {
                return Err(Error::Domain(format!(
                    "bond ({i}, {j}) is already coupled; cannot add J_nn on top"
                )));
            }
            self.add_edge(i, j, f_nn, EdgeKind::NextNextNearest)?;
        }
        self.note(format!("{} next-next-nearest bonds at {f_nn} MHz", pairs.len()));
        Ok(pairs.len())
    }

    /// Replaces the on-site frequencies.
    pub fn set_onsite(&mut self, pattern: &OnsitePattern) -> Result<()> {
        let l = self.sites();
        let values: Vec<f64> = match pattern {
            OnsitePattern::Uniform(f) => vec![*f; l],
            OnsitePattern::EndImpurity(f) => (0..l).map(|s| if s + 2 >= l { *f } else { 0.0 }).collect(),
            OnsitePattern::Staircase(step) => match self.dimer_of_site() {
                Some(owner) => owner.iter().map(|&k| step * (k + 1) as f64).collect(),
                None => (0..l).map(|s| step * (s / 2 + 1) as f64).collect(),
            },
            OnsitePattern::Explicit(v) => {
                if v.len() != l {
                    return Err(Error::Domain(format!(
                        "explicit on-site list has {} entries for {l} sites",
                        v.len()
                    )));
                }
                v.clone()
            }
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("on-site frequencies must be finite".into()));
        }
        self.onsite_mut().copy_from_slice(&values);
        Ok(())
    }
}
