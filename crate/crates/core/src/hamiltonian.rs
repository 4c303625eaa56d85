//! Sector-restricted XY Hamiltonian.
//!
//! Row `u` holds the diagonal `Σ_i ω_i n_i(u)` and one entry `ω_ij` per edge
//! whose endpoints carry different occupations in `u`. Entries are generated in
//! edge-list order, so every product is summed in the same order regardless of
//! storage mode or thread count.

use std::collections::HashMap;
use std::io::Write;
use std::ops::{Add, Mul};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::angular;
use crate::error::{Error, Result};
use crate::hilbert::{binomial, BasisSector};
use crate::model::CouplingGraph;

/// Sectors above this dimension default to matrix-free products.
pub const MATRIX_FREE_THRESHOLD: usize = 1_000_000;

/// Largest number of stored nonzeros in explicit mode.
pub const EXPLICIT_NNZ_BUDGET: usize = 60_000_000;

const ROW_CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StorageMode {
    /// Explicit below [`MATRIX_FREE_THRESHOLD`], matrix-free above.
    Auto,
    Explicit,
    MatrixFree,
}

#[derive(Clone, Copy, Debug)]
struct Hop {
    mask: u64,
    omega: f64,
}

/// Constant-time ranking through a split lookup table.
///
/// The low half of the word contributes a term that depends on the low bits
/// alone; the high half depends on its own bits and the low-half popcount.
#[derive(Clone, Debug)]
pub struct FastRanker {
    low_bits: u32,
    low_mask: u64,
    low: Vec<u32>,
    high: Vec<u32>,
}

impl FastRanker {
    pub fn new(sites: usize) -> Self {
        let low_bits = (sites / 2) as u32;
        let high_bits = sites as u32 - low_bits;
        let stride = low_bits as usize + 1;
        // low entries pack the popcount above bit 24
        let low = (0..1u64 << low_bits)
            .map(|w| partial_rank(w, 0, 0) as u32 | w.count_ones() << 24)
            .collect();
        let mut high = vec![0u32; (1usize << high_bits) * stride];
        for w in 0..1u64 << high_bits {
            for c in 0..stride {
                high[w as usize * stride + c] = partial_rank(w, low_bits as usize, c) as u32;
            }
        }
        Self {
            low_bits,
            low_mask: (1u64 << low_bits) - 1,
            low,
            high,
        }
    }

    #[inline]
    pub fn rank(&self, bits: u64) -> usize {
        let entry = self.low[(bits & self.low_mask) as usize];
        let c = (entry >> 24) as usize;
        let hi = (bits >> self.low_bits) as usize;
        ((entry & 0x00ff_ffff) + self.high[hi * (self.low_bits as usize + 1) + c]) as usize
    }
}

fn partial_rank(mut w: u64, offset: usize, preceding: usize) -> u64 {
    let mut r = 0;
    let mut k = preceding + 1;
    while w != 0 {
        let p = w.trailing_zeros() as usize + offset;
        r += binomial(p, k);
        w &= w - 1;
        k += 1;
    }
    r
}

#[derive(Clone, Debug)]
enum Storage {
    MatrixFree,
    Csr {
        diag: Vec<f64>,
        row_ptr: Vec<usize>,
        cols: Vec<u32>,
        vals: Vec<f64>,
    },
}

/// The effective Hamiltonian restricted to a photon-number sector, in rad/ns.
#[derive(Clone, Debug)]
pub struct SparseHamiltonian {
    sector: BasisSector,
    hops: Vec<Hop>,
    hop_lookup: HashMap<u64, f64>,
    onsite: Vec<f64>,
    has_onsite: bool,
    ranker: FastRanker,
    storage: Storage,
}

impl SparseHamiltonian {
    /// Builds the operator of `graph` on `sector`.
    pub fn assemble(graph: &CouplingGraph, sector: &BasisSector, mode: StorageMode) -> Result<Self> {
        if graph.sites() != sector.sites() {
            return Err(Error::Domain(format!(
                "graph has {} sites but the sector has {}",
                graph.sites(),
                sector.sites()
            )));
        }
        let hops: Vec<Hop> = graph
            .edges()
            .iter()
            .map(|e| Hop {
                mask: (1u64 << e.i) | (1u64 << e.j),
                omega: angular(e.f_mhz),
            })
            .collect();
        let hop_lookup = hops.iter().map(|h| (h.mask, h.omega)).collect();
        let onsite: Vec<f64> = graph.onsite().iter().map(|&f| angular(f)).collect();
        let has_onsite = onsite.iter().any(|&w| w != 0.0);
        let mut h = Self {
            sector: sector.clone(),
            hops,
            hop_lookup,
            onsite,
            has_onsite,
            ranker: FastRanker::new(sector.sites()),
            storage: Storage::MatrixFree,
        };
        let explicit = match mode {
            StorageMode::Auto => sector.dim() <= MATRIX_FREE_THRESHOLD,
            StorageMode::Explicit => true,
            StorageMode::MatrixFree => false,
        };
        if explicit {
            h.storage = h.build_csr()?;
        }
        Ok(h)
    }

    fn build_csr(&self) -> Result<Storage> {
        let dim = self.sector.dim();
        let (l, n) = (self.sector.sites(), self.sector.photons());
        // each hop connects the words with exactly one of its two sites occupied
        let per_hop = if n == 0 || n == l {
            0
        } else {
            2 * binomial(l - 2, n - 1) as usize
        };
        let nnz = per_hop.saturating_mul(self.hops.len());
        if nnz > EXPLICIT_NNZ_BUDGET {
            return Err(Error::Capacity(format!(
                "explicit storage needs {nnz} nonzeros (budget {EXPLICIT_NNZ_BUDGET}); use matrix-free mode"
            )));
        }
        let mut diag = Vec::with_capacity(dim);
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for s in self.sector.iter() {
            diag.push(self.diagonal(s));
            for hop in &self.hops {
                if (s & hop.mask).count_ones() == 1 {
                    cols.push(self.ranker.rank(s ^ hop.mask) as u32);
                    vals.push(hop.omega);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(Storage::Csr {
            diag,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn sector(&self) -> &BasisSector {
        &self.sector
    }

    pub fn dim(&self) -> usize {
        self.sector.dim()
    }

    pub fn is_matrix_free(&self) -> bool {
        matches!(self.storage, Storage::MatrixFree)
    }

    /// Stored off-diagonal entries; zero in matrix-free mode.
    pub fn stored_nonzeros(&self) -> usize {
        match &self.storage {
            Storage::MatrixFree => 0,
            Storage::Csr { vals, .. } => vals.len(),
        }
    }

    /// On-site angular frequencies (rad/ns).
    pub fn onsite(&self) -> &[f64] {
        &self.onsite
    }

    /// Diagonal element `Σ_i ω_i n_i` of a basis state.
    #[inline]
    pub fn diagonal(&self, mut bits: u64) -> f64 {
        if !self.has_onsite {
            return 0.0;
        }
        let mut d = 0.0;
        while bits != 0 {
            d += self.onsite[bits.trailing_zeros() as usize];
            bits &= bits - 1;
        }
        d
    }

    /// Entry `⟨u|H|v⟩` for two occupation words of the sector.
    pub fn matrix_element(&self, u: u64, v: u64) -> f64 {
        if u == v {
            return self.diagonal(u);
        }
        let x = u ^ v;
        if x.count_ones() != 2 || (u & x).count_ones() != 1 {
            return 0.0;
        }
        self.hop_lookup.get(&x).copied().unwrap_or(0.0)
    }

    /// Calls `f(column, value)` for the diagonal and every off-diagonal entry of row `index`.
    pub fn for_each_in_row(&self, index: usize, mut f: impl FnMut(usize, f64)) {
        match &self.storage {
            Storage::Csr {
                diag,
                row_ptr,
                cols,
                vals,
            } => {
                f(index, diag[index]);
                for k in row_ptr[index]..row_ptr[index + 1] {
                    f(cols[k] as usize, vals[k]);
                }
            }
            Storage::MatrixFree => {
                let s = self.sector.state(index);
                f(index, self.diagonal(s));
                for hop in &self.hops {
                    if (s & hop.mask).count_ones() == 1 {
                        f(self.ranker.rank(s ^ hop.mask), hop.omega);
                    }
                }
            }
        }
    }

    /// `out = H v`.
    pub fn apply_into<T>(&self, v: &[T], out: &mut [T]) -> Result<()>
    where
        T: Copy + Default + Add<Output = T> + Mul<f64, Output = T> + Send + Sync,
    {
        let dim = self.dim();
        if v.len() != dim || out.len() != dim {
            return Err(Error::Domain(format!(
                "vector lengths {} / {} do not match dimension {dim}",
                v.len(),
                out.len()
            )));
        }
        match &self.storage {
            Storage::Csr {
                diag,
                row_ptr,
                cols,
                vals,
            } => {
                out.par_chunks_mut(ROW_CHUNK).enumerate().for_each(|(c, chunk)| {
                    let start = c * ROW_CHUNK;
                    for (k, o) in chunk.iter_mut().enumerate() {
                        let u = start + k;
                        let mut acc = v[u] * diag[u];
                        for p in row_ptr[u]..row_ptr[u + 1] {
                            acc = acc + v[cols[p] as usize] * vals[p];
                        }
                        *o = acc;
                    }
                });
            }
            Storage::MatrixFree => {
                out.par_chunks_mut(ROW_CHUNK).enumerate().for_each(|(c, chunk)| {
                    let start = c * ROW_CHUNK;
                    for ((k, o), s) in chunk.iter_mut().enumerate().zip(self.sector.iter_from(start)) {
                        let u = start + k;
                        let mut acc = v[u] * self.diagonal(s);
                        // branch-free: an inactive hop reads v[u] with weight zero
                        for hop in &self.hops {
                            let x = s & hop.mask;
                            let active = (x != 0 && x != hop.mask) as u64;
                            let target = s ^ (hop.mask & active.wrapping_neg());
                            acc = acc + v[self.ranker.rank(target)] * (hop.omega * active as f64);
                        }
                        *o = acc;
                    }
                });
            }
        }
        Ok(())
    }

    /// `H v` as a new vector.
    pub fn apply<T>(&self, v: &[T]) -> Result<Vec<T>>
    where
        T: Copy + Default + Add<Output = T> + Mul<f64, Output = T> + Send + Sync,
    {
        let mut out = vec![T::default(); self.dim()];
        self.apply_into(v, &mut out)?;
        Ok(out)
    }

    /// `⟨v|H|v⟩`.
    pub fn expectation(&self, v: &[Complex64]) -> Result<Complex64> {
        let hv = self.apply(v)?;
        Ok(v.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum())
    }

    /// Sum of the diagonal.
    pub fn trace(&self) -> f64 {
        self.sector.iter().map(|s| self.diagonal(s)).sum()
    }

    /// Writes every nonzero as `u,v,value` (rad/ns) for small sectors.
    pub fn write_triplets(&self, path: &Path) -> Result<()> {
        const LIMIT: usize = 100_000;
        if self.dim() > LIMIT {
            return Err(Error::Capacity(format!(
                "triplet dumps are limited to dimension {LIMIT}"
            )));
        }
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "u,v,value")?;
        for u in 0..self.dim() {
            let mut rows = Vec::new();
            self.for_each_in_row(u, |v, x| {
                if x != 0.0 {
                    rows.push((v, x));
                }
            });
            for (v, x) in rows {
                writeln!(w, "{u},{v},{x:.16e}")?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
