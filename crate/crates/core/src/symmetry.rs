//! Abelian symmetry blocks built from the site reflection `i → L-1-i` and the
//! global spin flip `n_i → 1 - n_i`.
//!
//! Group element `g` is encoded in two bits: bit 0 applies the reflection, bit 1
//! the flip. A block with characters `(p, f)` has the orthonormal basis
//!
//! ```text
//! |r⟩ = |O_r|^{-1/2} Σ_{s ∈ O_r} χ(g_s) |s⟩,   g_s · r = s
//! ```
//!
//! over orbit representatives `r` (smallest word in the orbit) whose
//! stabilizer has trivial character.

use crate::error::{Error, Result};
use crate::hamiltonian::SparseHamiltonian;
use crate::hilbert::BasisSector;
use crate::model::CouplingGraph;
use crate::Complex64;

/// Which generators are resolved.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SymmetryGroup {
    pub reflection: bool,
    pub flip: bool,
}

impl SymmetryGroup {
    pub const NONE: Self = Self {
        reflection: false,
        flip: false,
    };

    /// Every generator that commutes with the Hamiltonian of `graph` on `sector`.
    pub fn detect(graph: &CouplingGraph, sector: &BasisSector) -> Self {
        Self {
            reflection: graph.is_reflection_symmetric(),
            flip: flip_commutes(graph, sector),
        }
    }

    /// The reflection alone, checked against the graph.
    pub fn reflection(graph: &CouplingGraph) -> Result<Self> {
        if !graph.is_reflection_symmetric() {
            return Err(Error::SymmetryAbsent(
                "the graph is not invariant under i -> L-1-i".into(),
            ));
        }
        Ok(Self {
            reflection: true,
            flip: false,
        })
    }

    /// Checks that every requested generator is a symmetry.
    pub fn validate(self, graph: &CouplingGraph, sector: &BasisSector) -> Result<()> {
        if self.reflection && !graph.is_reflection_symmetric() {
            return Err(Error::SymmetryAbsent(
                "the graph is not invariant under i -> L-1-i".into(),
            ));
        }
        if self.flip && !flip_commutes(graph, sector) {
            return Err(Error::SymmetryAbsent(
                "the spin flip needs half filling and uniform on-site terms".into(),
            ));
        }
        Ok(())
    }

    fn elements(self) -> impl Iterator<Item = u8> {
        let mask = self.reflection as u8 | (self.flip as u8) << 1;
        (0..4u8).filter(move |g| g & !mask == 0)
    }

    /// Block labels in a fixed order.
    pub fn labels(self) -> Vec<BlockLabel> {
        let ps: &[i8] = if self.reflection { &[1, -1] } else { &[0] };
        let fs: &[i8] = if self.flip { &[1, -1] } else { &[0] };
        ps.iter()
            .flat_map(|&parity| fs.iter().map(move |&flip| BlockLabel { parity, flip }))
            .collect()
    }
}

fn flip_commutes(graph: &CouplingGraph, sector: &BasisSector) -> bool {
    2 * sector.photons() == sector.sites() && graph.has_uniform_onsite()
}

/// Characters of a block; `0` marks an unresolved generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BlockLabel {
    pub parity: i8,
    pub flip: i8,
}

impl BlockLabel {
    pub const TRIVIAL: Self = Self { parity: 0, flip: 0 };

    fn character(self, g: u8) -> f64 {
        let mut c = 1.0;
        if g & 1 == 1 && self.parity < 0 {
            c = -c;
        }
        if g & 2 == 2 && self.flip < 0 {
            c = -c;
        }
        c
    }
}

impl std::fmt::Display for BlockLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sign = |x: i8| match x {
            1 => "+",
            -1 => "-",
            _ => "*",
        };
        write!(f, "P{}F{}", sign(self.parity), sign(self.flip))
    }
}

#[inline]
fn act(g: u8, bits: u64, sites: usize) -> u64 {
    let mut b = bits;
    if g & 1 == 1 {
        b = b.reverse_bits() >> (64 - sites);
    }
    if g & 2 == 2 {
        b = !b & ((1u64 << sites) - 1);
    }
    b
}

/// One symmetry block: its representatives and their orbit sizes.
#[derive(Clone, Debug)]
pub struct Block {
    pub label: BlockLabel,
    /// Sector index of each representative.
    pub reps: Vec<u32>,
    pub orbit_size: Vec<u8>,
    /// Sector index → block index, `u32::MAX` when absent.
    position: Vec<u32>,
}

impl Block {
    pub fn dim(&self) -> usize {
        self.reps.len()
    }

    /// Block index of a representative's sector index.
    pub fn position(&self, rep: usize) -> Option<usize> {
        match self.position[rep] {
            u32::MAX => None,
            p => Some(p as usize),
        }
    }
}

/// Orbit data for a whole sector and the blocks derived from it.
#[derive(Clone, Debug)]
pub struct SymmetryBasis {
    sector: BasisSector,
    group: SymmetryGroup,
    /// For every sector index: representative sector index.
    rep_of: Vec<u32>,
    /// For every sector index: element mapping the representative to it.
    element_of: Vec<u8>,
    blocks: Vec<Block>,
}

impl SymmetryBasis {
    pub fn new(sector: &BasisSector, group: SymmetryGroup) -> Result<Self> {
        if group.flip && 2 * sector.photons() != sector.sites() {
            return Err(Error::SymmetryAbsent(
                "the spin flip only maps a half-filled sector onto itself".into(),
            ));
        }
        let dim = sector.dim();
        if dim > u32::MAX as usize - 1 {
            return Err(Error::Capacity(format!(
                "dimension {dim} too large for symmetry tables"
            )));
        }
        let l = sector.sites();
        let elements: Vec<u8> = group.elements().collect();
        let mut rep_of = vec![0u32; dim];
        let mut element_of = vec![0u8; dim];
        let mut stabilizer = vec![0u8; dim];
        for (idx, s) in sector.iter().enumerate() {
            let (mut rep, mut via) = (s, 0u8);
            for &g in &elements {
                let t = act(g, s, l);
                if t < rep {
                    rep = t;
                    via = g;
                }
            }
            rep_of[idx] = sector.rank(rep)? as u32;
            element_of[idx] = via;
            if rep == s {
                stabilizer[idx] = elements
                    .iter()
                    .filter(|&&g| act(g, s, l) == s)
                    .fold(0u8, |m, &g| m | 1 << g);
            }
        }
        let blocks = group
            .labels()
            .into_iter()
            .map(|label| {
                let mut position = vec![u32::MAX; dim];
                let mut reps = Vec::new();
                let mut orbit_size = Vec::new();
                for idx in 0..dim {
                    if rep_of[idx] as usize != idx {
                        continue;
                    }
                    let stab = stabilizer[idx];
                    if (0..4u8).any(|g| stab >> g & 1 == 1 && label.character(g) < 0.0) {
                        continue;
                    }
                    position[idx] = reps.len() as u32;
                    reps.push(idx as u32);
                    orbit_size.push((elements.len() / stab.count_ones() as usize) as u8);
                }
                Block {
                    label,
                    reps,
                    orbit_size,
                    position,
                }
            })
            .collect();
        Ok(Self {
            sector: sector.clone(),
            group,
            rep_of,
            element_of,
            blocks,
        })
    }

    pub fn group(&self) -> SymmetryGroup {
        self.group
    }

    pub fn sector(&self) -> &BasisSector {
        &self.sector
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Dense row-major block of `h`.
    pub fn block_matrix(&self, h: &SparseHamiltonian, block: usize) -> Vec<f64> {
        let b = &self.blocks[block];
        let n = b.dim();
        let mut m = vec![0.0; n * n];
        for (col, (&rep, &osize)) in b.reps.iter().zip(&b.orbit_size).enumerate() {
            h.for_each_in_row(rep as usize, |s, x| {
                let r2 = self.rep_of[s] as usize;
                if let Some(row) = b.position(r2) {
                    let o2 = b.orbit_size[row];
                    let chi = b.label.character(self.element_of[s]);
                    m[row * n + col] += (osize as f64 / o2 as f64).sqrt() * chi * x;
                }
            });
        }
        m
    }

    /// Amplitude of sector index `s` in block basis vector `v`.
    #[inline]
    pub fn amplitude(&self, block: usize, v: &[f64], s: usize) -> f64 {
        self.amplitude_with(block, s, |p| v[p])
    }

    /// As [`Self::amplitude`], reading block components through `v`.
    #[inline]
    pub fn amplitude_with(&self, block: usize, s: usize, v: impl Fn(usize) -> f64) -> f64 {
        let b = &self.blocks[block];
        match b.position(self.rep_of[s] as usize) {
            Some(p) => v(p) * b.label.character(self.element_of[s]) / (b.orbit_size[p] as f64).sqrt(),
            None => 0.0,
        }
    }

    /// Components of a sector vector along the basis of `block`.
    pub fn project(&self, block: usize, psi: &[Complex64]) -> Vec<Complex64> {
        let b = &self.blocks[block];
        let mut out = vec![Complex64::default(); b.dim()];
        for (s, &x) in psi.iter().enumerate() {
            if let Some(p) = b.position(self.rep_of[s] as usize) {
                out[p] += x * (b.label.character(self.element_of[s]) / (b.orbit_size[p] as f64).sqrt());
            }
        }
        out
    }

    /// Adds the sector-basis image of block vector `v` to `out`.
    pub fn expand_add(&self, block: usize, v: &[Complex64], out: &mut [Complex64]) {
        let b = &self.blocks[block];
        for (s, o) in out.iter_mut().enumerate() {
            if let Some(p) = b.position(self.rep_of[s] as usize) {
                *o += v[p] * (b.label.character(self.element_of[s]) / (b.orbit_size[p] as f64).sqrt());
            }
        }
    }

    /// Expands a block vector into the full sector basis.
    pub fn expand(&self, block: usize, v: &[f64]) -> Vec<f64> {
        (0..self.sector.dim()).map(|s| self.amplitude(block, v, s)).collect()
    }
}

/// Reflection-resolved blocks of `sector`; fails when the graph breaks the reflection.
pub fn parity_sectors(sector: &BasisSector, graph: &CouplingGraph) -> Result<SymmetryBasis> {
    SymmetryBasis::new(sector, SymmetryGroup::reflection(graph)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::StorageMode;
    use crate::hilbert::binomial;
    use crate::model::{Boundary, OnsitePattern};

    #[test]
    fn two_site_parity_split() {
        let g = CouplingGraph::chain(2, Boundary::Open, -9.0, -6.0).unwrap();
        let s = BasisSector::new(2, 1).unwrap();
        let basis = parity_sectors(&s, &g).unwrap();
        let dims: Vec<_> = basis.blocks().iter().map(|b| (b.label.parity, b.dim())).collect();
        assert_eq!(dims, vec![(1, 1), (-1, 1)]);
        let plus = basis.expand(0, &[1.0]);
        let minus = basis.expand(1, &[1.0]);
        let r = 0.5f64.sqrt();
        assert!((plus[0] - r).abs() < 1e-15 && (plus[1] - r).abs() < 1e-15);
        assert!((minus[0] + minus[1]).abs() < 1e-15);
    }

    #[test]
    fn dimensions_are_complete() {
        let mut g = CouplingGraph::chain(18, Boundary::Open, -9.0, -6.0).unwrap();
        g.add_nnn_couplings(0.72).unwrap();
        let s = BasisSector::new(18, 9).unwrap();
        let basis = parity_sectors(&s, &g).unwrap();
        let total: usize = basis.blocks().iter().map(Block::dim).sum();
        assert_eq!(total as u64, binomial(18, 9));
        let both = SymmetryBasis::new(&s, SymmetryGroup::detect(&g, &s)).unwrap();
        assert_eq!(both.blocks().len(), 4);
        assert_eq!(
            both.blocks().iter().map(Block::dim).sum::<usize>() as u64,
            binomial(18, 9)
        );
    }

    #[test]
    fn cross_couplings_break_reflection() {
        let mut g = CouplingGraph::chain(12, Boundary::Open, -9.0, -6.0).unwrap();
        g.add_cross_couplings(0.3, 1.2, 5).unwrap();
        let s = BasisSector::new(12, 6).unwrap();
        assert!(matches!(parity_sectors(&s, &g), Err(Error::SymmetryAbsent(_))));
        let found = SymmetryGroup::detect(&g, &s);
        assert!(!found.reflection && found.flip);
        g.set_onsite(&OnsitePattern::Staircase(0.8)).unwrap();
        assert_eq!(SymmetryGroup::detect(&g, &s), SymmetryGroup::NONE);
    }

    #[test]
    fn blocks_are_orthonormal_and_invariant() {
        // the block matrices, mapped back, must reproduce H restricted to each block
        let mut g = CouplingGraph::chain(8, Boundary::Periodic, -9.0, -6.0).unwrap();
        g.add_nnn_couplings(0.72).unwrap();
        let s = BasisSector::new(8, 4).unwrap();
        let h = SparseHamiltonian::assemble(&g, &s, StorageMode::Explicit).unwrap();
        let basis = SymmetryBasis::new(&s, SymmetryGroup::detect(&g, &s)).unwrap();
        assert_eq!(basis.blocks().len(), 4);
        let mut all = Vec::new();
        for (k, b) in basis.blocks().iter().enumerate() {
            let n = b.dim();
            let vecs: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    let mut e = vec![0.0; n];
                    e[i] = 1.0;
                    basis.expand(k, &e)
                })
                .collect();
            let m = basis.block_matrix(&h, k);
            for i in 0..n {
                let hv = h.apply(&vecs[i]).unwrap();
                for j in 0..n {
                    let direct: f64 = vecs[j].iter().zip(&hv).map(|(a, b)| a * b).sum();
                    assert!((direct - m[j * n + i]).abs() < 1e-12);
                }
            }
            all.extend(vecs);
        }
        assert_eq!(all.len(), s.dim());
        for i in 0..all.len() {
            for j in 0..all.len() {
                let d: f64 = all[i].iter().zip(&all[j]).map(|(a, b)| a * b).sum();
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }
}
