//! Fixed-photon-number sectors of an `L`-qubit register.
//!
//! A basis state is an `L`-bit occupation word: bit `i` is the occupation of
//! qubit `i` (0-indexed). States inside a sector are ordered by the numeric
//! value of the word, which makes the combinatorial number system a dense,
//! monotone ranking:
//!
//! ```text
//! rank(bits) = Σ_k C(p_k, k)    p_1 < p_2 < ... the set bit positions
//! ```

use std::sync::Arc;

use crate::error::{Error, Result};

/// Largest register handled by [`BasisSector`].
pub const MAX_SITES: usize = 30;

/// Sectors larger than this are enumerated lazily instead of tabulated.
pub const LAZY_THRESHOLD: usize = 10_000_000;

/// Largest subsystem accepted by [`SubsystemMap`].
pub const MAX_SUBSYSTEM: usize = 12;

const TABLE: usize = MAX_SITES + 1;

const fn binomial_table() -> [[u64; TABLE]; TABLE] {
    let mut t = [[0u64; TABLE]; TABLE];
    let mut n = 0;
    while n < TABLE {
        t[n][0] = 1;
        let mut k = 1;
        while k <= n {
            t[n][k] = t[n - 1][k - 1] + if k < n { t[n - 1][k] } else { 0 };
            k += 1;
        }
        n += 1;
    }
    t
}

static BINOMIAL: [[u64; TABLE]; TABLE] = binomial_table();

/// `C(n, k)` for `n ≤ 30`; zero when `k > n`.
#[inline]
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n || n > MAX_SITES {
        return 0;
    }
    BINOMIAL[n][k]
}

/// Rank of a word among all words with the same popcount (colex order).
#[inline]
pub(crate) fn colex_rank(mut bits: u64) -> u64 {
    let mut rank = 0;
    let mut k = 1;
    while bits != 0 {
        let p = bits.trailing_zeros() as usize;
        rank += BINOMIAL[p][k];
        bits &= bits - 1;
        k += 1;
    }
    rank
}

/// Inverse of [`colex_rank`] for words of `width` bits with `ones` set bits.
pub(crate) fn colex_unrank(width: usize, mut ones: usize, mut rank: u64) -> u64 {
    let mut bits = 0u64;
    for p in (0..width).rev() {
        if ones == 0 {
            break;
        }
        let c = BINOMIAL[p][ones];
        if rank >= c {
            rank -= c;
            bits |= 1 << p;
            ones -= 1;
        }
    }
    bits
}

/// Next larger word with the same popcount (Gosper's hack).
#[inline]
pub(crate) fn next_combination(v: u64) -> u64 {
    let c = v & v.wrapping_neg();
    let r = v + c;
    (((r ^ v) >> 2) / c) | r
}

/// The `C(L, N)` computational basis states with exactly `N` photons.
#[derive(Clone, Debug)]
pub struct BasisSector {
    sites: usize,
    photons: usize,
    dim: usize,
    states: Option<Arc<[u64]>>,
}

impl BasisSector {
    /// Builds the sector. Sectors up to [`LAZY_THRESHOLD`] states keep a
    /// lookup table of occupation words; larger ones are enumerated on demand.
    pub fn new(sites: usize, photons: usize) -> Result<Self> {
        if sites > MAX_SITES {
            return Err(Error::Capacity(format!(
                "{sites} sites requested, at most {MAX_SITES} supported"
            )));
        }
        if photons > sites {
            return Err(Error::Domain(format!("{photons} photons do not fit in {sites} sites")));
        }
        let dim = usize::try_from(binomial(sites, photons))
            .map_err(|_| Error::Capacity("sector dimension overflows usize".into()))?;
        let states = (dim <= LAZY_THRESHOLD).then(|| {
            let mut v = Vec::with_capacity(dim);
            let mut s = first_state(photons);
            for _ in 0..dim {
                v.push(s);
                if photons > 0 {
                    s = next_combination(s);
                }
            }
            Arc::from(v)
        });
        Ok(Self {
            sites,
            photons,
            dim,
            states,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn photons(&self) -> usize {
        self.photons
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Whether the occupation words are held in memory.
    pub fn is_materialized(&self) -> bool {
        self.states.is_some()
    }

    pub fn contains(&self, bits: u64) -> bool {
        bits >> self.sites == 0 && bits.count_ones() as usize == self.photons
    }

    /// Dense index of `bits`; strictly increasing in the numeric value.
    pub fn rank(&self, bits: u64) -> Result<usize> {
        if !self.contains(bits) {
            return Err(Error::Domain(format!(
                "state {bits:#b} is not in the (L={}, N={}) sector",
                self.sites, self.photons
            )));
        }
        Ok(colex_rank(bits) as usize)
    }

    /// Occupation word at `index`.
    pub fn unrank(&self, index: usize) -> Result<u64> {
        if index >= self.dim {
            return Err(Error::Domain(format!(
                "index {index} out of range for sector of dimension {}",
                self.dim
            )));
        }
        Ok(self.state(index))
    }

    /// Unchecked variant of [`unrank`](Self::unrank) for hot loops.
    #[inline]
    pub fn state(&self, index: usize) -> u64 {
        debug_assert!(index < self.dim);
        match &self.states {
            Some(table) => table[index],
            None => colex_unrank(self.sites, self.photons, index as u64),
        }
    }

    /// Iterates the sector in increasing order without allocating.
    pub fn iter(&self) -> SectorIter {
        self.iter_from(0)
    }

    /// Iterates starting at `index`.
    pub fn iter_from(&self, index: usize) -> SectorIter {
        let next = if index < self.dim { self.state(index) } else { 0 };
        SectorIter {
            next,
            remaining: self.dim.saturating_sub(index),
            photons: self.photons,
        }
    }

    /// Decomposes every sector index with respect to the subsystem `sites_a`.
    pub fn subsystem_map(&self, sites_a: &[usize]) -> Result<SubsystemMap> {
        SubsystemMap::new(self, sites_a)
    }
}

fn first_state(photons: usize) -> u64 {
    if photons == 0 {
        0
    } else {
        (1u64 << photons) - 1
    }
}

/// Lazy enumeration of a sector, see [`BasisSector::iter`].
pub struct SectorIter {
    next: u64,
    remaining: usize,
    photons: usize,
}

impl Iterator for SectorIter {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        if self.remaining == 0 {
            return None;
        }
        let s = self.next;
        self.remaining -= 1;
        if self.remaining > 0 && self.photons > 0 {
            self.next = next_combination(s);
        }
        Some(s)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl ExactSizeIterator for SectorIter {}

/// Copies the bits at `positions` into a compact word (bit `k` ← bit `positions[k]`).
#[inline]
pub fn gather_bits(bits: u64, positions: &[usize]) -> u64 {
    positions
        .iter()
        .enumerate()
        .fold(0, |acc, (k, &p)| acc | (((bits >> p) & 1) << k))
}

/// Index decomposition `sector index → (a, b)` for a bipartition `A ∪ B`.
///
/// `a` is the `2^|A|` local index of the `A` bits; `b` is the rank of the
/// complement configuration among complement words with the same photon
/// count, so `b` is dense within each photon-count class.
#[derive(Clone, Debug)]
pub struct SubsystemMap {
    sites_a: Vec<usize>,
    complement: Vec<usize>,
    photons: usize,
    a_index: Vec<u32>,
    b_index: Vec<u32>,
}

impl SubsystemMap {
    fn new(sector: &BasisSector, sites_a: &[usize]) -> Result<Self> {
        if sites_a.len() > MAX_SUBSYSTEM {
            return Err(Error::Capacity(format!(
                "subsystem of {} sites exceeds the limit of {MAX_SUBSYSTEM}",
                sites_a.len()
            )));
        }
        let mut seen = 0u64;
        for &s in sites_a {
            if s >= sector.sites() {
                return Err(Error::Domain(format!(
                    "subsystem site {s} outside register of {} sites",
                    sector.sites()
                )));
            }
            if seen >> s & 1 == 1 {
                return Err(Error::Domain(format!("subsystem site {s} listed twice")));
            }
            seen |= 1 << s;
        }
        if sector.dim() > LAZY_THRESHOLD {
            return Err(Error::Capacity(format!(
                "subsystem maps need the full index table; dimension {} is above {LAZY_THRESHOLD}",
                sector.dim()
            )));
        }
        let complement: Vec<usize> = (0..sector.sites()).filter(|s| seen >> s & 1 == 0).collect();
        let (a_index, b_index) = sector
            .iter()
            .map(|bits| {
                let a = gather_bits(bits, sites_a) as u32;
                let b = colex_rank(gather_bits(bits, &complement)) as u32;
                (a, b)
            })
            .unzip();
        Ok(Self {
            sites_a: sites_a.to_vec(),
            complement,
            photons: sector.photons(),
            a_index,
            b_index,
        })
    }

    pub fn sites_a(&self) -> &[usize] {
        &self.sites_a
    }

    pub fn complement(&self) -> &[usize] {
        &self.complement
    }

    /// Local dimension `2^|A|`.
    pub fn local_dim(&self) -> usize {
        1 << self.sites_a.len()
    }

    /// `(a, b)` for a sector index.
    #[inline]
    pub fn split(&self, index: usize) -> (usize, usize) {
        (self.a_index[index] as usize, self.b_index[index] as usize)
    }

    pub fn len(&self) -> usize {
        self.a_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a_index.is_empty()
    }

    /// Number of complement configurations paired with `A` photon count `k`.
    pub fn complement_class_size(&self, k: usize) -> usize {
        if k > self.photons {
            return 0;
        }
        binomial(self.complement.len(), self.photons - k) as usize
    }

    /// `(A configurations, complement configurations)` for each `A` photon count.
    pub fn class_sizes(&self) -> Vec<(usize, usize)> {
        (0..=self.sites_a.len())
            .map(|k| (binomial(self.sites_a.len(), k) as usize, self.complement_class_size(k)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_sector_listing() {
        let s = BasisSector::new(4, 2).unwrap();
        assert_eq!(s.dim(), 6);
        let all: Vec<u64> = s.iter().collect();
        assert_eq!(all, vec![0b0011, 0b0101, 0b0110, 0b1001, 0b1010, 0b1100]);
        assert_eq!(s.rank(0b0011).unwrap(), 0);
        assert_eq!(s.rank(0b1100).unwrap(), 5);
    }

    #[test]
    fn empty_and_full_sectors() {
        let s = BasisSector::new(5, 0).unwrap();
        assert_eq!(s.dim(), 1);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0]);
        let f = BasisSector::new(5, 5).unwrap();
        assert_eq!(f.iter().collect::<Vec<_>>(), vec![0b11111]);
        assert_eq!(f.rank(0b11111).unwrap(), 0);
    }

    #[test]
    fn largest_sector_is_lazy() {
        let s = BasisSector::new(30, 15).unwrap();
        assert_eq!(s.dim(), 155_117_520);
        assert!(!s.is_materialized());
        let last = s.unrank(s.dim() - 1).unwrap();
        assert_eq!(last, ((1u64 << 15) - 1) << 15);
        assert_eq!(s.rank(last).unwrap(), s.dim() - 1);
    }

    #[test]
    fn capacity_and_domain_errors() {
        assert!(matches!(BasisSector::new(31, 3), Err(Error::Capacity(_))));
        assert!(matches!(BasisSector::new(4, 5), Err(Error::Domain(_))));
        let s = BasisSector::new(4, 2).unwrap();
        assert!(matches!(s.rank(0b0111), Err(Error::Domain(_))));
        assert!(matches!(s.rank(0b1_0001), Err(Error::Domain(_))));
        assert!(s.unrank(6).is_err());
    }

    #[test]
    fn rank_matches_sorted_enumeration() {
        // brute force: filter all 2^6 words, sort, compare positions
        let s = BasisSector::new(6, 3).unwrap();
        let mut brute: Vec<u64> = (0u64..64).filter(|b| b.count_ones() == 3).collect();
        brute.sort_unstable();
        for (pos, &b) in brute.iter().enumerate() {
            assert_eq!(s.rank(b).unwrap(), pos);
        }
        assert_eq!(
            s.rank(0b101010).unwrap(),
            brute.iter().position(|&b| b == 0b101010).unwrap()
        );
    }

    #[test]
    fn roundtrip_half_filled_sixteen() {
        let s = BasisSector::new(16, 8).unwrap();
        assert_eq!(s.dim(), 12870);
        for (i, bits) in s.iter().enumerate() {
            assert_eq!(s.rank(bits).unwrap(), i);
            assert_eq!(s.unrank(i).unwrap(), bits);
        }
    }

    #[test]
    fn subsystem_two_sites_one_photon() {
        let s = BasisSector::new(2, 1).unwrap();
        let m = s.subsystem_map(&[0]).unwrap();
        let pairs: Vec<_> = (0..s.dim()).map(|i| m.split(i)).collect();
        // 01 -> a=1, 10 -> a=0; complement class sizes are one
        assert_eq!(pairs, vec![(1, 0), (0, 0)]);
    }

    #[test]
    fn subsystem_class_sizes_count_the_sector() {
        let s = BasisSector::new(4, 2).unwrap();
        let m = s.subsystem_map(&[0, 1]).unwrap();
        assert_eq!(m.class_sizes(), vec![(1, 1), (2, 2), (1, 1)]);
        let total: usize = m.class_sizes().iter().map(|(a, b)| a * b).sum();
        assert_eq!(total, 6);
    }

    #[test]
    fn subsystem_errors() {
        let s = BasisSector::new(16, 8).unwrap();
        let big: Vec<usize> = (0..13).collect();
        assert!(matches!(s.subsystem_map(&big), Err(Error::Capacity(_))));
        assert!(matches!(s.subsystem_map(&[1, 1]), Err(Error::Domain(_))));
        assert!(matches!(s.subsystem_map(&[16]), Err(Error::Domain(_))));
    }

    proptest! {
        #[test]
        fn rank_is_strictly_monotone(l in 1usize..=14, frac in 0.0f64..=1.0) {
            let n = ((l as f64) * frac).round() as usize;
            let s = BasisSector::new(l, n).unwrap();
            let ranks: Vec<usize> = s.iter().map(|b| s.rank(b).unwrap()).collect();
            prop_assert_eq!(ranks, (0..s.dim()).collect::<Vec<_>>());
        }

        #[test]
        fn class_products_sum_to_binomial(l in 1usize..=14, n_frac in 0.0f64..=1.0, mask in any::<u16>()) {
            let n = ((l as f64) * n_frac).round() as usize;
            let sites: Vec<usize> = (0..l).filter(|i| mask >> i & 1 == 1).take(MAX_SUBSYSTEM).collect();
            let s = BasisSector::new(l, n).unwrap();
            let m = s.subsystem_map(&sites).unwrap();
            let total: usize = m.class_sizes().iter().map(|(a, b)| a * b).sum();
            prop_assert_eq!(total as u64, binomial(l, n));
            // injective and photon conserving
            let mut seen = std::collections::HashSet::new();
            for i in 0..s.dim() {
                let (a, b) = m.split(i);
                let ka = (a as u64).count_ones() as usize;
                prop_assert!(b < m.complement_class_size(ka));
                prop_assert!(seen.insert((a, b)));
                let bits = s.state(i);
                prop_assert_eq!(ka + (gather_bits(bits, m.complement())).count_ones() as usize, n);
            }
        }
    }
}
