use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use scarsim::analysis::{
    first_revival, fourier_amplitude, imbalance_from_towers, imbalance_spectral_oracle, leading_tower_term, peak_at,
    scan_sources, scan_states, ProbeFrequency, ScanConfig,
};
use scarsim::dynamics::{entropy_vn, observe, reduced_density_matrix, time_grid, KrylovOptions, ObservableSet};
use scarsim::hamiltonian::{SparseHamiltonian, StorageMode};
use scarsim::hilbert::BasisSector;
use scarsim::model::{Boundary, CouplingGraph, EdgeKind};
use scarsim::spectral::{detect_towers, diagonalize_with, overlaps, TowerPolicy};
use scarsim::states::{pi_prime_state, pi_state};
use scarsim::symmetry::SymmetryGroup;
use scarsim::{frequency_mhz, Complex64};

const SEED: u64 = 2024;

fn scar_chain(l: usize) -> (CouplingGraph, BasisSector, SparseHamiltonian) {
    let mut g = CouplingGraph::chain(l, Boundary::Open, -9.0, -6.0).unwrap();
    g.add_cross_couplings(0.3, 1.2, SEED).unwrap();
    let s = BasisSector::new(l, l / 2).unwrap();
    let h = SparseHamiltonian::assemble(&g, &s, StorageMode::Auto).unwrap();
    (g, s, h)
}

fn dense(h: &SparseHamiltonian) -> DMatrix<f64> {
    let s = h.sector();
    DMatrix::from_fn(s.dim(), s.dim(), |a, b| h.matrix_element(s.state(a), s.state(b)))
}

#[test]
fn random_vectors_reach_the_page_value() {
    let s = BasisSector::new(14, 7).unwrap();
    let map = s.subsystem_map(&(0..7).collect::<Vec<_>>()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let samples = 20;
    let mean = (0..samples)
        .map(|_| {
            let mut v: Vec<Complex64> = (0..s.dim())
                .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
                .collect();
            let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            entropy_vn(&reduced_density_matrix(&v, &map).unwrap())
        })
        .sum::<f64>()
        / samples as f64;
    let page = 7.0 * std::f64::consts::LN_2 - 0.5;
    assert!((mean - page).abs() <= 0.05 * page, "mean {mean}, page {page}");
}

#[test]
fn symmetry_blocks_concatenate_to_the_full_spectrum() {
    for (l, nnn) in [(8, false), (10, false), (10, true)] {
        let mut g = CouplingGraph::chain(l, Boundary::Open, -9.0, -6.0).unwrap();
        if nnn {
            g.add_nnn_couplings(0.72).unwrap();
        }
        let s = BasisSector::new(l, l / 2).unwrap();
        let h = SparseHamiltonian::assemble(&g, &s, StorageMode::Auto).unwrap();
        let group = SymmetryGroup::detect(&g, &s);
        assert!(group.reflection);
        let resolved = diagonalize_with(&h, false, group).unwrap();
        let mut oracle: Vec<f64> = dense(&h).symmetric_eigenvalues().iter().copied().collect();
        oracle.sort_by(f64::total_cmp);
        let mut blocks: Vec<f64> = resolved.block_energies().iter().flatten().copied().collect();
        blocks.sort_by(f64::total_cmp);
        assert_eq!(blocks.len(), oracle.len());
        for (a, b) in blocks.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-10, "L={l}: {a} vs {b}");
        }
    }
}

#[test]
fn imbalance_peak_matches_tower_spacing() {
    let (g, s, h) = scar_chain(12);
    let pi = pi_state(12).unwrap();
    let times = time_grid(400.0, 1.0).unwrap();
    let series = observe(&h, pi, &times, KrylovOptions::default(), None, ObservableSet::GLOBAL).unwrap();
    let (f1, _) = fourier_amplitude(&times, &series.imbalance, 4000.0, "imbalance")
        .unwrap()
        .global_peak()
        .unwrap();
    let eig = diagonalize_with(&h, true, SymmetryGroup::detect(&g, &s)).unwrap();
    let towers = detect_towers(&overlaps(&eig, pi).unwrap(), eig.energies(), TowerPolicy::default()).unwrap();
    let de = frequency_mhz(towers.delta_e);
    assert!((f1 - de).abs() <= 0.05 * de, "f1 {f1} MHz, tower spacing {de} MHz");
}

#[test]
fn tower_sum_peaks_at_the_imbalance_frequency() {
    let (g, s, h) = scar_chain(12);
    let pi = pi_state(12).unwrap();
    let times = time_grid(400.0, 1.0).unwrap();
    let series = observe(&h, pi, &times, KrylovOptions::default(), None, ObservableSet::GLOBAL).unwrap();
    let full = fourier_amplitude(&times, &series.imbalance, 4000.0, "imbalance").unwrap();
    let (f1, _) = full.global_peak().unwrap();

    let eig = diagonalize_with(&h, true, SymmetryGroup::detect(&g, &s)).unwrap();
    let report = detect_towers(&overlaps(&eig, pi).unwrap(), eig.energies(), TowerPolicy::default()).unwrap();
    let weights: Vec<f64> = report.towers.iter().map(|t| t.weight).collect();
    let towers = fourier_amplitude(
        &times,
        &imbalance_from_towers(&weights, report.delta_e, 0.0, &times),
        4000.0,
        "towers",
    )
    .unwrap();
    let (f_towers, g_towers) = towers.global_peak().unwrap();
    assert!(
        (f_towers - f1).abs() <= 2.0 * towers.resolution_mhz(),
        "{f_towers} vs {f1} MHz"
    );

    // the single cosine carries the double sum at the fundamental
    let lead = fourier_amplitude(
        &times,
        &leading_tower_term(&weights, report.delta_e, 0.0, &times),
        4000.0,
        "lead",
    )
    .unwrap();
    let g_lead = peak_at(&lead, f1, 2.0).unwrap();
    assert!(
        (g_lead - g_towers).abs() <= 0.2 * g_towers,
        "lead {g_lead}, towers {g_towers}"
    );
}

#[test]
fn subsystem_fidelity_revives_with_the_fidelity() {
    for l in [10, 12, 14] {
        let (_, s, h) = scar_chain(l);
        let map = s.subsystem_map(&[0, 1, 2, 3]).unwrap();
        let times = time_grid(120.0, 0.5).unwrap();
        for state in [pi_state(l).unwrap(), pi_prime_state(l).unwrap()] {
            let r = observe(
                &h,
                state,
                &times,
                KrylovOptions::default(),
                Some(&map),
                ObservableSet::ALL,
            )
            .unwrap();
            let (kf, _) = first_revival(&r.fidelity).unwrap();
            let (ka, _) = first_revival(&r.subsystem_fidelity).unwrap();
            assert!(
                kf.abs_diff(ka) <= 1,
                "L={l}: F peaks at {}, F_A at {}",
                times[kf],
                times[ka]
            );
        }
    }
}

#[test]
fn trajectory_imbalance_equals_spectral_oracle() {
    let (g, s, h) = scar_chain(8);
    let eig = diagonalize_with(&h, true, SymmetryGroup::detect(&g, &s)).unwrap();
    let times = time_grid(200.0, 0.5).unwrap();
    let opts = KrylovOptions {
        tol: 1e-12,
        ..KrylovOptions::default()
    };
    for state in [pi_state(8).unwrap(), 0b0000_1111, 0b0101_1010] {
        let traj = observe(&h, state, &times, opts, None, ObservableSet::GLOBAL).unwrap();
        let oracle = imbalance_spectral_oracle(&eig, state, &times).unwrap();
        for (a, b) in traj.imbalance.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }
}

#[test]
fn scans_are_reproducible() {
    let (_, s, h) = scar_chain(10);
    let named = vec![("pi".to_string(), pi_state(10).unwrap())];
    let config = ScanConfig {
        times: time_grid(200.0, 1.0).unwrap(),
        pad_ns: 4000.0,
        halfwidth_mhz: 2.0,
        probe: ProbeFrequency::PeakOf(named[0].1),
        separation_factor: 10.0,
        krylov: KrylovOptions::default(),
    };
    let a = scan_states(&h, &scan_sources(&s, &named, 16, SEED).unwrap(), &config).unwrap();
    let b = scan_states(&h, &scan_sources(&s, &named, 16, SEED).unwrap(), &config).unwrap();
    assert_eq!(a, b);
    for (x, y) in a.records.iter().zip(&b.records) {
        assert_eq!(x.g2.map(f64::to_bits), y.g2.map(f64::to_bits));
    }
}

fn dimer_vertices(l: usize) -> Vec<u64> {
    (0..1u64 << (l / 2))
        .map(|choice| (0..l / 2).map(|k| 1u64 << (2 * k + ((choice >> k) & 1) as usize)).sum())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cross_couplings_never_join_hypercube_vertices(half in 2usize..=10, seed in any::<u64>()) {
        let l = 2 * half;
        let mut g = CouplingGraph::chain(l, Boundary::Open, -9.0, -6.0).unwrap();
        g.add_cross_couplings(0.3, 1.2, seed).unwrap();
        let vertices: std::collections::HashSet<u64> = dimer_vertices(l).into_iter().collect();
        for e in g.edges().iter().filter(|e| e.kind == EdgeKind::Cross) {
            let mask = (1u64 << e.i) | (1u64 << e.j);
            for &v in &vertices {
                if (v & mask).count_ones() == 1 {
                    prop_assert!(!vertices.contains(&(v ^ mask)), "edge ({}, {})", e.i, e.j);
                }
            }
        }
    }

    #[test]
    fn matvec_matches_dense_oracle(half in 2usize..=5, fa in -12.0f64..-1.0, fe in -12.0f64..-1.0, seed in any::<u64>()) {
        let l = 2 * half;
        let mut g = CouplingGraph::chain(l, Boundary::Open, fa, fe).unwrap();
        g.add_cross_couplings(0.3, 1.2, seed).unwrap();
        let s = BasisSector::new(l, half).unwrap();
        let free = SparseHamiltonian::assemble(&g, &s, StorageMode::MatrixFree).unwrap();
        let m = dense(&free);
        prop_assert!((&m - m.transpose()).amax() == 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..s.dim()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let got = free.apply(&v).unwrap();
        let want = &m * DMatrix::from_column_slice(s.dim(), 1, &v);
        for (a, b) in got.iter().zip(want.iter()) {
            prop_assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn overlaps_are_a_distribution(half in 2usize..=5, seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let l = 2 * half;
        let mut g = CouplingGraph::chain(l, Boundary::Open, -9.0, -6.0).unwrap();
        g.add_cross_couplings(0.3, 1.2, seed).unwrap();
        let s = BasisSector::new(l, half).unwrap();
        let h = SparseHamiltonian::assemble(&g, &s, StorageMode::Auto).unwrap();
        let eig = diagonalize_with(&h, true, SymmetryGroup::NONE).unwrap();
        let alpha = s.state(pick.index(s.dim()));
        let o = overlaps(&eig, alpha).unwrap();
        prop_assert!(o.iter().all(|&x| x >= 0.0));
        prop_assert!((o.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let mean: f64 = o.iter().zip(eig.energies()).map(|(w, e)| w * e).sum();
        prop_assert!((mean - h.diagonal(alpha)).abs() < 1e-9);
    }
}
