//! The six run commands.

use rayon::prelude::*;
use serde_json::{json, Value};

use scarsim::analysis::{
    fidelity_density, first_revival, fourier_amplitude, hypercube_report, imbalance_spectrum, peak_at, scan_sources,
    scan_states, ProbeFrequency, ScanConfig,
};
use scarsim::dynamics::{observe, ObservableSeries, ObservableSet};
use scarsim::frequency_mhz;
use scarsim::model::{effective_from_circuit, read_device_csv, write_edge_csv};
use scarsim::spectral::{
    density_of_states, detect_towers, diagonalize_with, eigenstate_entropies, overlaps, sector_resolved_gap_ratio,
    TowerPolicy,
};
use scarsim::states::{bits_hex, occupation_string};
use scarsim::symmetry::SymmetryGroup;

use crate::config::{ConfigError, Geometry, NamedState, Run, SymmetryChoice};
use crate::output::{float, Outputs, Stages};

/// Shared state of one command invocation.
pub struct Context<'a> {
    pub run: &'a Run,
    pub out: &'a mut Outputs,
    pub stages: &'a mut Stages,
    /// Extra manifest fields.
    pub notes: &'a mut serde_json::Map<String, Value>,
}

fn label_file(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect()
}

pub fn spectrum(cx: &mut Context) -> anyhow::Result<()> {
    let run = cx.run;
    let cfg = &run.config.spectrum;
    let graph = run.graph()?;
    let sector = run.sector(&graph)?;
    let target = run.state_or_first(cfg.overlap_state.as_deref(), &sector)?;
    let h = cx.stages.time("assemble", || run.hamiltonian(&graph, &sector))?;
    let group = match cfg.symmetry {
        SymmetryChoice::Auto => SymmetryGroup::detect(&graph, &sector),
        SymmetryChoice::None => SymmetryGroup::NONE,
    };
    let eig = cx
        .stages
        .time("diagonalize", || Ok(diagonalize_with(&h, true, group)?))?;
    let c2 = overlaps(&eig, target.bits)?;
    let l = graph.sites();
    let half: Vec<usize> = (0..l / 2).collect();
    let entropies = if cfg.entropies && !half.is_empty() {
        Some(cx.stages.time("entropies", || Ok(eigenstate_entropies(&eig, &half)?))?)
    } else {
        None
    };
    // too few levels for statistics is reported, not fatal
    let gap = match sector_resolved_gap_ratio(&eig, cfg.discard_fraction) {
        Ok(r) => {
            json!({"mean": r.mean, "count": r.count, "excluded_degenerate": r.excluded, "discard_fraction": cfg.discard_fraction})
        }
        Err(scarsim::Error::Domain(msg)) => {
            json!({"mean": null, "reason": msg, "discard_fraction": cfg.discard_fraction})
        }
        Err(e) => return Err(e.into()),
    };
    let policy = TowerPolicy {
        threshold_factor: cfg.tower_threshold_factor,
        merge_fraction: cfg.tower_merge_fraction,
        min_towers: cfg.tower_min_count,
    };
    let towers = detect_towers(&c2, eig.energies(), policy)?;
    let dos = density_of_states(eig.energies(), cfg.dos_bins)?;

    let overlap_col = format!("overlap_{}", label_file(&target.label));
    let header = ["n", "E_over_2pi_MHz", "parity", "flip", "S_half", overlap_col.as_str()];
    let rows = (0..eig.len()).map(|n| {
        let lab = eig.label(n);
        vec![
            n.to_string(),
            float(frequency_mhz(eig.energies()[n])),
            lab.parity.to_string(),
            lab.flip.to_string(),
            entropies.as_ref().map_or(String::new(), |s| float(s[n])),
            float(c2[n]),
        ]
    });
    cx.out.csv("spectrum.csv", &header, rows)?;
    cx.out.csv(
        "towers.csv",
        &["tower", "E_over_2pi_MHz", "weight", "members", "member_indices"],
        towers.towers.iter().enumerate().map(|(k, t)| {
            vec![
                k.to_string(),
                float(frequency_mhz(t.energy)),
                float(t.weight),
                t.members.len().to_string(),
                t.members.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(";"),
            ]
        }),
    )?;
    cx.out.csv(
        "dos.csv",
        &["bin_lo_MHz", "bin_hi_MHz", "count"],
        dos.counts.iter().enumerate().map(|(k, c)| {
            vec![
                float(frequency_mhz(dos.edges[k])),
                float(frequency_mhz(dos.edges[k + 1])),
                c.to_string(),
            ]
        }),
    )?;
    let blocks: Vec<Value> = eig
        .symmetry()
        .blocks()
        .iter()
        .map(|b| json!({"label": b.label.to_string(), "dim": b.dim()}))
        .collect();
    cx.out.json(
        "summary.json",
        &json!({
            "sites": l,
            "photons": sector.photons(),
            "dim": sector.dim(),
            "blocks": blocks,
            "overlap_state": {"label": target.label, "bits": bits_hex(target.bits), "occupation": occupation_string(target.bits, l)},
            "gap_ratio": gap,
            "towers": {
                "detected": towers.detected,
                "count": towers.count(),
                "spacing_MHz": frequency_mhz(towers.delta_e),
                "uniformity_residual": towers.uniformity_residual,
                "selected": towers.selected.len(),
                "threshold": towers.threshold,
                "policy": {"threshold_factor": policy.threshold_factor, "merge_fraction": policy.merge_fraction, "min_towers": policy.min_towers},
            },
            "degenerate_pairs": eig.degenerate_pairs(),
            "dos_bins": cfg.dos_bins,
        }),
    )?;
    Ok(())
}

fn trajectory_rows(series: &ObservableSeries) -> impl Iterator<Item = Vec<String>> + '_ {
    (0..series.times.len()).map(move |k| {
        let mut row = vec![
            float(series.times[k]),
            float(series.imbalance[k]),
            float(series.fidelity[k]),
            float(series.subsystem_fidelity[k]),
            float(series.subsystem_entropy[k]),
        ];
        row.extend(series.populations[k].iter().map(|&n| float(n)));
        row
    })
}

pub fn evolve(cx: &mut Context) -> anyhow::Result<()> {
    let run = cx.run;
    let graph = run.graph()?;
    let sector = run.sector(&graph)?;
    let states = run.initial_states(&sector)?;
    let times = run.times()?;
    let sites_a = run.subsystem(graph.sites())?;
    let map = sector.subsystem_map(&sites_a)?;
    let h = cx.stages.time("assemble", || run.hamiltonian(&graph, &sector))?;
    let opts = run.config.krylov.options();
    let results = cx.stages.time("evolve", || {
        states
            .par_iter()
            .map(|s| Ok(observe(&h, s.bits, &times, opts, Some(&map), ObservableSet::ALL)?))
            .collect::<anyhow::Result<Vec<_>>>()
    })?;
    let l = graph.sites();
    let mut header: Vec<String> = ["t_ns", "I", "F", "F_A", "S_A"].iter().map(|s| s.to_string()).collect();
    header.extend((0..l).map(|i| format!("n_{i}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut summaries = Vec::new();
    for (state, series) in states.iter().zip(&results) {
        let name = if states.len() == 1 {
            "trajectory.csv".to_string()
        } else {
            format!("trajectory_{}.csv", label_file(&state.label))
        };
        cx.out.csv(&name, &header, trajectory_rows(series))?;
        summaries.push(state_summary(state, series, &times, l, &name)?);
    }
    cx.out.json(
        "summary.json",
        &json!({"sites": l, "dim": sector.dim(), "subsystem": sites_a, "states": summaries}),
    )?;
    Ok(())
}

fn state_summary(
    s: &NamedState,
    series: &ObservableSeries,
    times: &[f64],
    l: usize,
    file: &str,
) -> anyhow::Result<Value> {
    let revival = first_revival(&series.fidelity)
        .map(|(k, f)| json!({"t_ns": times[k], "F": f, "fidelity_density": fidelity_density(f, l).ok()}));
    let subsystem = first_revival(&series.subsystem_fidelity).map(|(k, f)| json!({"t_ns": times[k], "F_A": f}));
    let peak = if times.len() >= 2 {
        let pad = scarsim::analysis::DEFAULT_PAD_NS.max(times.len() as f64 * (times[1] - times[0]));
        fourier_amplitude(times, &series.imbalance, pad, &s.label)?
            .global_peak()
            .map(|(f, a)| json!({"f_MHz": f, "amplitude": a}))
    } else {
        None
    };
    Ok(json!({
        "label": s.label,
        "bits": bits_hex(s.bits),
        "occupation": occupation_string(s.bits, l),
        "file": file,
        "first_revival": revival,
        "first_subsystem_revival": subsystem,
        "imbalance_peak": peak,
        "krylov": {"bases": series.stats.bases, "matvecs": series.stats.matvecs, "halvings": series.stats.halvings, "max_error": series.stats.max_error},
    }))
}

pub fn scan(cx: &mut Context) -> anyhow::Result<()> {
    let run = cx.run;
    let cfg = &run.config.scan;
    let graph = run.graph()?;
    let sector = run.sector(&graph)?;
    let named: Vec<(String, u64)> = run
        .initial_states(&sector)?
        .into_iter()
        .map(|s| (s.label, s.bits))
        .collect();
    let reference = run.state_or_first(cfg.reference.as_deref(), &sector)?;
    let probe = match cfg.probe_mhz {
        Some(f) => ProbeFrequency::Fixed(f),
        None => ProbeFrequency::PeakOf(reference.bits),
    };
    let sources = scan_sources(&sector, &named, cfg.random_count, run.config.seed)?;
    let h = cx.stages.time("assemble", || run.hamiltonian(&graph, &sector))?;
    let scan_cfg = ScanConfig {
        times: run.times()?,
        pad_ns: cfg.pad_ns,
        halfwidth_mhz: cfg.halfwidth_mhz,
        probe,
        separation_factor: cfg.separation_factor,
        krylov: run.config.krylov.options(),
    };
    let result = cx.stages.time("scan", || Ok(scan_states(&h, &sources, &scan_cfg)?))?;
    let mut records = result.records.clone();
    records.sort_by_key(|r| r.rank);
    let l = graph.sites();
    cx.out.csv(
        "scan.csv",
        &[
            "state_bits_hex",
            "g2_at_f1",
            "rank",
            "label",
            "occupation",
            "scar_candidate",
        ],
        records.iter().map(|r| {
            vec![
                bits_hex(r.bits),
                r.g2.map_or(String::new(), float),
                r.rank.to_string(),
                r.label.clone(),
                occupation_string(r.bits, l),
                r.is_scar_candidate.to_string(),
            ]
        }),
    )?;
    let failures: Vec<Value> = records
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| json!({"label": r.label, "error": e})))
        .collect();
    cx.out.json(
        "summary.json",
        &json!({
            "f1_MHz": result.f1_mhz,
            "reference": reference.label,
            "threshold_g2": result.threshold,
            "random_count": cfg.random_count,
            "named": named.iter().map(|(n, _)| n).collect::<Vec<_>>(),
            "scar_candidates": records.iter().filter(|r| r.is_scar_candidate).map(|r| r.label.clone()).collect::<Vec<_>>(),
            "failures": failures,
        }),
    )?;
    Ok(())
}

pub fn sweep(cx: &mut Context) -> anyhow::Result<()> {
    let run = cx.run;
    let m = &run.config.model;
    if m.geometry == Geometry::Circuit {
        return Err(ConfigError("sweep needs a chain or comb geometry".into()).into());
    }
    let cfg = &run.config.scan;
    let times = run.times()?;
    let opts = run.config.krylov.options();
    let base = run.graph()?;
    let sector = run.sector(&base)?;
    let state = run.state_or_first(None, &sector)?;
    let rows = cx.stages.time("sweep", || {
        run.config
            .sweep
            .ratios
            .par_iter()
            .map(|&ratio| {
                let f_intra = ratio * m.f_inter_mhz;
                let g = run.graph_with(f_intra, m.sites, m.n_dimers)?;
                let h = run.hamiltonian(&g, &sector)?;
                let sp = imbalance_spectrum(&h, state.bits, &times, cfg.pad_ns, opts)?;
                let (f1, _) = sp
                    .global_peak()
                    .ok_or_else(|| ConfigError("time grid too short for a spectrum".into()))?;
                let gpk = peak_at(&sp, f1, cfg.halfwidth_mhz)?;
                Ok(vec![
                    float(ratio),
                    float(f_intra),
                    float(m.f_inter_mhz),
                    float(f1),
                    float(gpk),
                    float(gpk * sp.padded_convention_factor()),
                ])
            })
            .collect::<anyhow::Result<Vec<_>>>()
    })?;
    cx.out.csv(
        "sweep.csv",
        &[
            "ratio",
            "f_intra_MHz",
            "f_inter_MHz",
            "f1_MHz",
            "g_at_f1",
            "g_padded_convention",
        ],
        rows,
    )?;
    cx.notes.insert("sweep_state".into(), json!(state.label));
    Ok(())
}

pub fn hypercube(cx: &mut Context) -> anyhow::Result<()> {
    let run = cx.run;
    let m = &run.config.model;
    if m.geometry == Geometry::Circuit {
        return Err(ConfigError("hypercube needs a chain or comb geometry".into()).into());
    }
    let cfg = &run.config.hypercube;
    let mut records = Vec::new();
    cx.stages.time("hypercube", || {
        for &ratio in &cfg.ratios {
            for &n in &cfg.n_dimers {
                let g = run.graph_with(ratio * m.f_inter_mhz, Some(2 * n), Some(n))?;
                let sector = scarsim::hilbert::BasisSector::new(g.sites(), n)?;
                let rep = hypercube_report(&g, &sector)?;
                let to_mhz = |v: &std::collections::BTreeMap<String, f64>| -> serde_json::Map<String, Value> {
                    v.iter().map(|(k, x)| (k.clone(), json!(frequency_mhz(*x)))).collect()
                };
                records.push(json!({
                    "coupling_ratio": ratio,
                    "N": n,
                    "sites": g.sites(),
                    "vertices": rep.vertices,
                    "delta": frequency_mhz(rep.delta),
                    "gamma": frequency_mhz(rep.gamma),
                    "delta_by_category": to_mhz(&rep.delta_by_category),
                    "gamma_by_category": to_mhz(&rep.gamma_by_category),
                    "ratio": rep.ratio,
                }));
            }
        }
        Ok(())
    })?;
    cx.out.json(
        "hypercube.json",
        &json!({"units": "MHz (J/2pi)", "f_inter_MHz": m.f_inter_mhz, "records": records}),
    )?;
    Ok(())
}

pub fn sw(cx: &mut Context) -> anyhow::Result<()> {
    let run = cx.run;
    let Some(circ) = run.config.model.circuit.as_ref() else {
        return Err(ConfigError("sw needs a [model.circuit] section".into()).into());
    };
    let resolve = |p: &std::path::Path| {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            run.base_dir.join(p)
        }
    };
    let table = read_device_csv(&resolve(&circ.qubits_csv), &resolve(&circ.couplers_csv))?;
    let g = cx.stages.time("reduce", || {
        Ok(effective_from_circuit(&table.to_circuit(Some(circ.interaction_ghz))?)?)
    })?;
    write_edge_csv(&cx.out.path("effective_edges.csv"), g.edges())?;
    cx.out.record("effective_edges.csv");
    let frame = circ.interaction_ghz * 1e3;
    cx.out.csv(
        "onsite.csv",
        &["site", "qubit_label", "f_MHz", "detuning_MHz"],
        g.onsite().iter().enumerate().map(|(i, &f)| {
            vec![
                i.to_string(),
                table.qubits[i].qubit_label.clone(),
                float(f),
                float(f - frame),
            ]
        }),
    )?;
    let (lo, hi) = g.edges().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), e| {
        (a.min(e.f_mhz), b.max(e.f_mhz))
    });
    cx.out.json(
        "summary.json",
        &json!({
            "qubits": g.sites(),
            "couplers": table.couplers.len(),
            "edges": g.edges().len(),
            "interaction_GHz": circ.interaction_ghz,
            "coupling_range_MHz": [lo, hi],
            "outside_tunable_range": g.edges().iter().filter(|e| !(-15.0..=1.0).contains(&e.f_mhz)).count(),
        }),
    )?;
    Ok(())
}
