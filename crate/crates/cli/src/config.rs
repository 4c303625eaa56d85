//! Run configuration: TOML schema, validation and model construction.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use scarsim::hamiltonian::{SparseHamiltonian, StorageMode};
use scarsim::hilbert::BasisSector;
use scarsim::model::{
    effective_from_circuit, read_device_csv, Boundary, CouplingGraph, OnsitePattern, DEFAULT_INTERACTION_GHZ,
};
use scarsim::states::{pi_prime_state, pi_state, theta_prime_state, theta_state};

/// A configuration file that parsed but does not describe a valid run.
#[derive(Debug, thiserror::Error)]
#[error("config error: {0}")]
pub struct ConfigError(pub String);

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

fn default_seed() -> u64 {
    2024
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub model: ModelConfig,
    #[serde(default)]
    pub states: StatesConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub subsystem: Option<Vec<usize>>,
    #[serde(default)]
    pub krylov: KrylovConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub hypercube: HypercubeConfig,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    Chain,
    Comb,
    Circuit,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryName {
    #[default]
    Open,
    Periodic,
}

fn default_f_intra() -> f64 {
    -9.0
}

fn default_f_inter() -> f64 {
    -6.0
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub geometry: Geometry,
    /// Chain length.
    pub sites: Option<usize>,
    /// Comb size.
    pub n_dimers: Option<usize>,
    #[serde(default)]
    pub boundary: BoundaryName,
    #[serde(default = "default_f_intra")]
    pub f_intra_mhz: f64,
    #[serde(default = "default_f_inter")]
    pub f_inter_mhz: f64,
    /// Photon number; half filling when absent.
    pub photons: Option<usize>,
    pub cross: Option<CrossConfig>,
    pub nnn_mhz: Option<f64>,
    pub edges_file: Option<PathBuf>,
    pub onsite: Option<OnsiteConfig>,
    pub circuit: Option<CircuitConfig>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CrossConfig {
    pub f_lo_mhz: f64,
    pub f_hi_mhz: f64,
    /// Falls back to the run seed.
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum OnsiteKind {
    Uniform,
    EndImpurity,
    Staircase,
    Explicit,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OnsiteConfig {
    pub pattern: OnsiteKind,
    pub value_mhz: Option<f64>,
    pub values_mhz: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitConfig {
    pub qubits_csv: PathBuf,
    pub couplers_csv: PathBuf,
    #[serde(default = "default_interaction")]
    pub interaction_ghz: f64,
}

fn default_interaction() -> f64 {
    DEFAULT_INTERACTION_GHZ
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StatesConfig {
    /// `pi`, `pi_prime`, `theta`, `theta_prime`, `0x…` words or occupation
    /// strings with site 0 first.
    #[serde(default)]
    pub initial: Vec<String>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_max_ns: f64,
    pub dt_ns: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            t_max_ns: 400.0,
            dt_ns: 1.0,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct KrylovConfig {
    pub tol: f64,
    pub max_dim: usize,
    pub max_halvings: usize,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        let k = scarsim::dynamics::KrylovOptions::default();
        Self {
            tol: k.tol,
            max_dim: k.max_dim,
            max_halvings: k.max_halvings,
        }
    }
}

impl KrylovConfig {
    pub fn options(&self) -> scarsim::dynamics::KrylovOptions {
        scarsim::dynamics::KrylovOptions {
            tol: self.tol,
            max_dim: self.max_dim,
            max_halvings: self.max_halvings,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryChoice {
    #[default]
    Auto,
    None,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub symmetry: SymmetryChoice,
    pub discard_fraction: f64,
    pub dos_bins: usize,
    pub entropies: bool,
    /// State whose overlaps are reported; the first initial state by default.
    pub overlap_state: Option<String>,
    pub tower_threshold_factor: f64,
    pub tower_merge_fraction: f64,
    pub tower_min_count: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        let p = scarsim::spectral::TowerPolicy::default();
        Self {
            symmetry: SymmetryChoice::Auto,
            discard_fraction: 0.1,
            dos_bins: scarsim::spectral::DOS_BINS,
            entropies: true,
            overlap_state: None,
            tower_threshold_factor: p.threshold_factor,
            tower_merge_fraction: p.merge_fraction,
            tower_min_count: p.min_towers,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    pub random_count: usize,
    /// State whose imbalance peak sets `f₁`; the first initial state by default.
    pub reference: Option<String>,
    /// Fixed probe frequency, overriding `reference`.
    pub probe_mhz: Option<f64>,
    pub pad_ns: f64,
    pub halfwidth_mhz: f64,
    pub separation_factor: f64,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            random_count: 120,
            reference: None,
            probe_mhz: None,
            pad_ns: scarsim::analysis::DEFAULT_PAD_NS,
            halfwidth_mhz: scarsim::analysis::DEFAULT_HALFWIDTH_MHZ,
            separation_factor: 10.0,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Values of `f_intra / f_inter`; `f_inter` stays at the model value.
    pub ratios: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            ratios: vec![1.0, 1.5, 2.0, 2.5],
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct HypercubeConfig {
    pub n_dimers: Vec<usize>,
    pub ratios: Vec<f64>,
}

impl Default for HypercubeConfig {
    fn default() -> Self {
        Self {
            n_dimers: (2..=12).collect(),
            ratios: vec![1.5, 2.0, 2.5],
        }
    }
}

/// A validated configuration with paths resolved against the config file.
#[derive(Clone, Debug)]
pub struct Run {
    pub config: RunConfig,
    pub base_dir: PathBuf,
}

/// A named initial state.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedState {
    pub label: String,
    pub bits: u64,
}

impl Run {
    pub fn parse(text: &str, base_dir: &Path, seed_override: Option<u64>) -> anyhow::Result<Self> {
        let mut config: RunConfig = toml::from_str(text)?;
        if let Some(seed) = seed_override {
            config.seed = seed;
        }
        let run = Self {
            config,
            base_dir: base_dir.to_path_buf(),
        };
        run.validate()?;
        Ok(run)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let c = &self.config;
        let m = &c.model;
        for (name, v) in [("f_intra_mhz", m.f_intra_mhz), ("f_inter_mhz", m.f_inter_mhz)] {
            if !v.is_finite() {
                return bad(format!("model.{name} must be finite"));
            }
        }
        match m.geometry {
            Geometry::Chain => {
                if m.sites.is_none() || m.n_dimers.is_some() {
                    return bad("a chain needs model.sites and no model.n_dimers");
                }
            }
            Geometry::Comb => {
                if m.n_dimers.is_none() || m.sites.is_some() {
                    return bad("a comb needs model.n_dimers and no model.sites");
                }
                if m.boundary != BoundaryName::Open {
                    return bad("the comb has no periodic form");
                }
            }
            Geometry::Circuit => {
                if m.circuit.is_none() {
                    return bad("geometry = \"circuit\" needs a [model.circuit] section");
                }
                if m.sites.is_some() || m.n_dimers.is_some() {
                    return bad("a circuit takes its size from the qubit table");
                }
            }
        }
        if let Some(cross) = &m.cross {
            if !(cross.f_lo_mhz.is_finite() && cross.f_hi_mhz.is_finite()) || cross.f_lo_mhz > cross.f_hi_mhz {
                return bad("model.cross needs finite f_lo_mhz <= f_hi_mhz");
            }
        }
        if m.nnn_mhz.is_some_and(|f| !f.is_finite()) {
            return bad("model.nnn_mhz must be finite");
        }
        if let Some(o) = &m.onsite {
            let needs_value = matches!(
                o.pattern,
                OnsiteKind::Uniform | OnsiteKind::EndImpurity | OnsiteKind::Staircase
            );
            if needs_value && o.value_mhz.is_none() {
                return bad("model.onsite needs value_mhz for this pattern");
            }
            if o.pattern == OnsiteKind::Explicit && o.values_mhz.is_none() {
                return bad("model.onsite pattern \"explicit\" needs values_mhz");
            }
        }
        if let Some(circ) = &m.circuit {
            if !(circ.interaction_ghz.is_finite() && circ.interaction_ghz > 0.0) {
                return bad("model.circuit.interaction_ghz must be positive");
            }
        }
        let t = &c.time;
        if !(t.dt_ns.is_finite() && t.dt_ns > 0.0 && t.t_max_ns.is_finite() && t.t_max_ns >= 0.0) {
            return bad("time needs dt_ns > 0 and t_max_ns >= 0");
        }
        let k = &c.krylov;
        if !(k.tol > 0.0) || k.max_dim < 2 {
            return bad("krylov needs tol > 0 and max_dim >= 2");
        }
        let s = &c.spectrum;
        if !(0.0..0.5).contains(&s.discard_fraction) {
            return bad("spectrum.discard_fraction must lie in [0, 0.5)");
        }
        if s.dos_bins == 0 {
            return bad("spectrum.dos_bins must be positive");
        }
        if !(s.tower_threshold_factor > 0.0) || !(s.tower_merge_fraction > 0.0 && s.tower_merge_fraction < 0.5) {
            return bad("spectrum tower policy needs threshold_factor > 0 and 0 < merge_fraction < 0.5");
        }
        let sc = &c.scan;
        if !(sc.pad_ns > 0.0) || !(sc.halfwidth_mhz >= 0.0) || !(sc.separation_factor > 0.0) {
            return bad("scan needs pad_ns > 0, halfwidth_mhz >= 0 and separation_factor > 0");
        }
        if sc.probe_mhz.is_some_and(|f| !(f > 0.0)) {
            return bad("scan.probe_mhz must be positive");
        }
        if c.sweep.ratios.is_empty() || c.sweep.ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return bad("sweep.ratios must be a non-empty list of positive numbers");
        }
        let h = &c.hypercube;
        if h.n_dimers.is_empty()
            || h.n_dimers
                .iter()
                .any(|&n| n == 0 || 2 * n > scarsim::hilbert::MAX_SITES)
        {
            return bad(format!(
                "hypercube.n_dimers must be non-empty with 1 <= N <= {}",
                scarsim::hilbert::MAX_SITES / 2
            ));
        }
        if h.ratios.is_empty() || h.ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return bad("hypercube.ratios must be a non-empty list of positive numbers");
        }
        Ok(())
    }

    pub fn boundary(&self) -> Boundary {
        match self.config.model.boundary {
            BoundaryName::Open => Boundary::Open,
            BoundaryName::Periodic => Boundary::Periodic,
        }
    }

    pub fn cross_seed(&self) -> u64 {
        self.config
            .model
            .cross
            .as_ref()
            .and_then(|c| c.seed)
            .unwrap_or(self.config.seed)
    }

    /// Graph of the configured model.
    pub fn graph(&self) -> anyhow::Result<CouplingGraph> {
        let m = &self.config.model;
        self.graph_with(m.f_intra_mhz, m.sites, m.n_dimers)
    }

    /// Graph with the intra-dimer coupling and size replaced; used by sweeps.
    pub fn graph_with(
        &self,
        f_intra: f64,
        sites: Option<usize>,
        n_dimers: Option<usize>,
    ) -> anyhow::Result<CouplingGraph> {
        let m = &self.config.model;
        let mut g = match m.geometry {
            Geometry::Chain => CouplingGraph::chain(sites.unwrap_or(0), self.boundary(), f_intra, m.f_inter_mhz)?,
            Geometry::Comb => CouplingGraph::comb(n_dimers.unwrap_or(0), f_intra, m.f_inter_mhz)?,
            Geometry::Circuit => {
                let circ = m.circuit.as_ref().expect("validated");
                let table = read_device_csv(&self.resolve(&circ.qubits_csv), &self.resolve(&circ.couplers_csv))?;
                let mut g = effective_from_circuit(&table.to_circuit(Some(circ.interaction_ghz))?)?;
                g.shift_onsite(-circ.interaction_ghz * 1e3);
                g
            }
        };
        if let Some(cross) = &m.cross {
            g.add_cross_couplings(cross.f_lo_mhz, cross.f_hi_mhz, self.cross_seed())?;
        }
        if let Some(f) = m.nnn_mhz {
            g.add_nnn_couplings(f)?;
        }
        if let Some(path) = &m.edges_file {
            g.add_edges_from_csv(&self.resolve(path))?;
        }
        if let Some(o) = &m.onsite {
            let v = o.value_mhz.unwrap_or(0.0);
            let pattern = match o.pattern {
                OnsiteKind::Uniform => OnsitePattern::Uniform(v),
                OnsiteKind::EndImpurity => OnsitePattern::EndImpurity(v),
                OnsiteKind::Staircase => OnsitePattern::Staircase(v),
                OnsiteKind::Explicit => OnsitePattern::Explicit(o.values_mhz.clone().unwrap_or_default()),
            };
            g.set_onsite(&pattern)?;
        }
        Ok(g)
    }

    pub fn sector(&self, graph: &CouplingGraph) -> anyhow::Result<BasisSector> {
        let l = graph.sites();
        Ok(BasisSector::new(l, self.config.model.photons.unwrap_or(l / 2))?)
    }

    pub fn hamiltonian(&self, graph: &CouplingGraph, sector: &BasisSector) -> anyhow::Result<SparseHamiltonian> {
        Ok(SparseHamiltonian::assemble(graph, sector, StorageMode::Auto)?)
    }

    /// Configured initial states, or `pi` (chain, circuit) / `theta` (comb).
    pub fn initial_states(&self, sector: &BasisSector) -> anyhow::Result<Vec<NamedState>> {
        let specs = if self.config.states.initial.is_empty() {
            vec![self.default_state_name().to_string()]
        } else {
            self.config.states.initial.clone()
        };
        let mut out: Vec<NamedState> = Vec::with_capacity(specs.len());
        for spec in &specs {
            let s = parse_state(spec, sector)?;
            if out.iter().any(|o| o.bits == s.bits) {
                return Err(ConfigError(format!("initial state {spec} is listed twice")).into());
            }
            out.push(s);
        }
        Ok(out)
    }

    fn default_state_name(&self) -> &'static str {
        match self.config.model.geometry {
            Geometry::Comb => "theta",
            _ => "pi",
        }
    }

    /// `spec` when given, else the first initial state.
    pub fn state_or_first(&self, spec: Option<&str>, sector: &BasisSector) -> anyhow::Result<NamedState> {
        match spec {
            Some(s) => parse_state(s, sector),
            None => Ok(self.initial_states(sector)?.remove(0)),
        }
    }

    /// Subsystem A; the first four sites by default.
    pub fn subsystem(&self, sites: usize) -> anyhow::Result<Vec<usize>> {
        let a = self
            .config
            .subsystem
            .clone()
            .unwrap_or_else(|| (0..sites.min(4)).collect());
        if a.is_empty() || a.iter().any(|&i| i >= sites) {
            return Err(ConfigError(format!("subsystem sites must be non-empty and below {sites}")).into());
        }
        Ok(a)
    }

    pub fn times(&self) -> anyhow::Result<Vec<f64>> {
        Ok(scarsim::dynamics::time_grid(
            self.config.time.t_max_ns,
            self.config.time.dt_ns,
        )?)
    }
}

/// Parses a state name, `0x` word or occupation string.
pub fn parse_state(spec: &str, sector: &BasisSector) -> anyhow::Result<NamedState> {
    let l = sector.sites();
    let spec = spec.trim();
    let bits = match spec {
        "pi" => pi_state(l)?,
        "pi_prime" => pi_prime_state(l)?,
        "theta" => theta_state(l)?,
        "theta_prime" => theta_prime_state(l)?,
        s if s.starts_with("0x") => {
            u64::from_str_radix(&s[2..], 16).map_err(|e| ConfigError(format!("state {s}: {e}")))?
        }
        s if !s.is_empty() && s.chars().all(|c| c == '0' || c == '1') => {
            if s.len() != l {
                return Err(ConfigError(format!("occupation string {s} has {} sites, expected {l}", s.len())).into());
            }
            s.chars()
                .enumerate()
                .map(|(i, c)| if c == '1' { 1u64 << i } else { 0 })
                .sum()
        }
        s => return Err(ConfigError(format!("unknown state {s:?}")).into()),
    };
    if !sector.contains(bits) {
        return Err(ConfigError(format!(
            "state {spec} is outside the {l}-site, {}-photon sector",
            sector.photons()
        ))
        .into());
    }
    Ok(NamedState {
        label: spec.to_string(),
        bits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(text: &str) -> anyhow::Result<Run> {
        Run::parse(text, Path::new("."), None)
    }

    #[test]
    fn minimal_chain() {
        let r = run("[model]\ngeometry = \"chain\"\nsites = 8\n").unwrap();
        let g = r.graph().unwrap();
        let s = r.sector(&g).unwrap();
        assert_eq!(s.dim(), 70);
        let st = r.initial_states(&s).unwrap();
        assert_eq!(st[0].bits, pi_state(8).unwrap());
        assert_eq!(r.subsystem(8).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(run("[model]\ngeometry = \"chain\"\nsites = 8\nfoo = 1\n").is_err());
        assert!(run("bar = 2\n[model]\ngeometry = \"chain\"\nsites = 8\n").is_err());
        assert!(run("[model]\ngeometry = \"chain\"\nsites = 8\n[spectrum]\ndos = 3\n").is_err());
    }

    #[test]
    fn rejects_inconsistent_fields() {
        assert!(run("[model]\ngeometry = \"comb\"\nsites = 8\n").is_err());
        assert!(run("[model]\ngeometry = \"chain\"\nsites = 8\n[time]\nt_max_ns = 10\ndt_ns = 0\n").is_err());
        assert!(run("[model]\ngeometry = \"chain\"\nsites = 8\n[model.onsite]\npattern = \"staircase\"\n").is_err());
    }

    #[test]
    fn state_specs() {
        let s = BasisSector::new(4, 2).unwrap();
        assert_eq!(parse_state("1001", &s).unwrap().bits, 0b1001);
        assert_eq!(parse_state("1100", &s).unwrap().bits, 0b0011);
        assert_eq!(parse_state("0x5", &s).unwrap().bits, 0b0101);
        assert!(parse_state("1110", &s).is_err());
        assert!(parse_state("100", &s).is_err());
        assert!(parse_state("phi", &s).is_err());
    }

    #[test]
    fn seed_override_reaches_cross_couplings() {
        let text =
            "seed = 1\n[model]\ngeometry = \"chain\"\nsites = 8\n[model.cross]\nf_lo_mhz = 0.3\nf_hi_mhz = 1.2\n";
        let a = Run::parse(text, Path::new("."), Some(5)).unwrap();
        assert_eq!(a.cross_seed(), 5);
        let mut direct = CouplingGraph::chain(8, Boundary::Open, -9.0, -6.0).unwrap();
        direct.add_cross_couplings(0.3, 1.2, 5).unwrap();
        assert_eq!(a.graph().unwrap().edges(), direct.edges());
    }
}
