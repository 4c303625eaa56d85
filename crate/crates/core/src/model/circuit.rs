//! Dispersive elimination of tunable couplers.
//!
//! With every qubit far detuned from its couplers, `|Δ_ic| = |ω_i - ω_c| ≫ |g_ic|`,
//! the couplers drop out and leave
//!
//! ```text
//! J_ij = g_ij + Σ_c g_ic g_jc (1/Δ_ic + 1/Δ_jc)
//! Ω_i  = ω_i  + Σ_c g_ic² / Δ_ic
//! ```

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::Deserialize;

use super::{CouplingGraph, EdgeKind};
use crate::error::{Error, Result};

/// Common interaction frequency of the qubits during the quench, GHz.
pub const DEFAULT_INTERACTION_GHZ: f64 = 4.375;

/// A coupler bridging two qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Coupler {
    pub qubit_a: usize,
    pub qubit_b: usize,
    pub freq_ghz: f64,
    /// Qubit-coupler coupling `g_ac / 2π`, MHz.
    pub g_a_mhz: f64,
    pub g_b_mhz: f64,
}

/// Circuit-level parameters.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CircuitParams {
    pub qubit_freq_ghz: Vec<f64>,
    pub couplers: Vec<Coupler>,
    /// Direct couplings `(i, j, g_ij / 2π in MHz)`.
    pub direct: Vec<(usize, usize, f64)>,
}

/// Effective XY graph of a circuit. Couplings and on-site terms are in MHz;
/// the on-site terms are absolute transition frequencies.
pub fn effective_from_circuit(params: &CircuitParams) -> Result<CouplingGraph> {
    let l = params.qubit_freq_ghz.len();
    let mut onsite: Vec<f64> = params.qubit_freq_ghz.iter().map(|w| w * 1e3).collect();
    let mut couplings: BTreeMap<(usize, usize), f64> = BTreeMap::new();

    for &(i, j, g) in &params.direct {
        if i >= l || j >= l || i == j {
            return Err(Error::Domain(format!("direct coupling ({i}, {j}) is invalid")));
        }
        *couplings.entry((i.min(j), i.max(j))).or_insert(0.0) += g;
    }

    for (c, cp) in params.couplers.iter().enumerate() {
        let (a, b) = (cp.qubit_a, cp.qubit_b);
        if a >= l || b >= l || a == b {
            return Err(Error::Domain(format!(
                "coupler {c} must bridge two distinct qubits, got ({a}, {b})"
            )));
        }
        let wc = cp.freq_ghz * 1e3;
        let delta_a = onsite_bare(params, a) - wc;
        let delta_b = onsite_bare(params, b) - wc;
        for (q, delta, g) in [(a, delta_a, cp.g_a_mhz), (b, delta_b, cp.g_b_mhz)] {
            if delta.abs() <= g.abs() {
                return Err(Error::DispersiveViolation {
                    qubit: q,
                    coupler: c,
                    detuning_mhz: delta,
                    coupling_mhz: g,
                });
            }
        }
        onsite[a] += cp.g_a_mhz * cp.g_a_mhz / delta_a;
        onsite[b] += cp.g_b_mhz * cp.g_b_mhz / delta_b;
        *couplings.entry((a.min(b), a.max(b))).or_insert(0.0) +=
            cp.g_a_mhz * cp.g_b_mhz * (1.0 / delta_a + 1.0 / delta_b);
    }

    let mut g = CouplingGraph::empty(l);
    for ((i, j), f) in couplings {
        g.add_edge(i, j, f, EdgeKind::Circuit)?;
    }
    g.onsite_mut().copy_from_slice(&onsite);
    g.note(format!(
        "effective couplings from {} couplers by dispersive elimination",
        params.couplers.len()
    ));
    Ok(g)
}

fn onsite_bare(params: &CircuitParams, q: usize) -> f64 {
    params.qubit_freq_ghz[q] * 1e3
}

/// One row of the qubit parameter table.
#[derive(Clone, Debug, Deserialize, PartialEq)]
pub struct QubitRecord {
    pub qubit_label: String,
    #[serde(rename = "omega0_GHz")]
    pub omega0_ghz: f64,
    #[serde(rename = "omega_idle_GHz")]
    pub omega_idle_ghz: f64,
    pub e_sq_pct: f64,
    #[serde(rename = "T1_us")]
    pub t1_us: f64,
    #[serde(rename = "T2star_us")]
    pub t2star_us: f64,
}

/// One row of the coupler table.
#[derive(Clone, Debug, Deserialize, PartialEq)]
pub struct CouplerRecord {
    pub coupler_label: String,
    pub qubit_a: String,
    pub qubit_b: String,
    #[serde(rename = "omega_c_GHz")]
    pub omega_c_ghz: f64,
    #[serde(rename = "g_ac_MHz")]
    pub g_ac_mhz: f64,
    #[serde(rename = "g_bc_MHz")]
    pub g_bc_mhz: f64,
    #[serde(rename = "g_ab_MHz")]
    pub g_ab_mhz: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeviceTable {
    pub qubits: Vec<QubitRecord>,
    pub couplers: Vec<CouplerRecord>,
}

/// Reads the qubit and coupler CSV tables.
pub fn read_device_csv(qubits: &Path, couplers: &Path) -> Result<DeviceTable> {
    fn read<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
        r.deserialize().map(|row| row.map_err(Error::from)).collect()
    }
    Ok(DeviceTable {
        qubits: read(qubits)?,
        couplers: read(couplers)?,
    })
}

impl DeviceTable {
    /// Circuit parameters with every qubit at `interaction_ghz`, or at its
    /// idle frequency when `None`. Qubits are indexed by table row.
    pub fn to_circuit(&self, interaction_ghz: Option<f64>) -> Result<CircuitParams> {
        let index: HashMap<&str, usize> = self
            .qubits
            .iter()
            .enumerate()
            .map(|(k, q)| (q.qubit_label.as_str(), k))
            .collect();
        if index.len() != self.qubits.len() {
            return Err(Error::Parse("duplicate qubit labels in qubit table".into()));
        }
        let lookup = |label: &str, coupler: &str| {
            index
                .get(label)
                .copied()
                .ok_or_else(|| Error::Parse(format!("coupler {coupler} references unknown qubit {label}")))
        };
        let mut params = CircuitParams {
            qubit_freq_ghz: self
                .qubits
                .iter()
                .map(|q| interaction_ghz.unwrap_or(q.omega_idle_ghz))
                .collect(),
            ..Default::default()
        };
        for c in &self.couplers {
            let a = lookup(&c.qubit_a, &c.coupler_label)?;
            let b = lookup(&c.qubit_b, &c.coupler_label)?;
            params.couplers.push(Coupler {
                qubit_a: a,
                qubit_b: b,
                freq_ghz: c.omega_c_ghz,
                g_a_mhz: c.g_ac_mhz,
                g_b_mhz: c.g_bc_mhz,
            });
            if c.g_ab_mhz != 0.0 {
                params.direct.push((a, b, c.g_ab_mhz));
            }
        }
        Ok(params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pair(g_ab: f64, g: f64, wc_ghz: f64) -> CircuitParams {
        CircuitParams {
            qubit_freq_ghz: vec![4.4, 4.4],
            couplers: vec![Coupler {
                qubit_a: 0,
                qubit_b: 1,
                freq_ghz: wc_ghz,
                g_a_mhz: g,
                g_b_mhz: g,
            }],
            direct: vec![(0, 1, g_ab)],
        }
    }

    #[test]
    fn single_coupler_arithmetic() {
        // Δ = 4400 - 5000 = -600 MHz
        let g = effective_from_circuit(&pair(2.0, 100.0, 5.0)).unwrap();
        assert_relative_eq!(g.edge(0, 1).unwrap().f_mhz, 2.0 - 100.0 * 100.0 * 2.0 / 600.0);
        assert_relative_eq!(g.edge(0, 1).unwrap().f_mhz, -31.333333333333332, epsilon = 1e-12);
        assert_relative_eq!(g.onsite()[0], 4400.0 - 10000.0 / 600.0);
    }

    #[test]
    fn no_couplers_is_identity() {
        let p = CircuitParams {
            qubit_freq_ghz: vec![4.3, 4.5, 4.7],
            couplers: vec![],
            direct: vec![(0, 1, 1.5), (1, 2, -0.5)],
        };
        let g = effective_from_circuit(&p).unwrap();
        assert_eq!(g.edge(0, 1).unwrap().f_mhz, 1.5);
        assert_eq!(g.edge(1, 2).unwrap().f_mhz, -0.5);
        assert_relative_eq!(g.onsite()[2], 4700.0);
    }

    #[test]
    fn dispersive_violation() {
        // Δ = -50 MHz, g = 100 MHz
        let err = effective_from_circuit(&pair(0.0, 100.0, 4.45)).unwrap_err();
        assert!(matches!(err, Error::DispersiveViolation { .. }));
    }

    #[test]
    fn coupler_sweep_brackets_the_tunable_range() {
        // qubits at the interaction point, coupler swept over 4.9–6.0 GHz
        let js: Vec<f64> = (0..=110)
            .map(|k| {
                let wc = 4.9 + 0.01 * k as f64;
                let mut p = pair(12.0, 90.0, wc);
                p.qubit_freq_ghz = vec![DEFAULT_INTERACTION_GHZ; 2];
                effective_from_circuit(&p).unwrap().edge(0, 1).unwrap().f_mhz
            })
            .collect();
        let lo = js.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = js.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(lo <= -15.0, "most negative coupling {lo}");
        assert!(hi >= 1.0, "most positive coupling {hi}");
        assert!(
            js.windows(2).all(|w| w[1] >= w[0]),
            "coupling grows as the coupler moves away"
        );
    }

    #[test]
    fn scaling_exponents() {
        // J - g_ij is quadratic in g_ic and J is linear in g_ij
        let base = |g_ab: f64, g: f64| {
            effective_from_circuit(&pair(g_ab, g, 5.2))
                .unwrap()
                .edge(0, 1)
                .unwrap()
                .f_mhz
        };
        let indirect = |g: f64| base(0.0, g);
        let exponent = (indirect(80.0) / indirect(40.0)).ln() / 2f64.ln();
        assert_relative_eq!(exponent, 2.0, epsilon = 1e-12);
        let direct_slope = (base(3.0, 60.0) - base(1.0, 60.0)) / 2.0;
        assert_relative_eq!(direct_slope, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn device_tables() {
        let dir = tempfile::tempdir().unwrap();
        let q = dir.path().join("q.csv");
        let c = dir.path().join("c.csv");
        std::fs::write(
            &q,
            "qubit_label,omega0_GHz,omega_idle_GHz,e_sq_pct,T1_us,T2star_us\n\
             Q1,4.826,4.795,0.26,71.5,2.2\nQ2,4.880,4.420,0.18,75.5,2.3\n",
        )
        .unwrap();
        std::fs::write(
            &c,
            "coupler_label,qubit_a,qubit_b,omega_c_GHz,g_ac_MHz,g_bc_MHz,g_ab_MHz\n\
             C1,Q1,Q2,5.0,100,100,2\n",
        )
        .unwrap();
        let table = read_device_csv(&q, &c).unwrap();
        assert_eq!(table.qubits.len(), 2);
        let params = table.to_circuit(Some(4.4)).unwrap();
        let g = effective_from_circuit(&params).unwrap();
        assert_relative_eq!(g.edge(0, 1).unwrap().f_mhz, -31.333333333333332, epsilon = 1e-12);
        let idle = table.to_circuit(None).unwrap();
        assert_eq!(idle.qubit_freq_ghz, vec![4.795, 4.420]);

        std::fs::write(
            &c,
            "coupler_label,qubit_a,qubit_b,omega_c_GHz,g_ac_MHz,g_bc_MHz,g_ab_MHz\n\
             C1,Q1,Q9,5.0,100,100,2\n",
        )
        .unwrap();
        let bad = read_device_csv(&q, &c).unwrap();
        assert!(matches!(bad.to_circuit(None), Err(Error::Parse(_))));
    }
}
