//! Model definition files (TOML). Electrical quantities are given in SI units and
//! converted to per-unit on load.

use serde::{Deserialize, Serialize};

use crate::dae::{DguModel, LoadModel, Microgrid};
use crate::equilibrium::Setpoints;
use crate::error::{ModelError, Result};
use crate::network::{Branch, NetworkModel};
use crate::units::PerUnitBase;

pub const TAMU4BUS: &str = include_str!("../data/tamu4bus.toml");

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub name: String,
    #[serde(default = "default_exponent")]
    pub load_voltage_exponent: f64,
    #[serde(default)]
    pub gain_units: GainUnits,
    pub base: BaseSection,
    pub network: NetworkSection,
    #[serde(rename = "branch")]
    pub branches: Vec<BranchSection>,
    #[serde(rename = "dgu")]
    pub dgus: Vec<DguSection>,
    #[serde(rename = "load", default)]
    pub loads: Vec<LoadSection>,
    #[serde(default)]
    pub operating_point: OperatingPointSection,
}

fn default_exponent() -> f64 {
    2.0
}

/// How droop and current-controller gains are interpreted.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum GainUnits {
    /// W per rad/s, var per V, modulation index per A; converted with the bases.
    #[default]
    Si,
    /// Already per-unit on the model bases.
    PerUnit,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BaseSection {
    pub voltage: f64,
    pub power: f64,
    pub frequency: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub buses: Vec<String>,
    /// One-based index of the angle reference bus.
    pub reference: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BranchSection {
    pub from: usize,
    pub to: usize,
    /// Ohms.
    pub r: f64,
    /// Ohms at nominal frequency.
    pub x: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DguSection {
    pub bus: usize,
    pub t_omega: f64,
    pub t_v: f64,
    pub t_theta: Option<f64>,
    pub alpha_p: f64,
    pub beta_p: f64,
    pub alpha_q: f64,
    pub beta_q: f64,
    pub kp1: f64,
    pub ki1: f64,
    pub kp2: f64,
    pub ki2: f64,
    pub v_dc: f64,
    pub r_in: f64,
    pub x_in: Option<f64>,
    pub l_in: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LoadSection {
    pub bus: usize,
    /// Watts.
    pub p: f64,
    /// Vars.
    pub q: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OperatingPointSection {
    #[serde(default = "one")]
    pub dgu_voltage: f64,
    #[serde(default)]
    pub sharing: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

impl Default for OperatingPointSection {
    fn default() -> Self {
        Self {
            dgu_voltage: 1.0,
            sharing: Vec::new(),
        }
    }
}

/// Parses a model definition; errors carry the TOML line and column.
pub fn parse_model(text: &str) -> Result<ModelFile> {
    let file: ModelFile = toml::from_str(text).map_err(|e| ModelError::Config(e.to_string()))?;
    file.validate()?;
    Ok(file)
}

/// Resolves a bundled model name.
pub fn bundled_model(name: &str) -> Option<&'static str> {
    match name {
        "tamu4bus" => Some(TAMU4BUS),
        _ => None,
    }
}

impl ModelFile {
    pub fn validate(&self) -> Result<()> {
        let nb = self.network.buses.len();
        let cfg = |m: String| Err(ModelError::Config(m));
        if nb == 0 {
            return cfg("network.buses is empty".into());
        }
        let in_range = |b: usize| (1..=nb).contains(&b);
        if !in_range(self.network.reference) {
            return cfg(format!("network.reference {} outside 1..={nb}", self.network.reference));
        }
        for (k, v) in [("base.voltage", self.base.voltage), ("base.power", self.base.power), ("base.frequency", self.base.frequency)] {
            if !(v > 0.0 && v.is_finite()) {
                return cfg(format!("{k} must be positive"));
            }
        }
        for (i, br) in self.branches.iter().enumerate() {
            if !in_range(br.from) || !in_range(br.to) {
                return cfg(format!("branch {} references a bus outside 1..={nb}", i + 1));
            }
            if !(br.r >= 0.0 && br.x.is_finite() && br.r.is_finite()) || (br.r == 0.0 && br.x == 0.0) {
                return cfg(format!("branch {} has an invalid impedance", i + 1));
            }
        }
        for (i, d) in self.dgus.iter().enumerate() {
            if !in_range(d.bus) {
                return cfg(format!("dgu {} on bus {} outside 1..={nb}", i + 1, d.bus));
            }
            match (d.x_in, d.l_in) {
                (Some(_), Some(_)) => return cfg(format!("dgu {}: give x_in or l_in, not both", i + 1)),
                (None, None) => return cfg(format!("dgu {}: missing x_in or l_in", i + 1)),
                _ => {}
            }
            let all = [
                d.t_omega, d.t_v, d.t_theta.unwrap_or(d.t_v), d.alpha_p, d.beta_p, d.alpha_q, d.beta_q,
                d.kp1, d.ki1, d.kp2, d.ki2, d.v_dc, d.r_in, d.x_in.or(d.l_in).unwrap_or(1.0),
            ];
            if all.iter().any(|v| !v.is_finite()) {
                return cfg(format!("dgu {}: non-finite parameter", i + 1));
            }
            if d.ki1 == 0.0 || d.ki2 == 0.0 {
                return cfg(format!("dgu {}: integral gains must be nonzero", i + 1));
            }
        }
        for (i, l) in self.loads.iter().enumerate() {
            if !in_range(l.bus) {
                return cfg(format!("load {} on bus {} outside 1..={nb}", i + 1, l.bus));
            }
            if !(l.p.is_finite() && l.q.is_finite()) {
                return cfg(format!("load {}: non-finite power", i + 1));
            }
        }
        if !self.load_voltage_exponent.is_finite() {
            return cfg("load_voltage_exponent must be finite".into());
        }
        Ok(())
    }

    pub fn per_unit_base(&self) -> PerUnitBase {
        PerUnitBase::new(self.base.voltage, self.base.power)
    }

    pub fn setpoints(&self) -> Setpoints {
        Setpoints {
            dgu_voltage: self.operating_point.dgu_voltage,
            sharing: self.operating_point.sharing.clone(),
        }
    }

    /// Converts to the per-unit microgrid model.
    pub fn to_microgrid(&self) -> Result<Microgrid> {
        self.validate()?;
        let base = self.per_unit_base();
        let (zb, ib, sb, vb) = (base.impedance(), base.current(), base.power, base.voltage);
        let wn = self.base.frequency;
        let network = NetworkModel {
            bus_count: self.network.buses.len(),
            branches: self
                .branches
                .iter()
                .map(|b| Branch::from_impedance(b.from - 1, b.to - 1, b.r / zb, b.x / zb))
                .collect(),
            dgu_buses: Vec::new(),
            load_buses: Vec::new(),
            reference_bus: self.network.reference - 1,
            nominal_voltage: vb,
            nominal_frequency: wn,
        };
        let si = self.gain_units == GainUnits::Si;
        let dgus = self
            .dgus
            .iter()
            .map(|d| {
                let l_henry = d.x_in.map(|x| x / wn).or(d.l_in).unwrap_or_default();
                let (pk, qk, ck) = if si { (1.0 / sb, vb / sb, ib) } else { (1.0, 1.0, 1.0) };
                DguModel {
                    bus: d.bus - 1,
                    t_omega: d.t_omega,
                    t_v: d.t_v,
                    t_theta: d.t_theta.unwrap_or(d.t_v),
                    alpha_p: d.alpha_p * pk,
                    beta_p: d.beta_p * pk,
                    alpha_q: d.alpha_q * qk,
                    beta_q: d.beta_q * qk,
                    k_p1: d.kp1 * ck,
                    k_i1: d.ki1 * ck,
                    k_p2: d.kp2 * ck,
                    k_i2: d.ki2 * ck,
                    v_dc: d.v_dc / vb,
                    r_in: d.r_in / zb,
                    l_in: l_henry / zb,
                    steady_p: 0.0,
                    steady_q: 0.0,
                }
            })
            .collect();
        let loads = self
            .loads
            .iter()
            .map(|l| LoadModel {
                bus: l.bus - 1,
                p: l.p / sb,
                q: l.q / sb,
            })
            .collect();
        Microgrid::assemble(network, dgus, loads, self.load_voltage_exponent)
    }
}
