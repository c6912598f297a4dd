//! Islanded microgrid model: network, inverter units, loads, operating point,
//! linearization and discretization.

pub mod config;
pub mod dae;
pub mod equilibrium;
pub mod error;
pub mod linearize;
pub mod network;
pub mod powerflow;
pub mod spectrum;
pub mod statespace;
pub mod units;

pub use config::{parse_model, ModelFile};
pub use dae::{DguModel, LoadModel, Microgrid};
pub use equilibrium::{find_equilibrium, Equilibrium, Setpoints};
pub use error::{ModelError, Result};
pub use linearize::linearize;
pub use network::{Branch, NetworkModel};
pub use powerflow::{solve_power_flow, BusKind, PowerFlowCase, PowerFlowOptions, PowerFlowSolution};
pub use spectrum::{eigenvalues, spectral_radius};
pub use statespace::{discretize, Discretization, StateSpace, TimeDomain};

/// Model linearized at its operating point, with droop setpoints filled in.
#[derive(Debug, Clone)]
pub struct OperatingModel {
    pub microgrid: Microgrid,
    pub equilibrium: Equilibrium,
    pub continuous: StateSpace,
}

impl OperatingModel {
    pub fn from_file(file: &ModelFile) -> Result<Self> {
        let mut microgrid = file.to_microgrid()?;
        let equilibrium = find_equilibrium(&microgrid, &file.setpoints())?;
        for (k, d) in microgrid.dgus.iter_mut().enumerate() {
            d.steady_p = equilibrium.u0[2 * k];
            d.steady_q = equilibrium.u0[2 * k + 1];
        }
        let continuous = linearize(&microgrid, &equilibrium)?;
        Ok(Self {
            microgrid,
            equilibrium,
            continuous,
        })
    }

    pub fn bundled(name: &str) -> Result<Self> {
        let text = config::bundled_model(name)
            .ok_or_else(|| ModelError::Config(format!("unknown bundled model '{name}'")))?;
        Self::from_file(&parse_model(text)?)
    }
}
