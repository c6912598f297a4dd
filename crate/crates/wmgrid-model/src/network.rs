use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{ModelError, Result};

/// Series branch, admittance in per-unit. Bus indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    pub conductance: f64,
    pub susceptance: f64,
}

impl Branch {
    /// Builds a branch from per-unit series resistance and reactance.
    pub fn from_impedance(from: usize, to: usize, r: f64, x: f64) -> Self {
        let y = Complex64::new(1.0, 0.0) / Complex64::new(r, x);
        Self {
            from,
            to,
            conductance: y.re,
            susceptance: y.im,
        }
    }

    pub fn admittance(&self) -> Complex64 {
        Complex64::new(self.conductance, self.susceptance)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    pub bus_count: usize,
    pub branches: Vec<Branch>,
    pub dgu_buses: Vec<usize>,
    pub load_buses: Vec<usize>,
    /// Angle reference (the PCC in the bundled system).
    pub reference_bus: usize,
    pub nominal_voltage: f64,
    pub nominal_frequency: f64,
}

impl NetworkModel {
    pub fn validate(&self) -> Result<()> {
        if self.bus_count == 0 {
            return Err(ModelError::Config("network has no buses".into()));
        }
        for (k, br) in self.branches.iter().enumerate() {
            if br.from >= self.bus_count || br.to >= self.bus_count {
                return Err(ModelError::Config(format!(
                    "branch {} references bus outside 1..={}",
                    k + 1,
                    self.bus_count
                )));
            }
            if br.from == br.to {
                return Err(ModelError::Config(format!("branch {} is a self loop", k + 1)));
            }
            if !(br.conductance.is_finite() && br.susceptance.is_finite()) {
                return Err(ModelError::Config(format!("branch {} has non-finite admittance", k + 1)));
            }
        }
        for &b in self.dgu_buses.iter().chain(self.load_buses.iter()) {
            if b >= self.bus_count {
                return Err(ModelError::Config(format!("bus {} does not exist", b + 1)));
            }
        }
        for (i, b) in self.dgu_buses.iter().enumerate() {
            if self.dgu_buses[..i].contains(b) {
                return Err(ModelError::Config(format!("duplicate DGU on bus {}", b + 1)));
            }
        }
        if self.reference_bus >= self.bus_count {
            return Err(ModelError::Config("reference bus does not exist".into()));
        }
        if !self.is_connected() {
            return Err(ModelError::Config("network is not connected".into()));
        }
        Ok(())
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.bus_count];
        let mut stack = vec![self.reference_bus.min(self.bus_count.saturating_sub(1))];
        while let Some(b) = stack.pop() {
            if seen[b] {
                continue;
            }
            seen[b] = true;
            for br in &self.branches {
                if br.from == b && !seen[br.to] {
                    stack.push(br.to);
                }
                if br.to == b && !seen[br.from] {
                    stack.push(br.from);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Bus admittance matrix.
    pub fn admittance(&self) -> DMatrix<Complex64> {
        let n = self.bus_count;
        let mut y = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        for br in &self.branches {
            let a = br.admittance();
            y[(br.from, br.from)] += a;
            y[(br.to, br.to)] += a;
            y[(br.from, br.to)] -= a;
            y[(br.to, br.from)] -= a;
        }
        y
    }
}
