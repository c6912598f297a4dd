/// Per-unit bases. Impedance and current bases derive from the voltage and power bases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerUnitBase {
    pub voltage: f64,
    pub power: f64,
}

impl PerUnitBase {
    pub const fn new(voltage: f64, power: f64) -> Self {
        Self { voltage, power }
    }

    pub fn impedance(&self) -> f64 {
        self.voltage * self.voltage / self.power
    }

    pub fn current(&self) -> f64 {
        self.power / self.voltage
    }
}

impl Default for PerUnitBase {
    fn default() -> Self {
        Self::new(220.0, 10_000.0)
    }
}
