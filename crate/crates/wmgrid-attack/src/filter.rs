use crate::AttackError;

/// Rational transfer function `num(z) / den(z)`, coefficients in ascending powers of `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFilter {
    pub numerator: Vec<f64>,
    pub denominator: Vec<f64>,
}

impl RationalFilter {
    pub fn new(numerator: Vec<f64>, denominator: Vec<f64>) -> Result<Self, AttackError> {
        let f = Self { numerator, denominator };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<(), AttackError> {
        let den = trim(&self.denominator);
        let num = trim(&self.numerator);
        if den.is_empty() {
            return Err(AttackError::Invalid("filter denominator is zero".into()));
        }
        if den.last() != Some(&1.0) {
            return Err(AttackError::Invalid("filter denominator must be monic".into()));
        }
        if num.len() > den.len() {
            return Err(AttackError::Invalid("filter is improper (numerator degree exceeds denominator)".into()));
        }
        if self.numerator.iter().chain(&self.denominator).any(|c| !c.is_finite()) {
            return Err(AttackError::Invalid("filter coefficients must be finite".into()));
        }
        Ok(())
    }

    /// Number of delay registers, the denominator degree.
    pub fn order(&self) -> usize {
        trim(&self.denominator).len() - 1
    }

    /// `num(1) / den(1)`.
    pub fn dc_gain(&self) -> f64 {
        self.numerator.iter().sum::<f64>() / self.denominator.iter().sum::<f64>()
    }

    /// Coefficients in powers of `z^-1`: `(b, a)` with `a[0] = 1`, both of length `order + 1`.
    pub fn delay_form(&self) -> (Vec<f64>, Vec<f64>) {
        let den = trim(&self.denominator);
        let n = den.len() - 1;
        let a: Vec<f64> = (0..=n).map(|j| den[n - j]).collect();
        let b: Vec<f64> = (0..=n)
            .map(|j| self.numerator.get(n - j).copied().unwrap_or(0.0))
            .collect();
        (b, a)
    }

    /// Roots of the denominator (closed-form for order up to 2).
    pub fn poles(&self) -> Vec<(f64, f64)> {
        let den = trim(&self.denominator);
        match den.len() {
            2 => vec![(-den[0], 0.0)],
            3 => {
                let (c, b) = (den[0], den[1]);
                let disc = b * b - 4.0 * c;
                if disc >= 0.0 {
                    let s = disc.sqrt();
                    vec![((-b + s) / 2.0, 0.0), ((-b - s) / 2.0, 0.0)]
                } else {
                    let s = (-disc).sqrt();
                    vec![(-b / 2.0, s / 2.0), (-b / 2.0, -s / 2.0)]
                }
            }
            _ => Vec::new(),
        }
    }
}

fn trim(c: &[f64]) -> &[f64] {
    let mut end = c.len();
    while end > 0 && c[end - 1] == 0.0 {
        end -= 1;
    }
    &c[..end]
}

/// Direct-form-II realization with zeroed registers.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    b: Vec<f64>,
    a: Vec<f64>,
    registers: Vec<f64>,
}

impl FilterState {
    pub fn new(filter: &RationalFilter) -> Self {
        let (b, a) = filter.delay_form();
        let n = filter.order();
        Self {
            b,
            a,
            registers: vec![0.0; n],
        }
    }

    pub fn registers(&self) -> &[f64] {
        &self.registers
    }

    pub fn reset(&mut self) {
        self.registers.iter_mut().for_each(|r| *r = 0.0);
    }

    pub fn step(&mut self, x: f64) -> f64 {
        let n = self.registers.len();
        let mut w = x;
        for j in 0..n {
            w -= self.a[j + 1] * self.registers[j];
        }
        let mut y = self.b[0] * w;
        for j in 0..n {
            y += self.b[j + 1] * self.registers[j];
        }
        if n > 0 {
            self.registers.rotate_right(1);
            self.registers[0] = w;
        }
        y
    }
}

/// One step of a direct-form-II filter.
pub fn destab_filter_step(fs: &mut FilterState, x: f64) -> f64 {
    fs.step(x)
}
