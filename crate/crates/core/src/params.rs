use crate::error::{invalid, Result};

/// Scaled physical parameters plus solver and sampling settings.
///
/// Frequencies are in units of `ħk²/m`, times in the reciprocal unit.
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    /// Laser detuning δ.
    pub delta: f64,
    /// Peak Rabi frequency Ω_max of the standing wave.
    pub omega_max: f64,
    /// Spontaneous emission rate Γ.
    pub gamma: f64,
    /// Momentum truncation: levels run over `-n_max..=n_max` in units of ħk.
    pub n_max: usize,
    /// Times at which states are reported; strictly increasing, starting at 0.
    pub t_samples: Vec<f64>,
    pub rtol: f64,
    pub atol: f64,
    /// Largest tolerated loss of trace through the momentum boundary.
    pub leak_budget: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            delta: 1.0e4,
            omega_max: 2.0e3,
            gamma: 200.0,
            n_max: 25,
            t_samples: uniform_grid(2.0, 401),
            rtol: 1.0e-8,
            atol: 1.0e-10,
            leak_budget: 1.0e-5,
        }
    }
}

impl SimParams {
    /// Checks the far-detuned regime ordering and the solver settings.
    pub fn validate(&self) -> Result<()> {
        let finite = [self.delta, self.omega_max, self.gamma, self.rtol, self.atol, self.leak_budget];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(invalid("parameters must be finite"));
        }
        if !(self.gamma > 0.0) {
            return Err(invalid(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.omega_max > self.gamma) {
            return Err(invalid(format!(
                "omega_max ({}) must exceed gamma ({})",
                self.omega_max, self.gamma
            )));
        }
        if !(self.delta > self.omega_max) {
            return Err(invalid(format!(
                "delta ({}) must exceed omega_max ({})",
                self.delta, self.omega_max
            )));
        }
        if self.n_max < 1 {
            return Err(invalid("n_max must be at least 1"));
        }
        for (name, v) in [("rtol", self.rtol), ("atol", self.atol), ("leak_budget", self.leak_budget)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(invalid(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        validate_grid(&self.t_samples)
    }

    pub fn t_end(&self) -> f64 {
        self.t_samples.last().copied().unwrap_or(0.0)
    }

    /// Copy with a different sample grid.
    pub fn with_samples(&self, t_samples: Vec<f64>) -> Self {
        Self { t_samples, ..self.clone() }
    }
}

pub(crate) fn validate_grid(ts: &[f64]) -> Result<()> {
    match ts.first() {
        None => return Err(invalid("sample grid is empty")),
        Some(&t0) if t0 != 0.0 => return Err(invalid("sample grid must start at t = 0")),
        _ => {}
    }
    if ts.iter().any(|t| !t.is_finite()) {
        return Err(invalid("sample times must be finite"));
    }
    if ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("sample times must be strictly increasing"));
    }
    Ok(())
}

/// `samples` equally spaced times on `[0, t_max]`, both ends included.
pub fn uniform_grid(t_max: f64, samples: usize) -> Vec<f64> {
    match samples {
        0 => Vec::new(),
        1 => vec![0.0],
        n => {
            let dt = t_max / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { t_max } else { i as f64 * dt })
                .collect()
        }
    }
}
