use thiserror::Error;

/// Lower weight bound; also the lower end of the initial weight range.
pub const W_MIN: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimConfigError {
    #[error("pond size must be positive and finite, got {0}")]
    PondSize(f64),
    #[error("weight scale must be finite and at least {W_MIN}, got {0}")]
    WeightScale(f64),
    #[error("step base must be positive and finite, got {0}")]
    StepBase(f64),
}

/// Simulation parameters. Construct through [`SimConfig::builder`] or
/// [`SimConfig::default`]; invalid combinations are rejected up front.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    num_fish: usize,
    pond_size: f64,
    weight_scale: f64,
    num_steps: usize,
    seed: u64,
    step_base: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            num_fish: 10_000,
            pond_size: 200.0,
            weight_scale: 10.0,
            num_steps: 1_000,
            seed: 1,
            step_base: 1.0,
        }
    }
}

impl SimConfig {
    pub fn builder() -> SimConfigBuilder {
        SimConfigBuilder(SimConfig::default())
    }

    pub fn num_fish(&self) -> usize {
        self.num_fish
    }

    pub fn pond_size(&self) -> f64 {
        self.pond_size
    }

    /// Initial weight scale `W0`; initial weights are uniform in `[W_MIN, W0]`.
    pub fn weight_scale(&self) -> f64 {
        self.weight_scale
    }

    pub fn num_steps(&self) -> usize {
        self.num_steps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn step_base(&self) -> f64 {
        self.step_base
    }

    /// Upper weight bound, `2 * W0`.
    pub fn w_max(&self) -> f64 {
        2.0 * self.weight_scale
    }

    /// Largest possible objective: center-to-corner distance.
    pub fn max_objective(&self) -> f64 {
        self.pond_size * std::f64::consts::SQRT_2 / 2.0
    }

    fn validate(self) -> Result<Self, SimConfigError> {
        if !(self.pond_size.is_finite() && self.pond_size > 0.0) {
            return Err(SimConfigError::PondSize(self.pond_size));
        }
        if !(self.weight_scale.is_finite() && self.weight_scale >= W_MIN) {
            return Err(SimConfigError::WeightScale(self.weight_scale));
        }
        if !(self.step_base.is_finite() && self.step_base > 0.0) {
            return Err(SimConfigError::StepBase(self.step_base));
        }
        Ok(self)
    }
}

#[derive(Debug, Clone)]
pub struct SimConfigBuilder(SimConfig);

impl SimConfigBuilder {
    pub fn num_fish(mut self, n: usize) -> Self {
        self.0.num_fish = n;
        self
    }

    pub fn pond_size(mut self, size: f64) -> Self {
        self.0.pond_size = size;
        self
    }

    pub fn weight_scale(mut self, w0: f64) -> Self {
        self.0.weight_scale = w0;
        self
    }

    pub fn num_steps(mut self, steps: usize) -> Self {
        self.0.num_steps = steps;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.0.seed = seed;
        self
    }

    pub fn step_base(mut self, step: f64) -> Self {
        self.0.step_base = step;
        self
    }

    pub fn build(self) -> Result<SimConfig, SimConfigError> {
        self.0.validate()
    }
}
