use serde::{Deserialize, Serialize};

use super::AlignError;

/// Which edge prior drives the alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlignMode {
    /// Isotropic Gaussian prior, one exact assignment.
    Isotropic,
    /// Biased Gaussian oriented by the local edge tangent plus a Markov
    /// smoothness term, solved by repeated exact Assign steps.
    BiasedMrf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignConfig {
    /// Isotropic bandwidth, pixels.
    pub sigma: f64,
    /// Bandwidth along the edge tangent, pixels.
    pub sigma_x: f64,
    /// Bandwidth across the edge tangent, pixels.
    pub sigma_y: f64,
    /// Markov smoothness strength.
    pub lambda: f64,
    /// Chebyshev radius of the candidate search window, pixels.
    pub window_radius: usize,
    /// Number of exact Assign steps (the first one is the unary-only
    /// initialization).
    pub assign_steps: usize,
    /// Chain steps defining the Markov neighbourhood of an edge pixel.
    pub geodesic_radius: usize,
    /// Chain steps used when fitting the local tangent.
    pub fit_radius: usize,
    /// Probability clamp applied before taking log-odds.
    pub epsilon: f64,
}

/// Radius covering three bandwidths.
pub fn default_window(sigma: f64) -> usize {
    ((3.0 * sigma).ceil() as usize).max(1)
}

impl Default for AlignConfig {
    fn default() -> Self {
        Self {
            sigma: 4.0,
            sigma_x: 1.0,
            sigma_y: 4.0,
            lambda: 0.02,
            window_radius: default_window(4.0),
            assign_steps: 2,
            geodesic_radius: 2,
            fit_radius: 4,
            epsilon: 1e-6,
        }
    }
}

impl AlignConfig {
    /// Narrower perpendicular bandwidth for datasets with cleaner annotation.
    pub fn high_quality() -> Self {
        Self {
            sigma_y: 3.0,
            window_radius: default_window(3.0),
            ..Self::default()
        }
    }

    pub fn validate(&self, mode: AlignMode) -> Result<(), AlignError> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(AlignError::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive("sigma", self.sigma)?;
        positive("sigma_x", self.sigma_x)?;
        positive("sigma_y", self.sigma_y)?;
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(AlignError::InvalidConfig(format!(
                "lambda must be non-negative, got {}",
                self.lambda
            )));
        }
        for (name, v) in [
            ("window_radius", self.window_radius),
            ("assign_steps", self.assign_steps),
            ("geodesic_radius", self.geodesic_radius),
            ("fit_radius", self.fit_radius),
        ] {
            if v == 0 {
                return Err(AlignError::InvalidConfig(format!(
                    "{name} must be at least 1"
                )));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(AlignError::InvalidConfig(format!(
                "epsilon must lie in (0, 0.5), got {}",
                self.epsilon
            )));
        }
        if mode == AlignMode::BiasedMrf && self.sigma_y < self.sigma_x {
            return Err(AlignError::InvalidConfig(format!(
                "sigma_y ({}) must be at least sigma_x ({})",
                self.sigma_y, self.sigma_x
            )));
        }
        Ok(())
    }
}
