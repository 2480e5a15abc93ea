//! Temporal smoothing of coefficient streams.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponential-moving-average configuration. `alpha` is the weight of the
/// new sample; 1.0 is a passthrough.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmootherConfig {
    pub alpha: f64,
}

impl Default for SmootherConfig {
    fn default() -> Self {
        Self { alpha: 0.5 }
    }
}

impl SmootherConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha.is_finite() && self.alpha > 0.0 && self.alpha <= 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "smoother alpha must be in (0, 1], got {}",
                self.alpha
            )))
        }
    }
}

/// Exponential moving average over a single scalar stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Smoother {
    last: Option<f64>,
    config: SmootherConfig,
}

impl Smoother {
    pub fn new(config: SmootherConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { last: None, config })
    }

    /// First sample passes through unchanged; afterwards
    /// `out = alpha * value + (1 - alpha) * last`.
    pub fn smooth(&mut self, value: f64) -> Result<f64> {
        if !value.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "smoother input must be finite, got {value}"
            )));
        }
        let out = match self.last {
            None => value,
            Some(last) => self.config.alpha * value + (1.0 - self.config.alpha) * last,
        };
        self.last = Some(out);
        Ok(out)
    }
}
