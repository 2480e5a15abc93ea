//! Online recalibration of reference displacements via a standard-score
//! filter.
//!
//! The filter keeps a fixed-capacity circular buffer of trusted displacement
//! samples. Each incoming displacement is accepted verbatim when it falls
//! within `thrs_variance * sigma` of the running mean; otherwise it is
//! blended with the mean using a decaying influence factor before insertion.
//! The calibrated displacement is the mean of the buffer, and the buffer's
//! standard deviation (floored) becomes the next confidence interval.

use serde::{Deserialize, Serialize};

use crate::blendshape::DisplacementProbe;
use crate::error::{Error, Result};

/// Which of a probe's reference displacements a calibrator drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeReference {
    Neutral,
    Activated,
}

impl ProbeReference {
    pub fn as_str(self) -> &'static str {
        match self {
            ProbeReference::Neutral => "neutral",
            ProbeReference::Activated => "activated",
        }
    }
}

/// Parameters of one calibrator instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibratorConfig {
    /// Initial displacement estimate; seeds the trusted buffer.
    pub d_initial: f64,
    /// Confidence-interval multiplier applied to sigma.
    pub thrs_variance: f64,
    /// Starting weight of rejected samples in the blended insertion.
    pub f_influence_initial: f64,
    /// Amount the influence factor decreases per update, floored at 0.
    pub f_annealing: f64,
    /// Capacity of the trusted circular buffer.
    pub buffer_capacity: usize,
    /// Lower bound on sigma; keeps the interval open after constant
    /// warm-up streams.
    pub sigma_floor: f64,
}

impl CalibratorConfig {
    /// Defaults for a given initial displacement: threshold 2.0, influence
    /// 0.5 annealed by 0.01 per update, capacity 100, sigma floor at 5% of
    /// the initial displacement.
    pub fn new(d_initial: f64) -> Self {
        Self {
            d_initial,
            thrs_variance: 2.0,
            f_influence_initial: 0.5,
            f_annealing: 0.01,
            buffer_capacity: 100,
            sigma_floor: 0.05 * d_initial,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidConfig(msg.to_string()))
            }
        };
        check(
            self.d_initial.is_finite() && self.d_initial > 0.0,
            "d_initial must be positive",
        )?;
        check(
            self.thrs_variance.is_finite() && self.thrs_variance > 0.0,
            "thrs_variance must be positive",
        )?;
        check(
            (0.0..=1.0).contains(&self.f_influence_initial),
            "f_influence_initial must be in [0, 1]",
        )?;
        check(
            self.f_annealing.is_finite() && self.f_annealing >= 0.0,
            "f_annealing must be nonnegative",
        )?;
        check(self.buffer_capacity >= 2, "buffer_capacity must be at least 2")?;
        check(
            self.sigma_floor.is_finite() && self.sigma_floor >= 0.0,
            "sigma_floor must be nonnegative",
        )
    }
}

/// Everything one update did, for reporting and probe recalibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibratorUpdate {
    pub d_current: f64,
    /// Value actually inserted into the trusted buffer.
    pub d_trusted: f64,
    /// Mean of the trusted buffer after insertion.
    pub d_calibrated: f64,
    /// Floored standard deviation of the buffer after insertion.
    pub sigma: f64,
    /// Influence factor after this update's annealing step.
    pub f_influence: f64,
    /// Whether the sample fell inside the confidence interval.
    pub accepted: bool,
}

/// Standard-score filter state for a single displacement stream.
///
/// Single-owner mutable state: updates on one instance must be serialized,
/// independent instances are free to run on different threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibrator {
    trusted: std::collections::VecDeque<f64>,
    f_influence: f64,
    d_mean: f64,
    sigma: f64,
    config: CalibratorConfig,
}

impl Calibrator {
    /// Seeds the trusted buffer with the configured initial displacement;
    /// sigma starts at the floor.
    pub fn new(config: CalibratorConfig) -> Result<Self> {
        config.validate()?;
        let mut trusted = std::collections::VecDeque::with_capacity(config.buffer_capacity);
        trusted.push_back(config.d_initial);
        Ok(Self {
            trusted,
            f_influence: config.f_influence_initial,
            d_mean: config.d_initial,
            sigma: config.sigma_floor,
            config,
        })
    }

    pub fn config(&self) -> &CalibratorConfig {
        &self.config
    }

    pub fn d_calibrated(&self) -> f64 {
        self.d_mean
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn f_influence(&self) -> f64 {
        self.f_influence
    }

    pub fn len(&self) -> usize {
        self.trusted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trusted.is_empty()
    }

    /// Feeds one displacement through the filter and returns the updated
    /// calibration values.
    pub fn update(&mut self, d_current: f64) -> Result<CalibratorUpdate> {
        if !d_current.is_finite() || d_current < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "displacement must be finite and nonnegative, got {d_current}"
            )));
        }

        let diff = d_current - self.d_mean;
        let half_width = self.config.thrs_variance * self.sigma;
        let accepted = diff.abs() <= half_width;
        let d_trusted = if accepted {
            d_current
        } else {
            let alpha = self.f_influence;
            let beta = 1.0 - self.f_influence;
            alpha * d_current + beta * self.d_mean
        };

        if self.trusted.len() == self.config.buffer_capacity {
            self.trusted.pop_front();
        }
        self.trusted.push_back(d_trusted);
        self.f_influence = (self.f_influence - self.config.f_annealing).max(0.0);

        // Mean and population deviation are recomputed from the buffer every
        // update so the state trajectory is exactly reproducible.
        let n = self.trusted.len() as f64;
        let mean = self.trusted.iter().sum::<f64>() / n;
        let variance = self
            .trusted
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / n;
        self.d_mean = mean;
        self.sigma = variance.sqrt().max(self.config.sigma_floor);

        Ok(CalibratorUpdate {
            d_current,
            d_trusted,
            d_calibrated: self.d_mean,
            sigma: self.sigma,
            f_influence: self.f_influence,
            accepted,
        })
    }
}

/// Returns the probe with the selected reference displaced replaced by the
/// calibrated value. Fails if the replacement would collapse the probe.
pub fn calibrated_probe(
    probe: &DisplacementProbe,
    which: ProbeReference,
    d_calibrated: f64,
) -> Result<DisplacementProbe> {
    let mut out = *probe;
    match which {
        ProbeReference::Neutral => out.d_neutral = d_calibrated,
        ProbeReference::Activated => out.d_activated = d_calibrated,
    }
    if out.d_neutral == out.d_activated {
        return Err(Error::DegenerateProbe {
            value: out.d_neutral,
        });
    }
    Ok(out)
}
