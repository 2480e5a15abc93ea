//! Frame-by-frame streaming pipeline: measure displacements, recalibrate
//! references, activate, merge, couple, smooth.

use serde::{Deserialize, Serialize};

use crate::blendshape::{
    activation, couple_eyes, measure_displacement, merge_opposites, AggregateBlendShapes,
    CoupledBlendShapes, Direction, Normalizer, ProbeTable, RawActivations,
};
use crate::calibration::{calibrated_probe, Calibrator, CalibratorConfig, ProbeReference};
use crate::error::{Error, Result};
use crate::mesh::{merge_refinement, EyeIndexMap, EyeRefinement, FaceMesh, RefinedFaceMesh, Side};
use crate::smoothing::{Smoother, SmootherConfig};
use crate::synth::{default_probe_table, SubjectProfile};

/// Shared calibrator parameters plus the per-reference enable flags.
///
/// Each enabled reference gets its own calibrator per probe, seeded from
/// that probe's reference displacement; `sigma_floor` is expressed as a
/// ratio of the seed value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSettings {
    pub thrs_variance: f64,
    pub f_influence_initial: f64,
    pub f_annealing: f64,
    pub buffer_capacity: usize,
    pub sigma_floor_ratio: f64,
    /// Recalibrate d_neutral online (the common case).
    pub calibrate_neutral: bool,
    /// Recalibrate d_activated online; off by default since the incoming
    /// stream is dominated by near-neutral frames.
    pub calibrate_activated: bool,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            thrs_variance: 2.0,
            f_influence_initial: 0.5,
            f_annealing: 0.01,
            buffer_capacity: 100,
            sigma_floor_ratio: 0.05,
            calibrate_neutral: true,
            calibrate_activated: false,
        }
    }
}

impl CalibrationSettings {
    pub fn enabled(&self) -> bool {
        self.calibrate_neutral || self.calibrate_activated
    }

    /// Resolves the per-probe calibrator config for one reference value.
    pub fn config_for(&self, d_initial: f64) -> CalibratorConfig {
        CalibratorConfig {
            d_initial,
            thrs_variance: self.thrs_variance,
            f_influence_initial: self.f_influence_initial,
            f_annealing: self.f_annealing,
            buffer_capacity: self.buffer_capacity,
            sigma_floor: self.sigma_floor_ratio * d_initial,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_floor_ratio.is_finite() && self.sigma_floor_ratio >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sigma_floor_ratio must be nonnegative, got {}",
                self.sigma_floor_ratio
            )));
        }
        // Remaining fields are validated through a representative config.
        self.config_for(1.0).validate()
    }
}

/// Smoother parameters plus the pipeline-level enable switch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothingSettings {
    pub alpha: f64,
    pub enabled: bool,
}

impl Default for SmoothingSettings {
    fn default() -> Self {
        Self {
            alpha: SmootherConfig::default().alpha,
            enabled: true,
        }
    }
}

/// Full pipeline configuration; the config file is a TOML rendering of this
/// struct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub index_map: EyeIndexMap,
    pub probes: ProbeTable,
    pub calibration: CalibrationSettings,
    pub smoothing: SmoothingSettings,
    /// When set, overrides every probe's normalizer.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalizer: Option<Normalizer>,
    /// Synthetic-subject profile used by the synth and bench commands.
    pub profile: SubjectProfile,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let profile = SubjectProfile::default();
        Self {
            index_map: EyeIndexMap::default(),
            probes: default_probe_table(&profile).expect("default profile is valid"),
            calibration: CalibrationSettings::default(),
            smoothing: SmoothingSettings::default(),
            normalizer: None,
            profile,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.index_map.validate()?;
        for probe in self.probes.iter() {
            probe.validate()?;
        }
        self.calibration.validate()?;
        SmootherConfig {
            alpha: self.smoothing.alpha,
        }
        .validate()?;
        self.profile.validate()
    }
}

/// One frame of input: either an already refined mesh or the coarse mesh
/// plus both per-eye refinements (merged on the fly).
#[derive(Debug, Clone, Copy)]
pub enum FrameInput<'a> {
    Refined(&'a RefinedFaceMesh),
    Split {
        mesh: &'a FaceMesh,
        left: &'a EyeRefinement,
        right: &'a EyeRefinement,
    },
}

/// Calibrator internals captured for one probe reference on one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSnapshot {
    pub eye: Side,
    pub direction: Direction,
    pub reference: ProbeReference,
    pub d_current: f64,
    pub d_trusted: f64,
    pub d_calibrated: f64,
    pub sigma: f64,
    pub f_influence: f64,
}

/// Everything the pipeline produced for one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlendShapeFrame {
    pub frame_index: u64,
    pub raw: RawActivations,
    pub aggregates: AggregateBlendShapes,
    pub coupled: CoupledBlendShapes,
    pub smoothed: CoupledBlendShapes,
    pub calibration: Vec<CalibrationSnapshot>,
}

struct CalibratorSlot {
    eye: Side,
    direction: Direction,
    reference: ProbeReference,
    calibrator: Calibrator,
}

/// Streaming pipeline state. Frames must be processed in order; independent
/// instances are independent.
pub struct Pipeline {
    config: PipelineConfig,
    probes: ProbeTable,
    calibrators: Vec<CalibratorSlot>,
    smoothers: Option<[Smoother; 3]>,
    frame_index: u64,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let mut probes = config.probes.clone();
        if let Some(normalizer) = config.normalizer {
            probes.set_normalizer(normalizer);
        }

        let mut calibrators = Vec::new();
        for probe in probes.iter() {
            let references = [
                (config.calibration.calibrate_neutral, ProbeReference::Neutral, probe.d_neutral),
                (
                    config.calibration.calibrate_activated,
                    ProbeReference::Activated,
                    probe.d_activated,
                ),
            ];
            for (enabled, reference, seed) in references {
                if enabled {
                    calibrators.push(CalibratorSlot {
                        eye: probe.eye,
                        direction: probe.direction,
                        reference,
                        calibrator: Calibrator::new(config.calibration.config_for(seed))?,
                    });
                }
            }
        }

        let smoothers = if config.smoothing.enabled {
            let mk = || {
                Smoother::new(SmootherConfig {
                    alpha: config.smoothing.alpha,
                })
            };
            Some([mk()?, mk()?, mk()?])
        } else {
            None
        };

        Ok(Self {
            config,
            probes,
            calibrators,
            smoothers,
            frame_index: 0,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn frames_processed(&self) -> u64 {
        self.frame_index
    }

    /// Processes one frame: measure, recalibrate, activate, merge, couple,
    /// smooth.
    pub fn process_frame(&mut self, input: FrameInput<'_>) -> Result<BlendShapeFrame> {
        let merged;
        let mesh: &RefinedFaceMesh = match input {
            FrameInput::Refined(mesh) => mesh,
            FrameInput::Split { mesh, left, right } => {
                merged = merge_refinement(mesh, left, right, &self.config.index_map)?;
                &merged
            }
        };

        let mut snapshots = Vec::with_capacity(self.calibrators.len());
        let mut raw = RawActivations::default();
        for side in Side::BOTH {
            for direction in Direction::ALL {
                let probe = *self.probes.get(side, direction);
                let d_current = measure_displacement(mesh, &probe, &self.config.index_map)?;

                // Every frame feeds the calibrators; the filter's own
                // rejection handles non-reference poses.
                let mut effective = probe;
                for slot in self
                    .calibrators
                    .iter_mut()
                    .filter(|s| s.eye == side && s.direction == direction)
                {
                    let update = slot.calibrator.update(d_current)?;
                    effective =
                        calibrated_probe(&effective, slot.reference, update.d_calibrated)?;
                    snapshots.push(CalibrationSnapshot {
                        eye: side,
                        direction,
                        reference: slot.reference,
                        d_current: update.d_current,
                        d_trusted: update.d_trusted,
                        d_calibrated: update.d_calibrated,
                        sigma: update.sigma,
                        f_influence: update.f_influence,
                    });
                }

                let act = activation(d_current, effective.d_neutral, effective.d_activated);
                let eye = match side {
                    Side::Left => &mut raw.left,
                    Side::Right => &mut raw.right,
                };
                match direction {
                    Direction::Outward => eye.outward = act,
                    Direction::Inward => eye.inward = act,
                    Direction::Upward => eye.upward = act,
                    Direction::Downward => eye.downward = act,
                }
            }
        }

        let aggregates = merge_opposites(&raw);
        let coupled = couple_eyes(&aggregates);
        let smoothed = match &mut self.smoothers {
            Some([v, l, r]) => CoupledBlendShapes {
                vertical: v.smooth(coupled.vertical)?,
                horizontal_left: l.smooth(coupled.horizontal_left)?,
                horizontal_right: r.smooth(coupled.horizontal_right)?,
            },
            None => coupled,
        };

        #[cfg(debug_assertions)]
        {
            for acts in [&raw.left, &raw.right] {
                for v in [acts.outward, acts.inward, acts.upward, acts.downward] {
                    debug_assert!((0.0..=1.0).contains(&v), "raw activation {v} out of range");
                }
            }
            for c in [&coupled, &smoothed] {
                for v in [c.vertical, c.horizontal_left, c.horizontal_right] {
                    debug_assert!((-1.0..=1.0).contains(&v), "coefficient {v} out of range");
                }
            }
        }

        let frame_index = self.frame_index;
        self.frame_index += 1;
        Ok(BlendShapeFrame {
            frame_index,
            raw,
            aggregates,
            coupled,
            smoothed,
            calibration: snapshots,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_trace, GazeSample, SubjectProfile};

    fn noiseless() -> SubjectProfile {
        SubjectProfile {
            noise_sigma: 0.0,
            ..SubjectProfile::default()
        }
    }

    fn plain_config() -> PipelineConfig {
        PipelineConfig {
            calibration: CalibrationSettings {
                calibrate_neutral: false,
                calibrate_activated: false,
                ..CalibrationSettings::default()
            },
            smoothing: SmoothingSettings {
                enabled: false,
                ..SmoothingSettings::default()
            },
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn neutral_stream_converges_to_zero() {
        let mut pipeline = Pipeline::new(PipelineConfig::default()).unwrap();
        let frames = generate_trace(&noiseless(), &vec![GazeSample::NEUTRAL; 40], 1).unwrap();
        let mut last = None;
        for f in &frames {
            last = Some(pipeline.process_frame(FrameInput::Refined(&f.mesh)).unwrap());
        }
        let out = last.unwrap().smoothed;
        assert!(out.vertical.abs() < 1e-9);
        assert!(out.horizontal_left.abs() < 1e-9);
        assert!(out.horizontal_right.abs() < 1e-9);
    }

    #[test]
    fn full_up_stream_converges_to_one() {
        let mut pipeline = Pipeline::new(PipelineConfig::default()).unwrap();
        let frames =
            generate_trace(&noiseless(), &vec![GazeSample::new(0.0, 1.0); 60], 1).unwrap();
        let mut last = None;
        for f in &frames {
            last = Some(pipeline.process_frame(FrameInput::Refined(&f.mesh)).unwrap());
        }
        let out = last.unwrap().smoothed;
        assert!((out.vertical - 1.0).abs() < 1e-9, "vertical {}", out.vertical);
    }

    #[test]
    fn disabled_pipeline_equals_component_composition() {
        use crate::blendshape::{couple_eyes, merge_opposites, raw_activations};
        use rand::{Rng, SeedableRng};

        let config = plain_config();
        let mut pipeline = Pipeline::new(config.clone()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let profile = SubjectProfile::default();
        let signal: Vec<GazeSample> = (0..1000)
            .map(|_| GazeSample::new(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0))
            .collect();
        let frames = generate_trace(&profile, &signal, 23).unwrap();
        for f in &frames {
            let got = pipeline.process_frame(FrameInput::Refined(&f.mesh)).unwrap();
            let raw = raw_activations(&f.mesh, &config.probes, &config.index_map).unwrap();
            let expected = couple_eyes(&merge_opposites(&raw));
            assert_eq!(got.coupled, expected);
            assert_eq!(got.smoothed, expected);
            assert!(got.calibration.is_empty());
        }
    }

    #[test]
    fn split_input_matches_refined_input() {
        use crate::mesh::{eye_roi, frame_to_crop, EyeRefinement, FaceMesh};

        let profile = noiseless();
        let config = plain_config();
        let frames = generate_trace(
            &profile,
            &[
                GazeSample::new(0.3, -0.6),
                GazeSample::new(-0.9, 0.2),
                GazeSample::NEUTRAL,
            ],
            3,
        )
        .unwrap();

        let mut refined_pipe = Pipeline::new(config.clone()).unwrap();
        let mut split_pipe = Pipeline::new(config.clone()).unwrap();
        for f in &frames {
            let refined_out = refined_pipe
                .process_frame(FrameInput::Refined(&f.mesh))
                .unwrap();

            // Rebuild the split representation from the refined mesh.
            let face =
                FaceMesh::new(f.mesh.vertices()[..crate::mesh::FACE_VERTEX_COUNT].to_vec())
                    .unwrap();
            let mut refinements = Vec::new();
            for side in Side::BOTH {
                let crop =
                    eye_roi(&face, side, &config.index_map, 640, 480, 1.0).unwrap();
                let indices = config.index_map.eye(side);
                let contour = indices
                    .contour
                    .iter()
                    .map(|&i| {
                        let v = f.mesh.vertex(i).unwrap();
                        frame_to_crop(&crop, v.x, v.y)
                    })
                    .collect();
                let base = RefinedFaceMesh::iris_base(side);
                let iris = (0..crate::mesh::IRIS_POINT_COUNT)
                    .map(|k| {
                        let v = f.mesh.vertex(base + k).unwrap();
                        frame_to_crop(&crop, v.x, v.y)
                    })
                    .collect();
                refinements.push(EyeRefinement::new(side, contour, iris, crop).unwrap());
            }
            let split_out = split_pipe
                .process_frame(FrameInput::Split {
                    mesh: &face,
                    left: &refinements[0],
                    right: &refinements[1],
                })
                .unwrap();

            assert!((refined_out.coupled.vertical - split_out.coupled.vertical).abs() < 1e-9);
            assert!(
                (refined_out.coupled.horizontal_left - split_out.coupled.horizontal_left).abs()
                    < 1e-9
            );
            assert!(
                (refined_out.coupled.horizontal_right - split_out.coupled.horizontal_right).abs()
                    < 1e-9
            );
        }
    }

    #[test]
    fn state_trajectory_is_deterministic() {
        let profile = SubjectProfile {
            neutral_bias: [0.001, 0.004],
            drift_amplitude: 0.002,
            ..SubjectProfile::default()
        };
        let signal: Vec<GazeSample> = (0..200)
            .map(|i| GazeSample::new(0.8 * (i as f64 / 30.0).sin(), 0.5 * (i as f64 / 47.0).cos()))
            .collect();
        let run = || {
            let mut pipeline = Pipeline::new(PipelineConfig::default()).unwrap();
            generate_trace(&profile, &signal, 77)
                .unwrap()
                .iter()
                .map(|f| pipeline.process_frame(FrameInput::Refined(&f.mesh)).unwrap())
                .collect::<Vec<_>>()
        };
        let (a, b) = (run(), run());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.smoothed.vertical.to_bits(), y.smoothed.vertical.to_bits());
            assert_eq!(
                x.smoothed.horizontal_left.to_bits(),
                y.smoothed.horizontal_left.to_bits()
            );
            for (cx, cy) in x.calibration.iter().zip(&y.calibration) {
                assert_eq!(cx.d_calibrated.to_bits(), cy.d_calibrated.to_bits());
            }
        }
    }

    #[test]
    fn snapshots_cover_enabled_references() {
        let mut config = PipelineConfig::default();
        config.calibration.calibrate_activated = true;
        let mut pipeline = Pipeline::new(config).unwrap();
        let frames = generate_trace(&noiseless(), &[GazeSample::NEUTRAL], 1).unwrap();
        let out = pipeline
            .process_frame(FrameInput::Refined(&frames[0].mesh))
            .unwrap();
        // 8 probes x 2 references.
        assert_eq!(out.calibration.len(), 16);
        assert!(out
            .calibration
            .iter()
            .any(|s| s.reference == ProbeReference::Activated));
    }

    #[test]
    fn config_rejects_invalid_pieces() {
        let mut config = PipelineConfig::default();
        config.smoothing.alpha = 0.0;
        assert!(Pipeline::new(config).is_err());

        let mut config = PipelineConfig::default();
        config.calibration.buffer_capacity = 1;
        assert!(Pipeline::new(config).is_err());
    }
}
