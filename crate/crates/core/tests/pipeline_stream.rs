//! End-to-end streaming behavior over synthetic traces.

use pupilrig_core::pipeline::{CalibrationSettings, FrameInput, Pipeline, PipelineConfig, SmoothingSettings};
use pupilrig_core::synth::{generate_trace, GazeSample, SubjectProfile};
use pupilrig_core::{Direction, ProbeReference, Side};

fn run_pipeline(config: PipelineConfig, profile: &SubjectProfile, signal: &[GazeSample], seed: u64)
    -> Vec<pupilrig_core::BlendShapeFrame>
{
    let mut pipeline = Pipeline::new(config).unwrap();
    generate_trace(profile, signal, seed)
        .unwrap()
        .iter()
        .map(|f| pipeline.process_frame(FrameInput::Refined(&f.mesh)).unwrap())
        .collect()
}

/// A subject whose resting pupil sits low enough to offset the downward
/// probe's neutral displacement by +20%: bias_y = 0.2 * eye_height / 2.
fn biased_subject() -> SubjectProfile {
    SubjectProfile {
        neutral_bias: [0.0, 0.2 * 0.05 / 2.0],
        noise_sigma: 0.001,
        ..SubjectProfile::default()
    }
}

#[test]
fn biased_subject_recenters_after_calibration() {
    let profile = biased_subject();
    let signal = vec![GazeSample::NEUTRAL; 300];

    let calibrated = run_pipeline(PipelineConfig::default(), &profile, &signal, 42);
    let last = &calibrated[299].smoothed;
    assert!(last.vertical.abs() < 0.05, "vertical {}", last.vertical);
    assert!(last.horizontal_left.abs() < 0.05);
    assert!(last.horizontal_right.abs() < 0.05);

    let mut uncalibrated_cfg = PipelineConfig::default();
    uncalibrated_cfg.calibration.calibrate_neutral = false;
    let uncalibrated = run_pipeline(uncalibrated_cfg, &profile, &signal, 42);
    let worst = uncalibrated[299]
        .smoothed
        .vertical
        .abs()
        .max(uncalibrated[299].smoothed.horizontal_left.abs());
    assert!(worst > 0.15, "uncalibrated error {worst}");
}

#[test]
fn drifting_neutral_displacement_has_jitter_around_slow_trend() {
    // The downward probe's measured neutral displacement should show
    // per-frame jitter riding on a slowly varying component.
    let profile = SubjectProfile {
        drift_amplitude: 0.004,
        drift_period: 600.0,
        noise_sigma: 0.001,
        ..SubjectProfile::default()
    };
    let mut config = PipelineConfig::default();
    config.smoothing.enabled = false;
    let outputs = run_pipeline(config, &profile, &vec![GazeSample::NEUTRAL; 600], 7);

    let series: Vec<f64> = outputs
        .iter()
        .map(|f| {
            f.calibration
                .iter()
                .find(|s| {
                    s.eye == Side::Left
                        && s.direction == Direction::Downward
                        && s.reference == ProbeReference::Neutral
                })
                .unwrap()
                .d_current
        })
        .collect();

    let jitter: f64 = series.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>()
        / (series.len() - 1) as f64;
    assert!(jitter > 1e-4, "expected per-frame jitter, got {jitter}");

    // 50-frame moving average extracts the trend; drift of amplitude
    // 0.004 normalized by the 0.12 eye width spans about 0.066.
    let window = 50;
    let trend: Vec<f64> = series
        .windows(window)
        .map(|w| w.iter().sum::<f64>() / window as f64)
        .collect();
    let (lo, hi) = trend
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    assert!(hi - lo > 0.03, "trend range {}", hi - lo);
    assert!(hi - lo < 0.09, "trend range {}", hi - lo);
}

#[test]
fn slow_drift_is_tracked_by_the_calibrator() {
    // A subject whose resting pupil drifts sinusoidally. The drift must be
    // slow relative to the buffer: if the per-window lag leaves the
    // confidence interval the filter starts rejecting and tracking stalls.
    let profile = SubjectProfile {
        drift_amplitude: 0.004,
        drift_period: 1800.0,
        noise_sigma: 0.001,
        ..SubjectProfile::default()
    };
    let signal = vec![GazeSample::NEUTRAL; 1800];

    let mean_vertical_error_after_warmup = |config: PipelineConfig| {
        let outputs = run_pipeline(config, &profile, &signal, 19);
        let tail = &outputs[300..];
        tail.iter().map(|f| f.smoothed.vertical.abs()).sum::<f64>() / tail.len() as f64
    };

    let calibrated = mean_vertical_error_after_warmup(PipelineConfig::default());
    let mut config = PipelineConfig::default();
    config.calibration.calibrate_neutral = false;
    let uncalibrated = mean_vertical_error_after_warmup(config);

    assert!(uncalibrated > 0.10, "uncalibrated drift error {uncalibrated}");
    assert!(calibrated < 0.06, "calibrated drift error {calibrated}");
    assert!(
        calibrated < uncalibrated / 2.0,
        "calibration should cut the drift error: {calibrated} vs {uncalibrated}"
    );
}

#[test]
fn calibration_report_values_follow_the_algorithm() {
    // The snapshots exposed per frame must equal a scalar calibrator fed
    // the same displacement stream.
    use pupilrig_core::calibration::Calibrator;

    let profile = biased_subject();
    let signal = vec![GazeSample::NEUTRAL; 120];
    let outputs = run_pipeline(PipelineConfig::default(), &profile, &signal, 13);

    let settings = CalibrationSettings::default();
    let probe_neutral = PipelineConfig::default()
        .probes
        .get(Side::Right, Direction::Upward)
        .d_neutral;
    let mut shadow = Calibrator::new(settings.config_for(probe_neutral)).unwrap();
    for frame in &outputs {
        let snap = frame
            .calibration
            .iter()
            .find(|s| s.eye == Side::Right && s.direction == Direction::Upward)
            .unwrap();
        let upd = shadow.update(snap.d_current).unwrap();
        assert_eq!(upd.d_calibrated.to_bits(), snap.d_calibrated.to_bits());
        assert_eq!(upd.sigma.to_bits(), snap.sigma.to_bits());
        assert_eq!(upd.f_influence.to_bits(), snap.f_influence.to_bits());
    }
}

#[test]
fn smoothing_off_means_smoothed_equals_coupled() {
    let config = PipelineConfig {
        smoothing: SmoothingSettings {
            enabled: false,
            ..SmoothingSettings::default()
        },
        ..PipelineConfig::default()
    };
    let outputs = run_pipeline(
        config,
        &SubjectProfile::default(),
        &[GazeSample::new(0.5, -0.5); 10],
        3,
    );
    for f in outputs {
        assert_eq!(f.coupled, f.smoothed);
    }
}
