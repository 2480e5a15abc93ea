//! Analytic eyeball-model generator: produces refined-mesh traces with
//! ground-truth gaze, per-subject offsets, slow drift, and noise, plus the
//! closed-form oracle used to verify the pipeline end to end.
//!
//! Geometry (all in normalized frame coordinates): each eye's 16 contour
//! points sit on an ellipse of the configured width/height around the eye
//! center, with the corners at the horizontal extremes. The pupil center
//! moves linearly with gaze, `+gx` toward image right and `+gy` up, and
//! carries the per-subject bias, the sinusoidal drift, and truncated
//! Gaussian noise. Four iris ring points ride rigidly with the pupil.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::blendshape::{
    CoupledBlendShapes, Direction, DisplacementProbe, Normalizer, ProbeTable,
};
use crate::error::{Error, Result};
use crate::mesh::{
    FaceMesh, Landmark3, RefinedFaceMesh, Side, FACE_VERTEX_COUNT, LEFT_CONTOUR_BASE,
    LEFT_IRIS_BASE, RIGHT_CONTOUR_BASE, RIGHT_EYE_CENTER_INDEX, RIGHT_IRIS_BASE,
};

/// Iris ring radius as a fraction of the eye height.
const IRIS_RING_FRACTION: f64 = 0.4;
/// Noise draws are truncated at this many standard deviations.
const NOISE_TRUNCATION: f64 = 4.0;

/// Geometry and nuisance parameters of one synthetic subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubjectProfile {
    pub eye_width: f64,
    pub eye_height: f64,
    pub eye_center_left: [f64; 2],
    pub eye_center_right: [f64; 2],
    /// Pupil offset at full horizontal gaze.
    pub pupil_travel_x: f64,
    /// Pupil offset at full vertical gaze.
    pub pupil_travel_y: f64,
    /// Per-subject pupil offset present at neutral gaze.
    pub neutral_bias: [f64; 2],
    /// Amplitude of the slow sinusoidal drift added to the pupil center.
    pub drift_amplitude: f64,
    /// Drift period in frames.
    pub drift_period: f64,
    /// Standard deviation of the per-frame pupil noise.
    pub noise_sigma: f64,
    /// Constant depth assigned to every landmark.
    pub z_plane: f64,
}

impl Default for SubjectProfile {
    fn default() -> Self {
        Self {
            eye_width: 0.12,
            eye_height: 0.05,
            eye_center_left: [0.35, 0.45],
            eye_center_right: [0.65, 0.45],
            pupil_travel_x: 0.035,
            pupil_travel_y: 0.02,
            neutral_bias: [0.0, 0.0],
            drift_amplitude: 0.0,
            drift_period: 600.0,
            noise_sigma: 0.001,
            z_plane: 0.0,
        }
    }
}

impl SubjectProfile {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")))
            }
        };
        positive("eye_width", self.eye_width)?;
        positive("eye_height", self.eye_height)?;
        positive("pupil_travel_x", self.pupil_travel_x)?;
        positive("pupil_travel_y", self.pupil_travel_y)?;
        positive("drift_period", self.drift_period)?;
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "noise_sigma must be nonnegative, got {}",
                self.noise_sigma
            )));
        }
        if !(self.drift_amplitude.is_finite() && self.drift_amplitude >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "drift_amplitude must be nonnegative, got {}",
                self.drift_amplitude
            )));
        }
        let finite = [
            self.eye_center_left[0],
            self.eye_center_left[1],
            self.eye_center_right[0],
            self.eye_center_right[1],
            self.neutral_bias[0],
            self.neutral_bias[1],
            self.z_plane,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("profile contains non-finite values".into()));
        }
        Ok(())
    }

    fn eye_center(&self, side: Side) -> [f64; 2] {
        match side {
            Side::Left => self.eye_center_left,
            Side::Right => self.eye_center_right,
        }
    }

    /// The profile scaled uniformly by `k` about the frame center. Lengths
    /// (including noise and drift) scale by `k`; depth is unchanged.
    pub fn scaled_about_frame_center(&self, k: f64) -> Self {
        let scale_point = |p: [f64; 2]| [0.5 + k * (p[0] - 0.5), 0.5 + k * (p[1] - 0.5)];
        Self {
            eye_width: k * self.eye_width,
            eye_height: k * self.eye_height,
            eye_center_left: scale_point(self.eye_center_left),
            eye_center_right: scale_point(self.eye_center_right),
            pupil_travel_x: k * self.pupil_travel_x,
            pupil_travel_y: k * self.pupil_travel_y,
            neutral_bias: [k * self.neutral_bias[0], k * self.neutral_bias[1]],
            drift_amplitude: k * self.drift_amplitude,
            drift_period: self.drift_period,
            noise_sigma: k * self.noise_sigma,
            z_plane: self.z_plane,
        }
    }
}

/// Ground-truth gaze: `+gx` toward image right, `+gy` up, both in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeSample {
    pub gx: f64,
    pub gy: f64,
}

impl GazeSample {
    pub fn new(gx: f64, gy: f64) -> Self {
        Self { gx, gy }
    }

    pub const NEUTRAL: GazeSample = GazeSample { gx: 0.0, gy: 0.0 };
}

/// One generated frame with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthFrame {
    pub mesh: RefinedFaceMesh,
    pub truth: GazeSample,
    pub frame_index: u64,
}

/// Streaming generator; deterministic given (profile, seed, gaze sequence).
#[derive(Debug, Clone)]
pub struct TraceGenerator {
    profile: SubjectProfile,
    rng: ChaCha8Rng,
    frame_index: u64,
    face_prefix: Vec<Landmark3>,
}

impl TraceGenerator {
    pub fn new(profile: SubjectProfile, seed: u64) -> Result<Self> {
        profile.validate()?;
        let face_prefix = face_prefix(&profile);
        Ok(Self {
            profile,
            rng: ChaCha8Rng::seed_from_u64(seed),
            frame_index: 0,
            face_prefix,
        })
    }

    pub fn profile(&self) -> &SubjectProfile {
        &self.profile
    }

    /// Generates the next frame for the given gaze.
    pub fn next_frame(&mut self, truth: GazeSample) -> SynthFrame {
        let p = &self.profile;
        let drift = p.drift_amplitude
            * (2.0 * std::f64::consts::PI * self.frame_index as f64 / p.drift_period).sin();
        let ring = IRIS_RING_FRACTION * p.eye_height;

        let mut vertices = self.face_prefix.clone();
        for side in Side::BOTH {
            // Noise draws happen for both axes of both eyes on every frame
            // so the random stream position does not depend on sigma.
            let zx: f64 = self.rng.sample(StandardNormal);
            let zy: f64 = self.rng.sample(StandardNormal);
            let nx = zx.clamp(-NOISE_TRUNCATION, NOISE_TRUNCATION) * p.noise_sigma;
            let ny = zy.clamp(-NOISE_TRUNCATION, NOISE_TRUNCATION) * p.noise_sigma;

            let center = p.eye_center(side);
            let px = center[0] + truth.gx * p.pupil_travel_x + p.neutral_bias[0] + drift + nx;
            let py = center[1] - truth.gy * p.pupil_travel_y + p.neutral_bias[1] + drift + ny;

            // Pupil center, then ring points toward image right/up/left/down.
            vertices.push(Landmark3::new(px, py, p.z_plane));
            vertices.push(Landmark3::new(px + ring, py, p.z_plane));
            vertices.push(Landmark3::new(px, py - ring, p.z_plane));
            vertices.push(Landmark3::new(px - ring, py, p.z_plane));
            vertices.push(Landmark3::new(px, py + ring, p.z_plane));
        }

        let mesh = RefinedFaceMesh::new(vertices).expect("generator invariant");
        let frame_index = self.frame_index;
        self.frame_index += 1;
        SynthFrame {
            mesh,
            truth,
            frame_index,
        }
    }
}

/// Generates one frame per gaze sample.
pub fn generate_trace(
    profile: &SubjectProfile,
    signal: &[GazeSample],
    seed: u64,
) -> Result<Vec<SynthFrame>> {
    if signal.is_empty() {
        return Err(Error::InvalidArgument("gaze signal is empty".into()));
    }
    let mut generator = TraceGenerator::new(profile.clone(), seed)?;
    Ok(signal.iter().map(|&g| generator.next_frame(g)).collect())
}

/// The generator's static 468-vertex face for a profile (contours, eye
/// centers, canonical filler vertices).
pub fn neutral_face(profile: &SubjectProfile) -> FaceMesh {
    FaceMesh::new(face_prefix(profile)).expect("generator invariant")
}

fn face_prefix(profile: &SubjectProfile) -> Vec<Landmark3> {
    let a = profile.eye_width / 2.0;
    let b = profile.eye_height / 2.0;
    let z = profile.z_plane;
    let mut vertices = Vec::with_capacity(FACE_VERTEX_COUNT + 10);

    let mut push_eye = |center: [f64; 2]| {
        for k in 0..16 {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / 16.0;
            vertices.push(Landmark3::new(
                center[0] + a * theta.cos(),
                center[1] + b * theta.sin(),
                z,
            ));
        }
        vertices.push(Landmark3::new(center[0], center[1], z));
    };
    push_eye(profile.eye_center_left);
    push_eye(profile.eye_center_right);
    debug_assert_eq!(vertices.len(), RIGHT_EYE_CENTER_INDEX + 1);

    // Filler face vertices on a fixed grid; nothing in scope reads them.
    let remaining = FACE_VERTEX_COUNT - vertices.len();
    for i in 0..remaining {
        let col = (i % 22) as f64;
        let row = (i / 22) as f64;
        vertices.push(Landmark3::new(
            0.05 + 0.9 * col / 21.0,
            0.05 + 0.9 * row / 19.0,
            z,
        ));
    }
    vertices
}

/// The default probe table implied by a profile's geometry: inward/outward
/// pair the pupil with the eye corners, upward/downward pair it with the
/// opposite lid's contour midpoint, all eye-width normalized.
pub fn default_probe_table(profile: &SubjectProfile) -> Result<ProbeTable> {
    profile.validate()?;
    let a = profile.eye_width / 2.0;
    let b = profile.eye_height / 2.0;
    let w = profile.eye_width;
    if profile.pupil_travel_x >= a {
        return Err(Error::InvalidConfig(format!(
            "pupil_travel_x {} must stay below the eye half-width {a}",
            profile.pupil_travel_x
        )));
    }
    let corner_neutral = a / w;
    let corner_activated = (a - profile.pupil_travel_x) / w;
    let lid_neutral = b / w;
    let lid_activated = (b + profile.pupil_travel_y) / w;

    let mut probes = Vec::with_capacity(8);
    for side in Side::BOTH {
        let (pupil, contour_base) = match side {
            Side::Left => (LEFT_IRIS_BASE, LEFT_CONTOUR_BASE),
            Side::Right => (RIGHT_IRIS_BASE, RIGHT_CONTOUR_BASE),
        };
        // Contour offsets: 0 is the +x extreme, 8 the -x extreme, 4 the
        // lower lid midpoint, 12 the upper lid midpoint.
        let (inner, outer) = match side {
            Side::Left => (contour_base, contour_base + 8),
            Side::Right => (contour_base + 8, contour_base),
        };
        let pairs = [
            (Direction::Outward, outer, corner_neutral, corner_activated),
            (Direction::Inward, inner, corner_neutral, corner_activated),
            (Direction::Upward, contour_base + 4, lid_neutral, lid_activated),
            (Direction::Downward, contour_base + 12, lid_neutral, lid_activated),
        ];
        for (direction, anchor, d_neutral, d_activated) in pairs {
            probes.push(DisplacementProbe {
                eye: side,
                direction,
                vertex_a: pupil,
                vertex_b: anchor,
                d_neutral,
                d_activated,
                normalizer: Normalizer::EyeWidth,
            });
        }
    }
    ProbeTable::new(probes)
}

/// Closed-form expected coupled coefficients for a gaze, computed from the
/// profile geometry and the default probe table without touching the mesh
/// or pipeline code paths.
///
/// Assumes zero drift and zero noise; the per-subject bias is included. For
/// on-axis gaze and at the travel extremes this reduces to
/// `vertical = gy`, `horizontal_left = horizontal_right = gx`.
pub fn oracle_blendshapes(profile: &SubjectProfile, truth: GazeSample) -> CoupledBlendShapes {
    let a = profile.eye_width / 2.0;
    let b = profile.eye_height / 2.0;
    let w = profile.eye_width;
    let mx = truth.gx * profile.pupil_travel_x + profile.neutral_bias[0];
    let my = -truth.gy * profile.pupil_travel_y + profile.neutral_bias[1];

    let corner_neutral = a / w;
    let corner_activated = (a - profile.pupil_travel_x) / w;
    let lid_neutral = b / w;
    let lid_activated = (b + profile.pupil_travel_y) / w;
    let clip = |t: f64| t.clamp(0.0, 1.0);
    // Corner probes have d_activated < d_neutral: activation rises as the
    // pupil closes in on the corner.
    let corner_act = |d: f64| clip((corner_neutral - d) / (corner_neutral - corner_activated));
    let lid_act = |d: f64| clip((d - lid_neutral) / (lid_activated - lid_neutral));

    let d_to_plus_corner = f64::hypot(a - mx, my) / w;
    let d_to_minus_corner = f64::hypot(a + mx, my) / w;
    let d_to_lower_lid = f64::hypot(mx, b - my) / w;
    let d_to_upper_lid = f64::hypot(mx, b + my) / w;

    let upward = lid_act(d_to_lower_lid);
    let downward = lid_act(d_to_upper_lid);
    let vertical_each = upward - downward;

    // Left eye: inner corner on the +x side. Right eye: mirrored roles.
    let (left_in, left_out) = (corner_act(d_to_plus_corner), corner_act(d_to_minus_corner));
    let (right_in, right_out) = (corner_act(d_to_minus_corner), corner_act(d_to_plus_corner));
    let h_left = left_in - left_out;
    let h_right = right_out - right_in;

    let sign = |v: f64| if v < 0.0 { -1.0 } else { 1.0 };
    let magnitude = (h_left.abs() + h_right.abs()) / 2.0;
    CoupledBlendShapes {
        vertical: (vertical_each + vertical_each) / 2.0,
        horizontal_left: magnitude * sign(h_left),
        horizontal_right: magnitude * sign(h_right),
    }
}
