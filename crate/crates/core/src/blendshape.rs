//! Displacement-based pupil blend-shape estimation.
//!
//! Each blend shape is driven by one vertex pair on the refined mesh: the
//! measured displacement between the pair is compared against a neutral and
//! an activated reference, producing a raw activation in `[0, 1]`. Opposite
//! directions merge into signed aggregates, and the two eyes are coupled
//! into the final coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{EyeIndexMap, RefinedFaceMesh, Side};

/// Pupil blend-shape direction, in anatomical terms per eye.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Outward,
    Inward,
    Upward,
    Downward,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Outward,
        Direction::Inward,
        Direction::Upward,
        Direction::Downward,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Outward => "outward",
            Direction::Inward => "inward",
            Direction::Upward => "upward",
            Direction::Downward => "downward",
        }
    }
}

/// How a measured displacement is normalized before comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalizer {
    None,
    /// Divide by the distance between the eye's inner and outer corner.
    /// Removes the camera-distance confound.
    #[default]
    EyeWidth,
}

/// One blend shape's vertex pair and reference displacements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisplacementProbe {
    pub eye: Side,
    pub direction: Direction,
    /// Index into the refined mesh; the moving vertex by convention.
    pub vertex_a: usize,
    /// Index into the refined mesh; the anchor vertex by convention.
    pub vertex_b: usize,
    /// Displacement measured at zero activation.
    pub d_neutral: f64,
    /// Displacement measured at full activation.
    pub d_activated: f64,
    #[serde(default)]
    pub normalizer: Normalizer,
}

impl DisplacementProbe {
    pub fn validate(&self) -> Result<()> {
        if self.vertex_a == self.vertex_b {
            return Err(Error::InvalidConfig(format!(
                "{} {} probe uses the same vertex {} twice",
                self.eye.as_str(),
                self.direction.as_str(),
                self.vertex_a
            )));
        }
        for (name, d) in [("d_neutral", self.d_neutral), ("d_activated", self.d_activated)] {
            if !(d.is_finite() && d >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{} {} probe: {name} must be finite and nonnegative, got {d}",
                    self.eye.as_str(),
                    self.direction.as_str()
                )));
            }
        }
        if self.d_neutral == self.d_activated {
            return Err(Error::DegenerateProbe {
                value: self.d_neutral,
            });
        }
        Ok(())
    }
}

/// Complete probe table: exactly one probe per (eye, direction), stored in
/// canonical order (left then right, directions as in [`Direction::ALL`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<DisplacementProbe>", into = "Vec<DisplacementProbe>")]
pub struct ProbeTable {
    probes: Vec<DisplacementProbe>,
}

impl ProbeTable {
    pub fn new(probes: Vec<DisplacementProbe>) -> Result<Self> {
        let mut ordered = Vec::with_capacity(8);
        for side in Side::BOTH {
            for direction in Direction::ALL {
                let mut found = probes
                    .iter()
                    .filter(|p| p.eye == side && p.direction == direction);
                let probe = found.next().ok_or_else(|| {
                    Error::InvalidConfig(format!(
                        "missing probe for {} {}",
                        side.as_str(),
                        direction.as_str()
                    ))
                })?;
                if found.next().is_some() {
                    return Err(Error::InvalidConfig(format!(
                        "duplicate probe for {} {}",
                        side.as_str(),
                        direction.as_str()
                    )));
                }
                probe.validate()?;
                ordered.push(*probe);
            }
        }
        Ok(Self { probes: ordered })
    }

    pub fn get(&self, side: Side, direction: Direction) -> &DisplacementProbe {
        let s = match side {
            Side::Left => 0,
            Side::Right => 1,
        };
        let d = Direction::ALL.iter().position(|&x| x == direction).unwrap();
        &self.probes[s * 4 + d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &DisplacementProbe> {
        self.probes.iter()
    }

    /// Replaces every probe's normalizer.
    pub fn set_normalizer(&mut self, normalizer: Normalizer) {
        for p in &mut self.probes {
            p.normalizer = normalizer;
        }
    }
}

impl TryFrom<Vec<DisplacementProbe>> for ProbeTable {
    type Error = Error;

    fn try_from(probes: Vec<DisplacementProbe>) -> Result<Self> {
        Self::new(probes)
    }
}

impl From<ProbeTable> for Vec<DisplacementProbe> {
    fn from(table: ProbeTable) -> Self {
        table.probes
    }
}

/// Raw activations for one eye, one per direction, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EyeActivations {
    pub outward: f64,
    pub inward: f64,
    pub upward: f64,
    pub downward: f64,
}

impl EyeActivations {
    pub fn get(&self, direction: Direction) -> f64 {
        match direction {
            Direction::Outward => self.outward,
            Direction::Inward => self.inward,
            Direction::Upward => self.upward,
            Direction::Downward => self.downward,
        }
    }

    fn set(&mut self, direction: Direction, value: f64) {
        match direction {
            Direction::Outward => self.outward = value,
            Direction::Inward => self.inward = value,
            Direction::Upward => self.upward = value,
            Direction::Downward => self.downward = value,
        }
    }
}

/// Raw per-direction activations for both eyes.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RawActivations {
    pub left: EyeActivations,
    pub right: EyeActivations,
}

impl RawActivations {
    pub fn eye(&self, side: Side) -> &EyeActivations {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }
}

/// Signed aggregates for one eye: `horizontal` is +1 toward image right,
/// `vertical` is +1 up.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EyeAggregates {
    pub horizontal: f64,
    pub vertical: f64,
}

/// Per-eye signed aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AggregateBlendShapes {
    pub left: EyeAggregates,
    pub right: EyeAggregates,
}

/// Final coupled coefficients: a shared vertical plus per-eye horizontals of
/// equal magnitude (signs preserved, so vergence survives coupling).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CoupledBlendShapes {
    pub vertical: f64,
    pub horizontal_left: f64,
    pub horizontal_right: f64,
}

/// Measures the displacement between a probe's vertex pair in the x,y plane,
/// normalized per the probe's normalizer.
pub fn measure_displacement(
    mesh: &RefinedFaceMesh,
    probe: &DisplacementProbe,
    index_map: &EyeIndexMap,
) -> Result<f64> {
    let a = mesh.vertex(probe.vertex_a)?;
    let b = mesh.vertex(probe.vertex_b)?;
    let d = (a.x - b.x).hypot(a.y - b.y);
    match probe.normalizer {
        Normalizer::None => Ok(d),
        Normalizer::EyeWidth => {
            let indices = index_map.eye(probe.eye);
            let inner = mesh.vertex(indices.corner_inner)?;
            let outer = mesh.vertex(indices.corner_outer)?;
            let width = (inner.x - outer.x).hypot(inner.y - outer.y);
            if width < 1e-9 {
                return Err(Error::DegenerateGeometry(format!(
                    "{} eye width {width} below 1e-9",
                    probe.eye.as_str()
                )));
            }
            Ok(d / width)
        }
    }
}

/// Maps a measured displacement to an activation in `[0, 1]`.
///
/// Linear between the two references, exactly 0 at `d_neutral` and exactly 1
/// at `d_activated`, clipped outside. Works for either ordering of the
/// references.
///
/// Panics if the references coincide; probe validation rejects that at
/// config load.
pub fn activation(d_current: f64, d_neutral: f64, d_activated: f64) -> f64 {
    assert!(
        d_neutral != d_activated,
        "degenerate probe references: {d_neutral}"
    );
    let (lo, hi) = if d_neutral < d_activated {
        (d_neutral, d_activated)
    } else {
        (d_activated, d_neutral)
    };
    let mut t = (d_current - lo) / (hi - lo);
    if d_activated < d_neutral {
        t = 1.0 - t;
    }
    t.clamp(0.0, 1.0)
}

/// Runs every probe in the table against the mesh.
pub fn raw_activations(
    mesh: &RefinedFaceMesh,
    probes: &ProbeTable,
    index_map: &EyeIndexMap,
) -> Result<RawActivations> {
    let mut out = RawActivations::default();
    for side in Side::BOTH {
        for direction in Direction::ALL {
            let probe = probes.get(side, direction);
            let d = measure_displacement(mesh, probe, index_map)?;
            let act = activation(d, probe.d_neutral, probe.d_activated);
            match side {
                Side::Left => out.left.set(direction, act),
                Side::Right => out.right.set(direction, act),
            }
        }
    }
    Ok(out)
}

/// Merges opposite raw activations into signed aggregates.
///
/// Sign convention (camera frame, +1 = image right / up):
///
/// | eye   | gaze image-right | gaze image-left | gaze up | gaze down |
/// |-------|------------------|-----------------|---------|-----------|
/// | left  | inward > 0       | outward > 0     | up > 0  | down > 0  |
/// | right | outward > 0      | inward > 0      | up > 0  | down > 0  |
/// | horizontal | +           | -               |         |           |
/// | vertical   |             |                 | +       | -         |
///
/// so `horizontal = outward - inward` for the right eye and the negation for
/// the left eye, and `vertical = upward - downward` for both.
pub fn merge_opposites(raw: &RawActivations) -> AggregateBlendShapes {
    let merge = |acts: &EyeActivations, side: Side| {
        let out_minus_in = acts.outward - acts.inward;
        EyeAggregates {
            horizontal: match side {
                Side::Left => -out_minus_in,
                Side::Right => out_minus_in,
            },
            vertical: acts.upward - acts.downward,
        }
    };
    AggregateBlendShapes {
        left: merge(&raw.left, Side::Left),
        right: merge(&raw.right, Side::Right),
    }
}

/// Couples the two eyes: vertical is averaged, horizontal magnitudes are
/// averaged with each eye's sign preserved (sign of 0 counts as +).
pub fn couple_eyes(agg: &AggregateBlendShapes) -> CoupledBlendShapes {
    let sign = |v: f64| if v < 0.0 { -1.0 } else { 1.0 };
    let magnitude = (agg.left.horizontal.abs() + agg.right.horizontal.abs()) / 2.0;
    CoupledBlendShapes {
        vertical: (agg.left.vertical + agg.right.vertical) / 2.0,
        horizontal_left: magnitude * sign(agg.left.horizontal),
        horizontal_right: magnitude * sign(agg.right.horizontal),
    }
}
