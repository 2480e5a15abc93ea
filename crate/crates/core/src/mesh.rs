//! Landmark and mesh types, eye ROI computation, crop-coordinate transforms,
//! and the refinement merge that produces the 478-vertex mesh.
//!
//! Coordinates follow the image convention: `x` and `y` are fractions of the
//! frame width/height with the origin at the upper-left corner, so `+x` is
//! image right and `+y` is image down. `z` is a relative depth on the same
//! scale as `x`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vertices in the coarse face mesh.
pub const FACE_VERTEX_COUNT: usize = 468;
/// Vertices after appending both iris sets.
pub const REFINED_VERTEX_COUNT: usize = 478;
/// Eye contour points per eye.
pub const CONTOUR_POINT_COUNT: usize = 16;
/// Iris points per eye: pupil center plus four ring points.
pub const IRIS_POINT_COUNT: usize = 5;
/// Side length, in crop pixels, of the coordinate system refinement
/// landmarks are expressed in.
pub const CROP_RESOLUTION: f64 = 64.0;

/// Base index of the left-eye iris set in a refined mesh.
pub const LEFT_IRIS_BASE: usize = FACE_VERTEX_COUNT;
/// Base index of the right-eye iris set in a refined mesh.
pub const RIGHT_IRIS_BASE: usize = FACE_VERTEX_COUNT + IRIS_POINT_COUNT;

// Canonical face layout shared by the default index map and the synthetic
// generator: the 16-point contour of each eye, then that eye's center
// vertex, then generic filler vertices up to 468.
pub const LEFT_CONTOUR_BASE: usize = 0;
pub const LEFT_EYE_CENTER_INDEX: usize = 16;
pub const RIGHT_CONTOUR_BASE: usize = 17;
pub const RIGHT_EYE_CENTER_INDEX: usize = 33;

/// Offsets of the iris points within an iris set.
///
/// Order is fixed: pupil center, then the ring point toward image right,
/// image up, image left, image down. The blend-shape probes rely on the
/// pupil center having offset 0.
pub mod iris_point {
    pub const PUPIL_CENTER: usize = 0;
    pub const RING_RIGHT: usize = 1;
    pub const RING_UP: usize = 2;
    pub const RING_LEFT: usize = 3;
    pub const RING_DOWN: usize = 4;
}

/// Which eye, in image terms: `Left` is the eye on the image's left side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

/// One face-mesh landmark in normalized frame coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmark3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Landmark3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// One refinement landmark in crop-local pixel coordinates (64x64 crop).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmark2 {
    pub x: f64,
    pub y: f64,
}

impl Landmark2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// The coarse 468-vertex face mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceMesh {
    vertices: Vec<Landmark3>,
}

impl FaceMesh {
    pub fn new(vertices: Vec<Landmark3>) -> Result<Self> {
        if vertices.len() != FACE_VERTEX_COUNT {
            return Err(Error::InvalidArgument(format!(
                "face mesh must have {} vertices, got {}",
                FACE_VERTEX_COUNT,
                vertices.len()
            )));
        }
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "face mesh vertex {i} is not finite"
            )));
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Landmark3] {
        &self.vertices
    }

    pub fn vertex(&self, index: usize) -> Result<Landmark3> {
        self.vertices
            .get(index)
            .copied()
            .ok_or(Error::IndexOutOfRange {
                index,
                len: self.vertices.len(),
            })
    }
}

/// The eye crop rectangle in source-frame terms.
///
/// `center_x`/`center_y` are normalized frame coordinates; `side_px` is the
/// side length of the (square) crop in source pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CropRect {
    pub center_x: f64,
    pub center_y: f64,
    pub side_px: f64,
    pub frame_w_px: u32,
    pub frame_h_px: u32,
}

impl CropRect {
    pub fn validate(&self) -> Result<()> {
        if !(self.side_px.is_finite() && self.side_px > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "crop side must be positive, got {}",
                self.side_px
            )));
        }
        if self.frame_w_px == 0 || self.frame_h_px == 0 {
            return Err(Error::InvalidArgument(
                "frame dimensions must be positive".into(),
            ));
        }
        if !(self.center_x.is_finite() && self.center_y.is_finite()) {
            return Err(Error::InvalidArgument("crop center is not finite".into()));
        }
        Ok(())
    }
}

/// Refined 2D landmarks for one eye: 16 contour points and 5 iris points in
/// crop-local coordinates, plus the crop they are expressed in.
#[derive(Debug, Clone, PartialEq)]
pub struct EyeRefinement {
    pub side: Side,
    pub contour: [Landmark2; CONTOUR_POINT_COUNT],
    pub iris: [Landmark2; IRIS_POINT_COUNT],
    pub crop: CropRect,
}

impl EyeRefinement {
    pub fn new(
        side: Side,
        contour: Vec<Landmark2>,
        iris: Vec<Landmark2>,
        crop: CropRect,
    ) -> Result<Self> {
        crop.validate()?;
        let contour: [Landmark2; CONTOUR_POINT_COUNT] =
            contour.try_into().map_err(|v: Vec<Landmark2>| {
                Error::InvalidArgument(format!("expected 16 contour points, got {}", v.len()))
            })?;
        let iris: [Landmark2; IRIS_POINT_COUNT] =
            iris.try_into().map_err(|v: Vec<Landmark2>| {
                Error::InvalidArgument(format!("expected 5 iris points, got {}", v.len()))
            })?;
        if let Some(p) = contour.iter().chain(iris.iter()).find(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "refinement landmark ({}, {}) is not finite",
                p.x, p.y
            )));
        }
        Ok(Self {
            side,
            contour,
            iris,
            crop,
        })
    }
}

/// The 478-vertex refined face mesh.
///
/// Layout: indices `0..468` are the face mesh, `468..473` the left-eye iris
/// set and `473..478` the right-eye iris set, each ordered as in
/// [`iris_point`].
#[derive(Debug, Clone, PartialEq)]
pub struct RefinedFaceMesh {
    vertices: Vec<Landmark3>,
}

impl RefinedFaceMesh {
    pub fn new(vertices: Vec<Landmark3>) -> Result<Self> {
        if vertices.len() != REFINED_VERTEX_COUNT {
            return Err(Error::InvalidArgument(format!(
                "refined mesh must have {} vertices, got {}",
                REFINED_VERTEX_COUNT,
                vertices.len()
            )));
        }
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "refined mesh vertex {i} is not finite"
            )));
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Landmark3] {
        &self.vertices
    }

    pub fn vertex(&self, index: usize) -> Result<Landmark3> {
        self.vertices
            .get(index)
            .copied()
            .ok_or(Error::IndexOutOfRange {
                index,
                len: self.vertices.len(),
            })
    }

    pub fn iris_base(side: Side) -> usize {
        match side {
            Side::Left => LEFT_IRIS_BASE,
            Side::Right => RIGHT_IRIS_BASE,
        }
    }

    /// The pupil center vertex of the given eye.
    pub fn pupil_center(&self, side: Side) -> Landmark3 {
        self.vertices[Self::iris_base(side) + iris_point::PUPIL_CENTER]
    }
}

/// Face-mesh indices describing one eye.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EyeIndices {
    /// The 16 contour vertices, ordered around the eye.
    pub contour: [usize; CONTOUR_POINT_COUNT],
    /// Corner on the nose side; must be a member of `contour`.
    pub corner_inner: usize,
    /// Corner on the temple side; must be a member of `contour`.
    pub corner_outer: usize,
    /// Vertex the eye crop is centered on.
    pub eye_center: usize,
}

impl EyeIndices {
    fn validate(&self, side: Side) -> Result<()> {
        let check = |index: usize| {
            if index < FACE_VERTEX_COUNT {
                Ok(())
            } else {
                Err(Error::IndexOutOfRange {
                    index,
                    len: FACE_VERTEX_COUNT,
                })
            }
        };
        for &i in &self.contour {
            check(i)?;
        }
        check(self.corner_inner)?;
        check(self.corner_outer)?;
        check(self.eye_center)?;
        for (n, &i) in self.contour.iter().enumerate() {
            if self.contour[..n].contains(&i) {
                return Err(Error::InvalidConfig(format!(
                    "{} eye contour index {} repeated",
                    side.as_str(),
                    i
                )));
            }
        }
        for (name, index) in [("inner", self.corner_inner), ("outer", self.corner_outer)] {
            if !self.contour.contains(&index) {
                return Err(Error::InvalidConfig(format!(
                    "{} eye {} corner {} is not a contour index",
                    side.as_str(),
                    name,
                    index
                )));
            }
        }
        Ok(())
    }
}

/// Maps both eyes onto face-mesh indices. Shipped as configuration; the
/// default matches the synthetic generator's canonical topology.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EyeIndexMap {
    pub left: EyeIndices,
    pub right: EyeIndices,
}

impl EyeIndexMap {
    pub fn eye(&self, side: Side) -> &EyeIndices {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.left.validate(Side::Left)?;
        self.right.validate(Side::Right)
    }
}

impl Default for EyeIndexMap {
    fn default() -> Self {
        let contour = |base: usize| {
            let mut out = [0usize; CONTOUR_POINT_COUNT];
            for (k, slot) in out.iter_mut().enumerate() {
                *slot = base + k;
            }
            out
        };
        // Contour point 0 sits at the +x ellipse extreme, point 8 at -x.
        // For the image-left eye the nose side is +x, for the image-right
        // eye it is -x.
        Self {
            left: EyeIndices {
                contour: contour(LEFT_CONTOUR_BASE),
                corner_inner: LEFT_CONTOUR_BASE,
                corner_outer: LEFT_CONTOUR_BASE + 8,
                eye_center: LEFT_EYE_CENTER_INDEX,
            },
            right: EyeIndices {
                contour: contour(RIGHT_CONTOUR_BASE),
                corner_inner: RIGHT_CONTOUR_BASE + 8,
                corner_outer: RIGHT_CONTOUR_BASE,
                eye_center: RIGHT_EYE_CENTER_INDEX,
            },
        }
    }
}

/// Computes the square eye crop, centered on the eye-center landmark and
/// shifted (not shrunk) to stay inside the frame.
pub fn eye_roi(
    mesh: &FaceMesh,
    side: Side,
    index_map: &EyeIndexMap,
    frame_w_px: u32,
    frame_h_px: u32,
    scale: f64,
) -> Result<CropRect> {
    if frame_w_px == 0 || frame_h_px == 0 {
        return Err(Error::InvalidArgument(
            "frame dimensions must be positive".into(),
        ));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "crop scale must be positive, got {scale}"
        )));
    }
    let center = mesh.vertex(index_map.eye(side).eye_center)?;
    let side_px = CROP_RESOLUTION * scale;
    let (w, h) = (f64::from(frame_w_px), f64::from(frame_h_px));
    if side_px > w || side_px > h {
        return Err(Error::InvalidArgument(format!(
            "crop of {side_px} px does not fit a {frame_w_px}x{frame_h_px} frame"
        )));
    }
    let half = side_px / 2.0;
    let cx_px = (center.x * w).clamp(half, w - half);
    let cy_px = (center.y * h).clamp(half, h - half);
    Ok(CropRect {
        center_x: cx_px / w,
        center_y: cy_px / h,
        side_px,
        frame_w_px,
        frame_h_px,
    })
}

/// Maps a crop-local landmark to normalized frame coordinates.
pub fn crop_to_frame(crop: &CropRect, p: Landmark2) -> (f64, f64) {
    let (w, h) = (f64::from(crop.frame_w_px), f64::from(crop.frame_h_px));
    let left_px = crop.center_x * w - crop.side_px / 2.0;
    let top_px = crop.center_y * h - crop.side_px / 2.0;
    let scale = crop.side_px / CROP_RESOLUTION;
    (
        (left_px + p.x * scale) / w,
        (top_px + p.y * scale) / h,
    )
}

/// Maps normalized frame coordinates into the crop's local pixel system.
/// Inverse of [`crop_to_frame`].
pub fn frame_to_crop(crop: &CropRect, x: f64, y: f64) -> Landmark2 {
    let (w, h) = (f64::from(crop.frame_w_px), f64::from(crop.frame_h_px));
    let left_px = crop.center_x * w - crop.side_px / 2.0;
    let top_px = crop.center_y * h - crop.side_px / 2.0;
    let scale = crop.side_px / CROP_RESOLUTION;
    Landmark2 {
        x: (x * w - left_px) / scale,
        y: (y * h - top_px) / scale,
    }
}

/// Merges per-eye refinements into the face mesh and appends both iris sets,
/// producing the 478-vertex refined mesh.
///
/// For each contour index the refined x,y replace the mesh's while z is left
/// untouched. Appended iris vertices take their z from the average of the
/// eye's two corner vertices.
pub fn merge_refinement(
    mesh: &FaceMesh,
    left: &EyeRefinement,
    right: &EyeRefinement,
    index_map: &EyeIndexMap,
) -> Result<RefinedFaceMesh> {
    index_map.validate()?;
    for (refinement, side) in [(left, Side::Left), (right, Side::Right)] {
        if refinement.side != side {
            return Err(Error::InvalidArgument(format!(
                "{} refinement passed in the {} slot",
                refinement.side.as_str(),
                side.as_str()
            )));
        }
        refinement.crop.validate()?;
    }

    let mut vertices = mesh.vertices().to_vec();
    vertices.reserve(2 * IRIS_POINT_COUNT);

    for (refinement, side) in [(left, Side::Left), (right, Side::Right)] {
        let indices = index_map.eye(side);
        for (k, &index) in indices.contour.iter().enumerate() {
            let (x, y) = crop_to_frame(&refinement.crop, refinement.contour[k]);
            vertices[index].x = x;
            vertices[index].y = y;
        }
    }
    for (refinement, side) in [(left, Side::Left), (right, Side::Right)] {
        let indices = index_map.eye(side);
        let z = (mesh.vertex(indices.corner_inner)?.z + mesh.vertex(indices.corner_outer)?.z) / 2.0;
        for p in &refinement.iris {
            let (x, y) = crop_to_frame(&refinement.crop, *p);
            vertices.push(Landmark3 { x, y, z });
        }
    }

    RefinedFaceMesh::new(vertices)
}
