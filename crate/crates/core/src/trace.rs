//! Line-delimited trace schemas: one JSON record per frame.
//!
//! Two input schemas exist. "Refined" records carry the full 478-vertex
//! mesh; "split" records carry the 468-vertex face mesh plus both per-eye
//! refinements and their crops, exercising the merge at ingest time. Both
//! may carry the generator's ground-truth gaze.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{
    CropRect, EyeRefinement, FaceMesh, Landmark2, Landmark3, RefinedFaceMesh, Side,
};
use crate::synth::GazeSample;

/// Input trace schema selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TraceFormat {
    #[default]
    Refined,
    Split,
}

impl std::str::FromStr for TraceFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "refined" => Ok(TraceFormat::Refined),
            "split" => Ok(TraceFormat::Split),
            other => Err(format!("unknown trace format {other:?} (expected refined|split)")),
        }
    }
}

/// One refined-schema frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedRecord {
    pub vertices: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<[f64; 2]>,
}

impl RefinedRecord {
    pub fn from_mesh(mesh: &RefinedFaceMesh, truth: Option<GazeSample>) -> Self {
        Self {
            vertices: mesh.vertices().iter().map(|v| [v.x, v.y, v.z]).collect(),
            truth: truth.map(|g| [g.gx, g.gy]),
        }
    }

    pub fn to_mesh(&self) -> Result<RefinedFaceMesh> {
        RefinedFaceMesh::new(
            self.vertices
                .iter()
                .map(|&[x, y, z]| Landmark3::new(x, y, z))
                .collect(),
        )
    }
}

/// One eye of a split-schema frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EyeRecord {
    pub contour: Vec<[f64; 2]>,
    pub iris: Vec<[f64; 2]>,
    pub crop: CropRect,
}

impl EyeRecord {
    pub fn from_refinement(refinement: &EyeRefinement) -> Self {
        Self {
            contour: refinement.contour.iter().map(|p| [p.x, p.y]).collect(),
            iris: refinement.iris.iter().map(|p| [p.x, p.y]).collect(),
            crop: refinement.crop,
        }
    }

    pub fn to_refinement(&self, side: Side) -> Result<EyeRefinement> {
        EyeRefinement::new(
            side,
            self.contour.iter().map(|&[x, y]| Landmark2::new(x, y)).collect(),
            self.iris.iter().map(|&[x, y]| Landmark2::new(x, y)).collect(),
            self.crop,
        )
    }
}

/// One split-schema frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub vertices: Vec<[f64; 3]>,
    pub left: EyeRecord,
    pub right: EyeRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<[f64; 2]>,
}

impl SplitRecord {
    /// Re-expresses a refined mesh in the split schema: the face prefix as
    /// the coarse mesh, and each eye's contour and iris points mapped into a
    /// freshly computed crop.
    pub fn from_refined(
        mesh: &RefinedFaceMesh,
        index_map: &crate::mesh::EyeIndexMap,
        frame_w_px: u32,
        frame_h_px: u32,
        scale: f64,
        truth: Option<GazeSample>,
    ) -> Result<Self> {
        use crate::mesh::{eye_roi, frame_to_crop, FACE_VERTEX_COUNT, IRIS_POINT_COUNT};

        let face = FaceMesh::new(mesh.vertices()[..FACE_VERTEX_COUNT].to_vec())?;
        let mut eyes = Vec::with_capacity(2);
        for side in [Side::Left, Side::Right] {
            let crop = eye_roi(&face, side, index_map, frame_w_px, frame_h_px, scale)?;
            let contour = index_map
                .eye(side)
                .contour
                .iter()
                .map(|&i| {
                    let v = mesh.vertex(i)?;
                    Ok(frame_to_crop(&crop, v.x, v.y))
                })
                .collect::<Result<Vec<_>>>()?;
            let base = RefinedFaceMesh::iris_base(side);
            let iris = (0..IRIS_POINT_COUNT)
                .map(|k| {
                    let v = mesh.vertex(base + k)?;
                    Ok(frame_to_crop(&crop, v.x, v.y))
                })
                .collect::<Result<Vec<_>>>()?;
            eyes.push(EyeRecord::from_refinement(&EyeRefinement::new(
                side, contour, iris, crop,
            )?));
        }
        let right = eyes.pop().expect("two eyes");
        let left = eyes.pop().expect("two eyes");
        Ok(Self {
            vertices: face.vertices().iter().map(|v| [v.x, v.y, v.z]).collect(),
            left,
            right,
            truth: truth.map(|g| [g.gx, g.gy]),
        })
    }

    pub fn to_parts(&self) -> Result<(FaceMesh, EyeRefinement, EyeRefinement)> {
        let mesh = FaceMesh::new(
            self.vertices
                .iter()
                .map(|&[x, y, z]| Landmark3::new(x, y, z))
                .collect(),
        )?;
        Ok((
            mesh,
            self.left.to_refinement(Side::Left)?,
            self.right.to_refinement(Side::Right)?,
        ))
    }
}

/// Parses one trace line in the given schema.
pub fn parse_line(format: TraceFormat, line: &str) -> Result<ParsedFrame> {
    match format {
        TraceFormat::Refined => {
            let record: RefinedRecord = serde_json::from_str(line)
                .map_err(|e| Error::InvalidArgument(format!("bad refined record: {e}")))?;
            let mesh = record.to_mesh()?;
            Ok(ParsedFrame::Refined {
                mesh,
                truth: record.truth,
            })
        }
        TraceFormat::Split => {
            let record: SplitRecord = serde_json::from_str(line)
                .map_err(|e| Error::InvalidArgument(format!("bad split record: {e}")))?;
            let (mesh, left, right) = record.to_parts()?;
            Ok(ParsedFrame::Split {
                mesh,
                left: Box::new(left),
                right: Box::new(right),
                truth: record.truth,
            })
        }
    }
}

/// A parsed input frame, owning its data.
#[derive(Debug, Clone)]
pub enum ParsedFrame {
    Refined {
        mesh: RefinedFaceMesh,
        truth: Option<[f64; 2]>,
    },
    Split {
        mesh: FaceMesh,
        left: Box<EyeRefinement>,
        right: Box<EyeRefinement>,
        truth: Option<[f64; 2]>,
    },
}

impl ParsedFrame {
    pub fn truth(&self) -> Option<[f64; 2]> {
        match self {
            ParsedFrame::Refined { truth, .. } | ParsedFrame::Split { truth, .. } => *truth,
        }
    }
}
