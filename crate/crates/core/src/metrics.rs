//! Inter-eye-distance normalized landmark error metrics.

use crate::error::{Error, Result};
use crate::mesh::{EyeIndexMap, RefinedFaceMesh};

/// An ordered set of 2D landmarks; compared sets must be equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    points: Vec<[f64; 2]>,
}

impl LandmarkSet {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("landmark set is empty".into()));
        }
        if points.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return Err(Error::InvalidArgument(
                "landmark set contains non-finite points".into(),
            ));
        }
        Ok(Self { points })
    }

    pub fn from_mesh(mesh: &RefinedFaceMesh) -> Self {
        Self {
            points: mesh.vertices().iter().map(|v| [v.x, v.y]).collect(),
        }
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Distance between the centroids of the two eye contours.
pub fn inter_eye_distance(mesh: &RefinedFaceMesh, index_map: &EyeIndexMap) -> Result<f64> {
    let centroid = |indices: &[usize]| -> Result<[f64; 2]> {
        let mut acc = [0.0, 0.0];
        for &i in indices {
            let v = mesh.vertex(i)?;
            acc[0] += v.x;
            acc[1] += v.y;
        }
        let n = indices.len() as f64;
        Ok([acc[0] / n, acc[1] / n])
    };
    let left = centroid(&index_map.left.contour)?;
    let right = centroid(&index_map.right.contour)?;
    let ied = (left[0] - right[0]).hypot(left[1] - right[1]);
    if ied < 1e-9 {
        return Err(Error::DegenerateGeometry(format!(
            "inter-eye distance {ied} below 1e-9"
        )));
    }
    Ok(ied)
}

fn check_pair(pred: &LandmarkSet, gt: &LandmarkSet, ied: f64) -> Result<()> {
    if pred.len() != gt.len() {
        return Err(Error::InvalidArgument(format!(
            "landmark sets differ in length: {} vs {}",
            pred.len(),
            gt.len()
        )));
    }
    if !(ied.is_finite() && ied > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "inter-eye distance must be positive, got {ied}"
        )));
    }
    Ok(())
}

/// Mean squared point distance divided by the squared inter-eye distance,
/// so the result is dimensionless like its absolute counterpart.
pub fn mse_ied(pred: &LandmarkSet, gt: &LandmarkSet, ied: f64) -> Result<f64> {
    check_pair(pred, gt, ied)?;
    let sum: f64 = pred
        .points()
        .iter()
        .zip(gt.points())
        .map(|(p, g)| {
            let dx = p[0] - g[0];
            let dy = p[1] - g[1];
            dx * dx + dy * dy
        })
        .sum();
    Ok(sum / pred.len() as f64 / (ied * ied))
}

/// Mean point distance divided by the inter-eye distance. Multiplied by 100
/// this is the usual percent score.
pub fn mad_ied(pred: &LandmarkSet, gt: &LandmarkSet, ied: f64) -> Result<f64> {
    check_pair(pred, gt, ied)?;
    let sum: f64 = pred
        .points()
        .iter()
        .zip(gt.points())
        .map(|(p, g)| (p[0] - g[0]).hypot(p[1] - g[1]))
        .sum();
    Ok(sum / pred.len() as f64 / ied)
}
