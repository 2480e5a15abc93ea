//! Streaming conversion of per-frame facial/eye landmarks into calibrated,
//! smoothed pupil blend-shape coefficients in `[-1, 1]`.
//!
//! The crate is organized around the stages of the pipeline:
//!
//! - [`mesh`]: landmark types, eye ROI and crop transforms, and the
//!   refinement merge producing the 478-vertex mesh;
//! - [`blendshape`]: displacement probes, raw activations, aggregates, and
//!   cross-eye coupling;
//! - [`calibration`]: the standard-score filter that recalibrates reference
//!   displacements online;
//! - [`smoothing`]: exponential smoothing of the coupled coefficients;
//! - [`synth`]: the analytic eyeball generator and closed-form oracle used
//!   for verification;
//! - [`metrics`]: inter-eye-distance normalized landmark error metrics;
//! - [`pipeline`]: the frame-by-frame composition of all of the above;
//! - [`trace`]: the line-delimited trace schemas.

pub mod blendshape;
pub mod calibration;
pub mod error;
pub mod mesh;
pub mod metrics;
pub mod pipeline;
pub mod smoothing;
pub mod synth;
pub mod trace;

pub use blendshape::{
    AggregateBlendShapes, CoupledBlendShapes, Direction, DisplacementProbe, Normalizer,
    ProbeTable, RawActivations,
};
pub use calibration::{Calibrator, CalibratorConfig, CalibratorUpdate, ProbeReference};
pub use error::{Error, Result};
pub use mesh::{
    CropRect, EyeIndexMap, EyeRefinement, FaceMesh, Landmark2, Landmark3, RefinedFaceMesh, Side,
};
pub use metrics::LandmarkSet;
pub use pipeline::{BlendShapeFrame, FrameInput, Pipeline, PipelineConfig};
pub use smoothing::{Smoother, SmootherConfig};
pub use synth::{GazeSample, SubjectProfile, SynthFrame, TraceGenerator};
pub use trace::TraceFormat;
