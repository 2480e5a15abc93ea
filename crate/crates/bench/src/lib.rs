//! Benchmark-only crate; see `benches/pipeline.rs`.
//!
//! Shared helpers for building benchmark inputs live here so the bench
//! target stays focused on measurement.

use pupilrig_core::synth::{GazeSample, TraceGenerator};
use pupilrig_core::{RefinedFaceMesh, SubjectProfile};

/// Pre-generates a pool of meshes following a smooth scanning gaze.
pub fn frame_pool(count: usize, seed: u64) -> Vec<RefinedFaceMesh> {
    let mut generator =
        TraceGenerator::new(SubjectProfile::default(), seed).expect("default profile");
    (0..count)
        .map(|i| {
            let t = i as f64;
            generator
                .next_frame(GazeSample::new(
                    0.9 * (t / 61.0).sin(),
                    0.7 * (t / 37.0).sin(),
                ))
                .mesh
        })
        .collect()
}
