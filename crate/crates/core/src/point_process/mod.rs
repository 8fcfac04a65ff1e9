//! Point patterns on boxes with their intensity measures and samplers.
//!
//! Patterns support p-thinning and superposition; the thinned superposition
//! combines both.
//!
//! Space is an axis-aligned box in R^d with d <= 3. Every box uses the
//! half-open convention `[lower, upper)`, so grid cells partition their
//! window exactly.

mod geometry;
mod intensity;
mod pattern;
mod spec;

pub use geometry::{CellGrid, Region, Window, MAX_DIM};
pub use intensity::{measure_of, AtomicMeasure, GridDensity, IntensityMeasure};
pub use pattern::{count_in, read_pattern, superpose, thin_pattern, write_pattern, PointPattern};
pub use spec::{
    intensity_of_spec, sample_process, thinned_superposition_sample, NeymanScott, ProcessSpec,
};
