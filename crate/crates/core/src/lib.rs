//! Binomial thinning of counts and point processes, with exact oracles and
//! seeded Monte Carlo for the limits of thinned sums and thinned
//! superpositions.
//!
//! The crate is organised bottom-up:
//!
//! * [`distributions`]: integer laws with count thinning. Thinned sums and
//!   their transforms live here too.
//! * [`point_process`]: windows and patterns, with intensity measures and
//!   process samplers.
//! * [`functionals`]: test functions and the alternate probability
//!   generating functional (APGFL).
//! * [`convergence`]: total variation against Poisson targets, and the
//!   experiment curves.
//!
//! All randomness flows through [`Streams`], which derives independent,
//! reproducible sub-streams from a master seed.

pub mod catalog;
pub mod convergence;
pub mod distributions;
pub mod error;
pub mod estimate;
pub mod functionals;
pub mod pmf;
pub mod point_process;
pub mod stream;

pub use catalog::NamedSpec;
pub use convergence::{ConvergencePoint, EmpiricalPmf, Mode, NamedRegion};
pub use distributions::{FinitePmf, IntegerDistribution, RealLaw};
pub use error::{Error, Result};
pub use estimate::Estimate;
pub use functionals::{GapReport, NamedTestFunction, TestFunction};
pub use pmf::Pmf;
pub use point_process::{
    AtomicMeasure, CellGrid, GridDensity, IntensityMeasure, NeymanScott, PointPattern,
    ProcessSpec, Region, Window,
};
pub use stream::{StreamRng, Streams};
