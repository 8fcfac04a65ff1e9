//! Shared fixtures for the criterion benches.

use thinlaw_core::catalog::process_catalog;
use thinlaw_core::point_process::sample_process;
use thinlaw_core::stream::par_collect;
use thinlaw_core::{NamedTestFunction, PointPattern, ProcessSpec, Streams, Window};

pub const SEED: u64 = 0x5EED;

pub fn unit_square() -> Window {
    Window::unit(2).expect("dimension 2")
}

pub fn named_specs() -> Vec<(&'static str, ProcessSpec)> {
    process_catalog().into_iter().map(|s| (s.name, s.spec)).collect()
}

pub fn dictionary() -> Vec<NamedTestFunction> {
    thinlaw_core::functionals::standard_dictionary(&unit_square())
}

/// `count` realisations of `spec` on a fixed stream.
pub fn patterns(spec: &ProcessSpec, count: usize) -> Vec<PointPattern> {
    par_collect(&Streams::new(SEED), count, |rng| sample_process(spec, rng))
}
