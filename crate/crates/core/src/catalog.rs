//! Named distributions and processes shared by tests and the CLI.

use crate::distributions::IntegerDistribution;
use crate::point_process::{
    CellGrid, GridDensity, IntensityMeasure, NeymanScott, PointPattern, ProcessSpec, Window,
};

#[derive(Debug, Clone, PartialEq)]
pub struct NamedSpec {
    pub name: &'static str,
    pub spec: ProcessSpec,
}

/// The closed-form integer laws: one of each kind.
pub fn distribution_catalog() -> Vec<IntegerDistribution> {
    vec![
        IntegerDistribution::Deterministic(3),
        IntegerDistribution::Bernoulli(0.7),
        IntegerDistribution::Poisson(2.0),
        IntegerDistribution::Binomial { m: 10, p: 0.3 },
        IntegerDistribution::finite_pmf([(0, 0.2), (1, 0.5), (4, 0.3)]).expect("normalised"),
    ]
}

fn unit_square() -> Window {
    Window::unit(2).expect("dimension 2")
}

/// Neyman–Scott on the unit square with cluster radius 0.1.
pub fn neyman_scott(kappa: f64, mean_children: f64) -> ProcessSpec {
    ProcessSpec::NeymanScott(NeymanScott { kappa, mean_children, radius: 0.1, window: unit_square() })
}

/// Clustered process with many small clusters (κ = 6, one child on
/// average), so the thinned superposition approaches its Poisson limit
/// quickly along dyadic `n`.
pub fn light_clusters() -> ProcessSpec {
    neyman_scott(6.0, 1.0)
}

/// One process of each kind on `[0,1]²`.
pub fn process_catalog() -> Vec<NamedSpec> {
    let w = unit_square();
    let quadrants = CellGrid::new(w.clone(), vec![2, 2]).expect("2x2 grid");
    vec![
        NamedSpec {
            name: "poisson_const",
            spec: ProcessSpec::Poisson(IntensityMeasure::constant(4.0, w.clone()).expect("valid")),
        },
        NamedSpec {
            name: "poisson_grid",
            spec: ProcessSpec::Poisson(IntensityMeasure::GridDensity(
                GridDensity::new(quadrants.clone(), vec![2.0, 6.0, 4.0, 8.0]).expect("valid"),
            )),
        },
        NamedSpec {
            name: "fixed_atoms",
            spec: ProcessSpec::FixedAtoms(
                PointPattern::from_points(2, [[0.2, 0.3], [0.55, 0.6], [0.8, 0.15]]).expect("2-d"),
            ),
        },
        NamedSpec {
            name: "binomial_grid",
            spec: ProcessSpec::Binomial {
                m: 5,
                density: GridDensity::new(quadrants, vec![0.4, 1.2, 0.8, 1.6]).expect("valid"),
            },
        },
        NamedSpec { name: "neyman_scott", spec: neyman_scott(2.0, 3.0) },
    ]
}

pub fn process_by_name(name: &str) -> Option<ProcessSpec> {
    if name == "light_clusters" {
        return Some(light_clusters());
    }
    process_catalog().into_iter().find(|s| s.name == name).map(|s| s.spec)
}
