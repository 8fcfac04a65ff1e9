//! Test functions `u: R^d -> [0, 1]` with bounded support and the alternate
//! probability generating functional `A_ξ(u) = E Π_i (1 - u(x_i))`.
//!
//! Test functions and intensity measures are both piecewise constant or
//! atomic, so `∫ u dμ` is an exact finite sum.

use crate::error::{check_dim, check_probability, Error, Result};
use crate::estimate::Estimate;
use crate::point_process::{
    intensity_of_spec, measure_of, CellGrid, IntensityMeasure, PointPattern, ProcessSpec, Region,
    Window,
};

/// Bumped whenever the standard dictionary changes.
pub const DICTIONARY_VERSION: u32 = 1;

/// Cells per axis of the dictionary's grid functions.
pub const DICTIONARY_GRID_RESOLUTION: usize = 4;

/// Cell-wise constant test function; zero outside its window.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: CellGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: CellGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::Parameter(format!(
                "grid has {} cells but {} values were given",
                grid.n_cells(),
                values.len()
            )));
        }
        for v in &values {
            check_probability("test function value", *v)?;
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &CellGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    /// `c · 1_A`.
    ScaledIndicator { c: f64, region: Region },
    Grid(GridFunction),
}

impl TestFunction {
    pub fn indicator(c: f64, region: Region) -> Result<Self> {
        check_probability("c", c)?;
        Ok(Self::ScaledIndicator { c, region })
    }

    pub fn grid(grid: CellGrid, values: Vec<f64>) -> Result<Self> {
        GridFunction::new(grid, values).map(Self::Grid)
    }

    /// `u ≡ 0` on the given window.
    pub fn zero(window: &Window) -> Self {
        Self::ScaledIndicator { c: 0.0, region: window.as_region().clone() }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::ScaledIndicator { region, .. } => region.dim(),
            Self::Grid(g) => g.grid.dim(),
        }
    }

    /// Bounding box outside which the function vanishes.
    pub fn support(&self) -> &Region {
        match self {
            Self::ScaledIndicator { region, .. } => region,
            Self::Grid(g) => g.grid.window().as_region(),
        }
    }

    /// `u(x)` without a dimension check; points of another dimension get 0.
    #[inline]
    pub fn value_at(&self, x: &[f64]) -> f64 {
        match self {
            Self::ScaledIndicator { c, region } => {
                if region.contains(x) {
                    *c
                } else {
                    0.0
                }
            }
            Self::Grid(g) => g.grid.cell_of(x).map_or(0.0, |cell| g.values[cell]),
        }
    }

    /// `p · u`.
    pub fn scaled(&self, p: f64) -> Result<Self> {
        check_probability("p", p)?;
        Ok(match self {
            Self::ScaledIndicator { c, region } => Self::ScaledIndicator { c: c * p, region: region.clone() },
            Self::Grid(g) => Self::Grid(GridFunction {
                grid: g.grid.clone(),
                values: g.values.iter().map(|v| v * p).collect(),
            }),
        })
    }
}

pub fn eval_test(u: &TestFunction, x: &[f64]) -> Result<f64> {
    check_dim(u.dim(), x.len())?;
    Ok(u.value_at(x))
}

/// Exact `∫ u dμ`.
pub fn integrate(u: &TestFunction, mu: &IntensityMeasure) -> Result<f64> {
    check_dim(mu.dim(), u.dim())?;
    if let IntensityMeasure::Atomic(a) = mu {
        return Ok(a.atoms().iter().map(|(x, w)| w * u.value_at(x)).sum());
    }
    let window = mu.window().expect("non-atomic measures have a window");
    if !u.support().is_within(window.as_region()) {
        return Err(Error::OutsideWindow {
            region: u.support().to_string(),
            window: window.to_string(),
        });
    }
    match u {
        TestFunction::ScaledIndicator { c, region } => {
            if *c == 0.0 {
                Ok(0.0)
            } else {
                Ok(c * measure_of(mu, region)?)
            }
        }
        TestFunction::Grid(g) => {
            let mut total = 0.0;
            for (cell, v) in g.values.iter().enumerate() {
                if *v > 0.0 {
                    total += v * measure_of(mu, &g.grid.cell_region(cell))?;
                }
            }
            Ok(total)
        }
    }
}

/// `Π_i (1 - u(x_i))` over the points of one pattern; 1 for the empty pattern.
pub fn apgfl_on_pattern(pattern: &PointPattern, u: &TestFunction) -> f64 {
    pattern.points().map(|x| 1.0 - u.value_at(x)).product()
}

pub fn apgfl_empirical(samples: &[PointPattern], u: &TestFunction) -> Result<Estimate> {
    let values: Vec<f64> = samples.iter().map(|p| apgfl_on_pattern(p, u)).collect();
    Estimate::from_samples(&values)
}

/// APGFL of a Poisson process: `exp(-∫ u dμ)`.
pub fn apgfl_poisson(mu: &IntensityMeasure, u: &TestFunction) -> Result<f64> {
    Ok((-integrate(u, mu)?).exp())
}

/// Closed-form APGFL where one is implemented; `None` for Neyman–Scott.
pub fn apgfl_exact(spec: &ProcessSpec, u: &TestFunction) -> Result<Option<f64>> {
    check_dim(spec.dim(), u.dim())?;
    Ok(match spec {
        ProcessSpec::FixedAtoms(p) => Some(apgfl_on_pattern(p, u)),
        ProcessSpec::Poisson(mu) => Some(apgfl_poisson(mu, u)?),
        ProcessSpec::Binomial { m, density } => {
            let mass = integrate(u, &IntensityMeasure::GridDensity(density.clone()))?;
            Some((1.0 - mass).powf(*m as f64))
        }
        ProcessSpec::NeymanScott(_) => None,
    })
}

/// `A_ξ(p u) - (1 - p ∫ u dμ)`, the remainder of the first-order expansion.
///
/// Uses the closed form when one exists, otherwise the Monte Carlo mean over
/// `samples` (realisations of `spec`).
pub fn first_order_residual(
    spec: &ProcessSpec,
    u: &TestFunction,
    p: f64,
    samples: Option<&[PointPattern]>,
) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Parameter(format!("residual needs p in (0, 1], got {p}")));
    }
    let pu = u.scaled(p)?;
    let apgfl = match (apgfl_exact(spec, &pu)?, samples) {
        (Some(a), _) => a,
        (None, Some(s)) => apgfl_empirical(s, &pu)?.value,
        (None, None) => {
            return Err(Error::Unsupported(format!(
                "no closed-form APGFL for {} and no samples given",
                spec.label()
            )))
        }
    };
    let first_moment = integrate(u, &intensity_of_spec(spec))?;
    Ok(apgfl - (1.0 - p * first_moment))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTestFunction {
    pub id: String,
    pub function: TestFunction,
}

/// The nested boxes `A1 ⊂ A2 ⊂ A3` of the dictionary: central boxes
/// covering 25%, 50% and 75% of every axis.
pub fn nested_regions(window: &Window) -> [Region; 3] {
    [window.sub_box(0.375, 0.625), window.sub_box(0.25, 0.75), window.sub_box(0.125, 0.875)]
}

/// The fixed convergence dictionary: scaled indicators at c = 0.3, 0.6, 1.0
/// on the nested boxes, and three grid functions (constant 0.5, a ramp along
/// the first axis, a 0/0.8 checkerboard). A heuristic stand-in for "all u",
/// versioned by [`DICTIONARY_VERSION`].
pub fn standard_dictionary(window: &Window) -> Vec<NamedTestFunction> {
    let [a1, a2, a3] = nested_regions(window);
    let grid = CellGrid::new(window.clone(), vec![DICTIONARY_GRID_RESOLUTION; window.dim()])
        .expect("positive resolution");
    let cells: Vec<Vec<usize>> = (0..grid.n_cells()).map(|c| grid.cell_coords(c)).collect();
    let res = DICTIONARY_GRID_RESOLUTION as f64;
    let ramp = cells.iter().map(|ix| (ix[0] as f64 + 0.5) / res).collect();
    let checker = cells
        .iter()
        .map(|ix| if ix.iter().sum::<usize>() % 2 == 0 { 0.0 } else { 0.8 })
        .collect();
    let named = |id: &str, function: TestFunction| NamedTestFunction { id: id.into(), function };
    vec![
        named("ind_c0.3_A1", TestFunction::indicator(0.3, a1).unwrap()),
        named("ind_c0.6_A2", TestFunction::indicator(0.6, a2).unwrap()),
        named("ind_c1.0_A3", TestFunction::indicator(1.0, a3).unwrap()),
        named("grid_const", TestFunction::grid(grid.clone(), vec![0.5; grid.n_cells()]).unwrap()),
        named("grid_ramp", TestFunction::grid(grid.clone(), ramp).unwrap()),
        named("grid_checker", TestFunction::grid(grid, checker).unwrap()),
    ]
}

/// Dictionary entries by id, in the order requested.
pub fn dictionary_subset(window: &Window, ids: &[String]) -> Result<Vec<NamedTestFunction>> {
    let all = standard_dictionary(window);
    ids.iter()
        .map(|id| {
            all.iter()
                .find(|f| &f.id == id)
                .cloned()
                .ok_or_else(|| Error::Parameter(format!("unknown test function id `{id}`")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapEntry {
    pub id: String,
    pub empirical: Estimate,
    pub target: f64,
    pub gap: f64,
}

/// APGFL gaps over a dictionary at one `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub entries: Vec<GapEntry>,
    pub max_gap: f64,
    pub n: u64,
}

impl GapReport {
    pub fn new(n: u64, entries: Vec<GapEntry>) -> Self {
        let max_gap = entries.iter().map(|e| e.gap).fold(0.0, f64::max);
        Self { entries, max_gap, n }
    }

    /// The entry attaining `max_gap`.
    pub fn max_entry(&self) -> Option<&GapEntry> {
        self.entries.iter().find(|e| e.gap == self.max_gap)
    }
}
