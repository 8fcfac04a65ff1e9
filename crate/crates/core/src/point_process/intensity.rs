use rand::Rng;

use super::geometry::{CellGrid, Region, Window, MAX_DIM};
use crate::error::{check_dim, Error, Result};

/// Piecewise-constant density on a cell grid. Values are densities per unit
/// volume.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    grid: CellGrid,
    values: Vec<f64>,
    cumulative: Vec<f64>,
}

impl GridDensity {
    pub fn new(grid: CellGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::Parameter(format!(
                "grid has {} cells but {} values were given",
                grid.n_cells(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Parameter(format!("density value {v} must be finite and >= 0")));
        }
        let cell_volume = grid.cell_volume();
        let mut acc = 0.0;
        let cumulative = values
            .iter()
            .map(|v| {
                acc += v * cell_volume;
                acc
            })
            .collect();
        Ok(Self { grid, values, cumulative })
    }

    /// Constant density `value` as a single-cell grid.
    pub fn uniform(window: Window, value: f64) -> Result<Self> {
        let res = vec![1; window.dim()];
        Self::new(CellGrid::new(window, res)?, vec![value])
    }

    pub fn grid(&self) -> &CellGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn window(&self) -> &Window {
        self.grid.window()
    }

    pub fn total_mass(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Same grid with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|v| v * factor).collect())
    }

    pub fn density_at(&self, x: &[f64]) -> f64 {
        self.grid.cell_of(x).map_or(0.0, |c| self.values[c])
    }

    fn measure(&self, region: &Region) -> f64 {
        (0..self.grid.n_cells())
            .filter(|&c| self.values[c] > 0.0)
            .map(|c| self.values[c] * self.grid.cell_region(c).overlap_volume(region))
            .sum()
    }

    /// A location drawn from the normalised density: cell by mass, then
    /// uniform inside the cell.
    pub(crate) fn sample_location<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        let target = rng.random::<f64>() * self.total_mass();
        let cell = self.cumulative.partition_point(|&c| c <= target).min(self.values.len() - 1);
        self.grid.cell_region(cell).sample_uniform(rng, out);
    }
}

/// Finite collection of weighted atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    dim: usize,
    atoms: Vec<(Vec<f64>, f64)>,
}

impl AtomicMeasure {
    pub fn new(dim: usize, atoms: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Parameter(format!("dimension {dim} is outside 1..={MAX_DIM}")));
        }
        for (loc, w) in &atoms {
            check_dim(dim, loc.len())?;
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::Parameter(format!("atom weight {w} must be finite and >= 0")));
            }
        }
        Ok(Self { dim, atoms })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[(Vec<f64>, f64)] {
        &self.atoms
    }
}

/// Intensity measure `μ` with exactly computable box measures.
#[derive(Debug, Clone, PartialEq)]
pub enum IntensityMeasure {
    ConstantDensity { lambda: f64, window: Window },
    GridDensity(GridDensity),
    Atomic(AtomicMeasure),
}

impl IntensityMeasure {
    pub fn constant(lambda: f64, window: Window) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::Parameter(format!("density {lambda} must be finite and >= 0")));
        }
        Ok(Self::ConstantDensity { lambda, window })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::ConstantDensity { window, .. } => window.dim(),
            Self::GridDensity(g) => g.window().dim(),
            Self::Atomic(a) => a.dim,
        }
    }

    /// Support window; atomic measures have none.
    pub fn window(&self) -> Option<&Window> {
        match self {
            Self::ConstantDensity { window, .. } => Some(window),
            Self::GridDensity(g) => Some(g.window()),
            Self::Atomic(_) => None,
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            Self::ConstantDensity { lambda, window } => lambda * window.volume(),
            Self::GridDensity(g) => g.total_mass(),
            Self::Atomic(a) => a.atoms.iter().map(|(_, w)| w).sum(),
        }
    }

    /// `Some(λ)` when the measure is a constant density λ on its window,
    /// whichever variant represents it.
    pub fn as_constant_density(&self) -> Option<f64> {
        match self {
            Self::ConstantDensity { lambda, .. } => Some(*lambda),
            Self::GridDensity(g) => {
                let first = g.values[0];
                g.values.iter().all(|v| *v == first).then_some(first)
            }
            Self::Atomic(_) => None,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match self {
            Self::ConstantDensity { lambda, .. } if !(lambda.is_finite() && *lambda >= 0.0) => {
                Err(Error::Parameter(format!("density {lambda} must be finite and >= 0")))
            }
            _ => Ok(()),
        }
    }
}

/// Exact `μ(A)` for a box `A` inside the measure's window.
pub fn measure_of(mu: &IntensityMeasure, region: &Region) -> Result<f64> {
    check_dim(mu.dim(), region.dim())?;
    if let Some(window) = mu.window() {
        window.check_contains(region)?;
    }
    Ok(match mu {
        IntensityMeasure::ConstantDensity { lambda, .. } => lambda * region.volume(),
        IntensityMeasure::GridDensity(g) => g.measure(region),
        IntensityMeasure::Atomic(a) => a
            .atoms
            .iter()
            .filter(|(loc, _)| region.contains(loc))
            .map(|(_, w)| w)
            .sum(),
    })
}
