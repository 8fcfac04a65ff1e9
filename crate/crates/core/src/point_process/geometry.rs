use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{check_dim, Error, Result};

pub const MAX_DIM: usize = 3;

/// Axis-aligned half-open box `[lower, upper)`. May have zero volume.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Region {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.is_empty() || lower.len() > MAX_DIM {
            return Err(Error::Parameter(format!(
                "dimension {} is outside 1..={MAX_DIM}",
                lower.len()
            )));
        }
        for (a, b) in lower.iter().zip(&upper) {
            if !(a.is_finite() && b.is_finite() && a <= b) {
                return Err(Error::Parameter(format!("bad box bounds [{a}, {b})")));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).product()
    }

    /// Half-open membership: `lower[i] <= x[i] < upper[i]` on every axis.
    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.lower.len()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (a, b))| *a <= *v && *v < *b)
    }

    pub fn overlap_volume(&self, other: &Region) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .zip(other.lower.iter().zip(&other.upper))
            .map(|((a0, b0), (a1, b1))| (b0.min(*b1) - a0.max(*a1)).max(0.0))
            .product()
    }

    pub fn is_within(&self, other: &Region) -> bool {
        self.dim() == other.dim()
            && self
                .lower
                .iter()
                .zip(&self.upper)
                .zip(other.lower.iter().zip(&other.upper))
                .all(|((a0, b0), (a1, b1))| a1 <= a0 && b0 <= b1)
    }

    pub fn clip(&self, window: &Window) -> Result<Region> {
        check_dim(window.dim(), self.dim())?;
        let w = window.as_region();
        let lower: Vec<f64> = self.lower.iter().zip(&w.lower).map(|(a, b)| a.max(*b)).collect();
        let upper: Vec<f64> = self
            .upper
            .iter()
            .zip(&w.upper)
            .zip(&lower)
            .map(|((a, b), lo)| a.min(*b).max(*lo))
            .collect();
        Region::new(lower, upper)
    }

    pub(crate) fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        for (a, b) in self.lower.iter().zip(&self.upper) {
            let x = a + rng.random::<f64>() * (b - a);
            // rounding can land exactly on the open face
            out.push(if x < *b { x } else { *a });
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (a, b)) in self.lower.iter().zip(&self.upper).enumerate() {
            if i > 0 {
                write!(f, "x")?;
            }
            write!(f, "[{a},{b}]")?;
        }
        Ok(())
    }
}

/// Parses `[a,b]x[c,d]...`, one bracket per axis.
impl FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parameter(format!("cannot parse box `{s}`, expected e.g. [0,1]x[0,1]"));
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for axis in s.trim().split('x') {
            let inner = axis
                .trim()
                .strip_prefix('[')
                .and_then(|a| a.strip_suffix(']'))
                .ok_or_else(bad)?;
            let (a, b) = inner.split_once(',').ok_or_else(bad)?;
            lower.push(a.trim().parse().map_err(|_| bad())?);
            upper.push(b.trim().parse().map_err(|_| bad())?);
        }
        Region::new(lower, upper)
    }
}

/// Observation window: a box with positive extent on every axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    bounds: Region,
}

impl Window {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        Self::from_region(Region::new(lower, upper)?)
    }

    pub fn from_region(bounds: Region) -> Result<Self> {
        if bounds.lower.iter().zip(&bounds.upper).any(|(a, b)| a >= b) {
            return Err(Error::Parameter(format!("window {bounds} has an empty axis")));
        }
        Ok(Self { bounds })
    }

    /// `[0, 1)^dim`.
    pub fn unit(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim], vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn lower(&self) -> &[f64] {
        &self.bounds.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.bounds.upper
    }

    pub fn volume(&self) -> f64 {
        self.bounds.volume()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.bounds.contains(x)
    }

    pub fn as_region(&self) -> &Region {
        &self.bounds
    }

    /// The window grown by `r` on every side.
    pub fn dilate(&self, r: f64) -> Result<Window> {
        Window::new(
            self.lower().iter().map(|a| a - r).collect(),
            self.upper().iter().map(|b| b + r).collect(),
        )
    }

    /// Box covering the given fractions `[from, to)` of every axis.
    pub fn sub_box(&self, from: f64, to: f64) -> Region {
        let lower = self.lower().iter().zip(self.upper()).map(|(a, b)| a + from * (b - a)).collect();
        let upper = self.lower().iter().zip(self.upper()).map(|(a, b)| a + to * (b - a)).collect();
        Region::new(lower, upper).expect("fractions inside the window")
    }

    pub(crate) fn check_contains(&self, region: &Region) -> Result<()> {
        if region.is_within(&self.bounds) {
            Ok(())
        } else {
            Err(Error::OutsideWindow {
                region: region.to_string(),
                window: self.to_string(),
            })
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.bounds.fmt(f)
    }
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Window::from_region(s.parse()?)
    }
}

/// Regular grid of cells over a window. Cells are numbered with the last
/// axis varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGrid {
    window: Window,
    resolution: Vec<usize>,
}

impl CellGrid {
    pub fn new(window: Window, resolution: Vec<usize>) -> Result<Self> {
        check_dim(window.dim(), resolution.len())?;
        if resolution.contains(&0) {
            return Err(Error::Parameter("grid resolution must be >= 1 on every axis".into()));
        }
        Ok(Self { window, resolution })
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    pub fn n_cells(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.window.volume() / self.n_cells() as f64
    }

    /// Per-axis indices of a flat cell number.
    pub fn cell_coords(&self, mut cell: usize) -> Vec<usize> {
        let mut coords = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            coords[axis] = cell % self.resolution[axis];
            cell /= self.resolution[axis];
        }
        coords
    }

    pub fn cell_region(&self, cell: usize) -> Region {
        let coords = self.cell_coords(cell);
        let mut lower = Vec::with_capacity(self.dim());
        let mut upper = Vec::with_capacity(self.dim());
        for (axis, &j) in coords.iter().enumerate() {
            let (a, b) = (self.window.lower()[axis], self.window.upper()[axis]);
            let res = self.resolution[axis];
            lower.push(a + (b - a) * j as f64 / res as f64);
            upper.push(if j + 1 == res { b } else { a + (b - a) * (j + 1) as f64 / res as f64 });
        }
        Region::new(lower, upper).expect("cell inside window")
    }

    /// Flat cell containing `x`, or `None` outside the window.
    #[inline]
    pub fn cell_of(&self, x: &[f64]) -> Option<usize> {
        if !self.window.contains(x) {
            return None;
        }
        let mut cell = 0;
        for (axis, &v) in x.iter().enumerate() {
            let (a, b) = (self.window.lower()[axis], self.window.upper()[axis]);
            let res = self.resolution[axis];
            let j = (((v - a) / (b - a)) * res as f64) as usize;
            cell = cell * res + j.min(res - 1);
        }
        Some(cell)
    }
}
