use rand::Rng;

use super::geometry::{Window, MAX_DIM};
use super::intensity::{AtomicMeasure, GridDensity, IntensityMeasure};
use super::pattern::PointPattern;
use crate::distributions::poisson_draw;
use crate::error::{Error, Result};

/// Neyman–Scott cluster process: Poisson(`kappa`) parents, each with
/// Poisson(`mean_children`) children uniform in the radius-`radius` ball
/// around it, observed in `window`.
///
/// Parents are generated in the window dilated by `radius`, which makes the
/// child intensity exactly `kappa * mean_children` everywhere inside the
/// window.
#[derive(Debug, Clone, PartialEq)]
pub struct NeymanScott {
    pub kappa: f64,
    pub mean_children: f64,
    pub radius: f64,
    pub window: Window,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProcessSpec {
    Poisson(IntensityMeasure),
    FixedAtoms(PointPattern),
    /// `m` IID points from a density that integrates to one.
    Binomial { m: u64, density: GridDensity },
    NeymanScott(NeymanScott),
}

impl ProcessSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Poisson(mu) => mu.validate(),
            Self::FixedAtoms(_) => Ok(()),
            Self::Binomial { density, .. } => {
                let total = density.total_mass();
                if (total - 1.0).abs() > 1e-12 {
                    Err(Error::Parameter(format!(
                        "binomial process density integrates to {total}, not 1"
                    )))
                } else {
                    Ok(())
                }
            }
            Self::NeymanScott(ns) => {
                let ok = |v: f64| v.is_finite() && v >= 0.0;
                if ok(ns.kappa) && ok(ns.mean_children) && ok(ns.radius) {
                    Ok(())
                } else {
                    Err(Error::Parameter(format!(
                        "Neyman-Scott parameters must be finite and >= 0: {ns:?}"
                    )))
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Poisson(mu) => mu.dim(),
            Self::FixedAtoms(p) => p.dim(),
            Self::Binomial { density, .. } => density.window().dim(),
            Self::NeymanScott(ns) => ns.window.dim(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Poisson(_) => "poisson",
            Self::FixedAtoms(_) => "fixed-atoms",
            Self::Binomial { .. } => "binomial",
            Self::NeymanScott(_) => "neyman-scott",
        }
    }

    /// Draws one realisation and appends its points to `out`.
    pub(crate) fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut PointPattern) {
        let coords = out.coords_mut();
        match self {
            Self::Poisson(IntensityMeasure::ConstantDensity { lambda, window }) => {
                let count = poisson_draw(lambda * window.volume(), rng);
                for _ in 0..count {
                    window.as_region().sample_uniform(rng, coords);
                }
            }
            Self::Poisson(IntensityMeasure::GridDensity(g)) => {
                let count = poisson_draw(g.total_mass(), rng);
                for _ in 0..count {
                    g.sample_location(rng, coords);
                }
            }
            Self::Poisson(IntensityMeasure::Atomic(a)) => {
                for (loc, w) in a.atoms() {
                    for _ in 0..poisson_draw(*w, rng) {
                        coords.extend_from_slice(loc);
                    }
                }
            }
            Self::FixedAtoms(p) => {
                for x in p.points() {
                    coords.extend_from_slice(x);
                }
            }
            Self::Binomial { m, density } => {
                for _ in 0..*m {
                    density.sample_location(rng, coords);
                }
            }
            Self::NeymanScott(ns) => ns.sample_into(rng, coords),
        }
    }
}

impl NeymanScott {
    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, coords: &mut Vec<f64>) {
        let dim = self.window.dim();
        let parents_window = self.window.dilate(self.radius).expect("dilating a valid window");
        let parents = poisson_draw(self.kappa * parents_window.volume(), rng);
        let mut parent = Vec::with_capacity(dim);
        let mut child = [0.0; MAX_DIM];
        for _ in 0..parents {
            parent.clear();
            parents_window.as_region().sample_uniform(rng, &mut parent);
            for _ in 0..poisson_draw(self.mean_children, rng) {
                // uniform in the ball by rejection from the enclosing cube
                loop {
                    let mut norm2 = 0.0;
                    for (c, p) in child.iter_mut().zip(&parent) {
                        let offset = self.radius * (2.0 * rng.random::<f64>() - 1.0);
                        norm2 += offset * offset;
                        *c = p + offset;
                    }
                    if norm2 <= self.radius * self.radius {
                        break;
                    }
                }
                if self.window.contains(&child[..dim]) {
                    coords.extend_from_slice(&child[..dim]);
                }
            }
        }
    }
}

/// One realisation of `spec`. The spec is assumed valid; see
/// [`ProcessSpec::validate`].
pub fn sample_process<R: Rng + ?Sized>(spec: &ProcessSpec, rng: &mut R) -> PointPattern {
    let mut out = PointPattern::empty(spec.dim()).expect("valid spec dimension");
    spec.sample_into(rng, &mut out);
    out
}

/// `(1/n) ∘ (ξ_1 + ... + ξ_n)`: draws `n` IID realisations, superposes them,
/// then keeps each point with probability `1/n`.
pub fn thinned_superposition_sample<R: Rng + ?Sized>(
    spec: &ProcessSpec,
    n: u64,
    rng: &mut R,
) -> Result<PointPattern> {
    if n == 0 {
        return Err(Error::Parameter("thinned superposition needs n >= 1".into()));
    }
    spec.validate()?;
    let mut out = PointPattern::empty(spec.dim())?;
    for _ in 0..n {
        spec.sample_into(rng, &mut out);
    }
    out.thin_in_place(1.0 / n as f64, rng);
    Ok(out)
}

/// Intensity measure `μ(A) = E ξ(A)` of a catalog process.
pub fn intensity_of_spec(spec: &ProcessSpec) -> IntensityMeasure {
    match spec {
        ProcessSpec::Poisson(mu) => mu.clone(),
        ProcessSpec::FixedAtoms(p) => IntensityMeasure::Atomic(
            AtomicMeasure::new(p.dim(), p.points().map(|x| (x.to_vec(), 1.0)).collect())
                .expect("pattern points share its dimension"),
        ),
        ProcessSpec::Binomial { m, density } => {
            IntensityMeasure::GridDensity(density.scaled(*m as f64).expect("scaling by a count"))
        }
        ProcessSpec::NeymanScott(ns) => IntensityMeasure::ConstantDensity {
            lambda: ns.kappa * ns.mean_children,
            window: ns.window.clone(),
        },
    }
}
