//! Non-negative integer laws and binomial thinning of counts.
//!
//! Thinned and scaled sums come with closed forms for the Laplace transform
//! and the alternate probability generating function (APGF).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{check_probability, Error, Result};
use crate::estimate::Estimate;
use crate::pmf::{binomial_row, ln_factorials, truncate, Pmf};

/// Tolerance on the total weight of a [`FinitePmf`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// An explicit pmf with finite support. Weights must already sum to one;
/// nothing is renormalised.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePmf {
    values: Vec<u64>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl FinitePmf {
    pub fn new(weights: impl IntoIterator<Item = (u64, f64)>) -> Result<Self> {
        let mut merged: BTreeMap<u64, f64> = BTreeMap::new();
        for (k, w) in weights {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::Parameter(format!("pmf weight {w} at {k} is not in [0, 1]")));
            }
            if merged.insert(k, w).is_some() {
                return Err(Error::Parameter(format!("pmf value {k} listed twice")));
            }
        }
        if merged.is_empty() {
            return Err(Error::Parameter("pmf has no support".into()));
        }
        let (values, weights): (Vec<u64>, Vec<f64>) = merged.into_iter().unzip();
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            cumulative.push(acc);
        }
        if (acc - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::Parameter(format!(
                "pmf weights sum to {acc}, not 1 within {NORMALIZATION_TOLERANCE:e}"
            )));
        }
        Ok(Self { values, weights, cumulative })
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.values.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn max_value(&self) -> u64 {
        *self.values.last().expect("non-empty support")
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        let i = self.cumulative.partition_point(|&c| c <= u);
        self.values[i.min(self.values.len() - 1)]
    }
}

/// A law on the non-negative integers with finite mean.
#[derive(Debug, Clone, PartialEq)]
pub enum IntegerDistribution {
    Deterministic(u64),
    Bernoulli(f64),
    Poisson(f64),
    Binomial { m: u64, p: f64 },
    FinitePmf(FinitePmf),
}

impl IntegerDistribution {
    pub fn bernoulli(q: f64) -> Result<Self> {
        let d = Self::Bernoulli(q);
        d.validate()?;
        Ok(d)
    }

    pub fn poisson(lambda: f64) -> Result<Self> {
        let d = Self::Poisson(lambda);
        d.validate()?;
        Ok(d)
    }

    pub fn binomial(m: u64, p: f64) -> Result<Self> {
        let d = Self::Binomial { m, p };
        d.validate()?;
        Ok(d)
    }

    pub fn finite_pmf(weights: impl IntoIterator<Item = (u64, f64)>) -> Result<Self> {
        FinitePmf::new(weights).map(Self::FinitePmf)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Deterministic(_) | Self::FinitePmf(_) => Ok(()),
            Self::Bernoulli(q) => check_probability("q", *q),
            Self::Poisson(lambda) => {
                if *lambda >= 0.0 && lambda.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Parameter(format!("Poisson rate {lambda} must be finite and >= 0")))
                }
            }
            Self::Binomial { p, .. } => check_probability("p", *p),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Deterministic(k) => *k as f64,
            Self::Bernoulli(q) => *q,
            Self::Poisson(lambda) => *lambda,
            Self::Binomial { m, p } => *m as f64 * p,
            Self::FinitePmf(pmf) => pmf.iter().map(|(k, w)| k as f64 * w).sum(),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Self::Deterministic(_) => 0.0,
            Self::Bernoulli(q) => q * (1.0 - q),
            Self::Poisson(lambda) => *lambda,
            Self::Binomial { m, p } => *m as f64 * p * (1.0 - p),
            Self::FinitePmf(pmf) => {
                let mu = self.mean();
                pmf.iter().map(|(k, w)| w * (k as f64 - mu).powi(2)).sum()
            }
        }
    }

    /// Largest value with positive probability; `None` for infinite support.
    pub fn support_max(&self) -> Option<u64> {
        match self {
            Self::Deterministic(k) => Some(*k),
            Self::Bernoulli(_) => Some(1),
            Self::Poisson(_) => None,
            Self::Binomial { m, .. } => Some(*m),
            Self::FinitePmf(pmf) => Some(pmf.max_value()),
        }
    }

    /// Dense pmf over `0..=support_max`, for finite-support laws.
    pub fn dense_pmf(&self) -> Option<Vec<f64>> {
        let max = self.support_max()? as usize;
        let mut pmf = vec![0.0; max + 1];
        match self {
            Self::Deterministic(k) => pmf[*k as usize] = 1.0,
            Self::Bernoulli(q) => {
                pmf[0] = 1.0 - q;
                pmf[1] = *q;
            }
            Self::Binomial { m, p } => pmf = binomial_row(*m as usize, *p, &ln_factorials(*m as usize)),
            Self::FinitePmf(f) => {
                for (k, w) in f.iter() {
                    pmf[k as usize] = w;
                }
            }
            Self::Poisson(_) => unreachable!("infinite support"),
        }
        Some(pmf)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            Self::Deterministic(k) => *k,
            Self::Bernoulli(q) => u64::from(rng.random::<f64>() < *q),
            Self::Poisson(lambda) => poisson_draw(*lambda, rng),
            Self::Binomial { m, p } => bernoulli_count(*m, *p, rng),
            Self::FinitePmf(pmf) => pmf.sample(rng),
        }
    }
}

impl fmt::Display for IntegerDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Deterministic(k) => write!(f, "deterministic:{k}"),
            Self::Bernoulli(q) => write!(f, "bernoulli:{q}"),
            Self::Poisson(lambda) => write!(f, "poisson:{lambda}"),
            Self::Binomial { m, p } => write!(f, "binomial:{m}:{p}"),
            Self::FinitePmf(pmf) => {
                write!(f, "pmf:")?;
                for (i, (k, w)) in pmf.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{k}={w}")?;
                }
                Ok(())
            }
        }
    }
}

/// Parses `deterministic:K`, `bernoulli:Q`, `poisson:L`, `binomial:M:P` and
/// `pmf:K=W,K=W,...`.
impl FromStr for IntegerDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |what: &str| Error::Parameter(format!("cannot parse distribution `{s}`: {what}"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad("expected a number"));
        let count = |t: &str| t.trim().parse::<u64>().map_err(|_| bad("expected a count"));
        let (kind, rest) = s.split_once(':').ok_or_else(|| bad("missing `:`"))?;
        let parts: Vec<&str> = rest.split(':').collect();
        let d = match (kind.trim(), parts.as_slice()) {
            ("deterministic", [k]) => Self::Deterministic(count(k)?),
            ("bernoulli", [q]) => Self::Bernoulli(num(q)?),
            ("poisson", [l]) => Self::Poisson(num(l)?),
            ("binomial", [m, p]) => Self::Binomial { m: count(m)?, p: num(p)? },
            ("pmf", [pairs]) => {
                let mut weights = Vec::new();
                for pair in pairs.split(',') {
                    let (k, w) = pair.split_once('=').ok_or_else(|| bad("expected K=W"))?;
                    weights.push((count(k)?, num(w)?));
                }
                Self::FinitePmf(FinitePmf::new(weights)?)
            }
            _ => return Err(bad("unknown kind or wrong number of parameters")),
        };
        d.validate()?;
        Ok(d)
    }
}

pub(crate) fn poisson_draw<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if lambda > 0.0 {
        let draw: f64 = Poisson::new(lambda).expect("positive finite rate").sample(rng);
        draw as u64
    } else {
        0
    }
}

/// Number of successes among `x` independent Bernoulli(`p`) trials.
pub(crate) fn bernoulli_count<R: Rng + ?Sized>(x: u64, p: f64, rng: &mut R) -> u64 {
    if p >= 1.0 {
        return x;
    }
    let mut kept = 0;
    for _ in 0..x {
        kept += u64::from(rng.random::<f64>() < p);
    }
    kept
}

/// Binomial thinning `p ∘ x`: keeps each of `x` items independently with
/// probability `p`.
pub fn thin_count<R: Rng + ?Sized>(x: u64, p: f64, rng: &mut R) -> Result<u64> {
    check_probability("p", p)?;
    Ok(bernoulli_count(x, p, rng))
}

/// `(1/n) ∘ (X_1 + ... + X_n)` with the `X_i` IID from `dist`.
pub fn thinned_sum_sample<R: Rng + ?Sized>(
    dist: &IntegerDistribution,
    n: u64,
    rng: &mut R,
) -> Result<u64> {
    if n == 0 {
        return Err(Error::Parameter("thinned sum needs n >= 1".into()));
    }
    dist.validate()?;
    let sum: u64 = (0..n).map(|_| dist.sample(rng)).sum();
    Ok(bernoulli_count(sum, 1.0 / n as f64, rng))
}

/// `(X_1 + ... + X_n) / n` with the `X_i` IID from `dist`.
pub fn scaled_sum_sample<R: Rng + ?Sized>(
    dist: &IntegerDistribution,
    n: u64,
    rng: &mut R,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::Parameter("scaled sum needs n >= 1".into()));
    }
    dist.validate()?;
    let sum: u64 = (0..n).map(|_| dist.sample(rng)).sum();
    Ok(sum as f64 / n as f64)
}

/// `base^k` for a possibly negative base and a large integer exponent.
fn int_pow(base: f64, k: u64) -> f64 {
    match i32::try_from(k) {
        Ok(k) => base.powi(k),
        Err(_) => {
            let (mut acc, mut b, mut e) = (1.0, base, k);
            while e > 0 {
                if e & 1 == 1 {
                    acc *= b;
                }
                b *= b;
                e >>= 1;
            }
            acc
        }
    }
}

fn check_apgf_domain(u: f64) -> Result<()> {
    if (0.0..=2.0).contains(&u) {
        Ok(())
    } else {
        Err(Error::Domain(format!("APGF argument u = {u} is outside [0, 2]")))
    }
}

fn check_laplace_domain(u: f64) -> Result<()> {
    if u >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("Laplace argument u = {u} must be >= 0")))
    }
}

/// Alternate probability generating function `A_X(u) = E (1 - u)^X`.
pub fn apgf_exact(dist: &IntegerDistribution, u: f64) -> Result<f64> {
    check_apgf_domain(u)?;
    dist.validate()?;
    Ok(match dist {
        IntegerDistribution::Deterministic(k) => int_pow(1.0 - u, *k),
        IntegerDistribution::Bernoulli(q) => 1.0 - q * u,
        IntegerDistribution::Poisson(lambda) => (-lambda * u).exp(),
        IntegerDistribution::Binomial { m, p } => int_pow(1.0 - p * u, *m),
        IntegerDistribution::FinitePmf(pmf) => pmf.iter().map(|(k, w)| w * int_pow(1.0 - u, k)).sum(),
    })
}

pub fn apgf_empirical(samples: &[u64], u: f64) -> Result<Estimate> {
    check_apgf_domain(u)?;
    let kernel: Vec<f64> = samples.iter().map(|&x| int_pow(1.0 - u, x)).collect();
    Estimate::from_samples(&kernel)
}

/// Subject of a Laplace transform: an integer law, or the point mass that
/// is the law-of-large-numbers limit.
#[derive(Debug, Clone, PartialEq)]
pub enum RealLaw {
    Integer(IntegerDistribution),
    PointMass(f64),
}

/// Laplace transform `L_X(u) = E exp(-u X)`.
pub fn laplace_exact(law: &RealLaw, u: f64) -> Result<f64> {
    check_laplace_domain(u)?;
    let e = (-u).exp();
    Ok(match law {
        RealLaw::PointMass(mu) => (-mu * u).exp(),
        RealLaw::Integer(dist) => {
            dist.validate()?;
            match dist {
                IntegerDistribution::Deterministic(k) => (-u * *k as f64).exp(),
                IntegerDistribution::Bernoulli(q) => 1.0 - q + q * e,
                IntegerDistribution::Poisson(lambda) => (lambda * (e - 1.0)).exp(),
                IntegerDistribution::Binomial { m, p } => int_pow(1.0 - p + p * e, *m),
                IntegerDistribution::FinitePmf(pmf) => {
                    pmf.iter().map(|(k, w)| w * (-u * k as f64).exp()).sum()
                }
            }
        }
    })
}

pub fn laplace_empirical(samples: &[f64], u: f64) -> Result<Estimate> {
    check_laplace_domain(u)?;
    let kernel: Vec<f64> = samples.iter().map(|&x| (-u * x).exp()).collect();
    Estimate::from_samples(&kernel)
}

/// Factorial moment `E (X)_j = E X (X - 1) ... (X - j + 1)` for `j` in {1, 2}.
pub fn factorial_moment(dist: &IntegerDistribution, j: u32) -> Result<f64> {
    dist.validate()?;
    match j {
        1 => Ok(dist.mean()),
        2 => Ok(match dist {
            IntegerDistribution::Deterministic(k) => {
                let k = *k as f64;
                k * (k - 1.0)
            }
            IntegerDistribution::Bernoulli(_) => 0.0,
            IntegerDistribution::Poisson(lambda) => lambda * lambda,
            IntegerDistribution::Binomial { m, p } => {
                let m = *m as f64;
                m * (m - 1.0) * p * p
            }
            IntegerDistribution::FinitePmf(pmf) => pmf
                .iter()
                .map(|(k, w)| {
                    let k = k as f64;
                    w * k * (k - 1.0)
                })
                .sum(),
        }),
        _ => Err(Error::Parameter(format!(
            "factorial moment of order {j} is not supported (only 1 and 2)"
        ))),
    }
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Exact law of the `n`-fold independent sum, by repeated squaring.
fn convolution_power(base: &[f64], n: u64) -> Vec<f64> {
    let mut result = vec![1.0];
    let mut square = base.to_vec();
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            result = convolve(&result, &square);
        }
        e >>= 1;
        if e > 0 {
            square = convolve(&square, &square);
        }
    }
    result
}

/// Exact pmf of the thinned sum `Y_n = (1/n) ∘ (X_1 + ... + X_n)` on
/// `{0..kmax}`, with the mass above `kmax` reported as the tail.
///
/// The sum law `S` is the `n`-fold convolution of `dist`, and
/// `P(Y_n = k) = Σ_s P(S = s) Bin(s, 1/n)(k)`.
pub fn pmf_thinned_sum_exact(dist: &IntegerDistribution, n: u64, kmax: usize) -> Result<Pmf> {
    if n == 0 {
        return Err(Error::Parameter("thinned sum needs n >= 1".into()));
    }
    dist.validate()?;
    let base = dist.dense_pmf().ok_or_else(|| {
        Error::Unsupported(format!("exact thinned-sum pmf needs finite support, got {dist}"))
    })?;
    let sum_law = convolution_power(&base, n);
    let p = 1.0 / n as f64;
    let ln_fact = ln_factorials(sum_law.len());
    let mut mass = vec![0.0; kmax + 1];
    let mut tail = 0.0;
    for (s, &ps) in sum_law.iter().enumerate() {
        if ps == 0.0 {
            continue;
        }
        let row = binomial_row(s, p, &ln_fact);
        let part = truncate(&row, kmax);
        for (k, m) in part.mass().iter().enumerate() {
            mass[k] += ps * m;
        }
        tail += ps * part.tail();
    }
    Pmf::new(mass, tail)
}
