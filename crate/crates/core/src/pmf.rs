//! Truncated pmfs on `{0, ..., kmax}` with the remaining mass carried as an
//! explicit tail. Poisson and binomial laws are built here exactly.

use crate::error::{Error, Result};
use crate::estimate::pairwise_sum;

/// Cumulative tail below which a truncation point is accepted.
pub const TAIL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    mass: Vec<f64>,
    tail: f64,
}

impl Pmf {
    pub fn new(mass: Vec<f64>, tail: f64) -> Result<Self> {
        if let Some(&bad) = mass.iter().find(|m| m.is_nan() || **m < 0.0) {
            return Err(Error::NegativeMass(bad));
        }
        if tail.is_nan() || tail < 0.0 {
            return Err(Error::NegativeMass(tail));
        }
        Ok(Self { mass, tail })
    }

    pub fn point_mass(k: usize) -> Self {
        let mut mass = vec![0.0; k + 1];
        mass[k] = 1.0;
        Self { mass, tail: 0.0 }
    }

    /// `P(k)`, zero past the stored range.
    pub fn get(&self, k: usize) -> f64 {
        self.mass.get(k).copied().unwrap_or(0.0)
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Mass above the stored range.
    pub fn tail(&self) -> f64 {
        self.tail
    }

    pub fn kmax(&self) -> usize {
        self.mass.len().saturating_sub(1)
    }

    pub fn total(&self) -> f64 {
        pairwise_sum(&self.mass) + self.tail
    }
}

/// Running table of `ln k!`.
pub(crate) fn ln_factorials(upto: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(upto + 1);
    let mut acc = 0.0;
    table.push(0.0);
    for k in 1..=upto {
        acc += (k as f64).ln();
        table.push(acc);
    }
    table
}

fn poisson_term(lambda: f64, k: usize, ln_k_fact: f64) -> f64 {
    (k as f64 * lambda.ln() - lambda - ln_k_fact).exp()
}

/// Poisson(`lambda`) on `{0..kmax}`; the tail is summed term by term, not
/// taken as `1 - cdf`.
pub fn poisson_pmf(lambda: f64, kmax: usize) -> Result<Pmf> {
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::Parameter(format!(
            "Poisson rate must be finite and non-negative, got {lambda}"
        )));
    }
    if lambda == 0.0 {
        let mut mass = vec![0.0; kmax + 1];
        mass[0] = 1.0;
        return Ok(Pmf { mass, tail: 0.0 });
    }
    let mut mass = Vec::with_capacity(kmax + 1);
    let mut ln_fact = 0.0;
    for k in 0..=kmax {
        if k > 0 {
            ln_fact += (k as f64).ln();
        }
        mass.push(poisson_term(lambda, k, ln_fact));
    }
    let mut tail = 0.0;
    let mut k = kmax + 1;
    loop {
        ln_fact += (k as f64).ln();
        let term = poisson_term(lambda, k, ln_fact);
        tail += term;
        if k as f64 > lambda && (term == 0.0 || term < tail * 1e-17) {
            break;
        }
        k += 1;
    }
    Ok(Pmf { mass, tail })
}

/// The full row `Bin(n, p)(k)` for `k = 0..=n`, using a shared `ln k!` table
/// of length at least `n + 1`.
pub(crate) fn binomial_row(n: usize, p: f64, ln_fact: &[f64]) -> Vec<f64> {
    if p <= 0.0 {
        let mut row = vec![0.0; n + 1];
        row[0] = 1.0;
        return row;
    }
    if p >= 1.0 {
        let mut row = vec![0.0; n + 1];
        row[n] = 1.0;
        return row;
    }
    let ln_p = p.ln();
    let ln_q = (-p).ln_1p();
    (0..=n)
        .map(|k| {
            (ln_fact[n] - ln_fact[k] - ln_fact[n - k] + k as f64 * ln_p + (n - k) as f64 * ln_q)
                .exp()
        })
        .collect()
}

/// Binomial(`n`, `p`) truncated at `kmax`.
pub fn binomial_pmf(n: u64, p: f64, kmax: usize) -> Result<Pmf> {
    crate::error::check_probability("p", p)?;
    let n = n as usize;
    let table = ln_factorials(n);
    let row = binomial_row(n, p, &table);
    Ok(truncate(&row, kmax))
}

pub(crate) fn truncate(full: &[f64], kmax: usize) -> Pmf {
    let mut mass = vec![0.0; kmax + 1];
    let mut tail = 0.0;
    for (k, &m) in full.iter().enumerate() {
        if k <= kmax {
            mass[k] = m;
        } else {
            tail += m;
        }
    }
    Pmf { mass, tail }
}

/// Smallest `k` with `P(Z > k) < 1e-12` for `Z ~ Poisson(mean + 3 sqrt(mean))`.
pub fn default_kmax(mean: f64) -> usize {
    let envelope = mean.max(0.0) + 3.0 * mean.max(0.0).sqrt();
    if envelope == 0.0 {
        return 0;
    }
    let mut terms = Vec::new();
    let mut ln_fact = 0.0;
    let mut k = 0usize;
    loop {
        if k > 0 {
            ln_fact += (k as f64).ln();
        }
        let t = poisson_term(envelope, k, ln_fact);
        terms.push(t);
        if k as f64 > envelope && t < 1e-30 {
            break;
        }
        k += 1;
    }
    // tail_above[k] = P(Z > k), accumulated from the far end
    let mut above = 0.0;
    let mut tail_above = vec![0.0; terms.len()];
    for k in (0..terms.len()).rev() {
        tail_above[k] = above;
        above += terms[k];
    }
    tail_above
        .iter()
        .position(|&t| t < TAIL_TOLERANCE)
        .unwrap_or(terms.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_zero_rate_is_point_mass() {
        let p = poisson_pmf(0.0, 3).unwrap();
        assert_eq!(p.mass(), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(p.tail(), 0.0);
    }

    #[test]
    fn poisson_unit_rate_first_two_terms_equal() {
        let p = poisson_pmf(1.0, 5).unwrap();
        let e = (-1.0f64).exp();
        assert!((p.get(0) - e).abs() < 1e-15);
        assert!((p.get(1) - e).abs() < 1e-15);
    }

    #[test]
    fn poisson_rate_two_at_two() {
        // 2^2 e^-2 / 2!
        let p = poisson_pmf(2.0, 10).unwrap();
        assert!((p.get(2) - 0.270_670_566_473_225_4).abs() < 1e-14);
    }

    #[test]
    fn poisson_tail_is_summed_not_subtracted() {
        let p = poisson_pmf(2.0, 3).unwrap();
        // P(Z > 3) for Z ~ Poisson(2)
        let head: f64 = (0..=3).map(|k| p.get(k)).sum();
        assert!((p.tail() - (1.0 - head)).abs() < 1e-14);
        assert!((p.total() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn negative_rate_rejected() {
        assert!(poisson_pmf(-1.0, 3).is_err());
        assert!(poisson_pmf(f64::NAN, 3).is_err());
    }

    #[test]
    fn binomial_matches_closed_form() {
        let b = binomial_pmf(5, 0.3, 5).unwrap();
        assert!((b.get(0) - 0.16807).abs() < 1e-14);
        assert!((b.get(5) - 0.3f64.powi(5)).abs() < 1e-15);
        assert!((b.total() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn default_kmax_tail_is_below_tolerance() {
        for mean in [0.1, 0.7, 1.0, 2.0, 6.0, 20.0] {
            let k = default_kmax(mean);
            let env = mean + 3.0 * mean.sqrt();
            let p = poisson_pmf(env, k).unwrap();
            assert!(p.tail() < TAIL_TOLERANCE, "mean {mean}: kmax {k}");
            let shorter = poisson_pmf(env, k - 1).unwrap();
            assert!(shorter.tail() >= TAIL_TOLERANCE, "mean {mean}: kmax {k} not minimal");
        }
        assert_eq!(default_kmax(0.0), 0);
    }

    #[test]
    fn pmf_rejects_negative_mass() {
        assert!(matches!(Pmf::new(vec![0.5, -0.1], 0.0), Err(Error::NegativeMass(_))));
        assert!(Pmf::new(vec![0.5], -1e-3).is_err());
    }
}
