use crate::error::{Error, Result};

/// Monte Carlo estimate of an expectation with its CLT standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// Sample standard deviation over `sqrt(n_samples)`.
    pub stderr: f64,
    pub n_samples: usize,
}

impl Estimate {
    pub fn from_samples(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::Parameter(format!(
                "an estimate needs at least 2 samples, got {n}"
            )));
        }
        let mean = pairwise_sum(values) / n as f64;
        let sd = sample_sd(values, mean);
        Ok(Self {
            value: mean,
            stderr: sd / (n as f64).sqrt(),
            n_samples: n,
        })
    }

    pub fn gap(&self, target: f64) -> f64 {
        (self.value - target).abs()
    }

    /// `|value - target| <= k * stderr`, with a rounding allowance so that
    /// zero-variance estimates of an exact target still pass.
    pub fn within(&self, target: f64, k: f64) -> bool {
        within_sigma(self.gap(target), self.stderr, k)
    }

    /// Delta-method estimate of the product of two independent estimates.
    pub fn product(&self, other: &Estimate) -> Estimate {
        let value = self.value * other.value;
        let stderr = (other.value * self.stderr).hypot(self.value * other.stderr);
        Estimate {
            value,
            stderr,
            n_samples: self.n_samples.min(other.n_samples),
        }
    }
}

pub fn within_sigma(gap: f64, stderr: f64, k: f64) -> bool {
    gap <= k * stderr + 1e-12
}

/// Standard error of the difference of two independent estimates.
pub fn combined_stderr(a: f64, b: f64) -> f64 {
    a.hypot(b)
}

/// Fixed-order pairwise summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 64;
    if xs.len() <= LEAF {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased (n - 1) sample standard deviation around a given mean.
pub fn sample_sd(xs: &[f64], mean: f64) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    (pairwise_sum(&sq) / (xs.len() - 1) as f64).sqrt()
}

/// Sample standard deviation together with its delta-method standard error
/// `sqrt((m4 - s^4) / N) / (2 s)`.
pub fn sd_with_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = mean(xs);
    let sd = sample_sd(xs, m);
    if sd == 0.0 {
        return (0.0, 0.0);
    }
    let fourth: Vec<f64> = xs.iter().map(|x| (x - m).powi(4)).collect();
    let m4 = pairwise_sum(&fourth) / n;
    let var_of_var = ((m4 - sd.powi(4)) / n).max(0.0);
    (sd, var_of_var.sqrt() / (2.0 * sd))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_samples_have_zero_stderr() {
        let e = Estimate::from_samples(&[1.0; 10]).unwrap();
        assert_eq!(e.value, 1.0);
        assert_eq!(e.stderr, 0.0);
        assert!(e.within(1.0, 3.0));
    }

    #[test]
    fn rejects_fewer_than_two() {
        assert!(Estimate::from_samples(&[]).is_err());
        assert!(Estimate::from_samples(&[0.5]).is_err());
    }

    #[test]
    fn stderr_is_sd_over_root_n() {
        let e = Estimate::from_samples(&[0.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(e.value, 0.5);
        let sd = (1.0f64 / 3.0).sqrt();
        assert!((e.stderr - sd / 2.0).abs() < 1e-15);
    }

    #[test]
    fn pairwise_matches_naive_on_small_inputs() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499_500.0);
    }
}
