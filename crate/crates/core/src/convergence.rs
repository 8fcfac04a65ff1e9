//! Total variation against Poisson targets, and the convergence curves of
//! the thinned and scaled sums and of thinned superpositions.
//!
//! Every curve point draws from its own stream family, derived from the
//! caller's [`Streams`] by `n` and a metric tag, so points are reproducible
//! individually and independent of evaluation order.

use crate::distributions::{
    apgf_exact, laplace_empirical, pmf_thinned_sum_exact, scaled_sum_sample, thinned_sum_sample,
    IntegerDistribution,
};
use crate::error::{Error, Result};
use crate::estimate::{sd_with_stderr, Estimate};
use crate::functionals::{apgfl_empirical, apgfl_poisson, GapEntry, GapReport, NamedTestFunction};
use crate::pmf::{default_kmax, Pmf};
use crate::point_process::{
    count_in, intensity_of_spec, measure_of, thinned_superposition_sample, PointPattern,
    ProcessSpec, Region, Window,
};
use crate::stream::{par_collect, StreamRng, Streams};

pub use crate::pmf::poisson_pmf;

/// Slack allowed on a pmf total above 1.
const TOTAL_SLACK: f64 = 1e-9;

/// Histogram of non-negative integer samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalPmf {
    counts: Vec<u64>,
    total: u64,
}

impl EmpiricalPmf {
    pub fn from_samples(samples: &[u64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Parameter("empirical pmf needs at least one sample".into()));
        }
        let top = *samples.iter().max().expect("non-empty") as usize;
        let mut counts = vec![0u64; top + 1];
        for &s in samples {
            counts[s as usize] += 1;
        }
        Ok(Self { counts, total: samples.len() as u64 })
    }

    pub fn occurrences(&self, k: u64) -> u64 {
        self.counts.get(k as usize).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn max_value(&self) -> u64 {
        (self.counts.len() - 1) as u64
    }

    /// Number of values observed at least once.
    pub fn occupied(&self) -> usize {
        self.counts.iter().filter(|c| **c > 0).count()
    }

    pub fn to_pmf(&self) -> Pmf {
        let n = self.total as f64;
        Pmf::new(self.counts.iter().map(|c| *c as f64 / n).collect(), 0.0).expect("non-negative")
    }
}

/// `½ Σ_k |a(k) - b(k)| + ½ |tail_a - tail_b|`, missing keys read as 0.
pub fn tv_distance(a: &Pmf, b: &Pmf) -> Result<f64> {
    for pmf in [a, b] {
        if pmf.total() > 1.0 + TOTAL_SLACK {
            return Err(Error::Parameter(format!("pmf total {} exceeds 1", pmf.total())));
        }
    }
    let top = a.kmax().max(b.kmax());
    let body: f64 = (0..=top).map(|k| (a.get(k) - b.get(k)).abs()).sum();
    Ok((0.5 * (body + (a.tail() - b.tail()).abs())).min(1.0))
}

/// Crude standard error of an empirical TV: `½ Σ_k sqrt(p̂_k (1 - p̂_k) / N)`.
pub fn multinomial_tv_stderr(emp: &EmpiricalPmf) -> f64 {
    let n = emp.total as f64;
    0.5 * emp
        .counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            (p * (1.0 - p) / n).sqrt()
        })
        .sum::<f64>()
}

/// Noise floor `5 sqrt(K / N)` for the TV between an empirical pmf over `K`
/// occupied bins and its own law.
pub fn noise_bound(occupied: usize, samples: usize) -> f64 {
    5.0 * (occupied as f64 / samples as f64).sqrt()
}

/// Poisson target on a range wide enough for both the default truncation
/// and every observed value.
fn poisson_target(lambda: f64, observed_max: u64) -> Result<Pmf> {
    poisson_pmf(lambda, default_kmax(lambda).max(observed_max as usize))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergencePoint {
    pub n: u64,
    pub metric: String,
    /// Limit value the metric is compared against (0 for distances).
    pub target: f64,
    pub value: f64,
    pub stderr: Option<f64>,
}

impl ConvergencePoint {
    fn new(n: u64, metric: impl Into<String>, target: f64, value: f64, stderr: Option<f64>) -> Self {
        Self { n, metric: metric.into(), target, value, stderr }
    }

    pub fn gap(&self) -> f64 {
        (self.value - self.target).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    MonteCarlo { samples: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedRegion {
    pub name: String,
    pub region: Region,
}

impl NamedRegion {
    pub fn new(name: impl Into<String>, region: Region) -> Self {
        Self { name: name.into(), region }
    }
}

/// Left half along the first axis, the central box covering half of each
/// axis, and the lower corner box covering the first half of each axis.
pub fn standard_regions(window: &Window) -> Vec<NamedRegion> {
    let mut upper = window.upper().to_vec();
    upper[0] = 0.5 * (window.lower()[0] + window.upper()[0]);
    vec![
        NamedRegion::new("left_half", Region::new(window.lower().to_vec(), upper).expect("inside window")),
        NamedRegion::new("center", window.sub_box(0.25, 0.75)),
        NamedRegion::new("corner", window.sub_box(0.0, 0.5)),
    ]
}

fn check_n_list(n_list: &[u64]) -> Result<()> {
    if n_list.is_empty() || n_list.contains(&0) {
        return Err(Error::Parameter("n list must be non-empty with every n >= 1".into()));
    }
    Ok(())
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < 2 {
        return Err(Error::Parameter(format!("need at least 2 samples, got {samples}")));
    }
    Ok(())
}

/// TV between the law of `Y_n = (1/n) ∘ (X_1 + ... + X_n)` and
/// `Poisson(E X)`, one `tv_poisson` point per `n`.
pub fn thin_numbers_curve(
    dist: &IntegerDistribution,
    n_list: &[u64],
    mode: Mode,
    streams: &Streams,
) -> Result<Vec<ConvergencePoint>> {
    dist.validate()?;
    check_n_list(n_list)?;
    let lambda = dist.mean();
    match mode {
        Mode::Exact => {
            if dist.support_max().is_none() {
                return Err(Error::Unsupported(format!("exact mode needs finite support, got {dist}")));
            }
            let kmax = default_kmax(lambda);
            let target = poisson_pmf(lambda, kmax)?;
            n_list
                .iter()
                .map(|&n| {
                    let law = pmf_thinned_sum_exact(dist, n, kmax)?;
                    Ok(ConvergencePoint::new(n, "tv_poisson", 0.0, tv_distance(&law, &target)?, None))
                })
                .collect()
        }
        Mode::MonteCarlo { samples } => {
            check_samples(samples)?;
            n_list
                .iter()
                .map(|&n| {
                    let cell = streams.derive(n).derive_str("tv_poisson");
                    let draws = par_collect(&cell, samples, |rng| {
                        thinned_sum_sample(dist, n, rng).expect("validated")
                    });
                    let emp = EmpiricalPmf::from_samples(&draws)?;
                    let target = poisson_target(lambda, emp.max_value())?;
                    let tv = tv_distance(&emp.to_pmf(), &target)?;
                    Ok(ConvergencePoint::new(n, "tv_poisson", 0.0, tv, Some(multinomial_tv_stderr(&emp))))
                })
                .collect()
        }
    }
}

/// Laplace points evaluated by [`large_numbers_check`].
pub const LAPLACE_POINTS: [(f64, &str); 2] = [(0.5, "laplace_u0.5"), (1.0, "laplace_u1")];

/// Per `n`, statistics of the scaled sum `(X_1 + ... + X_n) / n`:
///
/// * `mean` against `E X`;
/// * `sd` against the exact `sqrt(Var X / n)`;
/// * `laplace_u*` against the limit `e^{-u E X}`;
/// * `laplace_u*/finite_n` against the exact `(E e^{-u X / n})^n`.
pub fn large_numbers_check(
    dist: &IntegerDistribution,
    n_list: &[u64],
    samples: usize,
    streams: &Streams,
) -> Result<Vec<ConvergencePoint>> {
    dist.validate()?;
    check_n_list(n_list)?;
    check_samples(samples)?;
    let mu = dist.mean();
    let mut points = Vec::new();
    for &n in n_list {
        let cell = streams.derive(n).derive_str("scaled_sum");
        let ys = par_collect(&cell, samples, |rng| scaled_sum_sample(dist, n, rng).expect("validated"));
        let mean = Estimate::from_samples(&ys)?;
        points.push(ConvergencePoint::new(n, "mean", mu, mean.value, Some(mean.stderr)));
        let (sd, sd_se) = sd_with_stderr(&ys);
        let sd_target = (dist.variance() / n as f64).sqrt();
        points.push(ConvergencePoint::new(n, "sd", sd_target, sd, Some(sd_se)));
        for (u, name) in LAPLACE_POINTS {
            let est = laplace_empirical(&ys, u)?;
            points.push(ConvergencePoint::new(n, name, (-u * mu).exp(), est.value, Some(est.stderr)));
            // E e^{-uX/n} = A_X(1 - e^{-u/n})
            let one_term = apgf_exact(dist, -(-u / n as f64).exp_m1())?;
            let finite = one_term.powf(n as f64);
            points.push(ConvergencePoint::new(n, format!("{name}/finite_n"), finite, est.value, Some(est.stderr)));
        }
    }
    Ok(points)
}

/// Samples of `(1/n) ∘ (ξ_1 + ... + ξ_n)` for one curve point.
pub fn thinned_superposition_samples(
    spec: &ProcessSpec,
    n: u64,
    samples: usize,
    streams: &Streams,
) -> Result<Vec<PointPattern>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::Parameter("thinned superposition needs n >= 1".into()));
    }
    let cell = streams.derive(n).derive_str("thinned_superposition");
    Ok(par_collect(&cell, samples, |rng| {
        thinned_superposition_sample(spec, n, rng).expect("validated")
    }))
}

/// Count-TV and void-probability points of one region against the Poisson
/// law with mean `mu_a`.
pub fn region_points(
    n: u64,
    name: &str,
    region: &Region,
    mu_a: f64,
    samples: &[PointPattern],
) -> Result<[ConvergencePoint; 2]> {
    let counts: Vec<u64> = samples.iter().map(|p| count_in(p, region)).collect();
    let emp = EmpiricalPmf::from_samples(&counts)?;
    let target = poisson_target(mu_a, emp.max_value())?;
    let tv = tv_distance(&emp.to_pmf(), &target)?;
    let voids: Vec<f64> = counts.iter().map(|&c| if c == 0 { 1.0 } else { 0.0 }).collect();
    let void = Estimate::from_samples(&voids)?;
    Ok([
        ConvergencePoint::new(n, format!("count_tv/{name}"), 0.0, tv, Some(multinomial_tv_stderr(&emp))),
        ConvergencePoint::new(n, format!("void/{name}"), (-mu_a).exp(), void.value, Some(void.stderr)),
    ])
}

/// Per `n`, APGFL values over the dictionary (`apgfl/<id>`) with the maximum
/// gap (`apgfl_max_gap`), and per region the count TV (`count_tv/<name>`)
/// and void probability (`void/<name>`), all against the Poisson process
/// with the intensity of `spec`.
pub fn thin_processes_curve(
    spec: &ProcessSpec,
    n_list: &[u64],
    dictionary: &[NamedTestFunction],
    regions: &[NamedRegion],
    samples: usize,
    streams: &Streams,
) -> Result<(Vec<ConvergencePoint>, Vec<GapReport>)> {
    spec.validate()?;
    check_n_list(n_list)?;
    check_samples(samples)?;
    let mu = intensity_of_spec(spec);
    let targets: Vec<f64> =
        dictionary.iter().map(|f| apgfl_poisson(&mu, &f.function)).collect::<Result<_>>()?;
    let region_means: Vec<f64> =
        regions.iter().map(|r| measure_of(&mu, &r.region)).collect::<Result<_>>()?;

    let mut points = Vec::new();
    let mut reports = Vec::new();
    for &n in n_list {
        let draws = thinned_superposition_samples(spec, n, samples, streams)?;
        let mut entries = Vec::with_capacity(dictionary.len());
        for (f, &target) in dictionary.iter().zip(&targets) {
            let empirical = apgfl_empirical(&draws, &f.function)?;
            points.push(ConvergencePoint::new(
                n,
                format!("apgfl/{}", f.id),
                target,
                empirical.value,
                Some(empirical.stderr),
            ));
            entries.push(GapEntry { id: f.id.clone(), empirical, target, gap: empirical.gap(target) });
        }
        let report = GapReport::new(n, entries);
        if let Some(worst) = report.max_entry() {
            points.push(ConvergencePoint::new(
                n,
                "apgfl_max_gap",
                0.0,
                report.max_gap,
                Some(worst.empirical.stderr),
            ));
        }
        reports.push(report);
        for (r, &mu_a) in regions.iter().zip(&region_means) {
            points.extend(region_points(n, &r.name, &r.region, mu_a, &draws)?);
        }
    }
    Ok((points, reports))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSampleTv {
    pub tv: f64,
    /// Bins occupied by either sample.
    pub occupied: usize,
    pub samples: usize,
}

impl TwoSampleTv {
    /// `5 sqrt(K / N)`.
    pub fn noise_bound(&self) -> f64 {
        noise_bound(self.occupied, self.samples)
    }
}

/// TV between the empirical count pmfs in `region` of two samplers, each
/// run `samples` times on its own streams.
pub fn two_sample_count_tv<A, B>(
    sampler_a: A,
    sampler_b: B,
    region: &Region,
    samples: usize,
    streams_a: &Streams,
    streams_b: &Streams,
) -> Result<TwoSampleTv>
where
    A: Fn(&mut StreamRng) -> PointPattern + Sync,
    B: Fn(&mut StreamRng) -> PointPattern + Sync,
{
    if samples < 1000 {
        return Err(Error::Parameter(format!("two-sample TV needs at least 1000 samples, got {samples}")));
    }
    let a: Vec<u64> = par_collect(streams_a, samples, |rng| count_in(&sampler_a(rng), region));
    let b: Vec<u64> = par_collect(streams_b, samples, |rng| count_in(&sampler_b(rng), region));
    let (ea, eb) = (EmpiricalPmf::from_samples(&a)?, EmpiricalPmf::from_samples(&b)?);
    let top = ea.max_value().max(eb.max_value());
    let occupied = (0..=top).filter(|&k| ea.occurrences(k) + eb.occurrences(k) > 0).count();
    Ok(TwoSampleTv { tv: tv_distance(&ea.to_pmf(), &eb.to_pmf())?, occupied, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pmf::binomial_pmf;
    use crate::point_process::{sample_process, superpose, thin_pattern, IntensityMeasure};
    use proptest::prelude::*;

    #[test]
    fn tv_examples() {
        let a = poisson_pmf(2.0, 30).unwrap();
        assert_eq!(tv_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(tv_distance(&Pmf::point_mass(0), &Pmf::point_mass(3)).unwrap(), 1.0);
        let tv = tv_distance(&Pmf::point_mass(1), &poisson_pmf(1.0, default_kmax(1.0)).unwrap()).unwrap();
        // independent: ½ (|P(1) - 1| + (1 - P(1))) = 1 - e^{-1}
        let mut oracle = 0.0;
        let mut term = (-1.0f64).exp();
        for k in 0..60 {
            if k > 0 {
                term /= k as f64;
            }
            oracle += if k == 1 { (1.0 - term).abs() } else { term };
        }
        oracle *= 0.5;
        assert!((tv - oracle).abs() < 1e-12);
        assert!((tv - 0.632_120_6).abs() < 1e-7);
        // tails count
        let short = Pmf::new(vec![0.5], 0.5).unwrap();
        let long = Pmf::new(vec![0.5, 0.5], 0.0).unwrap();
        assert!((tv_distance(&short, &long).unwrap() - 0.5).abs() < 1e-15);
        assert!(tv_distance(&Pmf::new(vec![0.8, 0.8], 0.0).unwrap(), &long).is_err());
    }

    #[test]
    fn empirical_pmf_counts() {
        let e = EmpiricalPmf::from_samples(&[0, 2, 2, 5]).unwrap();
        assert_eq!((e.total(), e.occurrences(2), e.occurrences(9), e.occupied()), (4, 2, 0, 3));
        assert_eq!(e.to_pmf().get(2), 0.5);
        assert!(EmpiricalPmf::from_samples(&[]).is_err());
    }

    fn arb_pmf() -> impl Strategy<Value = Pmf> {
        (prop::collection::vec(0.0f64..1.0, 1..8), 0.0f64..0.5).prop_map(|(w, tail)| {
            let s: f64 = w.iter().sum::<f64>() + 1e-9;
            Pmf::new(w.iter().map(|x| x / s * (1.0 - tail)).collect(), tail).unwrap()
        })
    }

    proptest! {
        #[test]
        fn tv_is_a_metric(a in arb_pmf(), b in arb_pmf(), c in arb_pmf()) {
            let ab = tv_distance(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(ab, tv_distance(&b, &a).unwrap());
            let ac = tv_distance(&a, &c).unwrap();
            let cb = tv_distance(&c, &b).unwrap();
            prop_assert!(ab <= ac + cb + 1e-12);
        }
    }

    #[test]
    fn exact_curve_deterministic_one_le_cam() {
        let n_list: Vec<u64> = (0..=10).map(|e| 1u64 << e).collect();
        let pts = thin_numbers_curve(&IntegerDistribution::Deterministic(1), &n_list, Mode::Exact, &Streams::new(0)).unwrap();
        for p in &pts {
            // independent oracle: Binomial(n, 1/n) against Poisson(1)
            let kmax = default_kmax(1.0);
            let oracle = tv_distance(&binomial_pmf(p.n, 1.0 / p.n as f64, kmax).unwrap(), &poisson_pmf(1.0, kmax).unwrap()).unwrap();
            assert!((p.value - oracle).abs() < 1e-12, "n {}: {} vs {}", p.n, p.value, oracle);
            assert!(p.value <= 1.0 / p.n as f64);
        }
    }

    #[test]
    fn exact_curve_bernoulli_decreases() {
        let n_list: Vec<u64> = (0..=10).map(|e| 1u64 << e).collect();
        let pts = thin_numbers_curve(&IntegerDistribution::Bernoulli(0.7), &n_list, Mode::Exact, &Streams::new(0)).unwrap();
        assert!(pts.windows(2).all(|w| w[1].value < w[0].value));
        assert!(pts.last().unwrap().value < 1e-3);
        assert!(thin_numbers_curve(&IntegerDistribution::Poisson(1.0), &[1], Mode::Exact, &Streams::new(0)).is_err());
        assert!(thin_numbers_curve(&IntegerDistribution::Bernoulli(0.7), &[], Mode::Exact, &Streams::new(0)).is_err());
    }

    #[test]
    fn mc_matches_exact_at_n_one() {
        let streams = Streams::new(11);
        for dist in crate::catalog::distribution_catalog() {
            if dist.support_max().is_none() {
                continue;
            }
            let exact = thin_numbers_curve(&dist, &[1], Mode::Exact, &streams).unwrap();
            let mc = thin_numbers_curve(&dist, &[1], Mode::MonteCarlo { samples: 50_000 }, &streams).unwrap();
            // at n = 1 the MC TV is noise around the exact TV
            let se = mc[0].stderr.unwrap();
            assert!(crate::estimate::within_sigma((mc[0].value - exact[0].value).abs(), se, 3.0), "{dist}: {:?} vs {:?}", mc[0], exact[0]);
        }
    }

    #[test]
    fn large_numbers_deterministic() {
        let pts = large_numbers_check(&IntegerDistribution::Deterministic(3), &[1, 7, 100], 1000, &Streams::new(4)).unwrap();
        for p in pts.iter().filter(|p| p.metric == "mean" || p.metric == "sd") {
            assert_eq!(p.gap(), 0.0, "{p:?}");
        }
        for p in pts.iter().filter(|p| p.metric.ends_with("finite_n")) {
            assert!(p.gap() < 1e-12, "{p:?}");
        }
    }

    #[test]
    fn large_numbers_bernoulli_sd() {
        let pts = large_numbers_check(&IntegerDistribution::Bernoulli(0.5), &[10, 100], 100_000, &Streams::new(5)).unwrap();
        for p in pts.iter().filter(|p| p.metric == "sd") {
            assert!((p.target - 0.5 / (p.n as f64).sqrt()).abs() < 1e-15);
            assert!(p.gap() < 3.0 * p.stderr.unwrap(), "{p:?}");
        }
    }

    #[test]
    fn standard_regions_in_window() {
        let w = Window::unit(2).unwrap();
        let rs = standard_regions(&w);
        assert_eq!(rs[0].region, "[0,0.5]x[0,1]".parse().unwrap());
        assert!(rs.iter().all(|r| r.region.is_within(w.as_region())));
    }

    #[test]
    fn poisson_fixed_point_curve() {
        let w = Window::unit(2).unwrap();
        let spec = ProcessSpec::Poisson(IntensityMeasure::constant(4.0, w.clone()).unwrap());
        let dict = crate::functionals::standard_dictionary(&w);
        let (pts, reports) =
            thin_processes_curve(&spec, &[1, 3], &dict, &standard_regions(&w), 20_000, &Streams::new(8)).unwrap();
        assert_eq!(reports.len(), 2);
        for p in pts.iter().filter(|p| p.metric.starts_with("apgfl/") || p.metric.starts_with("void/")) {
            assert!(p.gap() <= 5.0 * p.stderr.unwrap() + 1e-12, "{p:?}");
        }
        for p in pts.iter().filter(|p| p.metric.starts_with("count_tv/")) {
            assert!(p.value < noise_bound(12, 20_000), "{p:?}");
        }
    }

    #[test]
    fn two_sample_identities() {
        let w = Window::unit(2).unwrap();
        let spec = ProcessSpec::Poisson(IntensityMeasure::constant(4.0, w.clone()).unwrap());
        let region = w.sub_box(0.0, 0.5);
        let s = Streams::new(3);
        let sampler = |rng: &mut StreamRng| sample_process(&spec, rng);
        let same = two_sample_count_tv(sampler, sampler, &region, 5_000, &s, &s).unwrap();
        assert_eq!(same.tv, 0.0);
        let indep = two_sample_count_tv(sampler, sampler, &region, 100_000, &s.derive(1), &s.derive(2)).unwrap();
        assert!(indep.tv < indep.noise_bound(), "{indep:?}");

        let p = 0.4;
        let thin_of_sup = |rng: &mut StreamRng| {
            let both = superpose(&[sample_process(&spec, rng), sample_process(&spec, rng)]).unwrap();
            thin_pattern(&both, p, rng).unwrap()
        };
        let sup_of_thin = |rng: &mut StreamRng| {
            let a = thin_pattern(&sample_process(&spec, rng), p, rng).unwrap();
            let b = thin_pattern(&sample_process(&spec, rng), p, rng).unwrap();
            superpose(&[a, b]).unwrap()
        };
        let d = two_sample_count_tv(thin_of_sup, sup_of_thin, &region, 50_000, &s.derive(3), &s.derive(4)).unwrap();
        assert!(d.tv < d.noise_bound(), "{d:?}");
        assert!(two_sample_count_tv(sampler, sampler, &region, 999, &s, &s).is_err());
    }
}
