use proptest::prelude::*;
use thinlaw_core::catalog::distribution_catalog;
use thinlaw_core::convergence::{multinomial_tv_stderr, tv_distance, EmpiricalPmf};
use thinlaw_core::distributions::{
    apgf_empirical, apgf_exact, factorial_moment, laplace_exact, pmf_thinned_sum_exact, thin_count,
};
use thinlaw_core::estimate::combined_stderr;
use thinlaw_core::stream::par_collect;
use thinlaw_core::{IntegerDistribution, RealLaw, Streams};

/// Pmf on `0..len` by summing the series term by term, independent of the
/// library's closed forms.
fn brute_pmf(dist: &IntegerDistribution, len: usize) -> Vec<f64> {
    match dist {
        IntegerDistribution::Poisson(l) => {
            let mut out = vec![(-l).exp()];
            for k in 1..len {
                let prev = out[k - 1];
                out.push(prev * l / k as f64);
            }
            out
        }
        other => {
            let mut dense = other.dense_pmf().unwrap();
            dense.resize(len, 0.0);
            dense
        }
    }
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn series_apgf(pmf: &[f64], u: f64) -> f64 {
    pmf.iter().enumerate().map(|(k, p)| p * (1.0 - u).powi(k as i32)).sum()
}

#[test]
fn apgf_of_independent_sum_is_product() {
    let cat = distribution_catalog();
    for a in &cat {
        for b in &cat {
            let sum_law = convolve(&brute_pmf(a, 60), &brute_pmf(b, 60));
            for u in [0.0, 0.3, 1.0, 1.7, 2.0] {
                let product = apgf_exact(a, u).unwrap() * apgf_exact(b, u).unwrap();
                let series = series_apgf(&sum_law, u);
                assert!((product - series).abs() < 1e-10, "{a} + {b} at u={u}: {product} vs {series}");
            }
        }
    }
    // same-family sums stay in closed form
    for u in [0.2, 1.0, 1.9] {
        let pp = apgf_exact(&IntegerDistribution::Poisson(1.5), u).unwrap()
            * apgf_exact(&IntegerDistribution::Poisson(0.5), u).unwrap();
        assert!((pp - apgf_exact(&IntegerDistribution::Poisson(2.0), u).unwrap()).abs() < 1e-15);
        let bb = apgf_exact(&IntegerDistribution::Binomial { m: 4, p: 0.3 }, u).unwrap()
            * apgf_exact(&IntegerDistribution::Binomial { m: 6, p: 0.3 }, u).unwrap();
        assert!((bb - apgf_exact(&IntegerDistribution::Binomial { m: 10, p: 0.3 }, u).unwrap()).abs() < 1e-14);
    }
}

#[test]
fn thinning_scales_the_apgf_argument() {
    let streams = Streams::new(301);
    for (d, dist) in distribution_catalog().iter().enumerate() {
        for (i, p) in [0.1, 0.5, 0.9].into_iter().enumerate() {
            let cell = streams.derive(d as u64).derive(i as u64);
            let draws = par_collect(&cell, 100_000, |rng| thin_count(dist.sample(rng), p, rng).unwrap());
            for u in [0.25, 0.5, 1.0, 1.5] {
                let est = apgf_empirical(&draws, u).unwrap();
                let target = apgf_exact(dist, p * u).unwrap();
                assert!(est.within(target, 3.0), "{dist} p={p} u={u}: {est:?} vs {target}");
            }
        }
    }
}

#[test]
fn apgf_second_order_bound() {
    for dist in distribution_catalog() {
        let m2 = factorial_moment(&dist, 2).unwrap();
        for i in 1..=100 {
            let u = 0.1 * i as f64 / 100.0;
            let remainder = (apgf_exact(&dist, u).unwrap() - (1.0 - dist.mean() * u)).abs();
            assert!(remainder <= m2 * u * u / 2.0 + 1e-15, "{dist} u={u}");
        }
    }
}

#[test]
fn poisson_apgf_equals_point_mass_laplace() {
    for mu in [0.0, 0.7, 2.0, 9.5] {
        for u in [0.0, 0.4, 1.0, 2.0] {
            let apgf = apgf_exact(&IntegerDistribution::Poisson(mu), u).unwrap();
            let laplace = laplace_exact(&RealLaw::PointMass(mu), u).unwrap();
            assert_eq!(apgf, laplace);
            assert_eq!(apgf, (-mu * u).exp());
        }
    }
}

#[test]
fn exact_thinned_sum_law_is_complete() {
    for dist in distribution_catalog().into_iter().filter(|d| d.support_max().is_some()) {
        for n in [1, 3, 16, 200] {
            let pmf = pmf_thinned_sum_exact(&dist, n, 12).unwrap();
            assert!((pmf.total() - 1.0).abs() < 1e-10, "{dist} n={n}: {}", pmf.total());
        }
    }
}

#[test]
fn thinning_composes_for_every_finite_law() {
    let streams = Streams::new(302);
    for (d, dist) in distribution_catalog().iter().enumerate().filter(|(_, d)| d.support_max().is_some()) {
        for (q, p) in [(0.5, 0.5), (0.9, 0.2), (0.3, 0.7)] {
            let cell = streams.derive(d as u64);
            let nested = par_collect(&cell.derive(1), 200_000, |rng| {
                let once = thin_count(dist.sample(rng), q, rng).unwrap();
                thin_count(once, p, rng).unwrap()
            });
            let direct = par_collect(&cell.derive(2), 200_000, |rng| thin_count(dist.sample(rng), p * q, rng).unwrap());
            let (a, b) = (EmpiricalPmf::from_samples(&nested).unwrap(), EmpiricalPmf::from_samples(&direct).unwrap());
            let tv = tv_distance(&a.to_pmf(), &b.to_pmf()).unwrap();
            let se = combined_stderr(multinomial_tv_stderr(&a), multinomial_tv_stderr(&b));
            assert!(tv < 5.0 * se, "{dist} q={q} p={p}: {tv} vs {se}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn finite_pmf_apgf_matches_series(ws in prop::collection::vec(0.01f64..1.0, 1..8), u in 0.0f64..=2.0) {
        let total: f64 = ws.iter().sum();
        let mut weights: Vec<(u64, f64)> = ws.iter().enumerate().map(|(k, w)| (k as u64, w / total)).collect();
        let drift = 1.0 - weights.iter().map(|(_, w)| w).sum::<f64>();
        weights[0].1 += drift;
        let dist = IntegerDistribution::finite_pmf(weights.clone()).unwrap();
        let series = series_apgf(&weights.iter().map(|(_, w)| *w).collect::<Vec<_>>(), u);
        prop_assert!((apgf_exact(&dist, u).unwrap() - series).abs() < 1e-12);
    }

    #[test]
    fn apgf_domain_is_zero_to_two(u in -5.0f64..5.0) {
        let ok = apgf_exact(&IntegerDistribution::Bernoulli(0.4), u).is_ok();
        prop_assert_eq!(ok, (0.0..=2.0).contains(&u));
    }
}
