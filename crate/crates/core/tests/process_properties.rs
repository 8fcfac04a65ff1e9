use thinlaw_core::catalog::{light_clusters, process_catalog};
use thinlaw_core::convergence::{
    multinomial_tv_stderr, region_points, standard_regions, thin_processes_curve, tv_distance,
    EmpiricalPmf,
};
use thinlaw_core::estimate::combined_stderr;
use thinlaw_core::point_process::{
    count_in, intensity_of_spec, measure_of, sample_process, superpose, thin_pattern,
    thinned_superposition_sample,
};
use thinlaw_core::stream::{par_collect, StreamRng};
use thinlaw_core::{Estimate, PointPattern, ProcessSpec, Region, Streams, Window};

fn unit_square() -> Window {
    Window::unit(2).unwrap()
}

fn five_regions() -> Vec<Region> {
    ["[0,1]x[0,1]", "[0,0.5]x[0,1]", "[0.25,0.75]x[0.25,0.75]", "[0.1,0.3]x[0.5,0.95]", "[0.6,1]x[0,0.2]"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect()
}

fn all_specs() -> Vec<(String, ProcessSpec)> {
    let mut specs: Vec<_> = process_catalog().into_iter().map(|s| (s.name.to_string(), s.spec)).collect();
    specs.push(("light_clusters".into(), light_clusters()));
    specs
}

/// TV between two count samples with its combined multinomial stderr.
fn count_tv(a: &[u64], b: &[u64]) -> (f64, f64) {
    let (ea, eb) = (EmpiricalPmf::from_samples(a).unwrap(), EmpiricalPmf::from_samples(b).unwrap());
    let tv = tv_distance(&ea.to_pmf(), &eb.to_pmf()).unwrap();
    (tv, combined_stderr(multinomial_tv_stderr(&ea), multinomial_tv_stderr(&eb)))
}

fn counts<F>(streams: &Streams, n: usize, region: &Region, draw: F) -> Vec<u64>
where
    F: Fn(&mut StreamRng) -> PointPattern + Sync,
{
    par_collect(streams, n, |rng| count_in(&draw(rng), region))
}

#[test]
fn mean_count_matches_intensity_measure() {
    let streams = Streams::new(101);
    for (name, spec) in all_specs() {
        let mu = intensity_of_spec(&spec);
        let samples = par_collect(&streams.derive_str(&name), 40_000, |rng| sample_process(&spec, rng));
        for region in five_regions() {
            let c: Vec<f64> = samples.iter().map(|p| count_in(p, &region) as f64).collect();
            let est = Estimate::from_samples(&c).unwrap();
            let target = measure_of(&mu, &region).unwrap();
            assert!(est.within(target, 3.0), "{name} {region}: {est:?} vs {target}");
        }
    }
}

#[test]
fn thinning_distributes_over_superposition() {
    let specs = process_catalog();
    let region: Region = "[0,0.5]x[0,1]".parse().unwrap();
    let streams = Streams::new(102);
    let p = 0.35;
    for pair in [(0, 4), (2, 3), (1, 1)] {
        let (s1, s2) = (&specs[pair.0].spec, &specs[pair.1].spec);
        let lhs = counts(&streams.derive(1), 100_000, &region, |rng| {
            let both = superpose(&[sample_process(s1, rng), sample_process(s2, rng)]).unwrap();
            thin_pattern(&both, p, rng).unwrap()
        });
        let rhs = counts(&streams.derive(2), 100_000, &region, |rng| {
            let a = thin_pattern(&sample_process(s1, rng), p, rng).unwrap();
            let b = thin_pattern(&sample_process(s2, rng), p, rng).unwrap();
            superpose(&[a, b]).unwrap()
        });
        let (tv, se) = count_tv(&lhs, &rhs);
        assert!(tv < 5.0 * se, "{pair:?}: tv {tv} se {se}");
    }
}

#[test]
fn thinning_composes() {
    let region: Region = "[0.25,0.75]x[0.25,0.75]".parse().unwrap();
    let streams = Streams::new(103);
    for named in process_catalog() {
        let spec = &named.spec;
        let twice = counts(&streams.derive(1), 100_000, &region, |rng| {
            let once = thin_pattern(&sample_process(spec, rng), 0.6, rng).unwrap();
            thin_pattern(&once, 0.5, rng).unwrap()
        });
        let direct = counts(&streams.derive(2), 100_000, &region, |rng| {
            thin_pattern(&sample_process(spec, rng), 0.3, rng).unwrap()
        });
        let (tv, se) = count_tv(&twice, &direct);
        assert!(tv < 5.0 * se, "{}: tv {tv} se {se}", named.name);
    }
}

#[test]
fn poisson_is_a_fixed_point() {
    let region: Region = "[0,0.5]x[0,1]".parse().unwrap();
    let streams = Streams::new(104);
    for named in process_catalog().into_iter().filter(|s| matches!(s.spec, ProcessSpec::Poisson(_))) {
        let spec = &named.spec;
        let raw = counts(&streams.derive(0), 100_000, &region, |rng| sample_process(spec, rng));
        for n in [1u64, 2, 7] {
            let thinned = counts(&streams.derive(n), 100_000, &region, |rng| {
                thinned_superposition_sample(spec, n, rng).unwrap()
            });
            let (tv, se) = count_tv(&raw, &thinned);
            assert!(tv < 5.0 * se, "{} n={n}: tv {tv} se {se}", named.name);
        }
    }
}

#[test]
fn counts_add_over_a_partition() {
    let streams = Streams::new(105);
    let cells: Vec<Region> = (0..4)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| {
            Region::new(vec![i as f64 / 4.0, j as f64 / 3.0], vec![(i + 1) as f64 / 4.0, (j + 1) as f64 / 3.0])
                .unwrap()
        })
        .collect();
    let window = unit_square();
    for (name, spec) in all_specs() {
        let mut rng = streams.derive_str(&name).rng(0);
        for _ in 0..200 {
            let p = sample_process(&spec, &mut rng);
            let total: u64 = cells.iter().map(|c| count_in(&p, c)).sum();
            assert_eq!(total, count_in(&p, window.as_region()));
            assert_eq!(total as usize, p.len(), "{name}: every point lies in the window");
        }
    }
}

#[test]
fn first_curve_point_is_the_raw_process() {
    let window = unit_square();
    let regions = standard_regions(&window);
    let streams = Streams::new(106);
    for (name, spec) in all_specs() {
        let (points, _) = thin_processes_curve(&spec, &[1], &[], &regions, 5_000, &streams).unwrap();
        let raw = thinlaw_core::convergence::thinned_superposition_samples(&spec, 1, 5_000, &streams).unwrap();
        let mu = intensity_of_spec(&spec);
        for r in &regions {
            let [tv, void] = region_points(1, &r.name, &r.region, measure_of(&mu, &r.region).unwrap(), &raw).unwrap();
            let got: Vec<_> = points.iter().filter(|p| p.metric == tv.metric || p.metric == void.metric).collect();
            assert_eq!(got, [&tv, &void], "{name}");
        }
        // thinning with p = 1 leaves the sampled patterns untouched
        let cell = streams.derive(1).derive_str("thinned_superposition");
        let direct = par_collect(&cell, 5_000, |rng| sample_process(&spec, rng));
        assert_eq!(direct, raw, "{name}");
    }
}
