//! Monte Carlo properties of the selectors, tests and harness.

use kmono_core::covariance::difference_covariance;
use kmono_core::harness::{knot_consistency_curve, run_study, statistic_draws};
use kmono_core::knots::{select, select_method1};
use kmono_core::limit::{ecdf, sample_min_statistic};
use kmono_core::pmf::ARGMIN_TOL;
use kmono_core::{
    DistributionSpec, EmpiricalPmf, IndexSet, Method, Scenario, SelectionOverrides, StudyConfig, TestConfig,
    TestMethod,
};

const STAIRCASE: &str = "pmf:0:5,5,5,4,4,3,2,1,1,1";

fn spec(s: &str) -> DistributionSpec {
    s.parse().unwrap()
}

fn rate(dist: &str, n: u64, k: usize, test: TestMethod, reps: usize, seed: u64) -> (f64, f64) {
    let cfg = StudyConfig {
        replications: reps,
        draws: 500,
        seed,
        ..StudyConfig::new(vec![Scenario { dist: spec(dist), n, k, test }])
    };
    let row = &run_study(&cfg).unwrap()[0];
    assert_eq!(row.failures, 0);
    (row.percentage, row.std_error)
}

#[test]
fn method_three_recovers_staircase_set() {
    let p = spec(STAIRCASE);
    let truth = p.pmf().unwrap().argmin_set(1, ARGMIN_TOL).unwrap().values();
    assert_eq!(truth, vec![0, 1, 3, 7, 8]);
    let mut hits = 0;
    for r in 0..500 {
        let p_hat = EmpiricalPmf::from_sample(&p.sample_iid(10_000, r).unwrap());
        let out = select(&p_hat, 1, Method::M3, &SelectionOverrides::default()).unwrap();
        hits += (out.selected.values() == truth) as usize;
    }
    assert!(hits >= 450, "{hits}/500");
}

#[test]
fn staircase_level() {
    let (pct, se) = rate(STAIRCASE, 10_000, 1, TestMethod::M3, 400, 11);
    assert!((pct - 5.0).abs() <= 3.0 * se.max(1.1), "{pct} ± {se}");
}

#[test]
fn non_monotone_poisson_is_rejected() {
    for test in [TestMethod::M1, TestMethod::M2, TestMethod::M3, TestMethod::Proj] {
        let (pct, _) = rate("tpois:0:4:2", 1000, 1, test, 200, 12);
        assert!(pct >= 99.0, "{test}: {pct}");
    }
}

#[test]
fn strictly_convex_scenario_collapses_under_monotone_null() {
    let convex = format!("tpois:0:4:{}", 2.0 - 2f64.sqrt());
    for test in TestMethod::ALL {
        let (pct, _) = rate(&convex, 1000, 1, test, 200, 13);
        assert_eq!(pct, 0.0, "{test}");
    }
}

#[test]
fn level_shrinks_with_n_when_rho_is_positive() {
    // Strictly decreasing triangular mixture: ρ₁ > 0.
    let (small, se_small) = rate("tmix:0.2x5", 100, 1, TestMethod::M3, 300, 14);
    let (large, _) = rate("tmix:0.2x5", 1000, 1, TestMethod::M3, 300, 14);
    assert!(large <= small + 3.0 * se_small.max(0.5), "{small} then {large}");
    assert!(large <= 1.0);
}

#[test]
fn method_one_is_conservative_under_the_null() {
    for (dist, k) in [("tpois:0:4:1", 1), ("tpois:0:4:0.5857864376269049", 2)] {
        let (m1, se1) = rate(dist, 1000, k, TestMethod::M1, 300, 15);
        let (m3, se3) = rate(dist, 1000, k, TestMethod::M3, 300, 15);
        assert!(m1 <= m3 + 3.0 * se1.max(se3), "{dist}: {m1} vs {m3}");
    }
}

#[test]
fn recovery_of_single_flat_pair() {
    // One flat step followed by strictly decreasing mass: I = {0}.
    let curve = knot_consistency_curve(&spec("pmf:0:4,4,3,2,1"), 1, &[500, 5000, 20_000], 200, 16).unwrap();
    assert!(curve[2].frequency >= 0.95, "{curve:?}");
    for w in curve.windows(2) {
        assert!(w[1].frequency >= w[0].frequency - 3.0 * w[0].std_error.max(w[1].std_error));
    }
}

#[test]
fn min_over_subset_dominates_min_over_superset() {
    let p = spec("pmf:0:3,3,3,2,1").pmf().unwrap();
    let sigma = difference_covariance(&p, 1).unwrap();
    let small = sample_min_statistic(&sigma, &IndexSet::from_offsets(0, [0]), 4000, 1).unwrap();
    let big = sample_min_statistic(&sigma, &IndexSet::from_offsets(0, [0, 1, 2]), 4000, 2).unwrap();
    let (s, b) = (small.sorted(), big.sorted());
    for i in 0..=40 {
        let x = -4.0 + 0.2 * i as f64;
        let (fs, fb) = (ecdf(&s, x), ecdf(&b, x));
        let se = (fs * (1.0 - fs) / 4000.0 + fb * (1.0 - fb) / 4000.0).sqrt();
        assert!(fb >= fs - 3.0 * se, "x={x}");
    }
}

#[test]
fn method_one_superset_on_real_samples() {
    let p = spec("tpois:0:9:1");
    for seed in 0..50 {
        let p_hat = EmpiricalPmf::from_sample(&p.sample_iid(2000, seed).unwrap());
        if p_hat.len() < 3 {
            continue;
        }
        let all = select_method1(&p_hat, 1).unwrap().selected;
        for m in [Method::M2, Method::M3] {
            let out = select(&p_hat, 1, m, &SelectionOverrides::default()).unwrap();
            assert!(out.selected.is_subset(&all));
        }
    }
}

#[test]
fn feasible_samples_never_reject_projection_tests() {
    let mix = spec("tmix:0.2x5");
    for seed in 0..100 {
        let data = mix.sample_iid(200, seed).unwrap();
        let p_hat = EmpiricalPmf::from_sample(&data);
        for k in [1, 2] {
            if p_hat.len() <= k || p_hat.rho(k).unwrap() < 0.0 {
                continue;
            }
            let r = kmono_core::run_test(&data, &TestConfig { seed, ..TestConfig::new(k, TestMethod::Proj) }).unwrap();
            assert_eq!(r.statistic, 0.0);
            assert!(!r.reject);
        }
    }
}

#[test]
fn statistic_draws_are_reproducible() {
    let cfg = TestConfig::new(2, TestMethod::Proj);
    let a = statistic_draws(&spec("tpois:0:4:1"), 300, &cfg, 50, 3).unwrap();
    let b = statistic_draws(&spec("tpois:0:4:1"), 300, &cfg, 50, 3).unwrap();
    assert_eq!(a, b);
}
