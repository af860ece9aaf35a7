//! Property tests against independent reference computations.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shufflesgd::data::split_indices;
use shufflesgd::optimizer::{run_sgd_baseline, AuditCheck, DEFAULT_AUDIT_TOLERANCE};
use shufflesgd::problems::{component_variance, estimate_constants};
use shufflesgd::schedules::validate;
use shufflesgd::shuffling::{population_variance, verify_rr_identity};
use shufflesgd::*;

fn random_dataset(n: usize, d: usize, density: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| if rng.gen_bool(density) { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect())
        .collect();
    let labels = (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
    Dataset::from_dense(&rows, labels).unwrap()
}

fn central_difference<P: FiniteSumProblem<f64>>(p: &P, w: &[f64], i: usize) -> Vec<f64> {
    let h = 1e-5;
    (0..w.len())
        .map(|j| {
            let mut a = w.to_vec();
            let mut b = w.to_vec();
            a[j] += h;
            b[j] -= h;
            (p.comp_value(&a, i).unwrap() - p.comp_value(&b, i).unwrap()) / (2.0 * h)
        })
        .collect()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(1e-3)
}

/// Reference logistic component: `log(1 + exp(-y x.w)) + lambda/2 sum w^2/(1+w^2)`.
fn logistic_reference(ds: &Dataset, w: &[f64], i: usize, lambda: f64) -> f64 {
    let x = ds.row(i).to_dense(ds.d());
    let m = -ds.label(i) * x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
    let loss = if m > 0.0 { m + (-m).exp().ln_1p() } else { m.exp().ln_1p() };
    loss + 0.5 * lambda * w.iter().map(|v| v * v / (1.0 + v * v)).sum::<f64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn logistic_gradient_matches_finite_differences(seed in 0u64..1000, i in 0usize..30, scale in 0.1f64..3.0) {
        let ds = random_dataset(30, 8, 0.6, seed);
        let p = Logistic::new(&ds, 0.01).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let w: Vec<f64> = (0..8).map(|_| rng.gen_range(-scale..scale)).collect();
        let g = p.comp_grad(&w, i).unwrap();
        prop_assert!(rel_err(&g, &central_difference(&p, &w, i)) <= 1e-6);
        prop_assert!((p.comp_value(&w, i).unwrap() - logistic_reference(&ds, &w, i, 0.01)).abs() <= 1e-12);
    }

    #[test]
    fn quadratic_gradient_matches_finite_differences(seed in 0u64..1000, i in 0usize..12) {
        let q = Quadratic::random(&RandomQuadratic { n: 12, d: 5, curvature: (-0.5, 2.0), spread: 2.0 }, seed);
        prop_assume!(q.is_ok());
        let q = q.unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 7);
        let w: Vec<f64> = (0..5).map(|_| rng.gen_range(-3.0..3.0)).collect();
        prop_assert!(rel_err(&q.comp_grad(&w, i).unwrap(), &central_difference(&q, &w, i)) <= 1e-6);
    }

    #[test]
    fn full_objective_is_component_average(seed in 0u64..1000) {
        let ds = random_dataset(17, 6, 0.5, seed);
        let p = Logistic::new(&ds, 0.01).unwrap();
        let w: Vec<f64> = (0..6).map(|j| (j as f64 - 2.5) * 0.3).collect();
        let f: f64 = (0..17).map(|i| p.comp_value(&w, i).unwrap()).sum::<f64>() / 17.0;
        prop_assert!((p.full_value(&w) - f).abs() <= 1e-14);
        let g = p.full_grad(&w);
        for (j, &g_j) in g.iter().enumerate() {
            let gj: f64 = (0..17).map(|i| p.comp_grad(&w, i).unwrap()[j]).sum::<f64>() / 17.0;
            prop_assert!((g_j - gj).abs() <= 1e-14);
        }
    }

    #[test]
    fn quadratic_sandwich(seed in 0u64..1000) {
        let q = Quadratic::random(&RandomQuadratic { n: 20, d: 4, curvature: (0.5, 3.0), spread: 1.0 }, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let ws = q.minimizer().unwrap();
        let d2: f64 = w.iter().zip(ws).map(|(a, b)| (a - b).powi(2)).sum();
        let gap = q.full_value(&w) - q.optimal_value().unwrap();
        let (mu, l) = (q.strong_convexity().unwrap(), q.smoothness());
        prop_assert!(gap >= 0.5 * mu * d2 - 1e-12);
        prop_assert!(gap <= 0.5 * l * d2 + 1e-12);
        prop_assert!((gap - q.exact_gap(&w)).abs() <= 1e-10 * gap.max(1.0));
    }

    #[test]
    fn logistic_curvature_within_smoothness(seed in 0u64..500, i in 0usize..20) {
        let ds = random_dataset(20, 5, 0.8, seed);
        let p = Logistic::new(&ds, 0.01).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let mut v: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= nv);
        let h = 1e-5;
        let at = |s: f64| {
            let ws: Vec<f64> = w.iter().zip(&v).map(|(a, b)| a + s * b).collect();
            p.comp_grad(&ws, i).unwrap().iter().zip(&v).map(|(g, b)| g * b).sum::<f64>()
        };
        let curvature = (at(h) - at(-h)) / (2.0 * h);
        prop_assert!(curvature.abs() <= p.smoothness() * (1.0 + 1e-6));
    }

    #[test]
    fn libsvm_round_trip(seed in 0u64..1000) {
        let ds = random_dataset(15, 9, 0.4, seed);
        let text = to_libsvm(&ds);
        let back = parse_libsvm(&text).unwrap().with_dim(9).unwrap();
        prop_assert_eq!(back, ds);
    }

    #[test]
    fn minmax_scaling_lands_in_unit_interval(seed in 0u64..1000) {
        let ds = random_dataset(25, 6, 0.7, seed);
        let (scaled, params) = minmax_scale(&ds, None).unwrap();
        for i in 0..scaled.n() {
            for (_, x) in scaled.row(i).iter() {
                prop_assert!((0.0..=1.0).contains(&x));
            }
        }
        let (again, _) = minmax_scale(&ds, Some(&params)).unwrap();
        prop_assert_eq!(again, scaled);
    }

    #[test]
    fn split_is_a_partition(n in 2usize..300, frac in 0.05f64..0.95, seed in 0u64..100) {
        let (train, test) = split_indices(n, frac, seed);
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert_eq!(test.len(), (frac * n as f64).floor() as usize);
    }

    #[test]
    fn strategies_emit_bijections(seed in 0u64..1000, n in 1usize..40, epoch in 1usize..50) {
        for kind in [ShuffleKind::RandomReshuffle, ShuffleKind::ShuffleOnce, ShuffleKind::IncrementalGradient] {
            let mut s = ShuffleStrategy::new(kind, seed).unwrap();
            let p = s.next_permutation(epoch, n).unwrap();
            let mut sorted = p.as_slice().to_vec();
            sorted.sort_unstable();
            prop_assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        }
    }
}

#[test]
fn reshuffling_is_uniform_over_orders() {
    let mut s = ShuffleStrategy::new(ShuffleKind::RandomReshuffle, 11).unwrap();
    let mut counts = std::collections::HashMap::new();
    let epochs = 60_000;
    for t in 1..=epochs {
        *counts.entry(s.next_permutation(t, 3).unwrap().as_slice().to_vec()).or_insert(0usize) += 1;
    }
    assert_eq!(counts.len(), 6);
    let chi2: f64 = counts.values().map(|&c| (c as f64 - epochs as f64 / 6.0).powi(2) / (epochs as f64 / 6.0)).sum();
    for &c in counts.values() {
        assert!((c as f64 / epochs as f64 - 1.0 / 6.0).abs() < 0.01);
    }
    // 99.9% quantile of chi-square with 5 degrees of freedom.
    assert!(chi2 < 20.52, "chi2 = {chi2}");
}

#[test]
fn shuffle_once_reuses_its_order() {
    let mut s = ShuffleStrategy::new(ShuffleKind::ShuffleOnce, 5).unwrap();
    let first = s.next_permutation(1, 30).unwrap();
    for t in 2..20 {
        assert_eq!(s.next_permutation(t, 30).unwrap(), first);
    }
}

/// Brute-force subset variance by bitmask enumeration.
fn subset_variance_oracle(values: &[Vec<f64>], k: usize) -> f64 {
    let n = values.len();
    let d = values[0].len();
    let mean: Vec<f64> = (0..d).map(|j| values.iter().map(|v| v[j]).sum::<f64>() / n as f64).collect();
    let (mut total, mut count) = (0.0, 0usize);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let avg: Vec<f64> = (0..d)
            .map(|j| (0..n).filter(|i| mask >> i & 1 == 1).map(|i| values[i][j]).sum::<f64>() / k as f64)
            .collect();
        total += avg.iter().zip(&mean).map(|(a, m)| (a - m).powi(2)).sum::<f64>();
        count += 1;
    }
    total / count as f64
}

#[test]
fn without_replacement_identity_small_n() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        for n in 2..=6 {
            let values: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
            let s2 = population_variance(&values).unwrap();
            for k in 1..=n {
                let r = verify_rr_identity(&values, k).unwrap();
                assert!(r.exhaustive);
                assert!(r.abs_gap <= 1e-12, "n={n} k={k} gap={}", r.abs_gap);
                let want = (n - k) as f64 / (k as f64 * (n as f64 - 1.0)) * s2;
                assert!((subset_variance_oracle(&values, k) - want).abs() <= 1e-12);
            }
        }
    }
}

fn quad(seed: u64) -> Quadratic {
    Quadratic::random(&RandomQuadratic { n: 15, d: 4, curvature: (0.5, 2.0), spread: 1.0 }, seed).unwrap()
}

#[test]
fn runs_are_deterministic_and_ig_ignores_the_seed() {
    let q = quad(1);
    let cfg = Config::new(30, Schedule::constant(0.1).unwrap(), ShuffleKind::RandomReshuffle).unwrap();
    let a = run(&q, &cfg, 9).unwrap();
    let b = run(&q, &cfg, 9).unwrap();
    assert_eq!(a.traces, b.traces);
    assert_eq!(a.final_w, b.final_w);
    let c = run(&q, &cfg, 10).unwrap();
    assert_ne!(a.final_w, c.final_w);
    let ig = Config::new(30, Schedule::constant(0.1).unwrap(), ShuffleKind::IncrementalGradient).unwrap();
    assert_eq!(run(&q, &ig, 1).unwrap().traces, run(&q, &ig, 2).unwrap().traces);
}

#[test]
fn shared_minimizer_is_a_fixed_point() {
    let centers = vec![vec![0.5, -1.0]; 6];
    let diags: Vec<Vec<f64>> = (0..6).map(|i| vec![1.0 + i as f64 * 0.1, 0.7]).collect();
    let q = Quadratic::new(centers, diags).unwrap();
    let cfg = Config::new(10, Schedule::constant(0.3).unwrap(), ShuffleKind::RandomReshuffle)
        .unwrap()
        .with_init(InitialPoint::Given(vec![0.5, -1.0]));
    let r = run(&q, &cfg, 4).unwrap();
    assert_eq!(r.final_w, vec![0.5, -1.0]);
    assert!(r.traces.iter().all(|t| t.inner_dev_sum == 0.0));
}

#[test]
fn audits_hold_for_small_rates_and_skip_for_large() {
    let q = quad(2);
    let probes: Vec<Vec<f64>> = (0..20).map(|k| vec![k as f64 * 0.2 - 2.0; 4]).collect();
    let consts = estimate_constants(&q, &probes).unwrap();
    let l = consts.l_hat;
    let init = InitialPoint::Given(vec![3.0; 4]);
    for strategy in [ShuffleKind::RandomReshuffle, ShuffleKind::IncrementalGradient] {
        let cfg = Config::new(40, Schedule::constant(1.0 / (4.0 * l)).unwrap(), strategy.clone())
            .unwrap()
            .with_init(init.clone())
            .with_audit(consts.clone());
        let r = run(&q, &cfg, 3).unwrap();
        assert!(r.audit.all_hold(DEFAULT_AUDIT_TOLERANCE), "{:?}", r.audit.violations(DEFAULT_AUDIT_TOLERANCE));
        assert_eq!(r.audit.applicable(AuditCheck::FDescent).count(), 40);
        assert_eq!(r.audit.applicable(AuditCheck::DeviationNearOptimum).count(), 40);
    }
    let cfg = Config::new(5, Schedule::constant(2.0 / l).unwrap(), ShuffleKind::RandomReshuffle)
        .unwrap()
        .with_init(init)
        .with_audit(consts);
    let r = run(&q, &cfg, 3).unwrap();
    assert!(r.audit.entries.iter().all(|e| !e.applicable));
}

#[test]
fn audit_variance_gate_matches_probe() {
    let q = quad(4);
    let probes = vec![vec![0.0; 4], vec![1.0; 4]];
    let consts = estimate_constants(&q, &probes).unwrap();
    for w in &probes {
        let g2: f64 = q.full_grad(w).iter().map(|x| x * x).sum();
        assert!(consts.variance_bound_holds(component_variance(&q, w), g2, 1e-12));
    }
}

#[test]
fn sgd_baseline_decays_on_quadratic() {
    let q = quad(5);
    let l = q.smoothness();
    let s = Schedule::poly(1.0 / l, 1.0, 0.5).unwrap();
    let t = run_sgd_baseline(&q, &s, 20_000, 1, &[2.0; 4], 100).unwrap();
    let series: Vec<(f64, f64)> = t.records.iter().map(|r| (r.t as f64, r.grad_norm_sq)).collect();
    let fit = analysis::fit_loglog_slope(&series, Some((1_000.0, 20_000.0))).unwrap();
    assert!(fit.slope <= -0.35, "slope {}", fit.slope);
}

#[test]
fn decaying_schedules_are_monotone_with_known_partial_sums() {
    let s = Schedule::poly(2.0, 3.0, 1.0).unwrap();
    let mut prev = f64::INFINITY;
    let mut sum = 0.0;
    for t in 1..=100 {
        let e = s.eta_at(t);
        assert!(e <= prev);
        prev = e;
        sum += e;
    }
    // 2 * (H_103 - H_3)
    let h: f64 = (4..=103).map(|k| 1.0 / k as f64).sum();
    assert!((sum - 2.0 * h).abs() < 1e-12);
    let consts = ProblemConstants { mu: Some(1.0), kappa: Some(2.0), ..ProblemConstants::with_smoothness(2.0) };
    let thm2 = schedules::preset(Preset::StronglyConvexDiminishing, &consts, 100, 10, &PresetArgs::default()).unwrap();
    assert_eq!(thm2.poly_params(), Some((6.0, 47.0, 1.0)));
    assert!(validate(&thm2, &consts, 100, 10).passes());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quadratic_variance_constants_hold_everywhere(seed in 0u64..1000, scale in 0.01f64..100.0) {
        let q = Quadratic::random(&RandomQuadratic { n: 9, d: 3, curvature: (-0.3, 2.0), spread: 1.5 }, seed);
        prop_assume!(q.is_ok());
        let q = q.unwrap();
        let (theta, s2) = q.variance_constants();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let w: Vec<f64> = (0..3).map(|_| rng.gen_range(-scale..scale)).collect();
            let g2: f64 = q.full_grad(&w).iter().map(|x| x * x).sum();
            let var = component_variance(&q, &w);
            prop_assert!(var <= theta * g2 + s2 + 1e-9 * (1.0 + var));
        }
    }

    #[test]
    fn logistic_variance_constants_hold_everywhere(seed in 0u64..1000, scale in 0.01f64..50.0) {
        let ds = random_dataset(25, 6, 0.6, seed);
        let p = Logistic::new(&ds, 0.01).unwrap();
        let (theta, s2) = p.variance_constants();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> = (0..6).map(|_| rng.gen_range(-scale..scale)).collect();
        let g2: f64 = p.full_grad(&w).iter().map(|x| x * x).sum();
        prop_assert!(component_variance(&p, &w) <= theta * g2 + s2 + 1e-12);
    }
}
