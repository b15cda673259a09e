use qstat::oracle::BooleanOracle;
use qstat::qcount::{
    count, draw_estimate, error_budget, estimate_from_outcome, grid_size, phase_distribution,
    sample_outcome, CountParams, CounterModel,
};
use qstat::rng::trial_rng;

#[test]
fn budget_matches_pinned_values() {
    assert_eq!(error_budget(100, 50, 10), 5.0);
    assert_eq!(error_budget(16, 0, 4), 0.25);
    assert!((error_budget(100, 25, 20) - 2.196_313_5).abs() < 1e-6);
    // symmetry: t and n - t give the same budget
    for p in [1, 3, 10] {
        for t in 0..=30u64 {
            let a = error_budget(30, t, p);
            let b = error_budget(30, 30 - t, p);
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn grid_is_smallest_pow2_above_two_pi_p() {
    assert_eq!(grid_size(1), 8);
    assert_eq!(grid_size(10), 64);
    assert_eq!(grid_size(20), 128);
    assert_eq!(grid_size(100), 1024);
}

#[test]
fn distribution_normalizes_to_one() {
    for &(n, t, m) in &[
        (100u64, 36u64, 64u64),
        (100, 0, 64),
        (100, 100, 64),
        (7, 3, 16),
        (2, 1, 16),
        (1024, 517, 512),
    ] {
        let p = phase_distribution(n, t, m).unwrap();
        let sum: f64 = p.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12, "n={n} t={t} m={m}: sum={sum}");
        assert!(p.iter().all(|&q| q >= 0.0));
    }
}

#[test]
fn extreme_counts_are_point_masses() {
    // t = 0: phase 0, all mass on outcome 0
    let p = phase_distribution(50, 0, 64).unwrap();
    assert!((p[0] - 1.0).abs() < 1e-12);
    // t = n: phase 1/2, all mass on outcome M/2
    let p = phase_distribution(50, 50, 64).unwrap();
    assert!((p[32] - 1.0).abs() < 1e-12);
    // n = 2, t = 1: phase 1/4 lands on the grid when 4 | M
    let p = phase_distribution(2, 1, 16).unwrap();
    assert!((p[4] - 0.5).abs() < 1e-12);
    assert!((p[12] - 0.5).abs() < 1e-12);
}

#[test]
fn complement_reflects_distribution() {
    // swapping t for n - t reflects the law through y -> M/2 - y (mod M)
    let m = 64u64;
    for &(n, t) in &[(100u64, 36u64), (9, 2), (17, 17), (101, 50)] {
        let a = phase_distribution(n, t, m).unwrap();
        let b = phase_distribution(n, n - t, m).unwrap();
        for y in 0..m {
            let yr = ((m / 2 + m - y) % m) as usize;
            assert!(
                (a[y as usize] - b[yr]).abs() < 1e-12,
                "n={n} t={t} y={y}: {} vs {}",
                a[y as usize],
                b[yr]
            );
        }
        // and the estimate reflects to n - estimate
        for y in 0..m {
            let yr = (m / 2 + m - y) % m;
            let e = estimate_from_outcome(n, y, m) + estimate_from_outcome(n, yr, m);
            assert!((e - n as f64).abs() < 1e-9);
        }
    }
}

#[test]
fn sampler_matches_law_in_total_variation() {
    let mut rng = trial_rng(11, 0);
    let draws = 200_000usize;
    for &(n, t, m) in &[
        (100u64, 36u64, 64u64),
        (100, 1, 64),
        (100, 99, 64),
        (2, 1, 16),
        (50, 0, 64),
        (50, 50, 64),
        (1000, 700, 256),
    ] {
        let law = phase_distribution(n, t, m).unwrap();
        let mut hist = vec![0u64; m as usize];
        for _ in 0..draws {
            hist[sample_outcome(n, t, m, &mut rng) as usize] += 1;
        }
        let tv: f64 = law
            .iter()
            .zip(&hist)
            .map(|(&p, &h)| (p - h as f64 / draws as f64).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.02, "n={n} t={t} m={m}: tv={tv}");
    }
}

#[test]
fn phase_model_meets_success_contract() {
    // |t_hat - t| within budget should happen with probability >= 2/3;
    // at (100, 50, P=10) the exact law gives ~0.82.
    let mut rng = trial_rng(12, 0);
    let (n, t, p) = (100u64, 50u64, 10u64);
    let budget = error_budget(n, t, p);
    let trials = 10_000;
    let mut ok = 0;
    for _ in 0..trials {
        let est = draw_estimate(CounterModel::Phase, n, t, p, &mut rng);
        if (est - t as f64).abs() <= budget {
            ok += 1;
        }
    }
    let rate = ok as f64 / trials as f64;
    assert!(rate >= 2.0 / 3.0, "success rate {rate}");
}

#[test]
fn contract_model_hits_two_thirds_and_far_endpoint() {
    let mut rng = trial_rng(13, 0);
    let (n, t, p) = (100u64, 30u64, 5u64);
    let budget = error_budget(n, t, p);
    let trials = 30_000;
    let mut ok = 0;
    for _ in 0..trials {
        let est = draw_estimate(CounterModel::Contract, n, t, p, &mut rng);
        assert!((0.0..=n as f64).contains(&est));
        if (est - t as f64).abs() <= budget {
            ok += 1;
        } else {
            // failures are pinned to the endpoint farther from t
            assert_eq!(est, n as f64);
        }
    }
    let rate = ok as f64 / trials as f64;
    // binomial 3 sigma around 2/3 at 30k trials is ~0.008
    assert!((rate - 2.0 / 3.0).abs() < 0.01, "rate {rate}");
}

#[test]
fn count_charges_exactly_p_queries() {
    let y = BooleanOracle::with_count(64, 20).unwrap();
    let mut rng = trial_rng(14, 0);
    let params = CountParams::new(9).unwrap();
    let est = count(&y, params, &mut rng);
    assert_eq!(y.ledger().total(), 9);
    assert_eq!(y.ledger().count("count"), 9);
    assert!((0.0..=64.0).contains(&est.t));
    let est2 = count(&y, params, &mut rng);
    assert_eq!(y.ledger().total(), 18);
    assert!(est2.error_budget == est.error_budget);
}
