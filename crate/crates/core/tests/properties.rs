use std::collections::BTreeMap;

use proptest::prelude::*;

use qstat::kselect::{kprime_thresholds, rank_set, sample_between, SelectConfig, SelectionParams};
use qstat::oracle::{NumberOracle, QueryLedger};
use qstat::polytools::{
    check_bernstein, check_cheb_bound, check_markov, norm, symmetrize, MultilinearPolynomial,
    Polynomial,
};
use qstat::qcount::{error_budget, next_pow2, phase_distribution};
use qstat::rng::trial_rng;

const CHECK_TOL: f64 = 1e-9;

proptest! {
    #[test]
    fn symmetrization_equals_weight_class_means(
        n in 1usize..=5,
        raw in proptest::collection::vec((0u64..32, -2.0f64..2.0), 0..8),
    ) {
        let mut terms = BTreeMap::new();
        for (mask, coeff) in raw {
            let mask = mask & ((1u64 << n) - 1);
            *terms.entry(mask).or_insert(0.0) += coeff;
        }
        let p = MultilinearPolynomial::new(n, terms).unwrap();
        let sym = symmetrize(&p);
        for w in 0..=n {
            let mut sum = 0.0;
            let mut count = 0u64;
            for mask in 0u64..(1 << n) {
                if mask.count_ones() as usize == w {
                    sum += p.eval_mask(mask);
                    count += 1;
                }
            }
            let class_mean = sum / count as f64;
            prop_assert!((sym.eval(w as f64) - class_mean).abs() < 1e-8);
        }
    }

    #[test]
    fn phase_law_is_a_distribution(
        n in 1u64..=64,
        t_frac in 0.0f64..=1.0,
        m_seed in 4u64..=256,
    ) {
        let t = ((n as f64) * t_frac).round() as u64;
        let m = next_pow2(m_seed);
        let law = phase_distribution(n, t, m).unwrap();
        prop_assert_eq!(law.len(), m as usize);
        prop_assert!(law.iter().all(|&p| p >= -1e-15));
        let total: f64 = law.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9, "law sums to {}", total);
    }

    #[test]
    fn budget_is_symmetric_in_the_complement(
        n in 1u64..=10_000,
        t_frac in 0.0f64..=1.0,
        p in 1u64..=512,
    ) {
        let t = ((n as f64) * t_frac).round() as u64;
        prop_assert_eq!(error_budget(n, t, p), error_budget(n, n - t, p));
    }

    #[test]
    fn ledger_total_is_the_sum_over_labels(
        charges in proptest::collection::vec((0usize..3, 1u64..100), 0..40),
    ) {
        const LABELS: [&str; 3] = ["sample", "kprime", "phase1"];
        let ledger = QueryLedger::new();
        let mut expect: BTreeMap<&str, u64> = BTreeMap::new();
        for (which, k) in charges {
            ledger.charge(LABELS[which], k);
            *expect.entry(LABELS[which]).or_insert(0) += k;
        }
        let snapshot = ledger.snapshot();
        prop_assert_eq!(ledger.total(), snapshot.values().sum::<u64>());
        for (label, k) in expect {
            prop_assert_eq!(ledger.count(label), k);
        }
    }

    #[test]
    fn kprime_thresholds_stay_in_range(
        n in 1u64..=2000,
        k_frac in 0.0f64..=1.0,
        delta in 1u64..=64,
    ) {
        let k = (((n - 1) as f64) * k_frac).round() as u64 + 1;
        let (step1, step2) = kprime_thresholds(n, k, delta);
        // step 1 exists exactly when the window cap fits below n
        prop_assert_eq!(step1.is_none(), k + delta - 1 > n);
        // step 2 exists exactly when the window floor is above zero
        prop_assert_eq!(step2.is_none(), k < delta);
        for (t0, t1) in [step1, step2].into_iter().flatten() {
            prop_assert!(t0 < t1);
            prop_assert!(t1 <= n);
        }
    }

    #[test]
    fn derivative_checkers_never_exceed_their_bounds(
        coeffs in proptest::collection::vec(-1.0f64..1.0, 2..=9),
        a in 0.05f64..=1.0,
    ) {
        let p = Polynomial::monomial(coeffs);
        prop_assume!(norm(&p) > 1e-6);
        if let Ok(report) = check_markov(&p) {
            prop_assert!(report.ratio <= 1.0 + CHECK_TOL);
        }
        let report = check_bernstein(&p);
        prop_assert!(report.ratio <= 1.0 + CHECK_TOL);
        let report = check_cheb_bound(&p, a).unwrap();
        prop_assert!(report.ratio <= 1.0 + CHECK_TOL);
    }

    #[test]
    fn rank_sets_delimit_the_duplicate_block(
        values in proptest::collection::vec(0.0f64..1.0, 1..40),
        pick in 0usize..40,
        coarse in 1u64..8,
    ) {
        // coarse-grain so duplicates actually occur
        let xs: Vec<f64> = values
            .iter()
            .map(|v| (v * coarse as f64).floor() / coarse as f64)
            .collect();
        let i = pick % xs.len();
        let set = rank_set(&xs, i);
        let n = xs.len() as u64;
        prop_assert!(1 <= set.lo && set.lo <= set.hi && set.hi <= n);
        let copies = xs.iter().filter(|v| **v == xs[i]).count() as u64;
        prop_assert_eq!(set.hi - set.lo + 1, copies);
        let strictly_below = xs.iter().filter(|v| **v < xs[i]).count() as u64;
        prop_assert_eq!(set.lo, strictly_below + 1);
    }

    #[test]
    fn sampler_respects_the_open_window(
        raw in proptest::collection::vec(0.0f64..1.0, 3..50),
        picks in (0usize..50, 0usize..50),
        seed in 0u64..1000,
    ) {
        // index-based offsets make the values distinct, so strict value
        // comparisons match the tie-broken order
        let values: Vec<f64> = raw
            .iter()
            .enumerate()
            .map(|(j, v)| v / 2.0 + j as f64 * 1e-9)
            .collect();
        let n = values.len();
        let (a, b) = (picks.0 % n, picks.1 % n);
        let (lo, hi) = if values[a] <= values[b] { (a, b) } else { (b, a) };
        let params = SelectionParams::new(n as u64, n as u64 / 2 + 1, 1.0).unwrap();
        let cfg = SelectConfig::default();
        let x = NumberOracle::new(values.clone()).unwrap();
        let mut rng = trial_rng(seed, 0);
        let got = sample_between(&x, Some(lo), Some(hi), &params, &cfg, &mut rng);
        if let Some(i) = got {
            prop_assert!(values[lo] < values[i] && values[i] < values[hi]);
        }
        // the sampler always pays for at least one attempt
        prop_assert!(x.ledger().count("sample") > 0);

        // a half-open window: anything strictly above the low pivot
        let x = NumberOracle::new(values.clone()).unwrap();
        if let Some(i) = sample_between(&x, Some(lo), None, &params, &cfg, &mut rng) {
            prop_assert!(values[i] > values[lo]);
        }
    }
}
