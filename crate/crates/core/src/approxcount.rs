//! Two-phase approximate counting.
//!
//! Phase 1 runs the counting primitive a fixed odd number of times at a cheap
//! budget that only depends on n and Delta, and takes the median t-tilde of
//! the estimates. Phase 2 runs it once more at a budget that adapts to
//! t-tilde, which is what makes the total cost scale with
//! sqrt(n/Delta) + sqrt(t(n-t))/Delta instead of sqrt(n t)/Delta.

use crate::constants::{TWO_PHASE_C, TWO_PHASE_C1, TWO_PHASE_REPS};
use crate::error::{Error, Result};
use crate::oracle::BooleanOracle;
use crate::qcount::{draw_estimate, error_budget, CountEstimate, CounterModel};
use rand::Rng;

#[derive(Clone, Copy, Debug)]
pub struct TwoPhaseConfig {
    /// Phase-1 budget constant: P1 = ceil(c sqrt(n/Delta)).
    pub c: f64,
    /// Phase-2 budget constant: P2 = ceil(c1 (sqrt(n/Delta) + sqrt(tt(n-tt))/Delta)).
    pub c1: f64,
    /// Number of phase-1 repetitions whose median becomes t-tilde. Odd.
    pub phase1_reps: u64,
    pub model: CounterModel,
}

impl TwoPhaseConfig {
    pub fn new(c: f64, c1: f64, phase1_reps: u64) -> Result<Self> {
        if !(c > 0.0) || !(c1 > 0.0) {
            return Err(Error::contract("phase constants must be positive"));
        }
        if phase1_reps.is_multiple_of(2) {
            return Err(Error::contract("phase-1 repetition count must be odd"));
        }
        Ok(Self { c, c1, phase1_reps, model: CounterModel::Phase })
    }
}

impl Default for TwoPhaseConfig {
    fn default() -> Self {
        Self {
            c: TWO_PHASE_C,
            c1: TWO_PHASE_C1,
            phase1_reps: TWO_PHASE_REPS,
            model: CounterModel::Phase,
        }
    }
}

/// Everything a single two-phase run produced, for CSV emission and tests.
#[derive(Clone, Copy, Debug)]
pub struct TwoPhaseTrace {
    /// Median of the phase-1 estimates.
    pub t_tilde: f64,
    /// Phase-2 estimate, clamped to [0, n].
    pub t_hat: f64,
    pub phase1_budget: u64,
    pub phase2_budget: u64,
    /// phase1_reps * phase1_budget + phase2_budget.
    pub total_queries: u64,
}

/// P1 = ceil(c sqrt(n/Delta)), at least 1.
pub fn phase1_budget(n: u64, delta: u64, c: f64) -> u64 {
    let p = (c * (n as f64 / delta as f64).sqrt()).ceil();
    (p as u64).max(1)
}

/// P2 = ceil(c1 (sqrt(n/Delta) + sqrt(tt(n-tt))/Delta)), with the phase-1
/// median clamped into [0, n] first; at least 1.
pub fn phase2_budget(n: u64, t_tilde: f64, delta: u64, c1: f64) -> u64 {
    let nf = n as f64;
    let d = delta as f64;
    let tt = t_tilde.clamp(0.0, nf);
    let p = (c1 * ((nf / d).sqrt() + (tt * (nf - tt)).sqrt() / d)).ceil();
    (p as u64).max(1)
}

/// The scale sqrt(n/Delta) + sqrt(t(n-t))/Delta that the expected query
/// count is proportional to.
pub fn expected_query_bound(n: u64, t: u64, delta: u64) -> f64 {
    debug_assert!(t <= n && delta >= 1);
    let nf = n as f64;
    let tf = t as f64;
    let d = delta as f64;
    (nf / d).sqrt() + (tf * (nf - tf)).sqrt() / d
}

/// Runs both phases against the oracle, charging "phase1" and "phase2" on
/// its ledger, and returns the full trace.
pub fn approx_count_trace<R: Rng + ?Sized>(
    x: &BooleanOracle,
    delta: u64,
    cfg: &TwoPhaseConfig,
    rng: &mut R,
) -> Result<TwoPhaseTrace> {
    if delta < 1 {
        return Err(Error::contract("need Delta >= 1"));
    }
    if cfg.phase1_reps.is_multiple_of(2) || !(cfg.c > 0.0) || !(cfg.c1 > 0.0) {
        return Err(Error::contract("invalid two-phase configuration"));
    }
    let n = x.n();
    let t_true = x.true_count();
    let p1 = phase1_budget(n, delta, cfg.c);
    let mut draws: Vec<f64> = (0..cfg.phase1_reps)
        .map(|_| draw_estimate(cfg.model, n, t_true, p1, rng))
        .collect();
    x.ledger().charge("phase1", cfg.phase1_reps * p1);
    draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let t_tilde = draws[draws.len() / 2];

    let p2 = phase2_budget(n, t_tilde, delta, cfg.c1);
    let t_hat = draw_estimate(cfg.model, n, t_true, p2, rng).clamp(0.0, n as f64);
    x.ledger().charge("phase2", p2);

    Ok(TwoPhaseTrace {
        t_tilde,
        t_hat,
        phase1_budget: p1,
        phase2_budget: p2,
        total_queries: cfg.phase1_reps * p1 + p2,
    })
}

/// Two-phase Delta-approximate count. The returned estimate is a real in
/// [0, n]; round it (half away from zero) if an integer count is wanted.
/// The reported error budget is the phase-2 budget at the true count.
pub fn approx_count<R: Rng + ?Sized>(
    x: &BooleanOracle,
    delta: u64,
    cfg: &TwoPhaseConfig,
    rng: &mut R,
) -> Result<CountEstimate> {
    let trace = approx_count_trace(x, delta, cfg, rng)?;
    Ok(CountEstimate {
        t: trace.t_hat,
        error_budget: error_budget(x.n(), x.true_count(), trace.phase2_budget),
    })
}
