//! Approximate k-th-smallest selection: the uniform interval sampler S, the
//! rank tester K (ideal), its randomized relaxation K' (both the
//! specification model and the realization through the boosted level
//! distinguisher), and the driver that binary-searches the value space with
//! random pivots.
//!
//! Conventions. Ranks are 1-based; rank(x_i) is the set of sorted positions
//! index i can occupy, an interval [#{j: x_j < x_i} + 1, #{j: x_j <= x_i}].
//! An index is a success for (k, Delta) when its rank set intersects the
//! open window (k - Delta, k + Delta). Sentinels stand in for -infinity and
//! +infinity interval endpoints. All verdict predicates use strict value
//! comparisons, so duplicates share rank sets and vacate a sampling window
//! together.
//!
//! Query accounting. The simulation computes ranks by presorting each input
//! once (simulator-side, free) and charges the input oracle's ledger the
//! number of queries the simulated algorithm would spend: each boolean
//! predicate evaluation costs two value reads in the value model (compute
//! and uncompute); in the comparison model a K' predicate costs one
//! comparison and an interval predicate costs one comparison per finite
//! endpoint, each comparison standing for two value reads against the
//! backing oracle. Counting-primitive calls inside K' charge their full
//! budget in bulk.

use rand::Rng;

use crate::constants::{DISTINGUISH_C, REP_FACTOR, STAGE_CAP_FACTOR};
use crate::distinguish::{decide_estimate, query_budget};
use crate::error::{Error, Result};
use crate::oracle::{ComparisonOracle, NumberOracle, QueryLedger};
use crate::qcount::{draw_estimate, CounterModel};

/// Target rank and slack for one selection problem.
#[derive(Clone, Copy, Debug)]
pub struct SelectionParams {
    pub n: u64,
    pub k: u64,
    pub delta: u64,
}

impl SelectionParams {
    /// Fractional slack is rounded up to the next integer.
    pub fn new(n: u64, k: u64, delta_input: f64) -> Result<Self> {
        if n == 0 || k == 0 || k > n {
            return Err(Error::contract("need 1 <= k <= n"));
        }
        if !(delta_input > 0.0) {
            return Err(Error::contract("need Delta > 0"));
        }
        let delta = delta_input.ceil() as u64;
        Ok(Self { n, k, delta })
    }

    /// The instance scale N = sqrt(n/Delta) + sqrt(k(n-k))/Delta that the
    /// stage and query bounds are phrased in.
    pub fn big_n(&self) -> f64 {
        let n = self.n as f64;
        let k = self.k as f64;
        let d = self.delta as f64;
        (n / d).sqrt() + (k * (n - k)).sqrt() / d
    }
}

/// Knobs for the realized algorithm. `Default` ships the calibrated frozen
/// constants.
#[derive(Clone, Copy, Debug)]
pub struct SelectConfig {
    /// Distinguisher budget constant.
    pub c: f64,
    /// Stage cap multiplier: the realized driver aborts after
    /// ceil(stage_cap_factor * ln N) stages.
    pub stage_cap_factor: f64,
    /// Repetition multiplier: sampler attempts and boost repetitions are
    /// ceil(rep_factor * ln ln N).
    pub rep_factor: f64,
    /// Probability that a specification-model K' answers yes inside the
    /// boundary bands where both verdicts are legal.
    pub band_coin: f64,
    /// Counting model behind the distinguisher.
    pub model: CounterModel,
}

impl Default for SelectConfig {
    fn default() -> Self {
        Self {
            c: DISTINGUISH_C,
            stage_cap_factor: STAGE_CAP_FACTOR,
            rep_factor: REP_FACTOR,
            band_coin: 0.5,
            model: CounterModel::Phase,
        }
    }
}

impl SelectConfig {
    /// Realized-driver stage cap.
    pub fn stage_cap(&self, big_n: f64) -> u64 {
        (self.stage_cap_factor * big_n.ln().max(1.0)).ceil() as u64
    }

    /// Sampler attempt count T = ceil(rep_factor * ln ln N), at least 3.
    pub fn sampler_attempts(&self, big_n: f64) -> u64 {
        let lnln = big_n.ln().max(std::f64::consts::E).ln();
        (self.rep_factor * lnln).ceil().max(3.0) as u64
    }

    /// Boost repetitions for K': the attempt count rounded up to odd.
    pub fn boost_reps(&self, big_n: f64) -> u64 {
        let t = self.sampler_attempts(big_n);
        if t.is_multiple_of(2) {
            t + 1
        } else {
            t
        }
    }
}

/// The contiguous set of sorted positions an element can occupy (1-based,
/// inclusive on both ends).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankSet {
    pub lo: u64,
    pub hi: u64,
}

impl RankSet {
    /// Does any rank in the set fall strictly inside (a, b)?
    pub fn intersects_open(&self, a: f64, b: f64) -> bool {
        (self.hi as f64) > a && (self.lo as f64) < b
    }
}

/// Rank set of index i, computed by exact counting over the values.
pub fn rank_set(values: &[f64], i: usize) -> RankSet {
    let v = values[i];
    let less = values.iter().filter(|&&x| x < v).count() as u64;
    let le = values.iter().filter(|&&x| x <= v).count() as u64;
    RankSet { lo: less + 1, hi: le }
}

/// Success predicate: the element's rank set intersects (k-Delta, k+Delta).
pub fn is_within_window(values: &[f64], i: usize, k: u64, delta: u64) -> bool {
    rank_set(values, i).intersects_open(k as f64 - delta as f64, k as f64 + delta as f64)
}

/// The approximate-median acceptance predicate: strictly fewer than
/// (1+eps)n/2 elements on each side.
pub fn is_approx_median(values: &[f64], i: usize, epsilon: f64) -> bool {
    let n = values.len() as f64;
    let v = values[i];
    let below = values.iter().filter(|&&x| x < v).count() as f64;
    let above = values.iter().filter(|&&x| x > v).count() as f64;
    let cap = (1.0 + epsilon) * n / 2.0;
    below < cap && above < cap
}

/// Verdict of the rank tester.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Verdict {
    Yes,
    Less,
    Greater,
}

/// Which ideal subroutine pair backs `select_ideal`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IdealMode {
    /// Deterministic K: yes exactly when the rank set meets the window.
    K,
    /// Specification-level K': mandatory verdicts outside the boundary
    /// bands, a coin between the two legal verdicts inside them.
    KprimeSpec,
}

/// Record of one driver run.
#[derive(Clone, Debug)]
pub struct RunTrace {
    /// (pivot index, verdict) per stage, in order.
    pub pivots: Vec<(usize, Verdict)>,
    /// Stage count; always equals pivots.len().
    pub stages: u64,
    /// Queries charged by the sampler.
    pub queries_sample: u64,
    /// Queries charged by the rank tester.
    pub queries_kprime: u64,
    /// Total queries (sample + kprime).
    pub total_queries: u64,
    /// Returned index on success, None on failure (cap or sampler).
    pub result: Option<usize>,
}

/// How queries are priced when the driver evaluates predicates.
enum Charger<'a> {
    Value(&'a QueryLedger),
    Comparison {
        cmp: &'a QueryLedger,
        backing: &'a QueryLedger,
    },
}

/// Simulator view of one input: original values, a sorted copy for rank
/// arithmetic, and the sorting permutation for uniform interval sampling.
struct Sim<'a> {
    values: &'a [f64],
    sorted: Vec<f64>,
    order: Vec<usize>,
    charger: Charger<'a>,
}

impl<'a> Sim<'a> {
    fn for_values(x: &'a NumberOracle) -> Self {
        Self::build(x.values(), Charger::Value(x.ledger()))
    }

    fn for_comparisons(x: &'a ComparisonOracle) -> Self {
        Self::build(
            x.backing().values(),
            Charger::Comparison {
                cmp: x.ledger(),
                backing: x.backing().ledger(),
            },
        )
    }

    fn build(values: &'a [f64], charger: Charger<'a>) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)));
        let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        Self {
            values,
            sorted,
            order,
            charger,
        }
    }

    fn n(&self) -> u64 {
        self.values.len() as u64
    }

    fn count_less(&self, v: f64) -> u64 {
        self.sorted.partition_point(|&x| x < v) as u64
    }

    fn count_le(&self, v: f64) -> u64 {
        self.sorted.partition_point(|&x| x <= v) as u64
    }

    fn rank_set_of(&self, i: usize) -> RankSet {
        let v = self.values[i];
        RankSet {
            lo: self.count_less(v) + 1,
            hi: self.count_le(v),
        }
    }

    /// Charge `evals` predicate evaluations; returns the amount added to
    /// the primary (model-facing) ledger.
    fn charge(&self, label: &'static str, evals: u64, cmps_per_eval: u64) -> u64 {
        match &self.charger {
            Charger::Value(ledger) => {
                let q = 2 * evals;
                ledger.charge(label, q);
                q
            }
            Charger::Comparison { cmp, backing } => {
                let q = cmps_per_eval * evals;
                cmp.charge(label, q);
                backing.charge("read", 2 * q);
                q
            }
        }
    }
}

/// Interval endpoints for the sampler: None stands for the infinite
/// sentinel on that side.
#[derive(Clone, Copy, Debug)]
struct Window {
    lo: Option<usize>,
    hi: Option<usize>,
}

impl Window {
    fn full() -> Self {
        Self { lo: None, hi: None }
    }

    fn finite_bounds(&self) -> u64 {
        self.lo.is_some() as u64 + self.hi.is_some() as u64
    }
}

/// The sorted-position range [start, end) of values strictly inside the
/// window.
fn support_range(sim: &Sim, w: Window) -> (usize, usize) {
    let start = match w.lo {
        Some(i) => sim.count_le(sim.values[i]) as usize,
        None => 0,
    };
    let end = match w.hi {
        Some(j) => sim.count_less(sim.values[j]) as usize,
        None => sim.sorted.len(),
    };
    (start, end.max(start))
}

fn sample_attempt_evals(n: u64, delta: u64) -> u64 {
    ((n as f64 / delta as f64).sqrt()).ceil() as u64
}

/// Realized sampler: up to T attempts, each attempt spending the search
/// budget and succeeding with probability 2/3; a success returns a uniform
/// element of the window's support. Restart-on-miss keeps the output
/// uniform. Returns the drawn index (or None after T misses) and the
/// queries charged.
fn sample_between_sim<R: Rng + ?Sized>(
    sim: &Sim,
    w: Window,
    params: &SelectionParams,
    cfg: &SelectConfig,
    rng: &mut R,
) -> (Option<usize>, u64) {
    let (start, end) = support_range(sim, w);
    let support = end - start;
    let attempts = cfg.sampler_attempts(params.big_n());
    let evals = sample_attempt_evals(params.n, params.delta);
    let mut charged = 0;
    for _ in 0..attempts {
        charged += sim.charge("sample", evals, w.finite_bounds());
        if support > 0 && rng.random::<f64>() < 2.0 / 3.0 {
            let r = start + rng.random_range(0..support);
            return (Some(sim.order[r]), charged);
        }
    }
    (None, charged)
}

/// Ideal sampler: exact uniform draw over the support, one attempt's cost.
fn sample_ideal_sim<R: Rng + ?Sized>(
    sim: &Sim,
    w: Window,
    params: &SelectionParams,
    rng: &mut R,
) -> (usize, u64) {
    let (start, end) = support_range(sim, w);
    assert!(
        end > start,
        "ideal driver called the sampler on an empty window"
    );
    let charged = sim.charge("sample", sample_attempt_evals(params.n, params.delta), w.finite_bounds());
    let r = start + rng.random_range(0..end - start);
    (sim.order[r], charged)
}

/// Threshold levels (t0, t1) of one distinguisher step, None when the step
/// does not run.
pub type StepLevels = Option<(u64, u64)>;

/// The two distinguisher instances K' runs: step 1 tests how many elements
/// lie strictly below the pivot, step 2 how many lie strictly above. Step 1
/// is skipped when its upper level exceeds n; step 2 degenerates to an
/// unconditional yes when k < Delta. Exposed for tests.
pub fn kprime_thresholds(n: u64, k: u64, delta: u64) -> (StepLevels, StepLevels) {
    let half_up = delta.div_ceil(2);
    let step1 = if k + delta - 1 > n {
        None
    } else {
        (k + half_up).checked_sub(2).map(|t0| (t0, k + delta - 1))
    };
    let step2 = if k < delta {
        None
    } else {
        Some((n - k + half_up - 1, n - k + delta))
    };
    (step1, step2)
}

/// Realized K': verdict for pivot i, with queries charged per boosted
/// distinguisher call. Returns (verdict, charged).
fn kprime_sim<R: Rng + ?Sized>(
    sim: &Sim,
    i: usize,
    params: &SelectionParams,
    cfg: &SelectConfig,
    rng: &mut R,
) -> Result<(Verdict, u64)> {
    let n = params.n;
    let (step1, step2) = kprime_thresholds(n, params.k, params.delta);
    let reps = cfg.boost_reps(params.big_n());
    let mut charged = 0;

    if let Some((t0, t1)) = step1 {
        // count of elements strictly below the pivot
        let below = sim.count_less(sim.values[i]);
        let p = query_budget(n, t1, t0, cfg.c)?;
        let mut ones = 0u64;
        for _ in 0..reps {
            let t_hat = draw_estimate(cfg.model, n, below, p, rng);
            ones += decide_estimate(t_hat, t0, t1 - t0) as u64;
        }
        charged += sim.charge("kprime", reps * p, 1);
        if 2 * ones > reps {
            return Ok((Verdict::Greater, charged));
        }
    }

    match step2 {
        None => Ok((Verdict::Yes, charged)),
        Some((t0, t1)) => {
            // count of elements strictly above the pivot
            let above = n - sim.count_le(sim.values[i]);
            let p = query_budget(n, t1, t0, cfg.c)?;
            let mut ones = 0u64;
            for _ in 0..reps {
                let t_hat = draw_estimate(cfg.model, n, above, p, rng);
                ones += decide_estimate(t_hat, t0, t1 - t0) as u64;
            }
            charged += sim.charge("kprime", reps * p, 1);
            if 2 * ones > reps {
                Ok((Verdict::Less, charged))
            } else {
                Ok((Verdict::Yes, charged))
            }
        }
    }
}

/// Ideal K: deterministic verdict from the exact rank set.
fn k_ideal_verdict(rank: RankSet, k: u64, delta: u64) -> Verdict {
    let kf = k as f64;
    let df = delta as f64;
    if rank.intersects_open(kf - df, kf + df) {
        Verdict::Yes
    } else if rank.hi as f64 <= kf - df {
        Verdict::Less
    } else {
        Verdict::Greater
    }
}

/// Specification-level K': mandatory verdicts away from the boundary
/// bands; inside a band, a coin picks between the two legal verdicts.
fn kprime_spec_verdict<R: Rng + ?Sized>(
    rank: RankSet,
    k: u64,
    delta: u64,
    band_coin: f64,
    rng: &mut R,
) -> Verdict {
    let kf = k as f64;
    let df = delta as f64;
    if rank.intersects_open(kf - df / 2.0, kf + df / 2.0) {
        Verdict::Yes
    } else if rank.hi as f64 <= kf - df {
        Verdict::Less
    } else if rank.lo as f64 >= kf + df {
        Verdict::Greater
    } else if (rank.hi as f64) <= kf - df / 2.0 {
        if rng.random::<f64>() < band_coin {
            Verdict::Yes
        } else {
            Verdict::Less
        }
    } else if rng.random::<f64>() < band_coin {
        Verdict::Yes
    } else {
        Verdict::Greater
    }
}

fn drive<R, FS, FK>(
    stage_cap: Option<u64>,
    mut sampler: FS,
    mut tester: FK,
    rng: &mut R,
) -> Result<RunTrace>
where
    R: Rng + ?Sized,
    FS: FnMut(Window, &mut R) -> (Option<usize>, u64),
    FK: FnMut(usize, &mut R) -> Result<(Verdict, u64)>,
{
    let mut w = Window::full();
    let mut pivots = Vec::new();
    let mut queries_sample = 0;
    let mut queries_kprime = 0;
    let mut result = None;
    loop {
        if let Some(cap) = stage_cap {
            if pivots.len() as u64 >= cap {
                break;
            }
        }
        let (drawn, qs) = sampler(w, rng);
        queries_sample += qs;
        let Some(l) = drawn else { break };
        let (verdict, qk) = tester(l, rng)?;
        queries_kprime += qk;
        pivots.push((l, verdict));
        match verdict {
            Verdict::Yes => {
                result = Some(l);
                break;
            }
            Verdict::Less => w.lo = Some(l),
            Verdict::Greater => w.hi = Some(l),
        }
    }
    Ok(RunTrace {
        stages: pivots.len() as u64,
        pivots,
        queries_sample,
        queries_kprime,
        total_queries: queries_sample + queries_kprime,
        result,
    })
}

fn select_over_sim<R: Rng + ?Sized>(
    sim: &Sim,
    params: &SelectionParams,
    cfg: &SelectConfig,
    rng: &mut R,
) -> Result<RunTrace> {
    if params.n != sim.n() {
        return Err(Error::contract("params.n must match the input size"));
    }
    let cap = cfg.stage_cap(params.big_n());
    drive(
        Some(cap),
        |w, rng| sample_between_sim(sim, w, params, cfg, rng),
        |i, rng| kprime_sim(sim, i, params, cfg, rng),
        rng,
    )
}

/// Realized selection over a value oracle. Returns the result index (None
/// on failure) inside the trace.
pub fn select<R: Rng + ?Sized>(
    x: &NumberOracle,
    params: &SelectionParams,
    cfg: &SelectConfig,
    rng: &mut R,
) -> Result<RunTrace> {
    select_over_sim(&Sim::for_values(x), params, cfg, rng)
}

/// Realized selection over a comparison oracle: same algorithm and the
/// same random stream as `select`, priced in comparisons.
pub fn select_cmp<R: Rng + ?Sized>(
    x: &ComparisonOracle,
    params: &SelectionParams,
    cfg: &SelectConfig,
    rng: &mut R,
) -> Result<RunTrace> {
    select_over_sim(&Sim::for_comparisons(x), params, cfg, rng)
}

/// Reference driver with the exact sampler and an ideal tester. Never
/// fails and runs without a stage cap (each stage strictly shrinks the
/// window's support, so it terminates within n stages).
pub fn select_ideal<R: Rng + ?Sized>(
    x: &NumberOracle,
    params: &SelectionParams,
    mode: IdealMode,
    cfg: &SelectConfig,
    rng: &mut R,
) -> Result<RunTrace> {
    let sim = Sim::for_values(x);
    if params.n != sim.n() {
        return Err(Error::contract("params.n must match the input size"));
    }
    let k = params.k;
    let delta = params.delta;
    let band_coin = cfg.band_coin;
    drive(
        None,
        |w, rng| {
            let (i, q) = sample_ideal_sim(&sim, w, params, rng);
            (Some(i), q)
        },
        |i, rng| {
            let rank = sim.rank_set_of(i);
            let v = match mode {
                IdealMode::K => k_ideal_verdict(rank, k, delta),
                IdealMode::KprimeSpec => kprime_spec_verdict(rank, k, delta, band_coin, rng),
            };
            Ok((v, 0))
        },
        rng,
    )
}

/// Public sampler over a value oracle: uniform over indices with values
/// strictly between the two (optional) pivot values.
pub fn sample_between<R: Rng + ?Sized>(
    x: &NumberOracle,
    lo: Option<usize>,
    hi: Option<usize>,
    params: &SelectionParams,
    cfg: &SelectConfig,
    rng: &mut R,
) -> Option<usize> {
    let sim = Sim::for_values(x);
    sample_between_sim(&sim, Window { lo, hi }, params, cfg, rng).0
}

/// Public K' over a value oracle.
pub fn kprime_verdict<R: Rng + ?Sized>(
    x: &NumberOracle,
    i: usize,
    params: &SelectionParams,
    cfg: &SelectConfig,
    rng: &mut R,
) -> Result<Verdict> {
    let sim = Sim::for_values(x);
    Ok(kprime_sim(&sim, i, params, cfg, rng)?.0)
}

/// The (k, Delta) instance an epsilon-approximate median maps to:
/// k = ceil((n+1)/2), Delta = ceil((eps n + 1)/2).
pub fn median_params(n: u64, epsilon: f64) -> Result<SelectionParams> {
    if n == 0 {
        return Err(Error::contract("need n >= 1"));
    }
    if !(epsilon >= 1.0 / (2.0 * n as f64) && epsilon < 1.0) {
        return Err(Error::contract("need epsilon in [1/(2n), 1)"));
    }
    let k = (n + 2) / 2;
    let delta = (epsilon * n as f64 + 1.0) / 2.0;
    SelectionParams::new(n, k, delta.ceil())
}

/// Approximate median: selection at the mapped (k, Delta).
pub fn median<R: Rng + ?Sized>(
    x: &NumberOracle,
    epsilon: f64,
    cfg: &SelectConfig,
    rng: &mut R,
) -> Result<RunTrace> {
    let params = median_params(x.n(), epsilon)?;
    select(x, &params, cfg, rng)
}

pub fn harmonic(m: u64) -> f64 {
    (1..=m).map(|i| 1.0 / i as f64).sum()
}

/// Exact expected stage count of the ideal-K driver on distinct values,
/// valid for Delta <= k <= n - Delta + 1:
/// 1 + (H_{k+Delta-1} - H_{2Delta-1}) + (H_{n-k+Delta} - H_{2Delta-1}).
pub fn expected_stages_ideal(n: u64, k: u64, delta: u64) -> f64 {
    1.0 + harmonic(k + delta - 1) - harmonic(2 * delta - 1) + harmonic(n - k + delta)
        - harmonic(2 * delta - 1)
}

/// The closed-form stage bound ln((k+Delta-1)(n-k+Delta)/(2Delta-1)^2) + 1.
pub fn ideal_stage_bound(n: u64, k: u64, delta: u64) -> f64 {
    let a = (k + delta - 1) as f64;
    let b = (n - k + delta) as f64;
    let w = (2 * delta - 1) as f64;
    (a * b / (w * w)).ln() + 1.0
}
