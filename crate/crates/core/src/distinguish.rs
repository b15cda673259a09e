//! The level distinguisher D(X, l', l): decides whether a boolean input has
//! at least l ones or at most l' ones (promised one of the two), by running
//! the counting primitive once at a budget
//!
//!   P = ceil(c (sqrt(n/dl) + sqrt(m(n-m))/dl)),   dl = l - l',
//!
//! where m is the level in {l, l'} farther from n/2 and c is a calibration
//! constant, and thresholding the estimate at l' + dl/2. Each side of the
//! promise is answered correctly with probability at least 2/3 at the
//! shipped c. A majority-boosted variant drives the error down
//! exponentially in the repetition count.

use rand::Rng;

use crate::constants::DISTINGUISH_C;
use crate::error::{Error, Result};
use crate::oracle::BooleanOracle;
use crate::qcount::{draw_estimate, CounterModel};

/// Tunables for one distinguisher instance.
#[derive(Clone, Copy, Debug)]
pub struct DistinguisherConfig {
    /// Budget multiplier; the calibrated default is [`DISTINGUISH_C`].
    pub c: f64,
    /// Majority repetitions for the boosted variant (odd).
    pub boost_t: u32,
    /// Which counting model backs the calls.
    pub model: CounterModel,
}

impl DistinguisherConfig {
    pub fn new(c: f64, boost_t: u32, model: CounterModel) -> Result<Self> {
        if !(c >= 1.0) {
            return Err(Error::contract("distinguisher constant c must be >= 1"));
        }
        if boost_t == 0 || boost_t.is_multiple_of(2) {
            return Err(Error::contract("boost repetition count must be odd"));
        }
        Ok(Self { c, boost_t, model })
    }
}

impl Default for DistinguisherConfig {
    fn default() -> Self {
        Self {
            c: DISTINGUISH_C,
            boost_t: 1,
            model: CounterModel::Phase,
        }
    }
}

/// The level in {l, l'} farther from n/2, ties resolved toward l'.
fn m_level(n: u64, l: u64, lprime: u64) -> u64 {
    let half = n as f64 / 2.0;
    if (half - l as f64).abs() > (half - lprime as f64).abs() {
        l
    } else {
        lprime
    }
}

/// The per-call query budget P.
pub fn query_budget(n: u64, l: u64, lprime: u64, c: f64) -> Result<u64> {
    if !(lprime < l && l <= n) {
        return Err(Error::contract("need 0 <= l' < l <= n"));
    }
    let dl = (l - lprime) as f64;
    let m = m_level(n, l, lprime) as f64;
    let nf = n as f64;
    let p = (c * ((nf / dl).sqrt() + (m * (nf - m)).sqrt() / dl)).ceil();
    Ok(p as u64)
}

/// Threshold rule: 1 when the estimate reaches l' + dl/2. Estimates within
/// 1e-12 of the threshold count as reaching it, so boundary arithmetic noise
/// cannot flip a verdict that lands exactly on the line.
pub fn decide_estimate(t_hat: f64, lprime: u64, dl: u64) -> u8 {
    let threshold = lprime as f64 + dl as f64 / 2.0;
    if t_hat >= threshold - 1e-12 {
        1
    } else {
        0
    }
}

/// Engine form: one distinguisher call on a level-t_true input, without any
/// oracle or ledger. Callers that simulate derived predicates charge their
/// own ledgers with the budget this call implies.
pub fn distinguish_draw<R: Rng + ?Sized>(
    model: CounterModel,
    n: u64,
    t_true: u64,
    l: u64,
    lprime: u64,
    c: f64,
    rng: &mut R,
) -> Result<u8> {
    let p = query_budget(n, l, lprime, c)?;
    let t_hat = draw_estimate(model, n, t_true, p, rng);
    Ok(decide_estimate(t_hat, lprime, l - lprime))
}

/// One distinguisher call over a boolean oracle. Charges exactly P queries.
pub fn distinguish<R: Rng + ?Sized>(
    x: &BooleanOracle,
    lprime: u64,
    l: u64,
    cfg: &DistinguisherConfig,
    rng: &mut R,
) -> Result<u8> {
    let p = query_budget(x.n(), l, lprime, cfg.c)?;
    let t_hat = draw_estimate(cfg.model, x.n(), x.true_count(), p, rng);
    x.ledger().charge("distinguish", p);
    Ok(decide_estimate(t_hat, lprime, l - lprime))
}

/// Majority vote over boost_t independent calls. Charges boost_t * P.
pub fn distinguish_boosted<R: Rng + ?Sized>(
    x: &BooleanOracle,
    lprime: u64,
    l: u64,
    cfg: &DistinguisherConfig,
    rng: &mut R,
) -> Result<u8> {
    let mut ones = 0u32;
    for _ in 0..cfg.boost_t {
        ones += distinguish(x, lprime, l, cfg, rng)? as u32;
    }
    Ok(u8::from(2 * ones > cfg.boost_t))
}

/// The proof-side lower envelope g(x) = x - sqrt(x n)/P - n/(4 P^2): when c
/// is large enough, g is increasing for x >= l and g(l) clears the decision
/// threshold, which is what pins the one-sided error.
pub fn g_lower(x: f64, n: u64, p: u64) -> f64 {
    let nf = n as f64;
    let pf = p as f64;
    x - (x * nf).sqrt() / pf - nf / (4.0 * pf * pf)
}
