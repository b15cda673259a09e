//! Simulation of the amplitude-estimation counting primitive C(Y, P):
//! makes (charges) exactly P oracle calls and returns an estimate t of the
//! number of ones t_Y with
//!
//!   |t_Y - t| <= sqrt(t_Y (n - t_Y)) / P + |n - 2 t_Y| / (4 P^2)
//!
//! with probability at least 2/3. Outcomes are drawn from the exact
//! phase-estimation law: measuring y in {0, .., M-1} with probability
//! proportional to the squared Dirichlet kernel sin^2(M pi d) / (M^2 sin^2(pi d)),
//! where d is the wrapped distance from y/M to either phase branch
//! +-theta/pi, theta = arcsin(sqrt(t_Y / n)), and the two branches mix with
//! weight 1/2 each. The estimate is t = n sin^2(pi y / M).

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::oracle::BooleanOracle;

/// Oracle-call budget for one invocation of the counting primitive.
#[derive(Clone, Copy, Debug)]
pub struct CountParams {
    pub p: u64,
}

impl CountParams {
    pub fn new(p: u64) -> Result<Self> {
        if p == 0 {
            return Err(Error::contract("counting budget P must be >= 1"));
        }
        Ok(Self { p })
    }
}

/// An estimate together with the error budget the guarantee promises for
/// the run that produced it. The budget depends on the hidden true count,
/// so it is simulation/test-side information: algorithms must not read it.
#[derive(Clone, Copy, Debug)]
pub struct CountEstimate {
    pub t: f64,
    pub error_budget: f64,
}

/// Which estimate sampler backs the primitive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CounterModel {
    /// The exact phase-estimation outcome law (default).
    Phase,
    /// Contract-level model for downstream property tests: with probability
    /// exactly 2/3 the estimate is t_Y plus uniform noise within the budget;
    /// otherwise it is the far endpoint of [0, n] (adversarial but in-range).
    Contract,
}

/// The guarantee's error budget, evaluated exactly.
pub fn error_budget(n: u64, t_y: u64, p: u64) -> f64 {
    let n = n as f64;
    let t = t_y as f64;
    let p = p as f64;
    (t * (n - t)).sqrt() / p + (n - 2.0 * t).abs() / (4.0 * p * p)
}

/// Smallest power of two >= x (x >= 1).
pub fn next_pow2(x: u64) -> u64 {
    x.max(1).next_power_of_two()
}

/// Measurement grid size used for budget P: the smallest power of two at
/// or above 2 pi P. Queries are still charged as P; the grid must exceed
/// 2 pi P so that the typical phase error 1/M keeps |sin(pi d)| below
/// 1/(2P), which is what delivers the stated budget with probability at
/// least 8/pi^2.
pub fn grid_size(p: u64) -> u64 {
    next_pow2((2.0 * PI * p as f64).ceil() as u64)
}

fn wrap_half(x: f64) -> f64 {
    // wrap to (-1/2, 1/2]
    let r = x - x.floor();
    if r > 0.5 {
        r - 1.0
    } else {
        r
    }
}

fn kernel(delta: f64, m: u64) -> f64 {
    // sin^2(M pi d) / (M^2 sin^2(pi d)) with the d -> 0 limit of 1.
    if delta.abs() < 1e-15 {
        return 1.0;
    }
    let mf = m as f64;
    let s = (PI * delta).sin();
    let num = (mf * PI * delta).sin();
    (num * num) / (mf * mf * s * s)
}

fn branch_phase(n: u64, t_true: u64) -> f64 {
    // theta / pi in [0, 1/2]
    ((t_true as f64 / n as f64).sqrt()).asin() / PI
}

/// The exact outcome distribution over y in {0, .., M-1}.
pub fn phase_distribution(n: u64, t_true: u64, m: u64) -> Result<Vec<f64>> {
    if t_true > n || n == 0 {
        return Err(Error::contract("need 0 <= t_true <= n, n >= 1"));
    }
    if m < 2 {
        return Err(Error::contract("grid size M must be >= 2"));
    }
    let omega = branch_phase(n, t_true);
    let mut p = Vec::with_capacity(m as usize);
    for y in 0..m {
        let f = y as f64 / m as f64;
        let d_plus = wrap_half(f - omega);
        let d_minus = wrap_half(f + omega);
        p.push(0.5 * (kernel(d_plus, m) + kernel(d_minus, m)));
    }
    Ok(p)
}

/// The estimate corresponding to measurement outcome y on grid M.
pub fn estimate_from_outcome(n: u64, y: u64, m: u64) -> f64 {
    let s = (PI * y as f64 / m as f64).sin();
    n as f64 * s * s
}

/// Draw one outcome y from the phase law in O(1) expected time, exactly.
///
/// Rejection sampling: condition on a branch (weight 1/2 each), write the
/// branch phase as z = omega*M = y0 + frac. Over integer offsets j (the
/// outcome is y = y0 + j mod M, admissible when j - frac lies in
/// (-M/2, M/2]) the target mass is
///     p(j) = sin^2(pi frac) / (M^2 sin^2(pi (j - frac) / M)),
/// which is dominated by e(j) = 1 for j in {0, 1}, 1/(2(j-1)j) for j >= 2,
/// and 1/(2|j|(|j|+1)) for j <= -1 (total envelope mass 3, so ~3 rounds).
/// The tails of e are sampled with the floor(1/U) trick.
pub fn sample_outcome<R: Rng + ?Sized>(n: u64, t_true: u64, m: u64, rng: &mut R) -> u64 {
    debug_assert!(t_true <= n && m >= 2 && m.is_multiple_of(2));
    let omega = branch_phase(n, t_true);
    let mf = m as f64;
    let z = if rng.random::<bool>() { omega * mf } else { -omega * mf };
    let y0 = z.floor();
    let frac = z - y0;
    let y0 = y0 as i64;
    // A branch phase that sits on the grid is a point mass.
    if frac < 1e-12 {
        return y0.rem_euclid(m as i64) as u64;
    }
    if frac > 1.0 - 1e-12 {
        return (y0 + 1).rem_euclid(m as i64) as u64;
    }
    let sf = (PI * frac).sin();
    let num = sf * sf;
    loop {
        let v = 3.0 * rng.random::<f64>();
        let j: i64 = if v < 1.0 {
            0
        } else if v < 2.0 {
            1
        } else {
            let u: f64 = rng.random();
            // k >= 1 with P(k) = 1/(k(k+1)); clamp to keep the index sane
            let k = (1.0 / u.max(1e-12)).floor() as i64;
            if v < 2.5 {
                1 + k
            } else {
                -k
            }
        };
        let uj = j as f64 - frac;
        if uj <= -mf / 2.0 || uj > mf / 2.0 {
            continue;
        }
        let s = (PI * uj / mf).sin();
        let target = num / (mf * mf * s * s);
        let envelope = match j {
            0 | 1 => 1.0,
            j if j >= 2 => 1.0 / (2.0 * ((j - 1) * j) as f64),
            j => 1.0 / (2.0 * ((-j) * (-j + 1)) as f64),
        };
        if rng.random::<f64>() * envelope < target {
            return (y0 + j).rem_euclid(m as i64) as u64;
        }
    }
}

/// Draw one estimate under the chosen model without touching any ledger.
/// This is the shared engine behind `count` and the derived-view callers,
/// which do their own charging.
pub fn draw_estimate<R: Rng + ?Sized>(
    model: CounterModel,
    n: u64,
    t_true: u64,
    p: u64,
    rng: &mut R,
) -> f64 {
    match model {
        CounterModel::Phase => {
            let m = grid_size(p);
            let y = sample_outcome(n, t_true, m, rng);
            estimate_from_outcome(n, y, m)
        }
        CounterModel::Contract => {
            let b = error_budget(n, t_true, p);
            if rng.random::<f64>() < 2.0 / 3.0 {
                let noise = rng.random_range(-b..=b);
                (t_true as f64 + noise).clamp(0.0, n as f64)
            } else if (t_true as f64) >= n as f64 / 2.0 {
                0.0
            } else {
                n as f64
            }
        }
    }
}

/// One invocation of the counting primitive over a boolean oracle.
/// Charges exactly P queries to the oracle's ledger.
pub fn count<R: Rng + ?Sized>(
    y: &BooleanOracle,
    params: CountParams,
    rng: &mut R,
) -> CountEstimate {
    let t = draw_estimate(CounterModel::Phase, y.n(), y.true_count(), params.p, rng);
    y.ledger().charge("count", params.p);
    CountEstimate {
        t,
        error_budget: error_budget(y.n(), y.true_count(), params.p),
    }
}
