//! Minimal approximate degree of the symmetric partial functions f_{l,l'}
//! and the reductions that map order statistics onto them.
//!
//! f_{l,l'} is the partial boolean function on n-bit strings that is 1 when
//! the input has exactly l ones and 0 when it has exactly l' ones. A
//! polynomial approximates it to within c when it stays in [-c, 1+c] on the
//! whole cube, is within c of 1 on weight-l inputs, and within c of 0 on
//! weight-l' inputs. Symmetrization makes this a univariate feasibility
//! question over the integer points 0..n, which is solved here as a linear
//! program, scanning the degree upward for the least feasible one.
//!
//! The reduction from multilinear to univariate loses nothing: symmetrizing
//! any multilinear approximant yields a feasible univariate polynomial of
//! no larger degree (the symmetrized polynomial takes weighted averages of
//! values already inside each constraint interval), and any feasible
//! univariate q lifts back to the multilinear q(x_1 + ... + x_n). So the
//! certified d* is exactly the quantity the degree lower bound speaks about.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::{log_log_fit, FitReport};
use crate::polytools::Polynomial;

/// Residual tolerance for calling the feasibility program satisfiable.
pub const FEAS_TOL: f64 = 1e-7;
/// Slack at which a formally infeasible program is close enough to feasible
/// that the certificate is flagged indeterminate.
pub const INDETERMINATE_TOL: f64 = 1e-4;
/// Default approximation constant; any constant below 1/2 gives the same
/// asymptotics.
pub const DEFAULT_C: f64 = 1.0 / 3.0;
/// Default cap on the scanned degree.
pub const DEFAULT_MAX_DEGREE: u32 = 256;

/// The instance (n, l, l', c): which two weight levels must be separated,
/// and how tightly.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PartialFunctionSpec {
    pub n: u64,
    pub l: u64,
    pub lprime: u64,
    pub c: f64,
}

impl PartialFunctionSpec {
    pub fn new(n: u64, l: u64, lprime: u64, c: f64) -> Result<Self> {
        if l > n || lprime > n {
            return Err(Error::contract("need l, l' in [0, n]"));
        }
        if l == lprime {
            return Err(Error::contract("need l != l'"));
        }
        if !(0.0..0.5).contains(&c) {
            return Err(Error::contract("need c in [0, 1/2)"));
        }
        Ok(Self { n, l, lprime, c })
    }

    /// The gap between the two pinned levels.
    pub fn delta_l(&self) -> u64 {
        self.l.abs_diff(self.lprime)
    }

    /// The level in {l, l'} farther from n/2, ties resolved toward l'.
    pub fn m(&self) -> u64 {
        let half = self.n as f64 / 2.0;
        let dl = (half - self.l as f64).abs();
        let dlp = (half - self.lprime as f64).abs();
        if dl > dlp {
            self.l
        } else {
            self.lprime
        }
    }

    /// The complement instance (n - l, n - l'), which has the same minimal
    /// degree by the substitution x -> n - x.
    pub fn complement(&self) -> Self {
        Self {
            n: self.n,
            l: self.n - self.l,
            lprime: self.n - self.lprime,
            c: self.c,
        }
    }
}

/// The degree lower-bound expression sqrt(n/dl) + sqrt(m(n-m))/dl.
pub fn theory_bound(spec: &PartialFunctionSpec) -> f64 {
    let n = spec.n as f64;
    let dl = spec.delta_l() as f64;
    let m = spec.m() as f64;
    (n / dl).sqrt() + (m * (n - m)).sqrt() / dl
}

/// Best achievable constraint margin at the given degree: the optimum of
///   maximize mu  s.t.  q(i) in [-c + mu, 1 + c - mu] for integers i in [0,n],
///                      q(l) >= 1 - c + mu,  q(l') <= c - mu,
/// over polynomials q of degree <= d. The program is feasible (the degree
/// suffices) exactly when the optimum is >= 0; small negative optima within
/// FEAS_TOL are accepted as solver noise.
///
/// The polynomial is parametrized by Chebyshev coefficients in the variable
/// u = 2i/n - 1, which keeps the constraint matrix well-conditioned at
/// degrees where the monomial basis has long since collapsed.
pub fn margin_at_degree(spec: &PartialFunctionSpec, d: u32) -> Result<f64> {
    let n = spec.n;
    if d as u64 > n {
        return Err(Error::contract("degree above n is never needed"));
    }
    let mut prob = Problem::new(OptimizationDirection::Maximize);
    let mu = prob.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    let coeffs: Vec<_> = (0..=d)
        .map(|_| prob.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    for i in 0..=n {
        let u = if n == 0 { 0.0 } else { 2.0 * i as f64 / n as f64 - 1.0 };
        // Chebyshev values T_0(u)..T_d(u)
        let mut row: Vec<(minilp::Variable, f64)> = Vec::with_capacity(d as usize + 2);
        let mut t_prev = 1.0;
        let mut t_cur = u;
        for (k, &v) in coeffs.iter().enumerate() {
            let t = match k {
                0 => 1.0,
                1 => u,
                _ => {
                    let t_next = 2.0 * u * t_cur - t_prev;
                    t_prev = t_cur;
                    t_cur = t_next;
                    t_next
                }
            };
            row.push((v, t));
        }
        let lo = if i == spec.l { 1.0 - spec.c } else { -spec.c };
        let hi = if i == spec.lprime { spec.c } else { 1.0 + spec.c };
        let mut ge_row = row.clone();
        ge_row.push((mu, -1.0));
        prob.add_constraint(&ge_row, ComparisonOp::Ge, lo);
        let mut le_row = row;
        le_row.push((mu, 1.0));
        prob.add_constraint(&le_row, ComparisonOp::Le, hi);
    }
    match prob.solve() {
        Ok(sol) => Ok(sol.objective()),
        Err(minilp::Error::Infeasible) => Ok(f64::NEG_INFINITY),
        Err(minilp::Error::Unbounded) => {
            Err(Error::Solver("margin program reported unbounded".into()))
        }
    }
}

fn witness_at_degree(spec: &PartialFunctionSpec, d: u32) -> Result<Vec<f64>> {
    // Re-solve the margin program and extract the coefficient vector.
    let n = spec.n;
    let mut prob = Problem::new(OptimizationDirection::Maximize);
    let mu = prob.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    let coeffs: Vec<_> = (0..=d)
        .map(|_| prob.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    for i in 0..=n {
        let u = 2.0 * i as f64 / n as f64 - 1.0;
        let mut row: Vec<(minilp::Variable, f64)> = Vec::with_capacity(d as usize + 2);
        let mut t_prev = 1.0;
        let mut t_cur = u;
        for (k, &v) in coeffs.iter().enumerate() {
            let t = match k {
                0 => 1.0,
                1 => u,
                _ => {
                    let t_next = 2.0 * u * t_cur - t_prev;
                    t_prev = t_cur;
                    t_cur = t_next;
                    t_next
                }
            };
            row.push((v, t));
        }
        let lo = if i == spec.l { 1.0 - spec.c } else { -spec.c };
        let hi = if i == spec.lprime { spec.c } else { 1.0 + spec.c };
        let mut ge_row = row.clone();
        ge_row.push((mu, -1.0));
        prob.add_constraint(&ge_row, ComparisonOp::Ge, lo);
        let mut le_row = row;
        le_row.push((mu, 1.0));
        prob.add_constraint(&le_row, ComparisonOp::Le, hi);
    }
    let sol = prob
        .solve()
        .map_err(|e| Error::Solver(format!("witness extraction failed: {e:?}")))?;
    Ok(coeffs.iter().map(|&v| sol[v]).collect())
}

/// A certified minimal degree: the witness polynomial at d* and the margins
/// on both sides of the threshold.
#[derive(Clone, Debug, Serialize)]
pub struct DegreeCertificate {
    pub spec: PartialFunctionSpec,
    pub d_star: u32,
    /// Optimal constraint margin at d* (>= -FEAS_TOL).
    pub margin: f64,
    /// Optimal constraint margin at d* - 1 (negative: infeasible).
    pub margin_below: f64,
    /// Set when the d*-1 program is within INDETERMINATE_TOL of feasible,
    /// so solver noise could plausibly flip the answer.
    pub indeterminate: bool,
    /// Chebyshev coefficients of the witness in u = 2x/n - 1.
    pub witness: Vec<f64>,
}

impl DegreeCertificate {
    /// The witness as a polynomial in u = 2x/n - 1.
    pub fn witness_poly(&self) -> Polynomial {
        Polynomial::chebyshev_basis(self.witness.clone())
    }

    /// Evaluate the witness at a point x of [0, n].
    pub fn witness_eval(&self, x: f64) -> f64 {
        self.witness_poly().eval(2.0 * x / self.spec.n as f64 - 1.0)
    }

    /// Smallest signed slack across all constraints (negative = violated).
    pub fn witness_margin(&self) -> f64 {
        let spec = &self.spec;
        let mut worst = f64::INFINITY;
        for i in 0..=spec.n {
            let v = self.witness_eval(i as f64);
            let lo = if i == spec.l { 1.0 - spec.c } else { -spec.c };
            let hi = if i == spec.lprime { spec.c } else { 1.0 + spec.c };
            worst = worst.min(v - lo).min(hi - v);
        }
        worst
    }
}

/// Least degree d such that the approximation program is feasible, found by
/// scanning d = 1, 2, ... and certified by the witness at d* together with
/// the (infeasible) margin at d* - 1.
pub fn minimal_degree(spec: &PartialFunctionSpec, max_degree: Option<u32>) -> Result<DegreeCertificate> {
    let cap = max_degree.unwrap_or(DEFAULT_MAX_DEGREE).min(spec.n as u32);
    let mut below = margin_at_degree(spec, 0)?;
    for d in 1..=cap {
        let m = margin_at_degree(spec, d)?;
        if m >= -FEAS_TOL {
            let witness = witness_at_degree(spec, d)?;
            return Ok(DegreeCertificate {
                spec: *spec,
                d_star: d,
                margin: m,
                margin_below: below,
                indeterminate: below >= -INDETERMINATE_TOL,
                witness,
            });
        }
        below = m;
    }
    Err(Error::contract(format!(
        "no feasible degree up to {cap} (raise --max-degree)"
    )))
}

/// One row of a degree-scaling sweep.
#[derive(Clone, Debug, Serialize)]
pub struct ScalingRow {
    pub n: u64,
    pub d_star: u32,
    pub theory_bound: f64,
    pub ratio: f64,
}

/// A fitted sweep of d*(n) against the theory bound across sizes.
#[derive(Clone, Debug, Serialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    pub fit: FitReport,
}

/// Certify a family of instances across sizes and fit d*(n) on log-log
/// axes. Any indeterminate certificate poisons the fit.
pub fn scaling_fit<F>(family: F, sizes: &[u64], max_degree: Option<u32>) -> Result<ScalingReport>
where
    F: Fn(u64) -> Result<PartialFunctionSpec>,
{
    if sizes.len() < 4 {
        return Err(Error::contract("scaling fit needs at least 4 sizes"));
    }
    let mut rows = Vec::with_capacity(sizes.len());
    let mut bad = Vec::new();
    for &n in sizes {
        let spec = family(n)?;
        let cert = minimal_degree(&spec, max_degree)?;
        if cert.indeterminate {
            bad.push(n as u32);
        }
        let tb = theory_bound(&spec);
        rows.push(ScalingRow {
            n,
            d_star: cert.d_star,
            theory_bound: tb,
            ratio: cert.d_star as f64 / tb,
        });
    }
    if !bad.is_empty() {
        return Err(Error::IndeterminateFit(bad));
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.d_star as f64).collect();
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let fit = log_log_fit(&xs, &ys, &ratios)?;
    Ok(ScalingReport { rows, fit })
}

/// The statistics problems that reduce to distinguishing two weight levels.
#[derive(Clone, Copy, Debug)]
pub enum ReductionProblem {
    /// k-th smallest to within Delta ranks (Delta <= n/4).
    Kth { n: u64, k: u64, delta: u64 },
    /// eps-approximate median, n odd.
    Median { n: u64, epsilon: f64 },
    /// Counting to within Delta (Delta <= n/6).
    Count { n: u64, t: u64, delta: f64 },
    /// Counting to within relative error eps.
    RelCount { n: u64, t: u64, epsilon: f64 },
}

/// A reduction instance: the target level pair and which branch produced it.
#[derive(Clone, Debug, Serialize)]
pub struct Reduction {
    pub spec: PartialFunctionSpec,
    pub branch: &'static str,
}

/// Map a statistics problem to the f_{l,l'} instance whose hardness bounds
/// it. Each arm mirrors one case of the corresponding reduction argument;
/// parameters outside every case give a no-reduction error.
pub fn reduction_params(problem: ReductionProblem) -> Result<Reduction> {
    match problem {
        ReductionProblem::Kth { n, k, delta } => {
            if n == 0 || k == 0 || k > n {
                return Err(Error::NoReduction("need 1 <= k <= n".into()));
            }
            if delta == 0 || 4 * delta > n {
                return Err(Error::NoReduction("kth reduction needs 1 <= Delta <= n/4".into()));
            }
            let (l, lp, branch) = if 2 * delta < k && k < n - 2 * delta {
                (n - k + delta, n - k - delta, "kth-central")
            } else if k <= 2 * delta {
                (n, n - k - delta, "kth-low")
            } else {
                (n - k + delta, 0, "kth-high")
            };
            let spec = PartialFunctionSpec::new(n, l, lp, DEFAULT_C)
                .map_err(|e| Error::NoReduction(format!("degenerate instance: {e}")))?;
            Ok(Reduction { spec, branch })
        }
        ReductionProblem::Median { n, epsilon } => {
            if n % 2 == 0 || n == 0 {
                return Err(Error::NoReduction("median reduction needs odd n".into()));
            }
            if !(0.0..1.0).contains(&epsilon) {
                return Err(Error::NoReduction("need epsilon in [0, 1)".into()));
            }
            let k = n.div_ceil(2);
            let delta = ((epsilon * n as f64 + 1.0) / 2.0).ceil() as u64;
            let inner = reduction_params(ReductionProblem::Kth { n, k, delta })?;
            Ok(Reduction {
                spec: inner.spec,
                branch: "median-via-kth",
            })
        }
        ReductionProblem::Count { n, t, delta } => {
            if t > n {
                return Err(Error::NoReduction("need t <= n".into()));
            }
            if !(delta > 0.0 && 6.0 * delta <= n as f64) {
                return Err(Error::NoReduction(
                    "count reduction needs 0 < Delta <= n/6".into(),
                ));
            }
            let td = t as f64;
            let step = (2.0 * delta).ceil() as u64;
            let (l, lp, branch) = if td <= 4.0 * delta {
                (t, t + step, "count-low")
            } else if (n - t) as f64 <= 4.0 * delta {
                (t, t - step, "count-high")
            } else if td <= n as f64 / 2.0 {
                (t, t + step, "count-mid-low")
            } else {
                (t, t - step, "count-mid-high")
            };
            let spec = PartialFunctionSpec::new(n, l, lp, DEFAULT_C)
                .map_err(|e| Error::NoReduction(format!("degenerate instance: {e}")))?;
            Ok(Reduction { spec, branch })
        }
        ReductionProblem::RelCount { n, t, epsilon } => {
            if t == 0 || t > n || epsilon <= 0.0 {
                return Err(Error::NoReduction(
                    "relative counting needs 1 <= t <= n and epsilon > 0".into(),
                ));
            }
            if epsilon * t as f64 <= 0.25 {
                let spec = PartialFunctionSpec::new(n, t, t + 1, DEFAULT_C)
                    .map_err(|e| Error::NoReduction(format!("degenerate instance: {e}")))?;
                Ok(Reduction {
                    spec,
                    branch: "relcount-absolute",
                })
            } else {
                let tp = ((1.0 - epsilon) * t as f64 / (1.0 + epsilon)).floor();
                if tp < 0.0 {
                    return Err(Error::NoReduction("relative window empty".into()));
                }
                let spec = PartialFunctionSpec::new(n, tp as u64, t, DEFAULT_C)
                    .map_err(|e| Error::NoReduction(format!("degenerate instance: {e}")))?;
                Ok(Reduction {
                    spec,
                    branch: "relcount-relative",
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_derived_quantities() {
        let s = PartialFunctionSpec::new(100, 51, 50, DEFAULT_C).unwrap();
        assert_eq!(s.delta_l(), 1);
        assert_eq!(s.m(), 51);
        // tie goes to l'
        let s = PartialFunctionSpec::new(4, 4, 0, DEFAULT_C).unwrap();
        assert_eq!(s.m(), 0);
    }

    #[test]
    fn tiny_minimal_degrees() {
        let s = PartialFunctionSpec::new(1, 1, 0, DEFAULT_C).unwrap();
        let cert = minimal_degree(&s, None).unwrap();
        assert_eq!(cert.d_star, 1);
        assert!(!cert.indeterminate);
        let s = PartialFunctionSpec::new(4, 4, 0, DEFAULT_C).unwrap();
        assert_eq!(minimal_degree(&s, None).unwrap().d_star, 1);
    }
}
