//! Univariate polynomial toolkit: symmetrization of multilinear polynomials,
//! Chebyshev polynomials, the uniform norm on [-1, 1], and checkers for the
//! Markov, Bernstein, trigonometric-Bernstein, integer-growth, and Chebyshev
//! comparison inequalities. The checkers verify theorems numerically: a
//! `Violated` report indicates an implementation bug, not new mathematics.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

/// Relative slack granted to the inequality checkers; the inequalities are
/// exact, so the only admissible slack is floating-point error.
pub const CHECK_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Basis {
    Monomial,
    Chebyshev,
}

/// A univariate polynomial with coefficients in a declared basis.
/// Trailing zero coefficients are trimmed so `degree` is honest.
#[derive(Clone, Debug)]
pub struct Polynomial {
    coeffs: Vec<f64>,
    basis: Basis,
}

fn trimmed(mut coeffs: Vec<f64>) -> Vec<f64> {
    while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
        coeffs.pop();
    }
    if coeffs.is_empty() {
        coeffs.push(0.0);
    }
    coeffs
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>, basis: Basis) -> Self {
        Self {
            coeffs: trimmed(coeffs),
            basis,
        }
    }

    pub fn monomial(coeffs: Vec<f64>) -> Self {
        Self::new(coeffs, Basis::Monomial)
    }

    pub fn chebyshev_basis(coeffs: Vec<f64>) -> Self {
        Self::new(coeffs, Basis::Chebyshev)
    }

    pub fn zero() -> Self {
        Self::monomial(vec![0.0])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs == [0.0]
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    /// Evaluate at x. Horner for the monomial basis; Clenshaw for the
    /// Chebyshev basis (the recurrence is valid for |x| > 1 as well).
    pub fn eval(&self, x: f64) -> f64 {
        match self.basis {
            Basis::Monomial => {
                let mut acc = 0.0;
                for &c in self.coeffs.iter().rev() {
                    acc = acc * x + c;
                }
                acc
            }
            Basis::Chebyshev => {
                let mut b1 = 0.0;
                let mut b2 = 0.0;
                for &c in self.coeffs.iter().skip(1).rev() {
                    let b0 = c + 2.0 * x * b1 - b2;
                    b2 = b1;
                    b1 = b0;
                }
                self.coeffs[0] + x * b1 - b2
            }
        }
    }

    /// Derivative in the same basis.
    pub fn derivative(&self) -> Polynomial {
        if self.degree() == 0 {
            return Polynomial::new(vec![0.0], self.basis);
        }
        match self.basis {
            Basis::Monomial => {
                let d: Vec<f64> = self
                    .coeffs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, &c)| k as f64 * c)
                    .collect();
                Polynomial::new(d, Basis::Monomial)
            }
            Basis::Chebyshev => {
                // c'_{k-1} = c'_{k+1} + 2k c_k, downward, then halve c'_0.
                let n = self.coeffs.len();
                let mut d = vec![0.0; n - 1];
                let mut next = 0.0; // c'_{k+1}
                let mut next2 = 0.0; // c'_{k+2}, shifted through the loop
                for k in (1..n).rev() {
                    let val = next2 + 2.0 * k as f64 * self.coeffs[k];
                    d[k - 1] = val;
                    next2 = next;
                    next = val;
                }
                d[0] /= 2.0;
                Polynomial::new(d, Basis::Chebyshev)
            }
        }
    }

    /// Convert to the monomial basis. Intended for small degrees; at high
    /// degree the monomial basis is ill-conditioned and the Chebyshev form
    /// should be kept.
    pub fn to_monomial(&self) -> Polynomial {
        match self.basis {
            Basis::Monomial => self.clone(),
            Basis::Chebyshev => {
                let deg = self.degree();
                let mut acc = vec![0.0; deg + 1];
                // t_prev, t_cur are monomial coefficient vectors of T_{k-1}, T_k
                let mut t_prev = vec![1.0];
                let mut t_cur = vec![0.0, 1.0];
                for (k, &c) in self.coeffs.iter().enumerate() {
                    let t_k: &[f64] = match k {
                        0 => &t_prev,
                        1 => &t_cur,
                        _ => {
                            // T_{k} = 2x T_{k-1} - T_{k-2}
                            let mut t_next = vec![0.0; k + 1];
                            for (i, &v) in t_cur.iter().enumerate() {
                                t_next[i + 1] += 2.0 * v;
                            }
                            for (i, &v) in t_prev.iter().enumerate() {
                                t_next[i] -= v;
                            }
                            t_prev = std::mem::replace(&mut t_cur, t_next);
                            &t_cur
                        }
                    };
                    for (i, &v) in t_k.iter().enumerate() {
                        acc[i] += c * v;
                    }
                }
                let scale = acc.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
                for v in &mut acc {
                    if v.abs() <= 1e-12 * scale {
                        *v = 0.0;
                    }
                }
                Polynomial::monomial(acc)
            }
        }
    }
}

/// The degree-d Chebyshev polynomial T_d, kept in the Chebyshev basis.
pub fn chebyshev(d: usize) -> Polynomial {
    let mut c = vec![0.0; d + 1];
    c[d] = 1.0;
    Polynomial::chebyshev_basis(c)
}

fn bisect_root(p: &Polynomial, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = p.eval(lo);
    for _ in 0..90 {
        let mid = 0.5 * (lo + hi);
        let fm = p.eval(mid);
        if fm == 0.0 {
            return mid;
        }
        if (flo < 0.0) == (fm < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Maximum of |p| over [a, b]: evaluate at the endpoints, at a dense grid,
/// and at every root of p' isolated by sign changes on the grid and pinned
/// down by bisection. Every interior extremum of |p| is a root of p', so
/// the grid only needs to be fine enough to separate consecutive roots.
pub fn max_abs_on(p: &Polynomial, a: f64, b: f64) -> f64 {
    assert!(a <= b, "empty interval");
    if a == b || p.degree() == 0 {
        return p.eval(a).abs().max(p.eval(b).abs());
    }
    let dp = p.derivative();
    let n = (4096usize).max(128 * (p.degree() + 1));
    let step = (b - a) / n as f64;
    let mut best = p.eval(a).abs().max(p.eval(b).abs());
    let mut prev_x = a;
    let mut prev_d = dp.eval(a);
    for i in 1..=n {
        let x = if i == n { b } else { a + step * i as f64 };
        best = best.max(p.eval(x).abs());
        let d = dp.eval(x);
        if (prev_d < 0.0) != (d < 0.0) || prev_d == 0.0 {
            let r = if prev_d == 0.0 {
                prev_x
            } else {
                bisect_root(&dp, prev_x, x)
            };
            best = best.max(p.eval(r).abs());
        }
        prev_x = x;
        prev_d = d;
    }
    best
}

/// Uniform norm over [-1, 1].
pub fn norm(p: &Polynomial) -> f64 {
    max_abs_on(p, -1.0, 1.0)
}

/// A multilinear polynomial over {0,1}^n: a map from index subsets (bit
/// masks) to coefficients. Every monomial is square-free by construction.
#[derive(Clone, Debug)]
pub struct MultilinearPolynomial {
    n: usize,
    terms: BTreeMap<u64, f64>,
}

impl MultilinearPolynomial {
    pub fn new(n: usize, terms: BTreeMap<u64, f64>) -> Result<Self> {
        if n > 60 {
            return Err(Error::contract("arity must be at most 60"));
        }
        for &mask in terms.keys() {
            if n < 64 && mask >> n != 0 {
                return Err(Error::contract("term indexes a variable out of range"));
            }
        }
        Ok(Self { n, terms })
    }

    pub fn arity(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &BTreeMap<u64, f64> {
        &self.terms
    }

    pub fn degree(&self) -> usize {
        self.terms
            .iter()
            .filter(|&(_, &c)| c != 0.0)
            .map(|(&m, _)| m.count_ones() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Evaluate at the boolean point given by a bit mask.
    pub fn eval_mask(&self, x: u64) -> f64 {
        self.terms
            .iter()
            .filter(|&(&m, _)| m & x == m)
            .map(|(_, &c)| c)
            .sum()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut v = 1.0;
    for i in 0..k {
        v = v * (n - i) as f64 / (i + 1) as f64;
    }
    v
}

/// Symmetrize: the unique univariate q with deg(q) <= deg(p) satisfying
/// q(|X|) = average of p over all permutations of the coordinates of X.
/// For a subset S of size k the permutation average of its monomial at a
/// weight-s point is C(s,k)/C(n,k), so with a_k the sum of coefficients
/// over subsets of size k,
///     q(s) = sum_k a_k * C(s,k) / C(n,k),
/// and C(s,k) expands through falling factorials. This sidesteps the n!
/// average entirely.
pub fn symmetrize(p: &MultilinearPolynomial) -> Polynomial {
    let n = p.arity();
    let mut a = vec![0.0; n + 1];
    for (&mask, &c) in p.terms() {
        a[mask.count_ones() as usize] += c;
    }
    let mut q = vec![0.0; n + 1];
    // ff holds the monomial coefficients of s(s-1)...(s-k+1)
    let mut ff = vec![1.0];
    for (k, &ak) in a.iter().enumerate() {
        if k > 0 {
            // multiply ff by (s - (k-1))
            let shift = (k - 1) as f64;
            let mut next = vec![0.0; ff.len() + 1];
            for (i, &v) in ff.iter().enumerate() {
                next[i + 1] += v;
                next[i] -= shift * v;
            }
            ff = next;
        }
        if ak != 0.0 {
            let mut kfac = 1.0;
            for i in 1..=k {
                kfac *= i as f64;
            }
            let w = ak / (binomial(n, k) * kfac);
            for (i, &v) in ff.iter().enumerate() {
                q[i] += w * v;
            }
        }
    }
    let scale = q.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    for v in &mut q {
        if v.abs() <= 1e-12 * scale {
            *v = 0.0;
        }
    }
    Polynomial::monomial(q)
}

/// A real trigonometric polynomial a0 + sum_i (a_i cos(i x) + b_i sin(i x)).
#[derive(Clone, Debug)]
pub struct TrigPolynomial {
    a0: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl TrigPolynomial {
    pub fn new(a0: f64, mut cos: Vec<f64>, mut sin: Vec<f64>) -> Self {
        while cos.last() == Some(&0.0) {
            cos.pop();
        }
        while sin.last() == Some(&0.0) {
            sin.pop();
        }
        Self { a0, cos, sin }
    }

    pub fn degree(&self) -> usize {
        self.cos.len().max(self.sin.len())
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut v = self.a0;
        for (i, &c) in self.cos.iter().enumerate() {
            v += c * ((i + 1) as f64 * x).cos();
        }
        for (i, &s) in self.sin.iter().enumerate() {
            v += s * ((i + 1) as f64 * x).sin();
        }
        v
    }

    pub fn derivative(&self) -> TrigPolynomial {
        let d = self.degree();
        let mut cos = vec![0.0; d];
        let mut sin = vec![0.0; d];
        for (i, &c) in self.cos.iter().enumerate() {
            sin[i] -= (i + 1) as f64 * c;
        }
        for (i, &s) in self.sin.iter().enumerate() {
            cos[i] += (i + 1) as f64 * s;
        }
        TrigPolynomial::new(0.0, cos, sin)
    }

    /// Maximum of |t| over [-pi, pi]: dense grid plus parabolic refinement
    /// around every local grid maximum.
    pub fn sup_norm(&self) -> f64 {
        let d = self.degree().max(1);
        let n = (1usize << 14).max(2048 * d);
        let step = 2.0 * std::f64::consts::PI / n as f64;
        let vals: Vec<f64> = (0..=n)
            .map(|i| self.eval(-std::f64::consts::PI + step * i as f64).abs())
            .collect();
        let mut best = 0.0f64;
        for i in 0..=n {
            let v = vals[i];
            best = best.max(v);
            if i > 0 && i < n && v >= vals[i - 1] && v >= vals[i + 1] {
                // parabola through the three points around the grid max
                let denom = vals[i - 1] - 2.0 * v + vals[i + 1];
                if denom < 0.0 {
                    let t = 0.5 * (vals[i - 1] - vals[i + 1]) / denom;
                    let x = -std::f64::consts::PI + step * (i as f64 + t);
                    best = best.max(self.eval(x).abs());
                }
            }
        }
        best
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CheckStatus {
    /// The inequality held within tolerance.
    Verified,
    /// The inequality failed beyond tolerance (an implementation bug).
    Violated,
    /// The input did not satisfy the inequality's hypothesis; no claim made.
    PreconditionFailed,
}

/// Outcome of one inequality check: the extremal value achieved, the bound
/// it must stay under, and their ratio.
#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub achieved: f64,
    pub bound: f64,
    pub ratio: f64,
    pub status: CheckStatus,
}

impl CheckReport {
    fn verdict(check: &str, achieved: f64, bound: f64) -> Self {
        let ratio = if achieved == 0.0 {
            0.0
        } else {
            achieved / bound
        };
        let status = if ratio <= 1.0 + CHECK_TOL {
            CheckStatus::Verified
        } else {
            CheckStatus::Violated
        };
        Self {
            check: check.to_string(),
            achieved,
            bound,
            ratio,
            status,
        }
    }

    fn precondition_failed(check: &str) -> Self {
        Self {
            check: check.to_string(),
            achieved: f64::NAN,
            bound: f64::NAN,
            ratio: f64::NAN,
            status: CheckStatus::PreconditionFailed,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Verified
    }
}

/// Markov: max |p'| over [-1,1] is at most d^2 times the norm of p.
pub fn check_markov(p: &Polynomial) -> Result<CheckReport> {
    let d = p.degree();
    if d == 0 {
        return Err(Error::contract("markov check needs degree >= 1"));
    }
    let achieved = norm(&p.derivative());
    let bound = (d * d) as f64 * norm(p);
    Ok(CheckReport::verdict("markov", achieved, bound))
}

/// Bernstein: sqrt(1-x^2) |p'(x)| is at most d times the norm of p.
/// The weighted maximum is found exactly through the polynomial
/// h(x) = (1-x^2) p'(x)^2, whose maximum is the square of the target.
pub fn check_bernstein(p: &Polynomial) -> CheckReport {
    let d = p.degree();
    if d == 0 {
        return CheckReport::verdict("bernstein", 0.0, 0.0);
    }
    let dp = p.derivative().to_monomial();
    let k = dp.coeffs().len();
    // h = (1 - x^2) * dp^2
    let mut sq = vec![0.0; 2 * k - 1];
    for (i, &a) in dp.coeffs().iter().enumerate() {
        for (j, &b) in dp.coeffs().iter().enumerate() {
            sq[i + j] += a * b;
        }
    }
    let mut h = vec![0.0; sq.len() + 2];
    for (i, &v) in sq.iter().enumerate() {
        h[i] += v;
        h[i + 2] -= v;
    }
    let achieved = max_abs_on(&Polynomial::monomial(h), -1.0, 1.0).sqrt();
    let bound = d as f64 * norm(p);
    CheckReport::verdict("bernstein", achieved, bound)
}

/// Bernstein for trigonometric polynomials: max |t'| over [-pi,pi] is at
/// most d times the sup norm of t, where d is the claimed degree.
pub fn check_trig_bernstein(t: &TrigPolynomial, d: usize) -> Result<CheckReport> {
    if d == 0 && !t.is_constant() {
        return Err(Error::contract(
            "claimed degree 0 for a nonconstant trigonometric polynomial",
        ));
    }
    if d < t.degree() {
        return Err(Error::contract("claimed degree below actual degree"));
    }
    if d == 0 {
        return Ok(CheckReport::verdict("trig-bernstein", 0.0, 0.0));
    }
    let achieved = t.derivative().sup_norm();
    let bound = d as f64 * t.sup_norm();
    Ok(CheckReport::verdict("trig-bernstein", achieved, bound))
}

/// Growth: a degree-d polynomial bounded by c in absolute value at every
/// integer 0..n (d <= n) is bounded by 2^d c on all of [0, n].
pub fn check_growth(p: &Polynomial, n: u64, c: f64) -> CheckReport {
    let d = p.degree();
    if d as u64 > n || c < 0.0 {
        return CheckReport::precondition_failed("growth");
    }
    for i in 0..=n {
        if p.eval(i as f64).abs() > c * (1.0 + CHECK_TOL) + 1e-12 {
            return CheckReport::precondition_failed("growth");
        }
    }
    let achieved = max_abs_on(p, 0.0, n as f64);
    let bound = 2.0f64.powi(d as i32) * c;
    CheckReport::verdict("growth", achieved, bound)
}

/// Chebyshev comparison: with c the maximum of |p| on [-a, a], verify
/// |p(x)| <= c |T_d(x/a)| on a grid of |x| in (a, 1].
pub fn check_cheb_bound(p: &Polynomial, a: f64) -> Result<CheckReport> {
    if a <= 0.0 {
        return Err(Error::contract("cheb bound needs a > 0"));
    }
    if a > 1.0 {
        return Err(Error::contract("cheb bound compares on (a, 1]; need a <= 1"));
    }
    let d = p.degree();
    let c = max_abs_on(p, -a, a);
    if c == 0.0 {
        // only the zero polynomial is flat on an interval
        return Ok(CheckReport::verdict("cheb-bound", 0.0, 0.0));
    }
    let t = chebyshev(d);
    let grid = 4000;
    let mut worst_ratio = 0.0f64;
    let mut achieved = 0.0;
    let mut bound = 1.0;
    for i in 1..=grid {
        let x = a + (1.0 - a) * i as f64 / grid as f64;
        for sx in [x, -x] {
            let pv = p.eval(sx).abs();
            let tv = c * t.eval(sx / a).abs();
            if tv > 0.0 && pv / tv > worst_ratio {
                worst_ratio = pv / tv;
                achieved = pv;
                bound = tv;
            }
        }
    }
    let mut rep = CheckReport::verdict("cheb-bound", achieved, bound);
    rep.ratio = worst_ratio;
    rep.status = if worst_ratio <= 1.0 + CHECK_TOL {
        CheckStatus::Verified
    } else {
        CheckStatus::Violated
    };
    Ok(rep)
}
