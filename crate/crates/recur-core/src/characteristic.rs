//! The characteristic function g(x) = sum a_i·b_i^x and its root.
//!
//! Every ratio lies in (0, 1), so g is strictly decreasing, continuous,
//! tends to +inf as x -> -inf and to 0 as x -> +inf; the characteristic
//! equation g(x) = 1 therefore has exactly one real solution r. The root
//! may be negative (sum a_i < 1) or zero (sum a_i = 1). It depends only
//! on the recursive terms, never on the driving term, `n0` or `d`.
//!
//! `solve_root` uses the closed form r = ln(a)/ln(1/b) for single-term
//! recurrences and otherwise brackets the root and bisects, with a Newton
//! polish once the bracket is narrow. Bisection keeps the invariant
//! g(lo) >= 1 >= g(hi), so the reported bracket always contains r.

use std::fmt;

use num_rational::BigRational;
use num_traits::One;

use crate::model::RecurrenceSpec;

/// Default residual tolerance for [`solve_root`].
pub const DEFAULT_TOL: f64 = 1e-12;

/// Newton polishing starts once the bracket is this narrow.
const POLISH_WIDTH: f64 = 1e-6;

/// Bracket expansion gives up beyond this magnitude. Unreachable for
/// validated specs (finite coefficients force a root well inside).
const BRACKET_LIMIT: f64 = 1024.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RootMethod {
    ClosedForm,
    Bisection,
}

/// The solved characteristic root with its convergence evidence.
#[derive(Clone, Debug)]
pub struct RootResult {
    pub r: f64,
    /// |g(r) - 1|
    pub residual: f64,
    /// Final interval [lo, hi] with g(lo) >= 1 >= g(hi).
    pub bracket: (f64, f64),
    pub iterations: u32,
    pub method: RootMethod,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RootError {
    /// No bracket within |x| <= 1024; cannot occur for validated specs.
    BracketOverflow,
}

impl fmt::Display for RootError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RootError::BracketOverflow => write!(f, "no root bracket within |x| <= 1024"),
        }
    }
}

impl std::error::Error for RootError {}

/// Cached per-term view (a_i, ln b_i) used by the numeric paths.
struct CharFn {
    pairs: Vec<(f64, f64)>,
}

impl CharFn {
    fn new(spec: &RecurrenceSpec) -> Self {
        let pairs = spec
            .terms
            .iter()
            .map(|t| (t.a.to_f64(), t.b.to_f64().ln()))
            .collect();
        CharFn { pairs }
    }

    fn g(&self, x: f64) -> f64 {
        self.pairs.iter().map(|&(a, ln_b)| a * (x * ln_b).exp()).sum()
    }

    fn g_prime(&self, x: f64) -> f64 {
        self.pairs
            .iter()
            .map(|&(a, ln_b)| a * (x * ln_b).exp() * ln_b)
            .sum()
    }
}

/// g(x) = sum a_i·b_i^x; strictly positive and strictly decreasing.
pub fn g(spec: &RecurrenceSpec, x: f64) -> f64 {
    CharFn::new(spec).g(x)
}

/// g'(x) = sum a_i·b_i^x·ln(b_i); strictly negative since every b_i < 1.
pub fn g_prime(spec: &RecurrenceSpec, x: f64) -> f64 {
    CharFn::new(spec).g_prime(x)
}

/// g evaluated exactly at an integer point, in rational arithmetic.
/// Decides r = alpha (equivalently g(alpha) = 1) with no tolerance when
/// alpha is a machine-size nonnegative integer.
pub fn g_exact_at_int(spec: &RecurrenceSpec, x: u32) -> BigRational {
    let mut sum = BigRational::new(0.into(), 1.into());
    for term in &spec.terms {
        sum += term.a.exact() * pow_rational(term.b.exact(), x);
    }
    sum
}

fn pow_rational(base: &BigRational, exp: u32) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

/// Solves g(x) = 1 with the default tolerance.
pub fn solve_root(spec: &RecurrenceSpec) -> Result<RootResult, RootError> {
    solve_root_with_tol(spec, DEFAULT_TOL)
}

/// Solves g(x) = 1: closed form for k = 1, bracketed bisection plus
/// Newton polish otherwise. Stops when the residual drops to `tol` or
/// the bracket narrows to `tol`/10.
pub fn solve_root_with_tol(spec: &RecurrenceSpec, tol: f64) -> Result<RootResult, RootError> {
    let f = CharFn::new(spec);
    if spec.terms.len() == 1 {
        let term = &spec.terms[0];
        let r = term.a.to_f64().ln() / (1.0 / term.b.to_f64()).ln();
        let residual = (f.g(r) - 1.0).abs();
        let bracket = closed_form_bracket(&f, r, tol);
        return Ok(RootResult {
            r,
            residual,
            bracket,
            iterations: 0,
            method: RootMethod::ClosedForm,
        });
    }
    bisect(&f, tol).map(|(r, residual, bracket, iterations)| RootResult {
        r,
        residual,
        bracket,
        iterations,
        method: RootMethod::Bisection,
    })
}

/// Test hook: forces the bracketing path even for k = 1, so the closed
/// form can be cross-checked against the guaranteed method.
pub fn solve_root_bisection(spec: &RecurrenceSpec, tol: f64) -> Result<RootResult, RootError> {
    let f = CharFn::new(spec);
    bisect(&f, tol).map(|(r, residual, bracket, iterations)| RootResult {
        r,
        residual,
        bracket,
        iterations,
        method: RootMethod::Bisection,
    })
}

/// Widens a tiny interval around the closed-form root until it straddles
/// g = 1 (a handful of steps; g is monotone).
fn closed_form_bracket(f: &CharFn, r: f64, tol: f64) -> (f64, f64) {
    let mut h = tol.max(f64::EPSILON * r.abs().max(1.0));
    loop {
        let (lo, hi) = (r - h, r + h);
        if f.g(lo) >= 1.0 && 1.0 >= f.g(hi) {
            return (lo, hi);
        }
        h *= 2.0;
    }
}

fn bisect(f: &CharFn, tol: f64) -> Result<(f64, f64, (f64, f64), u32), RootError> {
    let width_tol = tol / 10.0;
    let mut iterations = 0u32;

    // Start from [0, 1] and double the failing side until it brackets.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut step = 1.0f64;
    while f.g(lo) < 1.0 {
        hi = lo;
        lo -= step;
        step *= 2.0;
        iterations += 1;
        if lo < -BRACKET_LIMIT {
            return Err(RootError::BracketOverflow);
        }
    }
    step = 1.0;
    while f.g(hi) > 1.0 {
        lo = hi;
        hi += step;
        step *= 2.0;
        iterations += 1;
        if hi > BRACKET_LIMIT {
            return Err(RootError::BracketOverflow);
        }
    }

    let mut x = 0.5 * (lo + hi);
    let mut resid = (f.g(x) - 1.0).abs();
    let mut polished = false;
    loop {
        if resid <= tol || (hi - lo) <= width_tol {
            break;
        }
        // Newton from the bracket midpoint once the interval is narrow;
        // every iterate still updates the bracket, and a step leaving it
        // falls back to plain bisection.
        let mid = if !polished && (hi - lo) <= POLISH_WIDTH {
            polished = true;
            let guess = 0.5 * (lo + hi);
            let step = (f.g(guess) - 1.0) / f.g_prime(guess);
            let newton = guess - step;
            if newton > lo && newton < hi {
                newton
            } else {
                guess
            }
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            // interval no longer splittable in f64
            break;
        }
        iterations += 1;
        let gm = f.g(mid);
        if gm >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        x = mid;
        resid = (gm - 1.0).abs();
    }

    // Report the endpoint with the smaller residual.
    for cand in [lo, hi] {
        let rc = (f.g(cand) - 1.0).abs();
        if rc < resid {
            x = cand;
            resid = rc;
        }
    }
    Ok((x, resid, (lo, hi), iterations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate, RawRecurrence};
    use crate::number::Real;
    use proptest::prelude::*;

    fn real(p: i64, q: i64) -> Real {
        Real::from_ratio(p, q).unwrap()
    }

    fn spec_with_terms(terms: &[(i64, i64, i64, i64)]) -> RecurrenceSpec {
        // (a_num, a_den, b_num, b_den)
        let terms = terms
            .iter()
            .map(|&(an, ad, bn, bd)| (real(an, ad), real(bn, bd)))
            .collect();
        validate(&RawRecurrence {
            c: Real::one(),
            alpha: Real::one(),
            beta: Real::zero(),
            terms,
            n0: None,
            d: Real::one(),
        })
        .unwrap()
    }

    #[test]
    fn g_examples() {
        let s = spec_with_terms(&[(1, 1, 1, 2)]);
        assert_eq!(g(&s, 1.0), 0.5);
        let s = spec_with_terms(&[(2, 1, 1, 2)]);
        assert_eq!(g(&s, 1.0), 1.0);
        // y + y^2 = 1 at y = (sqrt(5)-1)/2, so r = -log2(y)
        let s = spec_with_terms(&[(1, 1, 1, 2), (1, 1, 1, 4)]);
        assert!((g(&s, 0.6942419) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn g_prime_examples() {
        let s = spec_with_terms(&[(1, 1, 1, 2)]);
        assert!((g_prime(&s, 0.0) - 0.5f64.ln()).abs() < 1e-15);
        let s = spec_with_terms(&[(2, 1, 1, 2)]);
        assert!((g_prime(&s, 1.0) - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn closed_form_roots() {
        let s = spec_with_terms(&[(3, 1, 1, 2)]);
        let root = solve_root(&s).unwrap();
        assert_eq!(root.method, RootMethod::ClosedForm);
        assert!((root.r - 3f64.log2()).abs() < 1e-10);

        let s = spec_with_terms(&[(2, 1, 1, 2)]);
        let root = solve_root(&s).unwrap();
        assert_eq!(root.r, 1.0);

        // negative root when the coefficients sum below 1
        let s = spec_with_terms(&[(1, 2, 1, 2)]);
        let root = solve_root(&s).unwrap();
        assert!((root.r + 1.0).abs() < 1e-12);

        // zero root when they sum to exactly 1
        let s = spec_with_terms(&[(1, 1, 1, 2)]);
        assert_eq!(solve_root(&s).unwrap().r, 0.0);
    }

    #[test]
    fn selection_root_pinned_by_independent_bisection() {
        let s = spec_with_terms(&[(1, 1, 1, 5), (1, 1, 7, 10)]);
        let root = solve_root(&s).unwrap();
        assert_eq!(root.method, RootMethod::Bisection);
        assert!(root.r > 0.8396 && root.r < 0.8400, "r = {}", root.r);

        // independent oracle: plain midpoint bisection on 0.2^x + 0.7^x
        let gg = |x: f64| 0.2f64.powf(x) + 0.7f64.powf(x);
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if gg(mid) >= 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((root.r - lo).abs() < 1e-11, "solver {} vs oracle {}", root.r, lo);
        // frozen value from the oracle
        assert!((root.r - 0.8397803044678211).abs() < 1e-11);
    }

    #[test]
    fn root_result_invariants_hold() {
        for s in [
            spec_with_terms(&[(3, 1, 1, 2)]),
            spec_with_terms(&[(1, 1, 1, 5), (1, 1, 7, 10)]),
            spec_with_terms(&[(1, 1, 1, 2), (1, 1, 1, 4)]),
            spec_with_terms(&[(1, 2, 1, 2), (1, 4, 3, 4)]),
        ] {
            let root = solve_root(&s).unwrap();
            let (lo, hi) = root.bracket;
            assert!(root.residual <= 1e-12 || (hi - lo) <= 1e-13);
            assert!(g(&s, lo) >= 1.0 && 1.0 >= g(&s, hi));
            assert!(lo <= root.r && root.r <= hi);
        }
    }

    #[test]
    fn bisection_agrees_with_closed_form() {
        for (a, b) in [(2i64, 2i64), (3, 2), (4, 2), (7, 4), (1, 2), (5, 3)] {
            let s = spec_with_terms(&[(a, 1, 1, b)]);
            let closed = solve_root(&s).unwrap();
            let forced = solve_root_bisection(&s, DEFAULT_TOL).unwrap();
            assert_eq!(forced.method, RootMethod::Bisection);
            assert!(
                (closed.r - forced.r).abs() < 1e-10,
                "a={a} b=1/{b}: {} vs {}",
                closed.r,
                forced.r
            );
        }
    }

    #[test]
    fn root_ignores_everything_but_the_terms() {
        let base = spec_with_terms(&[(1, 1, 1, 5), (1, 1, 7, 10)]);
        let r0 = solve_root(&base).unwrap().r;
        let mut raw = base.to_raw();
        raw.c = real(17, 3);
        raw.alpha = Real::from_int(2);
        raw.beta = Real::one();
        raw.n0 = Some(40);
        raw.d = real(9, 2);
        let changed = validate(&raw).unwrap();
        let r1 = solve_root(&changed).unwrap().r;
        assert_eq!(r0.to_bits(), r1.to_bits());
    }

    #[test]
    fn merge_invariance() {
        let merged = spec_with_terms(&[(2, 1, 1, 2)]);
        let split = spec_with_terms(&[(1, 1, 1, 2), (1, 1, 1, 2)]);
        let a = solve_root(&merged).unwrap().r;
        let b = solve_root(&split).unwrap().r;
        assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn exact_g_at_integers() {
        let s = spec_with_terms(&[(1, 1, 3, 10), (1, 1, 7, 10)]);
        assert!(g_exact_at_int(&s, 1).is_one());
        let s = spec_with_terms(&[(1, 1, 1, 5), (1, 1, 7, 10)]);
        assert_eq!(g_exact_at_int(&s, 1), BigRational::new(9.into(), 10.into()));
    }

    proptest! {
        #[test]
        fn g_is_strictly_decreasing(
            a1 in 1i64..40, a2 in 1i64..40,
            b1 in 1i64..18, b2 in 1i64..18,
            x1 in -5.0f64..5.0, dx in 1e-6f64..10.0,
        ) {
            let s = spec_with_terms(&[(a1, 10, b1, 20), (a2, 10, b2, 20)]);
            let x2 = x1 + dx;
            prop_assert!(g(&s, x1) > g(&s, x2));
            prop_assert!(g_prime(&s, x1) < 0.0);
        }

        #[test]
        fn root_is_consistent(
            a1 in 1i64..40, a2 in 1i64..40,
            b1 in 1i64..18, b2 in 1i64..18,
        ) {
            let s = spec_with_terms(&[(a1, 10, b1, 20), (a2, 10, b2, 20)]);
            let root = solve_root(&s).unwrap();
            if root.residual <= DEFAULT_TOL {
                prop_assert!(g(&s, root.r - 10.0 * DEFAULT_TOL) > 1.0);
                prop_assert!(g(&s, root.r + 10.0 * DEFAULT_TOL) < 1.0);
            }
        }
    }
}
