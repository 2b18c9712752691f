//! Witness constants for the upper bound T(n) = O(n^r), and a
//! finite-range verifier for the induction they support.
//!
//! In the dominant-root case with beta = 0 and integer r, the bound
//! T(n) = O(n^r) is witnessed by explicit constants: with
//! `S(n) = f1·n^r - f2·n^(r-1/2) - f3·n^alpha` and
//!
//! ```text
//! f3 = c / (g(alpha) - 1)            (g(alpha) > 1 since r > alpha)
//! f2 = any positive constant
//! f1 = f2 + f3 + 1
//! m0 = max { n0, 1/b1, (f1·2^r·(1/b1) / (f2·(g(r-1/2)-1)))^2 }
//! M  = max over n < m0 of {1, T(n)}
//! ```
//!
//! (b1 is the smallest ratio), one shows by induction that the
//! normalized recurrence R, equal to 1 below m0 and to
//! `c·n^alpha + sum a_i·R(ceil(b_i·n))` from m0 up, satisfies
//! T(n) <= M·R(n) <= M·S(n) <= M·f1·n^r for all n.
//!
//! [`verify`] checks every link of that chain over a finite range: the
//! base rows R(n) = 1 <= S(n) below m0, the induction sweep R <= S up to
//! the horizon, the two closing inequalities that make the induction
//! step go through (`c <= f3·(g(alpha)-1)`, an identity by the choice of
//! f3, and the half-power absorption at n = ceil(m0), which only
//! improves as n grows since the right side carries an extra n^(1/2)),
//! and the sandwich T <= M·R itself.
//!
//! The construction covers any number of terms, not just three; only the
//! smallest ratio enters the constants. No lower-bound witness is
//! constructed; in its place the verifier checks the crude floor
//! T(n) >= c·n^alpha for n >= n0.

use std::fmt;

use crate::characteristic::{g, RootResult};
use crate::evaluator::{self, EvalError};
use crate::model::RecurrenceSpec;

/// Tolerance for reading the solved root as an integer.
const ROOT_INT_TOL: f64 = 1e-9;

/// Relative slack for the closing-identity check (held with equality by
/// construction, up to a few ulps).
const IDENTITY_RTOL: f64 = 1e-12;

/// Witness constants for the upper bound of one recurrence.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub m0: f64,
    /// M = max over n < m0 of {1, T(n)}.
    pub big_m: f64,
    /// The characteristic root, rounded to the integer it must be.
    pub r: f64,
    pub alpha: f64,
    /// Smallest ratio of the spec (its terms are sorted ascending).
    pub b_min: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NotApplicableReason {
    BetaNonzero,
    RootNotDominant,
    RootNotInteger,
}

impl fmt::Display for NotApplicableReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NotApplicableReason::BetaNonzero => "BetaNonzero",
            NotApplicableReason::RootNotDominant => "RootNotDominant",
            NotApplicableReason::RootNotInteger => "RootNotInteger",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub enum CertificateError {
    /// The spec is outside the certified fragment (beta = 0, integer
    /// r > alpha).
    NotApplicable(NotApplicableReason),
    InvalidParameter(String),
    Eval(EvalError),
}

impl fmt::Display for CertificateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CertificateError::NotApplicable(reason) => {
                write!(f, "certificate not applicable: {reason}")
            }
            CertificateError::InvalidParameter(msg) => write!(f, "{msg}"),
            CertificateError::Eval(e) => write!(f, "evaluation failed: {e}"),
        }
    }
}

impl std::error::Error for CertificateError {}

impl From<EvalError> for CertificateError {
    fn from(e: EvalError) -> Self {
        CertificateError::Eval(e)
    }
}

/// Builds the witness constants for a solved spec. `f2_choice` is the
/// free positive constant (1 is the conventional pick; larger values
/// shrink m0).
pub fn construct(
    spec: &RecurrenceSpec,
    root: &RootResult,
    f2_choice: f64,
) -> Result<Certificate, CertificateError> {
    construct_with_limit(spec, root, f2_choice, evaluator::DEFAULT_EVAL_LIMIT)
}

/// [`construct`] with an explicit cap on the table built for M.
pub fn construct_with_limit(
    spec: &RecurrenceSpec,
    root: &RootResult,
    f2_choice: f64,
    limit: u64,
) -> Result<Certificate, CertificateError> {
    if !(f2_choice.is_finite() && f2_choice > 0.0) {
        return Err(CertificateError::InvalidParameter(format!(
            "f2 must be positive and finite, got {f2_choice}"
        )));
    }
    if !spec.driving.beta.is_zero() {
        return Err(CertificateError::NotApplicable(NotApplicableReason::BetaNonzero));
    }
    let alpha = spec.driving.alpha.to_f64();
    if root.r <= alpha + ROOT_INT_TOL {
        return Err(CertificateError::NotApplicable(NotApplicableReason::RootNotDominant));
    }
    let r = root.r.round();
    if (root.r - r).abs() > ROOT_INT_TOL || r < 1.0 {
        return Err(CertificateError::NotApplicable(NotApplicableReason::RootNotInteger));
    }

    let c = spec.driving.c.to_f64();
    let g_alpha = g(spec, alpha);
    let f3 = c / (g_alpha - 1.0);
    let f2 = f2_choice;
    let f1 = f2 + f3 + 1.0;

    let inv_b = 1.0 / spec.b_min().to_f64();
    let g_half = g(spec, r - 0.5);
    let side = f1 * 2f64.powf(r) * inv_b / (f2 * (g_half - 1.0));
    let m0 = (spec.n0 as f64).max(inv_b).max(side * side);

    let below = m0.ceil() as u64 - 1;
    let table = evaluator::eval_upto_with_limit(spec, below, limit)?;
    let mut big_m = 1.0f64;
    for n in 1..=below {
        big_m = big_m.max(table.value(n));
    }

    Ok(Certificate {
        f1,
        f2,
        f3,
        m0,
        big_m,
        r,
        alpha,
        b_min: spec.b_min().to_f64(),
    })
}

/// The shape function S(n) = f1·n^r - f2·n^(r-1/2) - f3·n^alpha. For any
/// constructed certificate S(n) >= n^r·(f1 - f2 - f3) = n^r >= 1 on
/// n >= 1.
pub fn s_value(cert: &Certificate, n: u64) -> f64 {
    let x = n as f64;
    cert.f1 * x.powf(cert.r) - cert.f2 * x.powf(cert.r - 0.5) - cert.f3 * x.powf(cert.alpha)
}

/// Which verification stage a failure witness belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Check {
    /// R(n) = 1 <= S(n) for all n < m0.
    Base,
    /// R(n) <= S(n) for all ceil(m0) <= n <= horizon.
    Induction,
    /// c <= f3·(g(alpha) - 1), an identity by construction.
    ClosingDriving,
    /// f1·2^r·n^(r-1)/b1 <= f2·(g(r-1/2)-1)·n^(r-1/2) at n = ceil(m0);
    /// the right side gains n^(1/2) on the left as n grows, so checking
    /// the smallest n covers the rest.
    ClosingHalfPower,
    /// T(n) <= M·R(n) for all n <= horizon.
    Sandwich,
    /// T(n) >= c·n^alpha for all n0 <= n <= horizon; the stand-in for a
    /// lower-bound witness.
    LowerFloor,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Check::Base => "base",
            Check::Induction => "induction",
            Check::ClosingDriving => "closing-driving",
            Check::ClosingHalfPower => "closing-half-power",
            Check::Sandwich => "sandwich",
            Check::LowerFloor => "lower-floor",
        };
        f.write_str(s)
    }
}

/// A failed comparison: `lhs <= rhs` did not hold at `n`.
#[derive(Clone, Copy, Debug)]
pub struct FailureWitness {
    pub check: Check,
    pub n: u64,
    pub lhs: f64,
    pub rhs: f64,
}

/// Outcome of verifying a certificate over `1..=horizon`.
#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub horizon: u64,
    pub base_ok: bool,
    pub induction_ok: bool,
    pub closing1_ok: bool,
    pub closing2_ok: bool,
    pub t_le_mr_ok: bool,
    /// Crude lower bound T(n) >= c·n^alpha on n >= n0.
    pub lower_floor_ok: bool,
    /// Witness of the first failing check, in check order.
    pub first_failure: Option<FailureWitness>,
}

impl VerificationReport {
    pub fn pass(&self) -> bool {
        self.base_ok
            && self.induction_ok
            && self.closing1_ok
            && self.closing2_ok
            && self.t_le_mr_ok
            && self.lower_floor_ok
    }
}

/// Verifies every link of the certified chain numerically over
/// `1..=horizon` (which must reach m0). Failures land in the report, not
/// in `Err`; errors are reserved for evaluation problems.
pub fn verify(
    cert: &Certificate,
    spec: &RecurrenceSpec,
    horizon: u64,
) -> Result<VerificationReport, EvalError> {
    verify_with_limit(cert, spec, horizon, evaluator::DEFAULT_EVAL_LIMIT)
}

pub fn verify_with_limit(
    cert: &Certificate,
    spec: &RecurrenceSpec,
    horizon: u64,
    limit: u64,
) -> Result<VerificationReport, EvalError> {
    let first_above = cert.m0.ceil() as u64;
    if horizon < first_above {
        return Err(EvalError::InvalidRange {
            message: format!("horizon {horizon} does not reach m0 = {}", cert.m0),
        });
    }
    let t = evaluator::eval_upto_with_limit(spec, horizon, limit)?;
    let r_tab = evaluator::eval_r_upto_with_limit(cert, spec, horizon, limit)?;
    let mut failures: Vec<FailureWitness> = Vec::new();

    // (a) base rows: R(n) = 1 <= S(n) below m0. At n = 1 the bound holds
    // with equality (S(1) = f1 - f2 - f3 = 1 by the choice of f1), so the
    // comparison gets the same relative slack as the closing identity.
    let mut base_ok = true;
    for n in 1..first_above {
        let s = s_value(cert, n);
        if 1.0 > s * (1.0 + IDENTITY_RTOL) {
            base_ok = false;
            failures.push(FailureWitness { check: Check::Base, n, lhs: 1.0, rhs: s });
            break;
        }
    }

    // (b) induction sweep: R(n) <= S(n) from m0 to the horizon
    let mut induction_ok = true;
    for n in first_above..=horizon {
        let (lhs, rhs) = (r_tab.value(n), s_value(cert, n));
        if lhs > rhs * (1.0 + IDENTITY_RTOL) {
            induction_ok = false;
            failures.push(FailureWitness { check: Check::Induction, n, lhs, rhs });
            break;
        }
    }

    // (c) c <= f3·(g(alpha) - 1), with equality by construction
    let c = spec.driving.c.to_f64();
    let rhs = cert.f3 * (g(spec, cert.alpha) - 1.0);
    let closing1_ok = (c - rhs).abs() <= IDENTITY_RTOL * c.max(1.0) || c <= rhs;
    if !closing1_ok {
        failures.push(FailureWitness { check: Check::ClosingDriving, n: 0, lhs: c, rhs });
    }

    // (d) half-power absorption at the first integer above m0
    let x = first_above as f64;
    let lhs = cert.f1 * 2f64.powf(cert.r) * x.powf(cert.r - 1.0) / cert.b_min;
    let rhs = (g(spec, cert.r - 0.5) - 1.0) * cert.f2 * x.powf(cert.r - 0.5);
    let closing2_ok = lhs <= rhs * (1.0 + 1e-9);
    if !closing2_ok {
        failures.push(FailureWitness { check: Check::ClosingHalfPower, n: first_above, lhs, rhs });
    }

    // (e) sandwich: T(n) <= M·R(n) everywhere
    let mut t_le_mr_ok = true;
    for n in 1..=horizon {
        let (lhs, rhs) = (t.value(n), cert.big_m * r_tab.value(n));
        if lhs > rhs * (1.0 + IDENTITY_RTOL) {
            t_le_mr_ok = false;
            failures.push(FailureWitness { check: Check::Sandwich, n, lhs, rhs });
            break;
        }
    }

    // (f) crude lower floor T(n) >= c·n^alpha, standing in for a
    // lower-bound witness
    let mut lower_floor_ok = true;
    for n in spec.n0..=horizon {
        let (lhs, rhs) = (c * (n as f64).powf(cert.alpha), t.value(n));
        if lhs > rhs * (1.0 + IDENTITY_RTOL) {
            lower_floor_ok = false;
            failures.push(FailureWitness { check: Check::LowerFloor, n, lhs, rhs });
            break;
        }
    }

    let order = |c: Check| match c {
        Check::Base => 0,
        Check::Induction => 1,
        Check::ClosingDriving => 2,
        Check::ClosingHalfPower => 3,
        Check::Sandwich => 4,
        Check::LowerFloor => 5,
    };
    failures.sort_by_key(|w| order(w.check));

    Ok(VerificationReport {
        horizon,
        base_ok,
        induction_ok,
        closing1_ok,
        closing2_ok,
        t_le_mr_ok,
        lower_floor_ok,
        first_failure: failures.first().copied(),
    })
}
