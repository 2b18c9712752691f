//! Growth classification and empirical cross-checks.
//!
//! With r the characteristic root and alpha, beta the driving-term
//! exponents, the growth of T is
//!
//! ```text
//! Θ(n^r)                      r > alpha   (RootDominates)
//! Θ(n^alpha · log^(1+beta) n) r = alpha   (Balanced)
//! Θ(n^alpha · log^beta n)     r < alpha   (DrivingDominates)
//! ```
//!
//! Floating point cannot witness r = alpha, so [`classify`] substitutes a
//! tolerance band and flags near-boundary calls. [`classify_spec`]
//! additionally decides the boundary exactly when alpha is a small
//! integer, by evaluating g(alpha) in rational arithmetic: g(alpha) = 1
//! holds iff r = alpha, since g is strictly decreasing.
//!
//! The empirical side fits a least-squares line to (log2 n, log2 T(n))
//! over a geometric sample grid; the slope estimates the dominant
//! polynomial exponent and [`compare`] scores it against the prediction.

use std::cmp::Ordering;
use std::fmt;

use num_traits::One;

use crate::characteristic::{self, RootResult};
use crate::evaluator::{self, EvalError, MemoEval};
use crate::model::RecurrenceSpec;

/// Default tolerance band around r = alpha.
pub const DEFAULT_TAU: f64 = 1e-9;

/// Band above tau in which a float-only classification is flagged as
/// numerically fragile.
pub const FRAGILE_BAND: f64 = 1e-4;

/// Gap threshold for [`compare`]; the balanced class gets extra headroom
/// because the unfitted log factor inflates the slope.
pub const CONSISTENT_GAP: f64 = 0.1;
pub const CONSISTENT_GAP_BALANCED: f64 = 0.15;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    RootDominates,
    Balanced,
    DrivingDominates,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Branch::RootDominates => "RootDominates",
            Branch::Balanced => "Balanced",
            Branch::DrivingDominates => "DrivingDominates",
        };
        f.write_str(s)
    }
}

/// A classified growth order.
#[derive(Clone, Debug)]
pub struct AsymptoticClass {
    pub branch: Branch,
    pub r: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Printable Θ-expression, e.g. `Θ(n^1.5849625007)` or
    /// `Θ(n^1 · log^1 n)`.
    pub theta: String,
    /// |r - alpha|
    pub margin: f64,
    pub warnings: Vec<String>,
}

/// Classifies from the numbers alone, treating |r - alpha| <= tau as the
/// balanced case.
pub fn classify(r: f64, alpha: f64, beta: f64, tau: f64) -> AsymptoticClass {
    let branch = if (r - alpha).abs() <= tau {
        Branch::Balanced
    } else if r > alpha {
        Branch::RootDominates
    } else {
        Branch::DrivingDominates
    };
    build_class(branch, r, alpha, beta, tau)
}

/// Classifies a solved spec, deciding the r = alpha boundary exactly via
/// rational arithmetic whenever alpha is a small integer.
pub fn classify_spec(spec: &RecurrenceSpec, root: &RootResult, tau: f64) -> AsymptoticClass {
    let alpha = spec.driving.alpha.to_f64();
    let beta = spec.driving.beta.to_f64();
    if let Some(a) = small_int_alpha(spec) {
        let g_alpha = characteristic::g_exact_at_int(spec, a);
        let branch = match g_alpha.cmp(&One::one()) {
            Ordering::Greater => Branch::RootDominates,
            Ordering::Equal => Branch::Balanced,
            Ordering::Less => Branch::DrivingDominates,
        };
        return build_class(branch, root.r, alpha, beta, tau);
    }
    classify(root.r, alpha, beta, tau)
}

fn small_int_alpha(spec: &RecurrenceSpec) -> Option<u32> {
    let a = spec.driving.alpha.to_u32()?;
    (a <= 64).then_some(a)
}

fn build_class(branch: Branch, r: f64, alpha: f64, beta: f64, tau: f64) -> AsymptoticClass {
    let margin = (r - alpha).abs();
    let mut warnings = Vec::new();
    if margin > tau && margin < FRAGILE_BAND {
        warnings.push(format!(
            "|r - alpha| = {margin:.3e} is close to the balanced boundary; classification is numerically fragile"
        ));
    }
    if branch == Branch::DrivingDominates && alpha == 0.0 && beta == 0.0 {
        warnings.push(
            "degenerate class Θ(1): the recursive terms sum below 1 and the driving term is constant"
                .to_string(),
        );
    }
    let theta = theta_string(branch, r, alpha, beta);
    AsymptoticClass { branch, r, alpha, beta, theta, margin, warnings }
}

/// Renders the Θ-expression for a branch. The dominant-root exponent is
/// printed with 10 decimal digits (matching the root tolerance); zero
/// exponents drop their factor, and an empty product renders as Θ(1).
fn theta_string(branch: Branch, r: f64, alpha: f64, beta: f64) -> String {
    match branch {
        Branch::RootDominates => format!("Θ(n^{r:.10})"),
        Branch::Balanced => format!("Θ({})", factors(alpha, beta + 1.0)),
        Branch::DrivingDominates => format!("Θ({})", factors(alpha, beta)),
    }
}

fn factors(alpha: f64, log_exp: f64) -> String {
    let mut parts = Vec::new();
    if alpha != 0.0 {
        parts.push(format!("n^{alpha}"));
    }
    if log_exp != 0.0 {
        parts.push(format!("log^{log_exp} n"));
    }
    if parts.is_empty() {
        "1".to_string()
    } else {
        parts.join(" · ")
    }
}

// ---- Empirical exponent estimation ----

/// Ordinary least-squares line through (log2 n, log2 T).
#[derive(Clone, Copy, Debug)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope estimate.
    pub stderr: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FitError {
    TooFewSamples { got: usize },
    /// A sample with n < 2 or T <= 0 has no log-log image.
    NonPositiveValue { n: u64 },
}

impl fmt::Display for FitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitError::TooFewSamples { got } => {
                write!(f, "slope estimation needs at least 3 usable samples, got {got}")
            }
            FitError::NonPositiveValue { n } => {
                write!(f, "sample at n = {n} is outside the log-log domain")
            }
        }
    }
}

impl std::error::Error for FitError {}

/// Fits log2(T) = slope·log2(n) + intercept by ordinary least squares.
pub fn estimate_exponent(samples: &[(u64, f64)]) -> Result<FitResult, FitError> {
    if samples.len() < 3 {
        return Err(FitError::TooFewSamples { got: samples.len() });
    }
    for &(n, t) in samples {
        if n < 2 || !t.is_finite() || t <= 0.0 {
            return Err(FitError::NonPositiveValue { n });
        }
    }
    let m = samples.len() as f64;
    let xy: Vec<(f64, f64)> = samples
        .iter()
        .map(|&(n, t)| ((n as f64).log2(), t.log2()))
        .collect();
    let mean_x = xy.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = xy.iter().map(|p| p.1).sum::<f64>() / m;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in &xy {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx == 0.0 {
        // all sample sizes coincide
        return Err(FitError::TooFewSamples { got: 1 });
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_resid: f64 = xy
        .iter()
        .map(|&(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    let stderr = (ss_resid / (m - 2.0) / sxx).sqrt();
    Ok(FitResult { slope, intercept, stderr, points: samples.len() })
}

/// Doubling estimator log2(T(2n)/T(n)); converges to r in the
/// dominant-root branch.
pub fn ratio_exponent(spec: &RecurrenceSpec, n: u64) -> Result<f64, EvalError> {
    ratio_exponent_with_limit(spec, n, evaluator::DEFAULT_EVAL_LIMIT)
}

pub fn ratio_exponent_with_limit(
    spec: &RecurrenceSpec,
    n: u64,
    limit: u64,
) -> Result<f64, EvalError> {
    if n < spec.n0 {
        return Err(EvalError::InvalidRange {
            message: format!("ratio estimator needs n >= n0 = {}", spec.n0),
        });
    }
    let mut memo = MemoEval::with_limit(spec, limit);
    let t2 = memo.value(2 * n)?;
    let t1 = memo.value(n)?;
    Ok((t2 / t1).log2())
}

// ---- Prediction vs. measurement ----

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    Inconsistent,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Consistent => f.write_str("CONSISTENT"),
            Verdict::Inconsistent => f.write_str("INCONSISTENT"),
        }
    }
}

/// Outcome of checking a fitted slope against the predicted polynomial
/// exponent (r in the dominant-root branch, alpha otherwise).
#[derive(Clone, Copy, Debug)]
pub struct ComparisonReport {
    pub predicted_exponent: f64,
    pub fitted_slope: f64,
    pub gap: f64,
    pub threshold: f64,
    pub verdict: Verdict,
}

pub fn compare(predicted: &AsymptoticClass, fit: &FitResult) -> ComparisonReport {
    let predicted_exponent = match predicted.branch {
        Branch::RootDominates => predicted.r,
        _ => predicted.alpha,
    };
    let threshold = match predicted.branch {
        Branch::Balanced => CONSISTENT_GAP_BALANCED,
        _ => CONSISTENT_GAP,
    };
    let gap = (fit.slope - predicted_exponent).abs();
    ComparisonReport {
        predicted_exponent,
        fitted_slope: fit.slope,
        gap,
        threshold,
        verdict: if gap <= threshold { Verdict::Consistent } else { Verdict::Inconsistent },
    }
}
