//! Exact evaluation of T(n), and of the auxiliary recurrence R(n) used by
//! bound certificates.
//!
//! The primary strategy is a bottom-up table: since `ceil(b_i·n) <= n - 1`
//! for every admissible spec, a single ascending pass fills `T(1..=N)` in
//! O(kN). A top-down memoized evaluator serves as an independent oracle
//! and computes the same values bit for bit, because both paths fix the
//! summation order (terms by ascending ratio, driving term added last).
//! An arbitrary-precision rational mode (integer
//! alpha, beta = 0, n <= 10^4) bounds the floating-point drift.
//!
//! Child indices `ceil(b_i·n)` are computed in integer arithmetic from
//! the exact rational ratio, never by rounding a floating-point product:
//! `ceil(7/10·10)` is 7, while `ceil(0.7_f64 * 10.0)` is 8.

use std::collections::HashMap;
use std::fmt;
use std::io;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::certificate::Certificate;
use crate::model::{RecTerm, RecurrenceSpec};

/// Default cap on table sizes (override per call, or via the CLI's
/// `RECURRENCE_EVAL_LIMIT`).
pub const DEFAULT_EVAL_LIMIT: u64 = 10_000_000;

/// Cap for the exact-rational mode; denominators grow along recursion
/// chains and keep this mode an oracle, not a bulk evaluator.
pub const EXACT_EVAL_LIMIT: u64 = 10_000;

const MAX_PENDING: usize = 1 << 22;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalError {
    LimitExceeded { requested: u64, limit: u64 },
    /// A table entry left the positive finite f64 range; `n` is the first
    /// offending index.
    Overflow { n: u64 },
    /// Defensive cap on the memoized evaluator's pending work.
    RecursionDepthExceeded,
    InvalidRange { message: String },
    /// Exact-rational mode needs beta = 0 and an integer alpha.
    ExactUnsupported { reason: String },
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::LimitExceeded { requested, limit } => {
                write!(f, "evaluation up to {requested} exceeds the limit {limit}")
            }
            EvalError::Overflow { n } => {
                write!(f, "value left the floating-point range at n = {n}")
            }
            EvalError::RecursionDepthExceeded => write!(f, "memoized evaluation grew too deep"),
            EvalError::InvalidRange { message } => write!(f, "{message}"),
            EvalError::ExactUnsupported { reason } => {
                write!(f, "exact-rational mode unavailable: {reason}")
            }
        }
    }
}

impl std::error::Error for EvalError {}

// ---- Prepared integer ceil ----

/// `ceil(b·n)` specialised per term: u128 arithmetic for machine-size
/// reduced fractions, big-integer arithmetic otherwise.
enum TermCeil {
    Fast { p: u64, q: u64 },
    Big(RecTerm),
}

impl TermCeil {
    fn new(term: &RecTerm) -> Self {
        match term.b.as_u64_ratio() {
            Some((p, q)) => TermCeil::Fast { p, q },
            None => TermCeil::Big(term.clone()),
        }
    }

    fn child(&self, n: u64) -> u64 {
        match self {
            TermCeil::Fast { p, q } => {
                ((*p as u128) * (n as u128)).div_ceil(*q as u128) as u64
            }
            TermCeil::Big(term) => term.ceil_times(n),
        }
    }
}

struct PreparedTerm {
    a: f64,
    ceil: TermCeil,
}

/// Numeric view of a spec with the summation order fixed.
struct EvalCtx {
    terms: Vec<PreparedTerm>,
    c: f64,
    alpha: f64,
    beta: f64,
}

impl EvalCtx {
    fn new(spec: &RecurrenceSpec) -> Self {
        EvalCtx {
            terms: spec
                .terms
                .iter()
                .map(|t| PreparedTerm { a: t.a.to_f64(), ceil: TermCeil::new(t) })
                .collect(),
            c: spec.driving.c.to_f64(),
            alpha: spec.driving.alpha.to_f64(),
            beta: spec.driving.beta.to_f64(),
        }
    }

    fn driving(&self, n: u64) -> f64 {
        let x = n as f64;
        self.c * x.powf(self.alpha) * x.log2().powf(self.beta)
    }

    /// Recursive-term sum (ascending ratio order) plus the driving term,
    /// added last. Both evaluation paths call this and nothing else.
    fn combine(&self, n: u64, child_value: impl Fn(u64) -> f64) -> f64 {
        let mut acc = 0.0;
        for term in &self.terms {
            acc += term.a * child_value(term.ceil.child(n));
        }
        acc + self.driving(n)
    }
}

// ---- Bottom-up tables ----

/// Values `T(1..=N)` (or `R(1..=N)`) of a recurrence. Entry 0 is unused.
#[derive(Clone, Debug)]
pub struct EvalTable {
    spec: RecurrenceSpec,
    values: Vec<f64>,
}

impl EvalTable {
    /// Largest tabulated index.
    pub fn limit(&self) -> u64 {
        (self.values.len() - 1) as u64
    }

    /// T(n); panics outside `1..=limit()`.
    pub fn value(&self, n: u64) -> f64 {
        assert!(n >= 1 && n <= self.limit(), "n = {n} outside the table");
        self.values[n as usize]
    }

    pub fn spec(&self) -> &RecurrenceSpec {
        &self.spec
    }
}

fn check_range(n: u64, limit: u64) -> Result<(), EvalError> {
    if n == 0 {
        return Err(EvalError::InvalidRange { message: "evaluation requires n >= 1".into() });
    }
    if n > limit {
        return Err(EvalError::LimitExceeded { requested: n, limit });
    }
    Ok(())
}

fn fill_table(
    spec: &RecurrenceSpec,
    n: u64,
    base: impl Fn(u64) -> Option<f64>,
) -> Result<EvalTable, EvalError> {
    let ctx = EvalCtx::new(spec);
    let mut values = vec![f64::NAN; n as usize + 1];
    for i in 1..=n {
        let v = match base(i) {
            Some(b) => b,
            None => ctx.combine(i, |child| values[child as usize]),
        };
        if !(v.is_finite() && v > 0.0) {
            return Err(EvalError::Overflow { n: i });
        }
        values[i as usize] = v;
    }
    Ok(EvalTable { spec: spec.clone(), values })
}

/// Tabulates `T(1..=n)` bottom-up under the default size limit.
pub fn eval_upto(spec: &RecurrenceSpec, n: u64) -> Result<EvalTable, EvalError> {
    eval_upto_with_limit(spec, n, DEFAULT_EVAL_LIMIT)
}

pub fn eval_upto_with_limit(
    spec: &RecurrenceSpec,
    n: u64,
    limit: u64,
) -> Result<EvalTable, EvalError> {
    check_range(n, limit)?;
    let d = spec.d.to_f64();
    let n0 = spec.n0;
    fill_table(spec, n, move |i| (i < n0).then_some(d))
}

/// Tabulates the certificate recurrence `R(1..=n)`: R(m) = 1 below m0,
/// and `R(n) = c·n^alpha + sum a_i·R(ceil(b_i·n))` from m0 up (the
/// certificate preconditions force beta = 0).
pub fn eval_r_upto(
    cert: &Certificate,
    spec: &RecurrenceSpec,
    n: u64,
) -> Result<EvalTable, EvalError> {
    eval_r_upto_with_limit(cert, spec, n, DEFAULT_EVAL_LIMIT)
}

pub fn eval_r_upto_with_limit(
    cert: &Certificate,
    spec: &RecurrenceSpec,
    n: u64,
    limit: u64,
) -> Result<EvalTable, EvalError> {
    check_range(n, limit)?;
    let threshold = cert.m0;
    if (n as f64) < threshold {
        return Err(EvalError::InvalidRange {
            message: format!("R-table horizon {n} is below m0 = {threshold}"),
        });
    }
    fill_table(spec, n, move |i| ((i as f64) < threshold).then_some(1.0))
}

// ---- Top-down memoized oracle ----

/// Memoized top-down evaluator. Reusable across queries; values agree
/// with [`eval_upto`] bit for bit.
pub struct MemoEval<'a> {
    ctx: EvalCtx,
    n0: u64,
    d: f64,
    limit: u64,
    cache: HashMap<u64, f64>,
    spec: &'a RecurrenceSpec,
}

impl<'a> MemoEval<'a> {
    pub fn new(spec: &'a RecurrenceSpec) -> Self {
        MemoEval::with_limit(spec, DEFAULT_EVAL_LIMIT)
    }

    pub fn with_limit(spec: &'a RecurrenceSpec, limit: u64) -> Self {
        MemoEval {
            ctx: EvalCtx::new(spec),
            n0: spec.n0,
            d: spec.d.to_f64(),
            limit,
            cache: HashMap::new(),
            spec,
        }
    }

    pub fn spec(&self) -> &RecurrenceSpec {
        self.spec
    }

    /// T(n), resolving uncached subproblems iteratively. An explicit
    /// work stack stands in for call-stack recursion; recursion chains
    /// shrink geometrically, so the cap on pending work is far out of
    /// reach for any admissible spec.
    pub fn value(&mut self, n: u64) -> Result<f64, EvalError> {
        check_range(n, self.limit)?;
        if let Some(&v) = self.cache.get(&n) {
            return Ok(v);
        }
        let mut pending = vec![n];
        while let Some(&top) = pending.last() {
            if self.cache.contains_key(&top) {
                pending.pop();
                continue;
            }
            if top < self.n0 {
                self.insert(top, self.d)?;
                pending.pop();
                continue;
            }
            let mut ready = true;
            for term in &self.ctx.terms {
                let child = term.ceil.child(top);
                if !self.cache.contains_key(&child) && child >= self.n0 {
                    pending.push(child);
                    ready = false;
                }
            }
            if ready {
                let v = self.ctx.combine(top, |child| {
                    if child < self.n0 {
                        self.d
                    } else {
                        self.cache[&child]
                    }
                });
                self.insert(top, v)?;
                pending.pop();
            } else if pending.len() > MAX_PENDING {
                return Err(EvalError::RecursionDepthExceeded);
            }
        }
        Ok(self.cache[&n])
    }

    fn insert(&mut self, n: u64, v: f64) -> Result<(), EvalError> {
        if !(v.is_finite() && v > 0.0) {
            return Err(EvalError::Overflow { n });
        }
        self.cache.insert(n, v);
        Ok(())
    }
}

/// One-shot top-down evaluation of T(n).
pub fn eval_memo(spec: &RecurrenceSpec, n: u64) -> Result<f64, EvalError> {
    MemoEval::new(spec).value(n)
}

// ---- Exact-rational mode ----

/// Tabulates `T(1..=n)` in exact rational arithmetic. Requires beta = 0
/// and integer alpha so the driving term stays rational; limited to
/// n <= 10^4. Entry 0 of the result is zero and unused.
pub fn eval_exact_upto(spec: &RecurrenceSpec, n: u64) -> Result<Vec<BigRational>, EvalError> {
    if !spec.driving.beta.is_zero() {
        return Err(EvalError::ExactUnsupported { reason: "beta must be 0".into() });
    }
    let alpha = spec.driving.alpha.to_u32().ok_or_else(|| EvalError::ExactUnsupported {
        reason: "alpha must be a small nonnegative integer".into(),
    })?;
    check_range(n, EXACT_EVAL_LIMIT)?;

    let mut values = vec![BigRational::zero(); n as usize + 1];
    for i in 1..=n {
        values[i as usize] = if i < spec.n0 {
            spec.d.exact().clone()
        } else {
            let mut acc = BigRational::zero();
            for term in &spec.terms {
                acc += term.a.exact() * &values[term.ceil_times(i) as usize];
            }
            let poly = BigRational::from_integer(BigInt::from(i).pow(alpha));
            acc + spec.driving.c.exact() * poly
        };
    }
    Ok(values)
}

// ---- Sampling and export ----

/// `points` geometrically spaced sizes in `[n_min, n_max]`, rounded to
/// integers and deduplicated, paired with exact table values.
pub fn sample_geometric(
    spec: &RecurrenceSpec,
    n_min: u64,
    n_max: u64,
    points: usize,
) -> Result<Vec<(u64, f64)>, EvalError> {
    sample_geometric_with_limit(spec, n_min, n_max, points, DEFAULT_EVAL_LIMIT)
}

pub fn sample_geometric_with_limit(
    spec: &RecurrenceSpec,
    n_min: u64,
    n_max: u64,
    points: usize,
    limit: u64,
) -> Result<Vec<(u64, f64)>, EvalError> {
    if points < 3 {
        return Err(EvalError::InvalidRange { message: "at least 3 sample points required".into() });
    }
    if n_min < spec.n0 || n_min >= n_max {
        return Err(EvalError::InvalidRange {
            message: format!("sampling range must satisfy n0 <= n_min < n_max, got [{n_min}, {n_max}]"),
        });
    }
    let table = eval_upto_with_limit(spec, n_max, limit)?;
    let ratio = (n_max as f64 / n_min as f64).powf(1.0 / (points - 1) as f64);
    let mut samples: Vec<(u64, f64)> = Vec::with_capacity(points);
    for i in 0..points {
        let n = ((n_min as f64) * ratio.powi(i as i32)).round() as u64;
        let n = n.clamp(n_min, n_max);
        if samples.last().is_none_or(|&(prev, _)| prev != n) {
            samples.push((n, table.value(n)));
        }
    }
    Ok(samples)
}

/// CSV export: header `n,T`, one row per requested index, values printed
/// in the shortest form that parses back to the identical f64.
pub fn write_csv<W: io::Write + ?Sized>(
    table: &EvalTable,
    rows: impl IntoIterator<Item = u64>,
    out: &mut W,
) -> io::Result<()> {
    writeln!(out, "n,T")?;
    for n in rows {
        writeln!(out, "{},{}", n, table.value(n))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate, RawRecurrence};
    use crate::number::Real;
    use crate::parser::parse;
    use num_traits::ToPrimitive;

    fn real(p: i64, q: i64) -> Real {
        Real::from_ratio(p, q).unwrap()
    }

    #[test]
    fn halving_chain() {
        let spec = parse("T(n) = T(ceil(0.5*n)) + 1 ; n0=2 ; d=1").unwrap();
        let t = eval_upto(&spec, 1024).unwrap();
        assert_eq!(t.value(1), 1.0);
        assert_eq!(t.value(2), 2.0);
        assert_eq!(t.value(8), 4.0);
        assert_eq!(t.value(1024), 11.0);
    }

    #[test]
    fn base_cases_are_d() {
        let spec = parse("T(n) = T(ceil(0.9*n)) + n ; d=0.25").unwrap();
        let t = eval_upto(&spec, 64).unwrap();
        for n in 1..spec.n0 {
            assert_eq!(t.value(n), 0.25);
        }
    }

    #[test]
    fn doubling_recurrence() {
        let spec = parse("T(n) = 2*T(ceil(0.5*n)) + n ; n0=2 ; d=1").unwrap();
        let t = eval_upto(&spec, 16).unwrap();
        assert_eq!(t.value(2), 4.0);
        assert_eq!(t.value(4), 12.0);
        assert_eq!(t.value(8), 32.0);
        assert_eq!(t.value(16), 80.0);
    }

    #[test]
    fn memo_matches_table_bit_for_bit() {
        for text in [
            "T(n) = T(ceil(0.5*n)) + 1 ; n0=2 ; d=1",
            "T(n) = 2*T(ceil(0.5*n)) + n ; n0=2 ; d=1",
            "T(n) = T(ceil(1/5*n)) + T(ceil(7/10*n)) + n ; n0=4 ; d=1",
            "T(n) = 3*T(ceil(1/3*n)) + n^2*log(n) ; d=2",
        ] {
            let spec = parse(text).unwrap();
            let t = eval_upto(&spec, 2000).unwrap();
            let mut memo = MemoEval::new(&spec);
            for n in 1..=2000 {
                assert_eq!(
                    memo.value(n).unwrap().to_bits(),
                    t.value(n).to_bits(),
                    "{text} at n = {n}"
                );
            }
        }
    }

    #[test]
    fn selection_memo_example() {
        let spec = parse("T(n) = T(ceil(1/5*n)) + T(ceil(7/10*n)) + n ; n0=4 ; d=1").unwrap();
        let t = eval_upto(&spec, 100).unwrap();
        assert_eq!(eval_memo(&spec, 100).unwrap(), t.value(100));
        assert_eq!(eval_memo(&spec, 3).unwrap(), 1.0);
    }

    #[test]
    fn reconstruction_holds() {
        let spec = parse("T(n) = T(ceil(1/5*n)) + T(ceil(7/10*n)) + n ; n0=4 ; d=1").unwrap();
        let t = eval_upto(&spec, 5000).unwrap();
        for n in spec.n0..=5000 {
            let mut acc = 0.0;
            for term in &spec.terms {
                acc += term.a.to_f64() * t.value(term.ceil_times(n));
            }
            acc += spec.driving.c.to_f64() * (n as f64).powf(spec.driving.alpha.to_f64());
            let rel = ((t.value(n) - acc) / acc).abs();
            assert!(rel <= 1e-12, "n = {n}: {} vs {}", t.value(n), acc);
        }
    }

    #[test]
    fn values_dominate_the_driving_term() {
        let spec = parse("T(n) = 2*T(ceil(0.5*n)) + n*log(n)^2").unwrap();
        let t = eval_upto(&spec, 4096).unwrap();
        for n in spec.n0..=4096 {
            let x = n as f64;
            assert!(t.value(n) >= x * x.log2().powi(2) * (1.0 - 1e-12));
        }
    }

    #[test]
    fn joint_scaling_in_c_and_d() {
        let base = parse("T(n) = 2*T(ceil(0.5*n)) + n ; d=1").unwrap();
        let mut raw = base.to_raw();
        raw.c = &raw.c * &real(7, 2);
        raw.d = &raw.d * &real(7, 2);
        let scaled = validate(&raw).unwrap();
        let t0 = eval_upto(&base, 3000).unwrap();
        let t1 = eval_upto(&scaled, 3000).unwrap();
        for n in 1..=3000 {
            let rel = (t1.value(n) / t0.value(n) - 3.5).abs() / 3.5;
            assert!(rel <= 1e-12, "n = {n}");
        }
    }

    #[test]
    fn exact_mode_agrees_with_floats() {
        for text in [
            "T(n) = 2*T(ceil(0.5*n)) + n ; n0=2 ; d=1",
            "T(n) = T(ceil(1/5*n)) + T(ceil(7/10*n)) + n ; n0=4 ; d=1",
            "T(n) = 1/3*T(ceil(7/10*n)) + 2*n^2 ; d=1/7",
        ] {
            let spec = parse(text).unwrap();
            let exact = eval_exact_upto(&spec, 2000).unwrap();
            let t = eval_upto(&spec, 2000).unwrap();
            for n in 1..=2000u64 {
                let e = exact[n as usize].to_f64().unwrap();
                let rel = ((t.value(n) - e) / e).abs();
                assert!(rel <= 1e-10, "{text} at n = {n}: {} vs {e}", t.value(n));
            }
        }
    }

    #[test]
    fn exact_mode_halving_powers() {
        let spec = parse("T(n) = 2*T(ceil(0.5*n)) + 1 ; n0=2 ; d=1").unwrap();
        let exact = eval_exact_upto(&spec, 1024).unwrap();
        // T(2^k) = 2^(k+1) - 1
        assert_eq!(exact[1024], BigRational::from_integer(2047.into()));
    }

    #[test]
    fn exact_mode_preconditions() {
        let spec = parse("T(n) = 2*T(ceil(0.5*n)) + n*log(n)").unwrap();
        assert!(matches!(
            eval_exact_upto(&spec, 10),
            Err(EvalError::ExactUnsupported { .. })
        ));
        let spec = parse("T(n) = 2*T(ceil(0.5*n)) + n^0.5").unwrap();
        assert!(matches!(
            eval_exact_upto(&spec, 10),
            Err(EvalError::ExactUnsupported { .. })
        ));
    }

    #[test]
    fn limits_and_overflow() {
        let spec = parse("T(n) = 2*T(ceil(0.5*n)) + n").unwrap();
        assert!(matches!(
            eval_upto_with_limit(&spec, 101, 100),
            Err(EvalError::LimitExceeded { requested: 101, limit: 100 })
        ));
        assert!(matches!(eval_upto(&spec, 0), Err(EvalError::InvalidRange { .. })));

        // a driving term already at the f64 ceiling overflows immediately
        let overflowing = validate(&RawRecurrence {
            c: Real::from_f64(1e308).unwrap(),
            alpha: Real::from_int(2),
            beta: Real::zero(),
            terms: vec![(Real::from_int(2), real(1, 2))],
            n0: None,
            d: Real::one(),
        })
        .unwrap();
        let err = eval_upto(&overflowing, 100).unwrap_err();
        assert_eq!(err, EvalError::Overflow { n: 2 });
    }

    #[test]
    fn geometric_sampling() {
        let spec = parse("T(n) = 2*T(ceil(0.5*n)) + n").unwrap();
        let samples = sample_geometric(&spec, 16, 256, 5).unwrap();
        let ns: Vec<u64> = samples.iter().map(|&(n, _)| n).collect();
        assert_eq!(ns, vec![16, 32, 64, 128, 256]);

        let samples = sample_geometric(&spec, 2, 64, 3).unwrap();
        assert_eq!(samples[0].0, spec.n0);

        let samples = sample_geometric(&spec, 10, 12, 50).unwrap();
        assert!(samples.len() <= 3, "{samples:?}");

        assert!(matches!(
            sample_geometric(&spec, 16, 256, 2),
            Err(EvalError::InvalidRange { .. })
        ));
        assert!(matches!(
            sample_geometric(&spec, 1, 256, 5),
            Err(EvalError::InvalidRange { .. })
        ));
    }

    #[test]
    fn csv_format() {
        let spec = parse("T(n) = T(ceil(0.5*n)) + 1 ; n0=2 ; d=1").unwrap();
        let t = eval_upto(&spec, 4).unwrap();
        let mut buf = Vec::new();
        write_csv(&t, 1..=4, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,T\n1,1\n2,2\n3,3\n4,3\n");
    }

    #[test]
    fn r_table_for_the_reference_certificate() {
        // constants for T(n) = 2T(ceil(n/2)) + 1: r = 1, m0 ~ 839.29
        let spec = parse("T(n) = 2*T(ceil(0.5*n)) + 1 ; n0=2 ; d=1").unwrap();
        let cert = Certificate {
            f1: 3.0,
            f2: 1.0,
            f3: 1.0,
            m0: 839.2935059634513,
            big_m: 1024.0,
            r: 1.0,
            alpha: 0.0,
            b_min: 0.5,
        };
        let r = eval_r_upto(&cert, &spec, 2000).unwrap();
        assert_eq!(r.value(839), 1.0);
        assert_eq!(r.value(840), 3.0);
        assert_eq!(r.value(1680), 7.0);
        assert!(matches!(
            eval_r_upto(&cert, &spec, 100),
            Err(EvalError::InvalidRange { .. })
        ));
    }

    #[test]
    fn random_specs_memo_equivalence() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(0x5eed);
        for case in 0..20 {
            let k = rng.gen_range(1..=3);
            let terms: Vec<(Real, Real)> = (0..k)
                .map(|_| {
                    (
                        real(rng.gen_range(1..=40), 10),
                        real(rng.gen_range(1..=17), 20),
                    )
                })
                .collect();
            let raw = RawRecurrence {
                c: real(rng.gen_range(1..=30), 10),
                alpha: real(rng.gen_range(0..=4), 2),
                beta: real(rng.gen_range(0..=2), 2),
                terms,
                n0: None,
                d: real(rng.gen_range(1..=20), 10),
            };
            let spec = validate(&raw).unwrap();
            let n = 1000;
            let t = eval_upto(&spec, n).unwrap();
            let mut memo = MemoEval::new(&spec);
            for i in 1..=n {
                assert_eq!(
                    memo.value(i).unwrap().to_bits(),
                    t.value(i).to_bits(),
                    "case {case} at n = {i}"
                );
            }
        }
    }
}
