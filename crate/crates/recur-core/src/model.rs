//! Recurrence data model and admissibility checks.
//!
//! A recurrence is
//!
//! ```text
//! T(n) = c·n^alpha·log^beta(n) + sum_i a_i·T(ceil(b_i·n))   for n >= n0
//! T(n) = d                                                  for n <  n0
//! ```
//!
//! with `c > 0`, `alpha, beta >= 0`, every `a_i > 0`, every `b_i` in the
//! open interval (0, 1), and `n0 >= max_i 1/(1 - b_i)`. The threshold
//! condition forces `ceil(b_i·n) <= n - 1` for all `n >= n0`, so every
//! recursive reference lands strictly below `n` and the base values below
//! `n0` make the recurrence well defined.
//!
//! [`validate`] is the only way to obtain a [`RecurrenceSpec`]; a value of
//! that type always satisfies the conditions above, has its terms sorted
//! by strictly ascending ratio, and has equal-ratio terms merged.

use std::fmt;

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::number::Real;

/// One recursive term `a·T(ceil(b·n))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecTerm {
    /// Subproblem count; positive, may be fractional.
    pub a: Real,
    /// Shrink ratio; strictly between 0 and 1.
    pub b: Real,
}

impl RecTerm {
    /// Exact `ceil(b·n)`.
    pub fn ceil_times(&self, n: u64) -> u64 {
        let scaled = self.b.exact() * BigInt::from(n);
        let q = scaled.ceil().to_integer();
        q.to_u64().expect("ceil(b*n) <= n fits in u64")
    }
}

/// The non-recursive summand `c·n^alpha·log^beta(n)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DrivingTerm {
    pub c: Real,
    pub alpha: Real,
    pub beta: Real,
}

/// A validated recurrence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecurrenceSpec {
    pub driving: DrivingTerm,
    /// Nonempty, sorted by strictly ascending `b`; equal ratios merged.
    pub terms: Vec<RecTerm>,
    /// Recursion threshold; at least `ceil(max_i 1/(1 - b_i))`, hence >= 2.
    pub n0: u64,
    /// Base value: `T(n) = d` for `n < n0`.
    pub d: Real,
}

impl RecurrenceSpec {
    /// Smallest ratio `b_1` of the (sorted) term list.
    pub fn b_min(&self) -> &Real {
        &self.terms[0].b
    }
}

/// Unvalidated recurrence fields, as produced by the parser or built by
/// hand. `n0 = None` requests the smallest admissible threshold.
#[derive(Clone, Debug)]
pub struct RawRecurrence {
    pub c: Real,
    pub alpha: Real,
    pub beta: Real,
    pub terms: Vec<(Real, Real)>,
    pub n0: Option<u64>,
    pub d: Real,
}

/// A violated admissibility condition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValidationError {
    /// `a <= 0`, `c <= 0` or `d <= 0`. `field` names the offender and
    /// `index` is the term position for coefficients.
    NonPositiveCoefficient { field: &'static str, index: usize },
    /// A shrink ratio outside the open interval (0, 1).
    RatioOutOfRange { index: usize },
    /// `alpha < 0` or `beta < 0`.
    NegativeExponent { field: &'static str },
    /// Given `n0` is below `ceil(max_i 1/(1 - b_i))`.
    ThresholdTooSmall { given: u64, required: u64 },
    /// No recursive terms.
    EmptyTermList,
    /// The required threshold does not fit in a 64-bit integer (a ratio
    /// pathologically close to 1).
    ThresholdOverflow,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationError::NonPositiveCoefficient { field, index } => {
                if *field == "a" {
                    write!(f, "coefficient a of term {} must be positive", index + 1)
                } else {
                    write!(f, "{field} must be positive")
                }
            }
            ValidationError::RatioOutOfRange { index } => {
                write!(f, "ratio b of term {} must lie in (0, 1)", index + 1)
            }
            ValidationError::NegativeExponent { field } => {
                write!(f, "{field} must be nonnegative")
            }
            ValidationError::ThresholdTooSmall { given, required } => {
                write!(f, "n0={given} is below the required threshold {required}")
            }
            ValidationError::EmptyTermList => write!(f, "at least one recursive term is required"),
            ValidationError::ThresholdOverflow => {
                write!(f, "required threshold exceeds the supported integer range")
            }
        }
    }
}

impl std::error::Error for ValidationError {}

/// Smallest admissible threshold `ceil(max_i 1/(1 - b_i))` for a term
/// list, computed with exact rational arithmetic (the f64 route rounds
/// 1/(1 - 0.9) up to 11; the true answer is 10).
pub fn auto_n0(terms: &[(Real, Real)]) -> Result<u64, ValidationError> {
    if terms.is_empty() {
        return Err(ValidationError::EmptyTermList);
    }
    let mut bound = BigInt::from(0);
    for (index, (_, b)) in terms.iter().enumerate() {
        if !(b.is_positive() && *b < Real::one()) {
            return Err(ValidationError::RatioOutOfRange { index });
        }
        let this = (&Real::one() - b).recip().ceil_to_bigint();
        if this > bound {
            bound = this;
        }
    }
    bound.to_u64().ok_or(ValidationError::ThresholdOverflow)
}

/// Checks every admissibility condition, reporting one error per violated
/// condition. On success the terms are merged (equal ratios summed) and
/// sorted by ascending ratio, and an omitted `n0` is resolved to the
/// smallest admissible value.
pub fn validate(raw: &RawRecurrence) -> Result<RecurrenceSpec, Vec<ValidationError>> {
    let mut errors = Vec::new();

    if raw.terms.is_empty() {
        errors.push(ValidationError::EmptyTermList);
    }
    let mut terms_admissible = !raw.terms.is_empty();
    for (index, (a, b)) in raw.terms.iter().enumerate() {
        if !a.is_positive() {
            errors.push(ValidationError::NonPositiveCoefficient { field: "a", index });
            terms_admissible = false;
        }
        if !(b.is_positive() && *b < Real::one()) {
            errors.push(ValidationError::RatioOutOfRange { index });
            terms_admissible = false;
        }
    }
    if !raw.c.is_positive() {
        errors.push(ValidationError::NonPositiveCoefficient { field: "c", index: 0 });
    }
    if !raw.d.is_positive() {
        errors.push(ValidationError::NonPositiveCoefficient { field: "d", index: 0 });
    }
    if raw.alpha.is_negative() {
        errors.push(ValidationError::NegativeExponent { field: "alpha" });
    }
    if raw.beta.is_negative() {
        errors.push(ValidationError::NegativeExponent { field: "beta" });
    }

    let mut n0 = raw.n0.unwrap_or(0);
    if terms_admissible {
        match auto_n0(&raw.terms) {
            Ok(required) => match raw.n0 {
                Some(given) if given < required => {
                    errors.push(ValidationError::ThresholdTooSmall { given, required });
                }
                Some(given) => n0 = given,
                None => n0 = required,
            },
            Err(e) => errors.push(e),
        }
    }

    if !errors.is_empty() {
        return Err(errors);
    }

    // Canonicalize: merge equal ratios, then sort ascending. g, the
    // evaluator and the characteristic root are invariant under the merge.
    let mut terms: Vec<RecTerm> = Vec::new();
    for (a, b) in &raw.terms {
        match terms.iter_mut().find(|t| t.b == *b) {
            Some(t) => t.a = &t.a + a,
            None => terms.push(RecTerm { a: a.clone(), b: b.clone() }),
        }
    }
    terms.sort_by(|x, y| x.b.cmp(&y.b));

    Ok(RecurrenceSpec {
        driving: DrivingTerm {
            c: raw.c.clone(),
            alpha: raw.alpha.clone(),
            beta: raw.beta.clone(),
        },
        terms,
        n0,
        d: raw.d.clone(),
    })
}

impl RecurrenceSpec {
    /// The raw fields of an already-validated spec (for re-validation and
    /// for building modified variants).
    pub fn to_raw(&self) -> RawRecurrence {
        RawRecurrence {
            c: self.driving.c.clone(),
            alpha: self.driving.alpha.clone(),
            beta: self.driving.beta.clone(),
            terms: self.terms.iter().map(|t| (t.a.clone(), t.b.clone())).collect(),
            n0: Some(self.n0),
            d: self.d.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn real(p: i64, q: i64) -> Real {
        Real::from_ratio(p, q).unwrap()
    }

    fn raw(
        c: i64,
        alpha: i64,
        beta: i64,
        d: i64,
        n0: Option<u64>,
        terms: &[(Real, Real)],
    ) -> RawRecurrence {
        RawRecurrence {
            c: Real::from_int(c),
            alpha: Real::from_int(alpha),
            beta: Real::from_int(beta),
            terms: terms.to_vec(),
            n0,
            d: Real::from_int(d),
        }
    }

    #[test]
    fn accepts_the_basic_spec() {
        let spec = validate(&raw(1, 1, 0, 1, Some(2), &[(real(2, 1), real(1, 2))])).unwrap();
        assert_eq!(spec.n0, 2);
        assert_eq!(spec.terms.len(), 1);
        assert_eq!(spec.terms[0].a, Real::from_int(2));
        assert_eq!(spec.terms[0].b, real(1, 2));
    }

    #[test]
    fn rejects_unit_ratio() {
        let errs = validate(&raw(1, 1, 0, 1, None, &[(real(1, 1), real(1, 1))])).unwrap_err();
        assert_eq!(errs, vec![ValidationError::RatioOutOfRange { index: 0 }]);
    }

    #[test]
    fn rejects_small_threshold() {
        let errs = validate(&raw(1, 1, 0, 1, Some(1), &[(real(1, 1), real(1, 2))])).unwrap_err();
        assert_eq!(
            errs,
            vec![ValidationError::ThresholdTooSmall { given: 1, required: 2 }]
        );
    }

    #[test]
    fn one_error_per_violated_condition() {
        let bad = RawRecurrence {
            c: Real::zero(),
            alpha: real(-1, 2),
            beta: Real::zero(),
            terms: vec![(Real::zero(), real(3, 2))],
            n0: Some(1),
            d: Real::from_int(1),
        };
        let errs = validate(&bad).unwrap_err();
        assert!(errs.contains(&ValidationError::NonPositiveCoefficient { field: "a", index: 0 }));
        assert!(errs.contains(&ValidationError::RatioOutOfRange { index: 0 }));
        assert!(errs.contains(&ValidationError::NonPositiveCoefficient { field: "c", index: 0 }));
        assert!(errs.contains(&ValidationError::NegativeExponent { field: "alpha" }));
        // threshold is not checked while the term list is inadmissible
        assert!(!errs.iter().any(|e| matches!(e, ValidationError::ThresholdTooSmall { .. })));
    }

    #[test]
    fn rejects_empty_terms() {
        let errs = validate(&raw(1, 0, 0, 1, None, &[])).unwrap_err();
        assert_eq!(errs, vec![ValidationError::EmptyTermList]);
    }

    #[test]
    fn auto_n0_examples() {
        let one = Real::from_int(1);
        assert_eq!(auto_n0(&[(one.clone(), real(1, 2))]).unwrap(), 2);
        // exactness matters: 1/(1 - 0.9) = 10, and ceil(0.9*10) = 9 <= 9
        assert_eq!(auto_n0(&[(one.clone(), real(9, 10))]).unwrap(), 10);
        assert_eq!(
            auto_n0(&[(one.clone(), real(1, 5)), (one.clone(), real(7, 10))]).unwrap(),
            4
        );
        assert_eq!(auto_n0(&[]).unwrap_err(), ValidationError::EmptyTermList);
    }

    #[test]
    fn auto_n0_result_validates() {
        for b in [real(1, 2), real(9, 10), real(99, 100), real(1, 100)] {
            let terms = vec![(Real::from_int(1), b)];
            let n0 = auto_n0(&terms).unwrap();
            assert!(validate(&raw(1, 1, 0, 1, Some(n0), &terms)).is_ok());
            assert!(n0 >= 2);
        }
    }

    #[test]
    fn merges_equal_ratios_and_sorts() {
        let spec = validate(&raw(
            1,
            1,
            0,
            1,
            None,
            &[
                (Real::from_int(1), real(7, 10)),
                (Real::from_int(1), real(1, 2)),
                (Real::from_int(1), real(1, 2)),
            ],
        ))
        .unwrap();
        assert_eq!(spec.terms.len(), 2);
        assert_eq!(spec.terms[0].b, real(1, 2));
        assert_eq!(spec.terms[0].a, Real::from_int(2));
        assert_eq!(spec.terms[1].b, real(7, 10));
        assert_eq!(*spec.b_min(), real(1, 2));
    }

    #[test]
    fn ceil_times_boundary() {
        // the b = 9/10, n0 = 10 corner: ceil(9/10 * 10) = 9 = n - 1
        let term = RecTerm { a: Real::from_int(1), b: real(9, 10) };
        assert_eq!(term.ceil_times(10), 9);
        assert_eq!(term.ceil_times(11), 10);
    }

    #[test]
    fn shrinkage_holds_over_a_long_range() {
        let specs = [
            validate(&raw(1, 1, 0, 1, None, &[(Real::from_int(1), real(9, 10))])).unwrap(),
            validate(&raw(
                1,
                1,
                0,
                1,
                None,
                &[(Real::from_int(1), real(1, 5)), (Real::from_int(1), real(7, 10))],
            ))
            .unwrap(),
            validate(&raw(1, 0, 0, 1, None, &[(Real::from_int(2), real(1, 2))])).unwrap(),
        ];
        for spec in &specs {
            for n in spec.n0..=spec.n0 + 10_000 {
                for term in &spec.terms {
                    assert!(term.ceil_times(n) < n, "n={n}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn validate_is_idempotent(
            k in 1usize..4,
            seeds in prop::collection::vec((1i64..50, 1i64..20, 2i64..20), 4),
            n0_extra in 0u64..5,
        ) {
            let terms: Vec<(Real, Real)> = seeds[..k]
                .iter()
                .map(|(a, bp, bq)| {
                    let (lo, hi) = if bp < bq { (*bp, *bq) } else { (*bq, *bp + 1) };
                    (real(*a, 7), real(lo, hi))
                })
                .collect();
            let auto = auto_n0(&terms).unwrap();
            let raw = RawRecurrence {
                c: real(3, 2),
                alpha: Real::from_int(1),
                beta: Real::zero(),
                terms,
                n0: Some(auto + n0_extra),
                d: Real::one(),
            };
            let spec = validate(&raw).unwrap();
            let again = validate(&spec.to_raw()).unwrap();
            prop_assert_eq!(spec, again);
        }

        #[test]
        fn validated_ratios_shrink(
            bp in 1i64..99,
            n_off in 0u64..2000,
        ) {
            let terms = vec![(Real::from_int(1), real(bp, 100))];
            let spec = validate(&RawRecurrence {
                c: Real::one(),
                alpha: Real::one(),
                beta: Real::zero(),
                terms,
                n0: None,
                d: Real::one(),
            }).unwrap();
            let n = spec.n0 + n_off;
            prop_assert!(spec.terms[0].ceil_times(n) < n);
        }
    }
}
