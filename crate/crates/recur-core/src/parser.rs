//! Text format for recurrences.
//!
//! ```text
//! spec      := equation (";" directive)*
//! equation  := "T(n)" "=" addend ("+" addend)*
//! addend    := recterm | driveterm
//! recterm   := [number "*"] "T(ceil(" number "*n))"
//! driveterm := number ["*" npart] | npart
//! npart     := "n" ["^" number] ["*" "log(n)" ["^" number]]
//!            | "log(n)" ["^" number]
//! directive := "n0" "=" ("auto" | integer) | "d" "=" number
//! number    := decimal | integer "/" integer
//! ```
//!
//! Exactly one driving term is required. `#` starts a comment running to
//! the end of the line; whitespace between tokens is ignored. Numbers are
//! stored exactly (decimals and fractions are both rationals), `log(n)`
//! means the base-2 logarithm, an omitted `d` defaults to 1 and an
//! omitted `n0` (or `n0=auto`) resolves to the smallest admissible
//! threshold.
//!
//! [`canonical`] prints a validated spec in a fixed form that [`parse`]
//! inverts exactly, field for field.

use std::fmt;

use crate::model::{self, RawRecurrence, RecurrenceSpec, ValidationError};
use crate::number::Real;

/// Byte range into the input text.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
}

impl SourceSpan {
    fn new(start: usize, end: usize) -> Self {
        SourceSpan { start, end }
    }
}

/// What went wrong. `Invalid` wraps an admissibility violation found
/// after a syntactically well-formed parse; the other kinds are syntax.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedToken,
    MissingDrivingTerm,
    DuplicateDirective,
    BadNumber,
    Invalid(ValidationError),
}

#[derive(Clone, Debug)]
pub struct ParseError {
    pub span: SourceSpan,
    pub kind: ParseErrorKind,
    pub message: String,
}

impl ParseError {
    fn new(span: SourceSpan, kind: ParseErrorKind, message: impl Into<String>) -> Self {
        ParseError { span, kind, message: message.into() }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (bytes {}..{})", self.message, self.span.start, self.span.end)
    }
}

impl std::error::Error for ParseError {}

// ---- Lexer ----

#[derive(Clone, Debug, PartialEq, Eq)]
enum TokKind {
    Ident(String),
    Number(String),
    LParen,
    RParen,
    Star,
    Plus,
    Caret,
    Semi,
    Eq,
    Slash,
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    kind: TokKind,
    span: SourceSpan,
}

fn lex(input: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = input.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let start = i;
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'(' | b')' | b'*' | b'+' | b'^' | b';' | b'=' | b'/' => {
                let kind = match c {
                    b'(' => TokKind::LParen,
                    b')' => TokKind::RParen,
                    b'*' => TokKind::Star,
                    b'+' => TokKind::Plus,
                    b'^' => TokKind::Caret,
                    b';' => TokKind::Semi,
                    b'=' => TokKind::Eq,
                    _ => TokKind::Slash,
                };
                i += 1;
                tokens.push(Token { kind, span: SourceSpan::new(start, i) });
            }
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    if i >= bytes.len() || !bytes[i].is_ascii_digit() {
                        return Err(ParseError::new(
                            SourceSpan::new(start, i),
                            ParseErrorKind::BadNumber,
                            "decimal point must be followed by digits",
                        ));
                    }
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                tokens.push(Token {
                    kind: TokKind::Number(input[start..i].to_string()),
                    span: SourceSpan::new(start, i),
                });
            }
            b'A'..=b'Z' | b'a'..=b'z' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric()) {
                    i += 1;
                }
                tokens.push(Token {
                    kind: TokKind::Ident(input[start..i].to_string()),
                    span: SourceSpan::new(start, i),
                });
            }
            _ => {
                let ch = input[start..].chars().next().expect("byte inside input");
                let end = start + ch.len_utf8();
                return Err(ParseError::new(
                    SourceSpan::new(start, end),
                    ParseErrorKind::UnexpectedToken,
                    format!("unexpected character {ch:?}"),
                ));
            }
        }
    }
    tokens.push(Token { kind: TokKind::Eof, span: SourceSpan::new(bytes.len(), bytes.len()) });
    Ok(tokens)
}

// ---- Parser ----

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

/// A parsed number with the span it came from (spans drive validation
/// diagnostics).
#[derive(Clone, Debug)]
struct Spanned {
    value: Real,
    span: SourceSpan,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek2(&self) -> &Token {
        &self.tokens[(self.pos + 1).min(self.tokens.len() - 1)]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        let t = self.peek();
        ParseError::new(
            t.span,
            ParseErrorKind::UnexpectedToken,
            format!("expected {wanted}"),
        )
    }

    fn expect_kind(&mut self, kind: &TokKind, wanted: &str) -> Result<Token, ParseError> {
        if &self.peek().kind == kind {
            Ok(self.bump())
        } else {
            Err(self.unexpected(wanted))
        }
    }

    fn expect_ident(&mut self, name: &str) -> Result<Token, ParseError> {
        match &self.peek().kind {
            TokKind::Ident(s) if s == name => Ok(self.bump()),
            _ => Err(self.unexpected(&format!("'{name}'"))),
        }
    }

    fn at_ident(&self, name: &str) -> bool {
        matches!(&self.peek().kind, TokKind::Ident(s) if s == name)
    }

    /// number := decimal | integer "/" integer
    fn number(&mut self) -> Result<Spanned, ParseError> {
        let tok = match &self.peek().kind {
            TokKind::Number(_) => self.bump(),
            _ => return Err(self.unexpected("a number")),
        };
        let text = match &tok.kind {
            TokKind::Number(t) => t.clone(),
            _ => unreachable!(),
        };
        let first = Real::from_decimal_str(&text).ok_or_else(|| {
            ParseError::new(tok.span, ParseErrorKind::BadNumber, format!("bad number {text:?}"))
        })?;
        if self.peek().kind != TokKind::Slash {
            return Ok(Spanned { value: first, span: tok.span });
        }
        // fraction sugar: both sides must be plain integers
        self.bump();
        let den_tok = match &self.peek().kind {
            TokKind::Number(_) => self.bump(),
            _ => return Err(self.unexpected("a denominator")),
        };
        let den_text = match &den_tok.kind {
            TokKind::Number(t) => t.clone(),
            _ => unreachable!(),
        };
        let span = SourceSpan::new(tok.span.start, den_tok.span.end);
        if text.contains('.') || den_text.contains('.') {
            return Err(ParseError::new(
                span,
                ParseErrorKind::BadNumber,
                "fraction parts must be integers",
            ));
        }
        let den = Real::from_decimal_str(&den_text).ok_or_else(|| {
            ParseError::new(den_tok.span, ParseErrorKind::BadNumber, format!("bad number {den_text:?}"))
        })?;
        if den.is_zero() {
            return Err(ParseError::new(span, ParseErrorKind::BadNumber, "zero denominator"));
        }
        Ok(Spanned { value: &first / &den, span })
    }

    /// integer (no decimal point, fits in u64)
    fn integer(&mut self, what: &str) -> Result<(u64, SourceSpan), ParseError> {
        let n = self.number()?;
        match n.value.to_u64() {
            Some(v) => Ok((v, n.span)),
            None => Err(ParseError::new(
                n.span,
                ParseErrorKind::BadNumber,
                format!("{what} must be a nonnegative integer"),
            )),
        }
    }
}

#[derive(Default)]
struct Equation {
    terms: Vec<(Spanned, Spanned)>,
    driving: Option<(Spanned, Spanned, Spanned)>, // (c, alpha, beta)
    span: SourceSpan,
}

/// `"T(ceil(" number "*n))"` after the optional leading coefficient.
fn rec_tail(p: &mut Parser, a: Spanned, eq: &mut Equation) -> Result<(), ParseError> {
    let t = p.expect_ident("T")?;
    p.expect_kind(&TokKind::LParen, "'('")?;
    p.expect_ident("ceil")?;
    p.expect_kind(&TokKind::LParen, "'('")?;
    let b = p.number()?;
    p.expect_kind(&TokKind::Star, "'*'")?;
    p.expect_ident("n")?;
    p.expect_kind(&TokKind::RParen, "')'")?;
    p.expect_kind(&TokKind::RParen, "')'")?;
    let mut a = a;
    if a.span.start == a.span.end {
        // implicit coefficient 1: point its span at the T token
        a.span = t.span;
    }
    eq.terms.push((a, b));
    Ok(())
}

/// `npart := "n" [^num] ["*" "log(n)" [^num]] | "log(n)" [^num]`,
/// returning (alpha, beta).
fn npart(p: &mut Parser) -> Result<(Spanned, Spanned), ParseError> {
    let here = p.peek().span;
    let implicit_zero = |span| Spanned { value: Real::zero(), span };
    if p.at_ident("n") {
        let n_tok = p.bump();
        let alpha = if p.peek().kind == TokKind::Caret {
            p.bump();
            p.number()?
        } else {
            Spanned { value: Real::one(), span: n_tok.span }
        };
        // optional "* log(n) [^ num]"; a '*' can also start the next
        // addend's coefficient, so only consume it when log follows
        if p.peek().kind == TokKind::Star && matches!(&p.peek2().kind, TokKind::Ident(s) if s == "log")
        {
            p.bump();
            let beta = log_part(p)?;
            Ok((alpha, beta))
        } else {
            Ok((alpha, implicit_zero(n_tok.span)))
        }
    } else if p.at_ident("log") {
        let beta = log_part(p)?;
        Ok((implicit_zero(here), beta))
    } else {
        Err(p.unexpected("'n' or 'log(n)'"))
    }
}

/// `"log(n)" ["^" number]`, returning beta.
fn log_part(p: &mut Parser) -> Result<Spanned, ParseError> {
    let log_tok = p.expect_ident("log")?;
    p.expect_kind(&TokKind::LParen, "'('")?;
    p.expect_ident("n")?;
    p.expect_kind(&TokKind::RParen, "')'")?;
    if p.peek().kind == TokKind::Caret {
        p.bump();
        p.number()
    } else {
        Ok(Spanned { value: Real::one(), span: log_tok.span })
    }
}

fn addend(p: &mut Parser, eq: &mut Equation) -> Result<(), ParseError> {
    let start_span = p.peek().span;
    match p.peek().kind.clone() {
        TokKind::Ident(s) if s == "T" => {
            let one = Spanned { value: Real::one(), span: SourceSpan::new(start_span.start, start_span.start) };
            rec_tail(p, one, eq)
        }
        TokKind::Ident(s) if s == "n" || s == "log" => {
            let (alpha, beta) = npart(p)?;
            set_driving(
                eq,
                Spanned { value: Real::one(), span: start_span },
                alpha,
                beta,
                start_span,
            )
        }
        TokKind::Number(_) => {
            let num = p.number()?;
            if p.peek().kind == TokKind::Star {
                match &p.peek2().kind {
                    TokKind::Ident(s) if s == "T" => {
                        p.bump();
                        return rec_tail(p, num, eq);
                    }
                    TokKind::Ident(s) if s == "n" || s == "log" => {
                        p.bump();
                        let (alpha, beta) = npart(p)?;
                        return set_driving(eq, num, alpha, beta, start_span);
                    }
                    _ => {
                        p.bump();
                        return Err(p.unexpected("'T', 'n' or 'log(n)' after '*'"));
                    }
                }
            }
            // bare constant: c with alpha = beta = 0
            let zero = |span| Spanned { value: Real::zero(), span };
            set_driving(eq, num.clone(), zero(num.span), zero(num.span), start_span)
        }
        _ => Err(p.unexpected("a recursive term or a driving term")),
    }
}

fn set_driving(
    eq: &mut Equation,
    c: Spanned,
    alpha: Spanned,
    beta: Spanned,
    at: SourceSpan,
) -> Result<(), ParseError> {
    if eq.driving.is_some() {
        return Err(ParseError::new(
            at,
            ParseErrorKind::UnexpectedToken,
            "more than one driving term (write a single c*n^a*log(n)^b summand)",
        ));
    }
    eq.driving = Some((c, alpha, beta));
    Ok(())
}

/// Parses and validates a recurrence. The result always satisfies the
/// model invariants; admissibility violations are reported with the span
/// of the offending token.
pub fn parse(input: &str) -> Result<RecurrenceSpec, ParseError> {
    let tokens = lex(input)?;
    let mut p = Parser { tokens, pos: 0 };

    // "T(n)" "="
    let head = p.expect_ident("T")?;
    p.expect_kind(&TokKind::LParen, "'('")?;
    p.expect_ident("n")?;
    p.expect_kind(&TokKind::RParen, "')'")?;
    p.expect_kind(&TokKind::Eq, "'='")?;

    let mut eq = Equation::default();
    addend(&mut p, &mut eq)?;
    while p.peek().kind == TokKind::Plus {
        p.bump();
        addend(&mut p, &mut eq)?;
    }
    eq.span = SourceSpan::new(head.span.start, p.peek().span.start);

    // directives
    let mut n0: Option<(Option<u64>, SourceSpan)> = None;
    let mut d: Option<Spanned> = None;
    while p.peek().kind == TokKind::Semi {
        p.bump();
        let name_tok = match &p.peek().kind {
            TokKind::Ident(s) if s == "n0" || s == "d" => p.bump(),
            _ => return Err(p.unexpected("'n0' or 'd'")),
        };
        let name = match &name_tok.kind {
            TokKind::Ident(s) => s.clone(),
            _ => unreachable!(),
        };
        p.expect_kind(&TokKind::Eq, "'='")?;
        if name == "n0" {
            if n0.is_some() {
                return Err(ParseError::new(
                    name_tok.span,
                    ParseErrorKind::DuplicateDirective,
                    "duplicate n0 directive",
                ));
            }
            if p.at_ident("auto") {
                let tok = p.bump();
                n0 = Some((None, tok.span));
            } else {
                let (v, span) = p.integer("n0")?;
                n0 = Some((Some(v), span));
            }
        } else {
            if d.is_some() {
                return Err(ParseError::new(
                    name_tok.span,
                    ParseErrorKind::DuplicateDirective,
                    "duplicate d directive",
                ));
            }
            let val = p.number()?;
            d = Some(val);
        }
    }
    if p.peek().kind != TokKind::Eof {
        return Err(p.unexpected("';' or end of input"));
    }

    let driving = match eq.driving {
        Some(t) => t,
        None => {
            return Err(ParseError::new(
                eq.span,
                ParseErrorKind::MissingDrivingTerm,
                "the equation needs a driving term (c > 0)",
            ))
        }
    };

    let (c, alpha, beta) = driving;
    let d = d.unwrap_or(Spanned { value: Real::one(), span: eq.span });
    let (n0_value, n0_span) = match n0 {
        Some((v, span)) => (v, span),
        None => (None, eq.span),
    };

    let raw = RawRecurrence {
        c: c.value.clone(),
        alpha: alpha.value.clone(),
        beta: beta.value.clone(),
        terms: eq.terms.iter().map(|(a, b)| (a.value.clone(), b.value.clone())).collect(),
        n0: n0_value,
        d: d.value.clone(),
    };

    model::validate(&raw).map_err(|errors| {
        let first = errors.into_iter().next().expect("validate returned Err with no errors");
        let span = match &first {
            ValidationError::NonPositiveCoefficient { field: "a", index } => eq.terms[*index].0.span,
            ValidationError::NonPositiveCoefficient { field: "c", .. } => c.span,
            ValidationError::NonPositiveCoefficient { .. } => d.span,
            ValidationError::RatioOutOfRange { index } => eq.terms[*index].1.span,
            ValidationError::NegativeExponent { field: "alpha" } => alpha.span,
            ValidationError::NegativeExponent { .. } => beta.span,
            ValidationError::ThresholdTooSmall { .. } => n0_span,
            ValidationError::EmptyTermList => eq.span,
            ValidationError::ThresholdOverflow => n0_span,
        };
        let message = first.to_string();
        ParseError::new(span, ParseErrorKind::Invalid(first), message)
    })
}

/// Prints a validated spec in the canonical form
/// `T(n) = a*T(ceil(b*n)) + ... + c*n^alpha*log(n)^beta ; n0=N ; d=D`.
/// [`parse`] recovers the spec exactly.
pub fn canonical(spec: &RecurrenceSpec) -> String {
    let mut out = String::from("T(n) = ");
    for term in &spec.terms {
        out.push_str(&format!(
            "{}*T(ceil({}*n)) + ",
            term.a.to_canonical_string(),
            term.b.to_canonical_string()
        ));
    }
    out.push_str(&format!(
        "{}*n^{}*log(n)^{} ; n0={} ; d={}",
        spec.driving.c.to_canonical_string(),
        spec.driving.alpha.to_canonical_string(),
        spec.driving.beta.to_canonical_string(),
        spec.n0,
        spec.d.to_canonical_string()
    ));
    out
}

impl fmt::Display for RecurrenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&canonical(self))
    }
}
