//! `recur`: command-line front end for the recurrence toolkit.
//!
//! Subcommands: `solve` (characteristic root and growth class), `eval`
//! (exact table export as CSV), `fit` (empirical log-log slope checked
//! against the prediction), `certify` (upper-bound witness constants and
//! finite-range verification).
//!
//! The recurrence text is read from the positional file path, or from
//! standard input when the path is absent or `-`.
//!
//! Exit codes are the machine interface and are total:
//!
//! - 0: success (and, for `fit`, a CONSISTENT verdict)
//! - 1: parse, validation or usage error
//! - 2: internal numeric failure
//! - 3: evaluation overflow or table limit exceeded
//! - 4: `fit` measured an INCONSISTENT slope
//! - 5: `certify` on a spec outside the certified fragment
//! - 6: `certify` verification failure
//!
//! Failures never print to stdout; diagnostics and failure reports go to
//! stderr. JSON reports have a fixed key order and print numbers in the
//! shortest form that parses back to the identical value, so identical
//! inputs produce byte-identical reports.
//!
//! `RECURRENCE_EVAL_LIMIT` overrides the default cap of 10^7 on
//! evaluation table sizes.

use std::fs;
use std::io::{self, Read, Write};

use serde::Serialize;

use recur_core::asymptotics::{self, Verdict};
use recur_core::certificate::{self, CertificateError};
use recur_core::characteristic::{self, RootError};
use recur_core::evaluator::{self, EvalError};
use recur_core::model::ValidationError;
use recur_core::parser::{self, ParseError, ParseErrorKind};
use recur_core::RecurrenceSpec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_EVAL: i32 = 3;
pub const EXIT_INCONSISTENT: i32 = 4;
pub const EXIT_NOT_APPLICABLE: i32 = 5;
pub const EXIT_VERIFY_FAILED: i32 = 6;

const USAGE: &str = "\
usage: recur <command> [input] [options]

commands:
  solve    [input] [--tol T] [--tau T] [--json]
  eval     [input] --max N [--csv PATH]
  fit      [input] [--min N] [--max N] [--points K] [--predicted E]
  certify  [input] [--horizon N] [--f2 F]

input is a file path, or stdin when absent or '-'.
RECURRENCE_EVAL_LIMIT overrides the evaluation size cap (default 10000000).";

pub fn run(args: &[String]) -> i32 {
    match dispatch(args) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("{}", failure.message);
            failure.code
        }
    }
}

struct Failure {
    code: i32,
    message: String,
}

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

fn usage_error(message: impl std::fmt::Display) -> Failure {
    fail(EXIT_INPUT, format!("error: {message}\n{USAGE}"))
}

fn dispatch(args: &[String]) -> Result<i32, Failure> {
    let command = args.first().ok_or_else(|| usage_error("missing command"))?;
    let parsed = ParsedArgs::parse(&args[1..])?;
    let limit = eval_limit()?;
    match command.as_str() {
        "solve" => cmd_solve(parsed),
        "eval" => cmd_eval(parsed, limit),
        "fit" => cmd_fit(parsed, limit),
        "certify" => cmd_certify(parsed, limit),
        other => Err(usage_error(format!("unknown command {other:?}"))),
    }
}

fn eval_limit() -> Result<u64, Failure> {
    match std::env::var("RECURRENCE_EVAL_LIMIT") {
        Ok(text) => text
            .trim()
            .parse::<u64>()
            .map_err(|_| usage_error(format!("RECURRENCE_EVAL_LIMIT is not an integer: {text:?}"))),
        Err(_) => Ok(evaluator::DEFAULT_EVAL_LIMIT),
    }
}

// ---- Argument handling ----

struct ParsedArgs {
    input: Option<String>,
    options: Vec<(String, String)>,
    json: bool,
}

impl ParsedArgs {
    fn parse(args: &[String]) -> Result<Self, Failure> {
        let mut input = None;
        let mut options = Vec::new();
        let mut json = false;
        let mut it = args.iter().peekable();
        while let Some(arg) = it.next() {
            if arg == "--json" {
                json = true;
            } else if let Some(name) = arg.strip_prefix("--") {
                let (name, value) = match name.split_once('=') {
                    Some((n, v)) => (n.to_string(), v.to_string()),
                    None => {
                        let value = it
                            .next()
                            .ok_or_else(|| usage_error(format!("--{name} needs a value")))?;
                        (name.to_string(), value.clone())
                    }
                };
                options.push((name, value));
            } else if input.is_none() {
                input = Some(arg.clone());
            } else {
                return Err(usage_error(format!("unexpected argument {arg:?}")));
            }
        }
        Ok(ParsedArgs { input, options, json })
    }

    fn take(&mut self, name: &str) -> Option<String> {
        let pos = self.options.iter().position(|(n, _)| n == name)?;
        Some(self.options.remove(pos).1)
    }

    fn take_parsed<T: std::str::FromStr>(&mut self, name: &str) -> Result<Option<T>, Failure> {
        match self.take(name) {
            Some(text) => text
                .parse::<T>()
                .map(Some)
                .map_err(|_| usage_error(format!("invalid value for --{name}: {text:?}"))),
            None => Ok(None),
        }
    }

    fn finish(&self) -> Result<(), Failure> {
        if let Some((name, _)) = self.options.first() {
            return Err(usage_error(format!("unknown option --{name}")));
        }
        Ok(())
    }

    fn read_spec(&self) -> Result<(RecurrenceSpec, String), Failure> {
        let text = match self.input.as_deref() {
            None | Some("-") => {
                let mut buf = String::new();
                io::stdin()
                    .read_to_string(&mut buf)
                    .map_err(|e| fail(EXIT_INPUT, format!("error: cannot read stdin: {e}")))?;
                buf
            }
            Some(path) => fs::read_to_string(path)
                .map_err(|e| fail(EXIT_INPUT, format!("error: cannot read {path}: {e}")))?,
        };
        let spec = parser::parse(&text).map_err(|e| parse_failure(&text, e))?;
        Ok((spec, text))
    }
}

fn parse_failure(text: &str, e: ParseError) -> Failure {
    let snippet = text.get(e.span.start..e.span.end).unwrap_or("");
    fail(
        EXIT_INPUT,
        format!(
            "error[{}]: {} at bytes {}..{}: {:?}",
            kind_name(&e.kind),
            e.message,
            e.span.start,
            e.span.end,
            snippet
        ),
    )
}

fn kind_name(kind: &ParseErrorKind) -> &'static str {
    match kind {
        ParseErrorKind::UnexpectedToken => "UnexpectedToken",
        ParseErrorKind::MissingDrivingTerm => "MissingDrivingTerm",
        ParseErrorKind::DuplicateDirective => "DuplicateDirective",
        ParseErrorKind::BadNumber => "BadNumber",
        ParseErrorKind::Invalid(v) => match v {
            ValidationError::NonPositiveCoefficient { .. } => "NonPositiveCoefficient",
            ValidationError::RatioOutOfRange { .. } => "RatioOutOfRange",
            ValidationError::NegativeExponent { .. } => "NegativeExponent",
            ValidationError::ThresholdTooSmall { .. } => "ThresholdTooSmall",
            ValidationError::EmptyTermList => "EmptyTermList",
            ValidationError::ThresholdOverflow => "ThresholdOverflow",
        },
    }
}

fn eval_failure(e: EvalError) -> Failure {
    match e {
        EvalError::LimitExceeded { .. } | EvalError::Overflow { .. } => {
            fail(EXIT_EVAL, format!("error: {e}"))
        }
        other => fail(EXIT_INPUT, format!("error: {other}")),
    }
}

// ---- solve ----

#[derive(Serialize)]
struct SolveReport {
    spec: String,
    r: f64,
    residual: f64,
    branch: String,
    theta: String,
    g_at_alpha: f64,
    warnings: Vec<String>,
}

fn cmd_solve(mut args: ParsedArgs) -> Result<i32, Failure> {
    let tol: f64 = args.take_parsed("tol")?.unwrap_or(characteristic::DEFAULT_TOL);
    let tau: f64 = args.take_parsed("tau")?.unwrap_or(asymptotics::DEFAULT_TAU);
    args.finish()?;
    let tolerances_ok = tol.is_finite() && tol > 0.0 && tau.is_finite() && tau > 0.0;
    if !tolerances_ok {
        return Err(usage_error("--tol and --tau must be positive"));
    }
    let (spec, _) = args.read_spec()?;

    let root = characteristic::solve_root_with_tol(&spec, tol).map_err(|e: RootError| {
        fail(EXIT_NUMERIC, format!("error: root solving failed: {e}"))
    })?;
    let class = asymptotics::classify_spec(&spec, &root, tau);
    let report = SolveReport {
        spec: parser::canonical(&spec),
        r: root.r,
        residual: root.residual,
        branch: class.branch.to_string(),
        theta: class.theta.clone(),
        g_at_alpha: characteristic::g(&spec, spec.driving.alpha.to_f64()),
        warnings: class.warnings.clone(),
    };
    if args.json {
        println!("{}", to_json(&report));
    } else {
        println!("spec:       {}", report.spec);
        println!("r:          {}", report.r);
        println!("residual:   {:e}", report.residual);
        println!("branch:     {}", report.branch);
        println!("theta:      {}", report.theta);
        println!("g(alpha):   {}", report.g_at_alpha);
        if report.warnings.is_empty() {
            println!("warnings:   none");
        } else {
            for w in &report.warnings {
                println!("warning:    {w}");
            }
        }
    }
    Ok(EXIT_OK)
}

// ---- eval ----

fn cmd_eval(mut args: ParsedArgs, limit: u64) -> Result<i32, Failure> {
    let max: u64 = args
        .take_parsed("max")?
        .ok_or_else(|| usage_error("eval requires --max N"))?;
    let csv_path = args.take("csv");
    args.finish()?;
    if max == 0 {
        return Err(usage_error("--max must be at least 1"));
    }
    let (spec, _) = args.read_spec()?;
    let table = evaluator::eval_upto_with_limit(&spec, max, limit).map_err(eval_failure)?;
    let write_to = |out: &mut dyn Write| evaluator::write_csv(&table, 1..=max, out);
    match csv_path {
        Some(path) => {
            let mut file = fs::File::create(&path)
                .map_err(|e| fail(EXIT_INPUT, format!("error: cannot write {path}: {e}")))?;
            write_to(&mut file)
                .map_err(|e| fail(EXIT_INPUT, format!("error: cannot write {path}: {e}")))?;
        }
        None => {
            let stdout = io::stdout();
            write_to(&mut stdout.lock())
                .map_err(|e| fail(EXIT_INPUT, format!("error: cannot write stdout: {e}")))?;
        }
    }
    Ok(EXIT_OK)
}

// ---- fit ----

#[derive(Serialize)]
struct FitReport {
    spec: String,
    branch: String,
    predicted_exponent: f64,
    fitted_slope: f64,
    stderr: f64,
    points: usize,
    gap: f64,
    threshold: f64,
    verdict: String,
}

fn cmd_fit(mut args: ParsedArgs, limit: u64) -> Result<i32, Failure> {
    let min: u64 = args.take_parsed("min")?.unwrap_or(1 << 10);
    let max: u64 = args.take_parsed("max")?.unwrap_or(1 << 20);
    let points: usize = args.take_parsed("points")?.unwrap_or(11);
    let predicted_override: Option<f64> = args.take_parsed("predicted")?;
    args.finish()?;
    let (spec, _) = args.read_spec()?;

    let root = characteristic::solve_root(&spec)
        .map_err(|e| fail(EXIT_NUMERIC, format!("error: root solving failed: {e}")))?;
    let class = asymptotics::classify_spec(&spec, &root, asymptotics::DEFAULT_TAU);
    let samples =
        evaluator::sample_geometric_with_limit(&spec, min, max, points, limit).map_err(eval_failure)?;
    let fit = asymptotics::estimate_exponent(&samples)
        .map_err(|e| fail(EXIT_INPUT, format!("error: {e}")))?;
    let mut comparison = asymptotics::compare(&class, &fit);
    if let Some(predicted) = predicted_override {
        comparison.predicted_exponent = predicted;
        comparison.gap = (fit.slope - predicted).abs();
        comparison.verdict = if comparison.gap <= comparison.threshold {
            Verdict::Consistent
        } else {
            Verdict::Inconsistent
        };
    }

    let report = FitReport {
        spec: parser::canonical(&spec),
        branch: class.branch.to_string(),
        predicted_exponent: comparison.predicted_exponent,
        fitted_slope: comparison.fitted_slope,
        stderr: fit.stderr,
        points: fit.points,
        gap: comparison.gap,
        threshold: comparison.threshold,
        verdict: comparison.verdict.to_string(),
    };
    let line = to_json(&report);
    match comparison.verdict {
        Verdict::Consistent => {
            println!("{line}");
            Ok(EXIT_OK)
        }
        Verdict::Inconsistent => {
            eprintln!("{line}");
            Ok(EXIT_INCONSISTENT)
        }
    }
}

// ---- certify ----

#[derive(Serialize)]
struct FailureJson {
    check: String,
    n: u64,
    lhs: f64,
    rhs: f64,
}

#[derive(Serialize)]
struct CertifyReport {
    spec: String,
    r: f64,
    f1: f64,
    f2: f64,
    f3: f64,
    m0: f64,
    #[serde(rename = "M")]
    big_m: f64,
    horizon: u64,
    base_ok: bool,
    induction_ok: bool,
    closing1_ok: bool,
    closing2_ok: bool,
    t_le_mr_ok: bool,
    lower_floor_ok: bool,
    pass: bool,
    first_failure: Option<FailureJson>,
}

fn cmd_certify(mut args: ParsedArgs, limit: u64) -> Result<i32, Failure> {
    let horizon: u64 = args.take_parsed("horizon")?.unwrap_or(100_000);
    let f2: f64 = args.take_parsed("f2")?.unwrap_or(1.0);
    args.finish()?;
    let (spec, _) = args.read_spec()?;

    let root = characteristic::solve_root(&spec)
        .map_err(|e| fail(EXIT_NUMERIC, format!("error: root solving failed: {e}")))?;
    let cert = certificate::construct_with_limit(&spec, &root, f2, limit).map_err(|e| match e {
        CertificateError::NotApplicable(reason) => {
            fail(EXIT_NOT_APPLICABLE, format!("error: certificate not applicable: reason {reason}"))
        }
        CertificateError::InvalidParameter(msg) => usage_error(msg),
        CertificateError::Eval(e) => eval_failure(e),
    })?;
    let verification =
        certificate::verify_with_limit(&cert, &spec, horizon, limit).map_err(eval_failure)?;

    let report = CertifyReport {
        spec: parser::canonical(&spec),
        r: cert.r,
        f1: cert.f1,
        f2: cert.f2,
        f3: cert.f3,
        m0: cert.m0,
        big_m: cert.big_m,
        horizon: verification.horizon,
        base_ok: verification.base_ok,
        induction_ok: verification.induction_ok,
        closing1_ok: verification.closing1_ok,
        closing2_ok: verification.closing2_ok,
        t_le_mr_ok: verification.t_le_mr_ok,
        lower_floor_ok: verification.lower_floor_ok,
        pass: verification.pass(),
        first_failure: verification.first_failure.map(|w| FailureJson {
            check: w.check.to_string(),
            n: w.n,
            lhs: w.lhs,
            rhs: w.rhs,
        }),
    };
    let line = to_json(&report);
    if report.pass {
        println!("{line}");
        Ok(EXIT_OK)
    } else {
        eprintln!("{line}");
        Ok(EXIT_VERIFY_FAILED)
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("reports contain only finite numbers and strings")
}
