//! Reports shared by all subcommands, exit codes and fixed-width float output.

use std::collections::BTreeMap;
use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use phdae_core::{Error, Mat, TolerancePolicy};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(e) => match e {
                Error::InvalidInput(_) | Error::DimensionMismatch(_) => EXIT_USAGE,
                Error::Numerical(_) => EXIT_NUMERICAL,
                _ => EXIT_NEGATIVE,
            },
        }
    }

    pub fn status(&self) -> Status {
        match self.exit_code() {
            EXIT_USAGE => Status::UsageError,
            EXIT_NUMERICAL => Status::NumericalFailure,
            _ => Status::Negative,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    Negative,
    NumericalFailure,
    UsageError,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => EXIT_OK,
            Status::Negative => EXIT_NEGATIVE,
            Status::NumericalFailure => EXIT_NUMERICAL,
            Status::UsageError => EXIT_USAGE,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub status: Status,
    pub exit_code: i32,
    pub summary: String,
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool_version: &'static str,
    pub command: String,
    pub input: Option<String>,
    pub tolerances: TolerancePolicy,
    pub verdict: Verdict,
    pub residuals: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
    pub result: Value,
    /// Lines for the text format only.
    #[serde(skip)]
    pub details: Vec<String>,
}

impl Report {
    pub fn new(command: &str, input: Option<String>, tolerances: TolerancePolicy) -> Self {
        Report {
            tool_version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            input,
            tolerances,
            verdict: Verdict { status: Status::Ok, exit_code: EXIT_OK, summary: String::new(), reasons: Vec::new() },
            residuals: BTreeMap::new(),
            warnings: Vec::new(),
            result: Value::Null,
            details: Vec::new(),
        }
    }

    pub fn verdict(&mut self, status: Status, summary: impl Into<String>) {
        self.verdict.status = status;
        self.verdict.exit_code = status.exit_code();
        self.verdict.summary = summary.into();
    }

    pub fn reason(&mut self, r: impl Into<String>) {
        self.verdict.reasons.push(r.into());
    }

    pub fn residual(&mut self, name: &str, value: f64) {
        self.residuals.insert(name.to_string(), value);
    }

    pub fn result<T: Serialize>(&mut self, value: &T) {
        self.result = serde_json::to_value(value).expect("report payload serializes");
    }

    pub fn detail(&mut self, line: impl Into<String>) {
        self.details.push(line.into());
    }

    pub fn matrix(&mut self, name: &str, m: &Mat) {
        self.details.push(format!("{name} ({}x{}):", m.nrows(), m.ncols()));
        for i in 0..m.nrows() {
            let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:>11.4e}", m[(i, j)])).collect();
            self.details.push(format!("  [{}]", row.join(" ")));
        }
    }

    pub fn failure(command: &str, input: Option<String>, tolerances: TolerancePolicy, err: &CliError) -> Self {
        let mut r = Report::new(command, input, tolerances);
        r.verdict(err.status(), err.to_string());
        r
    }

    pub fn exit_code(&self) -> i32 {
        self.verdict.exit_code
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn to_text(&self) -> String {
        let mut out = Vec::new();
        let input = self.input.as_deref().map(|i| format!(" {i}")).unwrap_or_default();
        out.push(format!("phdae {} {}{input}", self.tool_version, self.command));
        let status = match self.verdict.status {
            Status::Ok => "ok",
            Status::Negative => "negative",
            Status::NumericalFailure => "numerical failure",
            Status::UsageError => "usage error",
        };
        out.push(format!("verdict: {status}: {}", self.verdict.summary));
        for r in &self.verdict.reasons {
            out.push(format!("  reason: {r}"));
        }
        for w in &self.warnings {
            out.push(format!("  warning: {w}"));
        }
        for (k, v) in &self.residuals {
            out.push(format!("residual {k} = {v:.3e}"));
        }
        out.extend(self.details.iter().cloned());
        let t = &self.tolerances;
        let rank = t.relative_rank_tol.map(|v| format!("{v:e}")).unwrap_or_else(|| "auto".into());
        out.push(format!(
            "tolerances: relative_rank_tol={rank} structure_tol={:e} cluster_tol={:e}",
            t.structure_tol, t.cluster_tol
        ));
        out.join("\n") + "\n"
    }
}

/// Pretty JSON with every float written as `{:.16e}` (17 significant digits).
struct FixedFloats(PrettyFormatter<'static>);

impl Formatter for FixedFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("JSON output");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits() {
        let s = to_json(&vec![0.1, -2.0, 1e-300]);
        assert!(s.contains("1.0000000000000001e-1"));
        assert!(s.contains("-2.0000000000000000e0"));
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![0.1, -2.0, 1e-300]);
    }

    #[test]
    fn non_finite_becomes_null() {
        assert!(to_json(&vec![f64::NAN]).contains("null"));
    }

    #[test]
    fn error_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), EXIT_USAGE);
        assert_eq!(CliError::Core(Error::NotRegular).exit_code(), EXIT_NEGATIVE);
        assert_eq!(CliError::Core(Error::Numerical("svd".into())).exit_code(), EXIT_NUMERICAL);
    }
}
