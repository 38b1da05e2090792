//! Run configuration: a JSON object with the environment inline (or as a
//! path under `environment`) plus run options.
//!
//! Parsing happens in two passes. Serde with `deny_unknown_fields` catches
//! syntax errors and unknown keys with their position; a second pass checks
//! required fields and reports the dotted name of the first one missing.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use scoremax_core::model::{EnvironmentSpec, ModelError, Rates};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl From<serde_json::Error> for ParseError {
    fn from(e: serde_json::Error) -> Self {
        ParseError { line: e.line(), column: e.column(), message: e.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid field `{field}`: {reason}")]
pub struct ValidationError {
    pub field: String,
    pub reason: String,
}

impl ValidationError {
    fn missing(field: &str) -> Self {
        ValidationError { field: field.to_string(), reason: "required but missing".into() }
    }

    fn new(field: impl Into<String>, reason: impl fmt::Display) -> Self {
        ValidationError { field: field.into(), reason: reason.to_string() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error in {origin}: {source}")]
    Parse { origin: String, source: ParseError },
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

impl ConfigError {
    pub fn parse_error(&self) -> Option<&ParseError> {
        match self {
            ConfigError::Parse { source, .. } => Some(source),
            _ => None,
        }
    }

    pub fn validation_error(&self) -> Option<&ValidationError> {
        match self {
            ConfigError::Validation(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    SolveDynamic,
    SolveStatic,
    BestResponse,
    Analytic,
    Verify,
    Sweep,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::SolveDynamic => "solve-dynamic",
            RunMode::SolveStatic => "solve-static",
            RunMode::BestResponse => "best-response",
            RunMode::Analytic => "analytic",
            RunMode::Verify => "verify",
            RunMode::Sweep => "sweep",
        }
    }

    fn needs_environment(self) -> bool {
        self != RunMode::Verify
    }
}

/// A swept parameter. `epsilon` sets `b1` so that the drift
/// `g1 + b1 − g0 − b0` equals the value; `r1` sweeps the V-shaped rule
/// `(1, r1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SweepParam {
    Delta,
    Periods,
    Prior,
    Cost,
    G1,
    G0,
    B1,
    B0,
    Epsilon,
    R1,
}

impl SweepParam {
    pub const ALL: [SweepParam; 10] = [
        SweepParam::Delta,
        SweepParam::Periods,
        SweepParam::Prior,
        SweepParam::Cost,
        SweepParam::G1,
        SweepParam::G0,
        SweepParam::B1,
        SweepParam::B0,
        SweepParam::Epsilon,
        SweepParam::R1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Delta => "delta",
            SweepParam::Periods => "periods",
            SweepParam::Prior => "prior",
            SweepParam::Cost => "cost",
            SweepParam::G1 => "lambda.g1",
            SweepParam::G0 => "lambda.g0",
            SweepParam::B1 => "lambda.b1",
            SweepParam::B0 => "lambda.b0",
            SweepParam::Epsilon => "epsilon",
            SweepParam::R1 => "r1",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    /// Applies the value to an environment. `r1` leaves it unchanged.
    pub fn apply(self, env: &mut EnvironmentSpec, v: f64) {
        let l = &mut env.lambda;
        match self {
            SweepParam::Delta => env.delta = v,
            SweepParam::Periods => env.periods = v as usize,
            SweepParam::Prior => env.prior = v,
            SweepParam::Cost => env.cost = v,
            SweepParam::G1 => l.g1 = v,
            SweepParam::G0 => l.g0 = v,
            SweepParam::B1 => l.b1 = v,
            SweepParam::B0 => l.b0 = v,
            SweepParam::Epsilon => l.b1 = l.g0 + l.b0 + v - l.g1,
            SweepParam::R1 => {}
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameter grid, in the order the axes are nested (first varies slowest).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axes: Vec<(SweepParam, Vec<f64>)>,
}

impl SweepSpec {
    pub fn cells(&self) -> usize {
        self.axes.iter().map(|(_, v)| v.len()).product()
    }

    /// Parameter values of cell `i` in row-major order.
    pub fn cell(&self, mut i: usize) -> Vec<(SweepParam, f64)> {
        let mut out = vec![(SweepParam::Delta, 0.0); self.axes.len()];
        for (slot, (p, vals)) in out.iter_mut().zip(&self.axes).rev() {
            *slot = (*p, vals[i % vals.len()]);
            i /= vals.len();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub environment: Option<EnvironmentSpec>,
    pub mode: RunMode,
    pub contract_path: Option<PathBuf>,
    pub sweep: Option<SweepSpec>,
    /// Output path prefix.
    pub out: String,
    /// Reserved; every computation is deterministic.
    pub seed: u64,
    pub tol: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRates {
    g1: Option<f64>,
    g0: Option<f64>,
    b1: Option<f64>,
    b0: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnvironment {
    delta: Option<f64>,
    periods: Option<f64>,
    prior: Option<f64>,
    cost: Option<f64>,
    lambda: Option<RawRates>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum EnvironmentRef {
    Path(PathBuf),
    Inline(RawEnvironment),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    environment: Option<EnvironmentRef>,
    delta: Option<f64>,
    periods: Option<f64>,
    prior: Option<f64>,
    cost: Option<f64>,
    lambda: Option<RawRates>,
    mode: Option<RunMode>,
    contract: Option<PathBuf>,
    sweep: Option<BTreeMap<String, Vec<f64>>>,
    out: Option<String>,
    seed: Option<u64>,
    tol: Option<f64>,
}

/// Values that replace or complete what the file says; the CLI fills these
/// from its subcommand and flags.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<RunMode>,
    pub out: Option<String>,
    pub contract: Option<PathBuf>,
    pub tol: Option<f64>,
}

/// Parses a configuration given as JSON text. Relative paths resolve
/// against `base`.
pub fn parse_config_str(text: &str, base: &Path, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig =
        serde_json::from_str(text).map_err(|e| ConfigError::Parse { origin: "config".into(), source: e.into() })?;
    let mode = overrides.mode.or(raw.mode).ok_or_else(|| ValidationError::missing("mode"))?;
    let out = overrides.out.clone().or(raw.out).ok_or_else(|| ValidationError::missing("out"))?;
    if out.is_empty() {
        return Err(ValidationError::new("out", "empty output prefix").into());
    }
    let inline_keys = raw.delta.is_some()
        || raw.periods.is_some()
        || raw.prior.is_some()
        || raw.cost.is_some()
        || raw.lambda.is_some();
    let inline = RawEnvironment { delta: raw.delta, periods: raw.periods, prior: raw.prior, cost: raw.cost, lambda: raw.lambda };
    let environment = match raw.environment {
        Some(_) if inline_keys => {
            return Err(ValidationError::new("environment", "given both inline and under `environment`").into())
        }
        Some(EnvironmentRef::Inline(env)) => Some(environment_from_raw(env, "environment.")?),
        Some(EnvironmentRef::Path(p)) => Some(load_environment(&base.join(p))?),
        None if inline_keys || mode.needs_environment() => Some(environment_from_raw(inline, "")?),
        None => None,
    };
    let contract_path = overrides.contract.clone().or(raw.contract.map(|p| base.join(p)));
    if mode == RunMode::BestResponse && contract_path.is_none() {
        return Err(ValidationError::missing("contract").into());
    }
    let sweep = match raw.sweep {
        Some(grid) => Some(sweep_from_raw(grid)?),
        None => None,
    };
    if mode == RunMode::Sweep && sweep.is_none() {
        return Err(ValidationError::missing("sweep").into());
    }
    let tol = overrides.tol.or(raw.tol).unwrap_or(1e-9);
    if !(tol > 0.0 && tol < 1e-3) {
        return Err(ValidationError::new("tol", "must lie in (0, 1e-3)").into());
    }
    Ok(RunConfig { environment, mode, contract_path, sweep, out, seed: raw.seed.unwrap_or(0), tol })
}

/// Parses a configuration file.
pub fn parse_config(path: &Path, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let text = read(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config_str(&text, base, overrides).map_err(|e| match e {
        ConfigError::Parse { source, .. } => ConfigError::Parse { origin: path.display().to_string(), source },
        other => other,
    })
}

/// Reads an environment-only JSON file.
pub fn load_environment(path: &Path) -> Result<EnvironmentSpec, ConfigError> {
    let text = read(path)?;
    parse_environment(&text).map_err(|e| match e {
        ConfigError::Parse { source, .. } => ConfigError::Parse { origin: path.display().to_string(), source },
        other => other,
    })
}

pub fn parse_environment(text: &str) -> Result<EnvironmentSpec, ConfigError> {
    let raw: RawEnvironment =
        serde_json::from_str(text).map_err(|e| ConfigError::Parse { origin: "environment".into(), source: e.into() })?;
    Ok(environment_from_raw(raw, "")?)
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })
}

fn environment_from_raw(raw: RawEnvironment, prefix: &str) -> Result<EnvironmentSpec, ValidationError> {
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| ValidationError::missing(&format!("{prefix}{name}")));
    let delta = need(raw.delta, "delta")?;
    let periods = need(raw.periods, "periods")?;
    let prior = need(raw.prior, "prior")?;
    let cost = need(raw.cost, "cost")?;
    let lambda = raw.lambda.ok_or_else(|| ValidationError::missing(&format!("{prefix}lambda")))?;
    let rates = Rates::new(
        need(lambda.g1, "lambda.g1")?,
        need(lambda.g0, "lambda.g0")?,
        need(lambda.b1, "lambda.b1")?,
        need(lambda.b0, "lambda.b0")?,
    );
    if !(periods >= 1.0 && periods.fract() == 0.0 && periods <= 1e6) {
        return Err(ValidationError::new(format!("{prefix}periods"), "must be a positive integer"));
    }
    let env = EnvironmentSpec { delta, periods: periods as usize, prior, cost, lambda: rates };
    env.validate().map_err(|e| ValidationError::new(format!("{prefix}{}", model_field(&e)), e))
}

/// Field a model error is about.
fn model_field(e: &ModelError) -> &'static str {
    match e {
        ModelError::NonFinite { field } => field,
        ModelError::InvalidPrior(_) => "prior",
        ModelError::InvalidCost(_) => "cost",
        ModelError::InvalidDelta(_) => "delta",
        ModelError::NoPeriods => "periods",
        _ => "lambda",
    }
}

fn sweep_from_raw(grid: BTreeMap<String, Vec<f64>>) -> Result<SweepSpec, ValidationError> {
    if grid.is_empty() {
        return Err(ValidationError::new("sweep", "no parameters given"));
    }
    let mut axes = Vec::with_capacity(grid.len());
    for (name, values) in grid {
        let param = SweepParam::from_name(&name)
            .ok_or_else(|| ValidationError::new(format!("sweep.{name}"), "unknown parameter"))?;
        if values.is_empty() {
            return Err(ValidationError::new(format!("sweep.{name}"), "empty value list"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ValidationError::new(format!("sweep.{name}"), "values must be finite"));
        }
        axes.push((param, values));
    }
    if axes.iter().any(|(p, _)| *p == SweepParam::Epsilon) && axes.iter().any(|(p, _)| *p == SweepParam::B1) {
        return Err(ValidationError::new("sweep.epsilon", "cannot be swept together with lambda.b1"));
    }
    Ok(SweepSpec { axes })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "delta": 0.1, "periods": 20, "prior": 0.4, "cost": 0.2,
        "lambda": {"g1": 2.0, "g0": 1.0, "b1": 1.0, "b0": 2.0},
        "mode": "solve-dynamic", "out": "runs/min"
    }"#;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        parse_config_str(text, Path::new("."), &Overrides::default())
    }

    #[test]
    fn minimal_config_is_accepted() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.mode, RunMode::SolveDynamic);
        assert_eq!(c.environment.unwrap().periods, 20);
        assert_eq!(c.tol, 1e-9);
        assert_eq!(c.seed, 0);
    }

    #[test]
    fn missing_rate_names_the_field() {
        let text = MINIMAL.replace(r#""g1": 2.0, "#, "");
        let err = parse(&text).unwrap_err();
        assert_eq!(err.validation_error().unwrap().field, "lambda.g1");
    }

    #[test]
    fn unknown_key_is_a_parse_error_with_position() {
        let text = MINIMAL.replace(r#""mode""#, r#""gamma": 1, "mode""#);
        let err = parse(&text).unwrap_err();
        let p = err.parse_error().expect("parse error");
        assert!(p.message.contains("gamma"), "{}", p.message);
        assert_eq!(p.line, 4);
        assert!(p.column > 0);
    }

    #[test]
    fn unknown_nested_key_is_rejected() {
        let text = MINIMAL.replace(r#""b0": 2.0"#, r#""b0": 2.0, "x1": 0"#);
        assert!(parse(&text).unwrap_err().parse_error().unwrap().message.contains("x1"));
    }

    #[test]
    fn model_errors_name_their_field() {
        let text = MINIMAL.replace(r#""prior": 0.4"#, r#""prior": 1.5"#);
        assert_eq!(parse(&text).unwrap_err().validation_error().unwrap().field, "prior");
        let text = MINIMAL.replace(r#""periods": 20"#, r#""periods": 2.5"#);
        assert_eq!(parse(&text).unwrap_err().validation_error().unwrap().field, "periods");
    }

    #[test]
    fn mode_specific_requirements() {
        let text = MINIMAL.replace("solve-dynamic", "best-response");
        assert_eq!(parse(&text).unwrap_err().validation_error().unwrap().field, "contract");
        let text = MINIMAL.replace("solve-dynamic", "sweep");
        assert_eq!(parse(&text).unwrap_err().validation_error().unwrap().field, "sweep");
        let text = MINIMAL.replace(r#""out": "runs/min""#, r#""sweep": {"prior": []}, "out": "x""#);
        assert_eq!(parse(&text).unwrap_err().validation_error().unwrap().field, "sweep.prior");
    }

    #[test]
    fn verify_needs_no_environment() {
        let c = parse(r#"{"mode": "verify", "out": "v"}"#).unwrap();
        assert!(c.environment.is_none());
    }

    #[test]
    fn overrides_win() {
        let o = Overrides { mode: Some(RunMode::SolveStatic), out: Some("o".into()), ..Overrides::default() };
        let c = parse_config_str(MINIMAL, Path::new("."), &o).unwrap();
        assert_eq!(c.mode, RunMode::SolveStatic);
        assert_eq!(c.out, "o");
    }

    #[test]
    fn sweep_cells_are_row_major() {
        let s = SweepSpec { axes: vec![(SweepParam::Prior, vec![0.1, 0.2]), (SweepParam::Cost, vec![1.0, 2.0, 3.0])] };
        assert_eq!(s.cells(), 6);
        assert_eq!(s.cell(0), vec![(SweepParam::Prior, 0.1), (SweepParam::Cost, 1.0)]);
        assert_eq!(s.cell(4), vec![(SweepParam::Prior, 0.2), (SweepParam::Cost, 2.0)]);
    }

    #[test]
    fn epsilon_sets_the_drift() {
        let mut env = parse(MINIMAL).unwrap().environment.unwrap();
        SweepParam::Epsilon.apply(&mut env, 0.01);
        assert!((env.lambda.total1() - env.lambda.total0() - 0.01).abs() < 1e-12);
    }
}
