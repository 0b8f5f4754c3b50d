//! The `evolve`, `sweep` and `analyze` commands, independent of argument
//! parsing so they can be driven from tests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use super::config::{ConfigError, ExperimentConfig};
use super::fitspec::{FitKind, FitSpec};
use super::format::{fmt_num, parse_snapshot, parse_time_series, render_snapshot, render_time_series, SchemaError};
use crate::analysis::{
    drift_force, estimate_frequency, fit_damped_cosine, fit_double_exponential, fit_gaussian, fit_linear,
    fit_power_law, fit_quadratic_energy, DampedCosineOptions, FitError, Window,
};
use crate::evolution::{run, EvolutionError, RunTrace};
use crate::grid::LatticeGrid;
use crate::observables::ObservableRecord;

pub const TIME_SERIES_FILE: &str = "timeseries.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Schema { path: PathBuf, source: SchemaError },
    #[error("{0}")]
    Physics(EvolutionError),
    #[error("{0}")]
    Fit(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Io { .. } | CliError::Schema { .. } => 1,
            CliError::Physics(e) => match e.root() {
                EvolutionError::Overflow { .. } | EvolutionError::EdgeGuard { .. } => 2,
                _ => 1,
            },
            CliError::Fit(_) => 3,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Validation(e.to_string())
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io(path))
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(io(path))
}

pub fn snapshot_paths(dir: &Path, t: usize) -> (PathBuf, PathBuf) {
    (
        dir.join(format!("snapshot_t{t}_p.csv")),
        dir.join(format!("snapshot_t{t}_theta.csv")),
    )
}

/// Runs one configuration and writes `timeseries.csv`, the snapshot files
/// and the resolved `config.toml` into `output_dir`. On a physics error the
/// records up to the failing kick are still written.
pub fn cmd_evolve(config: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    config.validate()?;
    let grid = LatticeGrid::new(config.grid_size, config.physics.hbar_eff)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(io(dir))?;

    let mut trace = RunTrace::default();
    let outcome = run(&config.run_config(), &grid, &mut trace);

    let mut written = Vec::new();
    let path = dir.join("config.toml");
    write_file(&path, &config.render())?;
    written.push(path);
    let path = dir.join(TIME_SERIES_FILE);
    write_file(&path, &render_time_series(&trace.records))?;
    written.push(path);
    for s in &trace.snapshots {
        let (p_text, theta_text) = render_snapshot(s);
        let (p_path, theta_path) = snapshot_paths(dir, s.t);
        write_file(&p_path, &p_text)?;
        write_file(&theta_path, &theta_text)?;
        written.extend([p_path, theta_path]);
    }
    match outcome {
        Ok(_) => Ok(written),
        Err(e) => Err(CliError::Physics(e)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSummary {
    pub lambda: f64,
    /// Late-half slope of `⟨p⟩`.
    pub growth_rate: f64,
    /// Late-half power-law exponent of the momentum variance.
    pub width_exponent: f64,
    /// Mean `e_pot` over the late half.
    pub e_pot_late: f64,
}

/// Summary row of one member run, computed from its stored time series.
pub fn summarize(lambda: f64, records: &[ObservableRecord]) -> SweepSummary {
    let t: Vec<f64> = records.iter().map(|r| r.t as f64).collect();
    let col = |f: fn(&ObservableRecord) -> f64| records.iter().map(f).collect::<Vec<f64>>();
    let growth_rate = fit_linear(&t, &col(|r| r.p_mean), Window::LATE_HALF).map_or(f64::NAN, |f| f.slope);
    let width_exponent = fit_power_law(&t, &col(|r| r.width), Window::LATE_HALF).map_or(f64::NAN, |f| f.exponent);
    let e_pot_late = Window::LATE_HALF
        .apply(&t, &col(|r| r.e_pot))
        .ok()
        .filter(|(_, e)| !e.is_empty())
        .map_or(f64::NAN, |(_, e)| e.iter().sum::<f64>() / e.len() as f64);
    SweepSummary { lambda, growth_rate, width_exponent, e_pot_late }
}

pub fn member_dir(base: &Path, lambda: f64) -> PathBuf {
    base.join(format!("lambda_{}", fmt_num(lambda)))
}

pub struct SweepOutcome {
    pub summary_path: PathBuf,
    pub rows: Vec<Result<SweepSummary, (f64, CliError)>>,
}

impl SweepOutcome {
    /// First member failure, if any, for the process exit status.
    pub fn first_error(&self) -> Option<&CliError> {
        self.rows.iter().find_map(|r| r.as_ref().err().map(|(_, e)| e))
    }
}

/// Runs one member per `λ` concurrently, each into `lambda_<λ>/` below the
/// base output directory, then writes `summary.csv`. Member failures are
/// recorded in the summary and do not stop the other members.
pub fn cmd_sweep(base: &ExperimentConfig, lambdas: &[f64]) -> Result<SweepOutcome, CliError> {
    if lambdas.is_empty() {
        return Err(CliError::Validation("empty lambda list".into()));
    }
    let members: Vec<ExperimentConfig> = lambdas
        .iter()
        .map(|&lambda| {
            let mut c = base.clone();
            c.physics.lambda = lambda;
            c.output_dir = member_dir(&base.output_dir, lambda);
            c.validate().map(|_| c)
        })
        .collect::<Result<_, _>>()?;
    for (i, a) in members.iter().enumerate() {
        if members[..i].iter().any(|b| b.output_dir == a.output_dir) {
            return Err(CliError::Validation(format!("duplicate lambda {}", a.physics.lambda)));
        }
    }
    fs::create_dir_all(&base.output_dir).map_err(io(&base.output_dir))?;

    let rows: Vec<Result<SweepSummary, (f64, CliError)>> = members
        .par_iter()
        .map(|c| {
            let lambda = c.physics.lambda;
            cmd_evolve(c)
                .and_then(|_| load_series(&c.output_dir.join(TIME_SERIES_FILE)))
                .map(|records| summarize(lambda, &records))
                .map_err(|e| (lambda, e))
        })
        .collect();

    let mut text = String::from("lambda,G,alpha,e_pot_late,status\n");
    for row in &rows {
        let _ = match row {
            Ok(s) => writeln!(
                text,
                "{},{},{},{},ok",
                fmt_num(s.lambda),
                fmt_num(s.growth_rate),
                fmt_num(s.width_exponent),
                fmt_num(s.e_pot_late)
            ),
            Err((lambda, e)) => writeln!(text, "{},,,,{}", fmt_num(*lambda), e.to_string().replace([',', '\n'], ";")),
        };
    }
    let summary_path = base.output_dir.join(SUMMARY_FILE);
    write_file(&summary_path, &text)?;
    Ok(SweepOutcome { summary_path, rows })
}

pub fn load_series(path: &Path) -> Result<Vec<ObservableRecord>, CliError> {
    parse_time_series(&read_file(path)?).map_err(|source| CliError::Schema { path: path.to_path_buf(), source })
}

/// What `analyze` was pointed at.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalysisInput {
    Series(Vec<ObservableRecord>),
    Snapshot { header: &'static str, rows: Vec<(f64, f64)> },
}

impl AnalysisInput {
    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        match parse_time_series(text) {
            Err(SchemaError::Header(_)) => {
                let (header, rows) = parse_snapshot(text)?;
                Ok(AnalysisInput::Snapshot { header, rows })
            }
            other => other.map(AnalysisInput::Series),
        }
    }

    fn schema(&self) -> &'static str {
        match self {
            AnalysisInput::Series(_) => "time_series",
            AnalysisInput::Snapshot { .. } => "snapshot",
        }
    }
}

fn column(records: &[ObservableRecord], name: &str) -> Vec<f64> {
    records
        .iter()
        .map(|r| match name {
            "log_norm" => r.log_norm_growth,
            "p_mean" => r.p_mean,
            "e_kin" => r.e_kin,
            "e_pot" => r.e_pot,
            "e_tot" => r.e_tot,
            "width" => r.width,
            _ => unreachable!("column names are checked when the spec is parsed"),
        })
        .collect()
}

/// Result of one fit request: parameters as JSON plus the model sampled on
/// the abscissae it was fitted to.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub result: Value,
    pub overlay: Vec<(f64, f64, f64)>,
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn overlay(t: &[f64], y: &[f64], model: impl Fn(f64) -> f64) -> Vec<(f64, f64, f64)> {
    t.iter().zip(y).map(|(&t, &y)| (t, y, model(t))).collect()
}

/// Evaluates one fit request against parsed input.
pub fn evaluate(spec: &FitSpec, input: &AnalysisInput) -> Result<FitOutcome, FitError> {
    let records = match (input, spec.kind) {
        (AnalysisInput::Snapshot { rows, .. }, FitKind::Gaussian) => {
            let (x, w): (Vec<f64>, Vec<f64>) = rows.iter().cloned().unzip();
            let fit = fit_gaussian(&x, &w)?;
            return Ok(FitOutcome { result: to_json(&fit), overlay: overlay(&x, &w, |v| fit.eval(v)) });
        }
        (AnalysisInput::Series(records), kind) if kind != FitKind::Gaussian => records,
        _ => {
            return Err(FitError::InvalidParams(format!(
                "{} fits do not apply to {} files",
                spec.kind.name(),
                input.schema()
            )))
        }
    };
    let t: Vec<f64> = records.iter().map(|r| r.t as f64).collect();
    let y = column(records, &spec.column);
    let (tw, yw) = spec.window.apply(&t, &y)?;
    let outcome = match spec.kind {
        FitKind::Linear => {
            let fit = fit_linear(&t, &y, spec.window)?;
            let mut result = to_json(&fit);
            if spec.column == "p_mean" {
                result["G"] = json!(fit.slope);
            }
            FitOutcome { result, overlay: overlay(tw, yw, |v| fit.slope * v + fit.intercept) }
        }
        FitKind::Power => {
            let fit = fit_power_law(&t, &y, spec.window)?;
            let mut result = to_json(&fit);
            result["alpha"] = json!(fit.exponent);
            FitOutcome { result, overlay: overlay(tw, yw, |v| fit.prefactor * v.powf(fit.exponent)) }
        }
        FitKind::Quadratic => {
            let (g, source) = match spec.growth_rate {
                Some(g) => (g, "given"),
                None => (fit_linear(&t, &column(records, "p_mean"), spec.window)?.slope, "p_mean"),
            };
            let fit = fit_quadratic_energy(&t, &y, g, spec.window)?;
            let mut result = to_json(&fit);
            result["growth_rate_source"] = json!(source);
            FitOutcome { result, overlay: overlay(tw, yw, |v| 0.5 * g * g * v * v + fit.offset) }
        }
        FitKind::Drift => FitOutcome { result: json!({ "force": drift_force(&t, &y)? }), overlay: Vec::new() },
        FitKind::Frequency => {
            let fit = estimate_frequency(tw, yw)?;
            FitOutcome { result: to_json(&fit), overlay: overlay(tw, yw, |v| fit.trend.eval(v)) }
        }
        FitKind::Damped => {
            let options = DampedCosineOptions { gamma: spec.gamma, window: spec.window };
            let fit = fit_damped_cosine(&t, &y, spec.envelope, spec.sign, options)?;
            FitOutcome { result: to_json(&fit), overlay: overlay(tw, yw, |v| fit.eval(v)) }
        }
        FitKind::DoubleExp => {
            let fit = fit_double_exponential(tw, yw)?;
            FitOutcome { result: to_json(&fit), overlay: overlay(tw, yw, |v| fit.eval(v)) }
        }
        FitKind::Gaussian => unreachable!("handled above"),
    };
    Ok(outcome)
}

/// The JSON report and, per request, the outcome (`None` if it failed).
pub fn analyze_report(source: &str, input: &AnalysisInput, specs: &[FitSpec]) -> (Value, Vec<Option<FitOutcome>>) {
    let mut entries = Vec::new();
    let mut outcomes = Vec::new();
    for spec in specs {
        let mut entry = json!({
            "spec": spec.to_string(),
            "kind": spec.kind,
            "column": spec.column,
            "window": to_json(&spec.window),
        });
        match evaluate(spec, input) {
            Ok(outcome) => {
                entry["status"] = json!("ok");
                entry["points"] = json!(outcome.overlay.len());
                entry["result"] = outcome.result.clone();
                outcomes.push(Some(outcome));
            }
            Err(e) => {
                entry["status"] = json!("error");
                entry["error"] = json!(e.to_string());
                if let FitError::NonConvergence { last_iterate, .. } = &e {
                    entry["last_iterate"] = serde_json::from_str(last_iterate).unwrap_or(Value::Null);
                }
                outcomes.push(None);
            }
        }
        entries.push(entry);
    }
    let report = json!({ "input": source, "schema": input.schema(), "fits": entries });
    (report, outcomes)
}

pub struct AnalyzeOutcome {
    pub report: String,
    pub failed: usize,
}

/// Runs every fit on `path`. With `out`, also writes `report.json` plus one
/// `overlay_<i>_<kind>_<column>.csv` (`t,data,model`) per successful fit.
/// Failed fits are reported in the document, not as an error.
pub fn cmd_analyze(path: &Path, specs: &[FitSpec], out: Option<&Path>) -> Result<AnalyzeOutcome, CliError> {
    if specs.is_empty() {
        return Err(CliError::Validation("no --fit requests".into()));
    }
    let input = AnalysisInput::parse(&read_file(path)?)
        .map_err(|source| CliError::Schema { path: path.to_path_buf(), source })?;
    let (report, outcomes) = analyze_report(&path.to_string_lossy(), &input, specs);
    let report = serde_json::to_string_pretty(&report).expect("report is plain JSON") + "\n";
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(io(dir))?;
        write_file(&dir.join(REPORT_FILE), &report)?;
        for (i, (spec, outcome)) in specs.iter().zip(&outcomes).enumerate() {
            let Some(outcome) = outcome.as_ref().filter(|o| !o.overlay.is_empty()) else { continue };
            let mut csv = String::from("t,data,model\n");
            for (t, y, m) in &outcome.overlay {
                let _ = writeln!(csv, "{},{},{}", fmt_num(*t), fmt_num(*y), fmt_num(*m));
            }
            let name = format!("overlay_{i}_{}_{}.csv", spec.kind.name(), spec.column);
            write_file(&dir.join(name), &csv)?;
        }
    }
    let failed = outcomes.iter().filter(|o| o.is_none()).count();
    Ok(AnalyzeOutcome { report, failed })
}
