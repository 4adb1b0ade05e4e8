//! The four run modes and the files they write.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use polaremit::grid;
use polaremit::oracle::{default_tau_max, OracleSettings};
use polaremit::{
    auto_truncation, peak_metrics, solve_steady, validate, Column, HarmonicState, PeakMetrics, SpectrumEngine, SpectrumTable,
    SumRule, TimeOracle, ValidatedModel,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{ConfigError, Mode, RunConfig, SweepParam, TruncationOrder};

/// Header of `<stem>_spectrum.csv`.
pub const SPECTRUM_HEADER: &str = "omega,F_X,F_Y,F_as,F_inc";
/// Header of `<stem>_sweep.csv`.
pub const SWEEP_HEADER: &str = "param,value,FX_at_peak,peak_center,peak_height,peak_fwhm";
/// Header of `<stem>_harmonics.csv`.
pub const HARMONICS_HEADER: &str = "l,component,re,im";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Compute(#[from] polaremit::Error),
    #[error("cannot write {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("{failed} of {total} sweep points failed")]
    SweepFailures { failed: usize, total: usize },
}

impl RunError {
    /// 2 for configuration problems, 1 for everything that went wrong while computing.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// Files written by a run, in write order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub files: Vec<PathBuf>,
}

/// Fixed-width scientific notation: 13 significant digits, parses back exactly enough for any CSV consumer.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.12e}")
    }
}

struct Writer<'a> {
    dir: &'a Path,
    stem: &'a str,
    out: Artifacts,
}

impl<'a> Writer<'a> {
    fn new(config: &'a RunConfig) -> Result<Self, RunError> {
        let dir = config.output.dir.as_path();
        fs::create_dir_all(dir).map_err(|e| RunError::Io { path: dir.to_path_buf(), message: e.to_string() })?;
        Ok(Writer { dir, stem: &config.output.stem, out: Artifacts::default() })
    }

    fn write(&mut self, suffix: &str, contents: &str) -> Result<(), RunError> {
        let path = self.dir.join(format!("{}_{suffix}", self.stem));
        fs::write(&path, contents).map_err(|e| RunError::Io { path: path.clone(), message: e.to_string() })?;
        self.out.files.push(path);
        Ok(())
    }

    fn json(&mut self, suffix: &str, value: &Value) -> Result<(), RunError> {
        let mut text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
        text.push('\n');
        self.write(suffix, &text)
    }
}

/// Dispatches on `config.mode`.
pub fn run(config: &RunConfig) -> Result<Artifacts, RunError> {
    match config.mode {
        Mode::Spectrum => run_spectrum(config),
        Mode::Sweep => run_sweep(config),
        Mode::Validate => run_validate(config),
        Mode::Steady => run_steady(config),
    }
}

fn truncation(model: &ValidatedModel, config: &RunConfig) -> Result<usize, RunError> {
    Ok(match config.truncation.order {
        TruncationOrder::Fixed(l) => l,
        TruncationOrder::Auto => auto_truncation(model, config.truncation.tol, config.truncation.cap)?,
    })
}

fn frequency_grid(model: &ValidatedModel, config: &RunConfig) -> Result<Vec<f64>, RunError> {
    let g = &config.grid;
    Ok(if g.refine { grid::refined(model, g.min, g.max, g.points)? } else { grid::uniform(g.min, g.max, g.points)? })
}

/// Where the low-frequency line is looked for: `Ω_R ± 10Γ(2N+1)`.
pub fn peak_window(model: &ValidatedModel) -> (f64, f64) {
    let half = 10.0 * model.gamma() * model.damping_factor();
    let rabi = model.params().rabi;
    (rabi - half, rabi + half)
}

fn spectrum_csv(table: &SpectrumTable, gamma: f64) -> String {
    let mut s = String::with_capacity(80 * (table.len() + 1));
    s.push_str(SPECTRUM_HEADER);
    s.push('\n');
    for k in 0..table.len() {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt_num(table.omega[k] / gamma),
            fmt_num(table.fx[k]),
            fmt_num(table.fy[k]),
            fmt_num(table.fas[k]),
            fmt_num(table.finc[k])
        );
    }
    s
}

fn parameters_json(model: &ValidatedModel) -> Value {
    let p = model.params();
    let g = p.gamma;
    let m = model.moments();
    json!({
        "gamma": 1.0,
        "omega0": p.omega0 / g,
        "omega_f": p.omega_f / g,
        "omega_s": p.omega_s / g,
        "rabi": p.rabi / g,
        "delta_a": p.delta_a / g,
        "r": p.r,
        "theta": p.theta,
        "detuning": model.detuning() / g,
        "squeezing_n": m.n,
        "squeezing_m": [m.m.re, m.m.im],
    })
}

fn truncation_json(config: &RunConfig, order: usize) -> Value {
    let mode = match config.truncation.order {
        TruncationOrder::Auto => "auto",
        TruncationOrder::Fixed(_) => "fixed",
    };
    json!({ "order": order, "mode": mode, "tol": config.truncation.tol, "cap": config.truncation.cap })
}

fn grid_json(config: &RunConfig, points: usize, gamma: f64) -> Value {
    json!({
        "min": config.grid.min / gamma,
        "max": config.grid.max / gamma,
        "base_points": config.grid.points,
        "refine": config.grid.refine,
        "points": points,
    })
}

fn peak_json(peak: &Result<PeakMetrics, polaremit::Error>, window: (f64, f64), gamma: f64) -> Value {
    let window = [window.0 / gamma, window.1 / gamma];
    match peak {
        Ok(p) => json!({ "window": window, "center": p.center / gamma, "height": p.height, "fwhm": p.fwhm / gamma }),
        Err(e) => json!({ "window": window, "error": e.to_string() }),
    }
}

fn header_json(config: &RunConfig, model: &ValidatedModel) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("tool".into(), json!("polaremit"));
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("mode".into(), json!(config.mode.name()));
    m.insert("units".into(), json!("gamma"));
    m.insert("gamma_input".into(), json!(model.gamma()));
    m.insert("parameters".into(), parameters_json(model));
    m.insert("rwa_warning".into(), json!(model.rwa_warning()));
    m
}

/// Steady state and spectrum engine for one model.
fn prepare(model: &ValidatedModel, config: &RunConfig) -> Result<(usize, HarmonicState, SpectrumEngine), RunError> {
    let l = truncation(model, config)?;
    let state = solve_steady(model, l)?;
    let engine = SpectrumEngine::new(model, &state);
    Ok((l, state, engine))
}

/// Writes `<stem>_spectrum.csv` and `<stem>_meta.json`.
pub fn run_spectrum(config: &RunConfig) -> Result<Artifacts, RunError> {
    let start = Instant::now();
    let model = validate(config.model)?;
    let (l, _, engine) = prepare(&model, config)?;
    let grid = frequency_grid(&model, config)?;
    let table = engine.spectrum(&grid)?;
    let window = peak_window(&model);
    let peak = peak_metrics(&table, Column::Finc, window);

    let mut w = Writer::new(config)?;
    w.write("spectrum.csv", &spectrum_csv(&table, model.gamma()))?;
    let mut meta = header_json(config, &model);
    meta.insert("truncation".into(), truncation_json(config, l));
    meta.insert("grid".into(), grid_json(config, grid.len(), model.gamma()));
    meta.insert("peak".into(), peak_json(&peak, window, model.gamma()));
    meta.insert("wall_time_s".into(), json!(start.elapsed().as_secs_f64()));
    w.json("meta.json", &Value::Object(meta))?;
    Ok(w.out)
}

/// One evaluated sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub truncation: Option<usize>,
    pub fx_at_peak: f64,
    pub peak: Option<PeakMetrics>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

fn sweep_point(config: &RunConfig, param: SweepParam, value: f64) -> SweepRow {
    let mut row = SweepRow { value, truncation: None, fx_at_peak: f64::NAN, peak: None, error: None };
    let result = (|| -> Result<(), RunError> {
        let mut params = config.model;
        match param {
            SweepParam::R => params.r = value,
            SweepParam::Theta => params.theta = value,
        }
        let model = validate(params)?;
        let (l, _, engine) = prepare(&model, config)?;
        row.truncation = Some(l);
        row.fx_at_peak = engine.quadrature_at(model.params().rabi)?;
        let table = engine.spectrum(&frequency_grid(&model, config)?)?;
        row.peak = Some(peak_metrics(&table, Column::Finc, peak_window(&model))?);
        Ok(())
    })();
    if let Err(e) = result {
        row.error = Some(e.to_string());
    }
    row
}

/// Evaluates every sweep value; failures come back as rows with an error and NaN entries.
pub fn sweep_rows(config: &RunConfig) -> Result<Vec<SweepRow>, RunError> {
    let sweep = config.sweep.as_ref().ok_or_else(|| ConfigError::InvalidValue("sweep mode needs a [sweep] table".into()))?;
    Ok(sweep.values.par_iter().map(|&v| sweep_point(config, sweep.param, v)).collect())
}

/// Writes `<stem>_sweep.csv` and `<stem>_meta.json`; fails with exit code 1 if any row failed.
pub fn run_sweep(config: &RunConfig) -> Result<Artifacts, RunError> {
    let start = Instant::now();
    let model = validate(config.model)?;
    let rows = sweep_rows(config)?;
    let param = config.sweep.as_ref().map(|s| s.param).expect("checked by sweep_rows");
    let g = model.gamma();

    let mut csv = String::new();
    csv.push_str(SWEEP_HEADER);
    csv.push('\n');
    for row in &rows {
        let (c, h, f) = row.peak.map_or((f64::NAN, f64::NAN, f64::NAN), |p| (p.center / g, p.height, p.fwhm / g));
        let _ = writeln!(csv, "{},{},{},{},{},{}", param.name(), fmt_num(row.value), fmt_num(row.fx_at_peak), fmt_num(c), fmt_num(h), fmt_num(f));
    }

    let mut w = Writer::new(config)?;
    w.write("sweep.csv", &csv)?;
    let mut meta = header_json(config, &model);
    meta.insert("sweep_param".into(), json!(param.name()));
    meta.insert(
        "points".into(),
        Value::Array(rows.iter().map(|r| json!({ "value": r.value, "truncation": r.truncation, "error": r.error })).collect()),
    );
    meta.insert("grid".into(), json!({ "min": config.grid.min / g, "max": config.grid.max / g, "base_points": config.grid.points, "refine": config.grid.refine }));
    meta.insert("wall_time_s".into(), json!(start.elapsed().as_secs_f64()));
    w.json("meta.json", &Value::Object(meta))?;

    let failed = rows.iter().filter(|r| r.failed()).count();
    if failed > 0 {
        return Err(RunError::SweepFailures { failed, total: rows.len() });
    }
    Ok(w.out)
}

/// Deviation of one column between the two paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deviation {
    /// `max |a − b|` over the grid divided by the reference `F_inc` peak height.
    pub max: f64,
    pub mean: f64,
    /// `max |a − b|` divided by this column's own reference peak height.
    pub max_own_peak: f64,
}

/// Column-wise deviations between a tested and a reference table on the same grid.
pub fn deviations(tested: &SpectrumTable, reference: &SpectrumTable) -> Vec<(Column, Deviation)> {
    let scale = reference.peak_height(Column::Finc);
    Column::ALL
        .iter()
        .map(|&c| {
            let diffs: Vec<f64> = tested.column(c).iter().zip(reference.column(c)).map(|(a, b)| (a - b).abs()).collect();
            let max = diffs.iter().copied().fold(0.0, f64::max);
            let mean = diffs.iter().sum::<f64>() / diffs.len().max(1) as f64;
            let own = reference.peak_height(c);
            let norm = |x: f64, s: f64| if s > 0.0 { x / s } else { x };
            (c, Deviation { max: norm(max, scale), mean: norm(mean, scale), max_own_peak: norm(max, own) })
        })
        .collect()
}

fn sum_rule_json(s: &SumRule, tol: f64) -> Value {
    json!({
        "integral": s.integral,
        "expected": s.expected,
        "relative_error": s.relative_error(),
        "pass": s.relative_error() <= tol,
    })
}

/// Runs both spectrum paths on the configured grid and writes `<stem>_validate.json`.
pub fn run_validate(config: &RunConfig) -> Result<Artifacts, RunError> {
    let start = Instant::now();
    let model = validate(config.model)?;
    let (l, _, engine) = prepare(&model, config)?;
    let grid = frequency_grid(&model, config)?;
    let resolvent = engine.spectrum(&grid)?;
    let resolvent_sum = engine.sum_rule(1e-6)?;

    let v = config.validate;
    let tau_max = v.tau_max.map_or_else(|| default_tau_max(&model), |t| t / model.gamma());
    let oracle = TimeOracle::with_settings(&model, OracleSettings { n_phase: v.n_phase, ..OracleSettings::default() })?;
    let reference = oracle.transform(tau_max).and_then(|t| Ok((t.spectrum(&grid)?, t.sum_rule(1e-6))));

    let mut report = header_json(config, &model);
    report.insert("truncation".into(), truncation_json(config, l));
    report.insert("grid".into(), grid_json(config, grid.len(), model.gamma()));
    report.insert("tolerance".into(), json!(v.tolerance));
    report.insert("sum_rule_tolerance".into(), json!(v.sum_rule_tolerance));
    report.insert("tau_max".into(), json!(tau_max * model.gamma()));
    report.insert("oracle_dt".into(), json!(oracle.dt() * model.gamma()));
    report.insert("n_phase".into(), json!(v.n_phase));

    let failure = match &reference {
        Err(e) => {
            report.insert("error".into(), json!(e.to_string()));
            report.insert("pass".into(), json!(false));
            Some(e.to_string())
        }
        Ok((table, oracle_sum)) => {
            let devs = deviations(&resolvent, table);
            let worst = devs.iter().map(|(_, d)| d.max).fold(0.0, f64::max);
            let sums_ok = resolvent_sum.relative_error() <= v.sum_rule_tolerance && oracle_sum.relative_error() <= v.sum_rule_tolerance;
            let pass = worst <= v.tolerance && sums_ok;
            let mut cols = serde_json::Map::new();
            for (c, d) in &devs {
                cols.insert(c.name().into(), json!({ "max_deviation": d.max, "mean_deviation": d.mean, "max_deviation_own_peak": d.max_own_peak }));
            }
            report.insert("reference_peak_height".into(), json!(table.peak_height(Column::Finc)));
            report.insert("columns".into(), Value::Object(cols));
            report.insert("max_deviation".into(), json!(worst));
            report.insert(
                "sum_rule".into(),
                json!({
                    "resolvent": sum_rule_json(&resolvent_sum, v.sum_rule_tolerance),
                    "oracle": sum_rule_json(oracle_sum, v.sum_rule_tolerance),
                }),
            );
            report.insert("pass".into(), json!(pass));
            if pass {
                None
            } else if worst > v.tolerance {
                Some(format!("max deviation {worst:.3e} exceeds {}", v.tolerance))
            } else {
                Some("sum rule outside tolerance".into())
            }
        }
    };
    report.insert("wall_time_s".into(), json!(start.elapsed().as_secs_f64()));

    let mut w = Writer::new(config)?;
    w.json("validate.json", &Value::Object(report))?;
    match failure {
        Some(msg) => Err(RunError::Validation(msg)),
        None => Ok(w.out),
    }
}

/// Writes `<stem>_harmonics.csv` and `<stem>_meta.json`.
pub fn run_steady(config: &RunConfig) -> Result<Artifacts, RunError> {
    let start = Instant::now();
    let model = validate(config.model)?;
    let l = truncation(&model, config)?;
    let state = solve_steady(&model, l)?;

    let mut csv = String::new();
    csv.push_str(HARMONICS_HEADER);
    csv.push('\n');
    for h in state.indices() {
        for c in 1..=3 {
            let x = state.get(c, h);
            let _ = writeln!(csv, "{h},{c},{},{}", fmt_num(x.re), fmt_num(x.im));
        }
    }

    let mut w = Writer::new(config)?;
    w.write("harmonics.csv", &csv)?;
    let mut meta = header_json(config, &model);
    meta.insert("truncation".into(), truncation_json(config, l));
    meta.insert("hermiticity_defect".into(), json!(state.hermiticity_defect()));
    meta.insert("wall_time_s".into(), json!(start.elapsed().as_secs_f64()));
    w.json("meta.json", &Value::Object(meta))?;
    Ok(w.out)
}
