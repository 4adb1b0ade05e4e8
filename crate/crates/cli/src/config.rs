//! Run configuration: TOML text in, validated [`RunConfig`] out.

use std::f64::consts::TAU;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use polaremit::floquet::{DEFAULT_TRUNCATION_CAP, DEFAULT_TRUNCATION_TOL};
use polaremit::ModelParams;
use serde::Deserialize;

/// Smallest accepted base grid.
pub const MIN_GRID_POINTS: usize = 16;
/// Base grid size when the config has no `[grid]` table.
pub const DEFAULT_GRID_POINTS: usize = 401;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("cannot read config {path}: {message}")]
    Read { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Spectrum,
    Sweep,
    Validate,
    Steady,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Spectrum => "spectrum",
            Mode::Sweep => "sweep",
            Mode::Validate => "validate",
            Mode::Steady => "steady",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "spectrum" => Ok(Mode::Spectrum),
            "sweep" => Ok(Mode::Sweep),
            "validate" => Ok(Mode::Validate),
            "steady" => Ok(Mode::Steady),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub refine: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    R,
    Theta,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::R => "r",
            SweepParam::Theta => "theta",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncationOrder {
    Auto,
    Fixed(usize),
}

impl FromStr for TruncationOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(TruncationOrder::Auto);
        }
        s.parse().map(TruncationOrder::Fixed).map_err(|_| format!("truncation must be `auto` or a non-negative integer, got `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationSpec {
    pub order: TruncationOrder,
    pub tol: f64,
    pub cap: usize,
}

impl Default for TruncationSpec {
    fn default() -> Self {
        TruncationSpec { order: TruncationOrder::Auto, tol: DEFAULT_TRUNCATION_TOL, cap: DEFAULT_TRUNCATION_CAP }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub stem: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidateSpec {
    /// Correlation window in `1/Γ`; `None` picks one from the slowest decay rate.
    pub tau_max: Option<f64>,
    /// Largest accepted deviation between the two paths, as a fraction of peak height.
    pub tolerance: f64,
    pub sum_rule_tolerance: f64,
    pub n_phase: usize,
}

impl Default for ValidateSpec {
    fn default() -> Self {
        ValidateSpec { tau_max: None, tolerance: 0.02, sum_rule_tolerance: 0.01, n_phase: 8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelParams,
    pub mode: Mode,
    pub grid: GridSpec,
    pub sweep: Option<SweepSpec>,
    pub truncation: TruncationSpec,
    pub output: OutputSpec,
    pub validate: ValidateSpec,
}

#[derive(Deserialize)]
struct RawConfig {
    mode: Option<Mode>,
    model: RawModel,
    grid: Option<RawGrid>,
    sweep: Option<RawSweep>,
    truncation: Option<RawTruncation>,
    output: Option<RawOutput>,
    validate: Option<RawValidate>,
}

#[derive(Deserialize)]
struct RawModel {
    gamma: f64,
    omega0: f64,
    omega_f: f64,
    omega_s: f64,
    rabi: f64,
    delta_a: f64,
    r: f64,
    theta: f64,
}

#[derive(Deserialize)]
struct RawGrid {
    min: f64,
    max: f64,
    points: Option<usize>,
    refine: Option<bool>,
}

#[derive(Deserialize)]
struct RawSweep {
    param: SweepParam,
    values: Option<Vec<f64>>,
    span: Option<RawSpan>,
}

/// `count` values from `min` up to but excluding `max`.
#[derive(Deserialize)]
struct RawSpan {
    min: f64,
    max: f64,
    count: usize,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawOrder {
    Fixed(u64),
    Named(String),
}

#[derive(Deserialize)]
struct RawTruncation {
    order: Option<RawOrder>,
    tol: Option<f64>,
    cap: Option<usize>,
}

#[derive(Deserialize)]
struct RawOutput {
    dir: Option<PathBuf>,
    stem: Option<String>,
}

#[derive(Deserialize)]
struct RawValidate {
    tau_max: Option<f64>,
    tolerance: Option<f64>,
    sum_rule_tolerance: Option<f64>,
    n_phase: Option<usize>,
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue(msg.into())
}

/// Parses and validates a TOML run configuration. Keys not in the schema are rejected.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let de = toml::Deserializer::parse(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
        ConfigError::Parse { line, column, message: e.message().trim().to_string() }
    })?;
    let mut unknown = Vec::new();
    let raw: Result<RawConfig, _> = serde_ignored::deserialize(de, |path| {
        // optional tables show up as `?` segments
        let key: Vec<String> = path.to_string().split('.').filter(|s| *s != "?").map(String::from).collect();
        unknown.push(key.join("."));
    });
    if let Some(key) = unknown.into_iter().next() {
        return Err(ConfigError::UnknownKey(key));
    }
    let raw = raw.map_err(|e| match e.span() {
        Some(s) => {
            let (line, column) = line_column(text, s.start);
            invalid(format!("line {line}, column {column}: {}", e.message().trim()))
        }
        None => invalid(e.message().trim()),
    })?;
    build(raw)
}

fn build(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    let m = raw.model;
    let model = ModelParams {
        gamma: m.gamma,
        omega0: m.omega0,
        omega_f: m.omega_f,
        omega_s: m.omega_s,
        rabi: m.rabi,
        delta_a: m.delta_a,
        r: m.r,
        theta: m.theta,
    };
    model.validate().map_err(|e| invalid(format!("model: {e}")))?;

    let grid = match raw.grid {
        Some(g) => GridSpec { min: g.min, max: g.max, points: g.points.unwrap_or(DEFAULT_GRID_POINTS), refine: g.refine.unwrap_or(true) },
        None => default_grid(&model)?,
    };
    check_grid(&grid)?;

    let mode = raw.mode.unwrap_or(Mode::Spectrum);
    let sweep = raw.sweep.map(build_sweep).transpose()?;
    if mode == Mode::Sweep && sweep.is_none() {
        return Err(invalid("sweep mode needs a [sweep] table"));
    }

    let mut truncation = TruncationSpec::default();
    if let Some(t) = raw.truncation {
        if let Some(o) = t.order {
            truncation.order = match o {
                RawOrder::Fixed(l) => TruncationOrder::Fixed(l as usize),
                RawOrder::Named(s) => s.parse().map_err(invalid)?,
            };
        }
        truncation.tol = t.tol.unwrap_or(truncation.tol);
        truncation.cap = t.cap.unwrap_or(truncation.cap);
    }
    if !(truncation.tol > 0.0) {
        return Err(invalid(format!("truncation.tol must be positive, got {}", truncation.tol)));
    }

    let output = raw.output.unwrap_or(RawOutput { dir: None, stem: None });
    let output = OutputSpec { dir: output.dir.unwrap_or_else(|| PathBuf::from(".")), stem: output.stem.unwrap_or_else(|| "polaremit".into()) };
    if output.stem.is_empty() || output.stem.contains(['/', '\\']) {
        return Err(invalid(format!("output.stem must be a plain file name prefix, got `{}`", output.stem)));
    }

    let mut validate = ValidateSpec::default();
    if let Some(v) = raw.validate {
        validate.tau_max = v.tau_max;
        validate.tolerance = v.tolerance.unwrap_or(validate.tolerance);
        validate.sum_rule_tolerance = v.sum_rule_tolerance.unwrap_or(validate.sum_rule_tolerance);
        validate.n_phase = v.n_phase.unwrap_or(validate.n_phase);
    }
    if let Some(t) = validate.tau_max {
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid(format!("validate.tau_max must be positive, got {t}")));
        }
    }
    if !(validate.tolerance > 0.0 && validate.sum_rule_tolerance > 0.0) {
        return Err(invalid("validate tolerances must be positive"));
    }
    if validate.n_phase < 8 {
        return Err(invalid(format!("validate.n_phase must be at least 8, got {}", validate.n_phase)));
    }

    Ok(RunConfig { model, mode, grid, sweep, truncation, output, validate })
}

fn default_grid(model: &ModelParams) -> Result<GridSpec, ConfigError> {
    if !(model.rabi > 0.0) {
        return Err(invalid("a [grid] table is required when rabi = 0"));
    }
    Ok(GridSpec { min: 0.0, max: 2.0 * model.rabi, points: DEFAULT_GRID_POINTS, refine: true })
}

fn check_grid(g: &GridSpec) -> Result<(), ConfigError> {
    if !(g.min.is_finite() && g.max.is_finite() && g.min < g.max) {
        return Err(invalid(format!("grid needs min < max, got [{}, {}]", g.min, g.max)));
    }
    if g.points < MIN_GRID_POINTS {
        return Err(invalid(format!("grid.points must be at least {MIN_GRID_POINTS}, got {}", g.points)));
    }
    Ok(())
}

fn build_sweep(s: RawSweep) -> Result<SweepSpec, ConfigError> {
    let values = match (s.values, s.span) {
        (Some(v), None) => v,
        (None, Some(sp)) => {
            if sp.count == 0 || !(sp.min < sp.max) {
                return Err(invalid("sweep.span needs min < max and count > 0"));
            }
            (0..sp.count).map(|k| sp.min + (sp.max - sp.min) * k as f64 / sp.count as f64).collect()
        }
        _ => return Err(invalid("sweep needs exactly one of `values` or `span`")),
    };
    if values.is_empty() {
        return Err(invalid("sweep list is empty"));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite() || (s.param == SweepParam::R && **v < 0.0)) {
        return Err(invalid(format!("bad {} sweep value {v}", s.param.name())));
    }
    Ok(SweepSpec { param: s.param, values })
}

impl RunConfig {
    /// Replaces the window by `ω_f ± 2Ω_R`, keeping the point count.
    pub fn use_full_window(&mut self) -> Result<(), ConfigError> {
        let (wf, rabi) = (self.model.omega_f, self.model.rabi);
        if !(rabi > 0.0) {
            return Err(invalid("the full window needs rabi > 0"));
        }
        self.grid.min = wf - 2.0 * rabi;
        self.grid.max = wf + 2.0 * rabi;
        Ok(())
    }
}

const PRESETS: &[(&str, &str)] = &[
    ("fig1", include_str!("../presets/fig1.toml")),
    ("fig2", include_str!("../presets/fig2.toml")),
    ("fig3", include_str!("../presets/fig3.toml")),
    ("fig4r02", include_str!("../presets/fig4r02.toml")),
    ("fig4r05", include_str!("../presets/fig4r05.toml")),
    ("fig4r08", include_str!("../presets/fig4r08.toml")),
    ("fig4r10", include_str!("../presets/fig4r10.toml")),
    ("desk_validate", include_str!("../presets/desk_validate.toml")),
    ("mollow_validate", include_str!("../presets/mollow_validate.toml")),
];

/// Names accepted by [`preset`].
pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// TOML source of a bundled preset. `fig4r1` is an alias of `fig4r10`.
pub fn preset_text(name: &str) -> Result<&'static str, ConfigError> {
    let name = if name == "fig4r1" { "fig4r10" } else { name };
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t).ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))
}

pub fn preset(name: &str) -> Result<RunConfig, ConfigError> {
    parse_config(preset_text(name)?)
}

/// `count` equally spaced angles covering `[0, 2π)`.
pub fn phase_grid(count: usize) -> Vec<f64> {
    (0..count).map(|k| TAU * k as f64 / count as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[model]
gamma = 1.0
omega0 = 200
omega_f = 200
omega_s = 200
rabi = 20
delta_a = 4
r = 0.5
theta = 1.0
"#;

    #[test]
    fn minimal_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.mode, Mode::Spectrum);
        assert_eq!(c.grid, GridSpec { min: 0.0, max: 40.0, points: DEFAULT_GRID_POINTS, refine: true });
        assert_eq!(c.truncation, TruncationSpec::default());
        assert_eq!(c.output.stem, "polaremit");
        assert_eq!(c.model.omega0, 200.0);
    }

    #[test]
    fn fig1_preset_matches_caption() {
        let c = preset("fig1").unwrap();
        assert_eq!(c.model, ModelParams::resonant(1.0, 5000.0, 100.0, 10.0, 0.0, 0.0));
        assert_eq!((c.grid.min, c.grid.max), (0.0, 200.0));
    }

    #[test]
    fn every_preset_parses() {
        for name in preset_names() {
            let c = preset(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(c.output.stem, name);
        }
        assert_eq!(preset("fig4r1").unwrap(), preset("fig4r10").unwrap());
        assert!(matches!(preset("fig9"), Err(ConfigError::UnknownPreset(_))));
    }

    #[test]
    fn sweep_presets() {
        let c = preset("fig3").unwrap();
        let s = c.sweep.unwrap();
        assert_eq!(s.param, SweepParam::R);
        assert_eq!(s.values, vec![0.0, 0.2, 0.5, 0.8, 1.0]);
        for (name, r) in [("fig4r02", 0.2), ("fig4r05", 0.5), ("fig4r08", 0.8), ("fig4r10", 1.0)] {
            let c = preset(name).unwrap();
            assert_eq!(c.model.r, r);
            let s = c.sweep.unwrap();
            assert_eq!(s.param, SweepParam::Theta);
            assert_eq!(s.values, phase_grid(64));
        }
    }

    #[test]
    fn misspelled_key_is_named() {
        let text = MINIMAL.replace("gamma", "gama");
        assert_eq!(parse_config(&text), Err(ConfigError::UnknownKey("model.gama".into())));
        let text = format!("{MINIMAL}\n[grid]\nmin = 0\nmax = 1\nstep = 3\n");
        assert_eq!(parse_config(&text), Err(ConfigError::UnknownKey("grid.step".into())));
    }

    #[test]
    fn syntax_error_position() {
        let text = "[model]\ngamma = 1.0\nomega0 = = 3\n";
        match parse_config(text) {
            Err(ConfigError::Parse { line, column, .. }) => {
                assert_eq!(line, 3);
                assert!(column >= 9, "{column}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_file_is_rejected() {
        assert!(matches!(parse_config(""), Err(ConfigError::InvalidValue(_) | ConfigError::Parse { .. })));
    }

    #[test]
    fn invalid_values() {
        let bad = |from: &str, to: &str| parse_config(&MINIMAL.replace(from, to));
        assert!(matches!(bad("gamma = 1.0", "gamma = -1.0"), Err(ConfigError::InvalidValue(_))));
        assert!(matches!(bad("rabi = 20", "rabi = \"fast\""), Err(ConfigError::InvalidValue(_))));
        let grid = |g: &str| parse_config(&format!("{MINIMAL}\n[grid]\n{g}\n"));
        assert!(matches!(grid("min = 5\nmax = 5"), Err(ConfigError::InvalidValue(_))));
        assert!(matches!(grid("min = 0\nmax = 5\npoints = 15"), Err(ConfigError::InvalidValue(_))));
        assert!(grid("min = 0\nmax = 5\npoints = 16").is_ok());
        let sweep = |s: &str| parse_config(&format!("mode = \"sweep\"\n{MINIMAL}\n[sweep]\n{s}\n"));
        assert!(matches!(sweep("param = \"r\"\nvalues = []"), Err(ConfigError::InvalidValue(_))));
        assert!(matches!(sweep("param = \"r\"\nvalues = [-1.0]"), Err(ConfigError::InvalidValue(_))));
        assert!(matches!(sweep("param = \"phi\"\nvalues = [1.0]"), Err(ConfigError::InvalidValue(_))));
        assert!(sweep("param = \"theta\"\nvalues = [1.0]").is_ok());
        assert!(matches!(parse_config(&format!("mode = \"sweep\"\n{MINIMAL}")), Err(ConfigError::InvalidValue(_))));
    }

    #[test]
    fn truncation_forms() {
        let t = |s: &str| parse_config(&format!("{MINIMAL}\n[truncation]\n{s}\n")).map(|c| c.truncation.order);
        assert_eq!(t("order = \"auto\""), Ok(TruncationOrder::Auto));
        assert_eq!(t("order = 3"), Ok(TruncationOrder::Fixed(3)));
        assert!(matches!(t("order = \"many\""), Err(ConfigError::InvalidValue(_))));
        assert_eq!("7".parse::<TruncationOrder>(), Ok(TruncationOrder::Fixed(7)));
        assert!("-1".parse::<TruncationOrder>().is_err());
    }

    #[test]
    fn full_window() {
        let mut c = preset("fig1").unwrap();
        c.use_full_window().unwrap();
        assert_eq!((c.grid.min, c.grid.max), (4800.0, 5200.0));
    }

    #[test]
    fn line_column_counts_chars() {
        assert_eq!(line_column("ab\ncd", 4), (2, 2));
        assert_eq!(line_column("ab", 0), (1, 1));
    }
}
