//! Run configuration: a strict TOML grammar with documented defaults.
//!
//! Raw serde structs mirror the file layout with every field optional;
//! [`RunConfig`] is the resolved form with all defaults filled in.
//! [`serialize_config`] writes every field explicitly, so a serialized
//! config parses back to the same value.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::ClassifierCriteria;
use crate::model::{
    validate_params, ModelParams, PredatorProfile, PreyProfile, ReactionKernel, Table,
    ValidatedModel,
};
use crate::solver::{
    default_dt, default_nx, Discretization, DEFAULT_CFL_SAFETY, DEFAULT_CORE_WINDOW,
    DEFAULT_FRONT_MARGIN, DEFAULT_HALF_WIDTH, DEFAULT_NY, DEFAULT_RECORD_EVERY, DEFAULT_T_END,
};
use crate::sweep::{Axis, BisectOptions, Param};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ConfigError {
    #[error("syntax error at line {line}, column {col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("unknown key `{key}` at line {line}, column {col}")]
    UnknownKey { key: String, line: usize, col: usize },
    #[error("constraint violation: {0}")]
    ConstraintViolation(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

// ---------------------------------------------------------------------------
// raw file layout

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    a: Option<f64>,
    b: Option<f64>,
    d: Option<f64>,
    mu: Option<f64>,
    beta: Option<f64>,
    h0: Option<f64>,
    kernel: Option<RawKernel>,
    init: Option<RawInit>,
    disc: Option<RawDisc>,
    criteria: Option<RawCriteria>,
    output: Option<RawOutput>,
    bisect: Option<RawBisect>,
    sweep: Option<RawSweep>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawKernel {
    #[serde(rename = "type")]
    kind: Option<String>,
    m: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawInit {
    u0: Option<f64>,
    u0_table: Option<String>,
    v0_amplitude: Option<f64>,
    v0_table: Option<String>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawDisc {
    half_width: Option<f64>,
    nx: Option<usize>,
    ny: Option<usize>,
    dt: Option<f64>,
    t_end: Option<f64>,
    cfl_safety: Option<f64>,
    u_floor: Option<f64>,
    front_margin: Option<f64>,
    core_window: Option<f64>,
    record_every: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawCriteria {
    eps_v_rel: Option<f64>,
    eps_speed_rel: Option<f64>,
    tol_span: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
    metadata: Option<bool>,
    snapshot: Option<bool>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawBisect {
    lo: Option<f64>,
    hi: Option<f64>,
    width_tol: Option<f64>,
    expand_factor: Option<f64>,
    max_expansions: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    cap: Option<usize>,
    parallel: Option<bool>,
    a: Option<Vec<f64>>,
    b: Option<Vec<f64>>,
    d: Option<Vec<f64>>,
    mu: Option<Vec<f64>>,
    beta: Option<Vec<f64>>,
    h0: Option<Vec<f64>>,
    /// Axis order; defaults to the order of [`Param::ALL`] restricted to the
    /// axes present.
    order: Option<Vec<String>>,
}

// ---------------------------------------------------------------------------
// resolved configuration

#[derive(Clone, Debug, PartialEq)]
pub enum PreySpec {
    Constant(f64),
    /// Two-column CSV `x,u`, relative to the config file.
    Table(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum PredatorSpec {
    Cosine { amplitude: f64 },
    /// Two-column CSV `x,v` covering `[-h0, h0]`.
    Table(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitSpec {
    pub u0: PreySpec,
    pub v0: PredatorSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub dir: String,
    /// Write the `#` metadata block at the top of output files.
    pub metadata: bool,
    /// Write the final-state snapshot next to the series.
    pub snapshot: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub axes: Vec<Axis>,
    pub cap: usize,
    pub parallel: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelParams,
    pub init: InitSpec,
    pub disc: Discretization,
    pub record_every: f64,
    pub criteria: ClassifierCriteria,
    pub output: OutputConfig,
    pub bisect: Option<BisectOptions>,
    pub sweep: Option<SweepConfig>,
}

/// Command-line values that take precedence over the file. They are applied
/// before defaults are derived, so `ny` also moves the default `nx` and `dt`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub half_width: Option<f64>,
    pub record_every: Option<f64>,
    pub out: Option<String>,
}

pub const DEFAULT_OUTPUT_DIR: &str = "out";
pub const DEFAULT_GRID_CAP: usize = 1000;

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

fn syntax_error(text: &str, err: toml::de::Error) -> ConfigError {
    let (line, col) = err.span().map_or((0, 0), |s| line_col(text, s.start));
    let message = err.message().to_string();
    if let Some(rest) = message.strip_prefix("unknown field `") {
        if let Some(end) = rest.find('`') {
            return ConfigError::UnknownKey {
                key: rest[..end].to_string(),
                line,
                col,
            };
        }
    }
    ConfigError::Syntax { line, col, message }
}

/// Parses a configuration, fills defaults and checks every constraint that
/// does not need the profile tables.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_with(text, &Overrides::default())
}

pub fn parse_config_with(text: &str, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| syntax_error(text, e))?;
    resolve(raw, overrides)
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_config_with(&text, overrides)
}

fn required(v: Option<f64>, name: &str) -> Result<f64, ConfigError> {
    v.ok_or_else(|| ConfigError::ConstraintViolation(format!("missing required key `{name}`")))
}

fn resolve(raw: RawConfig, ov: &Overrides) -> Result<RunConfig, ConfigError> {
    let kernel = match raw.kernel.unwrap_or_default() {
        RawKernel { kind: None, m: None } => ReactionKernel::LeslieGower,
        RawKernel { kind, m } => match kind.as_deref().unwrap_or("leslie_gower") {
            "leslie_gower" if m.is_none() => ReactionKernel::LeslieGower,
            "leslie_gower" => {
                return Err(ConfigError::ConstraintViolation(
                    "kernel.m applies only to type = \"holling_tanner\"".into(),
                ))
            }
            "holling_tanner" => ReactionKernel::HollingTanner {
                m: required(m, "kernel.m")?,
            },
            other => {
                return Err(ConfigError::ConstraintViolation(format!(
                    "kernel.type must be \"leslie_gower\" or \"holling_tanner\", got \"{other}\""
                )))
            }
        },
    };
    let model = ModelParams {
        a: required(raw.a, "a")?,
        b: required(raw.b, "b")?,
        d: required(raw.d, "d")?,
        mu: required(raw.mu, "mu")?,
        beta: required(raw.beta, "beta")?,
        h0: required(raw.h0, "h0")?,
        kernel,
    };

    let init_raw = raw.init.unwrap_or_default();
    let u0 = match (init_raw.u0, init_raw.u0_table) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::ConstraintViolation(
                "init.u0 and init.u0_table are mutually exclusive".into(),
            ))
        }
        (_, Some(path)) => PreySpec::Table(path),
        (c, None) => PreySpec::Constant(c.unwrap_or(1.0)),
    };
    let v0 = match (init_raw.v0_amplitude, init_raw.v0_table) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::ConstraintViolation(
                "init.v0_amplitude and init.v0_table are mutually exclusive".into(),
            ))
        }
        (_, Some(path)) => PredatorSpec::Table(path),
        (amp, None) => PredatorSpec::Cosine {
            amplitude: amp.unwrap_or(1.0),
        },
    };
    let init = InitSpec { u0, v0 };

    let rd = raw.disc.unwrap_or_default();
    let half_width = ov.half_width.or(rd.half_width).unwrap_or(DEFAULT_HALF_WIDTH);
    let ny = ov.ny.or(rd.ny).unwrap_or(DEFAULT_NY);
    let disc = Discretization {
        half_width,
        nx: ov.nx.or(rd.nx).unwrap_or_else(|| default_nx(half_width, ny)),
        ny,
        dt: ov.dt.or(rd.dt).unwrap_or_else(|| default_dt(ny)),
        t_end: ov.t_end.or(rd.t_end).unwrap_or(DEFAULT_T_END),
        cfl_safety: rd.cfl_safety.unwrap_or(DEFAULT_CFL_SAFETY),
        u_floor: rd.u_floor.unwrap_or(1e-8 * model.a),
        front_margin: rd.front_margin.unwrap_or(DEFAULT_FRONT_MARGIN),
        core_window: rd.core_window.unwrap_or(DEFAULT_CORE_WINDOW),
    };
    let record_every = ov.record_every.or(rd.record_every).unwrap_or(DEFAULT_RECORD_EVERY);

    let dc = ClassifierCriteria::default();
    let rc = raw.criteria.unwrap_or_default();
    let criteria = ClassifierCriteria {
        eps_v_rel: rc.eps_v_rel.unwrap_or(dc.eps_v_rel),
        eps_speed_rel: rc.eps_speed_rel.unwrap_or(dc.eps_speed_rel),
        tol_span: rc.tol_span.unwrap_or(dc.tol_span),
    };

    let ro = raw.output.unwrap_or_default();
    let output = OutputConfig {
        dir: ov.out.clone().or(ro.dir).unwrap_or_else(|| DEFAULT_OUTPUT_DIR.to_string()),
        metadata: ro.metadata.unwrap_or(true),
        snapshot: ro.snapshot.unwrap_or(true),
    };

    let bisect = raw
        .bisect
        .map(|rb| -> Result<BisectOptions, ConfigError> {
            let mut o = BisectOptions::new(
                required(rb.lo, "bisect.lo")?,
                required(rb.hi, "bisect.hi")?,
                required(rb.width_tol, "bisect.width_tol")?,
            );
            if let Some(f) = rb.expand_factor {
                o.expand_factor = f;
            }
            if let Some(n) = rb.max_expansions {
                o.max_expansions = n;
            }
            o.record_every = record_every;
            o.criteria = criteria;
            Ok(o)
        })
        .transpose()?;

    let sweep = raw.sweep.map(resolve_sweep).transpose()?;

    let cfg = RunConfig {
        model,
        init,
        disc,
        record_every,
        criteria,
        output,
        bisect,
        sweep,
    };
    check_constraints(&cfg)?;
    Ok(cfg)
}

fn resolve_sweep(rs: RawSweep) -> Result<SweepConfig, ConfigError> {
    let lists = [
        (Param::A, rs.a),
        (Param::B, rs.b),
        (Param::D, rs.d),
        (Param::Mu, rs.mu),
        (Param::Beta, rs.beta),
        (Param::H0, rs.h0),
    ];
    let present: Vec<(Param, Vec<f64>)> = lists
        .into_iter()
        .filter_map(|(p, v)| v.map(|v| (p, v)))
        .collect();
    let axes = match rs.order {
        None => present.into_iter().map(|(p, v)| Axis::new(p, v)).collect(),
        Some(order) => {
            let mut axes = Vec::new();
            for name in &order {
                let p = Param::from_name(name).ok_or_else(|| {
                    ConfigError::ConstraintViolation(format!("sweep.order: unknown parameter `{name}`"))
                })?;
                let values = present
                    .iter()
                    .find(|(q, _)| *q == p)
                    .map(|(_, v)| v.clone())
                    .ok_or_else(|| {
                        ConfigError::ConstraintViolation(format!("sweep.order names `{name}` without values"))
                    })?;
                if axes.iter().any(|a: &Axis| a.param == p) {
                    return Err(ConfigError::ConstraintViolation(format!(
                        "sweep.order lists `{name}` twice"
                    )));
                }
                axes.push(Axis::new(p, values));
            }
            if axes.len() != present.len() {
                return Err(ConfigError::ConstraintViolation(
                    "sweep.order must list every swept parameter".into(),
                ));
            }
            axes
        }
    };
    if axes.is_empty() {
        return Err(ConfigError::ConstraintViolation("sweep needs at least one axis".into()));
    }
    if let Some(ax) = axes.iter().find(|a| a.values.is_empty()) {
        return Err(ConfigError::ConstraintViolation(format!(
            "sweep axis `{}` has no values",
            ax.param.name()
        )));
    }
    Ok(SweepConfig {
        axes,
        cap: rs.cap.unwrap_or(DEFAULT_GRID_CAP),
        parallel: rs.parallel.unwrap_or(true),
    })
}

fn check_constraints(cfg: &RunConfig) -> Result<(), ConfigError> {
    let violation = |m: String| Err(ConfigError::ConstraintViolation(m));
    // profile tables are checked when they are loaded
    let u0 = match cfg.init.u0 {
        PreySpec::Constant(c) => PreyProfile::Constant(c),
        PreySpec::Table(_) => PreyProfile::default(),
    };
    let v0 = match cfg.init.v0 {
        PredatorSpec::Cosine { amplitude } => PredatorProfile::Cosine { amplitude },
        PredatorSpec::Table(_) => PredatorProfile::default(),
    };
    if let Err(e) = validate_params(&cfg.model, &u0, &v0) {
        return violation(e.to_string());
    }
    if let Err(e) = cfg.disc.validate(cfg.model.h0) {
        return violation(e.to_string());
    }
    if !(cfg.record_every > 0.0 && cfg.record_every.is_finite()) {
        return violation(format!("record_every = {} must be positive", cfg.record_every));
    }
    if let Err(e) = cfg.criteria.validate() {
        return violation(e.to_string());
    }
    if let Some(b) = &cfg.bisect {
        if !(b.lo0 > 0.0 && b.lo0 < b.hi0 && b.width_tol > 0.0 && b.expand_factor > 1.0) {
            return violation(format!(
                "bisect needs 0 < lo < hi, width_tol > 0 and expand_factor > 1; got lo = {}, hi = {}, width_tol = {}, expand_factor = {}",
                b.lo0, b.hi0, b.width_tol, b.expand_factor
            ));
        }
    }
    Ok(())
}

impl RunConfig {
    /// Loads profile tables (paths relative to `base_dir`) and validates the
    /// full model.
    pub fn build_model(&self, base_dir: &Path) -> Result<ValidatedModel, ConfigError> {
        let u0 = match &self.init.u0 {
            PreySpec::Constant(c) => PreyProfile::Constant(*c),
            PreySpec::Table(p) => PreyProfile::Table(read_table(&base_dir.join(p))?),
        };
        let v0 = match &self.init.v0 {
            PredatorSpec::Cosine { amplitude } => PredatorProfile::Cosine {
                amplitude: *amplitude,
            },
            PredatorSpec::Table(p) => PredatorProfile::Table(read_table(&base_dir.join(p))?),
        };
        validate_params(&self.model, &u0, &v0)
            .map_err(|e| ConfigError::ConstraintViolation(e.to_string()))
    }
}

/// Reads a two-column `x,value` table. `#` lines and a non-numeric header
/// line are skipped.
pub fn read_table(path: &Path) -> Result<Table, ConfigError> {
    let io_err = |message: String| ConfigError::Io {
        path: path.to_path_buf(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| io_err(e.to_string()))?;
    let mut points = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = match cols.as_slice() {
            [x, v] => x.parse::<f64>().and_then(|x| v.parse::<f64>().map(|v| (x, v))),
            _ => return Err(io_err(format!("line {}: expected two columns", k + 1))),
        };
        match parsed {
            Ok(p) => points.push(p),
            Err(_) if points.is_empty() => {} // header
            Err(e) => return Err(io_err(format!("line {}: {e}", k + 1))),
        }
    }
    Table::new(points).map_err(io_err)
}

/// Writes every field explicitly.
pub fn serialize_config(cfg: &RunConfig) -> String {
    let m = &cfg.model;
    let (kind, km) = match m.kernel {
        ReactionKernel::LeslieGower => ("leslie_gower".to_string(), None),
        ReactionKernel::HollingTanner { m } => ("holling_tanner".to_string(), Some(m)),
    };
    let (u0, u0_table) = match &cfg.init.u0 {
        PreySpec::Constant(c) => (Some(*c), None),
        PreySpec::Table(p) => (None, Some(p.clone())),
    };
    let (v0_amplitude, v0_table) = match &cfg.init.v0 {
        PredatorSpec::Cosine { amplitude } => (Some(*amplitude), None),
        PredatorSpec::Table(p) => (None, Some(p.clone())),
    };
    let d = &cfg.disc;
    let raw = RawConfig {
        a: Some(m.a),
        b: Some(m.b),
        d: Some(m.d),
        mu: Some(m.mu),
        beta: Some(m.beta),
        h0: Some(m.h0),
        kernel: Some(RawKernel {
            kind: Some(kind),
            m: km,
        }),
        init: Some(RawInit {
            u0,
            u0_table,
            v0_amplitude,
            v0_table,
        }),
        disc: Some(RawDisc {
            half_width: Some(d.half_width),
            nx: Some(d.nx),
            ny: Some(d.ny),
            dt: Some(d.dt),
            t_end: Some(d.t_end),
            cfl_safety: Some(d.cfl_safety),
            u_floor: Some(d.u_floor),
            front_margin: Some(d.front_margin),
            core_window: Some(d.core_window),
            record_every: Some(cfg.record_every),
        }),
        criteria: Some(RawCriteria {
            eps_v_rel: Some(cfg.criteria.eps_v_rel),
            eps_speed_rel: Some(cfg.criteria.eps_speed_rel),
            tol_span: Some(cfg.criteria.tol_span),
        }),
        output: Some(RawOutput {
            dir: Some(cfg.output.dir.clone()),
            metadata: Some(cfg.output.metadata),
            snapshot: Some(cfg.output.snapshot),
        }),
        bisect: cfg.bisect.as_ref().map(|b| RawBisect {
            lo: Some(b.lo0),
            hi: Some(b.hi0),
            width_tol: Some(b.width_tol),
            expand_factor: Some(b.expand_factor),
            max_expansions: Some(b.max_expansions),
        }),
        sweep: cfg.sweep.as_ref().map(|s| {
            let mut rs = RawSweep {
                cap: Some(s.cap),
                parallel: Some(s.parallel),
                order: Some(s.axes.iter().map(|a| a.param.name().to_string()).collect()),
                ..RawSweep::default()
            };
            for ax in &s.axes {
                let slot = match ax.param {
                    Param::A => &mut rs.a,
                    Param::B => &mut rs.b,
                    Param::D => &mut rs.d,
                    Param::Mu => &mut rs.mu,
                    Param::Beta => &mut rs.beta,
                    Param::H0 => &mut rs.h0,
                };
                *slot = Some(ax.values.clone());
            }
            rs
        }),
    };
    toml::to_string(&raw).expect("config values are always representable in TOML")
}
