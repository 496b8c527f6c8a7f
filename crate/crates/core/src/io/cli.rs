//! The `lgfront` command-line interface.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 solver or runtime
//! failure, 3 when a required verdict came out `Undecided`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::config::{load_config, ConfigError, Overrides, RunConfig};
use super::files::{read_series, write_columns, write_series_with_metadata, write_snapshot, Metadata};
use crate::analysis::{bound_sequences, classify, Classification, Thresholds, Verdict};
use crate::model::{derived_constants, validate_params, ModelParams, PredatorProfile, PreyProfile};
use crate::solver::{simulate, Solver, StopReason};
use crate::sweep::{bisect_beta, run_grid, GridOptions, GridResult, SweepError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_UNDECIDED: i32 = 3;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "lgfront", version, about = "Leslie-Gower prey-predator model with free boundaries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RunFlags {
    /// Configuration file (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory; overrides [output].dir.
    #[arg(long, value_name = "DIR")]
    out: Option<String>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long, value_name = "L")]
    domain_half_width: Option<f64>,
    #[arg(long)]
    record_every: Option<f64>,
    /// Reserved; the solver is deterministic and ignores it.
    #[arg(long)]
    seed: Option<u64>,
}

impl RunFlags {
    fn overrides(&self) -> Overrides {
        Overrides {
            t_end: self.t_end,
            dt: self.dt,
            nx: self.nx,
            ny: self.ny,
            half_width: self.domain_half_width,
            record_every: self.record_every,
            out: self.out.clone(),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one simulation; write the series, a final snapshot and the verdict.
    Simulate(RunFlags),
    /// Classify a series file written by `simulate`.
    Classify {
        series: PathBuf,
        /// Configuration to take thresholds from instead of the file's metadata.
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
    },
    /// Bracket the spreading threshold in beta ([bisect] section).
    BisectBeta(RunFlags),
    /// Run a parameter grid ([sweep] section).
    Sweep(RunFlags),
    /// Print the derived constants for key=value parameters or a config.
    Thresholds {
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
        /// Parameters as key=value: a, b, d, mu, beta, h0, m.
        params: Vec<String>,
    },
    /// Print the iterated bound sequences: a=.. b=.. i=..
    Bounds { params: Vec<String> },
    /// Turn a series file into columns for external plotting.
    PlotData {
        series: PathBuf,
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
        /// Output directory; defaults to the directory of the series file.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

/// A failure with its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }

    fn runtime(message: impl ToString) -> Self {
        Failure {
            code: EXIT_SOLVER,
            message: message.to_string(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::usage(e)
    }
}

type Outcome = Result<i32, Failure>;

/// Runs the CLI with process streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout(), &mut std::io::stderr())
}

/// Runs the CLI writing to the given streams; returns the exit code.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    let result = match cli.command {
        Command::Simulate(flags) => cmd_simulate(&flags, out),
        Command::Classify { series, config } => cmd_classify(&series, config.as_deref(), out),
        Command::BisectBeta(flags) => cmd_bisect(&flags, out),
        Command::Sweep(flags) => cmd_sweep(&flags, out),
        Command::Thresholds { config, params } => cmd_thresholds(config.as_deref(), &params, out),
        Command::Bounds { params } => cmd_bounds(&params, out),
        Command::PlotData { series, config, out: dir } => {
            cmd_plot_data(&series, config.as_deref(), dir.as_deref(), out)
        }
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn io_fail(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::runtime(format!("{}: {e}", path.display()))
}

fn base_dir(config: &Path) -> PathBuf {
    config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn load(flags: &RunFlags) -> Result<RunConfig, Failure> {
    Ok(load_config(&flags.config, &flags.overrides())?)
}

fn prepare_out_dir(dir: &str) -> Result<PathBuf, Failure> {
    let p = PathBuf::from(dir);
    std::fs::create_dir_all(&p).map_err(|e| io_fail(&p, e))?;
    Ok(p)
}

fn thresholds_metadata(md: &mut Metadata, span_crit: f64, th: &Thresholds) {
    md.push("span_crit", format!("{span_crit:.16e}"))
        .push("eps_v", format!("{:.16e}", th.eps_v))
        .push("eps_speed", format!("{:.16e}", th.eps_speed))
        .push("tol_span", format!("{:.16e}", th.tol_span));
}

fn classification_metadata(md: &mut Metadata, c: &Classification) {
    md.push("verdict", c.verdict).push("theory_valid", c.theory_valid);
    if let Some(e) = c.evidence {
        md.push("rule", e.rule.map_or("none", |r| r.name()))
            .push("decision_t", format!("{:.16e}", e.t))
            .push("decision_span", format!("{:.16e}", e.span))
            .push("decision_max_v", format!("{:.16e}", e.max_v));
    }
}

fn print_classification(out: &mut dyn Write, c: &Classification) {
    let _ = writeln!(out, "verdict = {}", c.verdict);
    if let Some(e) = c.evidence {
        let _ = writeln!(out, "rule = {}", e.rule.map_or("none", |r| r.name()));
        let _ = writeln!(out, "decision_t = {}", e.t);
        let _ = writeln!(out, "decision_span = {}", e.span);
        let _ = writeln!(out, "decision_max_v = {:e}", e.max_v);
    }
    if !c.theory_valid {
        let _ = writeln!(out, "warning: b >= 1, outside the assumptions behind the classification");
    }
}

fn cmd_simulate(flags: &RunFlags, out: &mut dyn Write) -> Outcome {
    let cfg = load(flags)?;
    let model = cfg.build_model(&base_dir(&flags.config))?;
    for w in model.warnings() {
        let _ = writeln!(out, "warning: {w}");
    }
    let constants = derived_constants(&model).map_err(Failure::usage)?;
    let sim = simulate(&model, &cfg.disc, cfg.record_every).map_err(Failure::runtime)?;
    let th = cfg.criteria.resolve(model.params(), &constants);
    let class = classify(&sim.series, &constants, &th, model.theory_valid());

    let dir = prepare_out_dir(&cfg.output.dir)?;
    let mut md = Metadata::new();
    if cfg.output.metadata {
        md.push("lgfront_version", VERSION)
            .push("kernel", model.params().kernel.name());
        thresholds_metadata(&mut md, constants.span_crit, &th);
        classification_metadata(&mut md, &class);
        let h = &sim.health;
        let stop = match h.stop {
            StopReason::Completed => "completed".to_string(),
            StopReason::FrontNearTruncation { t, .. } => format!("front_near_truncation at t = {t}"),
            StopReason::Observer => "observer".to_string(),
        };
        md.push("stop", stop)
            .push("steps", h.steps)
            .push("floor_hits", h.floor_hits)
            .push("max_u_ratio", h.max_u_ratio)
            .push("max_v_ratio", h.max_v_ratio)
            .push("min_u_core_inf", h.min_u_core)
            .push("eps_stencil", h.eps_stencil)
            .push("stefan_residual", h.stefan_residual)
            .push("config", super::config::serialize_config(&cfg));
    }
    let series_path = dir.join("series.csv");
    write_series_with_metadata(&sim.series, &md, &series_path).map_err(|e| io_fail(&series_path, e))?;
    if cfg.output.snapshot {
        let solver = Solver::new(&model, &cfg.disc).map_err(Failure::runtime)?;
        let snap = dir.join("snapshot.csv");
        let md = cfg.output.metadata.then_some(&md);
        write_snapshot(&solver, &sim.final_state, md, &snap).map_err(|e| io_fail(&snap, e))?;
    }

    let f = sim.final_state.front;
    print_classification(out, &class);
    let _ = writeln!(out, "t_final = {}", sim.final_state.t);
    let _ = writeln!(out, "g = {}\nh = {}\nspan = {}", f.g, f.h, f.span());
    if let StopReason::FrontNearTruncation { t, .. } = sim.health.stop {
        let _ = writeln!(out, "note: stopped at t = {t}; a front reached the truncation margin");
    }
    let _ = writeln!(out, "series = {}", series_path.display());
    Ok(EXIT_OK)
}

fn metadata_f64(md: &Metadata, key: &str) -> Result<f64, Failure> {
    md.get(key)
        .ok_or_else(|| Failure::usage(format!("series metadata lacks `{key}`; pass --config")))?
        .trim()
        .parse()
        .map_err(|e| Failure::usage(format!("metadata `{key}`: {e}")))
}

/// `(span_crit, thresholds, theory_valid)` from a config or a metadata block.
fn thresholds_for(config: Option<&Path>, md: &Metadata) -> Result<(f64, Thresholds, bool), Failure> {
    match config {
        Some(path) => {
            let cfg = load_config(path, &Overrides::default())?;
            let model = cfg.build_model(&base_dir(path))?;
            let c = derived_constants(&model).map_err(Failure::usage)?;
            Ok((c.span_crit, cfg.criteria.resolve(model.params(), &c), model.theory_valid()))
        }
        None => {
            let th = Thresholds {
                eps_v: metadata_f64(md, "eps_v")?,
                eps_speed: metadata_f64(md, "eps_speed")?,
                tol_span: metadata_f64(md, "tol_span")?,
            };
            let valid = md.get("theory_valid").is_none_or(|v| v.trim() == "true");
            Ok((metadata_f64(md, "span_crit")?, th, valid))
        }
    }
}

fn cmd_classify(series: &Path, config: Option<&Path>, out: &mut dyn Write) -> Outcome {
    let (md, records) = read_series(series).map_err(|e| Failure::usage(format!("{}: {e}", series.display())))?;
    if records.is_empty() {
        return Err(Failure::usage(format!("{}: series has no records", series.display())));
    }
    let (span_crit, th, valid) = thresholds_for(config, &md)?;
    // only span_crit matters among the constants
    let constants = crate::model::DerivedConstants {
        span_crit,
        h0_crit: 0.5 * span_crit,
        lambda1: f64::NAN,
        bound_u: f64::NAN,
        bound_v: f64::NAN,
        coexistence: (f64::NAN, f64::NAN),
    };
    let c = classify(&records, &constants, &th, valid);
    print_classification(out, &c);
    Ok(if c.verdict == Verdict::Undecided {
        EXIT_UNDECIDED
    } else {
        EXIT_OK
    })
}

fn cmd_bisect(flags: &RunFlags, out: &mut dyn Write) -> Outcome {
    let cfg = load(flags)?;
    let opts = cfg
        .bisect
        .ok_or_else(|| Failure::usage(format!("{}: missing [bisect] section", flags.config.display())))?;
    let model = cfg.build_model(&base_dir(&flags.config))?;
    let dir = prepare_out_dir(&cfg.output.dir)?;
    let mut log = String::from("beta,verdict,t_decided\n");
    let result = bisect_beta(&model, &cfg.disc, &opts, |p| {
        log.push_str(&format!("{:.16e},{},{:.16e}\n", p.beta, p.verdict, p.t_decided));
        let _ = writeln!(out, "probe beta = {} -> {} (t = {})", p.beta, p.verdict, p.t_decided);
    });
    let path = dir.join("bisect.csv");
    std::fs::write(&path, &log).map_err(|e| io_fail(&path, e))?;
    match result {
        Ok(b) => {
            let _ = writeln!(out, "lo = {}\nhi = {}\nwidth = {}\nruns = {}", b.lo, b.hi, b.width, b.runs);
            Ok(EXIT_OK)
        }
        Err(e @ SweepError::UndecidedProbe { .. }) => Err(Failure {
            code: EXIT_UNDECIDED,
            message: e.to_string(),
        }),
        Err(e @ (SweepError::Precondition(_) | SweepError::Model(_))) => Err(Failure::usage(e)),
        Err(e) => Err(Failure::runtime(e)),
    }
}

/// Deterministic CSV for a grid result.
pub fn format_grid(grid: &GridResult) -> String {
    let mut s = String::new();
    for ax in &grid.axes {
        s.push_str(ax.param.name());
        s.push(',');
    }
    s.push_str("verdict,rule,decision_t,decision_span,decision_max_v,t_final,g,h,min_u_core,steps,truncated,anomaly,error\n");
    for (i, row) in grid.rows.iter().enumerate() {
        for v in &row.values {
            s.push_str(&format!("{v:.16e},"));
        }
        let anomaly = grid.anomalies.contains(&i);
        match &row.outcome {
            Ok(r) => {
                let c = &r.classification;
                let e = c.evidence.expect("grid runs always record");
                s.push_str(&format!(
                    "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{},\n",
                    c.verdict,
                    e.rule.map_or("none", |r| r.name()),
                    e.t,
                    e.span,
                    e.max_v,
                    r.t_final,
                    r.g,
                    r.h,
                    r.min_u_core,
                    r.steps,
                    r.truncated,
                    anomaly
                ));
            }
            Err(msg) => {
                let msg = msg.replace(['"', '\n'], " ");
                s.push_str(&format!("error,,,,,,,,,,,{anomaly},\"{msg}\"\n"));
            }
        }
    }
    s
}

fn cmd_sweep(flags: &RunFlags, out: &mut dyn Write) -> Outcome {
    let cfg = load(flags)?;
    let sw = cfg
        .sweep
        .clone()
        .ok_or_else(|| Failure::usage(format!("{}: missing [sweep] section", flags.config.display())))?;
    let model = cfg.build_model(&base_dir(&flags.config))?;
    let opts = GridOptions {
        cap: sw.cap,
        parallel: sw.parallel,
        record_every: cfg.record_every,
        criteria: cfg.criteria,
    };
    let grid = run_grid(&sw.axes, &model, &cfg.disc, &opts).map_err(|e| match e {
        SweepError::RunCapExceeded { .. } | SweepError::EmptyAxis(_) | SweepError::Precondition(_) => {
            Failure::usage(e)
        }
        other => Failure::runtime(other),
    })?;
    let dir = prepare_out_dir(&cfg.output.dir)?;
    let path = dir.join("sweep.csv");
    std::fs::write(&path, format_grid(&grid)).map_err(|e| io_fail(&path, e))?;
    let failed = grid.rows.iter().filter(|r| r.outcome.is_err()).count();
    let _ = writeln!(out, "rows = {}\nfailed = {failed}\nanomalies = {}", grid.rows.len(), grid.anomalies.len());
    for &i in &grid.anomalies {
        let _ = writeln!(out, "anomaly: non-monotone verdict in beta at row {i}: {:?}", grid.rows[i].values);
    }
    let _ = writeln!(out, "table = {}", path.display());
    Ok(EXIT_OK)
}

fn parse_pairs(params: &[String], allowed: &[&str]) -> Result<BTreeMap<String, f64>, Failure> {
    let mut map = BTreeMap::new();
    for p in params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("expected key=value, got `{p}`")))?;
        if !allowed.contains(&k) {
            return Err(Failure::usage(format!(
                "unknown key `{k}`; expected one of {}",
                allowed.join(", ")
            )));
        }
        let x: f64 = v
            .parse()
            .map_err(|e| Failure::usage(format!("`{p}`: {e}")))?;
        if map.insert(k.to_string(), x).is_some() {
            return Err(Failure::usage(format!("`{k}` given twice")));
        }
    }
    Ok(map)
}

fn cmd_thresholds(config: Option<&Path>, params: &[String], out: &mut dyn Write) -> Outcome {
    if let Some(path) = config {
        if !params.is_empty() {
            return Err(Failure::usage("give either --config or key=value parameters, not both"));
        }
        let cfg = load_config(path, &Overrides::default())?;
        let model = cfg.build_model(&base_dir(path))?;
        let c = derived_constants(&model).map_err(Failure::usage)?;
        let _ = writeln!(out, "span_crit = {}\nh0_crit = {}", c.span_crit, c.h0_crit);
        let _ = writeln!(out, "lambda1 = {}\nbound_u = {}\nbound_v = {}", c.lambda1, c.bound_u, c.bound_v);
        let _ = writeln!(out, "coexistence_u = {}\ncoexistence_v = {}", c.coexistence.0, c.coexistence.1);
        return Ok(EXIT_OK);
    }
    let kv = parse_pairs(params, &["a", "b", "d", "mu", "beta", "h0", "m"])?;
    let (Some(&d), Some(&mu)) = (kv.get("d"), kv.get("mu")) else {
        return Err(Failure::usage("thresholds needs at least d=.. and mu=.."));
    };
    // unspecified parameters only feed quantities that are not printed
    let get = |k: &str| kv.get(k).copied();
    let mut p = ModelParams::leslie_gower(
        get("a").unwrap_or(1.0),
        get("b").unwrap_or(0.5),
        d,
        mu,
        get("beta").unwrap_or(1.0),
        get("h0").unwrap_or(1.0),
    );
    if let Some(m) = get("m") {
        p.kernel = crate::model::ReactionKernel::HollingTanner { m };
    }
    let model = validate_params(&p, &PreyProfile::default(), &PredatorProfile::default())
        .map_err(Failure::usage)?;
    let c = derived_constants(&model).map_err(Failure::usage)?;
    let _ = writeln!(out, "span_crit = {}\nh0_crit = {}", c.span_crit, c.h0_crit);
    if kv.contains_key("h0") {
        let _ = writeln!(out, "lambda1 = {}", c.lambda1);
    }
    if kv.contains_key("a") {
        let _ = writeln!(out, "bound_u = {}\nbound_v = {}", c.bound_u, c.bound_v);
        if kv.contains_key("b") {
            let _ = writeln!(out, "coexistence_u = {}\ncoexistence_v = {}", c.coexistence.0, c.coexistence.1);
        }
    }
    for w in model.warnings() {
        let _ = writeln!(out, "warning: {w}");
    }
    Ok(EXIT_OK)
}

fn cmd_bounds(params: &[String], out: &mut dyn Write) -> Outcome {
    let kv = parse_pairs(params, &["a", "b", "i"])?;
    let (Some(&a), Some(&b), Some(&i)) = (kv.get("a"), kv.get("b"), kv.get("i")) else {
        return Err(Failure::usage("bounds needs a=.. b=.. i=.."));
    };
    if !(i >= 1.0 && i.fract() == 0.0 && i <= 10_000.0) {
        return Err(Failure::usage(format!("i = {i} must be a positive integer")));
    }
    let s = bound_sequences(a, b, i as usize).map_err(Failure::usage)?;
    let _ = writeln!(out, "i,lower,upper");
    for (k, (lo, up)) in s.lower.iter().zip(&s.upper).enumerate() {
        let _ = writeln!(out, "{},{},{}", k + 1, lo, up);
    }
    let _ = writeln!(out, "limit = {}", s.limit);
    Ok(EXIT_OK)
}

fn cmd_plot_data(series: &Path, config: Option<&Path>, dir: Option<&Path>, out: &mut dyn Write) -> Outcome {
    let (md, records) = read_series(series).map_err(|e| Failure::usage(format!("{}: {e}", series.display())))?;
    let (span_crit, _, _) = thresholds_for(config, &md)?;
    let dir = match dir {
        Some(d) => d.to_path_buf(),
        None => base_dir(series),
    };
    std::fs::create_dir_all(&dir).map_err(|e| io_fail(&dir, e))?;
    let mut meta = Metadata::new();
    meta.push("source", series.display());
    let fronts = dir.join("fronts.csv");
    write_columns(&fronts, &meta, &["t", "g", "h"], records.iter().map(|r| vec![r.t, r.g, r.h]))
        .map_err(|e| io_fail(&fronts, e))?;
    meta.push("span_crit", format!("{span_crit:.16e}"));
    let span = dir.join("span.csv");
    write_columns(&span, &meta, &["t", "span"], records.iter().map(|r| vec![r.t, r.span]))
        .map_err(|e| io_fail(&span, e))?;
    let _ = writeln!(out, "fronts = {}\nspan = {}", fronts.display(), span.display());
    Ok(EXIT_OK)
}
