//! Parameter-space exploration: bisection for the spreading threshold in
//! `beta`, and Cartesian parameter grids.
//!
//! Every run stops at the first record that decides its verdict, which is
//! also the record [`classify`](crate::analysis::classify) would pick, so
//! early stopping never changes a result.

use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{record_verdict, ClassifierCriteria, Classification, Evidence, Verdict};
use crate::model::{derived_constants, validate_params, ModelParams, ValidatedModel, ValidationError};
use crate::solver::{simulate_with, Discretization, Flow, SolverError, StopReason};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SweepError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("no valid bracket: could not find Vanishing below {lo} and Spreading above {hi}")]
    NoBracket { lo: f64, hi: f64, history: Vec<Probe> },
    #[error("probe at beta = {beta} is Undecided; increase t_end (current bracket [{lo}, {hi}])")]
    UndecidedProbe {
        beta: f64,
        lo: f64,
        hi: f64,
        history: Vec<Probe>,
    },
    #[error("grid has {runs} runs, above the cap of {cap}")]
    RunCapExceeded { runs: usize, cap: usize },
    #[error("axis `{0}` has no values")]
    EmptyAxis(&'static str),
    #[error(transparent)]
    Model(#[from] ValidationError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Summary of one classified run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub classification: Classification,
    /// Time the run ended (the deciding record, or `t_end`).
    pub t_final: f64,
    pub g: f64,
    pub h: f64,
    pub max_v: f64,
    pub min_u_core: f64,
    pub steps: u64,
    pub truncated: bool,
}

/// Simulates until the verdict is decided or `disc.t_end` is reached.
pub fn run_classified(
    model: &ValidatedModel,
    disc: &Discretization,
    record_every: f64,
    criteria: &ClassifierCriteria,
) -> Result<RunSummary, SweepError> {
    let constants = derived_constants(model).map_err(SolverError::from)?;
    let thresholds = criteria.resolve(model.params(), &constants);
    let mut decided = None;
    let out = simulate_with(model, disc, record_every, |_, _, rec| {
        match record_verdict(rec, &constants, &thresholds) {
            Some((verdict, rule)) => {
                decided = Some((verdict, rule, *rec));
                Flow::Stop
            }
            None => Flow::Continue,
        }
    })?;
    let last = *out.series.last().expect("simulate always records the initial state");
    let (verdict, rule, at) = match decided {
        Some((v, r, rec)) => (v, Some(r), rec),
        None => (Verdict::Undecided, None, last),
    };
    Ok(RunSummary {
        classification: Classification {
            verdict,
            evidence: Some(Evidence {
                t: at.t,
                span: at.span,
                max_v: at.max_v,
                speed_sum: at.gdot.abs() + at.hdot.abs(),
                rule,
            }),
            theory_valid: model.theory_valid(),
        },
        t_final: last.t,
        g: last.g,
        h: last.h,
        max_v: last.max_v,
        min_u_core: out.health.min_u_core,
        steps: out.health.steps,
        truncated: matches!(out.health.stop, StopReason::FrontNearTruncation { .. }),
    })
}

// ---------------------------------------------------------------------------
// bisection

/// One bisection probe.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Probe {
    pub beta: f64,
    pub verdict: Verdict,
    pub t_decided: f64,
}

/// `verdict(lo) = Vanishing`, `verdict(hi) = Spreading`. The threshold lies
/// in between; no claim is made that it is sharp.
#[derive(Clone, Debug, PartialEq)]
pub struct BetaBracket {
    pub lo: f64,
    pub hi: f64,
    pub width: f64,
    pub runs: usize,
    /// Every probe in the order it was run.
    pub history: Vec<Probe>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BisectOptions {
    pub lo0: f64,
    pub hi0: f64,
    pub width_tol: f64,
    /// Factor by which an invalid endpoint is moved outward.
    pub expand_factor: f64,
    /// Largest number of moves per endpoint before giving up.
    pub max_expansions: usize,
    pub record_every: f64,
    pub criteria: ClassifierCriteria,
}

impl BisectOptions {
    pub fn new(lo0: f64, hi0: f64, width_tol: f64) -> Self {
        BisectOptions {
            lo0,
            hi0,
            width_tol,
            expand_factor: 4.0,
            max_expansions: 8,
            record_every: crate::solver::DEFAULT_RECORD_EVERY,
            criteria: ClassifierCriteria::default(),
        }
    }
}

/// Brackets the `beta` separating vanishing from spreading for a model whose
/// `h0` is below the critical half-length. The model's own `beta` is ignored.
///
/// `on_probe` sees every probe as it completes.
pub fn bisect_beta(
    model: &ValidatedModel,
    disc: &Discretization,
    opts: &BisectOptions,
    mut on_probe: impl FnMut(&Probe),
) -> Result<BetaBracket, SweepError> {
    let constants = derived_constants(model).map_err(SolverError::from)?;
    let h0 = model.params().h0;
    if !(h0 < constants.h0_crit) {
        return Err(SweepError::Precondition(format!(
            "h0 = {h0} must be below the critical half-length {}",
            constants.h0_crit
        )));
    }
    if !(opts.lo0 > 0.0 && opts.lo0 < opts.hi0 && opts.hi0.is_finite()) {
        return Err(SweepError::Precondition(format!(
            "need 0 < lo0 < hi0, got [{}, {}]",
            opts.lo0, opts.hi0
        )));
    }
    if !(opts.width_tol > 0.0 && opts.expand_factor > 1.0) {
        return Err(SweepError::Precondition(
            "width_tol must be positive and expand_factor above 1".into(),
        ));
    }

    let mut history: Vec<Probe> = Vec::new();
    let mut probe = |beta: f64, history: &mut Vec<Probe>| -> Result<Verdict, SweepError> {
        let m = model.with_beta(beta)?;
        let r = run_classified(&m, disc, opts.record_every, &opts.criteria)?;
        let p = Probe {
            beta,
            verdict: r.classification.verdict,
            t_decided: r.classification.evidence.map_or(r.t_final, |e| e.t),
        };
        on_probe(&p);
        history.push(p);
        Ok(p.verdict)
    };

    let mut lo = opts.lo0;
    let mut hi = opts.hi0;
    let mut expansions = 0;
    loop {
        match probe(lo, &mut history)? {
            Verdict::Vanishing => break,
            Verdict::Spreading => {
                // the failed endpoint is still a valid upper end
                hi = hi.min(lo);
            }
            Verdict::Undecided => {}
        }
        expansions += 1;
        if expansions > opts.max_expansions {
            return Err(SweepError::NoBracket { lo, hi, history });
        }
        lo /= opts.expand_factor;
    }
    if hi > lo {
        // hi may already be known Spreading from the downward search
        let known = history
            .iter()
            .any(|p| p.beta == hi && p.verdict == Verdict::Spreading);
        if !known {
            let mut expansions = 0;
            loop {
                match probe(hi, &mut history)? {
                    Verdict::Spreading => break,
                    Verdict::Vanishing => lo = lo.max(hi),
                    Verdict::Undecided => {}
                }
                expansions += 1;
                if expansions > opts.max_expansions {
                    return Err(SweepError::NoBracket { lo, hi, history });
                }
                hi *= opts.expand_factor;
            }
        }
    }

    while hi - lo > opts.width_tol {
        let mid = 0.5 * (lo + hi);
        match probe(mid, &mut history)? {
            Verdict::Vanishing => lo = mid,
            Verdict::Spreading => hi = mid,
            Verdict::Undecided => {
                return Err(SweepError::UndecidedProbe {
                    beta: mid,
                    lo,
                    hi,
                    history,
                })
            }
        }
    }
    Ok(BetaBracket {
        lo,
        hi,
        width: hi - lo,
        runs: history.len(),
        history,
    })
}

// ---------------------------------------------------------------------------
// grids

/// A model parameter that can be swept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Param {
    A,
    B,
    D,
    Mu,
    Beta,
    H0,
}

impl Param {
    pub const ALL: [Param; 6] = [Param::A, Param::B, Param::D, Param::Mu, Param::Beta, Param::H0];

    pub fn name(&self) -> &'static str {
        match self {
            Param::A => "a",
            Param::B => "b",
            Param::D => "d",
            Param::Mu => "mu",
            Param::Beta => "beta",
            Param::H0 => "h0",
        }
    }

    pub fn from_name(name: &str) -> Option<Param> {
        Param::ALL.into_iter().find(|p| p.name() == name)
    }

    fn set(&self, p: &mut ModelParams, value: f64) {
        match self {
            Param::A => p.a = value,
            Param::B => p.b = value,
            Param::D => p.d = value,
            Param::Mu => p.mu = value,
            Param::Beta => p.beta = value,
            Param::H0 => p.h0 = value,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub param: Param,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(param: Param, values: Vec<f64>) -> Self {
        Axis { param, values }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridRow {
    /// One value per axis, in axis order.
    pub values: Vec<f64>,
    pub outcome: Result<RunSummary, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridResult {
    pub axes: Vec<Axis>,
    /// Lexicographic in the axes: the last axis varies fastest.
    pub rows: Vec<GridRow>,
    /// Row indices where a Vanishing verdict follows a Spreading one at a
    /// smaller `beta`, all other parameters equal.
    pub anomalies: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridOptions {
    pub cap: usize,
    pub parallel: bool,
    pub record_every: f64,
    pub criteria: ClassifierCriteria,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            cap: 1000,
            parallel: true,
            record_every: crate::solver::DEFAULT_RECORD_EVERY,
            criteria: ClassifierCriteria::default(),
        }
    }
}

/// Runs every point of the Cartesian product of `axes` on top of `base`.
/// Failures of single runs are recorded in their rows.
pub fn run_grid(
    axes: &[Axis],
    base: &ValidatedModel,
    disc: &Discretization,
    opts: &GridOptions,
) -> Result<GridResult, SweepError> {
    if axes.is_empty() {
        return Err(SweepError::Precondition("at least one axis is required".into()));
    }
    for (i, ax) in axes.iter().enumerate() {
        if ax.values.is_empty() {
            return Err(SweepError::EmptyAxis(ax.param.name()));
        }
        if axes[..i].iter().any(|o| o.param == ax.param) {
            return Err(SweepError::Precondition(format!(
                "axis `{}` appears twice",
                ax.param.name()
            )));
        }
    }
    let runs = axes
        .iter()
        .try_fold(1usize, |n, ax| n.checked_mul(ax.values.len()))
        .unwrap_or(usize::MAX);
    if runs > opts.cap {
        return Err(SweepError::RunCapExceeded { runs, cap: opts.cap });
    }

    let points: Vec<Vec<f64>> = (0..runs)
        .map(|mut k| {
            let mut values = vec![0.0; axes.len()];
            for (slot, ax) in values.iter_mut().zip(axes).rev() {
                *slot = ax.values[k % ax.values.len()];
                k /= ax.values.len();
            }
            values
        })
        .collect();

    let run_one = |values: &Vec<f64>| -> GridRow {
        let mut params = *base.params();
        for (ax, &v) in axes.iter().zip(values) {
            ax.param.set(&mut params, v);
        }
        let outcome = validate_params(&params, &base.init().u0, &base.init().v0)
            .map_err(|e| e.to_string())
            .and_then(|m| {
                run_classified(&m, disc, opts.record_every, &opts.criteria).map_err(|e| e.to_string())
            });
        GridRow {
            values: values.clone(),
            outcome,
        }
    };
    let rows: Vec<GridRow> = if opts.parallel {
        points.par_iter().map(run_one).collect()
    } else {
        points.iter().map(run_one).collect()
    };
    let anomalies = find_anomalies(axes, &rows);
    Ok(GridResult {
        axes: axes.to_vec(),
        rows,
        anomalies,
    })
}

fn find_anomalies(axes: &[Axis], rows: &[GridRow]) -> Vec<usize> {
    let Some(bi) = axes.iter().position(|a| a.param == Param::Beta) else {
        return Vec::new();
    };
    let verdict = |r: &GridRow| r.outcome.as_ref().ok().map(|s| s.classification.verdict);
    let mut flagged = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        if verdict(r) != Some(Verdict::Vanishing) {
            continue;
        }
        let spreading_below = rows.iter().any(|o| {
            verdict(o) == Some(Verdict::Spreading)
                && o.values[bi] < r.values[bi]
                && o.values.iter().zip(&r.values).enumerate().all(|(k, (x, y))| k == bi || x == y)
        });
        if spreading_below {
            flagged.push(i);
        }
    }
    flagged
}
