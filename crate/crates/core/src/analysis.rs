//! Long-time classification and cross-checks against the analytic theory.
//!
//! Every check here works on finite-time output, so each one is a proxy for
//! a `t -> ∞` statement: spreading is certified by the habitat exceeding the
//! critical span, and vanishing by a dead predator on a subcritical, frozen
//! habitat.

use std::f64::consts::PI;

use thiserror::Error;

use crate::model::{DerivedConstants, ModelParams, ValidatedModel};
use crate::solver::{
    simulate_with, Discretization, Flow, HealthReport, SeriesRecord, SimState, SolverError,
};
use crate::transform::{map_y_to_x, stencil_speed_tolerance};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum AnalysisError {
    #[error("the bound sequences assume 0 < b < 1, got b = {b}")]
    AssumptionViolated { b: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("the asymptotic check needs a Spreading or Vanishing verdict")]
    NotDecided,
    #[error("window [-{window}, {window}] is not inside the habitat ({g}, {h})")]
    WindowOutsideFronts { window: f64, g: f64, h: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("witness does not dominate the initial predator: K = {k} but at least {required} is needed")]
    WitnessInvalid { k: f64, required: f64 },
    #[error("runs are not comparable: {0}")]
    IncomparableRuns(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

// ---------------------------------------------------------------------------
// classification

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Spreading,
    Vanishing,
    Undecided,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Spreading => "Spreading",
            Verdict::Vanishing => "Vanishing",
            Verdict::Undecided => "Undecided",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Spreading" => Ok(Verdict::Spreading),
            "Vanishing" => Ok(Verdict::Vanishing),
            "Undecided" => Ok(Verdict::Undecided),
            other => Err(format!("unknown verdict `{other}`")),
        }
    }
}

/// Which rule produced a verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    /// `span > span_crit (1 + tol_span)`.
    SpanAboveCritical,
    /// `max_v < eps_v`, subcritical span and `|g'| + |h'| < eps_speed`.
    PredatorExtinct,
}

impl Rule {
    pub fn name(&self) -> &'static str {
        match self {
            Rule::SpanAboveCritical => "span_above_critical",
            Rule::PredatorExtinct => "predator_extinct",
        }
    }
}

/// The record a verdict rests on. For `Undecided` it is the last record and
/// `rule` is `None`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evidence {
    pub t: f64,
    pub span: f64,
    pub max_v: f64,
    pub speed_sum: f64,
    pub rule: Option<Rule>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Classification {
    pub verdict: Verdict,
    /// `None` only for an empty series.
    pub evidence: Option<Evidence>,
    /// False when `b >= 1`, outside the theory the rules rest on.
    pub theory_valid: bool,
}

/// Absolute classifier thresholds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    pub eps_v: f64,
    pub eps_speed: f64,
    pub tol_span: f64,
}

/// Classifier tolerances relative to the model's natural scales:
/// `eps_v = eps_v_rel * B`, `eps_speed = eps_speed_rel * beta * B / h0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifierCriteria {
    pub eps_v_rel: f64,
    pub eps_speed_rel: f64,
    pub tol_span: f64,
}

impl Default for ClassifierCriteria {
    fn default() -> Self {
        ClassifierCriteria {
            eps_v_rel: 1e-6,
            eps_speed_rel: 1e-6,
            tol_span: 0.02,
        }
    }
}

impl ClassifierCriteria {
    pub fn resolve(&self, params: &ModelParams, constants: &DerivedConstants) -> Thresholds {
        let b = constants.bound_v;
        Thresholds {
            eps_v: self.eps_v_rel * b,
            eps_speed: self.eps_speed_rel * params.beta * b / params.h0,
            tol_span: self.tol_span,
        }
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        let ok = |x: f64| x > 0.0 && x.is_finite();
        if ok(self.eps_v_rel) && ok(self.eps_speed_rel) && self.tol_span >= 0.0 && self.tol_span.is_finite() {
            Ok(())
        } else {
            Err(AnalysisError::InvalidArgument(format!(
                "criteria must be positive: eps_v_rel = {}, eps_speed_rel = {}, tol_span = {}",
                self.eps_v_rel, self.eps_speed_rel, self.tol_span
            )))
        }
    }
}

/// The verdict a single record supports on its own, if any.
pub fn record_verdict(
    record: &SeriesRecord,
    constants: &DerivedConstants,
    thresholds: &Thresholds,
) -> Option<(Verdict, Rule)> {
    let cap = constants.span_crit * (1.0 + thresholds.tol_span);
    if record.span > cap {
        return Some((Verdict::Spreading, Rule::SpanAboveCritical));
    }
    let speed = record.gdot.abs() + record.hdot.abs();
    if record.max_v < thresholds.eps_v && speed < thresholds.eps_speed {
        return Some((Verdict::Vanishing, Rule::PredatorExtinct));
    }
    None
}

fn evidence(r: &SeriesRecord, rule: Option<Rule>) -> Evidence {
    Evidence {
        t: r.t,
        span: r.span,
        max_v: r.max_v,
        speed_sum: r.gdot.abs() + r.hdot.abs(),
        rule,
    }
}

/// The earliest record that fires a rule decides; otherwise `Undecided`.
pub fn classify(
    series: &[SeriesRecord],
    constants: &DerivedConstants,
    thresholds: &Thresholds,
    theory_valid: bool,
) -> Classification {
    for r in series {
        if let Some((verdict, rule)) = record_verdict(r, constants, thresholds) {
            return Classification {
                verdict,
                evidence: Some(evidence(r, Some(rule))),
                theory_valid,
            };
        }
    }
    Classification {
        verdict: Verdict::Undecided,
        evidence: series.last().map(|r| evidence(r, None)),
        theory_valid,
    }
}

// ---------------------------------------------------------------------------
// bound sequences

/// Iterated lower and upper bounds on the long-time prey and predator
/// densities under spreading. `lower[i - 1]` and `upper[i - 1]` hold the
/// `i`-th terms.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundSequence {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub limit: f64,
}

/// `a (1 - b + b^2 - ... - b^(2i-1)) = a (1 - b^(2i)) / (1 + b)`.
pub fn closed_form_lower(a: f64, b: f64, i: usize) -> f64 {
    a * (1.0 - b.powi(2 * i as i32)) / (1.0 + b)
}

/// `a (1 - b + b^2 - ... + b^(2i)) = a (1 + b^(2i+1)) / (1 + b)`.
pub fn closed_form_upper(a: f64, b: f64, i: usize) -> f64 {
    a * (1.0 + b.powi(2 * i as i32 + 1)) / (1.0 + b)
}

/// Agreement required between the recursion and the closed forms.
pub const BOUND_SEQUENCE_TOL: f64 = 1e-12;

/// Runs the recursion `lower_1 = a - b a`, `upper_i = a - b lower_i`,
/// `lower_{i+1} = a - b upper_i` for `i = 1..=i_max`, cross-checked against
/// the closed forms.
pub fn bound_sequences(a: f64, b: f64, i_max: usize) -> Result<BoundSequence, AnalysisError> {
    if b >= 1.0 {
        return Err(AnalysisError::AssumptionViolated { b });
    }
    if !(a > 0.0 && a.is_finite() && b > 0.0) {
        return Err(AnalysisError::InvalidArgument(format!(
            "need a > 0 and 0 < b < 1, got a = {a}, b = {b}"
        )));
    }
    if i_max == 0 {
        return Err(AnalysisError::InvalidArgument("i_max must be at least 1".into()));
    }
    let mut lower = Vec::with_capacity(i_max);
    let mut upper = Vec::with_capacity(i_max);
    let mut lo = a - b * a;
    for i in 1..=i_max {
        let up = a - b * lo;
        for (rec, closed) in [(lo, closed_form_lower(a, b, i)), (up, closed_form_upper(a, b, i))] {
            if (rec - closed).abs() > BOUND_SEQUENCE_TOL * a {
                return Err(AnalysisError::InvalidArgument(format!(
                    "recursion {rec} and closed form {closed} disagree at i = {i}"
                )));
            }
        }
        lower.push(lo);
        upper.push(up);
        lo = a - b * up;
    }
    Ok(BoundSequence {
        lower,
        upper,
        limit: a / (1.0 + b),
    })
}

// ---------------------------------------------------------------------------
// asymptotic targets

/// Relative distances of the final state from its predicted limit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymptoticErrors {
    pub verdict: Verdict,
    /// Spreading: `max |u - u*| / u*` over the window. Vanishing: `max |u - a| / a`.
    pub u_error: f64,
    /// Spreading: `max |v - v*| / v*` over the window. Vanishing: `max v / B`.
    pub v_error: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Compares a final state with the limit its verdict predicts, over the
/// window `[-window, window]`.
pub fn asymptotic_check(
    state: &SimState,
    disc: &Discretization,
    params: &ModelParams,
    constants: &DerivedConstants,
    classification: &Classification,
    window: f64,
    tol: f64,
) -> Result<AsymptoticErrors, AnalysisError> {
    if !(window >= 0.0 && window <= disc.half_width) {
        return Err(AnalysisError::InvalidArgument(format!(
            "window {window} must lie in [0, {}]",
            disc.half_width
        )));
    }
    let dx = disc.dx();
    let prey_in_window = state
        .u
        .iter()
        .enumerate()
        .filter(|(i, _)| (-disc.half_width + *i as f64 * dx).abs() <= window)
        .map(|(_, &u)| u);
    let (u_error, v_error) = match classification.verdict {
        Verdict::Undecided => return Err(AnalysisError::NotDecided),
        Verdict::Spreading => {
            let f = state.front;
            if !(f.g < -window && window < f.h) {
                return Err(AnalysisError::WindowOutsideFronts {
                    window,
                    g: f.g,
                    h: f.h,
                });
            }
            let (us, vs) = constants.coexistence;
            let u_err = prey_in_window.map(|u| (u - us).abs() / us).fold(0.0, f64::max);
            let dy = disc.dy();
            let mut v_err: f64 = 0.0;
            for (j, &z) in state.z.iter().enumerate() {
                let x = map_y_to_x(-1.0 + j as f64 * dy, &f)
                    .map_err(|e| AnalysisError::Solver(e.into()))?;
                if x.abs() <= window {
                    v_err = v_err.max((z - vs).abs() / vs);
                }
            }
            (u_err, v_err)
        }
        Verdict::Vanishing => {
            let a = params.a;
            let u_err = prey_in_window.map(|u| (u - a).abs() / a).fold(0.0, f64::max);
            let max_v = state.z.iter().copied().fold(0.0, f64::max);
            (u_err, max_v / constants.bound_v)
        }
    };
    Ok(AsymptoticErrors {
        verdict: classification.verdict,
        u_error,
        v_error,
        tol,
        passed: u_error < tol && v_error < tol,
    })
}

// ---------------------------------------------------------------------------
// eigenfunction supersolution

/// The shrinking-amplitude, slowly widening supersolution
/// `w(t, x) = K e^(-rho t) phi(x / s(t))` on `|x| < eta(t) = h0 s(t)` with
/// `s(t) = 1 + 2 eps - eps e^(-rho t)` and
/// `phi(x) = sin(pi (x + h0) / (2 h0))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupersolutionWitness {
    pub eps: f64,
    /// Decay rate of the amplitude; unrelated to the transform's `rho(t)`.
    pub rho_dec: f64,
    pub k: f64,
    pub h0: f64,
}

impl SupersolutionWitness {
    pub fn new(eps: f64, rho_dec: f64, k: f64, h0: f64) -> Result<Self, AnalysisError> {
        let unit = |x: f64| x > 0.0 && x < 1.0;
        if !(unit(eps) && unit(rho_dec) && k > 0.0 && k.is_finite() && h0 > 0.0 && h0.is_finite()) {
            return Err(AnalysisError::InvalidArgument(format!(
                "witness needs eps, rho in (0, 1) and K, h0 > 0; got eps = {eps}, rho = {rho_dec}, K = {k}, h0 = {h0}"
            )));
        }
        Ok(SupersolutionWitness { eps, rho_dec, k, h0 })
    }

    pub fn s(&self, t: f64) -> f64 {
        1.0 + 2.0 * self.eps - self.eps * (-self.rho_dec * t).exp()
    }

    pub fn eta(&self, t: f64) -> f64 {
        self.h0 * self.s(t)
    }

    /// `phi` on `[-h0, h0]`, zero outside.
    pub fn phi(&self, x: f64) -> f64 {
        if x.abs() >= self.h0 {
            return 0.0;
        }
        (PI * (x + self.h0) / (2.0 * self.h0)).sin()
    }

    pub fn w(&self, t: f64, x: f64) -> f64 {
        self.k * (-self.rho_dec * t).exp() * self.phi(x / self.s(t))
    }

    /// Largest `beta` for which the witness's own front stays ahead of the
    /// Stefan law: `h0 eps rho s(t) >= beta K |phi'(h0)|` for all `t`, with
    /// the worst case `s = 1 + eps`.
    pub fn beta_bound(&self) -> f64 {
        let slope = PI / (2.0 * self.h0);
        self.h0 * self.eps * self.rho_dec * (1.0 + self.eps) / (self.k * slope)
    }

    /// Whether the reaction-diffusion inequality `w_t - d w_xx - mu w > 0`
    /// holds, which requires `d pi^2 / (4 h0^2 s^2) > mu + rho` at the
    /// widest `s = 1 + 2 eps`.
    pub fn pde_condition_holds(&self, d: f64, mu: f64) -> bool {
        let s = 1.0 + 2.0 * self.eps;
        d * PI * PI / (4.0 * self.h0 * self.h0 * s * s) > mu + self.rho_dec
    }
}

/// Points at which initial domination is verified: a uniform scan of
/// `[-h0, h0]` at this many intervals, together with the solver's nodes.
pub const DOMINATION_SCAN: usize = 20_000;

/// Smallest `K` with `K phi(x / (1 + eps)) >= v0(x)` over a dense scan of
/// `[-h0, h0]` and the predator nodes of `disc`.
pub fn minimal_amplitude(model: &ValidatedModel, disc: &Discretization, eps: f64) -> f64 {
    let h0 = model.params().h0;
    let unit = SupersolutionWitness {
        eps,
        rho_dec: 0.5,
        k: 1.0,
        h0,
    };
    let v0 = &model.init().v0;
    let scan = (0..=DOMINATION_SCAN).map(|i| -h0 + 2.0 * h0 * i as f64 / DOMINATION_SCAN as f64);
    let nodes = (0..=disc.ny).map(|j| h0 * (-1.0 + j as f64 * disc.dy()));
    scan.chain(nodes)
        .map(|x| {
            let v = v0.eval(x, h0);
            if v <= 0.0 {
                0.0
            } else {
                v / unit.phi(x / (1.0 + eps))
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupersolutionReport {
    /// `v <= w` at every predator node of every record.
    pub dominated: bool,
    /// `-eta <= g` and `h <= eta` at every record.
    pub fronts_confined: bool,
    /// Smallest `w - v` seen.
    pub min_margin: f64,
    /// Smallest `min(eta - h, g + eta)` seen.
    pub min_front_margin: f64,
    pub records: usize,
    pub beta_bound: f64,
    /// `beta <= beta_bound` and the eigenvalue condition hold, so the
    /// construction guarantees domination.
    pub theory_conditions_hold: bool,
    pub series: Vec<SeriesRecord>,
    pub health: HealthReport,
}

/// Absolute slack in the domination comparison, relative to `K`.
pub const DOMINATION_TOL: f64 = 1e-12;

/// Simulates to `t_end` and checks the solution against the witness at
/// every record.
pub fn supersolution_check(
    model: &ValidatedModel,
    disc: &Discretization,
    witness: &SupersolutionWitness,
    t_end: f64,
    record_every: f64,
) -> Result<SupersolutionReport, AnalysisError> {
    let p = model.params();
    let h0_crit = 0.5 * PI * (p.d / p.mu).sqrt();
    if !(p.h0 < h0_crit) {
        return Err(AnalysisError::Precondition(format!(
            "h0 = {} must be below (pi / 2) sqrt(d / mu) = {h0_crit}",
            p.h0
        )));
    }
    if witness.h0 != p.h0 {
        return Err(AnalysisError::InvalidArgument(format!(
            "witness h0 = {} differs from model h0 = {}",
            witness.h0, p.h0
        )));
    }
    let required = minimal_amplitude(model, disc, witness.eps);
    if witness.k < required {
        return Err(AnalysisError::WitnessInvalid {
            k: witness.k,
            required,
        });
    }

    let d = Discretization { t_end, ..*disc };
    let tol = DOMINATION_TOL * witness.k;
    let mut min_margin = f64::INFINITY;
    let mut min_front_margin = f64::INFINITY;
    let mut records = 0;
    let out = simulate_with(model, &d, record_every, |solver, state, _| {
        records += 1;
        let eta = witness.eta(state.t);
        min_front_margin = min_front_margin.min((eta - state.front.h).min(state.front.g + eta));
        for (j, &z) in state.z.iter().enumerate() {
            let x = state.front.g + 0.5 * (solver.y_node(j) + 1.0) * state.front.span();
            min_margin = min_margin.min(witness.w(state.t, x) - z);
        }
        Flow::Continue
    })?;
    let beta_bound = witness.beta_bound();
    Ok(SupersolutionReport {
        dominated: min_margin >= -tol,
        fronts_confined: min_front_margin >= 0.0,
        min_margin,
        min_front_margin,
        records,
        beta_bound,
        theory_conditions_hold: p.beta <= beta_bound && witness.pde_condition_holds(p.d, p.mu),
        series: out.series,
        health: out.health,
    })
}

// ---------------------------------------------------------------------------
// comparison of ordered runs

/// One finished run for [`comparison_check`].
#[derive(Clone, Copy, Debug)]
pub struct RunView<'a> {
    pub model: &'a ValidatedModel,
    pub disc: &'a Discretization,
    pub series: &'a [SeriesRecord],
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    /// Largest `g_big - g_small` (positive means the small run's left front
    /// is outside the big run's).
    pub max_g_violation: f64,
    /// Largest `h_small - h_big`.
    pub max_h_violation: f64,
    /// Largest violation minus its allowance `2 eps_stencil t`.
    pub max_excess: f64,
    /// Front-speed tolerance used for the allowance.
    pub eps_stencil: f64,
    pub records: usize,
    /// Every violation within its allowance.
    pub nested: bool,
}

/// Points at which `v0_small <= v0_big` is verified.
const ORDER_SCAN: usize = 10_000;

/// Checks that a run started from a smaller predator keeps its habitat
/// inside that of a run started from a larger one, at every common record.
pub fn comparison_check(small: RunView<'_>, big: RunView<'_>) -> Result<ComparisonReport, AnalysisError> {
    let incomparable = |m: String| Err(AnalysisError::IncomparableRuns(m));
    let (ps, pb) = (small.model.params(), big.model.params());
    if ps != pb {
        return incomparable(format!("parameters differ: {ps:?} vs {pb:?}"));
    }
    if small.disc != big.disc {
        return incomparable("discretizations differ".into());
    }
    if small.model.init().u0 != big.model.init().u0 {
        return incomparable("prey initial data differ".into());
    }
    let h0 = ps.h0;
    for i in 0..=ORDER_SCAN {
        let x = -h0 + 2.0 * h0 * i as f64 / ORDER_SCAN as f64;
        let (vs, vb) = (small.model.init().v0.eval(x, h0), big.model.init().v0.eval(x, h0));
        if vs > vb {
            return incomparable(format!("v0_small = {vs} exceeds v0_big = {vb} at x = {x}"));
        }
    }
    let n = small.series.len().min(big.series.len());
    for k in 0..n {
        let (ts, tb) = (small.series[k].t, big.series[k].t);
        if (ts - tb).abs() > 1e-9 * ts.abs().max(1.0) {
            return incomparable(format!("record {k} is at t = {ts} vs t = {tb}"));
        }
    }

    let dy = small.disc.dy();
    let bound = |m: &ValidatedModel| {
        let a = m.params().a.max(m.init().u0.max());
        a.max(m.init().v0.max())
    };
    let b = bound(small.model).max(bound(big.model));
    let eps = stencil_speed_tolerance(ps.beta, 2.0 * h0, dy, b);

    let mut report = ComparisonReport {
        max_g_violation: f64::NEG_INFINITY,
        max_h_violation: f64::NEG_INFINITY,
        max_excess: f64::NEG_INFINITY,
        eps_stencil: eps,
        records: n,
        nested: true,
    };
    for (s, l) in small.series.iter().zip(big.series).take(n) {
        let gv = l.g - s.g;
        let hv = s.h - l.h;
        report.max_g_violation = report.max_g_violation.max(gv);
        report.max_h_violation = report.max_h_violation.max(hv);
        let excess = gv.max(hv) - 2.0 * eps * s.t;
        report.max_excess = report.max_excess.max(excess);
        if excess > 0.0 {
            report.nested = false;
        }
    }
    Ok(report)
}
