//! Model parameters, reaction kernels, initial profiles and the analytic
//! constants derived from them.
//!
//! The system modelled here is
//!
//! ```text
//! u_t - u_xx   = u(a - u) - b u v                 x in R
//! v_t - d v_xx = mu v (1 - v / u)                 g(t) < x < h(t)
//! v = 0 outside (g, h),  g' = -beta v_x(g),  h' = -beta v_x(h)
//! ```
//!
//! with `g(0) = -h0`, `h(0) = h0`. The Holling-Tanner variant replaces the
//! predation term by `b u v / (m + u)`.

use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

/// Prey predation term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReactionKernel {
    /// `b u v`
    LeslieGower,
    /// `b u v / (m + u)` with saturation constant `m > 0`.
    HollingTanner { m: f64 },
}

impl ReactionKernel {
    pub fn name(&self) -> &'static str {
        match self {
            ReactionKernel::LeslieGower => "leslie-gower",
            ReactionKernel::HollingTanner { .. } => "holling-tanner",
        }
    }
}

/// Coefficients of the free-boundary system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Prey growth rate.
    pub a: f64,
    /// Predation coefficient.
    pub b: f64,
    /// Predator diffusivity.
    pub d: f64,
    /// Predator growth rate.
    pub mu: f64,
    /// Front-response coefficient in the Stefan condition.
    pub beta: f64,
    /// Initial half-length of the predator habitat.
    pub h0: f64,
    pub kernel: ReactionKernel,
}

impl ModelParams {
    pub fn leslie_gower(a: f64, b: f64, d: f64, mu: f64, beta: f64, h0: f64) -> Self {
        ModelParams {
            a,
            b,
            d,
            mu,
            beta,
            h0,
            kernel: ReactionKernel::LeslieGower,
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_h0(mut self, h0: f64) -> Self {
        self.h0 = h0;
        self
    }

    fn named_fields(&self) -> Vec<(&'static str, f64)> {
        let mut v = vec![
            ("a", self.a),
            ("b", self.b),
            ("d", self.d),
            ("mu", self.mu),
            ("beta", self.beta),
            ("h0", self.h0),
        ];
        if let ReactionKernel::HollingTanner { m } = self.kernel {
            v.push(("m", m));
        }
        v
    }
}

/// Piecewise-linear profile given by sample points.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    xs: Vec<f64>,
    values: Vec<f64>,
}

impl Table {
    /// Builds a table; abscissae must be finite and strictly increasing and
    /// there must be at least two points.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, String> {
        if points.len() < 2 {
            return Err(format!("table needs at least 2 points, got {}", points.len()));
        }
        let (xs, values): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
        if xs.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err("table contains non-finite entries".into());
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err("table abscissae must be strictly increasing".into());
        }
        Ok(Table { xs, values })
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.values.iter().copied())
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Linear interpolation, clamped to the end values outside the range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.values[0];
        }
        if x >= self.xs[n - 1] {
            return self.values[n - 1];
        }
        let i = self.xs.partition_point(|&xi| xi <= x) - 1;
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let s = (x - x0) / (x1 - x0);
        self.values[i] * (1.0 - s) + self.values[i + 1] * s
    }

    fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// One-sided derivative at the left (`at_left = true`) or right end.
    /// Second order when three points are available.
    fn end_slope(&self, at_left: bool) -> f64 {
        let n = self.xs.len();
        let (x, v): (Vec<f64>, Vec<f64>) = if at_left {
            (self.xs[..n.min(3)].to_vec(), self.values[..n.min(3)].to_vec())
        } else {
            let lo = n.saturating_sub(3);
            let mut x = self.xs[lo..].to_vec();
            let mut v = self.values[lo..].to_vec();
            x.reverse();
            v.reverse();
            (x, v)
        };
        if x.len() == 2 {
            return (v[1] - v[0]) / (x[1] - x[0]);
        }
        // derivative at x[0] of the quadratic through three points
        let h1 = x[1] - x[0];
        let h2 = x[2] - x[0];
        let c0 = -(h1 + h2) / (h1 * h2);
        let c1 = h2 / (h1 * (h2 - h1));
        let c2 = -h1 / (h2 * (h2 - h1));
        c0 * v[0] + c1 * v[1] + c2 * v[2]
    }
}

/// Prey initial profile over the whole line.
#[derive(Clone, Debug, PartialEq)]
pub enum PreyProfile {
    Constant(f64),
    Table(Table),
}

impl PreyProfile {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            PreyProfile::Constant(u) => *u,
            PreyProfile::Table(t) => t.eval(x),
        }
    }

    pub fn max(&self) -> f64 {
        match self {
            PreyProfile::Constant(u) => *u,
            PreyProfile::Table(t) => t.max_value(),
        }
    }
}

impl Default for PreyProfile {
    fn default() -> Self {
        PreyProfile::Constant(1.0)
    }
}

/// Predator initial profile on `[-h0, h0]`.
#[derive(Clone, Debug, PartialEq)]
pub enum PredatorProfile {
    /// `amplitude * cos(pi x / (2 h0))`
    Cosine { amplitude: f64 },
    Table(Table),
}

impl Default for PredatorProfile {
    fn default() -> Self {
        PredatorProfile::Cosine { amplitude: 1.0 }
    }
}

impl PredatorProfile {
    /// Value at `x`; zero outside `[-h0, h0]` and exactly zero at `±h0`.
    pub fn eval(&self, x: f64, h0: f64) -> f64 {
        if x <= -h0 || x >= h0 {
            return 0.0;
        }
        match self {
            PredatorProfile::Cosine { amplitude } => amplitude * (PI * x / (2.0 * h0)).cos(),
            PredatorProfile::Table(t) => t.eval(x),
        }
    }

    pub fn max(&self) -> f64 {
        match self {
            PredatorProfile::Cosine { amplitude } => *amplitude,
            PredatorProfile::Table(t) => t.max_value(),
        }
    }

    /// `(v0'(-h0), v0'(h0))`.
    pub fn end_slopes(&self, h0: f64) -> (f64, f64) {
        match self {
            PredatorProfile::Cosine { amplitude } => {
                let k = amplitude * PI / (2.0 * h0);
                (k, -k)
            }
            PredatorProfile::Table(t) => (t.end_slope(true), t.end_slope(false)),
        }
    }

    pub fn scaled(&self, factor: f64) -> PredatorProfile {
        match self {
            PredatorProfile::Cosine { amplitude } => PredatorProfile::Cosine {
                amplitude: amplitude * factor,
            },
            PredatorProfile::Table(t) => PredatorProfile::Table(Table {
                xs: t.xs.clone(),
                values: t.values.iter().map(|v| v * factor).collect(),
            }),
        }
    }
}

/// Initial data together with the initial front speeds
/// `g* = -beta v0'(-h0)` and `h* = -beta v0'(h0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialData {
    pub u0: PreyProfile,
    pub v0: PredatorProfile,
    pub gstar: f64,
    pub hstar: f64,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum Violation {
    #[error("parameter `{name}` must be positive and finite, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("initial profile: {0}")]
    InitialProfileViolation(String),
}

/// All constraint violations found during validation.
#[derive(Clone, Debug, PartialEq, Error)]
pub struct ValidationError(pub Vec<Violation>);

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msgs: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", msgs.join("; "))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Warning {
    /// `b >= 1`: the long-time classification results assume `b < 1`.
    TheoryAssumption,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::TheoryAssumption => {
                write!(f, "b >= 1: classification results assume b < 1 and may not apply")
            }
        }
    }
}

/// A parameter set and initial data that passed validation.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidatedModel {
    params: ModelParams,
    init: InitialData,
    warnings: Vec<Warning>,
}

impl ValidatedModel {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn init(&self) -> &InitialData {
        &self.init
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    /// True when `b < 1`.
    pub fn theory_valid(&self) -> bool {
        !self.warnings.contains(&Warning::TheoryAssumption)
    }

    pub fn with_beta(&self, beta: f64) -> Result<ValidatedModel, ValidationError> {
        validate_params(&self.params.with_beta(beta), &self.init.u0, &self.init.v0)
    }
}

/// Relative tolerance for `v0(±h0) = 0`.
const END_VALUE_TOL: f64 = 1e-12;

/// Validates parameters and initial profiles; computes the initial front
/// speeds. Returns every violated constraint, not just the first.
pub fn validate_params(
    params: &ModelParams,
    u0: &PreyProfile,
    v0: &PredatorProfile,
) -> Result<ValidatedModel, ValidationError> {
    let mut errors = Vec::new();
    for (name, value) in params.named_fields() {
        if !(value > 0.0 && value.is_finite()) {
            errors.push(Violation::NonPositiveParameter { name, value });
        }
    }

    match u0 {
        PreyProfile::Constant(u) => {
            if !(*u > 0.0 && u.is_finite()) {
                errors.push(Violation::InitialProfileViolation(format!(
                    "u0 must be positive, got constant {u}"
                )));
            }
        }
        PreyProfile::Table(t) => {
            if let Some((x, u)) = t.points().find(|&(_, u)| u <= 0.0) {
                errors.push(Violation::InitialProfileViolation(format!(
                    "u0 must be positive, got u0({x}) = {u}"
                )));
            }
        }
    }

    let h0 = params.h0;
    match v0 {
        PredatorProfile::Cosine { amplitude } => {
            if !(*amplitude > 0.0 && amplitude.is_finite()) {
                errors.push(Violation::InitialProfileViolation(format!(
                    "v0 amplitude must be positive, got {amplitude}"
                )));
            }
        }
        PredatorProfile::Table(t) => {
            let xs = t.xs();
            let vs = t.values();
            let n = xs.len();
            let xtol = 1e-9 * h0.abs().max(1.0);
            if (xs[0] + h0).abs() > xtol || (xs[n - 1] - h0).abs() > xtol {
                errors.push(Violation::InitialProfileViolation(format!(
                    "v0 table must span [-h0, h0] = [{}, {h0}], got [{}, {}]",
                    -h0,
                    xs[0],
                    xs[n - 1]
                )));
            }
            let scale = t.max_value().abs().max(f64::MIN_POSITIVE);
            for (x, v) in [(xs[0], vs[0]), (xs[n - 1], vs[n - 1])] {
                if v.abs() > END_VALUE_TOL * scale {
                    errors.push(Violation::InitialProfileViolation(format!(
                        "v0 must vanish at the fronts, got v0({x}) = {v}"
                    )));
                }
            }
            if let Some((x, v)) = t.points().skip(1).take(n - 2).find(|&(_, v)| v <= 0.0) {
                errors.push(Violation::InitialProfileViolation(format!(
                    "v0 must be positive inside (-h0, h0), got v0({x}) = {v}"
                )));
            }
            if n < 3 {
                errors.push(Violation::InitialProfileViolation(
                    "v0 table needs an interior point".into(),
                ));
            }
        }
    }

    if !errors.is_empty() {
        return Err(ValidationError(errors));
    }

    let (slope_left, slope_right) = v0.end_slopes(h0);
    let gstar = -params.beta * slope_left;
    let hstar = -params.beta * slope_right;
    if gstar > 0.0 || hstar < 0.0 {
        return Err(ValidationError(vec![Violation::InitialProfileViolation(format!(
            "initial front speeds must satisfy g* <= 0 <= h*, got g* = {gstar}, h* = {hstar}"
        ))]));
    }

    let mut warnings = Vec::new();
    if params.b >= 1.0 {
        warnings.push(Warning::TheoryAssumption);
    }
    Ok(ValidatedModel {
        params: *params,
        init: InitialData {
            u0: u0.clone(),
            v0: v0.clone(),
            gstar,
            hstar,
        },
        warnings,
    })
}

/// Reaction terms `(f_u, f_v)`. The predator's carrying capacity uses
/// `max(u, u_floor)`; callers count how often the floor is active.
#[inline]
pub fn reaction_rates(u: f64, v: f64, params: &ModelParams, u_floor: f64) -> (f64, f64) {
    let predation = match params.kernel {
        ReactionKernel::LeslieGower => params.b * u * v,
        ReactionKernel::HollingTanner { m } => params.b * u * v / (m + u),
    };
    let fu = u * (params.a - u) - predation;
    let fv = params.mu * v * (1.0 - v / u.max(u_floor));
    (fu, fv)
}

#[derive(Clone, Copy, Debug, PartialEq, Error)]
pub enum ConstantsError {
    #[error("no positive coexistence equilibrium for the Holling-Tanner kernel")]
    NoPositiveEquilibrium,
}

/// Analytic quantities derived from a validated model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivedConstants {
    /// `pi sqrt(d / mu)`: a habitat longer than this cannot vanish.
    pub span_crit: f64,
    /// `(pi / 2) sqrt(d / mu)`.
    pub h0_crit: f64,
    /// Principal Dirichlet eigenvalue of `-d phi''` on `(-h0, h0)`.
    pub lambda1: f64,
    /// Prey sup-bound `max(a, max u0)`.
    pub bound_u: f64,
    /// Predator sup-bound `max(A, max v0)`.
    pub bound_v: f64,
    /// Coexistence state `(u, v)` approached under spreading.
    pub coexistence: (f64, f64),
}

pub fn derived_constants(model: &ValidatedModel) -> Result<DerivedConstants, ConstantsError> {
    let p = model.params();
    let h0_crit = 0.5 * PI * (p.d / p.mu).sqrt();
    let bound_u = p.a.max(model.init().u0.max());
    let bound_v = bound_u.max(model.init().v0.max());
    let coexistence = match p.kernel {
        ReactionKernel::LeslieGower => {
            let c = p.a / (1.0 + p.b);
            (c, c)
        }
        ReactionKernel::HollingTanner { m } => {
            // (a - u)(m + u) = b u  <=>  u^2 - (a - m - b) u - a m = 0
            let lin = p.a - m - p.b;
            let disc = lin * lin + 4.0 * p.a * m;
            if !(disc >= 0.0) {
                return Err(ConstantsError::NoPositiveEquilibrium);
            }
            let root = 0.5 * (lin + disc.sqrt());
            if !(root > 0.0 && root.is_finite()) {
                return Err(ConstantsError::NoPositiveEquilibrium);
            }
            (root, root)
        }
    };
    Ok(DerivedConstants {
        span_crit: 2.0 * h0_crit,
        h0_crit,
        lambda1: p.d * PI * PI / (4.0 * p.h0 * p.h0),
        bound_u,
        bound_v,
        coexistence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn base() -> ModelParams {
        ModelParams::leslie_gower(1.0, 0.5, 1.0, 1.0, 1.0, 1.0)
    }

    fn cos_v0() -> PredatorProfile {
        PredatorProfile::Cosine { amplitude: 1.0 }
    }

    #[test]
    fn cosine_profile_front_speeds() {
        let m = validate_params(&base(), &PreyProfile::Constant(1.0), &cos_v0()).unwrap();
        assert_abs_diff_eq!(m.init().gstar, -PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.init().hstar, PI / 2.0, epsilon = 1e-15);
        assert!(m.theory_valid());
    }

    #[test]
    fn table_not_vanishing_at_front_is_rejected() {
        let t = Table::new(vec![(-1.0, 0.0), (0.0, 1.0), (1.0, 0.1)]).unwrap();
        let err = validate_params(&base(), &PreyProfile::Constant(1.0), &PredatorProfile::Table(t))
            .unwrap_err();
        assert!(err
            .0
            .iter()
            .any(|v| matches!(v, Violation::InitialProfileViolation(s) if s.contains("vanish"))));
    }

    #[test]
    fn table_speeds_match_cosine_closely() {
        let n = 2001;
        let pts = (0..n)
            .map(|i| {
                let x = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
                let v = if i == 0 || i == n - 1 { 0.0 } else { (PI * x / 2.0).cos() };
                (x, v)
            })
            .collect();
        let v0 = PredatorProfile::Table(Table::new(pts).unwrap());
        let m = validate_params(&base(), &PreyProfile::Constant(1.0), &v0).unwrap();
        assert_abs_diff_eq!(m.init().hstar, PI / 2.0, epsilon = 1e-5);
        assert_abs_diff_eq!(m.init().gstar, -PI / 2.0, epsilon = 1e-5);
    }

    #[test]
    fn large_b_warns_but_validates() {
        let p = ModelParams { b: 1.5, ..base() };
        let m = validate_params(&p, &PreyProfile::Constant(1.0), &cos_v0()).unwrap();
        assert_eq!(m.warnings(), &[Warning::TheoryAssumption]);
        assert!(!m.theory_valid());
    }

    #[test]
    fn every_violation_is_reported() {
        let p = ModelParams { a: 0.0, d: -1.0, beta: f64::NAN, ..base() };
        let err = validate_params(&p, &PreyProfile::Constant(-1.0), &cos_v0()).unwrap_err();
        assert_eq!(err.0.len(), 4, "{err}");
    }

    #[test]
    fn nonpositive_prey_table_rejected() {
        let t = Table::new(vec![(-10.0, 1.0), (0.0, 0.0), (10.0, 1.0)]).unwrap();
        assert!(validate_params(&base(), &PreyProfile::Table(t), &cos_v0()).is_err());
    }

    #[test]
    fn reaction_equilibria() {
        let p = base();
        let c = 2.0 / 3.0;
        let (fu, fv) = reaction_rates(c, c, &p, 1e-8);
        assert!(fu.abs() <= 1e-12 && fv.abs() <= 1e-12);
        assert_eq!(reaction_rates(1.0, 0.0, &p, 1e-8), (0.0, 0.0));
    }

    #[test]
    fn reaction_floor_engages_below_floor() {
        let p = base();
        let (_, fv) = reaction_rates(1e-12, 1.0, &p, 1e-8);
        assert_eq!(fv, 1.0 - 1e8);
        let (_, fv) = reaction_rates(2e-8, 1.0, &p, 1e-8);
        assert_eq!(fv, 1.0 - 1.0 / 2e-8);
    }

    #[test]
    fn holling_tanner_reaction() {
        let p = ModelParams { kernel: ReactionKernel::HollingTanner { m: 1.0 }, ..base() };
        let (fu, _) = reaction_rates(0.5, 0.4, &p, 1e-8);
        assert_abs_diff_eq!(fu, 0.5 * 0.5 - 0.5 * 0.5 * 0.4 / 1.5, epsilon = 1e-15);
    }

    #[test]
    fn constants_reference_values() {
        let m = validate_params(&base(), &PreyProfile::Constant(1.0), &cos_v0()).unwrap();
        let c = derived_constants(&m).unwrap();
        assert_abs_diff_eq!(c.span_crit, std::f64::consts::PI, epsilon = 1e-8);
        assert_abs_diff_eq!(c.h0_crit, std::f64::consts::FRAC_PI_2, epsilon = 1e-8);
        assert_abs_diff_eq!(c.lambda1, 2.4674011, epsilon = 1e-7);
        assert_abs_diff_eq!(c.coexistence.0, 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(c.bound_u, 1.0);
        assert_eq!(c.bound_v, 1.0);
    }

    #[test]
    fn holling_tanner_coexistence_solves_quadratic() {
        let p = ModelParams { kernel: ReactionKernel::HollingTanner { m: 1.0 }, ..base() };
        let m = validate_params(&p, &PreyProfile::Constant(1.0), &cos_v0()).unwrap();
        let (u, v) = derived_constants(&m).unwrap().coexistence;
        assert_eq!(u, v);
        assert_abs_diff_eq!((1.0 - u) * (1.0 + u), 0.5 * u, epsilon = 1e-14);
        let (fu, fv) = reaction_rates(u, v, &p, 1e-8);
        assert!(fu.abs() < 1e-14 && fv.abs() < 1e-14);
    }

    #[test]
    fn bounds_follow_initial_maxima() {
        let m = validate_params(
            &base(),
            &PreyProfile::Constant(0.5),
            &PredatorProfile::Cosine { amplitude: 3.0 },
        )
        .unwrap();
        let c = derived_constants(&m).unwrap();
        assert_eq!(c.bound_u, 1.0);
        assert_eq!(c.bound_v, 3.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn span_crit_scaling(d in 1e-3f64..1e3, mu in 1e-3f64..1e3) {
                let mk = |d: f64| {
                    let p = ModelParams { d, mu, ..base() };
                    let m = validate_params(&p, &PreyProfile::Constant(1.0), &cos_v0()).unwrap();
                    derived_constants(&m).unwrap()
                };
                let c1 = mk(d);
                let c4 = mk(4.0 * d);
                prop_assert!((c4.span_crit - 2.0 * c1.span_crit).abs() <= 1e-12 * c4.span_crit);
                prop_assert_eq!(c1.span_crit, 2.0 * c1.h0_crit);
                prop_assert_eq!(mk(d), c1);
            }

            #[test]
            fn coexistence_is_a_rest_point(a in 0.1f64..10.0, b in 0.01f64..0.99) {
                let p = ModelParams { a, b, ..base() };
                let m = validate_params(&p, &PreyProfile::Constant(1.0), &cos_v0()).unwrap();
                let (u, v) = derived_constants(&m).unwrap().coexistence;
                let (fu, fv) = reaction_rates(u, v, &p, 1e-8 * a);
                prop_assert!(fu.abs() <= 1e-12 * a.max(1.0) * a.max(1.0));
                prop_assert!(fv.abs() <= 1e-12 * a.max(1.0));
            }
        }
    }
}
