//! Time integration of the coupled prey-predator free-boundary system.
//!
//! The prey `u` lives on a uniform grid over the truncated line `[-L, L]`
//! with homogeneous Neumann ends. The predator is carried in front-fixed
//! coordinates `z(t, y) = v(t, x(y))` on a uniform grid over `[-1, 1]`
//! with `z(±1) = 0`. Each step is IMEX: diffusion backward Euler, advection
//! and reaction forward Euler. Fronts follow the Stefan law with Heun's
//! predictor-corrector. The two grids exchange data through the affine
//! front map and linear interpolation; `v` is extended by zero outside
//! `(g, h)`.

mod refine;
mod simulate;

pub use refine::{refine_check, LevelResult, OrderEstimate, RefineError, RefineReport};
pub use simulate::{
    simulate, simulate_with, Flow, HealthReport, SeriesRecord, SimulationOutput, StopReason,
};

use thiserror::Error;

use crate::model::{
    derived_constants, reaction_rates, ConstantsError, DerivedConstants, ValidatedModel,
};
use crate::transform::{
    coeffs, front_speeds, stencil_speed_tolerance, FrontState, TransformError,
};
use crate::tridiag::Tridiagonal;

/// Relative slack on the a-priori sup-bounds.
pub const BOUND_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SolverError {
    #[error("prey domain half-width {half_width} must exceed h0 + front_margin = {required}")]
    DomainTooSmall { half_width: f64, required: f64 },
    #[error("invalid discretization: {0}")]
    InvalidDiscretization(String),
    #[error("time step {dt} exceeds advective limit {limit}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("front within margin of the truncation at t = {t}: g = {g}, h = {h}")]
    FrontNearTruncation { t: f64, g: f64, h: f64 },
    #[error("{field} = {value} left the admissible range [0, {bound}] at t = {t}")]
    BoundBlowup {
        field: &'static str,
        value: f64,
        bound: f64,
        t: f64,
    },
    #[error("front moved inward by speed {speed} (tolerance {tolerance}) at t = {t}")]
    NonmonotoneFronts { t: f64, speed: f64, tolerance: f64 },
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Constants(#[from] ConstantsError),
}

/// Grid, step and safety settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Discretization {
    /// Half-width `L` of the prey domain `[-L, L]`.
    pub half_width: f64,
    /// Prey grid intervals.
    pub nx: usize,
    /// Predator grid intervals on `[-1, 1]`.
    pub ny: usize,
    /// Largest time step; `simulate` shortens it to respect the advective
    /// CFL limit and to land on record times.
    pub dt: f64,
    pub t_end: f64,
    pub cfl_safety: f64,
    pub u_floor: f64,
    /// Minimum distance between a front and `±L`.
    pub front_margin: f64,
    /// Half-width `W` of the reporting window for `min_u_core`.
    pub core_window: f64,
}

pub const DEFAULT_HALF_WIDTH: f64 = 60.0;
pub const DEFAULT_NY: usize = 400;
pub const DEFAULT_T_END: f64 = 200.0;
pub const DEFAULT_CFL_SAFETY: f64 = 0.5;
pub const DEFAULT_FRONT_MARGIN: f64 = 5.0;
pub const DEFAULT_CORE_WINDOW: f64 = 5.0;
pub const DEFAULT_RECORD_EVERY: f64 = 0.5;
/// Default step as a multiple of the predator grid spacing `2 / ny`.
pub const DEFAULT_DT_PER_DY: f64 = 0.2;

impl Discretization {
    /// Defaults for a model: `L = 60`, `ny = 400`, `nx = ceil(L ny / 2)`,
    /// `dt = 0.2 dy`, `u_floor = 1e-8 a`.
    pub fn defaults(model: &ValidatedModel) -> Self {
        Self::with_resolution(model.params().a, DEFAULT_HALF_WIDTH, DEFAULT_NY)
    }

    pub fn with_resolution(a: f64, half_width: f64, ny: usize) -> Self {
        Discretization {
            half_width,
            nx: default_nx(half_width, ny),
            ny,
            dt: default_dt(ny),
            t_end: DEFAULT_T_END,
            cfl_safety: DEFAULT_CFL_SAFETY,
            u_floor: 1e-8 * a,
            front_margin: DEFAULT_FRONT_MARGIN,
            core_window: DEFAULT_CORE_WINDOW,
        }
    }

    /// Same settings with a new half-width; `nx` keeps the physical spacing.
    pub fn with_half_width(mut self, half_width: f64) -> Self {
        let dx = 2.0 * self.half_width / self.nx as f64;
        self.half_width = half_width;
        self.nx = (2.0 * half_width / dx).round() as usize;
        self
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        2.0 / self.ny as f64
    }

    pub fn validate(&self, h0: f64) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::InvalidDiscretization(m));
        if self.nx < 8 || self.ny < 8 {
            return bad(format!("nx = {} and ny = {} must both be >= 8", self.nx, self.ny));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end = {} must be non-negative", self.t_end));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad(format!("cfl_safety = {} must lie in (0, 1]", self.cfl_safety));
        }
        if !(self.u_floor > 0.0) {
            return bad(format!("u_floor = {} must be positive", self.u_floor));
        }
        if !(self.front_margin >= 0.0 && self.core_window >= 0.0) {
            return bad("front_margin and core_window must be non-negative".into());
        }
        if self.core_window > self.half_width {
            return bad(format!(
                "core_window = {} exceeds the domain half-width {}",
                self.core_window, self.half_width
            ));
        }
        let required = h0 + self.front_margin;
        if !(self.half_width > required) {
            return Err(SolverError::DomainTooSmall {
                half_width: self.half_width,
                required,
            });
        }
        Ok(())
    }
}

pub fn default_nx(half_width: f64, ny: usize) -> usize {
    (half_width * ny as f64 / 2.0).ceil() as usize
}

pub fn default_dt(ny: usize) -> f64 {
    DEFAULT_DT_PER_DY * 2.0 / ny as f64
}

/// Full solver state at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub t: f64,
    /// Prey at the `nx + 1` physical nodes `-L + i dx`.
    pub u: Vec<f64>,
    /// Predator at the `ny + 1` computational nodes `-1 + j dy`.
    pub z: Vec<f64>,
    pub front: FrontState,
    pub floor_hits: u64,
    pub step_count: u64,
    /// Accumulated `∫∫ f_v dx dt - (d / beta) (Δh - Δg)`: the predator mass
    /// change implied by reaction and boundary flux.
    pub mass_budget: f64,
}

/// Per-step diagnostics.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepReport {
    /// Largest wrong-signed front speed that was within tolerance (0 if none).
    pub tolerated_inward_speed: f64,
    pub max_u: f64,
    pub max_z: f64,
    pub new_floor_hits: u64,
}

/// Stateful integrator with cached factorizations and scratch buffers.
#[derive(Clone, Debug)]
pub struct Solver {
    model: ValidatedModel,
    constants: DerivedConstants,
    disc: Discretization,
    dx: f64,
    dy: f64,
    eps_stencil: f64,
    prey_factor: Option<(f64, Tridiagonal)>,
    w: Vec<f64>,
    react: Vec<f64>,
    rhs: Vec<f64>,
    z_pred: Vec<f64>,
    z_new: Vec<f64>,
    u_new: Vec<f64>,
    cprime: Vec<f64>,
}

impl Solver {
    pub fn new(model: &ValidatedModel, disc: &Discretization) -> Result<Self, SolverError> {
        disc.validate(model.params().h0)?;
        let constants = derived_constants(model)?;
        let dy = disc.dy();
        let eps_stencil = stencil_speed_tolerance(
            model.params().beta,
            2.0 * model.params().h0,
            dy,
            constants.bound_v,
        );
        let ny = disc.ny;
        let nx = disc.nx;
        Ok(Solver {
            model: model.clone(),
            constants,
            disc: *disc,
            dx: disc.dx(),
            dy,
            eps_stencil,
            prey_factor: None,
            w: vec![0.0; ny + 1],
            react: vec![0.0; ny + 1],
            rhs: vec![0.0; ny + 1],
            z_pred: vec![0.0; ny + 1],
            z_new: vec![0.0; ny + 1],
            u_new: vec![0.0; nx + 1],
            cprime: vec![0.0; ny + 1],
        })
    }

    pub fn model(&self) -> &ValidatedModel {
        &self.model
    }

    pub fn constants(&self) -> &DerivedConstants {
        &self.constants
    }

    pub fn disc(&self) -> &Discretization {
        &self.disc
    }

    /// Run-wide front-speed tolerance for the boundary stencil.
    pub fn eps_stencil(&self) -> f64 {
        self.eps_stencil
    }

    pub fn x_node(&self, i: usize) -> f64 {
        -self.disc.half_width + i as f64 * self.dx
    }

    pub fn y_node(&self, j: usize) -> f64 {
        -1.0 + j as f64 * self.dy
    }

    pub fn init_state(&self) -> SimState {
        let p = self.model.params();
        let init = self.model.init();
        let u = (0..=self.disc.nx)
            .map(|i| init.u0.eval(self.x_node(i)))
            .collect();
        let mut z: Vec<f64> = (0..=self.disc.ny)
            .map(|j| init.v0.eval(p.h0 * self.y_node(j), p.h0))
            .collect();
        z[0] = 0.0;
        z[self.disc.ny] = 0.0;
        SimState {
            t: 0.0,
            u,
            z,
            front: FrontState::new(-p.h0, p.h0, init.gstar, init.hstar),
            floor_hits: 0,
            step_count: 0,
            mass_budget: 0.0,
        }
    }

    /// Largest step allowed by the explicit advection term.
    pub fn cfl_limit(&self, state: &SimState) -> Result<f64, SolverError> {
        let zmax = coeffs(&state.front)?.zeta_max();
        Ok(if zmax > 0.0 {
            self.disc.cfl_safety * self.dy / zmax
        } else {
            f64::INFINITY
        })
    }

    /// Prey value at physical `x` by linear interpolation.
    #[inline]
    pub fn prey_at(&self, u: &[f64], x: f64) -> f64 {
        let s = (x + self.disc.half_width) / self.dx;
        let i = (s.floor().max(0.0) as usize).min(self.disc.nx - 1);
        let frac = (s - i as f64).clamp(0.0, 1.0);
        u[i] * (1.0 - frac) + u[i + 1] * frac
    }

    /// Predator value at physical `x`: interpolated inside `(g, h)`, zero outside.
    #[inline]
    pub fn predator_at(&self, z: &[f64], front: &FrontState, x: f64) -> f64 {
        if x <= front.g || x >= front.h {
            return 0.0;
        }
        let y = (2.0 * x - front.g - front.h) / (front.h - front.g);
        let s = (y + 1.0) / self.dy;
        let j = (s.floor().max(0.0) as usize).min(self.disc.ny - 1);
        let frac = (s - j as f64).clamp(0.0, 1.0);
        z[j] * (1.0 - frac) + z[j + 1] * frac
    }

    /// Range of prey node indices strictly inside `(g, h)`.
    pub fn nodes_inside(&self, front: &FrontState) -> std::ops::Range<usize> {
        let l = self.disc.half_width;
        let mut lo = ((front.g + l) / self.dx).ceil().max(0.0) as usize;
        while lo <= self.disc.nx && self.x_node(lo) <= front.g {
            lo += 1;
        }
        let mut hi = (((front.h + l) / self.dx).floor().max(0.0) as usize).min(self.disc.nx);
        while hi > 0 && self.x_node(hi) >= front.h {
            hi -= 1;
        }
        if lo > hi || self.x_node(hi) >= front.h {
            return lo..lo;
        }
        lo..hi + 1
    }

    /// Solves `(I - r D2) z_int = rhs_int` on interior nodes with zero
    /// Dirichlet ends; writes into `out` with `out[0] = out[ny] = 0`.
    fn predator_diffusion_solve(cprime: &mut [f64], rhs: &[f64], r: f64, out: &mut [f64]) {
        let ny = out.len() - 1;
        let n = ny - 1;
        let diag = 1.0 + 2.0 * r;
        let off = -r;
        out[0] = 0.0;
        out[ny] = 0.0;
        // forward sweep over interior indices 1..=n
        let mut prev_c = 0.0;
        let mut prev_d = 0.0;
        for k in 0..n {
            let denom = diag - off * prev_c;
            let c = if k + 1 == n { 0.0 } else { off / denom };
            let dk = (rhs[k + 1] - off * prev_d) / denom;
            cprime[k] = c;
            out[k + 1] = dk;
            prev_c = c;
            prev_d = dk;
        }
        for k in (0..n - 1).rev() {
            out[k + 1] -= cprime[k] * out[k + 2];
        }
    }

    /// Explicit right-hand side `z + dt (zeta z_y + react)` on interior nodes.
    fn predator_rhs(&mut self, z: &[f64], dt: f64, zeta0: f64, zeta1: f64) {
        let ny = self.disc.ny;
        let inv2dy = 0.5 / self.dy;
        self.rhs[0] = 0.0;
        self.rhs[ny] = 0.0;
        for j in 1..ny {
            let y = -1.0 + j as f64 * self.dy;
            let zeta = zeta0 + zeta1 * y;
            let adv = zeta * (z[j + 1] - z[j - 1]) * inv2dy;
            self.rhs[j] = z[j] + dt * (adv + self.react[j]);
        }
    }

    fn prey_factor(&mut self, dt: f64) -> &Tridiagonal {
        let stale = !matches!(&self.prey_factor, Some((cached, _)) if *cached == dt);
        if stale {
            let n = self.disc.nx + 1;
            let r = dt / (self.dx * self.dx);
            let mut lower = vec![-r; n];
            let diag = vec![1.0 + 2.0 * r; n];
            let mut upper = vec![-r; n];
            // mirrored ghost nodes give homogeneous Neumann ends
            upper[0] = -2.0 * r;
            lower[n - 1] = -2.0 * r;
            self.prey_factor = Some((dt, Tridiagonal::factor(&lower, &diag, &upper)));
        }
        &self.prey_factor.as_ref().expect("factor cached above").1
    }

    /// Advances `state` by `dt`. On error the state is left unchanged.
    pub fn advance(&mut self, state: &mut SimState, dt: f64) -> Result<StepReport, SolverError> {
        let p = *self.model.params();
        let ny = self.disc.ny;
        let front0 = state.front;
        let c0 = coeffs(&front0)?;
        let limit = self.cfl_limit(state)?;
        if dt > limit {
            return Err(SolverError::CflViolation { dt, limit });
        }
        let span0 = front0.span();

        // prey seen by the predator and the explicit predator reaction
        let mut new_hits = 0u64;
        self.w[0] = 0.0;
        self.w[ny] = 0.0;
        self.react[0] = 0.0;
        self.react[ny] = 0.0;
        for j in 1..ny {
            let x = 0.5 * (span0 * self.y_node(j) + front0.h + front0.g);
            let w = self.prey_at(&state.u, x);
            if w < self.disc.u_floor {
                new_hits += 1;
            }
            self.w[j] = w;
            self.react[j] = reaction_rates(w, state.z[j], &p, self.disc.u_floor).1;
        }

        // predictor
        let (s0g, s0h) = (front0.gdot, front0.hdot);
        let front_pred = FrontState::new(front0.g + dt * s0g, front0.h + dt * s0h, s0g, s0h);
        let span_pred = front_pred.span();
        if !(span_pred > 0.0) {
            return Err(TransformError::DegenerateInterval { g: front_pred.g, h: front_pred.h }.into());
        }
        self.predator_rhs(&state.z, dt, c0.zeta0, c0.zeta1);
        let r_pred = dt * p.d * (4.0 / (span_pred * span_pred)) / (self.dy * self.dy);
        Self::predator_diffusion_solve(&mut self.cprime, &self.rhs, r_pred, &mut self.z_pred);
        let (s1g, s1h) = front_speeds(&self.z_pred, self.dy, &front_pred, p.beta)?;

        // corrector
        let gdot = 0.5 * (s0g + s1g);
        let hdot = 0.5 * (s0h + s1h);
        let g_new = front0.g + dt * gdot;
        let h_new = front0.h + dt * hdot;
        let span_new = h_new - g_new;
        if !(span_new > 0.0) {
            return Err(TransformError::DegenerateInterval { g: g_new, h: h_new }.into());
        }
        self.predator_rhs(&state.z, dt, (hdot + gdot) / span0, (hdot - gdot) / span0);
        let r_new = dt * p.d * (4.0 / (span_new * span_new)) / (self.dy * self.dy);
        Self::predator_diffusion_solve(&mut self.cprime, &self.rhs, r_new, &mut self.z_new);
        let mut front_new = FrontState::new(g_new, h_new, 0.0, 0.0);
        let (sg, sh) = front_speeds(&self.z_new, self.dy, &front_new, p.beta)?;
        front_new.gdot = sg;
        front_new.hdot = sh;

        let t_new = state.t + dt;

        // fronts must not retreat beyond the stencil tolerance
        let inward = gdot.max(-hdot);
        let mut tolerated = 0.0;
        if inward > 0.0 {
            if inward > self.eps_stencil {
                return Err(SolverError::NonmonotoneFronts {
                    t: t_new,
                    speed: inward,
                    tolerance: self.eps_stencil,
                });
            }
            tolerated = inward;
        }

        let l = self.disc.half_width;
        let margin = self.disc.front_margin;
        if g_new < -l + margin || h_new > l - margin {
            return Err(SolverError::FrontNearTruncation { t: t_new, g: g_new, h: h_new });
        }

        // prey: explicit reaction with the old predator, implicit diffusion
        let nx = self.disc.nx;
        let inside = self.nodes_inside(&front0);
        {
            let mut u_new = std::mem::take(&mut self.u_new);
            let a = p.a;
            // logistic growth where v = 0
            for i in (0..inside.start).chain(inside.end..=nx) {
                let u = state.u[i];
                u_new[i] = u + dt * u * (a - u);
            }
            let inv_span = 1.0 / span0;
            let inv_dy = 1.0 / self.dy;
            let shift = front0.g + front0.h;
            for i in inside {
                let u = state.u[i];
                let x = self.x_node(i);
                let y = (2.0 * x - shift) * inv_span;
                let s = (y + 1.0) * inv_dy;
                let j = (s as usize).min(ny - 1);
                let frac = s - j as f64;
                let v = state.z[j] + (state.z[j + 1] - state.z[j]) * frac;
                u_new[i] = u + dt * reaction_rates(u, v, &p, self.disc.u_floor).0;
            }
            self.prey_factor(dt).solve_in_place(&mut u_new);
            self.u_new = u_new;
        }

        let bound_u = self.constants.bound_u;
        let bound_v = self.constants.bound_v;
        let (min_u, max_u) = min_max(&self.u_new);
        let (min_z, max_z) = min_max(&self.z_new);
        check_range("u", min_u, max_u, bound_u, t_new)?;
        check_range("v", min_z, max_z, bound_v, t_new)?;

        // predator mass budget: reaction integral plus boundary flux
        let react_int = 0.5 * span0 * trapezoid(&self.react, self.dy);
        let flux = -(p.d / p.beta) * (hdot - gdot);

        state.t = t_new;
        std::mem::swap(&mut state.u, &mut self.u_new);
        std::mem::swap(&mut state.z, &mut self.z_new);
        state.front = front_new;
        state.floor_hits += new_hits;
        state.step_count += 1;
        state.mass_budget += dt * (react_int + flux);
        Ok(StepReport {
            tolerated_inward_speed: tolerated,
            max_u,
            max_z,
            new_floor_hits: new_hits,
        })
    }

    /// Minimum of `u` over the nodes in `[-W, W]`.
    pub fn min_u_core(&self, u: &[f64]) -> f64 {
        let w = self.disc.core_window;
        (0..=self.disc.nx)
            .filter(|&i| self.x_node(i).abs() <= w)
            .map(|i| u[i])
            .fold(f64::INFINITY, f64::min)
    }

    /// Predator mass `∫ v dx` of a state.
    pub fn predator_mass(&self, state: &SimState) -> f64 {
        0.5 * state.front.span() * trapezoid(&state.z, self.dy)
    }
}

fn trapezoid(f: &[f64], h: f64) -> f64 {
    let n = f.len();
    let inner: f64 = f[1..n - 1].iter().sum();
    h * (inner + 0.5 * (f[0] + f[n - 1]))
}

fn min_max(v: &[f64]) -> (f64, f64) {
    let mut lo = [f64::INFINITY; 4];
    let mut hi = [f64::NEG_INFINITY; 4];
    let mut chunks = v.chunks_exact(4);
    for c in &mut chunks {
        for k in 0..4 {
            lo[k] = if c[k] < lo[k] { c[k] } else { lo[k] };
            hi[k] = if c[k] > hi[k] { c[k] } else { hi[k] };
        }
    }
    for &x in chunks.remainder() {
        lo[0] = if x < lo[0] { x } else { lo[0] };
        hi[0] = if x > hi[0] { x } else { hi[0] };
    }
    // NaN never wins a comparison; surface it explicitly
    if v.iter().any(|x| x.is_nan()) {
        return (f64::NAN, f64::NAN);
    }
    (
        lo.iter().copied().fold(f64::INFINITY, f64::min),
        hi.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    )
}

fn check_range(field: &'static str, min: f64, max: f64, bound: f64, t: f64) -> Result<(), SolverError> {
    let upper = bound * (1.0 + BOUND_TOL);
    let lower = -1e-12 * bound;
    if !(max <= upper) || !max.is_finite() {
        return Err(SolverError::BoundBlowup { field, value: max, bound, t });
    }
    if !(min >= lower) {
        return Err(SolverError::BoundBlowup { field, value: min, bound, t });
    }
    Ok(())
}

pub fn init_state(model: &ValidatedModel, disc: &Discretization) -> Result<SimState, SolverError> {
    Ok(Solver::new(model, disc)?.init_state())
}

/// One step of size `disc.dt`.
pub fn step(
    state: &SimState,
    model: &ValidatedModel,
    disc: &Discretization,
) -> Result<SimState, SolverError> {
    let mut solver = Solver::new(model, disc)?;
    let mut next = state.clone();
    solver.advance(&mut next, disc.dt)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_params, ModelParams, PredatorProfile, PreyProfile};
    use std::f64::consts::PI;

    fn model(h0: f64, beta: f64) -> ValidatedModel {
        validate_params(
            &ModelParams::leslie_gower(1.0, 0.5, 1.0, 1.0, beta, h0),
            &PreyProfile::Constant(1.0),
            &PredatorProfile::Cosine { amplitude: 1.0 },
        )
        .unwrap()
    }

    fn small_disc(m: &ValidatedModel) -> Discretization {
        let mut d = Discretization::with_resolution(m.params().a, 10.0, 100);
        d.t_end = 1.0;
        d
    }

    #[test]
    fn init_samples_cosine() {
        let m = model(1.0, 1.0);
        let d = small_disc(&m);
        let s = init_state(&m, &d).unwrap();
        assert_eq!(s.z[0], 0.0);
        assert_eq!(s.z[d.ny], 0.0);
        for (j, z) in s.z.iter().enumerate().skip(1).take(d.ny - 1) {
            let y = -1.0 + j as f64 * d.dy();
            assert!((z - (PI * y / 2.0).cos()).abs() < 1e-14);
        }
        assert!(s.u.iter().all(|&u| u == 1.0));
        assert_eq!((s.front.g, s.front.h), (-1.0, 1.0));
        assert!((s.front.hdot - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn domain_too_small() {
        let m = model(1.0, 1.0);
        let mut d = small_disc(&m);
        d.half_width = 1.05;
        d.front_margin = 0.5;
        d.core_window = 1.0;
        assert!(matches!(init_state(&m, &d), Err(SolverError::DomainTooSmall { .. })));
    }

    #[test]
    fn tiny_grids_rejected() {
        let m = model(1.0, 1.0);
        let mut d = small_disc(&m);
        d.ny = 4;
        assert!(matches!(Solver::new(&m, &d), Err(SolverError::InvalidDiscretization(_))));
    }

    #[test]
    fn prey_only_equilibrium_is_fixed() {
        let m = model(1.0, 1.0);
        let d = small_disc(&m);
        let mut s = init_state(&m, &d).unwrap();
        s.z.iter_mut().for_each(|z| *z = 0.0);
        s.front.gdot = 0.0;
        s.front.hdot = 0.0;
        let next = step(&s, &m, &d).unwrap();
        assert!((next.t - d.dt).abs() < 1e-18);
        assert!(next.u.iter().all(|&u| (u - 1.0).abs() <= 1e-12));
        assert!(next.z.iter().all(|&z| z == 0.0));
        assert_eq!((next.front.g, next.front.h), (-1.0, 1.0));
        assert_eq!((next.front.gdot, next.front.hdot), (0.0, 0.0));
    }

    #[test]
    fn coexistence_interior_is_fixed() {
        // u = v = 2/3 on [g, h]; only boundary layers near y = ±1 move
        let m = model(2.0, 1e-3);
        let d = Discretization::with_resolution(1.0, 20.0, 400);
        let mut solver = Solver::new(&m, &d).unwrap();
        let mut s = solver.init_state();
        let c = 2.0 / 3.0;
        s.u.iter_mut().for_each(|u| *u = c);
        for z in s.z.iter_mut().skip(1).take(d.ny - 1) {
            *z = c;
        }
        let (gd, hd) = front_speeds(&s.z, d.dy(), &s.front, 1e-3).unwrap();
        s.front.gdot = gd;
        s.front.hdot = hd;
        let before = s.clone();
        let dt = d.dt.min(solver.cfl_limit(&s).unwrap());
        solver.advance(&mut s, dt).unwrap();
        let mut worst_z: f64 = 0.0;
        for j in 0..=d.ny {
            if solver.y_node(j).abs() <= 0.5 {
                worst_z = worst_z.max((s.z[j] - before.z[j]).abs());
            }
        }
        let mut worst_u: f64 = 0.0;
        for i in 0..=d.nx {
            if solver.x_node(i).abs() <= 1.0 {
                worst_u = worst_u.max((s.u[i] - before.u[i]).abs());
            }
        }
        assert!(worst_z <= 1e-10, "{worst_z}");
        assert!(worst_u <= 1e-10, "{worst_u}");
    }

    #[test]
    fn cfl_violation_detected() {
        let m = model(1.0, 1.0);
        let d = small_disc(&m);
        let mut solver = Solver::new(&m, &d).unwrap();
        let mut s = solver.init_state();
        let limit = solver.cfl_limit(&s).unwrap();
        let before = s.clone();
        let err = solver.advance(&mut s, 2.0 * limit).unwrap_err();
        assert!(matches!(err, SolverError::CflViolation { .. }));
        assert_eq!(s, before);
    }

    #[test]
    fn front_near_truncation_leaves_state() {
        let m = model(1.0, 1.0);
        let mut d = small_disc(&m);
        d.half_width = 6.01;
        d.nx = 600;
        let mut solver = Solver::new(&m, &d).unwrap();
        let mut s = solver.init_state();
        // one step from the edge of the admissible region
        s.front.h = 1.0099;
        let dt = solver.cfl_limit(&s).unwrap().min(1e-3);
        assert!(s.front.hdot * dt > 1e-4);
        let before = s.clone();
        let err = solver.advance(&mut s, dt).unwrap_err();
        assert!(matches!(err, SolverError::FrontNearTruncation { .. }));
        assert_eq!(s, before);
    }

    #[test]
    fn nodes_inside_matches_scan() {
        let m = model(1.0, 1.0);
        let d = small_disc(&m);
        let solver = Solver::new(&m, &d).unwrap();
        for (g, h) in [(-1.0, 1.0), (-1.03, 2.57), (-0.2, 0.2), (-9.9, 9.9)] {
            let f = FrontState::new(g, h, 0.0, 0.0);
            let r = solver.nodes_inside(&f);
            let scan: Vec<usize> = (0..=d.nx)
                .filter(|&i| solver.x_node(i) > g && solver.x_node(i) < h)
                .collect();
            assert_eq!(r.collect::<Vec<_>>(), scan);
        }
    }

    #[test]
    fn predator_solve_matches_general_thomas() {
        let ny = 20;
        let rhs: Vec<f64> = (0..=ny).map(|j| if j == 0 || j == ny { 0.0 } else { (j as f64).sin().abs() }).collect();
        let r = 3.7;
        let mut out = vec![0.0; ny + 1];
        let mut cp = vec![0.0; ny + 1];
        Solver::predator_diffusion_solve(&mut cp, &rhs, r, &mut out);
        let n = ny - 1;
        let mut expect = rhs[1..ny].to_vec();
        crate::tridiag::solve(&vec![-r; n], &vec![1.0 + 2.0 * r; n], &vec![-r; n], &mut expect);
        for k in 0..n {
            assert!((out[k + 1] - expect[k]).abs() < 1e-14);
        }
        assert_eq!((out[0], out[ny]), (0.0, 0.0));
    }
}
