use super::{Discretization, SimState, Solver, SolverError};
use crate::model::ValidatedModel;

/// One row of the simulation time series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesRecord {
    pub t: f64,
    pub g: f64,
    pub h: f64,
    pub gdot: f64,
    pub hdot: f64,
    pub span: f64,
    pub max_v: f64,
    /// Minimum of `u` over the reporting window `[-W, W]`.
    pub min_u_core: f64,
    pub max_u: f64,
    pub floor_hits: u64,
}

impl SeriesRecord {
    pub fn from_state(solver: &Solver, state: &SimState) -> Self {
        let max_v = state.z.iter().copied().fold(0.0, f64::max);
        let max_u = state.u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        SeriesRecord {
            t: state.t,
            g: state.front.g,
            h: state.front.h,
            gdot: state.front.gdot,
            hdot: state.front.hdot,
            span: state.front.span(),
            max_v,
            min_u_core: solver.min_u_core(&state.u),
            max_u,
            floor_hits: state.floor_hits,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StopReason {
    Completed,
    /// A front came within `front_margin` of `±L`; the last admissible
    /// state is reported.
    FrontNearTruncation { t: f64, g: f64, h: f64 },
    /// The observer asked to stop.
    Observer,
}

/// Run-level health metrics.
#[derive(Clone, Debug, PartialEq)]
pub struct HealthReport {
    pub stop: StopReason,
    pub steps: u64,
    /// Steps shortened by the advective CFL limit.
    pub cfl_limited_steps: u64,
    pub floor_hits: u64,
    /// `max u / A` over all steps.
    pub max_u_ratio: f64,
    /// `max v / B` over all steps.
    pub max_v_ratio: f64,
    /// Infimum over records of `min_u_core`.
    pub min_u_core: f64,
    /// Front-speed tolerance for wrong-signed motion.
    pub eps_stencil: f64,
    pub tolerated_inward_steps: u64,
    pub max_tolerated_inward_speed: f64,
    /// Largest `|mass(t) - mass(0) - budget(t)|` over records, relative to
    /// the largest mass seen. Soft check; reported only.
    pub stefan_residual: f64,
}

/// Observer verdict after each record.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

#[derive(Clone, Debug)]
pub struct SimulationOutput {
    pub series: Vec<SeriesRecord>,
    pub final_state: SimState,
    pub health: HealthReport,
}

/// Integrates to `disc.t_end`, recording every `record_every` time units
/// plus the final state.
pub fn simulate(
    model: &ValidatedModel,
    disc: &Discretization,
    record_every: f64,
) -> Result<SimulationOutput, SolverError> {
    simulate_with(model, disc, record_every, |_, _, _| Flow::Continue)
}

/// As [`simulate`], calling `observer` with every recorded state.
/// Returning [`Flow::Stop`] ends the run after that record.
pub fn simulate_with<F>(
    model: &ValidatedModel,
    disc: &Discretization,
    record_every: f64,
    mut observer: F,
) -> Result<SimulationOutput, SolverError>
where
    F: FnMut(&Solver, &SimState, &SeriesRecord) -> Flow,
{
    if !(record_every > 0.0 && record_every.is_finite()) {
        return Err(SolverError::InvalidDiscretization(format!(
            "record_every = {record_every} must be positive"
        )));
    }
    let mut solver = Solver::new(model, disc)?;
    let mut state = solver.init_state();
    let bound_u = solver.constants().bound_u;
    let bound_v = solver.constants().bound_v;

    let mass0 = solver.predator_mass(&state);
    let mut mass_scale = mass0;
    let mut stefan_residual: f64 = 0.0;

    let first = SeriesRecord::from_state(&solver, &state);
    let mut health = HealthReport {
        stop: StopReason::Completed,
        steps: 0,
        cfl_limited_steps: 0,
        floor_hits: 0,
        max_u_ratio: first.max_u / bound_u,
        max_v_ratio: first.max_v / bound_v,
        min_u_core: first.min_u_core,
        eps_stencil: solver.eps_stencil(),
        tolerated_inward_steps: 0,
        max_tolerated_inward_speed: 0.0,
        stefan_residual: 0.0,
    };
    let mut series = vec![first];
    let mut stopped = observer(&solver, &state, &first) == Flow::Stop;
    if stopped {
        health.stop = StopReason::Observer;
    }

    let t_end = disc.t_end;
    let mut next_k: u64 = 1;
    while !stopped && state.t < t_end {
        let next_record = (next_k as f64 * record_every).min(t_end);
        let gap = next_record - state.t;
        let cfl = solver.cfl_limit(&state)?;
        let mut dt = disc.dt;
        if cfl < dt {
            dt = cfl;
            health.cfl_limited_steps += 1;
        }
        let lands = gap <= dt * (1.0 + 1e-9) && gap <= cfl;
        if lands {
            dt = gap;
        } else if gap < 2.0 * dt {
            // split the remainder to avoid a sliver step
            dt = 0.5 * gap;
        }
        match solver.advance(&mut state, dt) {
            Ok(report) => {
                health.steps += 1;
                health.max_u_ratio = health.max_u_ratio.max(report.max_u / bound_u);
                health.max_v_ratio = health.max_v_ratio.max(report.max_z / bound_v);
                if report.tolerated_inward_speed > 0.0 {
                    health.tolerated_inward_steps += 1;
                    health.max_tolerated_inward_speed =
                        health.max_tolerated_inward_speed.max(report.tolerated_inward_speed);
                }
            }
            Err(SolverError::FrontNearTruncation { t, g, h }) => {
                health.stop = StopReason::FrontNearTruncation { t, g, h };
                break;
            }
            Err(e) => return Err(e),
        }
        if lands {
            state.t = next_record;
            if next_record == next_k as f64 * record_every {
                next_k += 1;
            }
            let rec = SeriesRecord::from_state(&solver, &state);
            let mass = solver.predator_mass(&state);
            mass_scale = mass_scale.max(mass);
            stefan_residual = stefan_residual.max((mass - mass0 - state.mass_budget).abs());
            health.min_u_core = health.min_u_core.min(rec.min_u_core);
            series.push(rec);
            if observer(&solver, &state, &rec) == Flow::Stop {
                health.stop = StopReason::Observer;
                stopped = true;
            }
        }
    }

    let last_t = series.last().map(|r| r.t).unwrap_or(f64::NAN);
    if state.t > last_t {
        let rec = SeriesRecord::from_state(&solver, &state);
        health.min_u_core = health.min_u_core.min(rec.min_u_core);
        let mass = solver.predator_mass(&state);
        mass_scale = mass_scale.max(mass);
        stefan_residual = stefan_residual.max((mass - mass0 - state.mass_budget).abs());
        series.push(rec);
    }
    health.floor_hits = state.floor_hits;
    health.stefan_residual = if mass_scale > 0.0 {
        stefan_residual / mass_scale
    } else {
        0.0
    };
    Ok(SimulationOutput {
        series,
        final_state: state,
        health,
    })
}
