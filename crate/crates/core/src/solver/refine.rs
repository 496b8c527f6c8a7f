use thiserror::Error;

use super::{simulate, Discretization, SolverError, StopReason};
use crate::model::ValidatedModel;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum RefineError {
    #[error("refinement needs at least 3 levels, got {0}")]
    TooFewLevels(usize),
    #[error("refinement factor must be a positive integer, got {0}")]
    BadFactor(usize),
    #[error("level {level} stopped at t = {t} before the comparison time {t_end}")]
    StoppedEarly { level: usize, t: f64, t_end: f64 },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Front positions at the comparison time for one refinement level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelResult {
    pub dt: f64,
    pub nx: usize,
    pub ny: usize,
    pub g: f64,
    pub h: f64,
    pub span: f64,
}

/// Observed orders from three consecutive levels; `None` when the
/// differences vanish and the order is undefined.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderEstimate {
    pub g: Option<f64>,
    pub h: Option<f64>,
    pub span: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefineReport {
    pub t_compare: f64,
    pub levels: Vec<LevelResult>,
    pub orders: Vec<OrderEstimate>,
    /// Set when any order is undefined.
    pub undefined: bool,
}

fn observed_order(coarse: f64, mid: f64, fine: f64, factor: f64) -> Option<f64> {
    let e1 = (coarse - mid).abs();
    let e2 = (mid - fine).abs();
    if e1 == 0.0 || e2 == 0.0 || factor == 1.0 {
        return None;
    }
    Some((e1 / e2).ln() / factor.ln())
}

/// Runs `levels` simulations to `disc.t_end`, each refining the previous
/// one by `factor` in time and in both grids, and reports the
/// Richardson-style observed order of the front positions.
pub fn refine_check(
    model: &ValidatedModel,
    disc: &Discretization,
    levels: usize,
    factor: usize,
) -> Result<RefineReport, RefineError> {
    if levels < 3 {
        return Err(RefineError::TooFewLevels(levels));
    }
    if factor == 0 {
        return Err(RefineError::BadFactor(factor));
    }
    let t_end = disc.t_end;
    let record_every = if t_end > 0.0 { t_end } else { 1.0 };
    let mut results = Vec::with_capacity(levels);
    for level in 0..levels {
        let k = factor.pow(level as u32);
        let d = Discretization {
            dt: disc.dt / k as f64,
            nx: disc.nx * k,
            ny: disc.ny * k,
            ..*disc
        };
        let out = simulate(model, &d, record_every)?;
        if let StopReason::FrontNearTruncation { .. } = out.health.stop {
            return Err(RefineError::StoppedEarly {
                level,
                t: out.final_state.t,
                t_end,
            });
        }
        let f = out.final_state.front;
        results.push(LevelResult {
            dt: d.dt,
            nx: d.nx,
            ny: d.ny,
            g: f.g,
            h: f.h,
            span: f.span(),
        });
    }
    let r = factor as f64;
    let orders: Vec<OrderEstimate> = results
        .windows(3)
        .map(|w| OrderEstimate {
            g: observed_order(w[0].g, w[1].g, w[2].g, r),
            h: observed_order(w[0].h, w[1].h, w[2].h, r),
            span: observed_order(w[0].span, w[1].span, w[2].span, r),
        })
        .collect();
    let undefined = orders
        .iter()
        .any(|o| o.g.is_none() || o.h.is_none() || o.span.is_none());
    Ok(RefineReport {
        t_compare: t_end,
        levels: results,
        orders,
        undefined,
    })
}
