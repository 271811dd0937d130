//! The two solution-space norms, with streaming accumulators so that an
//! iterate never has to be stored twice.

use crate::error::{Error, Result};
use crate::exponents::ExponentField;
use crate::grid::{GridSpec, ScalarField};
use crate::mild_solver::spacetime::{lq_norm, update_sup, SpaceTimeField};
use crate::operators::TimeGrid;
use crate::varlp::{luxemburg_norm_weighted, mixed_norm, NormValue, Weights};

/// `max(|sup_t |u||_{L^p(.)}, |sup_t |u||_{L^frak_p})` with `p` spatial.
pub fn norm_e_thm1(u: &SpaceTimeField, p: &ExponentField, frak_p: f64, tol: f64) -> Result<NormValue> {
    mixed_norm(&u.sup_trace(), p, frak_p, tol)
}

/// Luxemburg norm in time, exponent `p(t)` sampled on the time nodes, of
/// `t -> |u(t)|_{L^q}`. Time integrals use trapezoid weights.
pub fn norm_e_thm2(u: &SpaceTimeField, p: &ExponentField, q: f64, tol: f64) -> Result<NormValue> {
    check_time_exponent(p, u.time_grid())?;
    check_q(q)?;
    let trace = u.lq_trace(q);
    time_luxemburg(&trace, p, u.time_grid(), tol)
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("space exponent q must lie in ]1, inf[, got {q}")));
    }
    Ok(())
}

pub(crate) fn check_time_exponent(p: &ExponentField, tg: &TimeGrid) -> Result<()> {
    if p.grid().dimension() != 1 || p.samples().len() != tg.node_count() {
        return Err(Error::GridMismatch(format!(
            "time exponent has {} samples, time grid has {} nodes",
            p.samples().len(),
            tg.node_count()
        )));
    }
    Ok(())
}

fn time_luxemburg(trace: &[f64], p: &ExponentField, tg: &TimeGrid, tol: f64) -> Result<NormValue> {
    let w = tg.trapezoid_weights();
    luxemburg_norm_weighted(trace, p.samples(), Weights::PerPoint(&w), tol)
}

/// Which solution-space norm to use.
#[derive(Debug, Clone)]
pub enum ENorm {
    /// Spatial exponent on the solver grid and the mixed index.
    Thm1 { p: ExponentField, frak_p: f64 },
    /// Time exponent on the node grid of the time grid, space exponent `q`.
    Thm2 { p: ExponentField, q: f64 },
}

impl ENorm {
    /// Norm of `u`. If `tol` is below the float spacing at the norm's
    /// magnitude, the finest attainable tolerance is used instead.
    pub fn of(&self, u: &SpaceTimeField, tol: f64) -> Result<NormValue> {
        attainable(tol, |tol| match self {
            ENorm::Thm1 { p, frak_p } => norm_e_thm1(u, p, *frak_p, tol),
            ENorm::Thm2 { p, q } => norm_e_thm2(u, p, *q, tol),
        })
    }

    pub fn accumulator(&self, grid: &GridSpec) -> NormAccumulator {
        match self {
            ENorm::Thm1 { .. } => NormAccumulator::Sup(vec![0.0; grid.len()], *grid),
            ENorm::Thm2 { .. } => NormAccumulator::Trace(Vec::new(), grid.cell_volume()),
        }
    }

    pub fn finish(&self, acc: NormAccumulator, tg: &TimeGrid, tol: f64) -> Result<NormValue> {
        match (self, acc) {
            (ENorm::Thm1 { p, frak_p }, NormAccumulator::Sup(values, grid)) => {
                let trace = ScalarField { grid, values };
                attainable(tol, |tol| mixed_norm(&trace, p, *frak_p, tol))
            }
            (ENorm::Thm2 { p, .. }, NormAccumulator::Trace(trace, _)) => {
                check_time_exponent(p, tg)?;
                attainable(tol, |tol| time_luxemburg(&trace, p, tg, tol))
            }
            _ => Err(Error::InvalidParameter("accumulator does not match the norm".into())),
        }
    }
}

/// Retries with the bracket width when bisection stalls at float resolution,
/// which happens for large norms and tiny absolute tolerances.
fn attainable(tol: f64, f: impl Fn(f64) -> Result<NormValue>) -> Result<NormValue> {
    match f(tol) {
        Err(Error::NonConvergence { lo, hi, .. }) if lo > 0.0 && hi.is_finite() && hi - lo <= 1e-14 * hi => {
            f(2.0 * (hi - lo))
        }
        r => r,
    }
}

/// Per-frame reduction state of an E-norm.
pub enum NormAccumulator {
    Sup(Vec<f64>, GridSpec),
    Trace(Vec<f64>, f64),
}

impl NormAccumulator {
    pub fn push(&mut self, norm: &ENorm, frame: &[Vec<f64>; 3]) {
        match (self, norm) {
            (NormAccumulator::Sup(values, _), _) => update_sup(values, frame),
            (NormAccumulator::Trace(trace, cell), ENorm::Thm2 { q, .. }) => trace.push(lq_norm(frame, *cell, *q)),
            (NormAccumulator::Trace(..), ENorm::Thm1 { .. }) => unreachable!("thm1 norms accumulate sups"),
        }
    }
}
