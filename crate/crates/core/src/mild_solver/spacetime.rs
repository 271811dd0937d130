use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField, VectorField};
use crate::operators::TimeGrid;

/// Vector fields on one spatial grid, one per time node.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    tg: TimeGrid,
    frames: Vec<VectorField>,
}

impl SpaceTimeField {
    pub fn new(tg: TimeGrid, frames: Vec<VectorField>) -> Result<Self> {
        if frames.len() != tg.node_count() {
            return Err(Error::GridMismatch(format!(
                "{} frames for {} time nodes",
                frames.len(),
                tg.node_count()
            )));
        }
        let grid = frames[0].grid;
        if frames.iter().any(|f| f.grid != grid) {
            return Err(Error::GridMismatch("frames live on different grids".into()));
        }
        Ok(SpaceTimeField { tg, frames })
    }

    pub fn zeros(tg: TimeGrid, grid: GridSpec) -> Self {
        SpaceTimeField {
            tg,
            frames: vec![VectorField::zeros(grid); tg.node_count()],
        }
    }

    /// Frames `a(t_i) w` for a scalar time profile `a`.
    pub fn separable(tg: TimeGrid, w: &VectorField, a: impl Fn(f64) -> f64) -> Self {
        SpaceTimeField {
            tg,
            frames: tg.nodes().into_iter().map(|t| w.scaled(a(t))).collect(),
        }
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.tg
    }

    pub fn grid(&self) -> &GridSpec {
        &self.frames[0].grid
    }

    pub fn frames(&self) -> &[VectorField] {
        &self.frames
    }

    pub fn frames_mut(&mut self) -> &mut [VectorField] {
        &mut self.frames
    }

    pub fn into_frames(self) -> Vec<VectorField> {
        self.frames
    }

    pub fn scaled(&self, s: f64) -> Self {
        SpaceTimeField {
            tg: self.tg,
            frames: self.frames.iter().map(|f| f.scaled(s)).collect(),
        }
    }

    /// `self + s * other`, frame by frame.
    pub fn add_scaled(&self, other: &SpaceTimeField, s: f64) -> Result<Self> {
        if self.tg != other.tg {
            return Err(Error::GridMismatch("space-time fields on different time grids".into()));
        }
        let frames = self
            .frames
            .iter()
            .zip(&other.frames)
            .map(|(a, b)| a.add_scaled(b, s))
            .collect::<Result<_>>()?;
        Ok(SpaceTimeField { tg: self.tg, frames })
    }

    /// `x -> max_i |u(t_i, x)|`.
    pub fn sup_trace(&self) -> ScalarField {
        let mut trace = ScalarField::zeros(*self.grid());
        for f in &self.frames {
            update_sup(&mut trace.values, &f.components);
        }
        trace
    }

    /// `t_i -> |u(t_i, .)|_{L^q}`.
    pub fn lq_trace(&self, q: f64) -> Vec<f64> {
        self.frames
            .iter()
            .map(|f| lq_norm(&f.components, f.grid.cell_volume(), q))
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.frames.iter().map(|f| f.max_abs()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.frames.iter().all(|f| f.is_finite())
    }
}

pub(crate) fn update_sup(trace: &mut [f64], c: &[Vec<f64>; 3]) {
    for (i, t) in trace.iter_mut().enumerate() {
        let m = (c[0][i] * c[0][i] + c[1][i] * c[1][i] + c[2][i] * c[2][i]).sqrt();
        if m > *t {
            *t = m;
        }
    }
}

pub(crate) fn lq_norm(c: &[Vec<f64>; 3], cell: f64, q: f64) -> f64 {
    let s = crate::grid::compensated_sum((0..c[0].len()).map(|i| {
        (c[0][i] * c[0][i] + c[1][i] * c[1][i] + c[2][i] * c[2][i]).powf(0.5 * q)
    }));
    (cell * s).powf(1.0 / q)
}
