//! Uniform time grids and trapezoid Duhamel quadrature.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Topology};
use crate::mild_solver::SpaceTimeField;
use crate::operators::spectral::SpectralWorkspace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_final: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, steps: usize) -> Result<Self> {
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::InvalidParameter(format!("final time must be positive, got {t_final}")));
        }
        if steps == 0 {
            return Err(Error::InvalidParameter("time grid needs at least one step".into()));
        }
        Ok(TimeGrid { t_final, steps })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    pub fn node_count(&self) -> usize {
        self.steps + 1
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.steps {
            self.t_final
        } else {
            i as f64 * self.dt()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.node_count()).map(|i| self.node(i)).collect()
    }

    /// Trapezoid weights on the nodes.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let dt = self.dt();
        let mut w = vec![dt; self.node_count()];
        w[0] = 0.5 * dt;
        w[self.steps] = 0.5 * dt;
        w
    }

    /// 1D grid whose cell centres are exactly the time nodes, for sampling
    /// time-dependent exponents.
    pub fn node_grid(&self) -> GridSpec {
        let dt = self.dt();
        GridSpec::interval(-0.5 * dt, self.t_final + 0.5 * dt, self.node_count(), Topology::Truncated)
            .expect("a positive time grid yields a valid node grid")
    }
}

/// Streaming trapezoid quadrature of `int_0^{t_i} exp(-(t_i - s)|k|^2) N^(s) ds`
/// for a three-component spectral integrand pushed one node at a time.
///
/// With `A_i = exp(-dt |k|^2) A_{i-1} + N_i`, the trapezoid sum equals
/// `dt (A_i - N_0 exp(-t_i |k|^2) / 2 - N_i / 2)`.
pub struct DuhamelStream {
    k2: Vec<f64>,
    step_decay: Vec<f64>,
    acc: [Vec<Complex64>; 3],
    first: [Vec<Complex64>; 3],
    dt: f64,
    index: usize,
}

impl DuhamelStream {
    pub fn new(ws: &SpectralWorkspace, tg: &TimeGrid) -> Self {
        let k2 = ws.k_squared();
        let dt = tg.dt();
        let step_decay = k2.iter().map(|&q| (-dt * q).exp()).collect();
        let n = k2.len();
        let z = || vec![Complex64::default(); n];
        DuhamelStream {
            k2,
            step_decay,
            acc: [z(), z(), z()],
            first: [z(), z(), z()],
            dt,
            index: 0,
        }
    }

    /// Push the integrand at the next node; returns the quadrature at that node.
    pub fn push(&mut self, integrand: &[Vec<Complex64>; 3]) -> [Vec<Complex64>; 3] {
        let i = self.index;
        let t = i as f64 * self.dt;
        let n = self.k2.len();
        let mut out: [Vec<Complex64>; 3] = Default::default();
        for c in 0..3 {
            let mut o = vec![Complex64::default(); n];
            if i == 0 {
                self.first[c].copy_from_slice(&integrand[c]);
                self.acc[c].copy_from_slice(&integrand[c]);
            } else {
                for m in 0..n {
                    let a = self.acc[c][m] * self.step_decay[m] + integrand[c][m];
                    self.acc[c][m] = a;
                    let e = (-t * self.k2[m]).exp();
                    o[m] = self.dt * (a - 0.5 * e * self.first[c][m] - 0.5 * integrand[c][m]);
                }
            }
            out[c] = o;
        }
        self.index += 1;
        out
    }
}

/// Trapezoid Duhamel integral of a force sampled on the time nodes.
pub fn duhamel_force(force: &SpaceTimeField, tg: &TimeGrid, ws: &mut SpectralWorkspace) -> Result<SpaceTimeField> {
    if force.time_grid() != tg {
        return Err(Error::GridMismatch("force and time grid differ".into()));
    }
    let grid = *force.grid();
    if !grid.is_periodic() {
        return Err(Error::NotPeriodic);
    }
    grid.ensure_same(ws.grid(), "duhamel workspace")?;
    let mut stream = DuhamelStream::new(ws, tg);
    let mut frames = Vec::with_capacity(tg.node_count());
    for f in force.frames() {
        let (a, b) = ws.to_spectral_pair(&f.components[0], &f.components[1]);
        let c = ws.to_spectral(&f.components[2]);
        let [ia, ib, ic] = stream.push(&[a, b, c]);
        let (pa, pb) = ws.to_physical_pair(&ia, &ib);
        let pc = ws.to_physical(ic);
        frames.push(crate::grid::VectorField {
            grid,
            components: [pa, pb, pc],
        });
    }
    SpaceTimeField::new(*tg, frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::VectorField;
    use std::f64::consts::PI;

    #[test]
    fn nodes_and_weights() {
        let tg = TimeGrid::new(2.0, 4).unwrap();
        assert_eq!(tg.nodes(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(tg.trapezoid_weights().iter().sum::<f64>(), 2.0);
        let g = tg.node_grid();
        for i in 0..tg.node_count() {
            assert!((g.point(i)[0] - tg.node(i)).abs() < 1e-15);
        }
        assert!(TimeGrid::new(0.0, 3).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
    }

    #[test]
    fn stream_matches_direct_trapezoid() {
        let g = GridSpec::torus(2.0 * PI, 4).unwrap();
        let ws = SpectralWorkspace::new(&g).unwrap();
        let tg = TimeGrid::new(0.7, 9).unwrap();
        let k2 = ws.k_squared();
        let mut stream = DuhamelStream::new(&ws, &tg);
        let values: Vec<Vec<Complex64>> = (0..tg.node_count())
            .map(|i| (0..g.len()).map(|m| Complex64::new((i + m) as f64, (i * m) as f64 * 0.1)).collect())
            .collect();
        for i in 0..tg.node_count() {
            let out = stream.push(&[values[i].clone(), values[i].clone(), values[i].clone()]);
            for m in 0..g.len() {
                let mut direct = Complex64::default();
                for j in 0..=i {
                    let w = if i == 0 { 0.0 } else if j == 0 || j == i { 0.5 } else { 1.0 };
                    direct += w * tg.dt() * (-(tg.node(i) - tg.node(j)) * k2[m]).exp() * values[j][m];
                }
                assert!((out[0][m] - direct).norm() < 1e-12 * (1.0 + direct.norm()));
            }
        }
    }

    #[test]
    fn zero_force_gives_zero() {
        let g = GridSpec::torus(2.0 * PI, 8).unwrap();
        let mut ws = SpectralWorkspace::new(&g).unwrap();
        let tg = TimeGrid::new(1.0, 4).unwrap();
        let f = SpaceTimeField::new(tg, vec![VectorField::zeros(g); 5]).unwrap();
        let d = duhamel_force(&f, &tg, &mut ws).unwrap();
        assert!(d.frames().iter().all(|v| v.max_abs() == 0.0));
    }
}
