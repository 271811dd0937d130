//! Uniform grids and the sampled fields that live on them.
//!
//! Points are cell centres: along axis `a` the `i`-th point sits at
//! `origin[a] + (i + 1/2) * spacing(a)`. Every integral in the crate is the
//! midpoint rule on these cells, so the quadrature weight of a point is the
//! cell volume.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Periodic,
    Truncated,
}

/// Uniform cell-centred grid on an interval (dimension 1) or a box (dimension 3).
///
/// Unused axes of a 1D grid carry resolution 1 so that row-major indexing
/// works the same way in both dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct GridSpec {
    dimension: usize,
    extents: [f64; 3],
    resolution: [usize; 3],
    origin: [f64; 3],
    topology: Topology,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    dimension: usize,
    extents: Vec<f64>,
    resolution: Vec<usize>,
    topology: Topology,
    #[serde(default)]
    origin: Option<Vec<f64>>,
}

impl TryFrom<GridRepr> for GridSpec {
    type Error = Error;

    fn try_from(r: GridRepr) -> Result<Self> {
        let origin = r.origin.unwrap_or_else(|| vec![0.0; r.dimension]);
        GridSpec::new(r.dimension, &r.extents, &r.resolution, &origin, r.topology)
    }
}

impl From<GridSpec> for GridRepr {
    fn from(g: GridSpec) -> Self {
        let d = g.dimension;
        GridRepr {
            dimension: d,
            extents: g.extents[..d].to_vec(),
            resolution: g.resolution[..d].to_vec(),
            topology: g.topology,
            origin: Some(g.origin[..d].to_vec()),
        }
    }
}

impl GridSpec {
    pub fn new(
        dimension: usize,
        extents: &[f64],
        resolution: &[usize],
        origin: &[f64],
        topology: Topology,
    ) -> Result<Self> {
        if dimension != 1 && dimension != 3 {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 3, got {dimension}"
            )));
        }
        if extents.len() != dimension || resolution.len() != dimension || origin.len() != dimension
        {
            return Err(Error::InvalidGrid(
                "extents, resolution and origin need one entry per axis".into(),
            ));
        }
        let mut g = GridSpec {
            dimension,
            extents: [1.0; 3],
            resolution: [1; 3],
            origin: [0.0; 3],
            topology,
        };
        for a in 0..dimension {
            if resolution[a] < 2 {
                return Err(Error::InvalidGrid(format!(
                    "resolution along axis {a} must be at least 2"
                )));
            }
            if !(extents[a] > 0.0 && extents[a].is_finite()) {
                return Err(Error::InvalidGrid(format!(
                    "extent along axis {a} must be positive and finite"
                )));
            }
            if !origin[a].is_finite() {
                return Err(Error::InvalidGrid(format!("origin along axis {a} is not finite")));
            }
            g.extents[a] = extents[a];
            g.resolution[a] = resolution[a];
            g.origin[a] = origin[a];
        }
        Ok(g)
    }

    /// 1D grid covering `[start, end]` with `n` cells.
    pub fn interval(start: f64, end: f64, n: usize, topology: Topology) -> Result<Self> {
        GridSpec::new(1, &[end - start], &[n], &[start], topology)
    }

    /// 3D cube `[-half, half]^3` with `n` cells per axis.
    pub fn centered_cube(half: f64, n: usize, topology: Topology) -> Result<Self> {
        GridSpec::new(
            3,
            &[2.0 * half; 3],
            &[n; 3],
            &[-half; 3],
            topology,
        )
    }

    /// Periodic box `[0, length)^3` with `n` cells per axis.
    pub fn torus(length: f64, n: usize) -> Result<Self> {
        GridSpec::new(3, &[length; 3], &[n; 3], &[0.0; 3], Topology::Periodic)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn is_periodic(&self) -> bool {
        self.topology == Topology::Periodic
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents[..self.dimension]
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution[..self.dimension]
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.dimension]
    }

    /// Resolution padded to three axes (unused axes have length 1).
    pub fn shape(&self) -> [usize; 3] {
        self.resolution
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extents[axis] / self.resolution[axis] as f64
    }

    pub fn spacings(&self) -> [f64; 3] {
        let mut h = [0.0; 3];
        for (a, s) in h.iter_mut().enumerate().take(self.dimension) {
            *s = self.spacing(a);
        }
        h
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dimension).map(|a| self.spacing(a)).product()
    }

    /// Total measure of the domain.
    pub fn measure(&self) -> f64 {
        self.extents().iter().product()
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let [_, ny, nz] = self.resolution;
        [idx / (ny * nz), (idx / nz) % ny, idx % nz]
    }

    pub fn flat_index(&self, m: [usize; 3]) -> usize {
        let [_, ny, nz] = self.resolution;
        (m[0] * ny + m[1]) * nz + m[2]
    }

    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + (i as f64 + 0.5) * self.spacing(axis)
    }

    /// Physical position of point `idx`; unused axes are zero.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let m = self.multi_index(idx);
        let mut x = [0.0; 3];
        for (a, xa) in x.iter_mut().enumerate().take(self.dimension) {
            *xa = self.coordinate(a, m[a]);
        }
        x
    }

    pub fn points(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// Odd-resolution grid with the same spacing, centred on the origin, with
    /// `half_cells` cells on each side of the central cell. Used to sample
    /// convolution kernels.
    pub fn kernel_grid(&self, half_cells: usize) -> Result<Self> {
        let n = 2 * half_cells + 1;
        let d = self.dimension;
        let h = self.spacings();
        let extents: Vec<f64> = (0..d).map(|a| n as f64 * h[a]).collect();
        let origin: Vec<f64> = (0..d).map(|a| -(half_cells as f64 + 0.5) * h[a]).collect();
        GridSpec::new(d, &extents, &vec![n; d], &origin, Topology::Truncated)
    }

    /// Same domain with every axis resolution multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let d = self.dimension;
        let res: Vec<usize> = self.resolution().iter().map(|&n| n * factor).collect();
        GridSpec::new(d, self.extents(), &res, self.origin(), self.topology)
    }

    pub fn with_origin(&self, origin: &[f64]) -> Result<Self> {
        GridSpec::new(
            self.dimension,
            self.extents(),
            self.resolution(),
            origin,
            self.topology,
        )
    }

    /// Sample `f` at every grid point.
    pub fn sample(&self, f: impl Fn([f64; 3]) -> f64) -> ScalarField {
        ScalarField {
            grid: *self,
            values: self.points().map(f).collect(),
        }
    }

    pub(crate) fn ensure_same(&self, other: &GridSpec, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{what}: fields live on different grids")));
        }
        Ok(())
    }
}

/// Real function sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        ScalarField {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        ScalarField {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.ensure_same(&other.grid, "zip")?;
        Ok(ScalarField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Midpoint-rule integral.
    pub fn integral(&self) -> f64 {
        self.grid.cell_volume() * compensated_sum(self.values.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(self.values.iter().copied()) / self.values.len() as f64
    }
}

/// Three scalar components sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: GridSpec,
    pub components: [Vec<f64>; 3],
}

impl VectorField {
    pub fn new(grid: GridSpec, components: [Vec<f64>; 3]) -> Result<Self> {
        if components.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::GridMismatch(
                "vector components do not match the grid size".into(),
            ));
        }
        Ok(VectorField { grid, components })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        let n = grid.len();
        VectorField {
            grid,
            components: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut v = VectorField::zeros(grid);
        for (i, x) in grid.points().enumerate() {
            let val = f(x);
            for c in 0..3 {
                v.components[c][i] = val[c];
            }
        }
        v
    }

    pub fn from_scalars(a: &ScalarField, b: &ScalarField, c: &ScalarField) -> Result<Self> {
        a.grid.ensure_same(&b.grid, "vector assembly")?;
        a.grid.ensure_same(&c.grid, "vector assembly")?;
        Ok(VectorField {
            grid: a.grid,
            components: [a.values.clone(), b.values.clone(), c.values.clone()],
        })
    }

    pub fn component(&self, c: usize) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.components[c].clone(),
        }
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> ScalarField {
        let [a, b, c] = &self.components;
        ScalarField {
            grid: self.grid,
            values: (0..self.grid.len())
                .map(|i| (a[i] * a[i] + b[i] * b[i] + c[i] * c[i]).sqrt())
                .collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for comp in out.components.iter_mut() {
            comp.iter_mut().for_each(|v| *v *= s);
        }
        out
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &VectorField, s: f64) -> Result<Self> {
        self.grid.ensure_same(&other.grid, "vector sum")?;
        let mut out = self.clone();
        for c in 0..3 {
            for (o, &b) in out.components[c].iter_mut().zip(&other.components[c]) {
                *o += s * b;
            }
        }
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().flatten().all(|v| v.is_finite())
    }
}

/// Rank-two tensor field stored as nine row-major components.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub grid: GridSpec,
    pub entries: [[Vec<f64>; 3]; 3],
}

impl TensorField {
    pub fn zeros(grid: GridSpec) -> Self {
        let z = || vec![0.0; grid.len()];
        TensorField {
            grid,
            entries: [[z(), z(), z()], [z(), z(), z()], [z(), z(), z()]],
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> [[f64; 3]; 3]) -> Self {
        let mut t = TensorField::zeros(grid);
        for (idx, x) in grid.points().enumerate() {
            let m = f(x);
            for (i, row) in m.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    t.entries[i][j][idx] = v;
                }
            }
        }
        t
    }

    /// Pointwise Frobenius norm.
    pub fn magnitude(&self) -> ScalarField {
        let values = (0..self.grid.len())
            .map(|idx| {
                self.entries
                    .iter()
                    .flatten()
                    .map(|c| c[idx] * c[idx])
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        ScalarField {
            grid: self.grid,
            values,
        }
    }
}

/// Neumaier-compensated summation.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_grids() {
        assert!(GridSpec::interval(0.0, 1.0, 1, Topology::Truncated).is_err());
        assert!(GridSpec::interval(1.0, 1.0, 8, Topology::Truncated).is_err());
        assert!(GridSpec::new(2, &[1.0, 1.0], &[4, 4], &[0.0, 0.0], Topology::Periodic).is_err());
    }

    #[test]
    fn cell_centres_and_weights() {
        let g = GridSpec::interval(0.0, 2.0, 4, Topology::Truncated).unwrap();
        assert_eq!(g.point(0)[0], 0.25);
        assert_eq!(g.point(3)[0], 1.75);
        assert_eq!(g.cell_volume(), 0.5);
        assert_eq!(g.measure(), 2.0);
        let c = GridSpec::centered_cube(1.0, 4, Topology::Truncated).unwrap();
        assert_eq!(c.len(), 64);
        assert!((c.cell_volume() - 0.125).abs() < 1e-15);
        let idx = c.flat_index([1, 2, 3]);
        assert_eq!(c.multi_index(idx), [1, 2, 3]);
    }

    #[test]
    fn kernel_grid_is_centred() {
        let g = GridSpec::interval(-1.0, 1.0, 20, Topology::Truncated).unwrap();
        let k = g.kernel_grid(3).unwrap();
        assert_eq!(k.len(), 7);
        assert!(k.point(3)[0].abs() < 1e-15);
        assert!((k.spacing(0) - g.spacing(0)).abs() < 1e-15);
    }

    #[test]
    fn grid_json_round_trip() {
        let g = GridSpec::centered_cube(3.0, 8, Topology::Truncated).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        let back: GridSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v), 2.0);
    }
}
