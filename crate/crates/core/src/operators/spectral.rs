//! Fourier multipliers on periodic grids: Riesz transforms, the Leray
//! projector, the heat semigroup and spectral derivatives.
//!
//! Wavenumbers follow the FFT layout: index `m` maps to `m` for
//! `m <= n/2` and `m - n` otherwise, scaled by `2 pi / L`. Odd multipliers
//! (Riesz, Leray, derivatives) use a copy with the Nyquist component zeroed,
//! so they map real fields to real fields; the heat multiplier is even and
//! uses the full wavevector.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField, TensorField, VectorField};

/// FFT plans, wavenumbers and scratch for one periodic grid.
///
/// Not shareable between threads while in use; clone one per worker.
#[derive(Clone)]
pub struct SpectralWorkspace {
    grid: GridSpec,
    shape: [usize; 3],
    k_full: [Vec<f64>; 3],
    k_odd: [Vec<f64>; 3],
    neg: [Vec<usize>; 3],
    forward: [Option<Arc<dyn Fft<f64>>>; 3],
    inverse: [Option<Arc<dyn Fft<f64>>>; 3],
    line: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for SpectralWorkspace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralWorkspace").field("grid", &self.grid).finish()
    }
}

impl SpectralWorkspace {
    pub fn new(grid: &GridSpec) -> Result<Self> {
        if !grid.is_periodic() {
            return Err(Error::NotPeriodic);
        }
        let shape = grid.shape();
        let mut planner = FftPlanner::new();
        let mut k_full: [Vec<f64>; 3] = Default::default();
        let mut k_odd: [Vec<f64>; 3] = Default::default();
        let mut neg: [Vec<usize>; 3] = Default::default();
        let mut forward: [Option<Arc<dyn Fft<f64>>>; 3] = Default::default();
        let mut inverse: [Option<Arc<dyn Fft<f64>>>; 3] = Default::default();
        let mut scratch_len = 0;
        for a in 0..3 {
            let n = shape[a];
            if a < grid.dimension() {
                let scale = 2.0 * std::f64::consts::PI / grid.extents()[a];
                k_full[a] = (0..n)
                    .map(|m| {
                        let s = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
                        scale * s
                    })
                    .collect();
                k_odd[a] = k_full[a]
                    .iter()
                    .enumerate()
                    .map(|(m, &k)| if n % 2 == 0 && m == n / 2 { 0.0 } else { k })
                    .collect();
                let f = planner.plan_fft_forward(n);
                let i = planner.plan_fft_inverse(n);
                scratch_len = scratch_len
                    .max(f.get_inplace_scratch_len())
                    .max(i.get_inplace_scratch_len());
                forward[a] = Some(f);
                inverse[a] = Some(i);
            } else {
                k_full[a] = vec![0.0; n];
                k_odd[a] = vec![0.0; n];
            }
            neg[a] = (0..n).map(|m| (n - m) % n).collect();
        }
        let longest = shape.iter().copied().max().unwrap_or(1);
        Ok(SpectralWorkspace {
            grid: *grid,
            shape,
            k_full,
            k_odd,
            neg,
            forward,
            inverse,
            line: vec![Complex64::default(); longest],
            scratch: vec![Complex64::default(); scratch_len],
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Full wavevector of mode `idx`.
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let m = self.grid.multi_index(idx);
        [self.k_full[0][m[0]], self.k_full[1][m[1]], self.k_full[2][m[2]]]
    }

    /// Wavevector with Nyquist components zeroed (used by odd multipliers).
    pub fn odd_wavevector(&self, idx: usize) -> [f64; 3] {
        let m = self.grid.multi_index(idx);
        [self.k_odd[0][m[0]], self.k_odd[1][m[1]], self.k_odd[2][m[2]]]
    }

    /// `|k|^2` for every mode, full wavevector.
    pub fn k_squared(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let k = self.wavevector(i);
                k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
            })
            .collect()
    }

    /// Index of the mode `-k`.
    pub fn negated(&self, idx: usize) -> usize {
        let m = self.grid.multi_index(idx);
        self.grid
            .flat_index([self.neg[0][m[0]], self.neg[1][m[1]], self.neg[2][m[2]]])
    }

    fn check(&self, grid: &GridSpec) -> Result<()> {
        if !grid.is_periodic() {
            return Err(Error::NotPeriodic);
        }
        self.grid.ensure_same(grid, "spectral workspace")
    }

    fn transform(&mut self, data: &mut [Complex64], inverse: bool) {
        let shape = self.shape;
        for axis in 0..3 {
            let n = shape[axis];
            let plan = if inverse { &self.inverse[axis] } else { &self.forward[axis] };
            let Some(plan) = plan.clone() else { continue };
            let stride: usize = shape[axis + 1..].iter().product();
            if stride == 1 {
                plan.process_with_scratch(data, &mut self.scratch);
                continue;
            }
            let block = n * stride;
            let line = &mut self.line[..n];
            for base in (0..data.len()).step_by(block) {
                for off in 0..stride {
                    let start = base + off;
                    for (j, v) in line.iter_mut().enumerate() {
                        *v = data[start + j * stride];
                    }
                    plan.process_with_scratch(line, &mut self.scratch);
                    for (j, v) in line.iter().enumerate() {
                        data[start + j * stride] = *v;
                    }
                }
            }
        }
        if inverse {
            let s = 1.0 / data.len() as f64;
            data.iter_mut().for_each(|v| *v *= s);
        }
    }

    /// Unnormalised forward DFT.
    pub fn forward(&mut self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    /// Inverse DFT including the `1/N` factor.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        self.transform(data, true);
    }

    pub fn to_spectral(&mut self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut data);
        data
    }

    /// Inverse transform keeping the real part.
    pub fn to_physical(&mut self, mut data: Vec<Complex64>) -> Vec<f64> {
        self.inverse(&mut data);
        data.into_iter().map(|c| c.re).collect()
    }

    /// Spectra of two real fields from a single complex transform.
    pub fn to_spectral_pair(&mut self, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut z: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
        self.forward(&mut z);
        let n = z.len();
        let mut fa = vec![Complex64::default(); n];
        let mut fb = vec![Complex64::default(); n];
        for i in 0..n {
            let zc = z[self.negated(i)].conj();
            fa[i] = 0.5 * (z[i] + zc);
            fb[i] = Complex64::new(0.0, -0.5) * (z[i] - zc);
        }
        (fa, fb)
    }

    /// Physical fields of two Hermitian spectra from a single inverse transform.
    pub fn to_physical_pair(&mut self, fa: &[Complex64], fb: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let i = Complex64::new(0.0, 1.0);
        let mut z: Vec<Complex64> = fa.iter().zip(fb).map(|(&x, &y)| x + i * y).collect();
        self.inverse(&mut z);
        (z.iter().map(|c| c.re).collect(), z.iter().map(|c| c.im).collect())
    }

    fn vector_to_spectral(&mut self, v: &VectorField) -> [Vec<Complex64>; 3] {
        let (a, b) = self.to_spectral_pair(&v.components[0], &v.components[1]);
        let c = self.to_spectral(&v.components[2]);
        [a, b, c]
    }

    fn vector_to_physical(&mut self, s: [Vec<Complex64>; 3]) -> [Vec<f64>; 3] {
        let [a, b, c] = s;
        let (pa, pb) = self.to_physical_pair(&a, &b);
        let pc = self.to_physical(c);
        [pa, pb, pc]
    }

    /// Leray projection of a spectral vector field, in place.
    pub fn project_spectral(&self, v: &mut [Vec<Complex64>; 3]) {
        for i in 0..self.len() {
            let k = self.odd_wavevector(i);
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            if k2 == 0.0 {
                continue;
            }
            let dot = v[0][i] * k[0] + v[1][i] * k[1] + v[2][i] * k[2];
            for c in 0..3 {
                v[c][i] -= dot * (k[c] / k2);
            }
        }
    }

    /// `i k . T` row by row: spectral divergence of a tensor, one component per row.
    pub fn tensor_divergence_spectral(&self, t: &[[&[Complex64]; 3]; 3]) -> [Vec<Complex64>; 3] {
        let n = self.len();
        let mut out: [Vec<Complex64>; 3] = Default::default();
        for (row, o) in out.iter_mut().enumerate() {
            *o = (0..n)
                .map(|i| {
                    let k = self.odd_wavevector(i);
                    let s = t[row][0][i] * k[0] + t[row][1][i] * k[1] + t[row][2][i] * k[2];
                    Complex64::new(-s.im, s.re)
                })
                .collect();
        }
        out
    }
}

/// Riesz transform along `axis` (0-based): multiplier `-i k_axis / |k|`.
pub fn riesz_transform(axis: usize, f: &ScalarField, ws: &mut SpectralWorkspace) -> Result<ScalarField> {
    ws.check(&f.grid)?;
    if axis >= f.grid.dimension() {
        return Err(Error::InvalidParameter(format!(
            "axis {axis} out of range for a {}-dimensional grid",
            f.grid.dimension()
        )));
    }
    let mut s = ws.to_spectral(&f.values);
    for (i, v) in s.iter_mut().enumerate() {
        let k = ws.odd_wavevector(i);
        let norm = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
        *v = if norm == 0.0 {
            Complex64::default()
        } else {
            Complex64::new(v.im, -v.re) * (k[axis] / norm)
        };
    }
    Ok(ScalarField {
        grid: f.grid,
        values: ws.to_physical(s),
    })
}

/// Leray projector `Id - R (x) R`.
pub fn leray_project(v: &VectorField, ws: &mut SpectralWorkspace) -> Result<VectorField> {
    ws.check(&v.grid)?;
    let mut s = ws.vector_to_spectral(v);
    ws.project_spectral(&mut s);
    Ok(VectorField {
        grid: v.grid,
        components: ws.vector_to_physical(s),
    })
}

fn heat_multiplier(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("heat time must be >= 0, got {t}")));
    }
    Ok(())
}

/// Convolution with the heat kernel at time `t`: multiplier `exp(-t |k|^2)`.
pub fn heat_convolve(f: &ScalarField, t: f64, ws: &mut SpectralWorkspace) -> Result<ScalarField> {
    ws.check(&f.grid)?;
    heat_multiplier(t)?;
    if t == 0.0 {
        return Ok(f.clone());
    }
    let mut s = ws.to_spectral(&f.values);
    for (v, k2) in s.iter_mut().zip(ws.k_squared()) {
        *v *= (-t * k2).exp();
    }
    Ok(ScalarField {
        grid: f.grid,
        values: ws.to_physical(s),
    })
}

pub fn heat_convolve_vector(v: &VectorField, t: f64, ws: &mut SpectralWorkspace) -> Result<VectorField> {
    ws.check(&v.grid)?;
    heat_multiplier(t)?;
    if t == 0.0 {
        return Ok(v.clone());
    }
    let mut s = ws.vector_to_spectral(v);
    let k2 = ws.k_squared();
    for comp in s.iter_mut() {
        for (c, &q) in comp.iter_mut().zip(&k2) {
            *c *= (-t * q).exp();
        }
    }
    Ok(VectorField {
        grid: v.grid,
        components: ws.vector_to_physical(s),
    })
}

/// Spectral partial derivative along `axis`.
pub fn derivative(axis: usize, f: &ScalarField, ws: &mut SpectralWorkspace) -> Result<ScalarField> {
    ws.check(&f.grid)?;
    let mut s = ws.to_spectral(&f.values);
    for (i, v) in s.iter_mut().enumerate() {
        let k = ws.odd_wavevector(i)[axis];
        *v = Complex64::new(-v.im, v.re) * k;
    }
    Ok(ScalarField {
        grid: f.grid,
        values: ws.to_physical(s),
    })
}

pub fn gradient(f: &ScalarField, ws: &mut SpectralWorkspace) -> Result<VectorField> {
    let a = derivative(0, f, ws)?;
    let b = derivative(1, f, ws)?;
    let c = derivative(2, f, ws)?;
    VectorField::from_scalars(&a, &b, &c)
}

/// Row-wise divergence `(div T)_i = sum_j d_j T_ij`.
pub fn tensor_divergence(t: &TensorField, ws: &mut SpectralWorkspace) -> Result<VectorField> {
    ws.check(&t.grid)?;
    let e = &t.entries;
    let (s00, s01) = ws.to_spectral_pair(&e[0][0], &e[0][1]);
    let (s02, s10) = ws.to_spectral_pair(&e[0][2], &e[1][0]);
    let (s11, s12) = ws.to_spectral_pair(&e[1][1], &e[1][2]);
    let (s20, s21) = ws.to_spectral_pair(&e[2][0], &e[2][1]);
    let s22 = ws.to_spectral(&e[2][2]);
    let div = ws.tensor_divergence_spectral(&[
        [&s00, &s01, &s02],
        [&s10, &s11, &s12],
        [&s20, &s21, &s22],
    ]);
    Ok(VectorField {
        grid: t.grid,
        components: ws.vector_to_physical(div),
    })
}

/// `sqrt(sum |k . v^|^2) / sqrt(sum |k|^2 |v^|^2)`, 0 for a field with no
/// nonzero-wavenumber content.
pub fn spectral_divergence(v: &VectorField, ws: &mut SpectralWorkspace) -> Result<f64> {
    ws.check(&v.grid)?;
    let s = ws.vector_to_spectral(v);
    Ok(relative_divergence(&s, ws))
}

pub(crate) fn relative_divergence(s: &[Vec<Complex64>; 3], ws: &SpectralWorkspace) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..ws.len() {
        let k = ws.odd_wavevector(i);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        let dot = s[0][i] * k[0] + s[1][i] * k[1] + s[2][i] * k[2];
        num += dot.norm_sqr();
        den += k2 * (s[0][i].norm_sqr() + s[1][i].norm_sqr() + s[2][i].norm_sqr());
    }
    if den == 0.0 {
        0.0
    } else {
        (num / den).sqrt()
    }
}
