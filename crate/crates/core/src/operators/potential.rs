//! Riesz potentials `I_sigma f(x) = int |f(y)| / |x - y|^{n - sigma} dy` by
//! product integration: `|f|` is taken constant on each cell and the kernel
//! is integrated over the cell.
//!
//! In 1D the cell integrals are exact antiderivatives. In 3D they come from
//! three regimes: cells touching the evaluation point use the divergence
//! identity `int_B |y|^{s-3} dy = (1/s) sum_F d_F int_F |y|^{s-3} dS`
//! with graded Gauss–Legendre face quadrature, nearby cells use tensor
//! Gauss–Legendre, and distant cells a curvature-corrected midpoint rule.

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::operators::convolve::Convolver;

/// Cells whose max-norm offset is at most this use tensor quadrature.
const NEAR_CELLS: i64 = 8;

fn check_sigma(sigma: f64, dim: usize) -> Result<()> {
    if !(sigma > 0.0 && sigma < dim as f64) {
        return Err(Error::InvalidParameter(format!(
            "sigma must lie in ]0, {dim}[, got {sigma}"
        )));
    }
    Ok(())
}

/// `int_a^b |y|^{sigma - 1} dy`.
pub fn interval_kernel_integral(a: f64, b: f64, sigma: f64) -> f64 {
    let prim = |y: f64| y.signum() * y.abs().powf(sigma) / sigma;
    prim(b) - prim(a)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (mut q0, mut q1) = (1.0, z);
                for k in 2..=n {
                    let q2 = ((2 * k - 1) as f64 * z * q1 - (k - 1) as f64 * q0) / k as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let dq = n as f64 * (z * q1 - q0) / (z * z - 1.0);
                w[i] = 2.0 / ((1.0 - z * z) * dq * dq);
                break;
            }
        }
        x[i] = z;
    }
    (x, w)
}

/// Quadrature rules and exponent for 3D box integrals of `|y|^beta`.
pub struct BoxKernel {
    beta: f64,
    sigma: f64,
    gl16: (Vec<f64>, Vec<f64>),
    gl8: (Vec<f64>, Vec<f64>),
    gl4: (Vec<f64>, Vec<f64>),
}

impl BoxKernel {
    pub fn new(sigma: f64) -> Result<Self> {
        check_sigma(sigma, 3)?;
        Ok(BoxKernel {
            beta: sigma - 3.0,
            sigma,
            gl16: gauss_legendre(16),
            gl8: gauss_legendre(8),
            gl4: gauss_legendre(4),
        })
    }

    /// Breakpoints on `[a0, a1]` (with `a0 >= 0`) graded geometrically away
    /// from 0 on the scale `d`.
    fn graded(a0: f64, a1: f64, d: f64) -> Vec<f64> {
        let mut pts = vec![a0];
        let mut x = a0;
        while x < a1 {
            let next = (2.0 * x).max(x + d).min(a1);
            if a1 - next < 0.25 * d {
                pts.push(a1);
                break;
            }
            pts.push(next);
            x = next;
        }
        pts
    }

    /// `int_{s0}^{s1} int_{t0}^{t1} (d^2 + s^2 + t^2)^{beta/2} dt ds` with `d != 0`.
    fn face(&self, d: f64, s: [f64; 2], t: [f64; 2]) -> f64 {
        let d = d.abs();
        let (x, w) = &self.gl16;
        let split = |lo: f64, hi: f64| -> Vec<[f64; 2]> {
            // pieces on one side of 0, reflected to nonnegative coordinates
            if lo >= 0.0 {
                vec![[lo, hi]]
            } else if hi <= 0.0 {
                vec![[-hi, -lo]]
            } else {
                vec![[0.0, -lo], [0.0, hi]]
            }
        };
        let mut total = 0.0;
        for sp in split(s[0], s[1]) {
            for tp in split(t[0], t[1]) {
                let sb = Self::graded(sp[0], sp[1], d);
                let tb = Self::graded(tp[0], tp[1], d);
                for si in sb.windows(2) {
                    let (sc, sh) = (0.5 * (si[0] + si[1]), 0.5 * (si[1] - si[0]));
                    for ti in tb.windows(2) {
                        let (tc, th) = (0.5 * (ti[0] + ti[1]), 0.5 * (ti[1] - ti[0]));
                        let mut acc = 0.0;
                        for (xi, wi) in x.iter().zip(w) {
                            let sv = sc + sh * xi;
                            for (xj, wj) in x.iter().zip(w) {
                                let tv = tc + th * xj;
                                acc += wi * wj * (d * d + sv * sv + tv * tv).powf(0.5 * self.beta);
                            }
                        }
                        total += acc * sh * th;
                    }
                }
            }
        }
        total
    }

    /// Divergence-identity evaluation, valid for any box.
    fn by_faces(&self, lo: [f64; 3], hi: [f64; 3]) -> f64 {
        let mut total = 0.0;
        for a in 0..3 {
            let (b, c) = ((a + 1) % 3, (a + 2) % 3);
            for (plane, sign) in [(hi[a], 1.0), (lo[a], -1.0)] {
                if plane == 0.0 {
                    continue;
                }
                // outward normal component times the plane coordinate
                let flux = sign * plane;
                total += flux * self.face(plane, [lo[b], hi[b]], [lo[c], hi[c]]);
            }
        }
        total / self.sigma
    }

    fn tensor(&self, lo: [f64; 3], hi: [f64; 3], rule: &(Vec<f64>, Vec<f64>)) -> f64 {
        let (x, w) = rule;
        let c: [f64; 3] = std::array::from_fn(|a| 0.5 * (lo[a] + hi[a]));
        let h: [f64; 3] = std::array::from_fn(|a| 0.5 * (hi[a] - lo[a]));
        let mut acc = 0.0;
        for (xi, wi) in x.iter().zip(w) {
            let y0 = c[0] + h[0] * xi;
            for (xj, wj) in x.iter().zip(w) {
                let y1 = c[1] + h[1] * xj;
                for (xk, wk) in x.iter().zip(w) {
                    let y2 = c[2] + h[2] * xk;
                    acc += wi * wj * wk * (y0 * y0 + y1 * y1 + y2 * y2).powf(0.5 * self.beta);
                }
            }
        }
        acc * h[0] * h[1] * h[2]
    }

    fn midpoint(&self, c: [f64; 3], h: [f64; 3]) -> f64 {
        let r2 = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
        let k = r2.powf(0.5 * self.beta);
        let b = self.beta;
        let mut corr = 0.0;
        for a in 0..3 {
            // d^2/dy_a^2 |y|^b = b |y|^{b-2} (1 + (b-2) y_a^2 / |y|^2)
            corr += h[a] * h[a] / 24.0 * b * (1.0 + (b - 2.0) * c[a] * c[a] / r2) / r2;
        }
        h[0] * h[1] * h[2] * k * (1.0 + corr)
    }

    /// `int_{c + [-h/2, h/2]} |y|^{sigma-3} dy` for the cell with centre `c`
    /// and sides `h`, seen from the origin.
    pub fn cell(&self, c: [f64; 3], h: [f64; 3]) -> f64 {
        // distance from the origin in units of the cell, per axis
        let mut reach = 0.0f64;
        for a in 0..3 {
            reach = reach.max(c[a].abs() / h[a]);
        }
        let lo: [f64; 3] = std::array::from_fn(|a| c[a] - 0.5 * h[a]);
        let hi: [f64; 3] = std::array::from_fn(|a| c[a] + 0.5 * h[a]);
        if reach < 1.5 {
            self.by_faces(lo, hi)
        } else if reach < 4.5 {
            self.tensor(lo, hi, &self.gl8)
        } else if reach < NEAR_CELLS as f64 + 0.5 {
            self.tensor(lo, hi, &self.gl4)
        } else {
            self.midpoint(c, h)
        }
    }
}

fn kernel_weights_1d(n: usize, h: f64, sigma: f64) -> Vec<f64> {
    // weight for offset o (source - target) in cells
    (0..n)
        .map(|o| interval_kernel_integral((o as f64 - 0.5) * h, (o as f64 + 0.5) * h, sigma))
        .collect()
}

/// Riesz potential of `|f|` at every grid point, `f` extended by zero
/// outside the box.
pub fn riesz_potential_direct(f: &ScalarField, sigma: f64) -> Result<ScalarField> {
    let g = f.grid;
    if g.is_periodic() {
        return Err(Error::NotTruncated);
    }
    check_sigma(sigma, g.dimension())?;
    let abs = f.abs();
    if g.dimension() == 1 {
        let n = g.len();
        let w = kernel_weights_1d(n, g.spacing(0), sigma);
        // direct sums keep the operator exactly monotone in |f|
        let values = (0..n)
            .map(|i| {
                let mut s = 0.0;
                for (j, &v) in abs.values.iter().enumerate() {
                    if v != 0.0 {
                        s += v * w[i.abs_diff(j)];
                    }
                }
                s
            })
            .collect();
        return Ok(ScalarField { grid: g, values });
    }
    let shape = g.shape();
    let h = g.spacings();
    let kern = BoxKernel::new(sigma)?;
    let half = [shape[0] - 1, shape[1] - 1, shape[2] - 1];
    let mut conv = Convolver::new(&abs, half)?;
    let table = weight_table(&kern, half, h);
    let n1 = 2 * half[1] + 1;
    let n2 = 2 * half[2] + 1;
    let h = half.map(|v| v as i64);
    let kernel = (-h[0]..=h[0]).flat_map(|i| {
        let table = &table;
        (-h[1]..=h[1]).flat_map(move |j| {
            (-h[2]..=h[2]).map(move |l| {
                let idx = (((i + h[0]) as usize) * n1 + (j + h[1]) as usize) * n2 + (l + h[2]) as usize;
                ([i, j, l], table[idx])
            })
        })
    });
    let mut values = conv.apply(kernel);
    values.iter_mut().for_each(|v| *v = v.max(0.0));
    Ok(ScalarField { grid: g, values })
}

/// Cell weights for every offset in the box `|o_a| <= half[a]`, using the
/// symmetry of the kernel under axis reflections.
fn weight_table(kern: &BoxKernel, half: [usize; 3], h: [f64; 3]) -> Vec<f64> {
    let n: [usize; 3] = half.map(|v| 2 * v + 1);
    let mut octant = vec![0.0; (half[0] + 1) * (half[1] + 1) * (half[2] + 1)];
    let oi = |i: usize, j: usize, l: usize| (i * (half[1] + 1) + j) * (half[2] + 1) + l;
    for i in 0..=half[0] {
        for j in 0..=half[1] {
            for l in 0..=half[2] {
                let c = [i as f64 * h[0], j as f64 * h[1], l as f64 * h[2]];
                octant[oi(i, j, l)] = kern.cell(c, h);
            }
        }
    }
    let mut table = vec![0.0; n[0] * n[1] * n[2]];
    for i in 0..n[0] {
        for j in 0..n[1] {
            for l in 0..n[2] {
                let a = i.abs_diff(half[0]);
                let b = j.abs_diff(half[1]);
                let c = l.abs_diff(half[2]);
                table[(i * n[1] + j) * n[2] + l] = octant[oi(a, b, c)];
            }
        }
    }
    table
}

/// Riesz potential of `|f|` at an arbitrary point.
pub fn riesz_potential_at(f: &ScalarField, sigma: f64, x: [f64; 3]) -> Result<f64> {
    let g = f.grid;
    check_sigma(sigma, g.dimension())?;
    if g.dimension() == 1 {
        let h = g.spacing(0);
        let mut s = 0.0;
        for (j, &v) in f.values.iter().enumerate() {
            if v != 0.0 {
                let c = g.coordinate(0, j) - x[0];
                s += v.abs() * interval_kernel_integral(c - 0.5 * h, c + 0.5 * h, sigma);
            }
        }
        return Ok(s);
    }
    let kern = BoxKernel::new(sigma)?;
    let h = g.spacings();
    let mut s = 0.0;
    for (j, &v) in f.values.iter().enumerate() {
        if v != 0.0 {
            let y = g.point(j);
            let c = [y[0] - x[0], y[1] - x[1], y[2] - x[2]];
            s += v.abs() * kern.cell(c, h);
        }
    }
    Ok(s)
}

/// Riesz potential in time of `psi` on `[0, T]`, `psi` extended by zero.
pub fn riesz_potential_1d(psi: &ScalarField, sigma: f64) -> Result<ScalarField> {
    if psi.grid.dimension() != 1 {
        return Err(Error::InvalidGrid("time potential needs a 1D grid".into()));
    }
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::InvalidParameter(format!("sigma must lie in ]0, 1[, got {sigma}")));
    }
    riesz_potential_direct(psi, sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, Topology};

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn indicator_closed_form_1d() {
        let g = GridSpec::interval(0.0, 4.0, 8192, Topology::Truncated).unwrap();
        let f = g.sample(|x| if x[0] < 1.0 { 1.0 } else { 0.0 });
        let v = riesz_potential_at(&f, 0.5, [2.0, 0.0, 0.0]).unwrap();
        assert!((v - 2.0 * (2f64.sqrt() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn diagonal_weight_1d() {
        let h = 0.1;
        let w = kernel_weights_1d(3, h, 0.5);
        assert!((w[0] - 2.0 * (h / 2.0f64).powf(0.5) / 0.5).abs() < 1e-15);
    }

    #[test]
    fn cube_weights_sum_to_ball_integral() {
        // cells inside a cube of half-width R: total must equal the integral
        // over that cube, which the face identity computes in one shot
        let kern = BoxKernel::new(1.0).unwrap();
        let h = [0.5; 3];
        let mut total = 0.0;
        for i in -3i32..=3 {
            for j in -3i32..=3 {
                for l in -3i32..=3 {
                    total += kern.cell([i as f64 * 0.5, j as f64 * 0.5, l as f64 * 0.5], h);
                }
            }
        }
        let whole = kern.by_faces([-1.75; 3], [1.75; 3]);
        assert!((total - whole).abs() < 1e-9 * whole, "{total} vs {whole}");
    }

    #[test]
    fn unit_ball_scaling() {
        // integral of |y|^{s-3} over the cube [-a,a]^3 scales like a^s
        let kern = BoxKernel::new(1.5).unwrap();
        let a = kern.by_faces([-1.0; 3], [1.0; 3]);
        let b = kern.by_faces([-2.0; 3], [2.0; 3]);
        assert!((b / a - 2f64.powf(1.5)).abs() < 1e-11);
        // spherical bound: ball of radius 1 inside the cube
        assert!(a > 4.0 * std::f64::consts::PI / 1.5);
    }

    #[test]
    fn regimes_agree_at_boundaries() {
        let kern = BoxKernel::new(1.0).unwrap();
        let h = [1.0; 3];
        for c in [[2.0, 0.0, 0.0], [1.0, 1.0, 1.0], [5.0, 2.0, 0.0], [9.0, 3.0, 1.0]] {
            let lo: [f64; 3] = std::array::from_fn(|a| c[a] - 0.5);
            let hi: [f64; 3] = std::array::from_fn(|a| c[a] + 0.5);
            let faces = kern.by_faces(lo, hi);
            let used = kern.cell(c, h);
            // the far-field Taylor rule is only O((h/r)^4) accurate
            let tol = if c[0] > 8.5 { 1e-5 } else { 1e-7 };
            assert!((faces - used).abs() < tol * faces, "{c:?}: {faces} vs {used}");
        }
    }

    #[test]
    fn field_matches_pointwise_evaluation() {
        let g = GridSpec::centered_cube(2.0, 10, Topology::Truncated).unwrap();
        let f = g.sample(|x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp() * (1.0 + x[0]));
        let full = riesz_potential_direct(&f, 1.0).unwrap();
        for idx in [0, 123, 555, 999] {
            let p = riesz_potential_at(&f, 1.0, g.point(idx)).unwrap();
            assert!((full.values[idx] - p).abs() < 1e-10 * p);
        }
    }

    #[test]
    fn zero_and_sigma_range() {
        let g = GridSpec::interval(0.0, 1.0, 16, Topology::Truncated).unwrap();
        let z = riesz_potential_direct(&ScalarField::zeros(g), 0.3).unwrap();
        assert!(z.values.iter().all(|&v| v == 0.0));
        assert!(riesz_potential_direct(&z, 1.0).is_err());
        assert!(riesz_potential_direct(&z, 0.0).is_err());
        let p = GridSpec::interval(0.0, 1.0, 16, Topology::Periodic).unwrap();
        assert!(riesz_potential_direct(&ScalarField::zeros(p), 0.3).is_err());
    }
}
