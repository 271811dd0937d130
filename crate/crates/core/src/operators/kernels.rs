//! Closed-form heat-kernel quantities.

use crate::error::{Error, Result};

/// `|grad g_t(x)| (t^2 + |x|^4)` for the 3D Gaussian heat kernel
/// `g_t(x) = (4 pi t)^{-3/2} exp(-|x|^2 / 4t)`.
pub fn grad_heat_kernel_defect(t: f64, x: [f64; 3]) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("heat time must be positive, got {t}")));
    }
    let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    let g = (4.0 * std::f64::consts::PI * t).powf(-1.5) * (-r2 / (4.0 * t)).exp();
    let grad = g * r2.sqrt() / (2.0 * t);
    Ok(grad * (t * t + r2 * r2))
}

/// Max of the defect over a log-spaced `n x n` sweep of `t` and `|x|`
/// (points on the first axis).
pub fn grad_heat_sweep(t_range: [f64; 2], r_range: [f64; 2], n: usize) -> Result<f64> {
    if n < 2 || !(t_range[0] > 0.0 && t_range[1] > t_range[0]) || !(r_range[0] > 0.0 && r_range[1] > r_range[0]) {
        return Err(Error::InvalidParameter("sweep needs positive increasing ranges and n >= 2".into()));
    }
    let logspace = |r: [f64; 2], i: usize| r[0] * (r[1] / r[0]).powf(i as f64 / (n - 1) as f64);
    let mut best = 0.0f64;
    for i in 0..n {
        let t = logspace(t_range, i);
        for j in 0..n {
            let r = logspace(r_range, j);
            best = best.max(grad_heat_kernel_defect(t, [r, 0.0, 0.0])?);
        }
    }
    Ok(best)
}
