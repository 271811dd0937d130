//! Centred Hardy–Littlewood maximal function over discrete balls, and the
//! radial-majorant ratio `|phi * f| / (|phi|_1 M f)`.
//!
//! The discrete ball of radius `r` around a grid point holds the cells whose
//! centres lie at distance strictly less than `r`. Truncated grids extend `f`
//! by zero, so a ball always has the same number of cells.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::operators::convolve::{offsets, Convolver};

fn offset_distance2(o: [i64; 3], h: [f64; 3]) -> f64 {
    (0..3).map(|a| (o[a] as f64 * h[a]).powi(2)).sum()
}

fn stencil_half(grid: &GridSpec, r: f64) -> [usize; 3] {
    let h = grid.spacings();
    let mut half = [0usize; 3];
    for a in 0..grid.dimension() {
        half[a] = (r / h[a]).ceil() as usize;
    }
    half
}

/// Integer offsets of the discrete ball of radius `r`.
pub fn ball_offsets(grid: &GridSpec, r: f64) -> Vec<[i64; 3]> {
    let h = grid.spacings();
    let r2 = r * r;
    offsets(stencil_half(grid, r))
        .filter(|&o| offset_distance2(o, h) < r2)
        .collect()
}

/// `count` radii spaced geometrically from one cell to half the smallest extent.
pub fn geometric_radii(grid: &GridSpec, count: usize) -> Vec<f64> {
    let h = (0..grid.dimension()).map(|a| grid.spacing(a)).fold(f64::INFINITY, f64::min);
    let big = 0.5 * grid.extents().iter().copied().fold(f64::INFINITY, f64::min);
    if count <= 1 {
        return vec![h];
    }
    (0..count)
        .map(|i| h * (big / h).powf(i as f64 / (count - 1) as f64))
        .collect()
}

/// One radius strictly between each pair of consecutive distinct offset
/// distances, covering every distance up to `max_distance`. The first radius
/// selects the single centre cell.
pub fn distinct_radii(grid: &GridSpec, max_distance: f64) -> Vec<f64> {
    let h = grid.spacings();
    let mut half = stencil_half(grid, max_distance);
    for a in 0..grid.dimension() {
        half[a] += 1;
    }
    let mut d2: Vec<f64> = offsets(half).map(|o| offset_distance2(o, h)).collect();
    d2.sort_by(|a, b| a.total_cmp(b));
    d2.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.max(1e-300));
    let mut radii = Vec::new();
    for w in d2.windows(2) {
        let (a, b) = (w[0].sqrt(), w[1].sqrt());
        if a > max_distance * (1.0 + 1e-12) {
            break;
        }
        radii.push(0.5 * (a + b));
    }
    radii
}

/// `max_r` of the average of `|f|` over the discrete ball of radius `r`.
pub fn maximal_function(f: &ScalarField, radii: &[f64]) -> Result<ScalarField> {
    if radii.is_empty() {
        return Err(Error::InvalidParameter("radius list is empty".into()));
    }
    let limit = 0.5 * f.grid.extents().iter().copied().fold(0.0, f64::max);
    for &r in radii {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("radius {r} must be positive")));
        }
        if r > limit * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "radius {r} exceeds half the domain extent {limit}"
            )));
        }
    }
    let abs = f.abs();
    let rmax = radii.iter().copied().fold(0.0, f64::max);
    let mut conv: Option<Convolver> = None;
    let mut out = vec![f64::NEG_INFINITY; f.values.len()];
    for &r in radii {
        let ball = ball_offsets(&f.grid, r);
        let avg: Vec<f64> = if ball.len() <= 1 {
            abs.values.clone()
        } else {
            if conv.is_none() {
                conv = Some(Convolver::new(&abs, stencil_half(&f.grid, rmax))?);
            }
            let w = 1.0 / ball.len() as f64;
            conv.as_mut()
                .expect("initialised above")
                .apply(ball.into_iter().map(|o| (o, w)))
        };
        for (o, a) in out.iter_mut().zip(avg) {
            *o = o.max(a);
        }
    }
    Ok(ScalarField {
        grid: f.grid,
        values: out,
    })
}

/// Check that `phi` is a nonnegative, radially nonincreasing kernel on a
/// centred kernel grid that vanishes beyond the inscribed radius. Returns the
/// largest offset distance carrying a positive value.
pub fn check_radial_kernel(phi: &ScalarField) -> Result<f64> {
    let g = phi.grid;
    let h = g.spacings();
    let shape = g.shape();
    let mut half = [0usize; 3];
    for a in 0..g.dimension() {
        if shape[a] % 2 == 0 {
            return Err(Error::NotRadial("kernel grid needs an odd resolution".into()));
        }
        half[a] = shape[a] / 2;
        let centre = g.coordinate(a, half[a]);
        if centre.abs() > 1e-9 * h[a] {
            return Err(Error::NotRadial("kernel grid is not centred at the origin".into()));
        }
    }
    let inscribed = (0..g.dimension())
        .map(|a| half[a] as f64 * h[a])
        .fold(f64::INFINITY, f64::min);
    let max = phi.max_abs();
    let slack = 1e-12 * max;
    let mut entries: Vec<(f64, f64)> = Vec::with_capacity(phi.values.len());
    let mut support = 0.0f64;
    for (idx, &v) in phi.values.iter().enumerate() {
        if !(v >= 0.0) {
            return Err(Error::NotRadial(format!("negative value {v} at point {idx}")));
        }
        let m = g.multi_index(idx);
        let o = [
            m[0] as i64 - half[0] as i64,
            m[1] as i64 - half[1] as i64,
            m[2] as i64 - half[2] as i64,
        ];
        let d = offset_distance2(o, h).sqrt();
        if v > 0.0 {
            if d > inscribed * (1.0 + 1e-12) {
                return Err(Error::NotRadial(format!(
                    "kernel is nonzero at distance {d}, beyond the inscribed radius {inscribed}"
                )));
            }
            support = support.max(d);
        }
        entries.push((d, v));
    }
    entries.sort_by(|a, b| a.0.total_cmp(&b.0));
    // running minimum over strictly smaller distances must dominate
    let mut i = 0;
    let mut floor = f64::INFINITY;
    while i < entries.len() {
        let d = entries[i].0;
        let mut j = i;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        while j < entries.len() && (entries[j].0 - d).abs() <= 1e-12 * d.max(1e-300) {
            lo = lo.min(entries[j].1);
            hi = hi.max(entries[j].1);
            j += 1;
        }
        if hi - lo > slack {
            return Err(Error::NotRadial(format!("values differ at distance {d}")));
        }
        if hi > floor + slack {
            return Err(Error::NotRadial(format!("kernel increases at distance {d}")));
        }
        floor = floor.min(lo);
        i = j;
    }
    Ok(support)
}

/// `max_x |(phi * f)(x)| / (|phi|_1 M f(x))` with the maximal function taken
/// over every distinct ball radius inside the support of `phi`.
///
/// Points where `M f` is below `1e-9` of its maximum are skipped.
pub fn radial_majorant_defect(phi: &ScalarField, f: &ScalarField) -> Result<f64> {
    let support = check_radial_kernel(phi)?;
    let g = f.grid;
    if phi.grid.dimension() != g.dimension()
        || (0..g.dimension()).any(|a| (phi.grid.spacing(a) - g.spacing(a)).abs() > 1e-12 * g.spacing(a))
    {
        return Err(Error::GridMismatch("kernel spacing differs from the field grid".into()));
    }
    let l1 = phi.integral();
    if l1 == 0.0 {
        return Err(Error::UndefinedRatio("kernel has zero mass".into()));
    }
    let kshape = phi.grid.shape();
    let half = kshape.map(|n| n / 2);
    let mut conv = Convolver::new(f, half)?;
    let cell = g.cell_volume();
    let kernel = phi.values.iter().enumerate().filter(|(_, &v)| v > 0.0).map(|(idx, &v)| {
        let m = phi.grid.multi_index(idx);
        (
            [
                m[0] as i64 - half[0] as i64,
                m[1] as i64 - half[1] as i64,
                m[2] as i64 - half[2] as i64,
            ],
            v * cell,
        )
    });
    let smooth = conv.apply(kernel);
    let radii = distinct_radii(&g, support);
    let mf = maximal_function(f, &radii)?;
    let peak = mf.max_abs();
    if peak == 0.0 {
        return Err(Error::UndefinedRatio("maximal function vanishes".into()));
    }
    let mut worst = 0.0f64;
    for (s, m) in smooth.iter().zip(&mf.values) {
        if *m > 1e-9 * peak {
            worst = worst.max(s.abs() / (l1 * m));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Topology;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(f: &ScalarField, radii: &[f64], idx: usize) -> f64 {
        let g = f.grid;
        let x = g.point(idx);
        let mut best = f64::NEG_INFINITY;
        for &r in radii {
            // zero-extended: count every lattice offset in the ball
            let count = ball_offsets(&g, r).len() as f64;
            let mut s = 0.0;
            for (j, y) in g.points().enumerate() {
                let d2: f64 = (0..3).map(|a| (x[a] - y[a]).powi(2)).sum();
                if d2 < r * r * (1.0 - 1e-14) {
                    s += f.values[j].abs();
                }
            }
            best = best.max(s / count);
        }
        best
    }

    #[test]
    fn constant_field() {
        let g = GridSpec::interval(0.0, 1.0, 64, Topology::Truncated).unwrap();
        let f = ScalarField::constant(g, -2.0);
        let m = maximal_function(&f, &geometric_radii(&g, 12)).unwrap();
        assert!(m.values.iter().all(|&v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn indicator_of_ball_at_centre() {
        let g = GridSpec::centered_cube(2.0, 21, Topology::Truncated).unwrap();
        let f = g.sample(|x| if x[0] * x[0] + x[1] * x[1] + x[2] * x[2] < 1.0 { 1.0 } else { 0.0 });
        let m = maximal_function(&f, &[0.3, 0.6, 0.95]).unwrap();
        let centre = g.flat_index([10, 10, 10]);
        assert!((m.values[centre] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_brute_force() {
        let g = GridSpec::centered_cube(2.0, 12, Topology::Truncated).unwrap();
        let f = g.sample(|x| (-(x[0] * x[0] + 2.0 * x[1] * x[1] + x[2] * x[2])).exp() - 0.1 * x[2]);
        let radii = geometric_radii(&g, 8);
        let m = maximal_function(&f, &radii).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let idx = rng.gen_range(0..g.len());
            assert!((m.values[idx] - brute(&f, &radii, idx)).abs() < 1e-10);
        }
    }

    #[test]
    fn dominates_absolute_value() {
        let g = GridSpec::interval(-3.0, 3.0, 200, Topology::Periodic).unwrap();
        let f = g.sample(|x| (5.0 * x[0]).sin() * x[0]);
        let m = maximal_function(&f, &geometric_radii(&g, 12)).unwrap();
        for (a, b) in m.values.iter().zip(&f.values) {
            assert!(*a >= b.abs());
        }
    }

    #[test]
    fn distinct_radii_start_with_single_cell() {
        let g = GridSpec::centered_cube(1.0, 10, Topology::Truncated).unwrap();
        let r = distinct_radii(&g, 0.45);
        assert_eq!(ball_offsets(&g, r[0]).len(), 1);
        assert_eq!(ball_offsets(&g, r[1]).len(), 7);
        assert_eq!(ball_offsets(&g, r[2]).len(), 19);
        assert!(r.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn radial_checks() {
        let g = GridSpec::interval(-1.0, 1.0, 40, Topology::Truncated).unwrap();
        let k = g.kernel_grid(5).unwrap();
        let phi = k.sample(|x| (1.0 - x[0].abs() / 0.26).max(0.0));
        assert!(check_radial_kernel(&phi).is_ok());
        let bad = k.sample(|x| x[0].abs());
        assert!(matches!(check_radial_kernel(&bad), Err(Error::NotRadial(_))));
        let cube = GridSpec::centered_cube(1.0, 20, Topology::Truncated).unwrap().kernel_grid(3).unwrap();
        let wide = cube.sample(|_| 1.0);
        assert!(matches!(check_radial_kernel(&wide), Err(Error::NotRadial(_))));
    }

    #[test]
    fn ball_average_kernel_has_unit_ratio() {
        let g = GridSpec::interval(-2.0, 2.0, 128, Topology::Truncated).unwrap();
        let k = g.kernel_grid(8).unwrap();
        let phi = k.sample(|x| if x[0].abs() < 0.2 { 1.0 } else { 0.0 });
        let f = g.sample(|x| (3.0 * x[0]).cos() * (-x[0] * x[0]).exp());
        let r = radial_majorant_defect(&phi, &f).unwrap();
        assert!(r <= 1.0 + 1e-12, "{r}");
        let c = ScalarField::constant(g, 3.0);
        let r = radial_majorant_defect(&phi, &c).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }
}
