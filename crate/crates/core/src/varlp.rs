//! Modular, Luxemburg and mixed norms, plus the ratio checks built on them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{conjugate_exponent, ExponentField};
use crate::grid::{compensated_sum, ScalarField};

/// Hard cap on bisection and bracketing steps.
const MAX_ITERATIONS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Luxemburg,
    Classical,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub value: f64,
    pub kind: NormKind,
    /// Half-width of the final bisection bracket (0 for closed-form results).
    pub tolerance: f64,
}

/// Quadrature weights attached to samples.
#[derive(Debug, Clone, Copy)]
pub enum Weights<'a> {
    Uniform(f64),
    PerPoint(&'a [f64]),
}

impl Weights<'_> {
    fn get(&self, i: usize) -> f64 {
        match self {
            Weights::Uniform(w) => *w,
            Weights::PerPoint(w) => w[i],
        }
    }
}

fn check_grids(f: &ScalarField, p: &ExponentField) -> Result<()> {
    f.grid.ensure_same(p.grid(), "field and exponent")
}

/// `sum |f|^p * cell` over the grid.
pub fn modular(f: &ScalarField, p: &ExponentField) -> Result<f64> {
    check_grids(f, p)?;
    let w = f.grid.cell_volume();
    Ok(w * compensated_sum(
        f.values
            .iter()
            .zip(p.samples())
            .map(|(&v, &e)| if v == 0.0 { 0.0 } else { v.abs().powf(e) }),
    ))
}

/// Modular of `f / lambda`, evaluated in log space to avoid overflow.
struct ScaledModular {
    log_abs: Vec<f64>,
    exps: Vec<f64>,
    weights: Vec<f64>,
}

impl ScaledModular {
    fn new(values: &[f64], exps: &[f64], weights: Weights) -> Self {
        let mut m = ScaledModular {
            log_abs: Vec::new(),
            exps: Vec::new(),
            weights: Vec::new(),
        };
        for (i, (&v, &e)) in values.iter().zip(exps).enumerate() {
            let w = weights.get(i);
            if v != 0.0 && w > 0.0 {
                m.log_abs.push(v.abs().ln());
                m.exps.push(e);
                m.weights.push(w);
            }
        }
        m
    }

    fn at(&self, lambda: f64) -> f64 {
        let l = lambda.ln();
        compensated_sum(
            self.log_abs
                .iter()
                .zip(&self.exps)
                .zip(&self.weights)
                .map(|((&a, &e), &w)| w * (e * (a - l)).exp()),
        )
    }
}

/// Luxemburg norm of samples with per-point exponents and quadrature weights.
///
/// The root of `lambda -> modular(f / lambda) - 1` is bracketed by doubling or
/// halving from the classical `p_minus` norm, then bisected until the bracket
/// half-width is at most `tol`. The midpoint is returned.
pub fn luxemburg_norm_weighted(
    values: &[f64],
    exps: &[f64],
    weights: Weights,
    tol: f64,
) -> Result<NormValue> {
    if values.len() != exps.len() {
        return Err(Error::GridMismatch(format!(
            "{} values against {} exponent samples",
            values.len(),
            exps.len()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite field value".into()));
    }
    let m = ScaledModular::new(values, exps, weights);
    if m.log_abs.is_empty() {
        return Ok(NormValue {
            value: 0.0,
            kind: NormKind::Luxemburg,
            tolerance: 0.0,
        });
    }

    let p_minus = m.exps.iter().copied().fold(f64::INFINITY, f64::min);
    let seed_mass = compensated_sum(
        m.log_abs
            .iter()
            .zip(&m.weights)
            .map(|(&a, &w)| w * (p_minus * a).exp()),
    );
    let mut seed = seed_mass.powf(1.0 / p_minus);
    if !(seed.is_finite() && seed > 0.0) {
        seed = m.log_abs.iter().copied().fold(f64::NEG_INFINITY, f64::max).exp();
    }

    let (mut lo, mut hi);
    let r0 = m.at(seed);
    if r0 == 1.0 {
        return Ok(NormValue {
            value: seed,
            kind: NormKind::Luxemburg,
            tolerance: 0.0,
        });
    }
    let mut steps = 0;
    if r0 > 1.0 {
        lo = seed;
        hi = 2.0 * seed;
        while m.at(hi) > 1.0 {
            lo = hi;
            hi *= 2.0;
            steps += 1;
            if steps > MAX_ITERATIONS || !hi.is_finite() {
                return Err(Error::NonConvergence { iterations: steps, lo, hi });
            }
        }
    } else {
        hi = seed;
        lo = 0.5 * seed;
        while m.at(lo) <= 1.0 {
            hi = lo;
            lo *= 0.5;
            steps += 1;
            if steps > MAX_ITERATIONS || lo == 0.0 {
                return Err(Error::NonConvergence { iterations: steps, lo, hi });
            }
        }
    }

    // invariant: modular(lo) > 1 >= modular(hi)
    let mut iterations = 0;
    while 0.5 * (hi - lo) > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || iterations >= MAX_ITERATIONS {
            return Err(Error::NonConvergence { iterations, lo, hi });
        }
        let r = m.at(mid);
        if r == 1.0 {
            return Ok(NormValue {
                value: mid,
                kind: NormKind::Luxemburg,
                tolerance: 0.0,
            });
        }
        if r > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(NormValue {
        value: 0.5 * (lo + hi),
        kind: NormKind::Luxemburg,
        tolerance: 0.5 * (hi - lo),
    })
}

pub fn luxemburg_norm(f: &ScalarField, p: &ExponentField, tol: f64) -> Result<NormValue> {
    check_grids(f, p)?;
    luxemburg_norm_weighted(
        &f.values,
        p.samples(),
        Weights::Uniform(f.grid.cell_volume()),
        tol,
    )
}

/// Classical `L^p` norm by midpoint quadrature.
pub fn classical_norm(f: &ScalarField, p: f64) -> Result<NormValue> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("classical exponent {p} out of range")));
    }
    let s = compensated_sum(f.values.iter().map(|v| v.abs().powf(p)));
    Ok(NormValue {
        value: (f.grid.cell_volume() * s).powf(1.0 / p),
        kind: NormKind::Classical,
        tolerance: 0.0,
    })
}

/// `max(|f|_{L^p(.)}, |f|_{L^frak_p})`.
pub fn mixed_norm(f: &ScalarField, p: &ExponentField, frak_p: f64, tol: f64) -> Result<NormValue> {
    if !(frak_p > 1.0 && frak_p.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "mixed index must lie in ]1, inf[, got {frak_p}"
        )));
    }
    let lux = luxemburg_norm(f, p, tol)?;
    let classical = classical_norm(f, frak_p)?;
    Ok(NormValue {
        value: lux.value.max(classical.value),
        kind: NormKind::Mixed,
        tolerance: lux.tolerance,
    })
}

/// `|fg|_p / (|f|_q |g|_r)` for exponents with `1/p = 1/q + 1/r`.
pub fn holder_defect(
    f: &ScalarField,
    g: &ScalarField,
    p: &ExponentField,
    q: &ExponentField,
    r: &ExponentField,
    tol: f64,
) -> Result<f64> {
    for (i, ((&a, &b), &c)) in p.samples().iter().zip(q.samples()).zip(r.samples()).enumerate() {
        if (1.0 / a - 1.0 / b - 1.0 / c).abs() > 1e-12 {
            return Err(Error::InvalidExponent(format!(
                "1/p != 1/q + 1/r at grid point {i}"
            )));
        }
    }
    let fg = f.zip_with(g, |a, b| a * b)?;
    let num = luxemburg_norm(&fg, p, tol)?.value;
    let nf = luxemburg_norm(f, q, tol)?.value;
    let ng = luxemburg_norm(g, r, tol)?.value;
    if nf == 0.0 || ng == 0.0 {
        return Err(Error::UndefinedRatio("a Hölder factor has zero norm".into()));
    }
    Ok(num / (nf * ng))
}

/// Largest `int |f||g|` over generated `g` with `|g|_{p'} = 1`.
///
/// The first candidate is `|f/|f|_p|^{p-1}`, which attains `|f|_p` exactly
/// when normalised; the second is `|f|^{p-1}`; the remaining ones are seeded
/// multiplicative perturbations of the first.
pub fn conjugate_pairing_lower_bound(
    f: &ScalarField,
    p: &ExponentField,
    candidates: usize,
    seed: u64,
    tol: f64,
) -> Result<f64> {
    check_grids(f, p)?;
    let norm = luxemburg_norm(f, p, tol)?.value;
    if norm == 0.0 {
        return Ok(0.0);
    }
    let pc = conjugate_exponent(p);
    let cell = f.grid.cell_volume();
    let abs: Vec<f64> = f.values.iter().map(|v| v.abs()).collect();
    let canonical: Vec<f64> = abs
        .iter()
        .zip(p.samples())
        .map(|(&a, &e)| (a / norm).powf(e - 1.0))
        .collect();

    let pairing = |g: Vec<f64>| -> Result<f64> {
        let gn = luxemburg_norm_weighted(&g, pc.samples(), Weights::Uniform(cell), tol)?.value;
        if gn == 0.0 {
            return Ok(0.0);
        }
        Ok(cell * compensated_sum(abs.iter().zip(&g).map(|(&a, &b)| a * b)) / gn)
    };

    let mut best = pairing(canonical.clone())?;
    if candidates > 1 {
        let plain = abs
            .iter()
            .zip(p.samples())
            .map(|(&a, &e)| a.powf(e - 1.0))
            .collect();
        best = best.max(pairing(plain)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 2..candidates {
        let g = canonical
            .iter()
            .map(|&c| c * (1.0 + 0.5 * rng.gen_range(-1.0..1.0)))
            .collect();
        best = best.max(pairing(g)?);
    }
    Ok(best)
}

/// Luxemburg norm of the constant function 1 on the interval carrying `p`.
pub fn unit_function_norm(p: &ExponentField, tol: f64) -> Result<NormValue> {
    let ones = ScalarField::constant(*p.grid(), 1.0);
    luxemburg_norm(&ones, p, tol)
}

/// `(min, max)` of `T^{1/p_minus}` and `T^{1/p_plus}`.
pub fn unit_norm_bracket(t: f64, p_minus: f64, p_plus: f64) -> (f64, f64) {
    let a = t.powf(1.0 / p_minus);
    let b = t.powf(1.0 / p_plus);
    (a.min(b), a.max(b))
}

/// `|f|_{p1} / |f|_{p2}` on a bounded domain, for `p1 <= p2` pointwise.
pub fn embedding_defect(f: &ScalarField, p1: &ExponentField, p2: &ExponentField, tol: f64) -> Result<f64> {
    if f.grid.is_periodic() {
        return Err(Error::NotTruncated);
    }
    p1.grid().ensure_same(p2.grid(), "embedding exponents")?;
    for (index, (&a, &b)) in p1.samples().iter().zip(p2.samples()).enumerate() {
        if a > b {
            return Err(Error::OrderViolation { index, p1: a, p2: b });
        }
    }
    let n1 = luxemburg_norm(f, p1, tol)?.value;
    let n2 = luxemburg_norm(f, p2, tol)?.value;
    if n2 == 0.0 {
        return Err(Error::UndefinedRatio("zero field in embedding ratio".into()));
    }
    Ok(n1 / n2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::{make_exponent, ExponentFamily};
    use crate::grid::{GridSpec, Topology};

    fn line(a: f64, b: f64, n: usize) -> GridSpec {
        GridSpec::interval(a, b, n, Topology::Truncated).unwrap()
    }

    fn constant(g: &GridSpec, c: f64) -> ExponentField {
        make_exponent(ExponentFamily::Constant, &[c], g).unwrap()
    }

    #[test]
    fn modular_of_indicator_is_measure() {
        let g = line(0.0, 4.0, 400);
        let f = g.sample(|x| if x[0] < 1.5 { 1.0 } else { 0.0 });
        let p = make_exponent(ExponentFamily::RadialLog, &[2.0, 3.0], &g).unwrap();
        assert!((modular(&f, &p).unwrap() - 1.5).abs() < 1e-13);
        assert_eq!(modular(&ScalarField::zeros(g), &p).unwrap(), 0.0);
    }

    #[test]
    fn modular_of_exponential() {
        // midpoint sum of exp(-2|x|) with a cell edge at 0 is h / sinh(h)
        let g = line(-20.0, 20.0, 4096);
        let h = g.spacing(0);
        let f = g.sample(|x| (-x[0].abs()).exp());
        let m = modular(&f, &constant(&g, 2.0)).unwrap();
        assert!((m - h / h.sinh()).abs() < 1e-12, "{m}");
        let g = line(-20.0, 20.0, 32768);
        let f = g.sample(|x| (-x[0].abs()).exp());
        let m = modular(&f, &constant(&g, 2.0)).unwrap();
        assert!((m - 1.0).abs() < 1e-6, "{m}");
    }

    #[test]
    fn luxemburg_closed_forms() {
        let g = line(0.0, 2.0, 200);
        let ind = g.sample(|x| if x[0] < 1.0 { 1.0 } else { 0.0 });
        let p = make_exponent(ExponentFamily::GaussianBump, &[1.5, 2.0], &g).unwrap();
        let n = luxemburg_norm(&ind, &p, 1e-10).unwrap();
        assert!((n.value - 1.0).abs() <= 1e-10);
        let n = luxemburg_norm(&ind.scaled(3.5), &constant(&g, 3.0), 1e-10).unwrap();
        assert!((n.value - 3.5).abs() <= 1e-10);
        let n = luxemburg_norm(&ScalarField::zeros(g), &p, 1e-10).unwrap();
        assert_eq!(n.value, 0.0);

        let g = line(-20.0, 20.0, 32768);
        let f = g.sample(|x| (-x[0].abs()).exp());
        let n = luxemburg_norm(&f, &constant(&g, 2.0), 1e-9).unwrap();
        assert!((n.value - 1.0).abs() < 2e-6);
        assert!(n.tolerance <= 1e-9);
    }

    #[test]
    fn extreme_scales_are_bracketed() {
        let g = line(0.0, 1.0, 50);
        let p = constant(&g, 2.0);
        for scale in [1e-150, 1e150] {
            let f = ScalarField::constant(g, scale);
            let n = luxemburg_norm(&f, &p, scale * 1e-10).unwrap();
            assert!((n.value / scale - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn unreachable_tolerance_reports_nonconvergence() {
        let g = line(0.0, 1.0, 10);
        let f = g.sample(|x| 1e6 * (1.0 + x[0]));
        let err = luxemburg_norm(&f, &constant(&g, 3.0), 1e-300).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }

    #[test]
    fn mixed_norm_takes_max() {
        // f = 2^{-1/2} on [0, 4]: L^4 norm (4/4)^{1/4} = 1, L^2 norm (4/2)^{1/2} = sqrt 2
        let g = line(0.0, 4.0, 64);
        let f = ScalarField::constant(g, 1.0 / 2f64.sqrt());
        let m = mixed_norm(&f, &constant(&g, 4.0), 2.0, 1e-12).unwrap();
        assert!((m.value - 2f64.sqrt()).abs() < 1e-12);
        let z = mixed_norm(&ScalarField::zeros(g), &constant(&g, 4.0), 2.0, 1e-12).unwrap();
        assert_eq!(z.value, 0.0);
    }

    #[test]
    fn holder_equality_cases() {
        let g = line(0.0, 2.0, 100);
        let ind = g.sample(|x| if x[0] < 1.0 { 1.0 } else { 0.0 });
        let (p, q) = (constant(&g, 2.0), constant(&g, 4.0));
        let d = holder_defect(&ind, &ind, &p, &q, &q, 1e-12).unwrap();
        assert!((d - 1.0).abs() < 1e-10);
        let f = g.sample(|x| (x[0] - 0.3).sin() + 0.2);
        let p = constant(&g, 1.7);
        let q = constant(&g, 3.4);
        let d = holder_defect(&f, &f, &p, &q, &q, 1e-13).unwrap();
        assert!((d - 1.0).abs() < 1e-10, "{d}");
        let z = ScalarField::zeros(g);
        assert!(matches!(
            holder_defect(&z, &f, &p, &q, &q, 1e-12),
            Err(Error::UndefinedRatio(_))
        ));
    }

    #[test]
    fn pairing_is_self_dual_for_p2() {
        let g = line(-5.0, 5.0, 500);
        let f = g.sample(|x| (x[0] * 1.3).cos() * (-x[0] * x[0] / 4.0).exp());
        let p = constant(&g, 2.0);
        let l2 = classical_norm(&f, 2.0).unwrap().value;
        let v = conjugate_pairing_lower_bound(&f, &p, 8, 1, 1e-12).unwrap();
        assert!((v - l2).abs() < 1e-6);
    }

    #[test]
    fn pairing_of_indicator_is_one() {
        let g = line(0.0, 3.0, 300);
        let ind = g.sample(|x| if x[0] < 1.0 { 1.0 } else { 0.0 });
        let p = make_exponent(ExponentFamily::RadialLog, &[2.0, 1.0], &g).unwrap();
        let v = conjugate_pairing_lower_bound(&ind, &p, 4, 3, 1e-12).unwrap();
        assert!((v - 1.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn unit_function_norm_closed_forms() {
        let g = line(0.0, 1.0, 64);
        let p = make_exponent(ExponentFamily::GaussianBump, &[2.0, 1.0], &g).unwrap();
        assert!((unit_function_norm(&p, 1e-12).unwrap().value - 1.0).abs() < 1e-12);
        for t in [0.25, 3.0, 7.5] {
            let g = line(0.0, t, 32);
            let v = unit_function_norm(&constant(&g, 3.0), 1e-13).unwrap().value;
            assert!((v - t.powf(1.0 / 3.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn embedding_checks_order() {
        let g = line(0.0, 1.0, 40);
        let ind = ScalarField::constant(g, 1.0);
        let d = embedding_defect(&ind, &constant(&g, 2.0), &constant(&g, 4.0), 1e-12).unwrap();
        assert!((d - 1.0).abs() < 1e-11);
        let p = make_exponent(ExponentFamily::GaussianBump, &[2.0, 1.0], &g).unwrap();
        let f = g.sample(|x| 1.0 + x[0]);
        assert_eq!(embedding_defect(&f, &p, &p, 1e-12).unwrap(), 1.0);
        let err = embedding_defect(&f, &constant(&g, 4.0), &constant(&g, 2.0), 1e-12).unwrap_err();
        assert!(matches!(err, Error::OrderViolation { index: 0, .. }));
    }
}
