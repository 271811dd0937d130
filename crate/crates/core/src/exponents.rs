//! Variable exponents `p(.)` sampled on a grid.
//!
//! Every exponent produced here satisfies `1 < p_minus <= p(x) <= p_plus < inf`
//! at each sample, with `p_minus`/`p_plus` the exact min/max of the samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Threshold on the local log-Hölder constant above which an exponent is
/// flagged as not log-Hölder continuous.
pub const DEFAULT_LOG_HOLDER_THRESHOLD: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExponentFamily {
    /// `p(x) = c`; params `[c]`.
    Constant,
    /// `p(x) = p_inf + A / log(e + |x|)`; params `[p_inf, A]`.
    RadialLog,
    /// `p(x) = a + b exp(-|x|^2)`; params `[a, b]`.
    GaussianBump,
    /// `p(x) = a + b prod_i sin(w x_i)^m`; params `[a, b]`, `[a, b, w]` or `[a, b, w, m]`.
    Sinusoidal,
    /// Arbitrary samples; params are ignored.
    CustomSamples,
}

/// Family descriptor, the serialisable recipe for an exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentSpec {
    pub family: ExponentFamily,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl ExponentSpec {
    pub fn new(family: ExponentFamily, params: &[f64]) -> Self {
        ExponentSpec {
            family,
            params: params.to_vec(),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(ExponentFamily::Constant, &[c])
    }

    pub fn sample(&self, grid: &GridSpec) -> Result<ExponentField> {
        make_exponent(self.family, &self.params, grid)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentField {
    samples: Vec<f64>,
    grid: GridSpec,
    p_minus: f64,
    p_plus: f64,
    p_infinity: Option<f64>,
    family: ExponentFamily,
    params: Vec<f64>,
}

impl ExponentField {
    /// Exponent from raw samples (tagged `custom-samples`).
    pub fn from_samples(grid: GridSpec, samples: Vec<f64>, p_infinity: Option<f64>) -> Result<Self> {
        Self::build(grid, samples, p_infinity, ExponentFamily::CustomSamples, Vec::new())
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> f64) -> Result<Self> {
        let samples = grid.points().map(f).collect();
        Self::from_samples(grid, samples, None)
    }

    fn build(
        grid: GridSpec,
        samples: Vec<f64>,
        p_infinity: Option<f64>,
        family: ExponentFamily,
        params: Vec<f64>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidExponent("empty grid".into()));
        }
        if samples.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} exponent samples for a grid of {} points",
                samples.len(),
                grid.len()
            )));
        }
        let mut p_minus = f64::INFINITY;
        let mut p_plus = f64::NEG_INFINITY;
        for &p in &samples {
            if !p.is_finite() {
                return Err(Error::InvalidExponent("exponent supremum is infinite".into()));
            }
            p_minus = p_minus.min(p);
            p_plus = p_plus.max(p);
        }
        if p_minus <= 1.0 {
            return Err(Error::InvalidExponent(format!(
                "exponent infimum {p_minus} must exceed 1"
            )));
        }
        if let Some(pi) = p_infinity {
            if !(pi > 1.0 && pi.is_finite()) {
                return Err(Error::InvalidExponent(format!(
                    "limit exponent {pi} must lie in ]1, inf["
                )));
            }
        }
        Ok(ExponentField {
            samples,
            grid,
            p_minus,
            p_plus,
            p_infinity,
            family,
            params,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn p_minus(&self) -> f64 {
        self.p_minus
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    pub fn p_infinity(&self) -> Option<f64> {
        self.p_infinity
    }

    pub fn family(&self) -> ExponentFamily {
        self.family
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn is_constant(&self) -> bool {
        self.p_minus == self.p_plus
    }

    /// Recompute the closed-form family at each grid point.
    pub fn family_formula(&self) -> Option<Vec<f64>> {
        if self.family == ExponentFamily::CustomSamples {
            return None;
        }
        let f = family_function(self.family, &self.params, self.grid.dimension()).ok()?;
        Some(self.grid.points().map(f).collect())
    }

    /// Pointwise `1/p = 1/q + 1/r`: the exponent of a product of an
    /// `L^q` and an `L^r` function.
    pub fn holder_product(q: &ExponentField, r: &ExponentField) -> Result<Self> {
        q.grid.ensure_same(&r.grid, "holder product")?;
        let samples = q
            .samples
            .iter()
            .zip(&r.samples)
            .map(|(&a, &b)| 1.0 / (1.0 / a + 1.0 / b))
            .collect();
        let p_inf = match (q.p_infinity, r.p_infinity) {
            (Some(a), Some(b)) => Some(1.0 / (1.0 / a + 1.0 / b)),
            _ => None,
        };
        Self::from_samples(q.grid, samples, p_inf)
    }

    /// Pointwise `1/r = 1/p - 1/q`, for `q > p` everywhere.
    pub fn holder_quotient(p: &ExponentField, q: &ExponentField) -> Result<Self> {
        p.grid.ensure_same(&q.grid, "holder quotient")?;
        let mut samples = Vec::with_capacity(p.samples.len());
        for (&a, &b) in p.samples.iter().zip(&q.samples) {
            let inv = 1.0 / a - 1.0 / b;
            if inv <= 0.0 {
                return Err(Error::InvalidExponent(format!(
                    "q = {b} does not exceed p = {a}"
                )));
            }
            samples.push(1.0 / inv);
        }
        Self::from_samples(p.grid, samples, None)
    }

    /// Pointwise map of the samples; the result is tagged `custom-samples`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = self.samples.iter().map(|&p| f(p)).collect();
        Self::from_samples(self.grid, samples, self.p_infinity.map(&f))
    }
}

fn radial(x: [f64; 3], dim: usize) -> f64 {
    x[..dim].iter().map(|v| v * v).sum::<f64>().sqrt()
}

type FamilyFn = Box<dyn Fn([f64; 3]) -> f64 + Send + Sync>;

fn family_function(family: ExponentFamily, params: &[f64], dim: usize) -> Result<FamilyFn> {
    let need = |n: usize| -> Result<()> {
        if params.len() < n {
            return Err(Error::InvalidExponent(format!(
                "{family:?} needs at least {n} parameters, got {}",
                params.len()
            )));
        }
        Ok(())
    };
    let e = std::f64::consts::E;
    Ok(match family {
        ExponentFamily::Constant => {
            need(1)?;
            let c = params[0];
            Box::new(move |_| c)
        }
        ExponentFamily::RadialLog => {
            need(2)?;
            let (p_inf, a) = (params[0], params[1]);
            Box::new(move |x| p_inf + a / (e + radial(x, dim)).ln())
        }
        ExponentFamily::GaussianBump => {
            need(2)?;
            let (a, b) = (params[0], params[1]);
            Box::new(move |x| {
                let r = radial(x, dim);
                a + b * (-r * r).exp()
            })
        }
        ExponentFamily::Sinusoidal => {
            need(2)?;
            let (a, b) = (params[0], params[1]);
            let w = params.get(2).copied().unwrap_or(1.0);
            let m = params.get(3).copied().unwrap_or(1.0);
            if m != 1.0 && m != 2.0 {
                return Err(Error::InvalidExponent(
                    "sinusoidal power must be 1 or 2".into(),
                ));
            }
            Box::new(move |x| {
                let prod: f64 = x[..dim]
                    .iter()
                    .map(|&xi| {
                        let s = (w * xi).sin();
                        if m == 2.0 {
                            s * s
                        } else {
                            s
                        }
                    })
                    .product();
                a + b * prod
            })
        }
        ExponentFamily::CustomSamples => {
            return Err(Error::InvalidExponent(
                "custom-samples has no closed form; use ExponentField::from_samples".into(),
            ))
        }
    })
}

/// Infimum and limit at infinity of a family over the whole space.
fn family_bounds(family: ExponentFamily, params: &[f64]) -> (f64, f64, Option<f64>) {
    match family {
        ExponentFamily::Constant => (params[0], params[0], Some(params[0])),
        ExponentFamily::RadialLog | ExponentFamily::GaussianBump => {
            // RadialLog: A / log(e + r) ranges over ]0, A]; GaussianBump: b exp(-r^2) over ]0, b].
            let (base, amp) = (params[0], params[1]);
            (base + amp.min(0.0), base + amp.max(0.0), Some(base))
        }
        ExponentFamily::Sinusoidal => {
            let (a, b) = (params[0], params[1]);
            let m = params.get(3).copied().unwrap_or(1.0);
            if m == 2.0 {
                (a + b.min(0.0), a + b.max(0.0), None)
            } else {
                (a - b.abs(), a + b.abs(), None)
            }
        }
        ExponentFamily::CustomSamples => (f64::NAN, f64::NAN, None),
    }
}

/// Sample a closed-form exponent family on `grid`.
pub fn make_exponent(family: ExponentFamily, params: &[f64], grid: &GridSpec) -> Result<ExponentField> {
    if grid.is_empty() {
        return Err(Error::InvalidExponent("empty grid".into()));
    }
    let f = family_function(family, params, grid.dimension())?;
    if params.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidExponent("non-finite family parameter".into()));
    }
    let (inf, sup, p_inf) = family_bounds(family, params);
    if inf <= 1.0 {
        return Err(Error::InvalidExponent(format!(
            "{family:?} with params {params:?} has infimum {inf} <= 1"
        )));
    }
    if !sup.is_finite() {
        return Err(Error::InvalidExponent("exponent supremum is infinite".into()));
    }
    let samples = grid.points().map(f).collect();
    ExponentField::build(*grid, samples, p_inf, family, params.to_vec())
}

/// Pointwise conjugate exponent `p' = p / (p - 1)`.
pub fn conjugate_exponent(p: &ExponentField) -> ExponentField {
    let conj = |v: f64| v / (v - 1.0);
    let samples: Vec<f64> = p.samples.iter().map(|&v| conj(v)).collect();
    // p_minus > 1 and p_plus < inf guarantee the conjugate is admissible.
    ExponentField::build(
        p.grid,
        samples,
        p.p_infinity.map(conj),
        ExponentFamily::CustomSamples,
        Vec::new(),
    )
    .expect("conjugate of an admissible exponent is admissible")
}

/// Pointwise `factor * p`.
pub fn scale_exponent(p: &ExponentField, factor: f64) -> Result<ExponentField> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "scale factor must be positive, got {factor}"
        )));
    }
    if factor * p.p_minus <= 1.0 {
        return Err(Error::InvalidExponent(format!(
            "scaled infimum {} must exceed 1",
            factor * p.p_minus
        )));
    }
    let samples = p.samples.iter().map(|&v| factor * v).collect();
    let (family, params) = if p.family == ExponentFamily::Constant {
        (ExponentFamily::Constant, vec![factor * p.params[0]])
    } else {
        (ExponentFamily::CustomSamples, Vec::new())
    };
    ExponentField::build(p.grid, samples, p.p_infinity.map(|v| factor * v), family, params)
}

/// Empirical constants of the two log-Hölder conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogHolderReport {
    /// Max of `|1/p(x) - 1/p(y)| log(e + 1/|x - y|)` over examined pairs.
    pub c_local: f64,
    /// Max of `|1/p(x) - 1/p_inf| log(e + |x|)` over examined points.
    pub c_decay: Option<f64>,
    pub pair_count: u64,
}

impl LogHolderReport {
    pub fn flagged(&self, threshold: f64) -> bool {
        self.c_local > threshold || self.c_decay.is_some_and(|c| c > threshold)
    }
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Estimate the log-Hölder constants of `p`.
///
/// All pairs are examined when their number fits in `pair_budget`; otherwise
/// `pair_budget` pairs are drawn from a seeded stream, so a larger budget with
/// the same seed examines a superset of pairs. The decay scan follows the same
/// rule over single points.
pub fn log_holder_constants(p: &ExponentField, pair_budget: u64, seed: u64) -> LogHolderReport {
    let n = p.samples.len();
    let grid = &p.grid;
    let e = std::f64::consts::E;
    let inv: Vec<f64> = p.samples.iter().map(|v| 1.0 / v).collect();
    let pts: Vec<[f64; 3]> = grid.points().collect();

    let total_pairs = (n as u64) * (n as u64 - 1) / 2;
    let mut c_local = 0.0f64;
    let mut pair_count = 0u64;
    let local = |i: usize, j: usize| (inv[i] - inv[j]).abs() * (e + 1.0 / distance(pts[i], pts[j])).ln();
    if total_pairs <= pair_budget {
        for i in 0..n {
            for j in (i + 1)..n {
                c_local = c_local.max(local(i, j));
            }
        }
        pair_count = total_pairs;
    } else if n > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..pair_budget {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            c_local = c_local.max(local(i, j));
            pair_count += 1;
        }
    }

    let c_decay = p.p_infinity.map(|p_inf| {
        let decay = |i: usize| (inv[i] - 1.0 / p_inf).abs() * (e + radial(pts[i], grid.dimension())).ln();
        if (n as u64) <= pair_budget {
            (0..n).map(decay).fold(0.0, f64::max)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
            (0..pair_budget)
                .map(|_| decay(rng.gen_range(0..n)))
                .fold(0.0, f64::max)
        }
    });

    LogHolderReport {
        c_local,
        c_decay,
        pair_count,
    }
}
