//! Banach–Picard iteration `u = e0 - B(u, u)` for the Duhamel formulation.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{ExponentField, ExponentSpec};
use crate::grid::{GridSpec, TensorField, VectorField};
use crate::mild_solver::norms::ENorm;
use crate::mild_solver::spacetime::SpaceTimeField;
use crate::operators::spectral::relative_divergence;
use crate::operators::{DuhamelStream, SpectralWorkspace, TimeGrid};

/// Number of candidate horizons scanned for the largest admissible `T`.
pub const HORIZON_LADDER_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Thm1,
    Thm2,
}

/// External force.
#[derive(Debug, Clone)]
pub enum Force {
    None,
    /// Time-independent tensor potential; the force is its row divergence.
    Tensor(TensorField),
    /// Time-independent vector force.
    Steady(VectorField),
    /// Force sampled on the time nodes of the configured time grid.
    Sampled(SpaceTimeField),
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub regime: Regime,
    /// Spatial exponent for `thm1`, time exponent for `thm2`.
    pub exponent: ExponentSpec,
    pub q: f64,
    pub frak_p: f64,
    pub tol_fixedpoint: f64,
    pub max_iters: usize,
    pub tol_norm: f64,
    pub u0: VectorField,
    pub force: Force,
    pub time: TimeGrid,
    /// Bilinear constant; measured when absent.
    pub c_b: Option<f64>,
    pub c_b_trials: usize,
    pub seed: u64,
    /// Iterate even when the smallness gate fails.
    pub allow_large_data: bool,
    /// Test hook: replace `B` by zero.
    pub disable_bilinear: bool,
    /// Scan the horizon ladder for the largest admissible `T` (`thm2`).
    pub scan_horizon: bool,
}

impl SolverConfig {
    pub fn new(regime: Regime, exponent: ExponentSpec, u0: VectorField, time: TimeGrid) -> Self {
        SolverConfig {
            regime,
            exponent,
            q: 10.0,
            frak_p: 3.0,
            tol_fixedpoint: 1e-7,
            max_iters: 50,
            tol_norm: 1e-12,
            u0,
            force: Force::None,
            time,
            c_b: None,
            c_b_trials: 3,
            seed: 0,
            allow_large_data: false,
            disable_bilinear: false,
            scan_horizon: false,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.u0.grid
    }

    /// The exponent sampled where the regime's norm needs it.
    pub fn exponent_field(&self, tg: &TimeGrid) -> Result<ExponentField> {
        match self.regime {
            Regime::Thm1 => self.exponent.sample(self.grid()),
            Regime::Thm2 => self.exponent.sample(&tg.node_grid()),
        }
    }

    pub fn norm(&self, tg: &TimeGrid) -> Result<ENorm> {
        let p = self.exponent_field(tg)?;
        Ok(match self.regime {
            Regime::Thm1 => ENorm::Thm1 { p, frak_p: self.frak_p },
            Regime::Thm2 => ENorm::Thm2 { p, q: self.q },
        })
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.grid();
        if g.dimension() != 3 || !g.is_periodic() {
            return Err(Error::InvalidGrid("the solver runs on a periodic 3D grid".into()));
        }
        if !(self.tol_fixedpoint > 0.0 && self.tol_norm > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        let p = self.exponent_field(&self.time)?;
        match self.regime {
            Regime::Thm1 => {
                if !(self.frak_p > 1.0 && self.frak_p.is_finite()) {
                    return Err(Error::InvalidParameter(format!("mixed index {} out of range", self.frak_p)));
                }
            }
            Regime::Thm2 => {
                if p.p_minus() <= 2.0 {
                    return Err(Error::InvalidExponent(format!(
                        "time exponent infimum {} must exceed 2",
                        p.p_minus()
                    )));
                }
                if !(self.q > 3.0 && self.q.is_finite()) {
                    return Err(Error::InvalidParameter(format!("q = {} must exceed 3", self.q)));
                }
                if let Some(t) = p.samples().iter().find(|&&v| 2.0 / v + 3.0 / self.q >= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "2/p + 3/q = {} is not below 1",
                        2.0 / t + 3.0 / self.q
                    )));
                }
            }
        }
        match &self.force {
            Force::Tensor(t) => g.ensure_same(&t.grid, "force tensor")?,
            Force::Steady(f) => g.ensure_same(&f.grid, "steady force")?,
            Force::Sampled(f) => {
                g.ensure_same(f.grid(), "sampled force")?;
                if f.time_grid() != &self.time {
                    return Err(Error::GridMismatch("force is sampled on another time grid".into()));
                }
            }
            Force::None => {}
        }
        Ok(())
    }
}

fn vector_spectrum(ws: &mut SpectralWorkspace, c: &[Vec<f64>; 3]) -> [Vec<Complex64>; 3] {
    let (a, b) = ws.to_spectral_pair(&c[0], &c[1]);
    let s = ws.to_spectral(&c[2]);
    [a, b, s]
}

fn vector_physical(ws: &mut SpectralWorkspace, s: &[Vec<Complex64>; 3]) -> [Vec<f64>; 3] {
    let (a, b) = ws.to_physical_pair(&s[0], &s[1]);
    let c = ws.to_physical(s[2].clone());
    [a, b, c]
}

/// Spectrum of the projected force for time-independent forces.
fn steady_force_spectrum(force: &Force, ws: &mut SpectralWorkspace) -> Option<[Vec<Complex64>; 3]> {
    let mut s = match force {
        Force::Tensor(t) => {
            let e = &t.entries;
            let (s00, s01) = ws.to_spectral_pair(&e[0][0], &e[0][1]);
            let (s02, s10) = ws.to_spectral_pair(&e[0][2], &e[1][0]);
            let (s11, s12) = ws.to_spectral_pair(&e[1][1], &e[1][2]);
            let (s20, s21) = ws.to_spectral_pair(&e[2][0], &e[2][1]);
            let s22 = ws.to_spectral(&e[2][2]);
            ws.tensor_divergence_spectral(&[[&s00, &s01, &s02], [&s10, &s11, &s12], [&s20, &s21, &s22]])
        }
        Force::Steady(v) => vector_spectrum(ws, &v.components),
        _ => return None,
    };
    ws.project_spectral(&mut s);
    Some(s)
}

/// `e0(t) = g_t * P u0 + int_0^t g_{t-s} * P f(s) ds` on the nodes of `tg`.
///
/// `u0` and the force are Leray-projected first, so every frame is
/// divergence-free to round-off.
pub fn initial_term(u0: &VectorField, force: &Force, tg: &TimeGrid, ws: &mut SpectralWorkspace) -> Result<SpaceTimeField> {
    if !u0.grid.is_periodic() {
        return Err(Error::NotPeriodic);
    }
    u0.grid.ensure_same(ws.grid(), "initial data")?;
    if let Force::Sampled(f) = force {
        if f.time_grid() != tg {
            return Err(Error::GridMismatch("force is sampled on another time grid".into()));
        }
        u0.grid.ensure_same(f.grid(), "sampled force")?;
    }
    let mut u0h = vector_spectrum(ws, &u0.components);
    ws.project_spectral(&mut u0h);
    let k2 = ws.k_squared();
    let steady = steady_force_spectrum(force, ws);
    let mut stream = match force {
        Force::None => None,
        _ => Some(DuhamelStream::new(ws, tg)),
    };
    let mut frames = Vec::with_capacity(tg.node_count());
    for i in 0..tg.node_count() {
        let t = tg.node(i);
        let mut s: [Vec<Complex64>; 3] = Default::default();
        for c in 0..3 {
            s[c] = u0h[c].iter().zip(&k2).map(|(v, &q)| v * (-t * q).exp()).collect();
        }
        if let Some(stream) = stream.as_mut() {
            let integrand = match (force, &steady) {
                (_, Some(sf)) => sf.clone(),
                (Force::Sampled(f), None) => {
                    let mut fh = vector_spectrum(ws, &f.frames()[i].components);
                    ws.project_spectral(&mut fh);
                    fh
                }
                _ => unreachable!("stream exists only with a force"),
            };
            let add = stream.push(&integrand);
            for c in 0..3 {
                for (a, b) in s[c].iter_mut().zip(&add[c]) {
                    *a += b;
                }
            }
        }
        frames.push(VectorField {
            grid: u0.grid,
            components: vector_physical(ws, &s),
        });
    }
    SpaceTimeField::new(*tg, frames)
}

/// Streaming evaluation of `B(u, u)(t_i) = int_0^{t_i} g_{t_i - s} * P div(u (x) u)(s) ds`,
/// one node at a time.
pub struct BilinearStream {
    duhamel: DuhamelStream,
}

impl BilinearStream {
    pub fn new(ws: &SpectralWorkspace, tg: &TimeGrid) -> Self {
        BilinearStream {
            duhamel: DuhamelStream::new(ws, tg),
        }
    }

    /// Feed `u(t_i)`; returns `B(u, u)(t_i)`.
    pub fn next(&mut self, ws: &mut SpectralWorkspace, u: &[Vec<f64>; 3]) -> [Vec<f64>; 3] {
        let n = u[0].len();
        let prod = |a: usize, b: usize| -> Vec<f64> { (0..n).map(|i| u[a][i] * u[b][i]).collect() };
        let (s00, s01) = ws.to_spectral_pair(&prod(0, 0), &prod(0, 1));
        let (s02, s11) = ws.to_spectral_pair(&prod(0, 2), &prod(1, 1));
        let (s12, s22) = ws.to_spectral_pair(&prod(1, 2), &prod(2, 2));
        let mut div = ws.tensor_divergence_spectral(&[
            [&s00, &s01, &s02],
            [&s01, &s11, &s12],
            [&s02, &s12, &s22],
        ]);
        ws.project_spectral(&mut div);
        let integral = self.duhamel.push(&div);
        vector_physical(ws, &integral)
    }
}

pub fn bilinear_term(u: &SpaceTimeField, tg: &TimeGrid, ws: &mut SpectralWorkspace) -> Result<SpaceTimeField> {
    if u.time_grid() != tg {
        return Err(Error::GridMismatch("field and time grid differ".into()));
    }
    u.grid().ensure_same(ws.grid(), "bilinear workspace")?;
    let mut stream = BilinearStream::new(ws, tg);
    let frames = u
        .frames()
        .iter()
        .map(|f| VectorField {
            grid: f.grid,
            components: stream.next(ws, &f.components),
        })
        .collect();
    SpaceTimeField::new(*tg, frames)
}

/// Random divergence-free field built from Fourier modes with `|m|_inf <= 2`.
pub fn random_solenoidal(grid: &GridSpec, rng: &mut ChaCha8Rng, ws: &mut SpectralWorkspace) -> Result<VectorField> {
    let mut v = VectorField::zeros(*grid);
    let l = grid.extents();
    let scale: [f64; 3] = std::array::from_fn(|a| 2.0 * std::f64::consts::PI / l[a]);
    let pts: Vec<[f64; 3]> = grid.points().collect();
    for m0 in -2i32..=2 {
        for m1 in -2i32..=2 {
            for m2 in 0i32..=2 {
                // one representative of each +-m pair
                if m2 == 0 && (m1 < 0 || (m1 == 0 && m0 <= 0)) {
                    continue;
                }
                let k = [m0 as f64 * scale[0], m1 as f64 * scale[1], m2 as f64 * scale[2]];
                let amp: [[f64; 2]; 3] = std::array::from_fn(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
                for (i, x) in pts.iter().enumerate() {
                    let ph = k[0] * x[0] + k[1] * x[1] + k[2] * x[2];
                    let (s, c) = ph.sin_cos();
                    for comp in 0..3 {
                        v.components[comp][i] += amp[comp][0] * c + amp[comp][1] * s;
                    }
                }
            }
        }
    }
    crate::operators::leray_project(&v, ws)
}

/// `max_trial |B(u, u)|_E / |u|_E^2` over heat evolutions `u(t) = g_t * u0`
/// of seeded random divergence-free `u0`. Trial `i` uses RNG stream `i`, so
/// more trials only add candidates.
pub fn estimate_bilinear_constant(
    norm: &ENorm,
    grid: &GridSpec,
    tg: &TimeGrid,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is needed".into()));
    }
    let mut ws = SpectralWorkspace::new(grid)?;
    let mut best = 0.0f64;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let u0 = random_solenoidal(grid, &mut rng, &mut ws)?;
        best = best.max(bilinear_ratio(norm, &u0, tg, &mut ws, tol)?);
    }
    Ok(best)
}

/// `|B(u, u)|_E / |u|_E^2` for the heat evolution of `u0`.
pub fn bilinear_ratio(norm: &ENorm, u0: &VectorField, tg: &TimeGrid, ws: &mut SpectralWorkspace, tol: f64) -> Result<f64> {
    let u0h = vector_spectrum(ws, &u0.components);
    let k2 = ws.k_squared();
    let mut stream = BilinearStream::new(ws, tg);
    let mut acc_u = norm.accumulator(&u0.grid);
    let mut acc_b = norm.accumulator(&u0.grid);
    for i in 0..tg.node_count() {
        let t = tg.node(i);
        let s: [Vec<Complex64>; 3] =
            std::array::from_fn(|c| u0h[c].iter().zip(&k2).map(|(v, &q)| v * (-t * q).exp()).collect());
        let u = vector_physical(ws, &s);
        let b = stream.next(ws, &u);
        acc_u.push(norm, &u);
        acc_b.push(norm, &b);
    }
    let nu = norm.finish(acc_u, tg, tol)?.value;
    let nb = norm.finish(acc_b, tg, tol)?.value;
    if nu == 0.0 {
        return Err(Error::UndefinedRatio("zero trial field".into()));
    }
    Ok(nb / (nu * nu))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smallness {
    pub delta: f64,
    pub threshold: f64,
    pub pass: bool,
    /// Largest passing horizon on the candidate ladder (`thm2` only).
    pub admissible_t: Option<f64>,
}

/// Measured bilinear constants per horizon, keyed by the bits of `T`.
#[derive(Debug, Default, Clone)]
pub struct HorizonCache {
    c_b: BTreeMap<u64, f64>,
}

impl HorizonCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn get(&mut self, cfg: &SolverConfig, tg: &TimeGrid) -> Result<f64> {
        let key = tg.t_final().to_bits();
        if let Some(&c) = self.c_b.get(&key) {
            return Ok(c);
        }
        let norm = cfg.norm(tg)?;
        let c = estimate_bilinear_constant(&norm, cfg.grid(), tg, cfg.c_b_trials, cfg.seed, cfg.tol_norm)?;
        self.c_b.insert(key, c);
        Ok(c)
    }
}

/// `delta = |e0|_E` against `1 / (4 c_b)`.
pub fn smallness_check(cfg: &SolverConfig, c_b: f64) -> Result<Smallness> {
    smallness_check_cached(cfg, c_b, &mut HorizonCache::new())
}

pub fn smallness_check_cached(cfg: &SolverConfig, c_b: f64, cache: &mut HorizonCache) -> Result<Smallness> {
    if !(c_b > 0.0 && c_b.is_finite()) {
        return Err(Error::InvalidParameter(format!("bilinear constant must be positive, got {c_b}")));
    }
    let mut ws = SpectralWorkspace::new(cfg.grid())?;
    let e0 = initial_term(&cfg.u0, &cfg.force, &cfg.time, &mut ws)?;
    let delta = cfg.norm(&cfg.time)?.of(&e0, cfg.tol_norm)?.value;
    let threshold = 1.0 / (4.0 * c_b);
    let admissible_t = if cfg.regime == Regime::Thm2 && cfg.scan_horizon {
        admissible_horizon(cfg, cache)?
    } else {
        None
    };
    Ok(Smallness {
        delta,
        threshold,
        pass: delta < threshold,
        admissible_t,
    })
}

/// Largest `T` on the ladder `T_max 2^{-k}`, `k < 16`, whose measured
/// `delta(T)` and `c_b(T)` pass the gate. The step count is kept fixed.
pub fn admissible_horizon(cfg: &SolverConfig, cache: &mut HorizonCache) -> Result<Option<f64>> {
    if matches!(cfg.force, Force::Sampled(_)) {
        return Err(Error::InvalidParameter(
            "the horizon ladder needs a time-independent force".into(),
        ));
    }
    let mut ws = SpectralWorkspace::new(cfg.grid())?;
    for k in 0..HORIZON_LADDER_LEN {
        let t = cfg.time.t_final() / 2f64.powi(k as i32);
        let tg = TimeGrid::new(t, cfg.time.steps())?;
        let c_b = cache.get(cfg, &tg)?;
        let e0 = initial_term(&cfg.u0, &cfg.force, &tg, &mut ws)?;
        let delta = cfg.norm(&tg)?.of(&e0, cfg.tol_norm)?.value;
        if delta < 1.0 / (4.0 * c_b) {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Converged,
    Diverged,
}

/// Everything a run reports except the solution itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub regime: Regime,
    pub status: SolveStatus,
    pub iterations: usize,
    /// E-norm of every iterate, starting with `e0`.
    pub iterates_norms: Vec<f64>,
    /// `|u^{n+1} - u^n|_E`.
    pub increments: Vec<f64>,
    pub residual: f64,
    pub contraction_estimate: f64,
    pub c_b_estimate: f64,
    pub smallness: Smallness,
    pub final_norm: f64,
    /// Largest relative spectral divergence over the final frames.
    pub max_divergence: f64,
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    pub summary: SolverSummary,
    pub final_field: SpaceTimeField,
}

fn frames_finite(c: &[Vec<f64>; 3]) -> bool {
    c.iter().flatten().all(|v| v.is_finite())
}

/// Picard iteration `u^{n+1} = e0 - B(u^n, u^n)` until the E-norm increment
/// drops below `tol_fixedpoint`.
pub fn picard_solve(cfg: &SolverConfig) -> Result<SolverResult> {
    cfg.validate()?;
    let tg = cfg.time;
    let grid = *cfg.grid();
    let norm = cfg.norm(&tg)?;
    let mut ws = SpectralWorkspace::new(&grid)?;
    let e0 = initial_term(&cfg.u0, &cfg.force, &tg, &mut ws)?;
    let delta = norm.of(&e0, cfg.tol_norm)?.value;
    let c_b = match cfg.c_b {
        Some(c) => c,
        None => estimate_bilinear_constant(&norm, &grid, &tg, cfg.c_b_trials, cfg.seed, cfg.tol_norm)?,
    };
    let mut smallness = Smallness {
        delta,
        threshold: 1.0 / (4.0 * c_b),
        pass: delta < 1.0 / (4.0 * c_b),
        admissible_t: None,
    };
    if cfg.regime == Regime::Thm2 && cfg.scan_horizon {
        let mut cache = HorizonCache::new();
        cache.c_b.insert(tg.t_final().to_bits(), c_b);
        smallness.admissible_t = admissible_horizon(cfg, &mut cache)?;
    }
    if !smallness.pass && !cfg.allow_large_data {
        return Err(Error::SmallnessViolated {
            delta,
            threshold: smallness.threshold,
        });
    }

    let mut u = e0.clone();
    let mut norms = vec![delta];
    let mut increments: Vec<f64> = Vec::new();
    let mut status = SolveStatus::Diverged;
    if e0.max_abs() == 0.0 || cfg.disable_bilinear {
        // B vanishes on zero data, and the hook removes it entirely
        status = SolveStatus::Converged;
    } else {
        for iter in 1..=cfg.max_iters {
            let mut stream = BilinearStream::new(&ws, &tg);
            let mut acc_inc = norm.accumulator(&grid);
            let mut acc_u = norm.accumulator(&grid);
            for (frame, base) in u.frames_mut().iter_mut().zip(e0.frames()) {
                let b = stream.next(&mut ws, &frame.components);
                let new: [Vec<f64>; 3] =
                    std::array::from_fn(|c| base.components[c].iter().zip(&b[c]).map(|(e, b)| e - b).collect());
                if !frames_finite(&new) {
                    return Err(Error::NonFinite { iterate: iter });
                }
                let diff: [Vec<f64>; 3] = std::array::from_fn(|c| {
                    new[c].iter().zip(&frame.components[c]).map(|(a, b)| a - b).collect()
                });
                acc_inc.push(&norm, &diff);
                acc_u.push(&norm, &new);
                frame.components = new;
            }
            let d = norm.finish(acc_inc, &tg, cfg.tol_norm)?.value;
            norms.push(norm.finish(acc_u, &tg, cfg.tol_norm)?.value);
            increments.push(d);
            if d <= cfg.tol_fixedpoint {
                status = SolveStatus::Converged;
                break;
            }
            if cfg.allow_large_data && d > 1e6 * (delta + 1.0) {
                break;
            }
        }
        if status != SolveStatus::Converged && !cfg.allow_large_data {
            return Err(Error::FixedPointNonConvergence { increments });
        }
    }

    // residual u - e0 + B(u, u), recomputed directly
    let residual = if cfg.disable_bilinear {
        0.0
    } else {
        let mut stream = BilinearStream::new(&ws, &tg);
        let mut acc = norm.accumulator(&grid);
        for (frame, base) in u.frames().iter().zip(e0.frames()) {
            let b = stream.next(&mut ws, &frame.components);
            let r: [Vec<f64>; 3] = std::array::from_fn(|c| {
                (0..frame.components[c].len())
                    .map(|i| frame.components[c][i] - base.components[c][i] + b[c][i])
                    .collect()
            });
            acc.push(&norm, &r);
        }
        norm.finish(acc, &tg, cfg.tol_norm)?.value
    };

    let contraction_estimate = increments
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .fold(0.0, f64::max);
    let mut max_divergence = 0.0f64;
    for f in u.frames() {
        let s = vector_spectrum(&mut ws, &f.components);
        max_divergence = max_divergence.max(relative_divergence(&s, &ws));
    }
    let final_norm = *norms.last().expect("at least the initial norm");
    Ok(SolverResult {
        summary: SolverSummary {
            regime: cfg.regime,
            status,
            iterations: increments.len(),
            iterates_norms: norms,
            increments,
            residual,
            contraction_estimate,
            c_b_estimate: c_b,
            smallness,
            final_norm,
            max_divergence,
        },
        final_field: u,
    })
}

/// `A (sin x cos y cos z, -cos x sin y cos z, 0)`: divergence-free, one
/// wavenumber shell, and with a nonzero self-interaction (a single plane
/// wave would have `P div(u (x) u) = 0`).
pub fn taylor_green(grid: &GridSpec, amplitude: f64) -> VectorField {
    VectorField::from_fn(*grid, |x| {
        let (sx, cx) = x[0].sin_cos();
        let (sy, cy) = x[1].sin_cos();
        let cz = x[2].cos();
        [amplitude * sx * cy * cz, -amplitude * cx * sy * cz, 0.0]
    })
}
