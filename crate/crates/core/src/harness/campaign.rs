//! Inequality-falsification campaigns: evaluate one ratio per corpus element
//! and refinement level, and keep the maximum and where it was attained.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::exponents::{ExponentFamily, ExponentField, ExponentSpec};
use crate::grid::{GridSpec, ScalarField, Topology};
use crate::harness::corpus::{describe_corpus, CorpusElement, CorpusKind};
use crate::operators::{geometric_radii, grad_heat_sweep, maximal_function, radial_majorant_defect, riesz_potential_direct};
use crate::varlp::{
    classical_norm, conjugate_pairing_lower_bound, embedding_defect, holder_defect, luxemburg_norm, mixed_norm,
    unit_function_norm, unit_norm_bracket,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Holder,
    Duality,
    Maximal,
    RieszPotential,
    Proposition1,
    Embedding,
    RadialMajorant,
    GradHeat,
    LemmaUnitNorm,
}

impl Target {
    pub const ALL: [Target; 9] = [
        Target::Holder,
        Target::Duality,
        Target::Maximal,
        Target::RieszPotential,
        Target::Proposition1,
        Target::Embedding,
        Target::RadialMajorant,
        Target::GradHeat,
        Target::LemmaUnitNorm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Target::Holder => "holder",
            Target::Duality => "duality",
            Target::Maximal => "maximal",
            Target::RieszPotential => "riesz_potential",
            Target::Proposition1 => "proposition1",
            Target::Embedding => "embedding",
            Target::RadialMajorant => "radial_majorant",
            Target::GradHeat => "grad_heat",
            Target::LemmaUnitNorm => "lemma_unit_norm",
        }
    }

    pub fn parse(s: &str) -> Option<Target> {
        Target::ALL.into_iter().find(|t| t.name() == s)
    }

    /// The estimate whose constant the campaign measures.
    pub fn citation(self) -> &'static str {
        match self {
            Target::Holder => "Hölder inequality: |fg|_{p(.)} <= C |f|_{q(.)} |g|_{r(.)}, 1/p = 1/q + 1/r",
            Target::Duality => "norm-conjugate formula: sup over |g|_{p'(.)} <= 1 of int |fg| is at most C |f|_{p(.)}",
            Target::Maximal => "Hardy-Littlewood maximal function: |M f|_{p(.)} <= C |f|_{p(.)}",
            Target::RieszPotential => "Riesz potential: |I_s f|_{q(.)} <= C |f|_{p(.)}, 1/q = 1/p - s/n",
            Target::Proposition1 => {
                "Riesz potential on mixed spaces: |I_s f|_{rho(.)} <= C max(|f|_{p(.)}, |f|_{P}), rho = n p / (n - s P)"
            }
            Target::Embedding => "bounded-domain embedding: p1 <= p2 implies |f|_{p1(.)} <= (1 + |X|) |f|_{p2(.)}",
            Target::RadialMajorant => "radial majorant: |phi * f| <= |phi|_1 M f for radially decreasing phi",
            Target::GradHeat => "heat-kernel gradient decay: |grad g_t(x)| <= C / (t^2 + |x|^4)",
            Target::LemmaUnitNorm => {
                "norm of the unit function: |1|_{p(.)}([0,T]) within C of min/max(T^{1/p-}, T^{1/p+})"
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub target: Target,
    pub corpus_kind: CorpusKind,
    pub corpus_size: usize,
    pub seed: u64,
    /// Base grids; each is refined by `2^level` for every level.
    pub grids: Vec<GridSpec>,
    pub exponent_specs: Vec<ExponentSpec>,
    pub bound: f64,
    pub refinement_levels: usize,
    /// Smoothing order for the potential targets.
    pub sigma: f64,
    /// Constant index of the mixed space.
    pub frak_p: f64,
    pub tol: f64,
    /// Largest accepted relative change of the per-level maximum.
    pub drift_limit: f64,
    /// Seed of the second Hölder factor; `seed + 1` when absent. Equal to
    /// `seed`, every element is paired with itself.
    #[serde(default)]
    pub holder_seed: Option<u64>,
}

fn line(a: f64, b: f64, n: usize) -> GridSpec {
    GridSpec::interval(a, b, n, Topology::Truncated).expect("valid default grid")
}

fn spatial_specs() -> Vec<ExponentSpec> {
    vec![
        ExponentSpec::new(ExponentFamily::RadialLog, &[2.5, 1.0]),
        ExponentSpec::new(ExponentFamily::GaussianBump, &[3.0, 1.0]),
        ExponentSpec::new(ExponentFamily::GaussianBump, &[2.5, -0.4]),
        ExponentSpec::new(ExponentFamily::RadialLog, &[4.0, -1.0]),
    ]
}

impl CampaignConfig {
    /// Documented defaults per target.
    pub fn default_for(target: Target) -> Self {
        let mut cfg = CampaignConfig {
            target,
            corpus_kind: CorpusKind::SmoothDecaying,
            corpus_size: 500,
            seed: 2024,
            grids: vec![line(-8.0, 8.0, 128)],
            exponent_specs: spatial_specs(),
            bound: 10.0,
            refinement_levels: 3,
            sigma: 0.0,
            frak_p: 0.0,
            tol: 1e-10,
            drift_limit: 0.10,
            holder_seed: None,
        };
        match target {
            Target::Holder => {
                cfg.corpus_size = 1000;
                cfg.bound = 4.0;
            }
            Target::Duality => cfg.bound = 2.0,
            Target::Maximal => {}
            Target::RieszPotential => {
                cfg.sigma = 0.3;
                cfg.exponent_specs = vec![
                    ExponentSpec::new(ExponentFamily::RadialLog, &[1.8, 1.0]),
                    ExponentSpec::new(ExponentFamily::GaussianBump, &[2.0, 1.0]),
                    ExponentSpec::new(ExponentFamily::GaussianBump, &[2.5, -0.8]),
                ];
            }
            Target::Proposition1 => {
                cfg.corpus_size = 16;
                cfg.sigma = 1.0;
                cfg.frak_p = 1.5;
                cfg.grids = vec![GridSpec::centered_cube(6.0, 20, Topology::Truncated).expect("valid default grid")];
                // output exponents rho; the input exponent is rho / 2
                cfg.exponent_specs = vec![
                    ExponentSpec::new(ExponentFamily::RadialLog, &[3.0, 1.0]),
                    ExponentSpec::new(ExponentFamily::GaussianBump, &[3.5, 1.0]),
                ];
            }
            Target::Embedding => {
                cfg.bound = 1.0 + cfg.grids[0].measure();
            }
            Target::RadialMajorant => cfg.bound = 1.05,
            Target::GradHeat => {
                cfg.corpus_size = 20;
                cfg.bound = 1.0;
                cfg.grids = vec![line(0.0, 1.0, 48)];
                cfg.exponent_specs = vec![];
            }
            Target::LemmaUnitNorm => {
                cfg.corpus_size = 20;
                cfg.bound = 2.0;
                cfg.grids = vec![line(0.0, 1.0, 256)];
                cfg.exponent_specs = vec![
                    ExponentSpec::new(ExponentFamily::Sinusoidal, &[3.0, 1.0, 1.0, 2.0]),
                    ExponentSpec::new(ExponentFamily::GaussianBump, &[2.0, 1.5]),
                    ExponentSpec::new(ExponentFamily::RadialLog, &[1.5, 2.0]),
                ];
            }
        }
        cfg
    }

    /// Defaults for the JSON's `target`, overridden key by key.
    pub fn from_json(v: &Value) -> Result<Self> {
        let target = v
            .get("target")
            .and_then(Value::as_str)
            .and_then(Target::parse)
            .ok_or_else(|| Error::Format("campaign config needs a known \"target\"".into()))?;
        let mut base = serde_json::to_value(Self::default_for(target)).map_err(|e| Error::Format(e.to_string()))?;
        if let (Value::Object(b), Value::Object(o)) = (&mut base, v) {
            for (k, val) in o {
                b.insert(k.clone(), val.clone());
            }
        } else {
            return Err(Error::Format("campaign config must be a JSON object".into()));
        }
        let cfg: CampaignConfig = serde_json::from_value(base).map_err(|e| Error::Format(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.corpus_size == 0 || self.refinement_levels == 0 {
            return Err(Error::InvalidParameter("corpus_size and refinement_levels must be at least 1".into()));
        }
        if !(self.bound > 0.0) {
            return Err(Error::InvalidParameter("bound must be positive".into()));
        }
        if self.grids.is_empty() {
            return Err(Error::InvalidParameter("at least one grid is needed".into()));
        }
        let needs_specs = !matches!(self.target, Target::GradHeat);
        if needs_specs && self.exponent_specs.is_empty() {
            return Err(Error::InvalidParameter("at least one exponent spec is needed".into()));
        }
        Ok(())
    }

    fn level_grid(&self, grid_index: usize, level: usize) -> Result<GridSpec> {
        self.grids[grid_index].refined(1 << level)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub grid_index: usize,
    pub level: usize,
    pub element: usize,
    pub ratio: f64,
}

/// Enough to re-run the worst evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    pub grid_index: usize,
    pub level: usize,
    pub element: usize,
    pub ratio: f64,
    pub grid: GridSpec,
    pub descriptor: Option<CorpusElement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub target: Target,
    pub citation: String,
    pub bound: f64,
    pub observed_max_ratio: f64,
    pub per_level_max: Vec<f64>,
    /// Largest `|m_{l+1} - m_l| / m_l` over consecutive levels.
    pub max_drift: f64,
    pub pass: bool,
    pub drift_pass: bool,
    pub worst_case: WorstCase,
    pub evaluations: Vec<Evaluation>,
    pub config: CampaignConfig,
}

/// Worker pool honouring `VARNS_THREADS`.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var("VARNS_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        if n > 0 {
            b = b.num_threads(n);
        }
    }
    b.build().map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}

struct Prepared {
    f: Vec<CorpusElement>,
    g: Vec<CorpusElement>,
}

fn prepare(cfg: &CampaignConfig, grid_index: usize) -> Result<Prepared> {
    let base = &cfg.grids[grid_index];
    let scalar = !matches!(cfg.target, Target::GradHeat | Target::LemmaUnitNorm);
    if !scalar {
        return Ok(Prepared { f: vec![], g: vec![] });
    }
    let f = describe_corpus(cfg.corpus_kind, cfg.corpus_size, base, cfg.seed)?;
    let g = if cfg.target == Target::Holder {
        let seed = cfg.holder_seed.unwrap_or(cfg.seed.wrapping_add(1));
        describe_corpus(cfg.corpus_kind, cfg.corpus_size, base, seed)?
    } else {
        vec![]
    };
    Ok(Prepared { f, g })
}

fn spec(cfg: &CampaignConfig, i: usize) -> &ExponentSpec {
    &cfg.exponent_specs[i % cfg.exponent_specs.len()]
}

/// Radially nonincreasing gaussian, cut at `2.5` widths.
fn majorant_kernel(grid: &GridSpec) -> Result<ScalarField> {
    let d = grid.dimension();
    let lmin = grid.extents().iter().copied().fold(f64::INFINITY, f64::min);
    let width = 0.05 * lmin;
    let cut = 2.5 * width;
    let half = (cut / grid.spacings()[..d].iter().copied().fold(f64::INFINITY, f64::min)).ceil() as usize;
    let kg = grid.kernel_grid(half)?;
    Ok(kg.sample(|x| {
        let r2: f64 = x[..d].iter().map(|v| v * v).sum();
        if r2.sqrt() <= cut {
            (-r2 / (2.0 * width * width)).exp()
        } else {
            0.0
        }
    }))
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.gen_range(0.0..1.0) * (hi.ln() - lo.ln())).exp()
}

/// Horizon of element `i` of the unit-norm sweep: log-spaced over `[1/8, 8]`.
fn sweep_horizon(i: usize, size: usize) -> f64 {
    if size == 1 {
        return 1.0;
    }
    8f64.powf(2.0 * i as f64 / (size - 1) as f64 - 1.0)
}

fn evaluate_prepared(cfg: &CampaignConfig, prep: &Prepared, grid_index: usize, level: usize, i: usize) -> Result<f64> {
    let grid = cfg.level_grid(grid_index, level)?;
    let tol = cfg.tol;
    let scalar = |e: &CorpusElement| e.sample_scalar(&grid);
    match cfg.target {
        Target::Holder => {
            let f = scalar(&prep.f[i])?;
            let g = scalar(&prep.g[i])?;
            let q = spec(cfg, i).sample(&grid)?;
            let r = spec(cfg, i + 1).sample(&grid)?;
            let p = ExponentField::holder_product(&q, &r)?;
            holder_defect(&f, &g, &p, &q, &r, tol)
        }
        Target::Duality => {
            let f = scalar(&prep.f[i])?;
            let p = spec(cfg, i).sample(&grid)?;
            let n = luxemburg_norm(&f, &p, tol)?.value;
            if n == 0.0 {
                return Err(Error::UndefinedRatio("zero corpus element".into()));
            }
            Ok(conjugate_pairing_lower_bound(&f, &p, 8, cfg.seed ^ i as u64, tol)? / n)
        }
        Target::Maximal => {
            let f = scalar(&prep.f[i])?;
            let p = spec(cfg, i).sample(&grid)?;
            let m = maximal_function(&f, &geometric_radii(&grid, 12))?;
            Ok(luxemburg_norm(&m, &p, tol)?.value / luxemburg_norm(&f, &p, tol)?.value)
        }
        Target::RieszPotential => {
            let f = scalar(&prep.f[i])?;
            let p = spec(cfg, i).sample(&grid)?;
            let n = grid.dimension() as f64;
            let s = cfg.sigma;
            if s * p.p_plus() >= n {
                return Err(Error::InvalidParameter(format!("sigma {s} too large for p+ = {}", p.p_plus())));
            }
            let q = p.map(|v| n * v / (n - s * v))?;
            let pot = riesz_potential_direct(&f, s)?;
            Ok(luxemburg_norm(&pot, &q, tol)?.value / luxemburg_norm(&f, &p, tol)?.value)
        }
        Target::Proposition1 => {
            let f = scalar(&prep.f[i])?;
            let rho = spec(cfg, i).sample(&grid)?;
            let n = grid.dimension() as f64;
            let (s, fp) = (cfg.sigma, cfg.frak_p);
            let p = rho.map(|v| (n - s * fp) * v / n)?;
            if !(s < n / p.p_plus() && s < n / fp) {
                return Err(Error::InvalidParameter(format!(
                    "sigma {s} must stay below n/p+ = {} and n/P = {}",
                    n / p.p_plus(),
                    n / fp
                )));
            }
            let pot = riesz_potential_direct(&f, s)?;
            Ok(luxemburg_norm(&pot, &rho, tol)?.value / mixed_norm(&f, &p, fp, tol)?.value)
        }
        Target::Embedding => {
            let f = scalar(&prep.f[i])?;
            let p1 = spec(cfg, i).sample(&grid)?;
            let p2 = p1.map(|v| v + 0.5)?;
            embedding_defect(&f, &p1, &p2, tol)
        }
        Target::RadialMajorant => {
            let f = scalar(&prep.f[i])?;
            radial_majorant_defect(&majorant_kernel(&grid)?, &f)
        }
        Target::GradHeat => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            let t0 = log_uniform(&mut rng, 1e-3, 1.0);
            let r0 = log_uniform(&mut rng, 1e-3, 1.0);
            let n = grid.resolution()[0];
            grad_heat_sweep([t0, 10.0], [r0, 10.0], n)
        }
        Target::LemmaUnitNorm => {
            let t = sweep_horizon(i, cfg.corpus_size);
            let g = GridSpec::interval(0.0, t, grid.resolution()[0], Topology::Truncated)?;
            let p = spec(cfg, i).sample(&g)?;
            let norm = if p.is_constant() {
                classical_norm(&ScalarField::constant(g, 1.0), p.p_minus())?.value
            } else {
                unit_function_norm(&p, tol)?.value
            };
            let (lo, hi) = unit_norm_bracket(t, p.p_minus(), p.p_plus());
            Ok((norm / hi).max(lo / norm))
        }
    }
}

/// Ratio of one element at one level.
pub fn evaluate(cfg: &CampaignConfig, grid_index: usize, level: usize, element: usize) -> Result<f64> {
    cfg.validate()?;
    if grid_index >= cfg.grids.len() || level >= cfg.refinement_levels || element >= cfg.corpus_size {
        return Err(Error::InvalidParameter("evaluation index out of range".into()));
    }
    let prep = prepare(cfg, grid_index)?;
    evaluate_prepared(cfg, &prep, grid_index, level, element).map_err(|e| Error::Element {
        index: element,
        source: Box::new(e),
    })
}

/// Re-run the recorded worst case.
pub fn replay_worst_case(cfg: &CampaignConfig, w: &WorstCase) -> Result<f64> {
    evaluate(cfg, w.grid_index, w.level, w.element)
}

pub fn run_campaign(cfg: &CampaignConfig) -> Result<InequalityReport> {
    cfg.validate()?;
    let pool = worker_pool()?;
    let mut evaluations = Vec::new();
    let mut per_level_max = vec![f64::NEG_INFINITY; cfg.refinement_levels];
    let mut worst: Option<(Evaluation, GridSpec, Option<CorpusElement>)> = None;
    for gi in 0..cfg.grids.len() {
        let prep = prepare(cfg, gi)?;
        for level in 0..cfg.refinement_levels {
            let ratios: Vec<Result<f64>> = pool.install(|| {
                (0..cfg.corpus_size)
                    .into_par_iter()
                    .map(|i| {
                        evaluate_prepared(cfg, &prep, gi, level, i).map_err(|e| Error::Element {
                            index: i,
                            source: Box::new(e),
                        })
                    })
                    .collect()
            });
            for (i, r) in ratios.into_iter().enumerate() {
                let ratio = r?;
                per_level_max[level] = per_level_max[level].max(ratio);
                let ev = Evaluation {
                    grid_index: gi,
                    level,
                    element: i,
                    ratio,
                };
                // strict comparison: the lowest index wins ties
                if worst.as_ref().is_none_or(|(w, _, _)| ratio > w.ratio) {
                    worst = Some((ev.clone(), cfg.level_grid(gi, level)?, prep.f.get(i).cloned()));
                }
                evaluations.push(ev);
            }
        }
    }
    let (w, grid, descriptor) = worst.expect("at least one evaluation");
    let max_drift = per_level_max
        .windows(2)
        .map(|m| (m[1] - m[0]).abs() / m[0].abs())
        .fold(0.0, f64::max);
    Ok(InequalityReport {
        target: cfg.target,
        citation: cfg.target.citation().to_string(),
        bound: cfg.bound,
        observed_max_ratio: w.ratio,
        pass: per_level_max.iter().all(|&m| m <= cfg.bound),
        drift_pass: max_drift <= cfg.drift_limit,
        per_level_max,
        max_drift,
        worst_case: WorstCase {
            grid_index: w.grid_index,
            level: w.level,
            element: w.element,
            ratio: w.ratio,
            grid,
            descriptor,
        },
        evaluations,
        config: cfg.clone(),
    })
}
