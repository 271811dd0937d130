//! JSON run configuration for the solver.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::exponents::{ExponentFamily, ExponentSpec};
use crate::grid::GridSpec;
use crate::harness::corpus::CorpusField;
use crate::harness::fieldio::read_field;
use crate::mild_solver::{random_solenoidal, taylor_green, Force, Regime, SolverConfig};
use crate::operators::{SpectralWorkspace, TimeGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialData {
    TaylorGreen { amplitude: f64 },
    /// Seeded random low-mode field normalised to `max |u| = amplitude`.
    Random { amplitude: f64, seed: u64 },
    /// Vector field file.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ForceData {
    None,
    /// Steady Taylor–Green force.
    TaylorGreen { amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub regime: Regime,
    pub exponent: ExponentSpec,
    pub q: f64,
    pub frak_p: f64,
    pub tol_fixedpoint: f64,
    pub max_iters: usize,
    pub tol_norm: f64,
    /// Periodic cube `[0, length)^3`.
    pub length: f64,
    pub resolution: usize,
    pub t_final: f64,
    pub steps: usize,
    pub initial: InitialData,
    pub force: ForceData,
    pub c_b: Option<f64>,
    pub c_b_trials: usize,
    pub seed: u64,
    pub allow_large_data: bool,
    pub scan_horizon: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            regime: Regime::Thm1,
            exponent: ExponentSpec::new(ExponentFamily::Sinusoidal, &[4.0, 1.0, 1.0, 1.0]),
            q: 10.0,
            frak_p: 3.0,
            tol_fixedpoint: 1e-7,
            max_iters: 50,
            tol_norm: 1e-12,
            length: std::f64::consts::TAU,
            resolution: 32,
            t_final: 1.0,
            steps: 64,
            initial: InitialData::TaylorGreen { amplitude: 1.0 },
            force: ForceData::None,
            c_b: None,
            c_b_trials: 3,
            seed: 0,
            allow_large_data: false,
            scan_horizon: false,
        }
    }
}

impl SolveConfig {
    /// Defaults overridden key by key.
    pub fn from_json(v: &Value) -> Result<Self> {
        let mut base = serde_json::to_value(Self::default()).map_err(|e| Error::Format(e.to_string()))?;
        match (&mut base, v) {
            (Value::Object(b), Value::Object(o)) => {
                for (k, val) in o {
                    if !b.contains_key(k) {
                        return Err(Error::Format(format!("unknown solver config key {k:?}")));
                    }
                    b.insert(k.clone(), val.clone());
                }
            }
            _ => return Err(Error::Format("solver config must be a JSON object".into())),
        }
        serde_json::from_value(base).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::torus(self.length, self.resolution)
    }

    pub fn build(&self) -> Result<SolverConfig> {
        let grid = self.grid()?;
        let u0 = match &self.initial {
            InitialData::TaylorGreen { amplitude } => taylor_green(&grid, *amplitude),
            InitialData::Random { amplitude, seed } => {
                use rand::SeedableRng;
                let mut ws = SpectralWorkspace::new(&grid)?;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
                let v = random_solenoidal(&grid, &mut rng, &mut ws)?;
                let m = v.max_abs();
                v.scaled(amplitude / m)
            }
            InitialData::File { path } => match read_field(path)? {
                CorpusField::Vector(v) => {
                    grid.ensure_same(&v.grid, "initial data file")?;
                    v
                }
                CorpusField::Scalar(_) => {
                    return Err(Error::Format("initial data must be a vector field".into()))
                }
            },
        };
        let force = match &self.force {
            ForceData::None => Force::None,
            ForceData::TaylorGreen { amplitude } => Force::Steady(taylor_green(&grid, *amplitude)),
        };
        let mut cfg = SolverConfig::new(self.regime, self.exponent.clone(), u0, TimeGrid::new(self.t_final, self.steps)?);
        cfg.q = self.q;
        cfg.frak_p = self.frak_p;
        cfg.tol_fixedpoint = self.tol_fixedpoint;
        cfg.max_iters = self.max_iters;
        cfg.tol_norm = self.tol_norm;
        cfg.force = force;
        cfg.c_b = self.c_b;
        cfg.c_b_trials = self.c_b_trials;
        cfg.seed = self.seed;
        cfg.allow_large_data = self.allow_large_data;
        cfg.scan_horizon = self.scan_horizon;
        Ok(cfg)
    }
}
