//! Seeded test-function corpora.
//!
//! Elements are analytic descriptors drawn from the physical box of a grid,
//! so one corpus can be sampled at every refinement level of that box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField, VectorField};
use crate::mild_solver::random_solenoidal;
use crate::operators::SpectralWorkspace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusKind {
    SmoothDecaying,
    PlaneWaveMix,
    IndicatorUnion,
    DivergenceFree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub centre: [f64; 3],
    pub width: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wave {
    /// Integer mode relative to the box.
    pub mode: [i32; 3],
    pub amplitude: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cuboid {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Cuboid {
    fn contains(&self, x: [f64; 3], dim: usize) -> bool {
        (0..dim).all(|a| x[a] >= self.lo[a] && x[a] < self.hi[a])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CorpusElement {
    GaussianMix { bumps: Vec<Bump> },
    PlaneWaveMix { waves: Vec<Wave> },
    IndicatorUnion { boxes: Vec<Cuboid> },
    /// Random low-mode solenoidal field, RNG `seed` on stream `stream`.
    DivergenceFree { seed: u64, stream: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum CorpusField {
    Scalar(ScalarField),
    Vector(VectorField),
}

impl CorpusField {
    pub fn as_scalar(&self) -> Option<&ScalarField> {
        match self {
            CorpusField::Scalar(f) => Some(f),
            CorpusField::Vector(_) => None,
        }
    }

    pub fn as_vector(&self) -> Option<&VectorField> {
        match self {
            CorpusField::Vector(v) => Some(v),
            CorpusField::Scalar(_) => None,
        }
    }
}

impl CorpusElement {
    pub fn kind(&self) -> CorpusKind {
        match self {
            CorpusElement::GaussianMix { .. } => CorpusKind::SmoothDecaying,
            CorpusElement::PlaneWaveMix { .. } => CorpusKind::PlaneWaveMix,
            CorpusElement::IndicatorUnion { .. } => CorpusKind::IndicatorUnion,
            CorpusElement::DivergenceFree { .. } => CorpusKind::DivergenceFree,
        }
    }

    pub fn sample_scalar(&self, grid: &GridSpec) -> Result<ScalarField> {
        let d = grid.dimension();
        Ok(match self {
            CorpusElement::GaussianMix { bumps } => grid.sample(|x| {
                bumps
                    .iter()
                    .map(|b| {
                        let r2: f64 = (0..d).map(|a| (x[a] - b.centre[a]).powi(2)).sum();
                        b.amplitude * (-r2 / (2.0 * b.width * b.width)).exp()
                    })
                    .sum()
            }),
            CorpusElement::PlaneWaveMix { waves } => {
                let l = grid.extents().to_vec();
                let o = grid.origin().to_vec();
                grid.sample(|x| {
                    waves
                        .iter()
                        .map(|w| {
                            let ph: f64 = (0..d)
                                .map(|a| 2.0 * std::f64::consts::PI * w.mode[a] as f64 * (x[a] - o[a]) / l[a])
                                .sum();
                            w.amplitude * (ph + w.phase).cos()
                        })
                        .sum()
                })
            }
            CorpusElement::IndicatorUnion { boxes } => {
                grid.sample(|x| if boxes.iter().any(|b| b.contains(x, d)) { 1.0 } else { 0.0 })
            }
            CorpusElement::DivergenceFree { .. } => {
                return Err(Error::InvalidParameter("divergence-free elements are vector fields".into()))
            }
        })
    }

    pub fn sample(&self, grid: &GridSpec) -> Result<CorpusField> {
        match self {
            CorpusElement::DivergenceFree { seed, stream } => {
                if grid.dimension() != 3 {
                    return Err(Error::InvalidGrid("divergence-free fields need a 3D grid".into()));
                }
                let mut ws = SpectralWorkspace::new(grid)?;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(*stream);
                Ok(CorpusField::Vector(random_solenoidal(grid, &mut rng, &mut ws)?))
            }
            _ => Ok(CorpusField::Scalar(self.sample_scalar(grid)?)),
        }
    }
}

/// Largest `|f|` over the outermost layer of cells.
pub fn boundary_shell_max(f: &ScalarField) -> f64 {
    let g = f.grid;
    let shape = g.shape();
    let d = g.dimension();
    f.values
        .iter()
        .enumerate()
        .filter(|(idx, _)| {
            let m = g.multi_index(*idx);
            (0..d).any(|a| m[a] == 0 || m[a] + 1 == shape[a])
        })
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max)
}

/// Bumps keep `8 w` plus one cell of clearance to the box, so the boundary
/// shell stays below `1e-12` for up to three unit bumps.
const BUMP_CLEARANCE: f64 = 8.0;

/// Element descriptors; element `i` draws from RNG stream `i` of `seed`.
pub fn describe_corpus(kind: CorpusKind, size: usize, grid: &GridSpec, seed: u64) -> Result<Vec<CorpusElement>> {
    if size == 0 {
        return Err(Error::InvalidParameter("corpus size must be at least 1".into()));
    }
    let d = grid.dimension();
    let lo: Vec<f64> = grid.origin().to_vec();
    let ext: Vec<f64> = grid.extents().to_vec();
    let lmin = ext.iter().copied().fold(f64::INFINITY, f64::min);
    let hmax = grid.spacings()[..d].iter().copied().fold(0.0, f64::max);
    if kind == CorpusKind::DivergenceFree && (d != 3 || !grid.is_periodic()) {
        return Err(Error::InvalidGrid("divergence-free corpora need a periodic 3D grid".into()));
    }
    (0..size)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            Ok(match kind {
                CorpusKind::SmoothDecaying => {
                    let count = rng.gen_range(1..=3);
                    let bumps = (0..count)
                        .map(|_| {
                            let width = lmin * rng.gen_range(0.03..0.05);
                            let margin = BUMP_CLEARANCE * width + hmax;
                            let mut centre = [0.0; 3];
                            for a in 0..d {
                                let (a0, a1) = (lo[a] + margin, lo[a] + ext[a] - margin);
                                centre[a] = if a1 > a0 { rng.gen_range(a0..a1) } else { 0.5 * (a0 + a1) };
                            }
                            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                            Bump {
                                centre,
                                width,
                                amplitude: sign * rng.gen_range(0.2..1.0),
                            }
                        })
                        .collect();
                    CorpusElement::GaussianMix { bumps }
                }
                CorpusKind::PlaneWaveMix => {
                    let count = rng.gen_range(1..=4);
                    let waves = (0..count)
                        .map(|_| {
                            let mut mode = [0i32; 3];
                            for m in mode.iter_mut().take(d) {
                                *m = rng.gen_range(-3..=3);
                            }
                            Wave {
                                mode,
                                amplitude: rng.gen_range(0.2..1.0),
                                phase: rng.gen_range(0.0..std::f64::consts::TAU),
                            }
                        })
                        .collect();
                    CorpusElement::PlaneWaveMix { waves }
                }
                CorpusKind::IndicatorUnion => {
                    // edges on cell faces of this grid, hence of every refinement
                    let count = rng.gen_range(1..=3);
                    let boxes = (0..count)
                        .map(|_| {
                            let mut b = Cuboid { lo: [0.0; 3], hi: [0.0; 3] };
                            let shape = grid.shape();
                            for a in 0..d {
                                let n = shape[a];
                                let i0 = rng.gen_range(0..n);
                                let i1 = rng.gen_range(i0 + 1..=n);
                                let h = grid.spacing(a);
                                b.lo[a] = lo[a] + i0 as f64 * h;
                                b.hi[a] = lo[a] + i1 as f64 * h;
                            }
                            b
                        })
                        .collect();
                    CorpusElement::IndicatorUnion { boxes }
                }
                CorpusKind::DivergenceFree => CorpusElement::DivergenceFree {
                    seed,
                    stream: i as u64,
                },
            })
        })
        .collect()
}

pub fn generate_corpus(kind: CorpusKind, size: usize, grid: &GridSpec, seed: u64) -> Result<Vec<CorpusField>> {
    describe_corpus(kind, size, grid, seed)?
        .iter()
        .map(|e| e.sample(grid))
        .collect()
}
