//! Discrete convolution on grids through zero-padded or circular FFTs.

use num_complex::Complex64;

use crate::error::Result;
use crate::grid::{GridSpec, ScalarField, Topology};
use crate::operators::spectral::SpectralWorkspace;

/// Holds the spectrum of one field so that several kernels can be applied.
///
/// Computes `out[x] = sum_o k[o] f[x - o]` over integer offsets `o` with
/// `|o_a| <= max_half[a]`. Periodic grids wrap; truncated grids extend `f`
/// by zero.
pub struct Convolver {
    shape: [usize; 3],
    padded: [usize; 3],
    max_half: [usize; 3],
    ws: SpectralWorkspace,
    spectrum: Vec<Complex64>,
}

impl Convolver {
    pub fn new(f: &ScalarField, max_half: [usize; 3]) -> Result<Self> {
        let grid = f.grid;
        let shape = grid.shape();
        let d = grid.dimension();
        let mut padded = shape;
        let mut max_half = max_half;
        for a in 0..3 {
            if a >= d {
                max_half[a] = 0;
                continue;
            }
            if !grid.is_periodic() {
                padded[a] = fast_len(shape[a] + max_half[a]);
            }
        }
        let pgrid = GridSpec::new(
            d,
            &vec![1.0; d],
            &padded[..d],
            &vec![0.0; d],
            Topology::Periodic,
        )?;
        let mut ws = SpectralWorkspace::new(&pgrid)?;
        let mut data = vec![Complex64::default(); pgrid.len()];
        for (idx, &v) in f.values.iter().enumerate() {
            let m = grid.multi_index(idx);
            data[pgrid.flat_index(m)] = Complex64::new(v, 0.0);
        }
        ws.forward(&mut data);
        Ok(Convolver {
            shape,
            padded,
            max_half,
            ws,
            spectrum: data,
        })
    }

    /// Apply a kernel given as a list of `(offset, weight)` pairs.
    pub fn apply(&mut self, kernel: impl IntoIterator<Item = ([i64; 3], f64)>) -> Vec<f64> {
        let pgrid = *self.ws.grid();
        let mut k = vec![Complex64::default(); pgrid.len()];
        for (o, w) in kernel {
            let mut m = [0usize; 3];
            for a in 0..3 {
                debug_assert!(o[a].unsigned_abs() as usize <= self.max_half[a] || self.padded[a] == self.shape[a]);
                m[a] = o[a].rem_euclid(self.padded[a] as i64) as usize;
            }
            k[pgrid.flat_index(m)] += w;
        }
        self.ws.forward(&mut k);
        for (a, b) in k.iter_mut().zip(&self.spectrum) {
            *a *= b;
        }
        self.ws.inverse(&mut k);
        let n: usize = self.shape.iter().product();
        let mut out = Vec::with_capacity(n);
        let [nx, ny, nz] = self.shape;
        for i in 0..nx {
            for j in 0..ny {
                for l in 0..nz {
                    out.push(k[pgrid.flat_index([i, j, l])].re);
                }
            }
        }
        out
    }
}

/// Smallest 2-3-5-smooth length `>= n`; extra zero padding is harmless for
/// linear convolution and keeps the FFT off the slow prime-size path.
fn fast_len(n: usize) -> usize {
    let smooth = |mut m: usize| {
        for p in [2, 3, 5] {
            while m % p == 0 {
                m /= p;
            }
        }
        m == 1
    };
    (n.max(1)..).find(|&m| smooth(m)).expect("smooth numbers are unbounded")
}

/// Integer offsets within the box `|o_a| <= half[a]`.
pub fn offsets(half: [usize; 3]) -> impl Iterator<Item = [i64; 3]> {
    let h = half.map(|v| v as i64);
    (-h[0]..=h[0]).flat_map(move |i| (-h[1]..=h[1]).flat_map(move |j| (-h[2]..=h[2]).map(move |l| [i, j, l])))
}
