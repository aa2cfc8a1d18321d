//! Seeded, thread-count independent samplers and the statistics used to
//! compare their output with closed forms and envelopes.
//!
//! Rows are produced in chunks of [`CHUNK_ROWS`]; chunk `i` draws from the
//! ChaCha8 stream `i` of the batch seed, so a batch depends only on its
//! inputs and never on how chunks are scheduled.

mod density;
mod fit;
mod io;
mod samplers;
mod stats;

pub use density::{estimate_density, Axis, DensityEstimate, Grid, Transform, POISSON_Z99};
pub use fit::{compare_bounds, fit_envelopes, linear_fit, BoundReport, FittedEnvelopes, LinearFit, COMPARE_POLICY};
pub use io::{read_batch, write_batch};
pub use samplers::{euler_maruyama, sample_exact, sample_gaussian_exact, AsianScheme, EmOptions, YorNormalization};
pub use stats::{cell_probabilities, chi_square_test, fit_slope, variance_slope, ChiSquareResult};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::geometry::ModelId;

pub const CHUNK_ROWS: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    Exact,
    Euler { dt: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Diagnostics {
    /// Asian Euler steps that crossed zero and were reflected to the floor.
    pub reflections: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    /// `None` for batches drawn directly from a Gaussian law.
    pub model: Option<ModelId>,
    pub dims: usize,
    /// Row-major `n × dims` endpoint matrix.
    pub data: Vec<f64>,
    pub n: usize,
    pub seed: u64,
    pub horizon: f64,
    pub scheme: Scheme,
    pub diagnostics: Diagnostics,
}

impl SampleBatch {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dims..(i + 1) * self.dims]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dims)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dims];
        for r in self.rows() {
            for (a, b) in m.iter_mut().zip(r) {
                *a += b;
            }
        }
        m.iter().map(|v| v / self.n as f64).collect()
    }

    /// Unbiased sample covariance.
    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let m = self.mean();
        let d = self.dims;
        let mut c = vec![vec![0.0; d]; d];
        for r in self.rows() {
            for i in 0..d {
                for j in i..d {
                    c[i][j] += (r[i] - m[i]) * (r[j] - m[j]);
                }
            }
        }
        for i in 0..d {
            for j in i..d {
                c[i][j] /= (self.n - 1) as f64;
                c[j][i] = c[i][j];
            }
        }
        c
    }
}

/// Runs `fill(rng, rows, out)` on every chunk and concatenates in chunk order.
/// `fill` returns the number of reflections it performed.
pub(crate) fn chunked<F>(n: usize, dims: usize, seed: u64, fill: F) -> (Vec<f64>, u64)
where
    F: Fn(&mut ChaCha8Rng, usize, &mut [f64]) -> u64 + Sync,
{
    let chunks = n.div_ceil(CHUNK_ROWS);
    let parts: Vec<(Vec<f64>, u64)> = (0..chunks)
        .into_par_iter()
        .map(|i| {
            let rows = CHUNK_ROWS.min(n - i * CHUNK_ROWS);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut out = vec![0.0; rows * dims];
            let r = fill(&mut rng, rows, &mut out);
            (out, r)
        })
        .collect();
    let mut data = Vec::with_capacity(n * dims);
    let mut reflections = 0;
    for (p, r) in parts {
        data.extend_from_slice(&p);
        reflections += r;
    }
    (data, reflections)
}
