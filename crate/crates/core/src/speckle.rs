//! L-look multiplicative speckle in the log-normal model.
//!
//! A speckled observation is `G = F·V` with `F` the speckle-free intensity
//! and `V = exp(N(μ, σ²))` drawn independently per pixel. The look count
//! enters through `σ² = trigamma(L)` — the exact log-intensity variance of
//! L-look gamma speckle — so "more looks" means less noise with the right
//! asymptotics, and `μ = −σ²/2` makes `E[V] = 1` so speckle never shifts
//! mean radiometry.
//!
//! The underlying standard-normal field depends only on `(seed, pixel)`,
//! never on `L`; the look count enters as a pure scale factor. Realizations
//! at different `L` under one seed are therefore coupled (common random
//! numbers), which makes "variance strictly decreases with L" hold per
//! seed, not only in expectation.
//!
//! Rows are generated from independent counter-indexed streams of one
//! seeded cipher, so parallel generation is deterministic regardless of
//! thread count.

use ndarray::Array2;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::IntensityImage;

/// Exact trigamma at a positive integer: `ψ₁(n) = π²/6 − Σ_{j<n} 1/j²`.
pub fn trigamma_int(n: u32) -> f64 {
    let mut acc = std::f64::consts::PI * std::f64::consts::PI / 6.0;
    for j in 1..n {
        let j = f64::from(j);
        acc -= 1.0 / (j * j);
    }
    acc
}

/// Look count, seed, and the derived log-normal parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpeckleParamsRaw", into = "SpeckleParamsRaw")]
pub struct SpeckleParams {
    looks: u32,
    seed: u64,
    sigma2: f64,
    mu: f64,
}

#[derive(Serialize, Deserialize)]
struct SpeckleParamsRaw {
    looks: u32,
    #[serde(default)]
    seed: u64,
}

impl TryFrom<SpeckleParamsRaw> for SpeckleParams {
    type Error = Error;
    fn try_from(raw: SpeckleParamsRaw) -> Result<Self> {
        SpeckleParams::new(raw.looks, raw.seed)
    }
}

impl From<SpeckleParams> for SpeckleParamsRaw {
    fn from(p: SpeckleParams) -> Self {
        Self { looks: p.looks, seed: p.seed }
    }
}

impl SpeckleParams {
    pub fn new(looks: u32, seed: u64) -> Result<Self> {
        if looks < 1 {
            return Err(Error::Config("look count must be at least 1".into()));
        }
        let sigma2 = trigamma_int(looks);
        Ok(Self { looks, seed, sigma2, mu: -0.5 * sigma2 })
    }

    pub fn looks(&self) -> u32 {
        self.looks
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Log-domain variance `trigamma(L)`.
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Log-domain mean `−σ²/2` (unit-mean normalization).
    pub fn mu(&self) -> f64 {
        self.mu
    }
}

/// One standard-normal draw per call from a cipher stream, via Box–Muller
/// on explicit 53-bit uniforms. Each call consumes a fixed number of
/// cipher words, so draw positions are a pure function of the draw index.
struct NormalStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalStream {
    /// Stream `row` of the cipher keyed by `seed`. The row offset keeps
    /// these streams disjoint from default-stream uses of the same seed.
    fn for_row(seed: u64, row: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream((1u64 << 32) + row as u64);
        Self { rng, spare: None }
    }

    fn uniform_open01(&mut self) -> f64 {
        // 53 random bits into (0, 1]: never 0, so the log below is finite
        let bits = self.rng.next_u64() >> 11;
        (bits as f64 + 1.0) * (1.0 / 9_007_199_254_740_992.0)
    }

    fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform_open01();
        let u2 = self.uniform_open01();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}

/// The multiplicative noise field `V` alone, on an `ny × nx` grid.
///
/// `log V` is exactly Gaussian with mean `μ` and variance `σ²`; the
/// standard-normal input depends only on `(seed, pixel)`.
pub fn speckle_field(ny: usize, nx: usize, params: &SpeckleParams) -> Array2<f64> {
    let sigma = params.sigma2.sqrt();
    let mu = params.mu;
    let mut field = Array2::zeros((ny, nx));
    let seed = params.seed;
    field
        .as_slice_mut()
        .expect("freshly allocated array is contiguous")
        .par_chunks_mut(nx)
        .enumerate()
        .for_each(|(iy, row)| {
            let mut stream = NormalStream::for_row(seed, iy);
            for v in row.iter_mut() {
                *v = (mu + sigma * stream.next_normal()).exp();
            }
        });
    field
}

/// Multiply a speckle-free image by an L-look log-normal noise field.
pub fn apply_speckle(image: &IntensityImage, params: &SpeckleParams) -> Result<IntensityImage> {
    let (ny, nx) = image.pixels.dim();
    let field = speckle_field(ny, nx, params);
    let mut out = IntensityImage::new(&image.pixels * &field, image.dx, image.dy)?;
    out.metadata = image.metadata.clone();
    out.metadata.seed = Some(params.seed);
    out.metadata.notes.push(format!(
        "speckle: {} looks, log-variance {:.6}, seed {}",
        params.looks, params.sigma2, params.seed
    ));
    Ok(out)
}
