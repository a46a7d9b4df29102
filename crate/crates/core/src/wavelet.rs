//! Log/exp domain conversion and the multilevel 2-D discrete wavelet
//! transform used by the despeckler.
//!
//! Multiplicative speckle becomes additive noise after a logarithm, so the
//! despeckling chain is `log -> analysis -> shrink -> synthesis -> exp`.
//! This module supplies the two domain conversions and a periodized,
//! orthogonal, separable DWT. Orthogonality matters: it keeps the
//! least-squares data-fidelity term of the coefficient-domain problem
//! equivalent to the image-domain one, and it gives Parseval energy
//! conservation, which the tests pin to 1e-10.
//!
//! Filters are hardcoded for three standard orthonormal families (Haar and
//! the 4- and 8-tap Daubechies filters); the highpass is derived from the
//! lowpass by the usual alternating-flip rule, and the inverse transform is
//! the exact adjoint, so perfect reconstruction is structural rather than
//! numerical luck.

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image::IntensityImage;

/// Exponent clamp in [`exp_transform`]: exp(700) ~ 1e304 stays finite.
pub const MAX_EXP_ARG: f64 = 700.0;

/// 8-tap Daubechies lowpass (4 vanishing moments) — the default analysis
/// filter.
const DB4_LOWPASS: [f64; 8] = [
    0.230_377_813_308_855_23,
    0.714_846_570_552_541_5,
    0.630_880_767_929_590_4,
    -0.027_983_769_416_983_85,
    -0.187_034_811_718_881_14,
    0.030_841_381_835_986_965,
    0.032_883_011_666_982_945,
    -0.010_597_401_784_997_278,
];

/// 4-tap Daubechies lowpass (2 vanishing moments).
const DB2_LOWPASS: [f64; 4] = [
    0.482_962_913_144_690_25,
    0.836_516_303_737_807_9,
    0.224_143_868_041_857_35,
    -0.129_409_522_550_921_45,
];

const HAAR_LOWPASS: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];

/// Supported orthonormal wavelet families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveletKind {
    Haar,
    Db2,
    Db4,
}

impl Default for WaveletKind {
    fn default() -> Self {
        WaveletKind::Db4
    }
}

impl FromStr for WaveletKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "haar" | "db1" => Ok(WaveletKind::Haar),
            "db2" => Ok(WaveletKind::Db2),
            "db4" => Ok(WaveletKind::Db4),
            other => Err(Error::Config(format!(
                "unknown wavelet '{other}' (expected haar, db2 or db4)"
            ))),
        }
    }
}

impl WaveletKind {
    pub fn name(&self) -> &'static str {
        match self {
            WaveletKind::Haar => "haar",
            WaveletKind::Db2 => "db2",
            WaveletKind::Db4 => "db4",
        }
    }

    /// Analysis lowpass taps.
    pub fn lowpass(&self) -> &'static [f64] {
        match self {
            WaveletKind::Haar => &HAAR_LOWPASS,
            WaveletKind::Db2 => &DB2_LOWPASS,
            WaveletKind::Db4 => &DB4_LOWPASS,
        }
    }

    /// Analysis highpass by alternating flip: g[t] = (-1)^t h[T-1-t].
    pub fn highpass(&self) -> Vec<f64> {
        let h = self.lowpass();
        let n = h.len();
        (0..n)
            .map(|t| if t % 2 == 0 { h[n - 1 - t] } else { -h[n - 1 - t] })
            .collect()
    }
}

/// Boundary handling. Only the periodized extension is implemented — it is
/// the one that keeps the decimated transform square and orthogonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    Periodic,
}

impl Default for BoundaryMode {
    fn default() -> Self {
        BoundaryMode::Periodic
    }
}

impl FromStr for BoundaryMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "periodic" | "per" => Ok(BoundaryMode::Periodic),
            other => Err(Error::Config(format!(
                "unknown boundary mode '{other}' (expected periodic)"
            ))),
        }
    }
}

/// Detail planes of one decomposition level.
///
/// Orientation naming follows which axis carries the highpass:
/// `horizontal` is highpass along x / lowpass along y (vertical-edge
/// detail), `vertical` the transpose, `diagonal` highpass along both.
#[derive(Debug, Clone, PartialEq)]
pub struct DetailPlanes {
    pub horizontal: Array2<f64>,
    pub vertical: Array2<f64>,
    pub diagonal: Array2<f64>,
}

impl DetailPlanes {
    pub fn iter(&self) -> impl Iterator<Item = &Array2<f64>> {
        [&self.horizontal, &self.vertical, &self.diagonal].into_iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Array2<f64>> {
        [&mut self.horizontal, &mut self.vertical, &mut self.diagonal].into_iter()
    }
}

/// Multilevel decomposition: detail planes per level (finest first) plus
/// the coarsest approximation plane.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandPyramid {
    /// Finest level first; `details[l]` has shape `input_shape / 2^(l+1)`.
    pub details: Vec<DetailPlanes>,
    /// Approximation at the coarsest level.
    pub approx: Array2<f64>,
    pub wavelet: WaveletKind,
    pub boundary: BoundaryMode,
    /// Shape (ny, nx) of the analyzed grid.
    pub input_shape: (usize, usize),
}

impl SubbandPyramid {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    /// All detail planes, finest level first, for uniform shrinkage loops.
    pub fn detail_planes_mut(&mut self) -> impl Iterator<Item = &mut Array2<f64>> {
        self.details.iter_mut().flat_map(|d| d.iter_mut())
    }

    /// Total coefficient energy including the approximation plane.
    pub fn energy(&self) -> f64 {
        let detail: f64 = self
            .details
            .iter()
            .flat_map(|d| d.iter())
            .map(|p| p.iter().map(|c| c * c).sum::<f64>())
            .sum();
        detail + self.approx.iter().map(|c| c * c).sum::<f64>()
    }

    fn validate(&self) -> Result<()> {
        let levels = self.details.len();
        if levels == 0 {
            return Err(Error::Structural("pyramid has no detail levels".into()));
        }
        let (ny, nx) = self.input_shape;
        for (l, d) in self.details.iter().enumerate() {
            let want = (ny >> (l + 1), nx >> (l + 1));
            for plane in d.iter() {
                if plane.dim() != want {
                    return Err(Error::Structural(format!(
                        "level-{l} detail plane is {:?}, schedule expects {want:?}",
                        plane.dim()
                    )));
                }
            }
        }
        let want = (ny >> levels, nx >> levels);
        if self.approx.dim() != want {
            return Err(Error::Structural(format!(
                "approximation plane is {:?}, schedule expects {want:?}",
                self.approx.dim()
            )));
        }
        Ok(())
    }
}

/// Natural log of the image with a positive floor; returns the grid and
/// how many pixels were clamped up to the floor.
pub fn log_transform(image: &IntensityImage, floor: f64) -> Result<(Array2<f64>, usize)> {
    if !(floor > 0.0) || !floor.is_finite() {
        return Err(Error::Config(format!("log floor must be positive, got {floor}")));
    }
    let mut floored = 0usize;
    let out = image.pixels.mapv(|p| {
        if p < floor {
            floored += 1;
            floor.ln()
        } else {
            p.ln()
        }
    });
    Ok((out, floored))
}

/// Default log floor: 1e-10 of the image peak (shadowed facets render as
/// exact zeros and must not produce -inf).
pub fn default_floor(image: &IntensityImage) -> f64 {
    (1e-10 * image.max()).max(f64::MIN_POSITIVE)
}

/// Exponentiate a log-domain grid back to intensity, adding `bias` (the
/// log-domain mean correction) first. Exponents are clamped at
/// [`MAX_EXP_ARG`] so the output stays finite.
pub fn exp_transform(grid: &Array2<f64>, bias: f64, dx: f64, dy: f64) -> Result<IntensityImage> {
    if !bias.is_finite() {
        return Err(Error::Config(format!("exp bias must be finite, got {bias}")));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(
            "exp_transform input contains non-finite values".into(),
        ));
    }
    let pixels = grid.mapv(|v| (v + bias).min(MAX_EXP_ARG).exp());
    IntensityImage::new(pixels, dx, dy)
}

/// One periodized analysis step along a signal: `x -> (approx, detail)`.
fn analyze_1d(x: &[f64], h: &[f64], g: &[f64], approx: &mut [f64], detail: &mut [f64]) {
    let n = x.len();
    let half = n / 2;
    for i in 0..half {
        let mut a = 0.0;
        let mut d = 0.0;
        for (t, (&ht, &gt)) in h.iter().zip(g.iter()).enumerate() {
            let xi = x[(2 * i + t) % n];
            a += ht * xi;
            d += gt * xi;
        }
        approx[i] = a;
        detail[i] = d;
    }
}

/// Adjoint of [`analyze_1d`]: scatter `(approx, detail)` back to a signal.
fn synthesize_1d(approx: &[f64], detail: &[f64], h: &[f64], g: &[f64], x: &mut [f64]) {
    let n = x.len();
    x.fill(0.0);
    for i in 0..n / 2 {
        let (a, d) = (approx[i], detail[i]);
        for (t, (&ht, &gt)) in h.iter().zip(g.iter()).enumerate() {
            x[(2 * i + t) % n] += a * ht + d * gt;
        }
    }
}

/// One separable analysis level: rows (x axis) then columns (y axis).
/// Returns (approx, high-x, high-y, high-both).
fn analyze_level(
    data: &Array2<f64>,
    h: &[f64],
    g: &[f64],
) -> (Array2<f64>, Array2<f64>, Array2<f64>, Array2<f64>) {
    let (ny, nx) = data.dim();
    let (hx, hy) = (nx / 2, ny / 2);

    // rows: split each into approx|detail halves
    let mut rowpass = Array2::zeros((ny, nx));
    let mut abuf = vec![0.0; hx];
    let mut dbuf = vec![0.0; hx];
    for iy in 0..ny {
        let row: Vec<f64> = data.row(iy).to_vec();
        analyze_1d(&row, h, g, &mut abuf, &mut dbuf);
        for ix in 0..hx {
            rowpass[(iy, ix)] = abuf[ix];
            rowpass[(iy, hx + ix)] = dbuf[ix];
        }
    }

    // columns
    let mut out = Array2::zeros((ny, nx));
    let mut col = vec![0.0; ny];
    let mut acol = vec![0.0; hy];
    let mut dcol = vec![0.0; hy];
    for ix in 0..nx {
        for iy in 0..ny {
            col[iy] = rowpass[(iy, ix)];
        }
        analyze_1d(&col, h, g, &mut acol, &mut dcol);
        for iy in 0..hy {
            out[(iy, ix)] = acol[iy];
            out[(hy + iy, ix)] = dcol[iy];
        }
    }

    (
        out.slice(s![..hy, ..hx]).to_owned(),
        out.slice(s![..hy, hx..]).to_owned(),
        out.slice(s![hy.., ..hx]).to_owned(),
        out.slice(s![hy.., hx..]).to_owned(),
    )
}

/// Inverse of [`analyze_level`].
fn synthesize_level(
    ll: &Array2<f64>,
    high_x: &Array2<f64>,
    high_y: &Array2<f64>,
    high_xy: &Array2<f64>,
    h: &[f64],
    g: &[f64],
) -> Array2<f64> {
    let (hy, hx) = ll.dim();
    let (ny, nx) = (2 * hy, 2 * hx);

    // undo the column pass
    let mut colpass = Array2::zeros((ny, nx));
    let mut acol = vec![0.0; hy];
    let mut dcol = vec![0.0; hy];
    let mut col = vec![0.0; ny];
    for ix in 0..nx {
        for iy in 0..hy {
            if ix < hx {
                acol[iy] = ll[(iy, ix)];
                dcol[iy] = high_y[(iy, ix)];
            } else {
                acol[iy] = high_x[(iy, ix - hx)];
                dcol[iy] = high_xy[(iy, ix - hx)];
            }
        }
        synthesize_1d(&acol, &dcol, h, g, &mut col);
        for iy in 0..ny {
            colpass[(iy, ix)] = col[iy];
        }
    }

    // undo the row pass
    let mut out = Array2::zeros((ny, nx));
    let mut row = vec![0.0; nx];
    let mut arow = vec![0.0; hx];
    let mut drow = vec![0.0; hx];
    for iy in 0..ny {
        for ix in 0..hx {
            arow[ix] = colpass[(iy, ix)];
            drow[ix] = colpass[(iy, hx + ix)];
        }
        synthesize_1d(&arow, &drow, h, g, &mut row);
        for ix in 0..nx {
            out[(iy, ix)] = row[ix];
        }
    }
    out
}

/// Multilevel separable decomposition of `grid`.
pub fn dwt2_forward(
    grid: &Array2<f64>,
    levels: usize,
    wavelet: WaveletKind,
    boundary: BoundaryMode,
) -> Result<SubbandPyramid> {
    let (ny, nx) = grid.dim();
    if levels == 0 {
        return Err(Error::Config("need at least one decomposition level".into()));
    }
    let taps = wavelet.lowpass().len();
    let need = (1usize << levels) * taps;
    if nx < need || ny < need {
        return Err(Error::Config(format!(
            "grid {ny}x{nx} too small for {levels} levels of {} ({taps} taps): need ≥ {need} per side",
            wavelet.name()
        )));
    }
    let div = 1usize << levels;
    if nx % div != 0 || ny % div != 0 {
        return Err(Error::Config(format!(
            "grid {ny}x{nx} is not divisible by 2^levels = {div}"
        )));
    }

    let h = wavelet.lowpass();
    let g = wavelet.highpass();
    let mut details = Vec::with_capacity(levels);
    let mut current = grid.clone();
    for _ in 0..levels {
        let (ll, high_x, high_y, high_xy) = analyze_level(&current, h, &g);
        details.push(DetailPlanes {
            horizontal: high_x,
            vertical: high_y,
            diagonal: high_xy,
        });
        current = ll;
    }

    Ok(SubbandPyramid {
        details,
        approx: current,
        wavelet,
        boundary,
        input_shape: (ny, nx),
    })
}

/// Reconstruct the grid a pyramid was analyzed from.
pub fn dwt2_inverse(pyramid: &SubbandPyramid) -> Result<Array2<f64>> {
    pyramid.validate()?;
    let h = pyramid.wavelet.lowpass();
    let g = pyramid.wavelet.highpass();
    let mut current = pyramid.approx.clone();
    for d in pyramid.details.iter().rev() {
        current = synthesize_level(&current, &d.horizontal, &d.vertical, &d.diagonal, h, &g);
    }
    Ok(current)
}
