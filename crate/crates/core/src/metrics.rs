//! PSNR and S/MSE scoring between a reference and an estimate.
//!
//! Both metrics are computed on linear-intensity images (after the exp
//! stage of the despeckler, never in the log domain). The PSNR peak is
//! `max(reference)` of the specific reference image rather than a fixed
//! bit-depth constant, because floating-point intensities have no
//! canonical full-scale value; scores are therefore comparable only
//! against the same reference, which is how the evaluation tables use
//! them. Identical images would divide by zero, so those report the
//! documented [`IDENTICAL_CAP_DB`] sentinel instead.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::IntensityImage;

/// Score reported when the estimate equals the reference exactly
/// (zero error means an unbounded ratio).
pub const IDENTICAL_CAP_DB: f64 = 300.0;

/// Pair of quality scores plus provenance of what was compared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub psnr_db: f64,
    pub smse_db: f64,
    pub reference_id: String,
    pub estimate_id: String,
}

impl ScoreReport {
    /// Score `estimate` against `reference`, labelling the rows with the
    /// given provenance strings.
    pub fn new(
        reference: &IntensityImage,
        estimate: &IntensityImage,
        reference_id: impl Into<String>,
        estimate_id: impl Into<String>,
    ) -> Result<Self> {
        Ok(Self {
            psnr_db: psnr(reference, estimate)?,
            smse_db: smse(reference, estimate)?,
            reference_id: reference_id.into(),
            estimate_id: estimate_id.into(),
        })
    }
}

fn check_shapes(reference: &IntensityImage, estimate: &IntensityImage) -> Result<()> {
    let (rny, rnx) = reference.pixels.dim();
    let (eny, enx) = estimate.pixels.dim();
    if (rny, rnx) != (eny, enx) {
        return Err(Error::GridMismatch {
            expected_nx: rnx,
            expected_ny: rny,
            got_nx: enx,
            got_ny: eny,
        });
    }
    Ok(())
}

fn mean_squared_error(reference: &IntensityImage, estimate: &IntensityImage) -> f64 {
    let n = reference.pixels.len() as f64;
    reference
        .pixels
        .iter()
        .zip(estimate.pixels.iter())
        .map(|(r, e)| (r - e) * (r - e))
        .sum::<f64>()
        / n
}

/// Peak signal-to-noise ratio `10 log10(max(ref)^2 / MSE)` in dB.
pub fn psnr(reference: &IntensityImage, estimate: &IntensityImage) -> Result<f64> {
    check_shapes(reference, estimate)?;
    let mse = mean_squared_error(reference, estimate);
    if mse == 0.0 {
        return Ok(IDENTICAL_CAP_DB);
    }
    let peak = reference.max();
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Signal-to-mean-squared-error ratio `10 log10(sum ref^2 / sum (ref-est)^2)`
/// in dB.
pub fn smse(reference: &IntensityImage, estimate: &IntensityImage) -> Result<f64> {
    check_shapes(reference, estimate)?;
    let err: f64 = reference
        .pixels
        .iter()
        .zip(estimate.pixels.iter())
        .map(|(r, e)| (r - e) * (r - e))
        .sum();
    if err == 0.0 {
        return Ok(IDENTICAL_CAP_DB);
    }
    let signal: f64 = reference.pixels.iter().map(|r| r * r).sum();
    Ok(10.0 * (signal / err).log10())
}
