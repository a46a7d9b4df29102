//! The five subcommands as library functions.
//!
//! Each command validates its inputs, does the work through
//! `oceansar-core`, and writes rasters, PNG views, metadata sidecars and
//! reports into an output directory. They are plain functions returning
//! their products, so integration tests (and the pipeline command, which
//! is just the other four chained) drive them without spawning processes.
//!
//! Determinism contract: given one config, every byte written is a pure
//! function of that config. Scene seeds drive the sea phases and the
//! speckle stream (disjoint generator streams of the same seed), file
//! names are fixed patterns, and sidecars carry no timestamps.

use std::fs;
use std::path::{Path, PathBuf};

use oceansar_core::prox::{despeckle, DespeckleConfig, RegulariserSpec};
use oceansar_core::sar::{render, RenderStats};
use oceansar_core::sea_surface::synthesize;
use oceansar_core::speckle::apply_speckle;
use oceansar_core::wake::{composite_surface, wake_elevation, WakeField};
use oceansar_core::wavelet::WaveletKind;
use oceansar_core::{metrics, IntensityImage, SpeckleParams};

use crate::config::{ExperimentConfig, ReportFormat, ResolvedExperiment};
use crate::raster::{
    quantize, read_raster, read_sidecar, write_png, write_raster, write_sidecar, Sidecar,
    RASTER_EXT,
};
use crate::report::{BenchmarkReport, EvalRecord};
use crate::{write_err, CliError, CliResult};

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| write_err(dir, e))
}

/// Write one image as raster (+ optional PNG) with its sidecar; returns
/// the paths written.
fn emit(
    dir: &Path,
    stem: &str,
    image: &IntensityImage,
    sidecar: &Sidecar,
    png: bool,
) -> CliResult<Vec<PathBuf>> {
    let raster = dir.join(format!("{stem}.{RASTER_EXT}"));
    write_raster(&raster, image)?;
    let mut wrote = vec![raster.clone()];
    wrote.push(write_sidecar(&raster, sidecar)?);
    if png {
        let view = dir.join(format!("{stem}.png"));
        write_png(&view, image)?;
        wrote.push(view);
    }
    Ok(wrote)
}

// --------------------------------------------------------------------
// simulate
// --------------------------------------------------------------------

/// Product of [`cmd_simulate`]: the resolved experiment, one speckle-free
/// image per seed (quantized exactly as stored on disk), and every path
/// written.
#[derive(Debug)]
pub struct SimulateOutput {
    pub resolved: ResolvedExperiment,
    pub images: Vec<(u64, IntensityImage)>,
    pub wrote: Vec<PathBuf>,
}

/// Render the speckle-free scene for one seed of a resolved experiment.
fn render_clean(
    resolved: &ResolvedExperiment,
    wake: Option<&WakeField>,
    seed: u64,
) -> CliResult<(IntensityImage, RenderStats)> {
    let cfg = &resolved.config;
    let sea = synthesize(&cfg.scene.spectrum, &resolved.grid, &cfg.scene.synthesis, seed)?;
    let surface = match wake {
        Some(w) => composite_surface(&sea, w)?,
        None => sea,
    };
    Ok(render(&surface, &cfg.radar, &cfg.scene.spectrum)?)
}

/// Simulate the speckle-free scene for every configured seed and write
/// the rasters. The wake field is seed-independent and computed once.
pub fn cmd_simulate(config: &ExperimentConfig) -> CliResult<SimulateOutput> {
    let resolved = config.resolve()?;
    let dir = resolved.config.output.dir.clone();
    ensure_dir(&dir)?;
    let mut wrote = vec![resolved.write(&dir)?];

    let wake = match &resolved.config.scene.ship {
        Some(ship) => Some(wake_elevation(&resolved.grid, ship)?),
        None => None,
    };

    let png = resolved.config.output.write_png;
    let mut images = Vec::with_capacity(resolved.config.noise.seeds.len());
    for &seed in &resolved.config.noise.seeds {
        let (image, stats) = render_clean(&resolved, wake.as_ref(), seed)?;
        let image = quantize(&image)?;
        let mut sidecar = Sidecar::new("clean");
        sidecar.config_hash = Some(resolved.config_hash.clone());
        sidecar.seed = Some(seed);
        sidecar.notes = image.metadata.notes.clone();
        sidecar.notes.push(format!(
            "facets: {} total, {} shadowed, {} clamped, {:.3e} bunching loss",
            stats.total_facets,
            stats.shadowed_facets,
            stats.clamped_facets,
            stats.bunching.lost_fraction()
        ));
        wrote.extend(emit(&dir, &format!("clean_seed{seed}"), &image, &sidecar, png)?);
        images.push((seed, image));
    }
    Ok(SimulateOutput { resolved, images, wrote })
}

// --------------------------------------------------------------------
// speckle
// --------------------------------------------------------------------

/// Product of [`cmd_speckle`]: one noisy image per look count, quantized
/// as stored.
#[derive(Debug)]
pub struct SpeckleOutput {
    pub images: Vec<(u32, IntensityImage)>,
    pub wrote: Vec<PathBuf>,
}

/// Corrupt a clean raster with L-look speckle, one output per look count.
pub fn cmd_speckle(
    input: &Path,
    looks: &[u32],
    seed: u64,
    out_dir: &Path,
    png: bool,
) -> CliResult<SpeckleOutput> {
    if looks.is_empty() {
        return Err(CliError::Validation("speckle: need at least one look count".into()));
    }
    let clean = read_raster(input)?;
    let inherited = read_sidecar(input);
    ensure_dir(out_dir)?;

    let mut images = Vec::with_capacity(looks.len());
    let mut wrote = Vec::new();
    for &l in looks {
        let params = SpeckleParams::new(l, seed)?;
        let noisy = quantize(&apply_speckle(&clean, &params)?)?;
        let mut sidecar = Sidecar::new("noisy");
        sidecar.config_hash = inherited.as_ref().and_then(|s| s.config_hash.clone());
        sidecar.seed = Some(seed);
        sidecar.looks = Some(l);
        sidecar.method = Some("noisy".into());
        sidecar.notes = noisy.metadata.notes.clone();
        wrote.extend(emit(out_dir, &format!("noisy_L{l}_seed{seed}"), &noisy, &sidecar, png)?);
        images.push((l, noisy));
    }
    Ok(SpeckleOutput { images, wrote })
}

// --------------------------------------------------------------------
// despeckle
// --------------------------------------------------------------------

/// What [`cmd_despeckle`] needs besides the input file.
pub struct DespeckleRequest {
    pub spec: RegulariserSpec,
    pub wavelet: WaveletKind,
    pub levels: usize,
    /// Look count of the input, for the log-domain bias correction.
    /// `None` falls back to the input sidecar; without either source the
    /// correction is skipped with a warning.
    pub looks: Option<u32>,
}

/// Product of [`cmd_despeckle`]: the restored image (quantized as
/// stored) and the solver report text.
#[derive(Debug)]
pub struct DespeckleOutput {
    pub restored: IntensityImage,
    pub report: String,
    pub wrote: Vec<PathBuf>,
}

/// Despeckle one noisy raster with one regulariser.
pub fn cmd_despeckle(
    input: &Path,
    request: &DespeckleRequest,
    out_dir: &Path,
    png: bool,
) -> CliResult<DespeckleOutput> {
    let noisy = read_raster(input)?;
    let inherited = read_sidecar(input);
    ensure_dir(out_dir)?;

    let looks = request.looks.or_else(|| inherited.as_ref().and_then(|s| s.looks));
    let speckle_sigma2 = match looks {
        Some(l) => SpeckleParams::new(l, 0)?.sigma2(),
        None => {
            log::warn!(
                "{}: look count unknown (no --looks and no sidecar); skipping the log-domain bias correction",
                input.display()
            );
            0.0
        }
    };
    let cfg = DespeckleConfig {
        regulariser: request.spec,
        wavelet: request.wavelet,
        levels: request.levels,
        speckle_sigma2,
        ..DespeckleConfig::default()
    };
    let restored = quantize(&despeckle(&noisy, &cfg)?)?;
    let report = restored.metadata.notes.join("\n") + "\n";

    // name the output after the input's place in the experiment when known
    let method = cfg.regulariser.kind.name();
    let seed = inherited.as_ref().and_then(|s| s.seed);
    let stem = match (looks, seed) {
        (Some(l), Some(s)) => format!("despeckled_{method}_L{l}_seed{s}"),
        _ => {
            let input_stem =
                input.file_stem().and_then(|s| s.to_str()).unwrap_or("image").to_string();
            format!("despeckled_{method}_{input_stem}")
        }
    };

    let mut sidecar = Sidecar::new("despeckled");
    sidecar.config_hash = inherited.as_ref().and_then(|s| s.config_hash.clone());
    sidecar.seed = seed;
    sidecar.looks = looks;
    sidecar.method = Some(method.into());
    sidecar.notes = restored.metadata.notes.clone();
    let mut wrote = emit(out_dir, &stem, &restored, &sidecar, png)?;

    let report_path = out_dir.join(format!("{stem}.report.txt"));
    fs::write(&report_path, &report).map_err(|e| write_err(&report_path, e))?;
    wrote.push(report_path);

    Ok(DespeckleOutput { restored, report, wrote })
}

// --------------------------------------------------------------------
// evaluate
// --------------------------------------------------------------------

/// Identify an estimate for its table row: method, looks, seed. Sidecar
/// first, filename pattern second, bare stem last.
fn label_estimate(path: &Path) -> (String, u32, u64) {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("estimate").to_string();
    let mut method: Option<String> = None;
    let mut looks: Option<u32> = None;
    let mut seed: Option<u64> = None;

    if let Some(sc) = read_sidecar(path) {
        method = sc.method.or(match sc.role.as_str() {
            "noisy" | "clean" => Some(sc.role.clone()),
            _ => None,
        });
        looks = sc.looks;
        seed = sc.seed;
    }

    // filename fallback: e.g. noisy_L3_seed101, despeckled_cauchy_L3_seed101
    let tokens: Vec<&str> = stem.split('_').collect();
    if method.is_none() {
        method = match tokens.as_slice() {
            ["despeckled", m, ..] => Some((*m).to_string()),
            [first, ..] => Some((*first).to_string()),
            [] => None,
        };
    }
    for t in &tokens {
        if looks.is_none() {
            if let Some(rest) = t.strip_prefix('L') {
                looks = rest.parse().ok();
            }
        }
        if seed.is_none() {
            if let Some(rest) = t.strip_prefix("seed") {
                seed = rest.parse().ok();
            }
        }
    }
    (method.unwrap_or(stem), looks.unwrap_or(0), seed.unwrap_or(0))
}

/// Score estimates against a speckle-free reference and build the table.
pub fn cmd_evaluate(
    reference: &Path,
    estimates: &[PathBuf],
    out_dir: Option<&Path>,
    format: ReportFormat,
) -> CliResult<BenchmarkReport> {
    if estimates.is_empty() {
        return Err(CliError::Validation("evaluate: need at least one estimate file".into()));
    }
    let reference_img = read_raster(reference)?;
    let mut records = Vec::with_capacity(estimates.len());
    for path in estimates {
        let estimate = read_raster(path)?;
        let (method, looks, seed) = label_estimate(path);
        records.push(EvalRecord {
            method,
            looks,
            seed,
            psnr_db: metrics::psnr(&reference_img, &estimate)?,
            smse_db: metrics::smse(&reference_img, &estimate)?,
        });
    }
    let report = BenchmarkReport::new(records);
    if let Some(dir) = out_dir {
        ensure_dir(dir)?;
        report.write(dir, format)?;
    }
    Ok(report)
}

// --------------------------------------------------------------------
// pipeline
// --------------------------------------------------------------------

/// Product of [`cmd_pipeline`]: the benchmark table and every path
/// written.
#[derive(Debug)]
pub struct PipelineOutput {
    pub resolved: ResolvedExperiment,
    pub report: BenchmarkReport,
    pub wrote: Vec<PathBuf>,
}

/// The whole experiment: simulate → speckle (× look count) → despeckle
/// (× regulariser) → evaluate, all from one config.
pub fn cmd_pipeline(config: &ExperimentConfig) -> CliResult<PipelineOutput> {
    let mut sim = cmd_simulate(config)?;
    let resolved = sim.resolved.clone();
    let cfg = &resolved.config;
    let dir = cfg.output.dir.clone();
    let png = cfg.output.write_png;
    let mut wrote = std::mem::take(&mut sim.wrote);
    let mut records = Vec::new();

    for (seed, clean) in &sim.images {
        for &looks in &cfg.noise.looks {
            let params = SpeckleParams::new(looks, *seed)?;
            let noisy = quantize(&apply_speckle(clean, &params)?)?;
            let mut sidecar = Sidecar::new("noisy");
            sidecar.config_hash = Some(resolved.config_hash.clone());
            sidecar.seed = Some(*seed);
            sidecar.looks = Some(looks);
            sidecar.method = Some("noisy".into());
            sidecar.notes = noisy.metadata.notes.clone();
            wrote.extend(emit(
                &dir,
                &format!("noisy_L{looks}_seed{seed}"),
                &noisy,
                &sidecar,
                png,
            )?);
            records.push(EvalRecord {
                method: "noisy".into(),
                looks,
                seed: *seed,
                psnr_db: metrics::psnr(clean, &noisy)?,
                smse_db: metrics::smse(clean, &noisy)?,
            });

            for spec in &cfg.despeckle.methods {
                let dcfg = DespeckleConfig {
                    regulariser: *spec,
                    wavelet: cfg.despeckle.wavelet,
                    levels: cfg.despeckle.levels,
                    speckle_sigma2: params.sigma2(),
                    ..DespeckleConfig::default()
                };
                let restored = quantize(&despeckle(&noisy, &dcfg)?)?;
                let method = spec.kind.name();
                let mut sidecar = Sidecar::new("despeckled");
                sidecar.config_hash = Some(resolved.config_hash.clone());
                sidecar.seed = Some(*seed);
                sidecar.looks = Some(looks);
                sidecar.method = Some(method.into());
                sidecar.notes = restored.metadata.notes.clone();
                wrote.extend(emit(
                    &dir,
                    &format!("despeckled_{method}_L{looks}_seed{seed}"),
                    &restored,
                    &sidecar,
                    png,
                )?);
                records.push(EvalRecord {
                    method: method.into(),
                    looks,
                    seed: *seed,
                    psnr_db: metrics::psnr(clean, &restored)?,
                    smse_db: metrics::smse(clean, &restored)?,
                });
            }
        }
    }

    let report = BenchmarkReport::new(records);
    wrote.extend(report.write(&dir, cfg.output.report_format)?);
    Ok(PipelineOutput { resolved, report, wrote })
}
