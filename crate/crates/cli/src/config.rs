//! Experiment configuration: one JSON file describes a whole benchmark.
//!
//! Every field has a default, so `{}` is a valid config and the smallest
//! useful file overrides a couple of fields, e.g.
//!
//! ```json
//! { "scene": { "ship": { "length": 52.0, "beam": 5.7, "draft": 3.5,
//!                        "froude": 0.5, "heading": 0.7853981633974483 } },
//!   "noise": { "seeds": [7] } }
//! ```
//!
//! Angles are radians throughout, matching the library types. The grid is
//! chosen by a named scale preset — `desk` (256×256 m at 2 m pixels, the
//! fast benchmark) or `paper` (the full 512×512 m scene) — unless an
//! explicit `grid` object overrides it. The ship sits at a configurable
//! scene position (metres from the lower-left sample); when omitted it is
//! auto-placed ahead of the scene centre along its own heading so the wake
//! trails through the middle of the frame.
//!
//! A config is validated before any compute, with field-level messages,
//! and each run writes the fully-resolved form (defaults expanded, grid
//! and ship placement made explicit, config hash included) next to its
//! outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use oceansar_core::prox::{RegulariserKind, RegulariserSpec, Strength};
use oceansar_core::sea_surface::SynthesisOptions;
use oceansar_core::spectrum::ElfouhailySpectrum;
use oceansar_core::wavelet::WaveletKind;
use oceansar_core::{GridSpec, SarGeometry, ShipParams, SpectrumParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{read_err, write_err, CliError, CliResult};

/// Named grid presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// 128×128 pixels at 2 m — a 256×256 m scene, minutes for a full
    /// benchmark.
    Desk,
    /// 256×256 pixels at 2 m — the full 512×512 m scene.
    Paper,
}

impl Default for Scale {
    fn default() -> Self {
        Scale::Desk
    }
}

impl Scale {
    pub fn grid(&self) -> GridConfig {
        match self {
            Scale::Desk => GridConfig { nx: 128, ny: 128, dx: 2.0, dy: 2.0 },
            Scale::Paper => GridConfig { nx: 256, ny: 256, dx: 2.0, dy: 2.0 },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scale::Desk => "desk",
            Scale::Paper => "paper",
        }
    }
}

impl FromStr for Scale {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        match s.to_ascii_lowercase().as_str() {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            other => {
                Err(CliError::Validation(format!("unknown scale '{other}' (expected desk or paper)")))
            }
        }
    }
}

/// Explicit grid dimensions (pixel counts and pitches in metres).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
}

/// What is on the water.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub scale: Scale,
    /// Explicit grid; overrides the scale preset when present.
    pub grid: Option<GridConfig>,
    pub spectrum: SpectrumParams,
    /// `null` renders a pure wind sea with no wake.
    pub ship: Option<ShipParams>,
    /// Scene-frame ship position in metres; `null` auto-places the hull
    /// ahead of centre along its heading.
    pub ship_position: Option<(f64, f64)>,
    pub synthesis: SynthesisOptions,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            scale: Scale::default(),
            grid: None,
            spectrum: SpectrumParams {
                u10: 5.0,
                wind_direction: 45f64.to_radians(),
                inverse_wave_age: 0.84,
            },
            ship: Some(ShipParams {
                length: 52.0,
                beam: 5.7,
                draft: 3.5,
                froude: 0.5,
                heading: 0.0,
            }),
            ship_position: None,
            synthesis: SynthesisOptions::default(),
        }
    }
}

/// Speckle corruption plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Look counts, one noisy image per entry.
    pub looks: Vec<u32>,
    /// Experiment repetitions; each seed drives both the sea phases and
    /// the speckle stream (the two generators draw from disjoint streams).
    pub seeds: Vec<u64>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { looks: vec![3, 5, 7], seeds: vec![101, 102, 103, 104, 105] }
    }
}

/// Default strength multiplier for the Cauchy data-driven γ.
pub const CAUCHY_DEFAULT_SCALE: f64 = 1.0;
/// Default strength multiplier for the BayesShrink L1 threshold.
pub const L1_DEFAULT_SCALE: f64 = 1.0;
/// Default strength multiplier for the TV weight.
pub const TV_DEFAULT_SCALE: f64 = 1.0;

/// The three stock methods with their benchmark-tuned strengths.
pub fn default_methods() -> Vec<RegulariserSpec> {
    let with_scale = |kind, scale| {
        let mut spec = RegulariserSpec::new(kind);
        spec.strength = Strength::Auto { scale };
        spec
    };
    vec![
        with_scale(RegulariserKind::Cauchy, CAUCHY_DEFAULT_SCALE),
        with_scale(RegulariserKind::L1, L1_DEFAULT_SCALE),
        with_scale(RegulariserKind::Tv, TV_DEFAULT_SCALE),
    ]
}

/// Despeckling plan: which penalties to run and the shared transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DespeckleSection {
    pub methods: Vec<RegulariserSpec>,
    pub wavelet: WaveletKind,
    pub levels: usize,
}

impl Default for DespeckleSection {
    fn default() -> Self {
        Self { methods: default_methods(), wavelet: WaveletKind::default(), levels: 3 }
    }
}

/// Which report files to write.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Text,
    Dsv,
    Both,
}

impl Default for ReportFormat {
    fn default() -> Self {
        ReportFormat::Both
    }
}

/// Where and what to write.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub report_format: ReportFormat,
    /// Also write the 8-bit grayscale view next to each float raster.
    pub write_png: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("oceansar-out"),
            report_format: ReportFormat::default(),
            write_png: true,
        }
    }
}

/// The complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scene: SceneConfig,
    pub radar: SarGeometry,
    pub noise: NoiseConfig,
    pub despeckle: DespeckleSection,
    pub output: OutputConfig,
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    /// Replaces the seed list with this single seed.
    pub seed: Option<u64>,
    pub looks: Option<Vec<u32>>,
    pub out: Option<PathBuf>,
    /// Forces a preset; also clears an explicit `scene.grid`.
    pub scale: Option<Scale>,
}

/// A validated config with its derived quantities made explicit.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedExperiment {
    pub config: ExperimentConfig,
    /// Scene grid in world coordinates (the ship, when present, sits at
    /// the world origin).
    pub grid: GridSpec,
    /// Scene-frame ship position in metres from the lower-left sample.
    pub ship_position: Option<(f64, f64)>,
    /// Hash identifying this exact resolved experiment.
    pub config_hash: String,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| read_err(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(seed) = overrides.seed {
            self.noise.seeds = vec![seed];
        }
        if let Some(looks) = &overrides.looks {
            self.noise.looks = looks.clone();
        }
        if let Some(out) = &overrides.out {
            self.output.dir = out.clone();
        }
        if let Some(scale) = overrides.scale {
            self.scene.scale = scale;
            self.scene.grid = None;
        }
    }

    /// The grid actually used: explicit override or scale preset.
    fn grid_config(&self) -> GridConfig {
        self.scene.grid.unwrap_or_else(|| self.scene.scale.grid())
    }

    /// Check every field, naming the offender in the message.
    pub fn validate(&self) -> CliResult<()> {
        let field = |name: &str, e: oceansar_core::Error| {
            CliError::Validation(format!("{name}: {e}"))
        };

        let g = self.grid_config();
        GridSpec::new(g.nx, g.ny, g.dx, g.dy).map_err(|e| field("scene.grid", e))?;

        ElfouhailySpectrum::new(self.scene.spectrum).map_err(|e| field("scene.spectrum", e))?;

        if let Some(ship) = &self.scene.ship {
            ShipParams::new(ship.length, ship.beam, ship.draft, ship.froude, ship.heading)
                .map_err(|e| field("scene.ship", e))?;
        }
        if let Some((x, y)) = self.scene.ship_position {
            if !x.is_finite() || !y.is_finite() {
                return Err(CliError::Validation(format!(
                    "scene.ship_position: must be finite, got ({x}, {y})"
                )));
            }
        }

        let syn = &self.scene.synthesis;
        if syn.wavenumber_bins < 16 || syn.direction_bins < 16 {
            return Err(CliError::Validation(format!(
                "scene.synthesis: needs ≥ 16 wavenumber and direction bins, got {} and {}",
                syn.wavenumber_bins, syn.direction_bins
            )));
        }

        self.radar.validate().map_err(|e| field("radar", e))?;

        if self.noise.looks.is_empty() {
            return Err(CliError::Validation("noise.looks: must list at least one look count".into()));
        }
        if self.noise.looks.iter().any(|&l| l == 0) {
            return Err(CliError::Validation("noise.looks: look counts must be ≥ 1".into()));
        }
        if has_duplicates(&self.noise.looks) {
            return Err(CliError::Validation("noise.looks: duplicate look counts".into()));
        }
        if self.noise.seeds.is_empty() {
            return Err(CliError::Validation("noise.seeds: must list at least one seed".into()));
        }
        if has_duplicates(&self.noise.seeds) {
            return Err(CliError::Validation("noise.seeds: duplicate seeds".into()));
        }

        if self.despeckle.methods.is_empty() {
            return Err(CliError::Validation(
                "despeckle.methods: must list at least one regulariser".into(),
            ));
        }
        let kinds: Vec<&str> = self.despeckle.methods.iter().map(|m| m.kind.name()).collect();
        if has_duplicates(&kinds) {
            return Err(CliError::Validation(
                "despeckle.methods: each regulariser kind may appear only once".into(),
            ));
        }
        for m in &self.despeckle.methods {
            validate_method(m)?;
        }
        // despeckling acts on the rendered image, i.e. after facet → pixel
        // aggregation
        let nx_out = aggregated_count(self.radar.azimuth_resolution, g.dx, g.nx, "azimuth")?;
        let ny_out = aggregated_count(self.radar.range_resolution, g.dy, g.ny, "range")?;
        validate_decomposition(nx_out, ny_out, self.despeckle.levels, self.despeckle.wavelet)?;

        if self.output.dir.as_os_str().is_empty() {
            return Err(CliError::Validation("output.dir: must not be empty".into()));
        }
        Ok(())
    }

    /// Validate, compute the world-frame grid and ship placement, and
    /// stamp the hash. The synthesis line of sight is slaved to the radar
    /// incidence so the orbital-velocity projection and the scattering
    /// geometry always agree.
    pub fn resolve(&self) -> CliResult<ResolvedExperiment> {
        self.validate()?;
        let mut config = self.clone();
        config.scene.synthesis.incidence = config.radar.incidence;
        let g = config.grid_config();
        let (grid, ship_position) = match &config.scene.ship {
            None => (GridSpec::new(g.nx, g.ny, g.dx, g.dy)?, None),
            Some(ship) => {
                let pos = config.scene.ship_position.unwrap_or_else(|| auto_position(&g, ship));
                let grid = GridSpec::new(g.nx, g.ny, g.dx, g.dy)?.with_origin((-pos.0, -pos.1));
                (grid, Some(pos))
            }
        };
        let config_hash = config.hash()?;
        Ok(ResolvedExperiment { config, grid, ship_position, config_hash })
    }

    /// Hex digest of the canonical JSON form (first 16 chars of SHA-256).
    pub fn hash(&self) -> CliResult<String> {
        let canonical = serde_json::to_string(self)
            .map_err(|e| CliError::Runtime(format!("cannot serialize config: {e}")))?;
        let digest = Sha256::digest(canonical.as_bytes());
        let mut hex = String::with_capacity(16);
        for byte in digest.iter().take(8) {
            hex.push_str(&format!("{byte:02x}"));
        }
        Ok(hex)
    }
}

impl ResolvedExperiment {
    /// Write the resolved experiment next to its outputs.
    pub fn write(&self, dir: &Path) -> CliResult<PathBuf> {
        let path = dir.join("config.resolved.json");
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Runtime(format!("cannot serialize config: {e}")))?;
        fs::write(&path, json + "\n").map_err(|e| write_err(&path, e))?;
        Ok(path)
    }
}

fn has_duplicates<T: PartialEq>(items: &[T]) -> bool {
    items.iter().enumerate().any(|(i, a)| items[..i].contains(a))
}

/// Default hull placement: ahead of the scene centre along the heading, so
/// the wake (which trails the hull) crosses the middle of the frame.
fn auto_position(g: &GridConfig, ship: &ShipParams) -> (f64, f64) {
    let lx = (g.nx - 1) as f64 * g.dx;
    let ly = (g.ny - 1) as f64 * g.dy;
    let lead = 0.38 * lx.min(ly);
    (0.5 * lx + lead * ship.heading.cos(), 0.5 * ly + lead * ship.heading.sin())
}

fn validate_method(m: &RegulariserSpec) -> CliResult<()> {
    let name = m.kind.name();
    let p = &m.params;
    let check = |ok: bool, msg: String| {
        if ok {
            Ok(())
        } else {
            Err(CliError::Validation(format!("despeckle.methods[{name}]: {msg}")))
        }
    };
    check(p.gamma.is_finite() && p.gamma > 0.0, format!("gamma must be > 0, got {}", p.gamma))?;
    check(p.omega.is_finite() && p.omega > 0.0, format!("omega must be > 0, got {}", p.omega))?;
    check(p.lambda.is_finite() && p.lambda >= 0.0, format!("lambda must be ≥ 0, got {}", p.lambda))?;
    check(p.max_iter >= 1, "max_iter must be ≥ 1".into())?;
    check(p.tol.is_finite() && p.tol > 0.0, format!("tol must be > 0, got {}", p.tol))?;
    match m.strength {
        Strength::Auto { scale } => {
            check(scale.is_finite() && scale > 0.0, format!("auto strength scale must be > 0, got {scale}"))
        }
        Strength::Fixed { value } => {
            let positive_needed = matches!(m.kind, RegulariserKind::Cauchy);
            check(
                value.is_finite() && (value > 0.0 || (!positive_needed && value == 0.0)),
                format!("fixed strength must be {} , got {value}", if positive_needed { "> 0" } else { "≥ 0" }),
            )
        }
        Strength::Universal => check(
            m.kind == RegulariserKind::L1,
            "the universal threshold is a soft-threshold rule; it applies to l1 only".into(),
        ),
        Strength::Discrepancy => check(
            m.kind == RegulariserKind::Tv,
            "the discrepancy rule picks a TV weight; it applies to tv only".into(),
        ),
    }
}

/// Image pixel count along one axis after facet → pixel aggregation,
/// mirroring the renderer's rules so a bad combination is refused before
/// any compute.
fn aggregated_count(resolution: f64, pitch: f64, count: usize, axis: &str) -> CliResult<usize> {
    let bad = |msg: String| CliError::Validation(format!("radar.{axis}_resolution: {msg}"));
    if !resolution.is_finite() || resolution <= 0.0 {
        return Err(bad(format!("must be > 0, got {resolution}")));
    }
    if resolution < pitch * (1.0 - 1e-9) {
        return Err(bad(format!("resolution {resolution} m is finer than the {pitch} m facet pitch")));
    }
    let ratio = resolution / pitch;
    let r = ratio.round();
    if (ratio - r).abs() > 1e-9 {
        return Err(bad(format!("must be an integer multiple of the {pitch} m facet pitch")));
    }
    let r = r as usize;
    if count % r != 0 {
        return Err(bad(format!("{count} facets do not tile into blocks of {r}")));
    }
    Ok(count / r)
}

/// Mirror the transform's size rules on the rendered image dimensions.
fn validate_decomposition(nx: usize, ny: usize, levels: usize, wavelet: WaveletKind) -> CliResult<()> {
    if levels == 0 {
        return Err(CliError::Validation("despeckle.levels: must be ≥ 1".into()));
    }
    let div = 1usize << levels;
    let taps = wavelet.lowpass().len();
    let need = div * taps;
    if nx % div != 0 || ny % div != 0 {
        return Err(CliError::Validation(format!(
            "despeckle.levels: {nx}x{ny} image is not divisible by 2^{levels}"
        )));
    }
    if nx < need || ny < need {
        return Err(CliError::Validation(format!(
            "despeckle.levels: {nx}x{ny} image too small for {levels} levels of {} (needs ≥ {need} per side)",
            wavelet.name()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    // ---- defaulting ----

    #[test]
    fn empty_json_is_the_default_config() {
        let cfg: ExperimentConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.noise.looks, vec![3, 5, 7]);
        assert_eq!(cfg.despeckle.methods.len(), 3);
        assert!(cfg.scene.ship.is_some());
        cfg.validate().unwrap();
    }

    #[test]
    fn partial_json_overrides_only_named_fields() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{ "noise": { "seeds": [7], "looks": [5] },
                 "scene": { "scale": "paper" } }"#,
        )
        .unwrap();
        assert_eq!(cfg.noise.seeds, vec![7]);
        assert_eq!(cfg.noise.looks, vec![5]);
        assert_eq!(cfg.scene.scale, Scale::Paper);
        assert_eq!(cfg.scene.spectrum.u10, 5.0);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = serde_json::from_str::<ExperimentConfig>(r#"{ "sceen": {} }"#).unwrap_err();
        assert!(err.to_string().contains("sceen"));
    }

    #[test]
    fn config_roundtrips_through_json() {
        let cfg = ExperimentConfig::default();
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
    }

    // ---- validation ----

    #[test]
    fn validation_names_the_offending_field() {
        let mut cfg = ExperimentConfig::default();
        cfg.noise.looks = vec![3, 3];
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("noise.looks"), "{err}");

        let mut cfg = ExperimentConfig::default();
        cfg.scene.spectrum.u10 = -1.0;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("scene.spectrum"), "{err}");

        let mut cfg = ExperimentConfig::default();
        cfg.despeckle.methods[0].params.omega = 0.0;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("despeckle.methods"), "{err}");
    }

    #[test]
    fn duplicate_method_kinds_are_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.despeckle.methods.push(RegulariserSpec::new(RegulariserKind::Cauchy));
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn decomposition_rules_guard_grid_and_levels() {
        let mut cfg = ExperimentConfig::default();
        cfg.scene.grid = Some(GridConfig { nx: 100, ny: 128, dx: 2.0, dy: 2.0 });
        assert!(cfg.validate().is_err(), "100 is not divisible by 8");

        let mut cfg = ExperimentConfig::default();
        cfg.despeckle.levels = 0;
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.scene.grid = Some(GridConfig { nx: 32, ny: 32, dx: 2.0, dy: 2.0 });
        cfg.despeckle.levels = 2;
        // 32 = 4·8 taps exactly
        cfg.validate().unwrap();
    }

    // ---- resolution ----

    #[test]
    fn resolve_places_the_ship_ahead_of_centre() {
        let cfg = ExperimentConfig::default();
        let resolved = cfg.resolve().unwrap();
        let (px, py) = resolved.ship_position.unwrap();
        // heading 0: ahead of centre along +x, centred in y
        assert!(px > 127.0 && px < 254.0);
        assert_eq!(py, 127.0);
        // ship sits at the world origin
        assert_eq!(resolved.grid.origin, (-px, -py));
        assert_eq!(resolved.grid.nx, 128);
    }

    #[test]
    fn explicit_position_and_shipless_scene_pass_through() {
        let mut cfg = ExperimentConfig::default();
        cfg.scene.ship_position = Some((10.0, 20.0));
        let resolved = cfg.resolve().unwrap();
        assert_eq!(resolved.ship_position, Some((10.0, 20.0)));
        assert_eq!(resolved.grid.origin, (-10.0, -20.0));

        cfg.scene.ship = None;
        let resolved = cfg.resolve().unwrap();
        assert_eq!(resolved.ship_position, None);
        assert_eq!(resolved.grid.origin, (0.0, 0.0));
    }

    #[test]
    fn scale_presets_pick_grid_sizes() {
        let mut cfg = ExperimentConfig::default();
        cfg.scene.scale = Scale::Paper;
        assert_eq!(cfg.resolve().unwrap().grid.nx, 256);
        cfg.scene.grid = Some(GridConfig { nx: 64, ny: 128, dx: 2.0, dy: 2.0 });
        assert_eq!(cfg.resolve().unwrap().grid.nx, 64);
    }

    // ---- overrides ----

    #[test]
    fn overrides_replace_seeds_looks_out_and_scale() {
        let mut cfg = ExperimentConfig::default();
        cfg.scene.grid = Some(GridConfig { nx: 64, ny: 64, dx: 2.0, dy: 2.0 });
        cfg.apply(&Overrides {
            seed: Some(9),
            looks: Some(vec![1, 3]),
            out: Some(PathBuf::from("elsewhere")),
            scale: Some(Scale::Paper),
        });
        assert_eq!(cfg.noise.seeds, vec![9]);
        assert_eq!(cfg.noise.looks, vec![1, 3]);
        assert_eq!(cfg.output.dir, PathBuf::from("elsewhere"));
        assert_eq!(cfg.scene.scale, Scale::Paper);
        assert!(cfg.scene.grid.is_none(), "forced scale clears the explicit grid");
    }

    // ---- hashing ----

    #[test]
    fn hash_is_stable_and_sensitive() {
        let cfg = ExperimentConfig::default();
        let h1 = cfg.hash().unwrap();
        let h2 = cfg.hash().unwrap();
        assert_eq!(h1, h2);
        assert_eq!(h1.len(), 16);
        let mut other = cfg.clone();
        other.noise.seeds = vec![999];
        assert_ne!(other.hash().unwrap(), h1);
    }
}
