//! Run configuration: a versioned TOML document with defaults for every
//! section, overridable from the command line.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use cascade_core::fitting::EfficiencyInputs;
use cascade_core::qkd::SixStateConfig;
use cascade_core::sim::{DetectorModel, Grid, ResponseKind, SourceModel};
use cascade_core::tomography::MleConfig;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// Deterministic expected counts.
    #[default]
    Expected,
    /// One Poisson draw per bin from the expected counts.
    Poisson,
}

/// Source and detector combinations of the three reference runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Snspd,
    Spad,
    Ideal,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Snspd, Preset::Spad, Preset::Ideal];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Snspd => "snspd",
            Preset::Spad => "spad",
            Preset::Ideal => "ideal",
        }
    }

    pub fn models(self) -> (SourceModel, DetectorModel) {
        match self {
            Preset::Snspd => (SourceModel::nanowire(), DetectorModel::snspd()),
            Preset::Spad => (SourceModel::nanowire(), DetectorModel::spad()),
            Preset::Ideal => (SourceModel::ideal(), DetectorModel::ideal()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Experiment {
    /// Integration time per projective setting, seconds.
    pub t_exp_s: f64,
    pub sampling: Sampling,
}

impl Default for Experiment {
    fn default() -> Self {
        Self { t_exp_s: 300.0, sampling: Sampling::Expected }
    }
}

/// Histogram axis. Missing bounds are chosen to cover the response tail
/// before zero delay and five lifetimes after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSettings {
    pub bin_width_ps: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub from_ps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to_ps: Option<f64>,
}

impl Default for GridSettings {
    fn default() -> Self {
        Self { bin_width_ps: 10.0, from_ps: None, to_ps: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TomographySettings {
    pub window_ps: f64,
}

impl Default for TomographySettings {
    fn default() -> Self {
        Self { window_ps: 50.0 }
    }
}

/// Delay range and basis mode of the key-rate evaluation. `to_ps` defaults
/// to five exciton lifetimes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KeyrateSettings {
    pub from_ps: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to_ps: Option<f64>,
    pub per_window: bool,
}

/// Inputs of the per-pulse pair extraction estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PairExtractionInputs {
    pub n_x_hz: f64,
    pub n_xx_hz: f64,
    pub eta_opt: f64,
    pub f_rep_mhz: f64,
}

impl Default for PairExtractionInputs {
    fn default() -> Self {
        Self { n_x_hz: 145e3, n_xx_hz: 150e3, eta_opt: 0.024, f_rep_mhz: 76.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Inputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub histograms: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub states: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    pub dir: PathBuf,
    pub format: Format,
}

impl Default for Output {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), format: Format::Csv }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub experiment: Experiment,
    #[serde(default = "SourceModel::nanowire")]
    pub source: SourceModel,
    #[serde(default = "DetectorModel::snspd")]
    pub detector: DetectorModel,
    #[serde(default)]
    pub grid: GridSettings,
    #[serde(default)]
    pub tomography: TomographySettings,
    #[serde(default)]
    pub mle: MleConfig,
    #[serde(default)]
    pub qkd: SixStateConfig,
    #[serde(default)]
    pub keyrate: KeyrateSettings,
    #[serde(default = "EfficiencyInputs::nanowire")]
    pub efficiency: EfficiencyInputs,
    #[serde(default)]
    pub pair_extraction: PairExtractionInputs,
    #[serde(default)]
    pub inputs: Inputs,
    #[serde(default)]
    pub output: Output,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            experiment: Experiment::default(),
            source: SourceModel::nanowire(),
            detector: DetectorModel::snspd(),
            grid: GridSettings::default(),
            tomography: TomographySettings::default(),
            mle: MleConfig::default(),
            qkd: SixStateConfig::default(),
            keyrate: KeyrateSettings::default(),
            efficiency: EfficiencyInputs::nanowire(),
            pair_extraction: PairExtractionInputs::default(),
            inputs: Inputs::default(),
            output: Output::default(),
        }
    }
}

impl RunConfig {
    /// Parses a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::parse(&text).with_context(|| format!("in {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.rebase(base);
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        // the version is checked first so an old document gets a clear message
        #[derive(Deserialize)]
        struct Version {
            schema_version: Option<u32>,
        }
        let v: Version = toml::from_str(text).map_err(|e| anyhow::anyhow!("invalid config: {e}"))?;
        match v.schema_version {
            None => bail!("invalid config: missing schema_version (expected {SCHEMA_VERSION})"),
            Some(SCHEMA_VERSION) => {}
            Some(other) => bail!("invalid config: schema_version {other} is not supported (expected {SCHEMA_VERSION})"),
        }
        toml::from_str(text).map_err(|e| anyhow::anyhow!("invalid config: {e}"))
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut self.inputs.histograms, &mut self.inputs.states, &mut self.inputs.data].into_iter().flatten() {
            fix(p);
        }
        fix(&mut self.output.dir);
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        self.detector.validate()?;
        self.mle.validate()?;
        self.qkd.validate()?;
        let t = self.experiment.t_exp_s;
        ensure!(t >= 0.0 && t.is_finite(), "experiment.t_exp_s = {t} must be finite and >= 0");
        let bw = self.grid.bin_width_ps;
        ensure!(bw > 0.0 && bw.is_finite(), "grid.bin_width_ps = {bw} must be positive");
        let w = self.tomography.window_ps;
        ensure!(w > 0.0 && w.is_finite(), "tomography.window_ps = {w} must be positive");
        for (name, p) in [
            ("inputs.histograms", &self.inputs.histograms),
            ("inputs.states", &self.inputs.states),
            ("inputs.data", &self.inputs.data),
        ] {
            if let Some(p) = p {
                ensure!(p.exists(), "{name}: {} does not exist", p.display());
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Grid {
        let width = if self.detector.response == ResponseKind::Delta { 0.0 } else { self.detector.width_ps };
        let from = self.grid.from_ps.unwrap_or(-3.0 * width - 500.0);
        let to = self.grid.to_ps.unwrap_or(5.0 * self.source.tau_x_ns * 1e3 + 200.0);
        Grid::covering(self.grid.bin_width_ps, from, to)
    }

    pub fn keyrate_to_ps(&self) -> f64 {
        self.keyrate.to_ps.unwrap_or(5.0 * self.source.tau_x_ns * 1e3)
    }

    pub fn with_preset(mut self, preset: Preset) -> Self {
        (self.source, self.detector) = preset.models();
        self
    }
}
