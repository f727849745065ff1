//! Experiment configuration, read from a sectioned TOML file.
//!
//! Every key is optional and falls back to the default documented on its
//! field; unknown sections or keys are rejected. Infinite EsN0 is written
//! `inf` and selects the noiseless channel.
//!
//! ```toml
//! [channel]
//! tau_max = 0.5
//! phi_max = 1.5707963
//! amplitude = "rayleigh"
//! rayleigh_sigma = 0.7071
//!
//! [estimators]
//! use = ["sp_ml", "aligned"]
//!
//! [sweep]
//! mode = "slot"
//! axis = "esn0_db"
//! values = [-20, -12, inf]
//! ```

use std::path::Path;

use moac_core::EstimatorId;
use moac_feel::{AmplitudeModel, BlobSpec, ChannelRedraw, ChannelSampler};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub channel: ChannelSection,
    pub estimators: EstimatorSection,
    pub sweep: SweepSection,
    pub task: TaskSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Amplitude {
    Unit,
    Rayleigh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Redraw {
    Packet,
    Round,
    Run,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSection {
    /// Largest time offset in symbol periods, `[0, 1)`. Default 0.5.
    pub tau_max: f64,
    /// Phases drawn from `U(0, phi_max)`, radians. Default pi/2.
    pub phi_max: f64,
    /// `unit` or `rayleigh`. Default `unit`.
    pub amplitude: Amplitude,
    /// Rayleigh scale. Default `1/sqrt(2)` (unit mean power).
    pub rayleigh_sigma: f64,
    /// CFOs drawn from `U(-cfo_max, cfo_max)`, radians per symbol. Default 0.
    pub cfo_max: f64,
    /// Channel redraw granularity in learning runs: `packet`, `round` or `run`. Default `packet`.
    pub redraw: Redraw,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            tau_max: 0.5,
            phi_max: std::f64::consts::FRAC_PI_2,
            amplitude: Amplitude::Unit,
            rayleigh_sigma: std::f64::consts::FRAC_1_SQRT_2,
            cfo_max: 0.0,
            redraw: Redraw::Packet,
        }
    }
}

impl ChannelSection {
    pub fn sampler(&self) -> ChannelSampler {
        ChannelSampler {
            tau_max: self.tau_max,
            phi_max: self.phi_max,
            amplitude: match self.amplitude {
                Amplitude::Unit => AmplitudeModel::Unit,
                Amplitude::Rayleigh => AmplitudeModel::Rayleigh { sigma: self.rayleigh_sigma },
            },
            cfo_max: self.cfo_max,
        }
    }

    pub fn redraw(&self) -> ChannelRedraw {
        match self.redraw {
            Redraw::Packet => ChannelRedraw::Packet,
            Redraw::Round => ChannelRedraw::Round,
            Redraw::Run => ChannelRedraw::Run,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorSection {
    /// Subset of `direct_ml`, `whitened_ml`, `sp_ml`, `aligned`. Default `sp_ml` and `aligned`.
    #[serde(rename = "use")]
    pub names: Vec<String>,
}

impl Default for EstimatorSection {
    fn default() -> Self {
        Self { names: vec!["sp_ml".into(), "aligned".into()] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Per-packet estimation error only.
    Slot,
    /// Full learning runs.
    Feel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Esn0Db,
    TauMax,
    PhiMax,
    AmpSigma,
    KActive,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Self::Esn0Db => "esn0_db",
            Self::TauMax => "tau_max",
            Self::PhiMax => "phi_max",
            Self::AmpSigma => "amp_sigma",
            Self::KActive => "k_active",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// `slot` or `feel`. Default `slot`.
    pub mode: Mode,
    /// Swept parameter. Default `esn0_db`.
    pub axis: Axis,
    /// Axis values. Default `[-20, -12, -4, 4, 12, 20]`.
    pub values: Vec<f64>,
    /// Independent repetitions per point. Default 4.
    pub seeds_per_point: usize,
    /// EsN0 used when another axis is swept. Default 10.
    pub esn0_db: f64,
    /// Symbols per packet. Default 64.
    pub packet_len: usize,
    /// Slot mode: packets per repetition. Default 32.
    pub packets: usize,
    /// Slot mode: devices per slot. Default 4.
    pub devices: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            mode: Mode::Slot,
            axis: Axis::Esn0Db,
            values: vec![-20.0, -12.0, -4.0, 4.0, 12.0, 20.0],
            seeds_per_point: 4,
            esn0_db: 10.0,
            packet_len: 64,
            packets: 32,
            devices: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskSection {
    /// Model size is `classes * (features + 1)`. Defaults 10 and 20.
    pub classes: usize,
    pub features: usize,
    /// Norm of the class centers. Default 3.
    pub separation: f64,
    /// Per-coordinate standard deviation within a class. Default 1.
    pub spread: f64,
    /// Defaults 1000 and 1000.
    pub train_per_class: usize,
    pub test_per_class: usize,
    /// Learning rounds. Default 100.
    pub rounds: usize,
    /// Local SGD epochs, step size and batch size. Defaults 1, 0.05, 32.
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    /// Devices holding data, and devices active per round. Defaults 40 and 4.
    pub devices: usize,
    pub active: usize,
    /// Label-sorted shard per device; 0 splits the residual evenly. Default 250.
    pub shard_size: usize,
    /// Fraction of the data dealt out uniformly at random. Default 0.
    pub random_fraction: f64,
}

impl Default for TaskSection {
    fn default() -> Self {
        let blobs = BlobSpec::default();
        Self {
            classes: blobs.classes,
            features: blobs.dim,
            separation: blobs.separation,
            spread: blobs.spread,
            train_per_class: blobs.train_per_class,
            test_per_class: blobs.test_per_class,
            rounds: 100,
            epochs: 1,
            lr: 0.05,
            batch_size: 32,
            devices: 40,
            active: 4,
            shard_size: 250,
            random_fraction: 0.0,
        }
    }
}

impl TaskSection {
    pub fn blobs(&self) -> BlobSpec {
        BlobSpec {
            classes: self.classes,
            dim: self.features,
            train_per_class: self.train_per_class,
            test_per_class: self.test_per_class,
            separation: self.separation,
            spread: self.spread,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum Formats {
    #[serde(rename = "csv")]
    Csv,
    #[serde(rename = "csv+svg")]
    CsvSvg,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Default `results`.
    pub directory: String,
    /// `csv` or `csv+svg`. Default `csv`.
    pub formats: Formats,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: "results".into(), formats: Formats::Csv }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::ConfigParse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::ConfigParse(msg) => CliError::ConfigParse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn estimators(&self) -> Result<Vec<EstimatorId>, CliError> {
        self.estimators
            .names
            .iter()
            .map(|n| n.parse().map_err(|e: moac_core::Error| CliError::ConfigParse(format!("estimators.use: {e}"))))
            .collect()
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, why: &str| Err(CliError::ConfigParse(format!("{key}: {why}")));
        self.estimators()?;
        if self.estimators.names.is_empty() {
            return bad("estimators.use", "at least one estimator is required");
        }
        if !(0.0..1.0).contains(&self.channel.tau_max) {
            return bad("channel.tau_max", "must lie in [0, 1)");
        }
        if self.sweep.values.is_empty() {
            return bad("sweep.values", "at least one value is required");
        }
        for (name, v) in [
            ("sweep.seeds_per_point", self.sweep.seeds_per_point),
            ("sweep.packet_len", self.sweep.packet_len),
            ("sweep.packets", self.sweep.packets),
            ("sweep.devices", self.sweep.devices),
            ("task.active", self.task.active),
            ("task.batch_size", self.task.batch_size),
        ] {
            if v == 0 {
                return bad(name, "must be >= 1");
            }
        }
        if self.task.active > self.task.devices {
            return bad("task.active", "cannot exceed task.devices");
        }
        match self.sweep.axis {
            Axis::TauMax if self.sweep.values.iter().any(|v| !(0.0..1.0).contains(v)) => {
                bad("sweep.values", "tau_max values must lie in [0, 1)")
            }
            Axis::KActive if self.sweep.values.iter().any(|v| *v < 1.0 || v.fract() != 0.0) => {
                bad("sweep.values", "k_active values must be positive integers")
            }
            _ => Ok(()),
        }
    }
}
