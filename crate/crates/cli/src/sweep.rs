//! Sweep execution: slot-level estimator benchmarks and learning runs over a
//! grid of channel parameters, merged in deterministic point order.

use std::path::Path;

use moac_core::channel::SymbolBlock;
use moac_core::estimators::Diagnostics;
use moac_core::model::calibrate_n0;
use moac_core::rng::{derive_seed, rng_from_seed};
use moac_core::{EstimatorId, SlotModel};
use moac_feel::{gaussian_blobs, param_count, partition_shards, run_rounds, FeelConfig, FeelState, TrainSpec};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Amplitude, Axis, ChannelSection, ExperimentConfig, Mode};
use crate::error::CliError;

pub const CSV_HEADER: [&str; 12] = [
    "run_id",
    "seed",
    "estimator",
    "esn0_db",
    "tau_max",
    "phi_max",
    "amp_sigma",
    "k_active",
    "round",
    "symbol_mse",
    "test_accuracy",
    "diagnostics_flags",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub run_id: String,
    pub seed: u64,
    pub estimator: String,
    pub esn0_db: f64,
    pub tau_max: f64,
    pub phi_max: f64,
    /// Empty for unit amplitudes.
    pub amp_sigma: Option<f64>,
    pub k_active: usize,
    /// Empty in slot mode.
    pub round: Option<usize>,
    /// Empty when the estimate failed.
    pub symbol_mse: Option<f64>,
    /// Empty in slot mode.
    pub test_accuracy: Option<f64>,
    pub diagnostics_flags: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub run_id: String,
    pub estimator: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepOutput {
    pub rows: Vec<ResultRow>,
    pub failures: Vec<Failure>,
}

/// Rows of one repetition and the estimates that failed in it.
pub type RunRows = (Vec<ResultRow>, Vec<Failure>);

/// Channel and load parameters of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub esn0_db: f64,
    pub channel: ChannelSection,
    pub k_active: usize,
}

pub fn points(config: &ExperimentConfig, mode: Mode) -> Vec<Point> {
    let k_default = match mode {
        Mode::Slot => config.sweep.devices,
        Mode::Feel => config.task.active,
    };
    config
        .sweep
        .values
        .iter()
        .map(|&v| {
            let mut p = Point { esn0_db: config.sweep.esn0_db, channel: config.channel.clone(), k_active: k_default };
            match config.sweep.axis {
                Axis::Esn0Db => p.esn0_db = v,
                Axis::TauMax => p.channel.tau_max = v,
                Axis::PhiMax => p.channel.phi_max = v,
                Axis::AmpSigma => {
                    p.channel.amplitude = Amplitude::Rayleigh;
                    p.channel.rayleigh_sigma = v;
                }
                Axis::KActive => p.k_active = v as usize,
            }
            p
        })
        .collect()
}

fn base_row(point: &Point, run_id: &str, seed: u64, estimator: EstimatorId) -> ResultRow {
    ResultRow {
        run_id: run_id.to_string(),
        seed,
        estimator: estimator.name().to_string(),
        esn0_db: point.esn0_db,
        tau_max: point.channel.tau_max,
        phi_max: point.channel.phi_max,
        amp_sigma: (point.channel.amplitude == Amplitude::Rayleigh).then_some(point.channel.rayleigh_sigma),
        k_active: point.k_active,
        round: None,
        symbol_mse: None,
        test_accuracy: None,
        diagnostics_flags: String::new(),
    }
}

fn complex_gaussian_block(rng: &mut moac_core::rng::SimRng, devices: usize, len: usize) -> SymbolBlock<f64> {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    SymbolBlock::new(DMatrix::from_fn(devices, len, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)) * scale))
}

/// Per-estimator mean symbol error over `packets` packets of unit-power
/// Gaussian symbols; every estimator sees the same packets and noise.
pub fn slot_run(point: &Point, estimators: &[EstimatorId], packet_len: usize, packets: usize, run_id: &str, seed: u64) -> RunRows {
    let sampler = point.channel.sampler();
    let mut sq = vec![0.0; estimators.len()];
    let mut errors: Vec<Option<String>> = vec![None; estimators.len()];
    let mut diagnostics = vec![Diagnostics::default(); estimators.len()];
    for p in 0..packets {
        let mut rng = rng_from_seed(derive_seed(seed, &[p as u64]));
        let setup = sampler.sample(&vec![1; point.k_active], &mut rng).and_then(|geom| {
            let block = complex_gaussian_block(&mut rng, point.k_active, packet_len);
            let n0 = calibrate_n0(&geom, &block, point.esn0_db)?;
            let model = SlotModel::new(geom, packet_len);
            let streams = model.transmit(&block, n0, derive_seed(seed, &[p as u64, 1]))?;
            Ok((model, block, streams, n0))
        });
        let (model, block, streams, n0) = match setup {
            Ok(s) => s,
            Err(e) => {
                errors.iter_mut().for_each(|slot| *slot = slot.take().or_else(|| Some(format!("packet {p}: {e}"))));
                continue;
            }
        };
        for (j, &id) in estimators.iter().enumerate() {
            if errors[j].is_some() {
                continue;
            }
            match model.estimate(id, &streams, n0) {
                Ok(report) => {
                    sq[j] += (&report.estimate - block.target_sum()).norm_squared();
                    diagnostics[j].merge(&report.diagnostics);
                }
                Err(e) => errors[j] = Some(format!("packet {p}: {e}")),
            }
        }
    }
    let mut rows = Vec::with_capacity(estimators.len());
    let mut failures = Vec::new();
    for (j, &id) in estimators.iter().enumerate() {
        let mut row = base_row(point, run_id, seed, id);
        match &errors[j] {
            None => {
                row.symbol_mse = Some(sq[j] / (packets * packet_len) as f64);
                row.diagnostics_flags = diagnostics[j].flags();
            }
            Some(e) => {
                row.diagnostics_flags = format!("error: {e}");
                failures.push(Failure { run_id: run_id.to_string(), estimator: id.name().to_string(), error: e.clone() });
            }
        }
        rows.push(row);
    }
    (rows, failures)
}

/// One learning run per estimator, one row per round.
pub fn feel_run(
    config: &ExperimentConfig,
    point: &Point,
    estimators: &[EstimatorId],
    run_id: &str,
    seed: u64,
) -> Result<RunRows, CliError> {
    let t = &config.task;
    let task = gaussian_blobs(&t.blobs(), derive_seed(seed, &[0]));
    let shard_size = (t.shard_size > 0).then_some(t.shard_size);
    let shards = partition_shards(&task.train.labels, t.devices, t.random_fraction, shard_size, derive_seed(seed, &[1]))?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &id in estimators {
        let cfg = FeelConfig {
            active: point.k_active,
            train: TrainSpec { epochs: t.epochs, lr: t.lr, batch_size: t.batch_size },
            packet_len: config.sweep.packet_len,
            esn0_db: point.esn0_db,
            estimator: id,
            channel: point.channel.sampler(),
            redraw: point.channel.redraw(),
        };
        let state = FeelState::new(vec![0.0; param_count(t.features, t.classes)], shards.clone(), derive_seed(seed, &[2]));
        match run_rounds(&task, state, &cfg, t.rounds) {
            Ok((_, records)) => rows.extend(records.into_iter().map(|r| {
                let mut row = base_row(point, run_id, seed, id);
                row.round = Some(r.round.round);
                row.symbol_mse = r.round.symbol_mse.is_finite().then_some(r.round.symbol_mse);
                row.test_accuracy = Some(r.test_accuracy);
                row.diagnostics_flags = r.round.flags;
                row
            })),
            Err(e) => {
                let mut row = base_row(point, run_id, seed, id);
                row.diagnostics_flags = format!("error: {e}");
                rows.push(row);
                failures.push(Failure { run_id: run_id.to_string(), estimator: id.name().to_string(), error: e.to_string() });
            }
        }
    }
    Ok((rows, failures))
}

/// Runs every `(point, repetition)` pair on the worker pool. Repetition `s`
/// of point `p` uses seed `derive_seed(master, [p, s])`, so any row can be
/// recomputed alone from the config, its run id and its seed.
pub fn run_sweep(config: &ExperimentConfig, master_seed: u64, mode: Mode) -> Result<SweepOutput, CliError> {
    let estimators = config.estimators()?;
    let pts = points(config, mode);
    let jobs: Vec<(usize, usize)> = (0..pts.len()).flat_map(|p| (0..config.sweep.seeds_per_point).map(move |s| (p, s))).collect();
    let results: Vec<Result<RunRows, CliError>> = jobs
        .par_iter()
        .map(|&(p, s)| {
            let run_id = format!("p{p}-s{s}");
            let seed = derive_seed(master_seed, &[p as u64, s as u64]);
            match mode {
                Mode::Slot => Ok(slot_run(&pts[p], &estimators, config.sweep.packet_len, config.sweep.packets, &run_id, seed)),
                Mode::Feel => feel_run(config, &pts[p], &estimators, &run_id, seed),
            }
        })
        .collect();
    let mut out = SweepOutput::default();
    for r in results {
        let (rows, failures) = r?;
        out.rows.extend(rows);
        out.failures.extend(failures);
    }
    Ok(out)
}

/// One packet through all four estimators at the configured channel point.
pub fn slot_sim(config: &ExperimentConfig, master_seed: u64) -> SweepOutput {
    let point = Point { esn0_db: config.sweep.esn0_db, channel: config.channel.clone(), k_active: config.sweep.devices };
    let (rows, failures) = slot_run(&point, &EstimatorId::ALL, config.sweep.packet_len, 1, "slot", derive_seed(master_seed, &[0]));
    SweepOutput { rows, failures }
}

pub fn write_rows(path: &Path, rows: &[ResultRow]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>, CliError> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(CliError::SchemaMismatch(format!("{}: header {:?}", path.display(), header)));
    }
    r.deserialize().map(|row| row.map_err(|e| CliError::SchemaMismatch(format!("{}: {e}", path.display())))).collect()
}
