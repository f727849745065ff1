//! One federated round over the simulated channel, and multi-round runs.

use moac_core::channel::SymbolBlock;
use moac_core::model::calibrate_n0;
use moac_core::rng::{derive_seed, rng_from_seed};
use moac_core::{EstimatorId, SlotModel};
use nalgebra::DMatrix;
use rand::seq::index;

use crate::channel::ChannelSampler;
use crate::codec::{decode_sum, encode_update};
use crate::data::{Dataset, SyntheticTask};
use crate::error::{FeelError, Result};
use crate::task::{accuracy, local_train, TrainSpec};

const STREAM_SELECT: u64 = 1;
const STREAM_TRAIN: u64 = 2;
const STREAM_CHANNEL: u64 = 3;
const STREAM_NOISE: u64 = 4;

/// How often the channel geometry is redrawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChannelRedraw {
    #[default]
    Packet,
    Round,
    /// One draw per run, reused by every round and packet.
    Run,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeelConfig {
    pub active: usize,
    pub train: TrainSpec,
    pub packet_len: usize,
    /// `f64::INFINITY` selects the noiseless channel.
    pub esn0_db: f64,
    pub estimator: EstimatorId,
    pub channel: ChannelSampler,
    pub redraw: ChannelRedraw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeelState {
    pub global_model: Vec<f64>,
    pub round: usize,
    pub device_shards: Vec<Vec<usize>>,
    pub rng_seed: u64,
}

impl FeelState {
    pub fn new(global_model: Vec<f64>, device_shards: Vec<Vec<usize>>, rng_seed: u64) -> Self {
        Self { global_model, round: 0, device_shards, rng_seed }
    }

    pub fn dataset_size(&self, device: usize) -> u64 {
        self.device_shards[device].len() as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub active: Vec<usize>,
    /// Mean `|s_+ - estimate|^2` per transmitted symbol.
    pub symbol_mse: f64,
    /// Estimator diagnostics and harness events, `;`-separated.
    pub flags: String,
}

/// Devices taking part in the current round, in ascending order.
pub fn select_active(state: &FeelState, active: usize) -> Result<Vec<usize>> {
    let total = state.device_shards.len();
    if active == 0 || active > total {
        return Err(FeelError::InvalidArgument(format!("active device count {active} not in 1..={total}")));
    }
    let mut rng = rng_from_seed(derive_seed(state.rng_seed, &[state.round as u64, STREAM_SELECT]));
    let mut chosen = index::sample(&mut rng, total, active).into_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

/// Local model `theta~_m` of `device` for the current round.
pub fn local_model(state: &FeelState, train: &Dataset, spec: &TrainSpec, device: usize) -> Vec<f64> {
    let seed = derive_seed(state.rng_seed, &[state.round as u64, STREAM_TRAIN, device as u64]);
    local_train(&state.global_model, train, &state.device_shards[device], spec, seed)
}

/// Runs one round: selection, local training, over-the-air aggregation and
/// the global update `theta += theta_+ / sum B_m`.
pub fn run_round(state: &FeelState, train: &Dataset, cfg: &FeelConfig) -> Result<(FeelState, RoundRecord)> {
    let active = select_active(state, cfg.active)?;
    let sizes: Vec<u64> = active.iter().map(|&m| state.dataset_size(m)).collect();
    let total_size: u64 = sizes.iter().sum();
    let updates: Vec<Vec<f64>> = active
        .iter()
        .zip(&sizes)
        .map(|(&m, &b)| {
            let local = local_model(state, train, &cfg.train, m);
            local.iter().zip(&state.global_model).map(|(l, g)| b as f64 * (l - g)).collect()
        })
        .collect();

    let dim = state.global_model.len();
    let encoded: Vec<Vec<_>> = updates.iter().map(|u| encode_update(u, cfg.packet_len)).collect();
    let packets = encoded.first().map_or(0, Vec::len);
    let round = state.round as u64;
    let channel_seed = |packet: usize| match cfg.redraw {
        ChannelRedraw::Packet => derive_seed(state.rng_seed, &[round, STREAM_CHANNEL, packet as u64]),
        ChannelRedraw::Round => derive_seed(state.rng_seed, &[round, STREAM_CHANNEL]),
        ChannelRedraw::Run => derive_seed(state.rng_seed, &[u64::MAX, STREAM_CHANNEL]),
    };

    let mut estimates = Vec::with_capacity(packets);
    let mut squared_error = 0.0;
    let mut flags: Vec<String> = Vec::new();
    #[allow(clippy::needless_range_loop)]
    for p in 0..packets {
        let err = |source| FeelError::Channel { round: state.round, packet: p, source };
        let geom = cfg.channel.sample(&sizes, &mut rng_from_seed(channel_seed(p))).map_err(err)?;
        let block =
            SymbolBlock::new(DMatrix::from_fn(active.len(), cfg.packet_len, |m, i| encoded[m][p][i])).permuted(geom.original_order());
        let n0 = match calibrate_n0(&geom, &block, cfg.esn0_db) {
            Ok(n0) => n0,
            // Nothing but zeros to send: the packet carries no energy to scale noise against.
            Err(moac_core::Error::ZeroSignalPower) => {
                flags.push(format!("silent_packet={p}"));
                0.0
            }
            Err(e) => return Err(err(e)),
        };
        let model = SlotModel::new(geom, cfg.packet_len);
        let noise_seed = derive_seed(state.rng_seed, &[round, STREAM_NOISE, p as u64]);
        let streams = model.transmit(&block, n0, noise_seed).map_err(err)?;
        let report = model.estimate(cfg.estimator, &streams, n0).map_err(err)?;
        squared_error += (&report.estimate - block.target_sum()).norm_squared();
        let f = report.diagnostics.flags();
        if !f.is_empty() && !flags.contains(&f) {
            flags.push(f);
        }
        estimates.push(report.estimate);
    }

    let sum = decode_sum(&estimates, dim)?;
    let scale = 1.0 / total_size as f64;
    let global_model = state.global_model.iter().zip(&sum).map(|(g, s)| g + s * scale).collect();
    let next = FeelState { global_model, round: state.round + 1, ..state.clone() };
    let symbols = (packets * cfg.packet_len).max(1);
    Ok((next, RoundRecord { round: state.round, active, symbol_mse: squared_error / symbols as f64, flags: flags.join(";") }))
}

/// Federated averaging over `active` with exact aggregation, for reference.
pub fn fedavg_reference(state: &FeelState, train: &Dataset, spec: &TrainSpec, active: &[usize]) -> Vec<f64> {
    let total: u64 = active.iter().map(|&m| state.dataset_size(m)).sum();
    let mut sum = vec![0.0; state.global_model.len()];
    for &m in active {
        let b = state.dataset_size(m) as f64;
        for (s, (l, g)) in sum.iter_mut().zip(local_model(state, train, spec, m).iter().zip(&state.global_model)) {
            *s += b * (l - g);
        }
    }
    state.global_model.iter().zip(&sum).map(|(g, s)| g + s / total as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub round: RoundRecord,
    pub test_accuracy: f64,
}

/// Runs `rounds` rounds from `state`, evaluating test accuracy after each.
///
/// A round whose channel estimation fails leaves the model unchanged and is
/// recorded with an `aborted` flag.
pub fn run_rounds(task: &SyntheticTask, state: FeelState, cfg: &FeelConfig, rounds: usize) -> Result<(FeelState, Vec<RunRecord>)> {
    let mut state = state;
    let mut records = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let record = match run_round(&state, &task.train, cfg) {
            Ok((next, record)) => {
                state = next;
                record
            }
            Err(FeelError::Channel { round, packet, source }) => {
                let active = select_active(&state, cfg.active)?;
                state.round += 1;
                RoundRecord { round, active, symbol_mse: f64::NAN, flags: format!("aborted(packet {packet}: {source})") }
            }
            Err(e) => return Err(e),
        };
        records.push(RunRecord { test_accuracy: accuracy(&state.global_model, &task.test), round: record });
    }
    Ok((state, records))
}
