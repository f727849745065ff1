#![allow(dead_code)]

use moac_core::channel::SymbolBlock;
use moac_core::model::{validate_geometry, DeviceProfile, SlotGeometry};
use moac_core::rng::{rng_from_seed, SimRng};
use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

/// Distinct offsets with device 0 at zero, random gains and phases.
pub fn random_geometry(rng: &mut SimRng, devices: usize, cfo_max: f64) -> SlotGeometry<f64> {
    loop {
        let mut taus: Vec<f64> = (1..devices).map(|_| rng.random_range(0.0..1.0)).collect();
        taus.push(0.0);
        let mut sorted = taus.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.push(1.0);
        if sorted.windows(2).any(|w| w[1] - w[0] < 0.02) {
            continue;
        }
        let profiles: Vec<DeviceProfile<f64>> = taus
            .iter()
            .map(|&tau| DeviceProfile {
                tau,
                gain_amp: rng.random_range(0.5..1.5),
                gain_phase: rng.random_range(0.0..std::f64::consts::TAU),
                cfo: if cfo_max > 0.0 { rng.random_range(-cfo_max..cfo_max) } else { 0.0 },
                dataset_size: 1,
            })
            .collect();
        return validate_geometry(&profiles).unwrap();
    }
}

pub fn random_block(rng: &mut SimRng, devices: usize, packet_len: usize) -> SymbolBlock<f64> {
    let mut draw = || {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(re, im) / 2f64.sqrt()
    };
    SymbolBlock::new(DMatrix::from_fn(devices, packet_len, |_, _| draw()))
}

pub fn rng(seed: u64) -> SimRng {
    rng_from_seed(seed)
}
