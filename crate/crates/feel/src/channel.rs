//! Random per-slot channel draws: offsets, residual phases, amplitudes and CFOs.

use moac_core::model::{validate_geometry, DeviceProfile, SlotGeometry};
use moac_core::rng::SimRng;
use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AmplitudeModel {
    Unit,
    /// Rayleigh-distributed `|h'|` with scale `sigma`.
    Rayleigh {
        sigma: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSampler {
    /// Largest offset `tau_M`, in symbol periods.
    pub tau_max: f64,
    /// Phases are drawn from `U(0, phi_max)`.
    pub phi_max: f64,
    pub amplitude: AmplitudeModel,
    /// CFOs are drawn from `U(-cfo_max, cfo_max)`, radians per symbol.
    pub cfo_max: f64,
}

impl ChannelSampler {
    /// Perfectly synchronized, unit-gain channel.
    pub fn aligned() -> Self {
        Self { tau_max: 0.0, phi_max: 0.0, amplitude: AmplitudeModel::Unit, cfo_max: 0.0 }
    }

    /// Draws one slot for devices with the given dataset sizes.
    ///
    /// One device sits at offset 0 and, with two or more devices, one at
    /// `tau_max`; the others are uniform in `(0, tau_max)`. Offsets are dealt
    /// to devices in random order.
    pub fn sample(&self, dataset_sizes: &[u64], rng: &mut SimRng) -> moac_core::Result<SlotGeometry<f64>> {
        let m = dataset_sizes.len();
        if !(0.0..1.0).contains(&self.tau_max) {
            return Err(moac_core::Error::OffsetOutOfRange { device: m.saturating_sub(1), tau: self.tau_max });
        }
        let mut taus: Vec<f64> = Vec::with_capacity(m);
        if m > 0 {
            taus.push(0.0);
        }
        if m > 1 {
            taus.push(self.tau_max);
        }
        while taus.len() < m {
            taus.push(if self.tau_max > 0.0 { rng.random_range(0.0..self.tau_max) } else { 0.0 });
        }
        taus.shuffle(rng);
        let profiles: Vec<DeviceProfile<f64>> = taus
            .into_iter()
            .zip(dataset_sizes)
            .map(|(tau, &dataset_size)| DeviceProfile {
                tau,
                gain_phase: if self.phi_max > 0.0 { rng.random_range(0.0..self.phi_max) } else { 0.0 },
                gain_amp: match self.amplitude {
                    AmplitudeModel::Unit => 1.0,
                    AmplitudeModel::Rayleigh { sigma } => {
                        let u: f64 = rng.random();
                        sigma * (-2.0 * (1.0 - u).ln()).sqrt()
                    }
                },
                cfo: if self.cfo_max > 0.0 { rng.random_range(-self.cfo_max..self.cfo_max) } else { 0.0 },
                dataset_size,
            })
            .collect();
        validate_geometry(&profiles)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use moac_core::rng::rng_from_seed;

    #[test]
    fn extreme_offsets_present() {
        let s = ChannelSampler { tau_max: 0.6, phi_max: 1.0, amplitude: AmplitudeModel::Unit, cfo_max: 0.0 };
        let mut rng = rng_from_seed(4);
        for _ in 0..50 {
            let g = s.sample(&[1, 2, 3, 4], &mut rng).unwrap();
            let last = g.profile(3).tau;
            assert!((last - 0.6).abs() < 1e-15);
            assert_eq!(g.profile(0).tau, 0.0);
            assert!(g.profiles().iter().all(|p| p.gain_phase >= 0.0 && p.gain_phase < 1.0));
        }
    }

    #[test]
    fn aligned_channel_is_one_group() {
        let g = ChannelSampler::aligned().sample(&[5, 5, 5], &mut rng_from_seed(0)).unwrap();
        assert_eq!(g.groups(), 1);
        assert!(g.gains().iter().all(|h| *h == num_complex::Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn rayleigh_second_moment() {
        let s = ChannelSampler { amplitude: AmplitudeModel::Rayleigh { sigma: 0.7 }, ..ChannelSampler::aligned() };
        let mut rng = rng_from_seed(9);
        let n = 20_000;
        let mean_sq: f64 = (0..n).map(|_| s.sample(&[1], &mut rng).unwrap().profile(0).gain_amp.powi(2)).sum::<f64>() / n as f64;
        // E|h|^2 = 2 sigma^2.
        assert!((mean_sq - 0.98).abs() < 0.03, "{mean_sq}");
    }
}
