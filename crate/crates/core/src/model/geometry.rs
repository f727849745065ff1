//! Device profiles and the validated per-slot channel layout.
//!
//! Time is measured in symbol periods (`T = 1`). After validation the devices
//! are sorted by arrival offset, the earliest offset is shifted to zero, and
//! devices sharing an offset are coalesced into one boundary group. Boundary
//! `b` opens sub-interval `b` of length `d_b = boundary[b + 1] - boundary[b]`,
//! with the closing boundary fixed at `1`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{cis, to_f64, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceProfile<T> {
    /// Arrival offset in symbol periods, in `[0, 1)`.
    pub tau: T,
    /// Residual channel amplitude `|h'|`.
    pub gain_amp: T,
    /// Residual channel phase in radians.
    pub gain_phase: T,
    /// Residual carrier frequency offset in radians per symbol period.
    pub cfo: T,
    /// Local dataset size `B_m`.
    pub dataset_size: u64,
}

impl<T: Real> DeviceProfile<T> {
    /// Perfectly aligned device: zero offset, unit gain, no CFO.
    pub fn aligned() -> Self {
        Self { tau: T::zero(), gain_amp: T::one(), gain_phase: T::zero(), cfo: T::zero(), dataset_size: 1 }
    }

    pub fn with_tau(tau: T) -> Self {
        Self { tau, ..Self::aligned() }
    }

    /// Residual complex gain `h' = |h'| e^{j phi}`.
    pub fn gain(&self) -> Complex<T> {
        cis(self.gain_phase) * self.gain_amp
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotGeometry<T> {
    profiles: Vec<DeviceProfile<T>>,
    original_index: Vec<usize>,
    boundaries: Vec<T>,
    sub_lengths: Vec<T>,
    membership: Vec<Vec<usize>>,
    group_of: Vec<usize>,
}

/// Sorts, shifts and groups a device list into a [`SlotGeometry`].
pub fn validate_geometry<T: Real>(profiles: &[DeviceProfile<T>]) -> Result<SlotGeometry<T>> {
    if profiles.is_empty() {
        return Err(Error::EmptyDeviceList);
    }
    for (device, p) in profiles.iter().enumerate() {
        if !(p.tau >= T::zero() && p.tau < T::one()) {
            return Err(Error::OffsetOutOfRange { device, tau: to_f64(p.tau) });
        }
        if !(p.gain_amp >= T::zero()) || !p.gain_amp.is_finite() {
            return Err(Error::InvalidProfile { device, reason: "gain amplitude must be finite and >= 0".into() });
        }
        if !p.gain_phase.is_finite() || !p.cfo.is_finite() {
            return Err(Error::InvalidProfile { device, reason: "phase and CFO must be finite".into() });
        }
        if p.dataset_size == 0 {
            return Err(Error::InvalidProfile { device, reason: "dataset size must be >= 1".into() });
        }
    }

    let mut order: Vec<usize> = (0..profiles.len()).collect();
    // Stable: equal offsets keep their input order.
    order.sort_by(|&a, &b| profiles[a].tau.partial_cmp(&profiles[b].tau).expect("finite offsets"));
    let shift = profiles[order[0]].tau;

    let mut sorted = Vec::with_capacity(order.len());
    let mut boundaries: Vec<T> = Vec::new();
    let mut membership: Vec<Vec<usize>> = Vec::new();
    let mut group_of = Vec::with_capacity(order.len());
    for (m, &orig) in order.iter().enumerate() {
        let mut p = profiles[orig];
        p.tau -= shift;
        if boundaries.last().is_none_or(|&b| p.tau > b) {
            boundaries.push(p.tau);
            membership.push(Vec::new());
        }
        membership.last_mut().expect("group opened").push(m);
        group_of.push(membership.len() - 1);
        sorted.push(p);
    }
    boundaries.push(T::one());
    let sub_lengths = boundaries.windows(2).map(|w| w[1] - w[0]).collect();

    Ok(SlotGeometry { profiles: sorted, original_index: order, boundaries, sub_lengths, membership, group_of })
}

impl<T: Real> SlotGeometry<T> {
    /// All devices aligned with unit gains (the ideal OAC channel).
    pub fn aligned(devices: usize) -> Result<Self> {
        validate_geometry(&vec![DeviceProfile::aligned(); devices])
    }

    /// Distinct-offset geometry with unit gains, from a list of offsets.
    pub fn from_offsets(taus: &[T]) -> Result<Self> {
        let profiles: Vec<_> = taus.iter().map(|&t| DeviceProfile::with_tau(t)).collect();
        validate_geometry(&profiles)
    }

    /// Number of devices `M`.
    pub fn devices(&self) -> usize {
        self.profiles.len()
    }

    /// Number of distinct boundaries `M'`.
    pub fn groups(&self) -> usize {
        self.membership.len()
    }

    /// Profiles in sorted (arrival) order.
    pub fn profiles(&self) -> &[DeviceProfile<T>] {
        &self.profiles
    }

    pub fn profile(&self, m: usize) -> &DeviceProfile<T> {
        &self.profiles[m]
    }

    /// Position of sorted device `m` in the list passed to [`validate_geometry`].
    pub fn original_index(&self, m: usize) -> usize {
        self.original_index[m]
    }

    pub fn original_order(&self) -> &[usize] {
        &self.original_index
    }

    /// The `M' + 1` boundaries, ending with the closing boundary `1`.
    pub fn boundaries(&self) -> &[T] {
        &self.boundaries
    }

    pub fn boundary(&self, group: usize) -> T {
        self.boundaries[group]
    }

    pub fn sub_lengths(&self) -> &[T] {
        &self.sub_lengths
    }

    pub fn sub_length(&self, group: usize) -> T {
        self.sub_lengths[group]
    }

    pub fn membership(&self) -> &[Vec<usize>] {
        &self.membership
    }

    /// Boundary group of sorted device `m`.
    pub fn group_of(&self, m: usize) -> usize {
        self.group_of[m]
    }

    pub fn gains(&self) -> Vec<Complex<T>> {
        self.profiles.iter().map(DeviceProfile::gain).collect()
    }

    /// True when every device has its own boundary (`M' = M`).
    pub fn distinct_offsets(&self) -> bool {
        self.groups() == self.devices()
    }

    pub fn has_cfo(&self) -> bool {
        self.profiles.iter().any(|p| p.cfo != T::zero())
    }

    /// Length of the final sub-interval, `d_{M'} = 1 - tau_max`.
    pub fn last_sub_length(&self) -> T {
        *self.sub_lengths.last().expect("at least one group")
    }

    /// `sum_b d_b`, which is `1` up to rounding.
    pub fn total_length(&self) -> T {
        self.sub_lengths.iter().fold(T::zero(), |acc, &d| acc + d)
    }

    /// Replaces the per-device gains (sorted order), keeping offsets.
    pub fn with_gains(&self, gains: &[Complex<T>]) -> Result<Self> {
        if gains.len() != self.devices() {
            return Err(Error::ShapeMismatch { what: "gain list", expected: self.devices(), found: gains.len() });
        }
        let profiles: Vec<_> = self
            .profiles
            .iter()
            .zip(gains)
            .map(|(p, g)| DeviceProfile { gain_amp: g.norm_sqr().sqrt(), gain_phase: g.im.atan2(g.re), ..*p })
            .collect();
        validate_geometry(&profiles)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn two_devices_quarter_offset() {
        let g = SlotGeometry::<f64>::from_offsets(&[0.0, 0.25]).unwrap();
        assert_eq!(g.boundaries(), &[0.0, 0.25, 1.0]);
        assert_eq!(g.sub_lengths(), &[0.25, 0.75]);
        assert_eq!(g.membership(), &[vec![0], vec![1]]);
    }

    #[test]
    fn all_aligned_is_single_group() {
        let g = SlotGeometry::<f64>::from_offsets(&[0.0; 4]).unwrap();
        assert_eq!(g.groups(), 1);
        assert_eq!(g.sub_lengths(), &[1.0]);
        assert_eq!(g.membership(), &[vec![0, 1, 2, 3]]);
    }

    #[test]
    fn coalesced_pair_matches_enumeration() {
        let taus = [0.0, 0.5, 0.5];
        // Oracle: brute-force enumeration of distinct offsets.
        let distinct: BTreeSet<u64> = taus.iter().map(|t: &f64| t.to_bits()).collect();
        let g = SlotGeometry::<f64>::from_offsets(&taus).unwrap();
        assert_eq!(g.groups(), distinct.len());
        assert_eq!(g.sub_lengths(), &[0.5, 0.5]);
        assert_eq!(g.membership(), &[vec![0], vec![1, 2]]);
    }

    #[test]
    fn sorts_and_shifts() {
        let g = SlotGeometry::<f64>::from_offsets(&[0.6, 0.2, 0.4]).unwrap();
        let taus: Vec<f64> = g.profiles().iter().map(|p| p.tau).collect();
        assert!((taus[0]).abs() < 1e-15);
        assert!((taus[1] - 0.2).abs() < 1e-15 && (taus[2] - 0.4).abs() < 1e-15);
        assert_eq!(g.original_order(), &[1, 2, 0]);
        assert!((g.total_length() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(validate_geometry::<f64>(&[]), Err(Error::EmptyDeviceList));
        assert!(matches!(SlotGeometry::<f64>::from_offsets(&[0.0, 1.0]), Err(Error::OffsetOutOfRange { device: 1, .. })));
        assert!(matches!(SlotGeometry::<f64>::from_offsets(&[-0.1]), Err(Error::OffsetOutOfRange { device: 0, .. })));
        let mut p = DeviceProfile::<f64>::aligned();
        p.dataset_size = 0;
        assert!(matches!(validate_geometry(&[p]), Err(Error::InvalidProfile { .. })));
    }

    #[test]
    fn works_in_single_precision() {
        let g = SlotGeometry::<f32>::from_offsets(&[0.0, 0.5]).unwrap();
        assert_eq!(g.sub_lengths(), &[0.5f32, 0.5]);
    }
}
