//! Second-order statistics of the sample noise.

use nalgebra::{DMatrix, DVector};

use crate::model::coeff::whitened_len;
use crate::model::geometry::SlotGeometry;
use crate::scalar::Real;

/// Covariance `E[z_k[i] z*_{k'}[i']]` of the standard-path noise, indexed like
/// the standard sample rows.
///
/// Two full-period integration windows starting `delta` apart overlap for
/// `max(0, 1 - |delta|)` symbol periods, which is the covariance in units of
/// `N0`. The result is real (hence Hermitian) and positive semidefinite.
pub fn colored_noise_covariance<T: Real>(geom: &SlotGeometry<T>, packet_len: usize, n0: T) -> DMatrix<T> {
    let groups = geom.groups();
    let n = groups * packet_len;
    let start = |r: usize| T::from_usize(r / groups).expect("index") + geom.boundary(r % groups);
    DMatrix::from_fn(n, n, |a, b| {
        let delta = (start(b) - start(a)).abs();
        if delta >= T::one() {
            T::zero()
        } else {
            n0 * (T::one() - delta)
        }
    })
}

/// Diagonal of the whitened-noise covariance: `N0 / d_k` for every whitened row.
pub fn whitened_noise_variances<T: Real>(geom: &SlotGeometry<T>, packet_len: usize, n0: T) -> DVector<T> {
    let groups = geom.groups();
    DVector::from_fn(whitened_len(groups, packet_len), |r, _| n0 / geom.sub_length(r % groups))
}
