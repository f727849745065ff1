use num_complex::Complex;

use crate::channel::SymbolBlock;
use crate::error::{Error, Result};
use crate::model::geometry::SlotGeometry;
use crate::scalar::{lit, Real};

const ZERO_POWER_RELATIVE: f64 = 1e-24;

/// Noise level that realizes `esn0_db` on this packet: the empirical mean of
/// `|sum_m h'_m s_m[i]|^2` over the packet divided by `10^{esn0_db / 10}`.
///
/// `esn0_db = +inf` yields `N0 = 0` (noiseless).
pub fn calibrate_n0<T: Real>(geom: &SlotGeometry<T>, symbols: &SymbolBlock<T>, esn0_db: T) -> Result<T> {
    if symbols.devices() != geom.devices() {
        return Err(Error::ShapeMismatch { what: "symbol block devices", expected: geom.devices(), found: symbols.devices() });
    }
    if symbols.packet_len() == 0 {
        return Err(Error::InvalidArgument("symbol block is empty".into()));
    }
    if esn0_db.partial_cmp(&esn0_db).is_none() {
        return Err(Error::InvalidArgument("EsN0 is NaN".into()));
    }
    if esn0_db > T::zero() && !esn0_db.is_finite() {
        return Ok(T::zero());
    }
    let gains = geom.gains();
    let zero = Complex::new(T::zero(), T::zero());
    let mut energy = T::zero();
    let mut incoherent = T::zero();
    for i in 0..symbols.packet_len() {
        let terms = (0..geom.devices()).map(|m| gains[m] * symbols.symbol(m, i));
        energy += terms.clone().fold(zero, |a, b| a + b).norm_sqr();
        incoherent += terms.map(|t| t.norm_sqr()).fold(T::zero(), |a, b| a + b);
    }
    let len = T::from_usize(symbols.packet_len()).expect("length");
    // Cancellation leaves only rounding residue, far below the incoherent power.
    if energy <= incoherent * lit(ZERO_POWER_RELATIVE) {
        return Err(Error::ZeroSignalPower);
    }
    let energy = energy / len;
    Ok(energy / lit::<T>(10.0).powf(esn0_db / lit(10.0)))
}
