//! Packing of real model updates into complex symbol packets and back.
//!
//! A length-`d` vector is zero-padded to even length and split in half; the
//! first half rides on the real parts and the second on the imaginary parts
//! of `ceil(d / 2)` symbols, chunked into packets of `L`.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{FeelError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketPlan {
    pub dim: usize,
    pub packet_len: usize,
    pub packet_count: usize,
    /// Zero reals appended so that `2 L packet_count >= d`.
    pub pad_len: usize,
}

impl PacketPlan {
    pub fn new(dim: usize, packet_len: usize) -> Self {
        assert!(packet_len >= 1, "packet length must be >= 1");
        let packet_count = dim.div_ceil(2 * packet_len);
        Self { dim, packet_len, packet_count, pad_len: 2 * packet_len * packet_count - dim }
    }

    /// Number of complex symbols carrying data, `ceil(d / 2)`.
    pub fn symbols(&self) -> usize {
        self.dim.div_ceil(2)
    }
}

pub fn encode_update(theta: &[f64], packet_len: usize) -> Vec<DVector<Complex64>> {
    let plan = PacketPlan::new(theta.len(), packet_len);
    let half = plan.symbols();
    let at = |j: usize| theta.get(j).copied().unwrap_or(0.0);
    (0..plan.packet_count)
        .map(|p| {
            DVector::from_fn(packet_len, |i, _| {
                let j = p * packet_len + i;
                if j < half {
                    Complex64::new(at(j), at(half + j))
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
        })
        .collect()
}

pub fn decode_sum(estimates: &[DVector<Complex64>], dim: usize) -> Result<Vec<f64>> {
    let half = dim.div_ceil(2);
    let total: usize = estimates.iter().map(|e| e.len()).sum();
    if total < half {
        return Err(FeelError::LengthMismatch { expected: half, found: total });
    }
    let symbols: Vec<Complex64> = estimates.iter().flat_map(|e| e.iter().copied()).take(half).collect();
    let mut theta: Vec<f64> = symbols.iter().map(|s| s.re).collect();
    theta.extend(symbols.iter().map(|s| s.im));
    theta.truncate(dim);
    Ok(theta)
}
