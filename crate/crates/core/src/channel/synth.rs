use nalgebra::DVector;
use num_complex::Complex;

use crate::channel::noise::WhitenedNoise;
use crate::channel::symbols::SymbolBlock;
use crate::error::{Error, Result};
use crate::model::{whitened_len, CoefficientMatrixA, CoefficientMatrixD, SlotGeometry};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamKind {
    /// Full-period matched-filter outputs `r` (colored noise).
    Standard,
    /// Sub-interval outputs `y` (white noise).
    Whitened,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleStream<T: Real> {
    pub kind: StreamKind,
    pub values: DVector<Complex<T>>,
    pub noise_seed: u64,
    pub n0: T,
}

impl<T: Real> SampleStream<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn expect_kind(&self, kind: StreamKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::WrongStreamKind { expected: kind, found: self.kind })
        }
    }
}

fn check_block<T: Real>(block: &SymbolBlock<T>, devices: usize, packet_len: usize) -> Result<()> {
    if block.devices() != devices {
        return Err(Error::ShapeMismatch { what: "symbol block devices", expected: devices, found: block.devices() });
    }
    if block.packet_len() != packet_len {
        return Err(Error::ShapeMismatch { what: "symbol block length", expected: packet_len, found: block.packet_len() });
    }
    Ok(())
}

/// Whitened samples `y = D s + z~`.
pub fn synthesize_wmfs<T: Real>(block: &SymbolBlock<T>, d: &CoefficientMatrixD<T>, noise: &WhitenedNoise<T>) -> Result<SampleStream<T>> {
    check_block(block, d.devices(), d.packet_len())?;
    let expected = whitened_len(d.groups(), d.packet_len());
    if noise.values().len() != expected {
        return Err(Error::ShapeMismatch { what: "whitened noise", expected, found: noise.values().len() });
    }
    let values = d.matrix().mul_vec(&block.stacked()) + noise.values();
    Ok(SampleStream { kind: StreamKind::Whitened, values, noise_seed: noise.seed(), n0: noise.n0() })
}

/// Standard samples `r = A s + z`, with the colored noise assembled from the
/// same sub-interval realization used for the whitened stream:
/// `z_k[i] = sum_{b >= k} d_b z~_b[i] + sum_{b < k} d_b z~_b[i + 1]`.
/// Both streams therefore describe one received waveform.
pub fn synthesize_standard<T: Real>(
    block: &SymbolBlock<T>,
    a: &CoefficientMatrixA<T>,
    geom: &SlotGeometry<T>,
    noise: &WhitenedNoise<T>,
) -> Result<SampleStream<T>> {
    let packet_len = a.packet_len();
    check_block(block, geom.devices(), packet_len)?;
    if a.matrix().nrows() != geom.groups() * packet_len {
        return Err(Error::ShapeMismatch { what: "standard matrix rows", expected: geom.groups() * packet_len, found: a.matrix().nrows() });
    }
    if noise.groups() != geom.groups() || noise.packet_len() != packet_len {
        let expected = whitened_len(geom.groups(), packet_len);
        return Err(Error::ShapeMismatch { what: "whitened noise", expected, found: noise.values().len() });
    }
    let mut values = a.matrix().mul_vec(&block.stacked());
    let groups = geom.groups();
    for i in 0..packet_len {
        for k in 0..groups {
            let z = (0..groups).fold(Complex::new(T::zero(), T::zero()), |acc, b| {
                let period = if b >= k { i } else { i + 1 };
                acc + noise.get(b, period) * geom.sub_length(b)
            });
            values[i * groups + k] += z;
        }
    }
    Ok(SampleStream { kind: StreamKind::Standard, values, noise_seed: noise.seed(), n0: noise.n0() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::draw_whitened_noise;
    use crate::model::{coeff_matrix_standard, coeff_matrix_whitened};

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    #[test]
    fn two_device_noiseless_whitened() {
        let g = SlotGeometry::<f64>::from_offsets(&[0.0, 0.5]).unwrap();
        let block = SymbolBlock::from_rows(&[vec![c(1.0)], vec![c(2.0)]]);
        let d = coeff_matrix_whitened(&g, 1);
        let y = synthesize_wmfs(&block, &d, &WhitenedNoise::zero(&g, 1)).unwrap();
        assert_eq!(y.values.as_slice(), &[c(1.0), c(3.0), c(2.0)]);
    }

    #[test]
    fn aligned_whitened_is_target_sum() {
        let g = SlotGeometry::<f64>::aligned(3).unwrap();
        let block =
            SymbolBlock::from_rows(&[vec![c(1.0), Complex::new(0.5, 2.0)], vec![c(-2.0), c(4.0)], vec![Complex::new(0.0, 1.0), c(0.25)]]);
        let y = synthesize_wmfs(&block, &coeff_matrix_whitened(&g, 2), &WhitenedNoise::zero(&g, 2)).unwrap();
        assert_eq!(y.values, *block.target_sum());
    }

    #[test]
    fn zero_symbols_pass_noise_through() {
        let g = SlotGeometry::<f64>::from_offsets(&[0.0, 0.3, 0.6]).unwrap();
        let block = SymbolBlock::new(nalgebra::DMatrix::from_element(3, 4, c(0.0)));
        let noise = draw_whitened_noise(&g, 4, 0.7, 5).unwrap();
        let y = synthesize_wmfs(&block, &coeff_matrix_whitened(&g, 4), &noise).unwrap();
        assert_eq!(&y.values, noise.values());
    }

    #[test]
    fn single_device_standard_equals_whitened_noise() {
        let g = SlotGeometry::<f64>::aligned(1).unwrap();
        let block = SymbolBlock::from_rows(&[vec![c(1.0), c(-1.0), Complex::new(0.0, 2.0)]]);
        let noise = draw_whitened_noise(&g, 3, 0.5, 9).unwrap();
        let r = synthesize_standard(&block, &coeff_matrix_standard(&g, 3), &g, &noise).unwrap();
        for i in 0..3 {
            assert!((r.values[i] - (block.symbol(0, i) + noise.get(0, i))).norm() < 1e-15);
        }
    }

    #[test]
    fn standard_noiseless_is_a_times_s() {
        let g = SlotGeometry::<f64>::from_offsets(&[0.0, 0.2, 0.65]).unwrap();
        let block = SymbolBlock::from_rows(&[
            vec![c(1.0), c(2.0), c(3.0)],
            vec![c(-1.0), Complex::new(0.0, 1.0), c(0.5)],
            vec![c(2.0), c(2.0), c(-4.0)],
        ]);
        let a = coeff_matrix_standard(&g, 3);
        let r = synthesize_standard(&block, &a, &g, &WhitenedNoise::zero(&g, 3)).unwrap();
        assert_eq!(r.values, a.to_dense() * block.stacked());
    }

    #[test]
    fn shape_errors() {
        let g = SlotGeometry::<f64>::from_offsets(&[0.0, 0.5]).unwrap();
        let block = SymbolBlock::from_rows(&[vec![c(1.0)], vec![c(2.0)]]);
        let d = coeff_matrix_whitened(&g, 2);
        assert!(matches!(synthesize_wmfs(&block, &d, &WhitenedNoise::zero(&g, 2)), Err(Error::ShapeMismatch { .. })));
    }
}
