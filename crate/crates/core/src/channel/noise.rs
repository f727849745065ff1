use nalgebra::DVector;
use num_complex::Complex;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{whitened_len, SlotGeometry};
use crate::rng::rng_from_seed;
use crate::scalar::{lit, to_f64, Real};

/// One realization of the independent sub-interval noise `z~_b[i]`, stored in
/// whitened row order (`i * M' + b`).
#[derive(Debug, Clone, PartialEq)]
pub struct WhitenedNoise<T: Real> {
    values: DVector<Complex<T>>,
    groups: usize,
    packet_len: usize,
    seed: u64,
    n0: T,
}

impl<T: Real> WhitenedNoise<T> {
    /// The all-zero realization.
    pub fn zero(geom: &SlotGeometry<T>, packet_len: usize) -> Self {
        let len = whitened_len(geom.groups(), packet_len);
        Self {
            values: DVector::from_element(len, Complex::new(T::zero(), T::zero())),
            groups: geom.groups(),
            packet_len,
            seed: 0,
            n0: T::zero(),
        }
    }

    pub fn values(&self) -> &DVector<Complex<T>> {
        &self.values
    }

    /// `z~_b[i]` for zero-based period `i <= L`; the omitted `(M'-1, L)` entry reads as zero.
    pub fn get(&self, b: usize, i: usize) -> Complex<T> {
        self.values.get(i * self.groups + b).copied().unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n0(&self) -> T {
        self.n0
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn packet_len(&self) -> usize {
        self.packet_len
    }
}

/// Draws `z~_b[i] ~ CN(0, N0 / d_b)` independently. Draw order is b-major then
/// `i`, real part before imaginary, so a seed fixes the realization bit for bit
/// regardless of scalar type.
pub fn draw_whitened_noise<T: Real>(geom: &SlotGeometry<T>, packet_len: usize, n0: T, seed: u64) -> Result<WhitenedNoise<T>> {
    if !(n0 >= T::zero()) || !n0.is_finite() {
        return Err(Error::InvalidArgument(format!("noise level must be finite and >= 0, got {}", to_f64(n0))));
    }
    let mut noise = WhitenedNoise::zero(geom, packet_len);
    noise.seed = seed;
    noise.n0 = n0;
    if n0 == T::zero() {
        return Ok(noise);
    }
    let groups = geom.groups();
    let mut rng = rng_from_seed(seed);
    for b in 0..groups {
        let std = (n0 / (lit::<T>(2.0) * geom.sub_length(b))).sqrt();
        let periods = if b + 1 == groups { packet_len } else { packet_len + 1 };
        for i in 0..periods {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            noise.values[i * groups + b] = Complex::new(lit::<T>(re) * std, lit::<T>(im) * std);
        }
    }
    Ok(noise)
}
