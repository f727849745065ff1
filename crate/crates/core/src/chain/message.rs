//! Canonical-form Gaussian messages over clustered window variables.
//!
//! A message over `n` real coordinates is `exp(-x' J x / 2 + h' x)` with
//! precision `J` and information vector `h`. Zero precision is a flat prior,
//! so partially observed windows are represented exactly.

use std::cmp::Ordering;

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Relative ridge added to a singular marginalization block.
pub const RIDGE_RELATIVE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Part {
    Re,
    Im,
}

/// Label of one real coordinate: part of symbol `s_device[symbol]`.
/// Symbol indexes are zero-based; `-1` and `L` denote zero padding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Coord {
    pub device: usize,
    pub symbol: isize,
    pub part: Part,
}

impl Coord {
    /// Canonical order: all real parts, then all imaginary parts, by device.
    fn canonical_cmp(&self, other: &Self) -> Ordering {
        (self.part, self.device, self.symbol).cmp(&(other.part, other.device, other.symbol))
    }
}

/// Canonical coordinate list for a window holding symbol `symbols[m]` of each device `m`.
pub fn window_coords(symbols: &[isize]) -> Vec<Coord> {
    [Part::Re, Part::Im]
        .into_iter()
        .flat_map(|part| symbols.iter().enumerate().map(move |(device, &symbol)| Coord { device, symbol, part }))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMessage<T: Real> {
    pub info: DVector<T>,
    pub prec: DMatrix<T>,
    pub coords: Vec<Coord>,
}

/// Evidence of one whitened sample about its window.
///
/// With `a_r = [h_r, -h_i]` and `a_i = [h_i, h_r]` built from the per-device
/// coefficients, the likelihood `exp(-(d/N0) |y - sum_m h_m b_m|^2)` has
/// precision `(2d/N0)(a_r a_r' + a_i a_i')` and information `(2d/N0)(a_r y_r + a_i y_i)`.
pub fn evidence_message<T: Real>(
    sample: Complex<T>,
    coefficients: &[Complex<T>],
    sub_length: T,
    n0: T,
    coords: Vec<Coord>,
) -> Result<GaussianMessage<T>> {
    let m = coefficients.len();
    if coords.len() != 2 * m {
        return Err(Error::ShapeMismatch { what: "evidence coordinates", expected: 2 * m, found: coords.len() });
    }
    if n0 <= T::zero() {
        return Err(Error::ZeroNoise);
    }
    let scale = lit::<T>(2.0) * sub_length / n0;
    let a_r = DVector::from_fn(2 * m, |j, _| if j < m { coefficients[j].re } else { -coefficients[j - m].im });
    let a_i = DVector::from_fn(2 * m, |j, _| if j < m { coefficients[j].im } else { coefficients[j - m].re });
    let mut prec = &a_r * a_r.transpose();
    prec.ger(T::one(), &a_i, &a_i, T::one());
    prec *= scale;
    let info = (a_r * sample.re + a_i * sample.im) * scale;
    Ok(GaussianMessage { info, prec, coords })
}

impl<T: Real> GaussianMessage<T> {
    /// Flat (uninformative) message over `coords`.
    pub fn flat(coords: Vec<Coord>) -> Self {
        let n = coords.len();
        Self { info: DVector::zeros(n), prec: DMatrix::zeros(n, n), coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Product of two messages over the same coordinates.
    pub fn combine(&self, other: &Self) -> Self {
        assert_eq!(self.coords, other.coords, "combine: coordinate maps differ");
        Self { info: &self.info + &other.info, prec: &self.prec + &other.prec, coords: self.coords.clone() }
    }

    pub fn combine_in_place(&mut self, other: &Self) {
        debug_assert_eq!(self.coords, other.coords, "combine: coordinate maps differ");
        self.info += &other.info;
        self.prec += &other.prec;
    }

    fn position(&self, device: usize, symbol: isize, part: Part) -> Option<usize> {
        self.coords.iter().position(|c| c.device == device && c.symbol == symbol && c.part == part)
    }

    /// Integrates out the coordinates at `positions` (Schur complement).
    ///
    /// Coordinates with an all-zero precision row and zero information carry
    /// no evidence and are dropped directly. The returned flag is `true` when
    /// the block needed the relative ridge to factor.
    pub fn marginalize(&self, positions: &[usize]) -> Result<(Self, bool)> {
        let n = self.dim();
        let zero = T::zero();
        let is_flat = |p: usize| self.info[p] == zero && self.prec.row(p).iter().all(|&v| v == zero);
        let solve: Vec<usize> = positions.iter().copied().filter(|&p| !is_flat(p)).collect();
        let keep: Vec<usize> = (0..n).filter(|p| !positions.contains(p)).collect();
        let coords: Vec<Coord> = keep.iter().map(|&p| self.coords[p]).collect();

        let j_aa = self.prec.select_rows(&keep).select_columns(&keep);
        let h_a = self.info.select_rows(&keep);
        if solve.is_empty() {
            return Ok((Self { info: h_a, prec: j_aa, coords }, false));
        }
        let j_bb = self.prec.select_rows(&solve).select_columns(&solve);
        let j_ab = self.prec.select_rows(&keep).select_columns(&solve);
        let h_b = self.info.select_rows(&solve);

        let (chol, ridged) = match Cholesky::new(j_bb.clone()) {
            Some(c) => (c, false),
            None => {
                let ridge = self.prec.trace() * lit(RIDGE_RELATIVE) / T::from_usize(n).expect("dim");
                let mut shifted = j_bb;
                for d in 0..shifted.nrows() {
                    shifted[(d, d)] += ridge;
                }
                // `window` is filled in by the caller that knows the chain position.
                (Cholesky::new(shifted).ok_or(Error::SingularMarginalization { window: usize::MAX })?, true)
            }
        };
        let x = chol.solve(&j_ab.transpose());
        let y = chol.solve(&h_b);
        let mut prec = j_aa - &j_ab * x;
        prec = (&prec + prec.transpose()) * lit::<T>(0.5);
        let info = h_a - j_ab * y;
        Ok((Self { info, prec, coords }, ridged))
    }

    /// Moves the message to the next window: marginalizes the `dropped`
    /// symbols, adds flat coordinates for the `introduced` ones, and reorders
    /// into canonical order. Symbols are `(device, symbol index)` pairs.
    pub fn shift_window(&self, dropped: &[(usize, isize)], introduced: &[(usize, isize)]) -> Result<Self> {
        self.shift_window_flagged(dropped, introduced).map(|(msg, _)| msg)
    }

    pub(crate) fn shift_window_flagged(&self, dropped: &[(usize, isize)], introduced: &[(usize, isize)]) -> Result<(Self, bool)> {
        let mut positions = Vec::with_capacity(2 * dropped.len());
        for &(device, symbol) in dropped {
            for part in [Part::Re, Part::Im] {
                let p = self
                    .position(device, symbol, part)
                    .ok_or_else(|| Error::InvalidArgument(format!("dropped symbol s_{device}[{symbol}] not in message")))?;
                positions.push(p);
            }
        }
        let (reduced, ridged) = self.marginalize(&positions)?;
        if introduced.is_empty() {
            return Ok((reduced, ridged));
        }
        for &(device, symbol) in introduced {
            if reduced.position(device, symbol, Part::Re).is_some() {
                return Err(Error::InvalidArgument(format!("introduced symbol s_{device}[{symbol}] already present")));
            }
        }

        let mut coords = reduced.coords.clone();
        coords.extend(
            [Part::Re, Part::Im]
                .into_iter()
                .flat_map(|part| introduced.iter().map(move |&(device, symbol)| Coord { device, symbol, part })),
        );
        let mut order: Vec<usize> = (0..coords.len()).collect();
        order.sort_by(|&a, &b| coords[a].canonical_cmp(&coords[b]));
        let old = reduced.dim();
        let n = coords.len();
        let src = |p: usize| if order[p] < old { Some(order[p]) } else { None };
        let info = DVector::from_fn(n, |r, _| src(r).map_or(T::zero(), |s| reduced.info[s]));
        let prec = DMatrix::from_fn(n, n, |r, c| match (src(r), src(c)) {
            (Some(a), Some(b)) => reduced.prec[(a, b)],
            _ => T::zero(),
        });
        let coords = order.iter().map(|&p| coords[p]).collect();
        Ok((Self { info, prec, coords }, ridged))
    }

    /// Converts to moment form `(mean, covariance)` when the precision is invertible.
    pub fn to_moments(&self) -> Option<(DVector<T>, DMatrix<T>)> {
        let chol = Cholesky::new(self.prec.clone())?;
        Some((chol.solve(&self.info), chol.inverse()))
    }

    /// Builds a message from moment form.
    pub fn from_moments(mean: &DVector<T>, cov: &DMatrix<T>, coords: Vec<Coord>) -> Option<Self> {
        let prec = Cholesky::new(cov.clone())?.inverse();
        let info = &prec * mean;
        Some(Self { info, prec, coords })
    }
}
