//! Forward-backward sum-product pass over the chain of window variables.
//!
//! Whitened sample `(k, i)` sees one symbol per device, so every window is a
//! `2M`-dimensional real variable and consecutive windows differ only in the
//! symbols of boundary group `k`. The chain is a tree; one forward and one
//! backward sweep give exact marginals at each aligned window `(M'-1, i)`,
//! whose members are `s_1[i], ..., s_M[i]`.

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex;

use crate::chain::message::{evidence_message, window_coords, GaussianMessage};
use crate::channel::{SampleStream, StreamKind};
use crate::error::{Error, Result};
use crate::model::{whitened_len, CoefficientMatrixD, SlotGeometry};
use crate::scalar::{lit, to_f64, Real};

/// Condition number above which a marginal precision counts as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// `(device, symbol index)`.
type Symbol = (usize, isize);

/// Moment-form marginal likelihood of `s[i] = (s_1[i], ..., s_M[i])` as a
/// `2M` real Gaussian, real parts stacked above imaginary parts. For a
/// singular precision, `mean` is the minimum-norm solution and `cov` the
/// pseudo-inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolMarginal<T: Real> {
    pub mean: DVector<T>,
    pub cov: DMatrix<T>,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput<T: Real> {
    pub marginals: Vec<SymbolMarginal<T>>,
    /// Marginalizations that needed the relative ridge.
    pub ridge_events: usize,
    /// Marginals whose precision was singular but whose sum stayed
    /// identifiable; their moments use the pseudo-inverse.
    pub rank_deficient: usize,
    /// Largest marginal-precision condition number over the identifiable subspace.
    pub max_condition: f64,
}

struct Layout<'a, T: Real> {
    geom: &'a SlotGeometry<T>,
    groups: usize,
    packet_len: usize,
}

impl<T: Real> Layout<'_, T> {
    fn label(&self, r: usize) -> (usize, usize) {
        (r % self.groups, r / self.groups)
    }

    /// Symbol index of every device in window `(k, i)`; may be `-1` or `L` (padding).
    fn window_symbols(&self, k: usize, i: usize) -> Vec<isize> {
        (0..self.geom.devices()).map(|m| if self.geom.group_of(m) <= k { i as isize } else { i as isize - 1 }).collect()
    }

    /// Symbols of group `k` before and after entering window `(k, i)` from its predecessor.
    fn transition(&self, k: usize, i: usize) -> (Vec<Symbol>, Vec<Symbol>) {
        let members = &self.geom.membership()[k];
        let old = members.iter().map(|&m| (m, i as isize - 1)).collect();
        let new = members.iter().map(|&m| (m, i as isize)).collect();
        (old, new)
    }
}

/// Runs the forward-backward pass on a whitened stream.
pub fn forward_backward<T: Real>(
    geom: &SlotGeometry<T>,
    stream: &SampleStream<T>,
    d: &CoefficientMatrixD<T>,
    n0: T,
) -> Result<ChainOutput<T>> {
    stream.expect_kind(StreamKind::Whitened)?;
    if n0 <= T::zero() {
        return Err(Error::ZeroNoise);
    }
    let layout = Layout { geom, groups: geom.groups(), packet_len: d.packet_len() };
    let rows = whitened_len(layout.groups, layout.packet_len);
    if stream.len() != rows {
        return Err(Error::ShapeMismatch { what: "whitened stream", expected: rows, found: stream.len() });
    }
    if d.devices() != geom.devices() || d.groups() != geom.groups() {
        return Err(Error::ShapeMismatch { what: "whitened matrix devices", expected: geom.devices(), found: d.devices() });
    }
    let last = layout.groups - 1;
    let m_dev = geom.devices();

    let evidence = |r: usize| {
        let (k, i) = layout.label(r);
        let coeffs: Vec<Complex<T>> = (0..m_dev).map(|m| d.device_coefficient(r, m)).collect();
        evidence_message(stream.values[r], &coeffs, geom.sub_length(k), n0, window_coords(&layout.window_symbols(k, i)))
    };
    let mut ridge_events = 0usize;

    // Forward sweep; keep the incoming message at each aligned window.
    let mut forward_at_aligned = Vec::with_capacity(layout.packet_len);
    let (k0, i0) = layout.label(0);
    let mut alpha = GaussianMessage::flat(window_coords(&layout.window_symbols(k0, i0)));
    for r in 0..rows {
        let (k, _) = layout.label(r);
        if k == last {
            forward_at_aligned.push(alpha.clone());
        }
        if r + 1 < rows {
            alpha.combine_in_place(&evidence(r)?);
            let (nk, ni) = layout.label(r + 1);
            let (old, new) = layout.transition(nk, ni);
            alpha = shift(&alpha, &old, &new, r + 1, &mut ridge_events)?;
        }
    }

    // Backward sweep, closing each aligned window as it is reached.
    let mut marginals: Vec<Option<SymbolMarginal<T>>> = vec![None; layout.packet_len];
    let mut max_condition = 0.0f64;
    let mut rank_deficient = 0usize;
    let (kl, il) = layout.label(rows - 1);
    let mut beta = GaussianMessage::flat(window_coords(&layout.window_symbols(kl, il)));
    for r in (0..rows).rev() {
        let (k, i) = layout.label(r);
        let e = evidence(r)?;
        if k == last {
            let mut total = forward_at_aligned[i].combine(&e);
            total.combine_in_place(&beta);
            let (marginal, condition, deficient) = to_marginal(&total, i)?;
            max_condition = max_condition.max(condition);
            rank_deficient += usize::from(deficient);
            marginals[i] = Some(marginal);
        }
        if r > 0 {
            beta.combine_in_place(&e);
            let (new, old) = layout.transition(k, i);
            beta = shift(&beta, &old, &new, r - 1, &mut ridge_events)?;
        }
    }

    Ok(ChainOutput {
        marginals: marginals.into_iter().map(|m| m.expect("every aligned window visited")).collect(),
        ridge_events,
        rank_deficient,
        max_condition,
    })
}

fn shift<T: Real>(
    msg: &GaussianMessage<T>,
    dropped: &[(usize, isize)],
    introduced: &[(usize, isize)],
    window: usize,
    ridge_events: &mut usize,
) -> Result<GaussianMessage<T>> {
    let (next, ridged) = msg.shift_window_flagged(dropped, introduced).map_err(|e| match e {
        Error::SingularMarginalization { .. } => Error::SingularMarginalization { window },
        other => other,
    })?;
    *ridge_events += usize::from(ridged);
    Ok(next)
}

fn to_marginal<T: Real>(msg: &GaussianMessage<T>, index: usize) -> Result<(SymbolMarginal<T>, f64, bool)> {
    let n = msg.dim();
    let m = n / 2;
    let eig = msg.prec.clone().symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0f64, |hi, &v| hi.max(to_f64(v).abs()));
    let floor = top / MAX_CONDITION;
    let kept: Vec<usize> = (0..n).filter(|&j| to_f64(eig.eigenvalues[j]) > floor).collect();
    if kept.is_empty() {
        return Err(Error::RankDeficientMarginal { index, condition: f64::INFINITY });
    }
    let rank_deficient = kept.len() < n;
    if rank_deficient {
        // Individual symbols are unidentifiable (e.g. devices sharing an
        // offset); the sum is still estimable if both sum directions avoid the
        // null space.
        for offset in [0, m] {
            let leak: f64 = (0..n)
                .filter(|j| !kept.contains(j))
                .map(|j| {
                    let p: f64 = (offset..offset + m).map(|r| to_f64(eig.eigenvectors[(r, j)])).sum();
                    p * p
                })
                .sum();
            if leak > 1e-12 * m as f64 {
                return Err(Error::RankDeficientMarginal { index, condition: f64::INFINITY });
            }
        }
    }
    let lo = kept.iter().fold(f64::INFINITY, |lo, &j| lo.min(to_f64(eig.eigenvalues[j])));
    let condition = top / lo;
    let inv = DVector::from_fn(n, |j, _| if kept.contains(&j) { T::one() / eig.eigenvalues[j] } else { T::zero() });
    let cov = &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose();
    let cov = (&cov + cov.transpose()) * lit::<T>(0.5);
    let mean = &cov * &msg.info;
    Ok((SymbolMarginal { mean, cov, index }, condition, rank_deficient))
}

/// Distribution of `s_+[i] = 1' s[i]`: complex mean and the 2x2 real
/// covariance of its real and imaginary parts.
pub fn sum_marginal<T: Real>(marg: &SymbolMarginal<T>) -> (Complex<T>, Matrix2<T>) {
    let m = marg.mean.len() / 2;
    let sum = |rows: std::ops::Range<usize>, cols: std::ops::Range<usize>| {
        marg.cov.view((rows.start, cols.start), (rows.len(), cols.len())).sum()
    };
    let mean = Complex::new(marg.mean.rows(0, m).sum(), marg.mean.rows(m, m).sum());
    let rr = sum(0..m, 0..m);
    let ri = sum(0..m, m..2 * m);
    let ir = sum(m..2 * m, 0..m);
    let ii = sum(m..2 * m, m..2 * m);
    (mean, Matrix2::new(rr, ri, ir, ii))
}
