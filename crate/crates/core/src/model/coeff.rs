//! Coefficient matrices of the standard (`r = A s + z`) and whitened
//! (`y = D s + z~`) sample models, and the summation matrix `V`.
//!
//! Index conventions (all zero-based):
//! * symbol column `l * M + m` holds `s_m[l]`, `l < L`;
//! * standard sample row `i * M' + k` is the full-period matched-filter
//!   output started at boundary `k` of period `i`, `i < L`;
//! * whitened sample row `i * M' + k` is the sub-interval `k` output of
//!   period `i`, `i <= L`, with the all-padding row `(M' - 1, L)` omitted.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::model::geometry::SlotGeometry;
use crate::scalar::{cis, lit, Real};

/// Below this phase excursion the CFO integral switches to its Taylor series.
pub const CFO_SERIES_THRESHOLD: f64 = 1e-8;

/// `h * integral_{start}^{end} e^{j cfo t} dt`, exact for a constant amplitude.
pub fn segment_coefficient<T: Real>(h: Complex<T>, cfo: T, start: T, end: T) -> Complex<T> {
    let len = end - start;
    let excursion = cfo * len;
    if excursion.abs() < lit(CFO_SERIES_THRESHOLD) {
        let series = Complex::new(T::one() - excursion * excursion / lit(6.0), excursion / lit(2.0));
        h * cis(cfo * start) * series * len
    } else {
        // (e^{jx} - 1) / (jx) = e^{jx/2} sin(x/2) / (x/2), free of cancellation for small x.
        let half = excursion / lit(2.0);
        h * cis(cfo * start + half) * (half.sin() / half * len)
    }
}

/// Row-sparse complex matrix; each row stores `(column, value)` pairs in
/// ascending column order.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows<T> {
    ncols: usize,
    rows: Vec<Vec<(usize, Complex<T>)>>,
}

impl<T: Real> SparseRows<T> {
    pub fn new(ncols: usize, rows: Vec<Vec<(usize, Complex<T>)>>) -> Self {
        debug_assert!(rows.iter().flatten().all(|&(c, _)| c < ncols));
        Self { ncols, rows }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, r: usize) -> &[(usize, Complex<T>)] {
        &self.rows[r]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[(usize, Complex<T>)]> {
        self.rows.iter().map(Vec::as_slice)
    }

    /// Entry `(r, c)`, zero when not stored.
    pub fn get(&self, r: usize, c: usize) -> Complex<T> {
        self.rows[r]
            .binary_search_by_key(&c, |&(col, _)| col)
            .map(|pos| self.rows[r][pos].1)
            .unwrap_or_else(|_| Complex::new(T::zero(), T::zero()))
    }

    pub fn mul_vec(&self, x: &DVector<Complex<T>>) -> DVector<Complex<T>> {
        assert_eq!(x.len(), self.ncols, "SparseRows::mul_vec: length mismatch");
        DVector::from_iterator(
            self.rows.len(),
            self.rows.iter().map(|row| row.iter().fold(Complex::new(T::zero(), T::zero()), |acc, &(c, v)| acc + v * x[c])),
        )
    }

    pub fn to_dense(&self) -> DMatrix<Complex<T>> {
        let mut dense = DMatrix::from_element(self.rows.len(), self.ncols, Complex::new(T::zero(), T::zero()));
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                dense[(r, c)] = v;
            }
        }
        dense
    }
}

#[inline]
fn from_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("index representable")
}

/// Standard-path coefficient matrix `A`, shape `(M' L) x (M L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrixA<T> {
    devices: usize,
    groups: usize,
    packet_len: usize,
    matrix: SparseRows<T>,
}

/// Builds `A` from the geometry: each full-period sample integrates every
/// device's two overlapping symbols over their overlap with the sample window.
/// Symbols outside `1..=L` are zero padding and have no column.
pub fn coeff_matrix_standard<T: Real>(geom: &SlotGeometry<T>, packet_len: usize) -> CoefficientMatrixA<T> {
    assert!(packet_len >= 1, "packet length must be >= 1");
    let (m_dev, groups) = (geom.devices(), geom.groups());
    let mut rows = Vec::with_capacity(groups * packet_len);
    for i in 0..packet_len {
        let period = from_usize::<T>(i);
        for k in 0..groups {
            let start = period + geom.boundary(k);
            let end = start + T::one();
            let mut row = Vec::with_capacity(2 * m_dev);
            for (m, p) in geom.profiles().iter().enumerate() {
                let h = p.gain();
                // The window's own group switches exactly at its end.
                let switch = match geom.group_of(m) {
                    g if g == k => end,
                    g if g < k => period + T::one() + p.tau,
                    _ => period + p.tau,
                };
                // Symbol active before the device's in-window transition.
                let (early, late) = if geom.group_of(m) <= k { (Some(i), i + 1) } else { (i.checked_sub(1), i) };
                if let Some(l) = early {
                    if switch > start {
                        row.push((l * m_dev + m, segment_coefficient(h, p.cfo, start, switch)));
                    }
                }
                if late < packet_len && end > switch {
                    row.push((late * m_dev + m, segment_coefficient(h, p.cfo, switch, end)));
                }
            }
            row.sort_by_key(|&(c, _)| c);
            rows.push(row);
        }
    }
    CoefficientMatrixA { devices: m_dev, groups, packet_len, matrix: SparseRows::new(m_dev * packet_len, rows) }
}

impl<T: Real> CoefficientMatrixA<T> {
    pub fn matrix(&self) -> &SparseRows<T> {
        &self.matrix
    }

    pub fn to_dense(&self) -> DMatrix<Complex<T>> {
        self.matrix.to_dense()
    }

    pub fn packet_len(&self) -> usize {
        self.packet_len
    }

    pub fn is_square(&self) -> bool {
        self.groups == self.devices
    }

    /// `(filter k, period i)` of standard row `r`.
    pub fn row_label(&self, r: usize) -> (usize, usize) {
        (r % self.groups, r / self.groups)
    }

    /// `(device m, symbol l)` of column `c`.
    pub fn col_label(&self, c: usize) -> (usize, usize) {
        (c % self.devices, c / self.devices)
    }

    /// Entry `c_{m,k}[i]` or `c'_{m,k}[i]` (zero-based):
    /// coefficient of `s_m[l]` in sample `r_k[i]`.
    pub fn coefficient(&self, k: usize, i: usize, m: usize, l: usize) -> Complex<T> {
        self.matrix.get(i * self.groups + k, l * self.devices + m)
    }
}

/// Whitened-path coefficient matrix `D`, shape `(M'(L + 1) - 1) x (M L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrixD<T> {
    devices: usize,
    groups: usize,
    packet_len: usize,
    matrix: SparseRows<T>,
}

/// Number of whitened samples for a packet, `M'(L + 1) - 1`.
pub fn whitened_len(groups: usize, packet_len: usize) -> usize {
    groups * (packet_len + 1) - 1
}

/// Symbol index device `m` contributes to whitened sample `(k, i)`, or `None`
/// for zero padding.
pub fn window_symbol<T: Real>(geom: &SlotGeometry<T>, k: usize, i: usize, m: usize, packet_len: usize) -> Option<usize> {
    let l = if geom.group_of(m) <= k { Some(i) } else { i.checked_sub(1) };
    l.filter(|&l| l < packet_len)
}

/// Builds `D`: each sub-interval sample sees exactly one symbol per device,
/// weighted by the sub-interval average of `h' e^{j cfo t}`.
pub fn coeff_matrix_whitened<T: Real>(geom: &SlotGeometry<T>, packet_len: usize) -> CoefficientMatrixD<T> {
    assert!(packet_len >= 1, "packet length must be >= 1");
    let (m_dev, groups) = (geom.devices(), geom.groups());
    let nrows = whitened_len(groups, packet_len);
    let mut rows = Vec::with_capacity(nrows);
    for r in 0..nrows {
        let (k, i) = (r % groups, r / groups);
        let start = from_usize::<T>(i) + geom.boundary(k);
        let d = geom.sub_length(k);
        let mut row = Vec::with_capacity(m_dev);
        for (m, p) in geom.profiles().iter().enumerate() {
            if let Some(l) = window_symbol(geom, k, i, m, packet_len) {
                let g = if p.cfo == T::zero() { p.gain() } else { segment_coefficient(p.gain(), p.cfo, start, start + d) / d };
                row.push((l * m_dev + m, g));
            }
        }
        row.sort_by_key(|&(c, _)| c);
        rows.push(row);
    }
    CoefficientMatrixD { devices: m_dev, groups, packet_len, matrix: SparseRows::new(m_dev * packet_len, rows) }
}

impl<T: Real> CoefficientMatrixD<T> {
    pub fn matrix(&self) -> &SparseRows<T> {
        &self.matrix
    }

    pub fn to_dense(&self) -> DMatrix<Complex<T>> {
        self.matrix.to_dense()
    }

    pub fn packet_len(&self) -> usize {
        self.packet_len
    }

    pub fn devices(&self) -> usize {
        self.devices
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    /// `(filter k, period i)` of whitened row `r`.
    pub fn row_label(&self, r: usize) -> (usize, usize) {
        (r % self.groups, r / self.groups)
    }

    pub fn row_index(&self, k: usize, i: usize) -> usize {
        i * self.groups + k
    }

    /// Coefficient of device `m` in whitened row `r`, zero for padding.
    pub fn device_coefficient(&self, r: usize, m: usize) -> Complex<T> {
        self.matrix
            .row(r)
            .iter()
            .find(|&&(c, _)| c % self.devices == m)
            .map(|&(_, v)| v)
            .unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }
}

/// The `L x (M L)` block matrix with one all-ones `1 x M` block per row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SummationMatrix {
    devices: usize,
    packet_len: usize,
}

pub fn summation_matrix(devices: usize, packet_len: usize) -> SummationMatrix {
    assert!(devices >= 1 && packet_len >= 1, "summation matrix needs M >= 1 and L >= 1");
    SummationMatrix { devices, packet_len }
}

impl SummationMatrix {
    pub fn shape(&self) -> (usize, usize) {
        (self.packet_len, self.devices * self.packet_len)
    }

    pub fn to_dense<T: Real>(&self) -> DMatrix<T> {
        let (rows, cols) = self.shape();
        DMatrix::from_fn(rows, cols, |r, c| if c / self.devices == r { T::one() } else { T::zero() })
    }

    /// `V s`: sums each consecutive block of `M` entries.
    pub fn apply<T: Real>(&self, s: &DVector<Complex<T>>) -> DVector<Complex<T>> {
        assert_eq!(s.len(), self.devices * self.packet_len, "SummationMatrix::apply: length mismatch");
        DVector::from_iterator(
            self.packet_len,
            s.as_slice().chunks(self.devices).map(|block| block.iter().fold(Complex::new(T::zero(), T::zero()), |a, &b| a + b)),
        )
    }
}
