use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::scalar::Real;

/// The `M x L` transmit symbols of one packet and their per-index sum `s_+`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlock<T: Real> {
    symbols: DMatrix<Complex<T>>,
    target_sum: DVector<Complex<T>>,
}

impl<T: Real> SymbolBlock<T> {
    /// Rows are devices in sorted (arrival) order, columns are symbol indexes.
    pub fn new(symbols: DMatrix<Complex<T>>) -> Self {
        let target_sum = DVector::from_iterator(
            symbols.ncols(),
            symbols.column_iter().map(|col| col.iter().fold(Complex::new(T::zero(), T::zero()), |a, &b| a + b)),
        );
        Self { symbols, target_sum }
    }

    /// Builds a block from per-device rows.
    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Self {
        let len = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == len), "SymbolBlock::from_rows: ragged rows");
        Self::new(DMatrix::from_fn(rows.len(), len, |m, i| rows[m][i]))
    }

    pub fn devices(&self) -> usize {
        self.symbols.nrows()
    }

    pub fn packet_len(&self) -> usize {
        self.symbols.ncols()
    }

    pub fn symbols(&self) -> &DMatrix<Complex<T>> {
        &self.symbols
    }

    pub fn symbol(&self, m: usize, i: usize) -> Complex<T> {
        self.symbols[(m, i)]
    }

    pub fn target_sum(&self) -> &DVector<Complex<T>> {
        &self.target_sum
    }

    /// Stacked symbol vector `s` with `s_m[l]` at position `l * M + m`.
    pub fn stacked(&self) -> DVector<Complex<T>> {
        // Column-major storage of the M x L matrix is exactly this layout.
        DVector::from_column_slice(self.symbols.as_slice())
    }

    /// Reorders device rows: row `m` of the result is row `order[m]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.devices(), "SymbolBlock::permuted: order length");
        Self::new(DMatrix::from_fn(self.devices(), self.packet_len(), |m, i| self.symbols[(order[m], i)]))
    }
}
