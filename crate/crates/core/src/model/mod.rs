//! Signal model: slot geometry, coefficient matrices, noise statistics and
//! EsN0 calibration.

mod calibration;
mod coeff;
mod geometry;
mod noise_cov;

pub use calibration::calibrate_n0;
pub use coeff::{
    coeff_matrix_standard, coeff_matrix_whitened, segment_coefficient, summation_matrix, whitened_len, window_symbol, CoefficientMatrixA,
    CoefficientMatrixD, SparseRows, SummationMatrix, CFO_SERIES_THRESHOLD,
};
pub use geometry::{validate_geometry, DeviceProfile, SlotGeometry};
pub use noise_cov::{colored_noise_covariance, whitened_noise_variances};
