//! The four arithmetic-sum estimators behind one interface.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use num_complex::Complex;

use crate::chain::{forward_backward, sum_marginal};
use crate::channel::{draw_whitened_noise, synthesize_standard, synthesize_wmfs, SampleStream, StreamKind, SymbolBlock, WhitenedNoise};
use crate::error::{Error, Result};
use crate::model::{
    coeff_matrix_standard, coeff_matrix_whitened, summation_matrix, whitened_len, whitened_noise_variances, CoefficientMatrixA,
    CoefficientMatrixD, SlotGeometry, SummationMatrix,
};
use crate::scalar::{to_f64, Real};

/// Largest accepted condition number of a linear model.
pub const MAX_MODEL_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EstimatorId {
    DirectMl,
    WhitenedMl,
    SpMl,
    Aligned,
}

impl EstimatorId {
    pub const ALL: [EstimatorId; 4] = [Self::DirectMl, Self::WhitenedMl, Self::SpMl, Self::Aligned];

    pub fn name(self) -> &'static str {
        match self {
            Self::DirectMl => "direct_ml",
            Self::WhitenedMl => "whitened_ml",
            Self::SpMl => "sp_ml",
            Self::Aligned => "aligned",
        }
    }

    /// Stream kind the estimator consumes.
    pub fn input(self) -> StreamKind {
        match self {
            Self::DirectMl => StreamKind::Standard,
            _ => StreamKind::Whitened,
        }
    }
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown estimator `{s}` (expected direct_ml, whitened_ml, sp_ml or aligned)")))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Marginalizations that needed the relative ridge.
    pub ridge_events: usize,
    /// Marginals solved by pseudo-inverse because only the sum was identifiable.
    pub rank_deficient: usize,
    /// Condition number of the solved system, when one was formed.
    pub condition: Option<f64>,
    /// A noiseless stream was processed at unit noise scale.
    pub unit_noise_scale: bool,
    pub wall_time: Duration,
}

impl Diagnostics {
    /// Compact `;`-separated flag list for result tables; empty when nothing fired.
    pub fn flags(&self) -> String {
        let mut flags = Vec::new();
        if self.ridge_events > 0 {
            flags.push(format!("ridge={}", self.ridge_events));
        }
        if self.rank_deficient > 0 {
            flags.push(format!("rank_deficient={}", self.rank_deficient));
        }
        if self.condition.is_some_and(|c| c > 1e8) {
            flags.push("ill_conditioned".to_string());
        }
        if self.unit_noise_scale {
            flags.push("unit_noise_scale".to_string());
        }
        flags.join(";")
    }

    /// Accumulates another packet's diagnostics: counts and times add, the
    /// worst condition number is kept.
    pub fn merge(&mut self, other: &Diagnostics) {
        self.ridge_events += other.ridge_events;
        self.rank_deficient += other.rank_deficient;
        self.condition = match (self.condition, other.condition) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        self.unit_noise_scale |= other.unit_noise_scale;
        self.wall_time += other.wall_time;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport<T: Real> {
    pub estimate: DVector<Complex<T>>,
    pub estimator: EstimatorId,
    pub diagnostics: Diagnostics,
}

fn condition<T: Real>(singular_values: &DVector<T>) -> f64 {
    let (lo, hi) = singular_values.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| {
        let s = to_f64(s);
        (lo.min(s), hi.max(s))
    });
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// `V A^{-1} r` by LU factorization of the square standard model.
pub fn estimate_direct_ml<T: Real>(r: &SampleStream<T>, a: &CoefficientMatrixA<T>, v: &SummationMatrix) -> Result<EstimateReport<T>> {
    let start = Instant::now();
    r.expect_kind(StreamKind::Standard)?;
    if !a.is_square() {
        return Err(Error::SingularModel { condition: f64::INFINITY, reason: "coalesced offsets make the standard model non-square" });
    }
    let dense = a.to_dense();
    if r.len() != dense.nrows() {
        return Err(Error::ShapeMismatch { what: "standard stream", expected: dense.nrows(), found: r.len() });
    }
    let cond = condition(&dense.singular_values());
    if !(cond <= MAX_MODEL_CONDITION) {
        return Err(Error::SingularModel { condition: cond, reason: "standard coefficient matrix" });
    }
    let s = dense.lu().solve(&r.values).ok_or(Error::SingularModel { condition: cond, reason: "standard coefficient matrix" })?;
    Ok(EstimateReport {
        estimate: v.apply(&s),
        estimator: EstimatorId::DirectMl,
        diagnostics: Diagnostics { condition: Some(cond), wall_time: start.elapsed(), ..Default::default() },
    })
}

/// Weighted least squares `V (D^H S^-1 D)^-1 D^H S^-1 y` with the diagonal
/// noise variances `S`, solved by QR of the row-scaled `S^{-1/2} D`.
///
/// An all-zero variance vector (noiseless stream) selects unit weights.
pub fn estimate_whitened_ml<T: Real>(
    y: &SampleStream<T>,
    d: &CoefficientMatrixD<T>,
    variances: &DVector<T>,
    v: &SummationMatrix,
) -> Result<EstimateReport<T>> {
    let start = Instant::now();
    y.expect_kind(StreamKind::Whitened)?;
    let rows = whitened_len(d.groups(), d.packet_len());
    if y.len() != rows {
        return Err(Error::ShapeMismatch { what: "whitened stream", expected: rows, found: y.len() });
    }
    if variances.len() != rows {
        return Err(Error::ShapeMismatch { what: "noise variances", expected: rows, found: variances.len() });
    }
    let zero = T::zero();
    let noiseless = variances.iter().all(|&s| s == zero);
    if !noiseless && variances.iter().any(|&s| !(s > zero)) {
        return Err(Error::InvalidArgument("noise variances must be all positive or all zero".into()));
    }
    let weight = |r: usize| if noiseless { T::one() } else { T::one() / variances[r].sqrt() };

    let mut dw = d.to_dense();
    let mut yw = y.values.clone();
    for r in 0..rows {
        let w = Complex::new(weight(r), zero);
        dw.row_mut(r).scale_mut(w.re);
        yw[r] *= w;
    }
    let qr = dw.qr();
    let rmat = qr.r();
    let cond = condition(&rmat.singular_values());
    if !(cond * cond <= MAX_MODEL_CONDITION) {
        return Err(Error::SingularModel { condition: cond * cond, reason: "whitened normal equations" });
    }
    let qhy = qr.q().adjoint() * yw;
    let s =
        rmat.solve_upper_triangular(&qhy).ok_or(Error::SingularModel { condition: cond * cond, reason: "whitened normal equations" })?;
    Ok(EstimateReport {
        estimate: v.apply(&s),
        estimator: EstimatorId::WhitenedMl,
        diagnostics: Diagnostics { condition: Some(cond * cond), wall_time: start.elapsed(), ..Default::default() },
    })
}

/// Per-index sums of the chain marginal means.
///
/// Every evidence term scales as `1/N0`, so the means do not depend on the
/// noise level; a noiseless stream runs the same pass at unit noise scale.
pub fn estimate_sp_ml<T: Real>(y: &SampleStream<T>, geom: &SlotGeometry<T>, n0: T, d: &CoefficientMatrixD<T>) -> Result<EstimateReport<T>> {
    let start = Instant::now();
    y.expect_kind(StreamKind::Whitened)?;
    let noiseless = n0 == T::zero();
    let out = forward_backward(geom, y, d, if noiseless { T::one() } else { n0 })?;
    let estimate = DVector::from_iterator(out.marginals.len(), out.marginals.iter().map(|m| sum_marginal(m).0));
    Ok(EstimateReport {
        estimate,
        estimator: EstimatorId::SpMl,
        diagnostics: Diagnostics {
            ridge_events: out.ridge_events,
            rank_deficient: out.rank_deficient,
            condition: Some(out.max_condition),
            unit_noise_scale: noiseless,
            wall_time: start.elapsed(),
        },
    })
}

/// Reads the last filter's samples, whose windows hold `s_1[i], ..., s_M[i]`.
pub fn estimate_aligned<T: Real>(y: &SampleStream<T>, geom: &SlotGeometry<T>) -> Result<EstimateReport<T>> {
    let start = Instant::now();
    y.expect_kind(StreamKind::Whitened)?;
    let groups = geom.groups();
    if !(y.len() + 1).is_multiple_of(groups) || y.len() + 1 < 2 * groups {
        return Err(Error::ShapeMismatch { what: "whitened stream", expected: 2 * groups - 1, found: y.len() });
    }
    let packet_len = (y.len() + 1) / groups - 1;
    let estimate = DVector::from_fn(packet_len, |i, _| y.values[i * groups + groups - 1]);
    Ok(EstimateReport {
        estimate,
        estimator: EstimatorId::Aligned,
        diagnostics: Diagnostics { wall_time: start.elapsed(), ..Default::default() },
    })
}

/// Both sample streams of one simulated packet, sharing a noise realization.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotStreams<T: Real> {
    pub standard: SampleStream<T>,
    pub whitened: SampleStream<T>,
}

/// A slot geometry and packet length with the matrices every estimator needs.
#[derive(Debug, Clone)]
pub struct SlotModel<T: Real> {
    pub geometry: SlotGeometry<T>,
    pub a: CoefficientMatrixA<T>,
    pub d: CoefficientMatrixD<T>,
    pub v: SummationMatrix,
}

impl<T: Real> SlotModel<T> {
    pub fn new(geometry: SlotGeometry<T>, packet_len: usize) -> Self {
        let a = coeff_matrix_standard(&geometry, packet_len);
        let d = coeff_matrix_whitened(&geometry, packet_len);
        let v = summation_matrix(geometry.devices(), packet_len);
        Self { geometry, a, d, v }
    }

    pub fn packet_len(&self) -> usize {
        self.d.packet_len()
    }

    /// Synthesizes both streams for `block` (rows in sorted device order).
    pub fn transmit(&self, block: &SymbolBlock<T>, n0: T, seed: u64) -> Result<SlotStreams<T>> {
        let noise = if n0 == T::zero() {
            WhitenedNoise::zero(&self.geometry, self.packet_len())
        } else {
            draw_whitened_noise(&self.geometry, self.packet_len(), n0, seed)?
        };
        Ok(SlotStreams {
            standard: synthesize_standard(block, &self.a, &self.geometry, &noise)?,
            whitened: synthesize_wmfs(block, &self.d, &noise)?,
        })
    }

    pub fn estimate(&self, id: EstimatorId, streams: &SlotStreams<T>, n0: T) -> Result<EstimateReport<T>> {
        match id {
            EstimatorId::DirectMl => estimate_direct_ml(&streams.standard, &self.a, &self.v),
            EstimatorId::WhitenedMl => {
                let variances = whitened_noise_variances(&self.geometry, self.packet_len(), n0);
                estimate_whitened_ml(&streams.whitened, &self.d, &variances, &self.v)
            }
            EstimatorId::SpMl => estimate_sp_ml(&streams.whitened, &self.geometry, n0, &self.d),
            EstimatorId::Aligned => estimate_aligned(&streams.whitened, &self.geometry),
        }
    }
}
