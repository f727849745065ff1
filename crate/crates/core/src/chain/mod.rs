//! Gaussian message algebra and the linear-time forward-backward pass that
//! yields per-index marginal likelihoods of the transmitted symbols.

mod message;
mod pass;

pub use message::{evidence_message, window_coords, Coord, GaussianMessage, Part, RIDGE_RELATIVE};
pub use pass::{forward_backward, sum_marginal, ChainOutput, SymbolMarginal, MAX_CONDITION};
