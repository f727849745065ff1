//! Seeded noise generation and synthesis of the standard and whitened sample
//! streams from one shared noise realization.

mod noise;
mod symbols;
mod synth;

pub use noise::{draw_whitened_noise, WhitenedNoise};
pub use symbols::SymbolBlock;
pub use synth::{synthesize_standard, synthesize_wmfs, SampleStream, StreamKind};
