//! Random model samplers, the formula representation and its codecs.

pub mod codec;
mod formula;
pub mod rng;
mod sample;

pub use formula::{Assignment, Formula, Slot};
pub use sample::{
    round_bar_mu, sample_assignment, sample_clause_index, sample_formula, sample_paired_patterns,
    sample_planted, PairedPatternArray, PatternCounts, PLANTED_RETRY_CAP,
};
