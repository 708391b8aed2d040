//! Verification laboratory for solution counts of random regular k-SAT.
//!
//! A regular instance on n variables has every variable appearing exactly d
//! times positively and d times negatively across m = 2dn/k clauses of width
//! k. The crate provides, at desk scale:
//!
//! - closed-form evaluation of the tilt equation, cycle rates, moment
//!   formulas and the overlap exponent landscape ([`analytic`]);
//! - samplers for the uniform slot-bijection model, the planted
//!   formula/assignment pair and permutation-coupled pattern arrays, plus
//!   JSON and DIMACS codecs ([`model`]);
//! - exact solution counting by Gray-code enumeration, the clause-pattern
//!   decomposition of Z and the pair-overlap census ([`counting`]);
//! - an exact census of short signed cycles in the factor graph together
//!   with an independent brute-force oracle ([`cycles`]);
//! - the estimators and distributional tests used by the experiment
//!   harness, and the sampler of the Poisson-product limit variable
//!   ([`stats`]).

pub mod analytic;
pub mod counting;
pub mod cycles;
pub mod error;
pub mod model;
pub mod numerics;
pub mod params;
pub mod stats;

pub use analytic::{RateTable, SignPattern};
pub use counting::{CountOptions, CountResult, OverlapCensus, PatternHistogram};
pub use cycles::CycleCensus;
pub use error::{Error, Result};
pub use model::{Assignment, Formula, PairedPatternArray, PatternCounts, Slot};
pub use params::ModelParams;
