//! Random restrictions, canonical decision trees and the switching-lemma
//! encoding, plus the oracle construction built on top of them.

pub mod encoding;
pub mod experiments;
pub mod formula;
pub mod growth;
pub mod oracle;
pub mod restriction;
pub mod rng;
pub mod scalar;
pub mod suites;
pub mod schema;
pub mod tree;

pub use formula::{BlockId, Conjunction, Dnf, Form, Literal, Sign, VarId, VarSpace, Word};
pub use restriction::{BlockLayout, BlockState, Polarity, Restriction, RestrictionEvent, StarRate, VarState};
pub use rng::SeedStream;
pub use scalar::Probability;

/// Exact rational probabilities.
pub type ExactProb = num_rational::BigRational;
/// Floating-point probabilities.
pub type FloatProb = f64;
