//! Second-order upper bounds on the probability of a union of events.
//!
//! Given the first-order probabilities `P_i = P[C_i]` and the pairwise joint
//! probabilities `P_ij = P[C_i C_j]` of `n` events (typically the minimal cut
//! sets of a coherent system), this crate evaluates a nested family of upper
//! bounds `B_1 >= B_2 >= ... >= B_{n-1}` on `P[C_1 ∪ ... ∪ C_n]`. Level 1 is the
//! classical Kounias / Hunter / Ditlevsen bound; each higher level deducts a
//! sharper lower bound on the overlap of a new event with its predecessors.
//!
//! Modules:
//! - [`matrix`]: the probability matrix, orderings, validation and generators.
//! - [`bound`]: level-m bound evaluation.
//! - [`conditions`]: sufficient conditions for strict improvement between levels.
//! - [`search`]: exhaustive search over orderings and per-level statistics.
//! - [`oracle`]: exact finite probability models used as ground truth.
//! - [`experiments`]: seeded Monte Carlo studies of improvement probabilities.
//! - [`reference`]: published reference matrices used in tests and examples.

pub mod bound;
pub mod conditions;
mod error;
pub mod experiments;
pub mod matrix;
pub mod oracle;
pub mod reference;
mod rng;
pub mod search;

pub use bound::{bound, bound_all_levels, line_deduction, max_level, LevelBounds};
pub use conditions::{
    condition1, condition2_any, condition2_at, condition2_terms, count_orderings_condition1, ConditionWitness,
};
pub use error::{Error, Result};
pub use matrix::{
    generate_conditional_uniform, generate_delta, reorder, DeltaModel, MatrixDocument, Ordering, ProbabilityMatrix,
    ValidationReport, Violation,
};
pub use oracle::AtomSystem;
pub use rng::draw_rng;
pub use search::{
    exhaustive_search, greedy_ordering, optimal_bound, summary_stats, BoundTable, SearchConfig, SearchSummary, Stats,
    Tolerance,
};
