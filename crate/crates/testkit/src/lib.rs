//! Random corpora and brute-force oracles.
//!
//! Nothing here depends on `workanno-core`: trees, anchors, spans, query
//! semantics and alignment costs are recomputed from scratch so tests can
//! compare the library against an independent derivation.

pub mod align;
pub mod query;
pub mod tree;

pub use align::exhaustive_min_cost;
pub use query::{naive_matches, random_query, FeatureTable, QBlock};
pub use tree::{random_work, TestObject, TestWork};
