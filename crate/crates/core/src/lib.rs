//! Portable, work-level anchored annotations over hierarchical text corpora.
//!
//! Sources ([`corpus`], [`features`], [`sources`]) and annotations
//! ([`annotations`]) live in separate stores connected only by
//! [`anchor::Anchor`] strings. [`tql`] evaluates structural queries whose
//! results can be frozen into annotations, [`porter`] carries annotations
//! across variant editions of a work, and [`linked`] exchanges annotation
//! sets as N-Triples.

pub mod anchor;
pub mod annotations;
pub mod clock;
pub mod corpus;
pub mod features;
pub mod linked;
pub mod porter;
pub mod sources;
pub mod tql;

pub use anchor::{Anchor, AnchorError, Step};
pub use annotations::{Annotation, AnnotationId, AnnotationStore, Body, Kind, Target};
pub use corpus::{CorpusError, NodeId, Span, TextObject, Work};
pub use features::{FeatureIndex, Featured};
pub use sources::SourceStore;
