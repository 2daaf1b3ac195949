//! Carrying annotations from one incarnation of a work to another.
//!
//! The two works are aligned leaf by leaf ([`align_works`]), then each
//! annotation target is remapped through the alignment ([`port_annotation`]).

mod align;
mod normalize;

use std::collections::BTreeSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anchor::Anchor;
use crate::annotations::{meta, Annotation, AnnotationDraft, AnnotationId, Target};
use crate::corpus::{CorpusError, NodeId, Work};

pub use align::{
    align_tokens, Move, MoveKind, TokenAlignment, COST_EQUAL, COST_GAP, COST_GROUP,
    COST_MODIFIED, DEFAULT_MAX_GROUP,
};
pub use normalize::{normalize_token, NormalizationRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    OneOne,
    Merge,
    Split,
    Modified,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub source: Vec<Anchor>,
    pub dest: Vec<Anchor>,
    pub kind: LinkKind,
}

/// A leaf-level alignment between two works.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Alignment {
    pub source_work: String,
    pub dest_work: String,
    pub rules: Vec<NormalizationRule>,
    pub cost: u32,
    pub links: Vec<Link>,
    pub unmatched_source: Vec<Anchor>,
    pub unmatched_dest: Vec<Anchor>,
    /// For each source leaf position, the index of its link.
    #[serde(skip)]
    source_link: Vec<Option<usize>>,
    /// Dest leaf positions of each link.
    #[serde(skip)]
    link_dest: Vec<Range<usize>>,
}

impl Alignment {
    pub fn link_of_source_leaf(&self, position: usize) -> Option<&Link> {
        self.source_link
            .get(position)
            .copied()
            .flatten()
            .map(|i| &self.links[i])
    }

    pub fn count(&self, kind: LinkKind) -> usize {
        self.links.iter().filter(|l| l.kind == kind).count()
    }
}

fn leaf_anchors(work: &Work, range: Range<usize>) -> Vec<Anchor> {
    work.leaves()[range]
        .iter()
        .map(|&id| work.object(id).anchor().clone())
        .collect()
}

fn normalized_leaves(work: &Work, rules: &[NormalizationRule]) -> Vec<String> {
    work.leaves()
        .iter()
        .map(|&id| normalize_token(work.object(id).token().unwrap_or(""), rules))
        .collect()
}

pub fn align_works(
    source: &Work,
    dest: &Work,
    rules: &[NormalizationRule],
    max_group: usize,
) -> Alignment {
    let tokens = align_tokens(
        &normalized_leaves(source, rules),
        &normalized_leaves(dest, rules),
        max_group,
    );
    let mut alignment = Alignment {
        source_work: source.id().to_string(),
        dest_work: dest.id().to_string(),
        rules: rules.to_vec(),
        cost: tokens.cost,
        links: Vec::new(),
        unmatched_source: Vec::new(),
        unmatched_dest: Vec::new(),
        source_link: vec![None; source.leaf_count()],
        link_dest: Vec::new(),
    };
    for mv in tokens.moves {
        let kind = match mv.kind {
            MoveKind::OneOne => LinkKind::OneOne,
            MoveKind::Merge => LinkKind::Merge,
            MoveKind::Split => LinkKind::Split,
            MoveKind::Modified => LinkKind::Modified,
            MoveKind::GapSource => {
                alignment
                    .unmatched_source
                    .extend(leaf_anchors(source, mv.source));
                continue;
            }
            MoveKind::GapDest => {
                alignment.unmatched_dest.extend(leaf_anchors(dest, mv.dest));
                continue;
            }
        };
        let index = alignment.links.len();
        for p in mv.source.clone() {
            alignment.source_link[p] = Some(index);
        }
        alignment.links.push(Link {
            source: leaf_anchors(source, mv.source),
            dest: leaf_anchors(dest, mv.dest.clone()),
            kind,
        });
        alignment.link_dest.push(mv.dest);
    }
    alignment
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PortStatus {
    Exact,
    Split,
    Merged,
    Modified,
    Unmatched,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortOutcome {
    pub original: Target,
    pub ported: Option<Anchor>,
    pub status: PortStatus,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortSummary {
    pub exact: usize,
    pub merged: usize,
    pub split: usize,
    pub modified: usize,
    pub unmatched: usize,
}

impl PortSummary {
    fn record(&mut self, status: PortStatus) {
        match status {
            PortStatus::Exact => self.exact += 1,
            PortStatus::Merged => self.merged += 1,
            PortStatus::Split => self.split += 1,
            PortStatus::Modified => self.modified += 1,
            PortStatus::Unmatched => self.unmatched += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortReport {
    pub annotation: AnnotationId,
    pub summary: PortSummary,
    pub outcomes: Vec<PortOutcome>,
    /// True when every target was unmatched and no annotation was produced.
    pub dropped: bool,
}

#[derive(Debug, Error)]
pub enum PortError {
    #[error("alignment is {found} -> {dest}, not {expected} -> {dest_given}")]
    AlignmentMismatch {
        expected: String,
        dest_given: String,
        found: String,
        dest: String,
    },
    #[error("target {target} is not in source work {work}")]
    ForeignTarget { target: String, work: String },
    #[error("target {target}: {source}")]
    Unresolved {
        target: String,
        #[source]
        source: CorpusError,
    },
}

/// Remap every target of `ann` through `alignment`.
///
/// Returns the ported draft (none when all targets drop) and the report.
/// Draft targets are the surviving ported anchors, deduplicated, in the
/// dest work's document order.
pub fn port_annotation(
    ann: &Annotation,
    source: &Work,
    dest: &Work,
    alignment: &Alignment,
) -> Result<(Option<AnnotationDraft>, PortReport), PortError> {
    if alignment.source_work != source.id() || alignment.dest_work != dest.id() {
        return Err(PortError::AlignmentMismatch {
            expected: source.id().to_string(),
            dest_given: dest.id().to_string(),
            found: alignment.source_work.clone(),
            dest: alignment.dest_work.clone(),
        });
    }
    let mut summary = PortSummary::default();
    let mut outcomes = Vec::with_capacity(ann.targets.len());
    let mut ported: BTreeSet<NodeId> = BTreeSet::new();
    for target in &ann.targets {
        let anchor = match target {
            Target::Anchor(a) if a.work() == source.id() => a,
            other => {
                return Err(PortError::ForeignTarget {
                    target: other.to_string(),
                    work: source.id().to_string(),
                })
            }
        };
        let id = source
            .node_id(anchor)
            .map_err(|e| PortError::Unresolved {
                target: anchor.to_string(),
                source: e,
            })?;
        let span = source.object(id).span();
        let (node, status) = port_span(span.first..span.last + 1, dest, alignment);
        let node = node.map(|n| match_chain(source, id, dest, n));
        summary.record(status);
        if let Some(node) = node {
            ported.insert(node);
        }
        outcomes.push(PortOutcome {
            original: target.clone(),
            ported: node.map(|n| dest.object(n).anchor().clone()),
            status,
        });
    }
    let dropped = ported.is_empty();
    let draft = (!dropped).then(|| {
        let mut metadata = ann.metadata.clone();
        metadata.insert(meta::PORTED_FROM.to_string(), source.id().to_string());
        AnnotationDraft::new(
            ann.body.clone(),
            ported
                .into_iter()
                .map(|n| Target::Anchor(dest.object(n).anchor().clone()))
                .collect(),
            metadata,
        )
    });
    let report = PortReport {
        annotation: ann.id.clone(),
        summary,
        outcomes,
        dropped,
    };
    Ok((draft, report))
}

fn port_span(leaves: Range<usize>, dest: &Work, alignment: &Alignment) -> (Option<NodeId>, PortStatus) {
    let mut status = PortStatus::Exact;
    let mut links = BTreeSet::new();
    for p in leaves {
        match alignment.source_link.get(p).copied().flatten() {
            Some(i) => {
                links.insert(i);
            }
            None => return (None, PortStatus::Unmatched),
        }
    }
    let mut first = usize::MAX;
    let mut last = 0;
    for &i in &links {
        let s = match alignment.links[i].kind {
            LinkKind::OneOne => PortStatus::Exact,
            LinkKind::Merge => PortStatus::Merged,
            LinkKind::Split => PortStatus::Split,
            LinkKind::Modified => PortStatus::Modified,
        };
        status = status.max(s);
        let range = &alignment.link_dest[i];
        first = first.min(range.start);
        last = last.max(range.end - 1);
    }
    (Some(dest.smallest_cover(first, last)), status)
}

/// Objects in a unary chain share one span, so the cover alone cannot tell
/// a chapter from its only verse. Walk up the chain and prefer the member
/// with the source object's type, then its depth, else the deepest.
fn match_chain(source: &Work, id: NodeId, dest: &Work, cover: NodeId) -> NodeId {
    let wanted = source.object(id);
    let wanted_type = &source.types()[wanted.type_rank()];
    let mut chain = vec![cover];
    let mut current = cover;
    while let Some(p) = dest.object(current).parent() {
        if dest.object(p).span() != dest.object(cover).span() {
            break;
        }
        chain.push(p);
        current = p;
    }
    let type_of = |n: NodeId| &dest.types()[dest.object(n).type_rank()];
    chain
        .iter()
        .copied()
        .find(|&n| type_of(n) == wanted_type)
        .or_else(|| chain.iter().copied().find(|&n| dest.object(n).depth() == wanted.depth()))
        .unwrap_or(cover)
}
