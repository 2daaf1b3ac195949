//! The annotation store.
//!
//! Annotations reference sources only through anchors. Nothing here needs a
//! work to be loaded except the freeze operations, which read one.

mod model;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use model::{
    meta, Annotation, AnnotationDraft, AnnotationId, Body, FeatureBody, Kind, KeywordBody,
    Metadata, QueryBody, Target, TopicBody, TopicWord, WEIGHT_TOLERANCE,
};

use crate::anchor::Anchor;
use crate::clock::Clock;
use crate::features::Featured;
use crate::tql::{self, Query, TqlError};

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("one or more targets required")]
    NoTargets,
    #[error("invalid target {0}")]
    InvalidTarget(String),
    #[error(transparent)]
    Query(#[from] TqlError),
    #[error("empty result; nothing to freeze")]
    EmptyResult,
    #[error("no object carries {key}={value}; nothing to freeze")]
    EmptyExtension { key: String, value: String },
    #[error("invalid topic: {0}")]
    InvalidTopic(String),
    #[error("unknown annotation kind {0:?}")]
    UnknownKind(String),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Exact,
    Ancestors,
    Descendants,
    All,
}

impl FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Scope::Exact),
            "ancestors" => Ok(Scope::Ancestors),
            "descendants" => Ok(Scope::Descendants),
            "all" => Ok(Scope::All),
            other => Err(format!("unknown scope {other:?}")),
        }
    }
}

/// Conjunctive annotation filter; empty criteria match everything.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Filter {
    pub kind: Option<Kind>,
    pub body_contains: Option<String>,
    pub work: Option<String>,
    pub metadata: Vec<(String, String)>,
}

impl Filter {
    pub fn matches(&self, a: &Annotation) -> bool {
        self.kind.map_or(true, |k| a.kind() == k)
            && self
                .body_contains
                .as_ref()
                .map_or(true, |s| a.body.to_string().contains(s.as_str()))
            && self
                .work
                .as_ref()
                .map_or(true, |w| a.targets.iter().any(|t| t.work() == Some(w)))
            && self
                .metadata
                .iter()
                .all(|(k, v)| a.metadata.get(k) == Some(v))
    }
}

fn dedup_in_order(targets: Vec<Target>) -> Vec<Target> {
    let mut seen = BTreeSet::new();
    targets
        .into_iter()
        .filter(|t| seen.insert(t.clone()))
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct AnnotationStore {
    annotations: BTreeMap<AnnotationId, Annotation>,
    by_target: HashMap<Target, BTreeSet<AnnotationId>>,
    next_id: u64,
}

impl AnnotationStore {
    pub fn new() -> Self {
        AnnotationStore {
            next_id: 1,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.annotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.annotations.is_empty()
    }

    pub fn get(&self, id: &AnnotationId) -> Option<&Annotation> {
        self.annotations.get(id)
    }

    /// All annotations ordered by id.
    pub fn iter(&self) -> impl Iterator<Item = &Annotation> {
        self.annotations.values()
    }

    /// The id the next added annotation will receive.
    pub fn peek_next_id(&self) -> AnnotationId {
        AnnotationId(self.next_id.max(1).to_string())
    }

    /// Validate a draft and store it under a fresh id.
    pub fn add(&mut self, mut draft: AnnotationDraft) -> Result<Annotation, AnnotationError> {
        draft.targets = dedup_in_order(draft.targets);
        let annotation = draft.with_id(self.peek_next_id());
        self.insert(annotation.clone())?;
        Ok(annotation)
    }

    /// Store an annotation under its own id, replacing any previous one.
    pub fn insert(&mut self, annotation: Annotation) -> Result<(), AnnotationError> {
        annotation.validate()?;
        if let Some(n) = annotation.id.number() {
            self.next_id = self.next_id.max(n + 1);
        }
        if let Some(old) = self.annotations.remove(&annotation.id) {
            for t in &old.targets {
                if let Some(ids) = self.by_target.get_mut(t) {
                    ids.remove(&old.id);
                }
            }
        }
        for t in &annotation.targets {
            self.by_target
                .entry(t.clone())
                .or_default()
                .insert(annotation.id.clone());
        }
        self.annotations.insert(annotation.id.clone(), annotation);
        Ok(())
    }

    /// Run a query and freeze its result: every bound object of every match
    /// becomes a target, deduplicated, in document order.
    pub fn freeze_query(
        &mut self,
        featured: &Featured<'_>,
        text: &str,
        metadata: Metadata,
        clock: &dyn Clock,
    ) -> Result<Annotation, AnnotationError> {
        let draft = freeze_query_draft(featured, text, metadata, clock)?;
        self.add(draft)
    }

    pub fn freeze_feature(
        &mut self,
        featured: &Featured<'_>,
        key: &str,
        value: &str,
        metadata: Metadata,
    ) -> Result<Annotation, AnnotationError> {
        let targets: Vec<Target> = featured
            .objects_with_feature(key, value)
            .into_iter()
            .map(Target::Anchor)
            .collect();
        if targets.is_empty() {
            return Err(AnnotationError::EmptyExtension {
                key: key.to_string(),
                value: value.to_string(),
            });
        }
        let body = Body::Feature(FeatureBody {
            key: key.to_string(),
            value: value.to_string(),
        });
        self.add(AnnotationDraft::new(body, targets, metadata))
    }

    pub fn assign_keyword(
        &mut self,
        keyword: &str,
        targets: Vec<Anchor>,
        metadata: Metadata,
    ) -> Result<Annotation, AnnotationError> {
        let body = Body::Keyword(KeywordBody {
            keyword: keyword.to_string(),
        });
        let targets = targets.into_iter().map(Target::Anchor).collect();
        self.add(AnnotationDraft::new(body, targets, metadata))
    }

    /// One annotation per (topic, target) assignment.
    pub fn assign_topic(
        &mut self,
        topic: TopicBody,
        target: Anchor,
        metadata: Metadata,
    ) -> Result<Annotation, AnnotationError> {
        topic.validate()?;
        self.add(AnnotationDraft::new(
            Body::Topic(topic),
            vec![Target::Anchor(target)],
            metadata,
        ))
    }

    /// Reverse lookup from a passage to the annotations on it, ordered by
    /// kind then id.
    pub fn targeting(&self, anchor: &Anchor, scope: Scope) -> Vec<&Annotation> {
        let mut ids: BTreeSet<&AnnotationId> = BTreeSet::new();
        let mut exact = vec![anchor.clone()];
        if matches!(scope, Scope::Ancestors | Scope::All) {
            exact.extend(anchor.ancestors());
        }
        for a in exact {
            if let Some(found) = self.by_target.get(&Target::Anchor(a)) {
                ids.extend(found.iter());
            }
        }
        if matches!(scope, Scope::Descendants | Scope::All) {
            for (target, found) in &self.by_target {
                if target.anchor().is_some_and(|t| anchor.is_ancestor_of(t)) {
                    ids.extend(found.iter());
                }
            }
        }
        let mut out: Vec<&Annotation> = ids.into_iter().map(|id| &self.annotations[id]).collect();
        out.sort_by(|a, b| a.kind().cmp(&b.kind()).then_with(|| a.id.cmp(&b.id)));
        out
    }

    pub fn filter(&self, filter: &Filter) -> Vec<&Annotation> {
        self.iter().filter(|a| filter.matches(a)).collect()
    }

    /// One JSON record per line, ordered by id.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for a in self.iter() {
            out.push_str(&serde_json::to_string(a).expect("annotations always serialize"));
            out.push('\n');
        }
        out
    }

    /// Parse JSON lines and insert every record; ids already present are
    /// replaced. Nothing is inserted if any line is malformed.
    pub fn load_jsonl(&mut self, text: &str) -> Result<usize, AnnotationError> {
        let mut parsed = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let malformed = |message: String| AnnotationError::Malformed {
                line: i + 1,
                message,
            };
            let a: Annotation =
                serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
            a.validate().map_err(|e| malformed(e.to_string()))?;
            parsed.push(a);
        }
        let count = parsed.len();
        for a in parsed {
            self.insert(a)?;
        }
        Ok(count)
    }

    pub fn save(&self, path: &Path) -> Result<(), AnnotationError> {
        write_atomically(path, self.to_jsonl().as_bytes()).map_err(|source| AnnotationError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(&mut self, path: &Path) -> Result<usize, AnnotationError> {
        let text = fs::read_to_string(path).map_err(|source| AnnotationError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.load_jsonl(&text)
    }
}

/// Build (without storing) the annotation that freezes a query's result.
pub fn freeze_query_draft(
    featured: &Featured<'_>,
    text: &str,
    mut metadata: Metadata,
    clock: &dyn Clock,
) -> Result<AnnotationDraft, AnnotationError> {
    let query = Query::parse(text)?;
    let result = tql::run_query(featured, &query, usize::MAX)?;
    if result.matches.is_empty() {
        return Err(AnnotationError::EmptyResult);
    }
    let nodes: BTreeSet<_> = result
        .matches
        .iter()
        .flat_map(|m| m.bindings.iter().map(|b| b.node))
        .collect();
    let targets = nodes
        .into_iter()
        .map(|id| Target::Anchor(featured.work.object(id).anchor().clone()))
        .collect();
    metadata.insert(meta::LAST_RUN.to_string(), clock.timestamp());
    let body = Body::Query(QueryBody {
        language: tql::LANGUAGE.to_string(),
        text: text.to_string(),
        result_count: result.matches.len(),
    });
    Ok(AnnotationDraft::new(body, targets, metadata))
}

pub fn write_atomically(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}
