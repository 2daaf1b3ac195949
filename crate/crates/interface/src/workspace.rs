//! Store directory plus the operations shared by the CLI and the service.
//!
//! Layout under the store root:
//!
//! ```text
//! works/{work}.json      interchange documents, canonical form
//! features/{work}.tsv    feature tables, canonical row order
//! annotations.jsonl      the annotation store
//! ```
//!
//! Every mutation rewrites the files it touches, so a CLI invocation and a
//! service request performing the same operation leave identical bytes.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use workanno_core::anchor::encode_segment;
use workanno_core::annotations::{write_atomically, Filter, Metadata, Scope, TopicBody, TopicWord};
use workanno_core::clock::Clock;
use workanno_core::linked;
use workanno_core::porter::{self, LinkKind, NormalizationRule, PortReport};
use workanno_core::tql::{self, Query, QueryResult};
use workanno_core::{Anchor, Annotation, AnnotationId, AnnotationStore, SourceStore, Target};

use crate::error::ApiError;

pub const WORKS_DIR: &str = "works";
pub const FEATURES_DIR: &str = "features";
pub const ANNOTATIONS_FILE: &str = "annotations.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IngestSummary {
    pub work: String,
    pub leaves: usize,
    pub objects: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FeatureSummary {
    pub work: String,
    pub assignments: usize,
}

/// A topic as supplied by the user: the body without its confidence.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopicSpec {
    pub topic_id: String,
    pub label: String,
    pub words: Vec<TopicWord>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LinkCounts {
    pub one_one: usize,
    pub merge: usize,
    pub split: usize,
    pub modified: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PortedAnnotation {
    /// Id of the new annotation, absent when every target dropped.
    pub ported_id: Option<AnnotationId>,
    #[serde(flatten)]
    pub report: PortReport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PortOutput {
    pub source: String,
    pub dest: String,
    pub cost: u32,
    pub links: LinkCounts,
    pub unmatched_source: usize,
    pub unmatched_dest: usize,
    pub results: Vec<PortedAnnotation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Remapped {
    pub foreign: String,
    pub local: AnnotationId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OpaqueTargets {
    pub annotation: AnnotationId,
    pub targets: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImportSummary {
    pub imported: Vec<Remapped>,
    pub opaque: Vec<OpaqueTargets>,
}

pub struct Workspace {
    dir: Option<PathBuf>,
    pub sources: SourceStore,
    pub annotations: AnnotationStore,
    clock: Arc<dyn Clock>,
}

fn read(path: &Path) -> Result<String, ApiError> {
    fs::read_to_string(path).map_err(|e| ApiError::io(path.display(), e))
}

fn sorted_files(dir: &Path, extension: &str) -> Result<Vec<PathBuf>, ApiError> {
    let entries = match fs::read_dir(dir) {
        Ok(entries) => entries,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(ApiError::io(dir.display(), e)),
    };
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| ApiError::io(dir.display(), e))?.path();
        if path.extension().and_then(|x| x.to_str()) == Some(extension) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

impl Workspace {
    /// A workspace with no backing directory; nothing is persisted.
    pub fn in_memory(clock: Arc<dyn Clock>) -> Self {
        Workspace {
            dir: None,
            sources: SourceStore::new(),
            annotations: AnnotationStore::new(),
            clock,
        }
    }

    /// Load a store directory. A missing directory is an empty store.
    ///
    /// Annotations load independently of the works: a store whose work
    /// files are gone still serves its annotations.
    pub fn open(dir: &Path, clock: Arc<dyn Clock>) -> Result<Self, ApiError> {
        let mut ws = Workspace::in_memory(clock);
        ws.dir = Some(dir.to_path_buf());
        for path in sorted_files(&dir.join(WORKS_DIR), "json")? {
            let entry = ws
                .sources
                .ingest(&read(&path)?)
                .map_err(|e| ApiError::new(500, "store_corrupt", format!("{}: {e}", path.display())))?;
            let table = ws.features_path(entry.work.id());
            if let Some(table) = table.filter(|p| p.exists()) {
                ws.sources
                    .load_features(entry.work.id(), &read(&table)?)
                    .map_err(|e| ApiError::new(500, "store_corrupt", format!("{}: {e}", table.display())))?;
            }
        }
        let annotations = dir.join(ANNOTATIONS_FILE);
        if annotations.exists() {
            ws.annotations.load(&annotations)?;
        }
        Ok(ws)
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn clock(&self) -> &dyn Clock {
        self.clock.as_ref()
    }

    fn file(&self, sub: &str, work: &str, extension: &str) -> Option<PathBuf> {
        self.dir
            .as_ref()
            .map(|d| d.join(sub).join(format!("{}.{extension}", encode_segment(work))))
    }

    fn features_path(&self, work: &str) -> Option<PathBuf> {
        self.file(FEATURES_DIR, work, "tsv")
    }

    fn write(path: &Path, bytes: &[u8]) -> Result<(), ApiError> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| ApiError::io(parent.display(), e))?;
        }
        write_atomically(path, bytes).map_err(|e| ApiError::io(path.display(), e))
    }

    fn save_annotations(&self) -> Result<(), ApiError> {
        if let Some(dir) = &self.dir {
            Self::write(&dir.join(ANNOTATIONS_FILE), self.annotations.to_jsonl().as_bytes())?;
        }
        Ok(())
    }

    fn add_all(&mut self, drafts: Vec<workanno_core::annotations::AnnotationDraft>) -> Result<Vec<Annotation>, ApiError> {
        let mut staged = self.annotations.clone();
        let mut added = Vec::with_capacity(drafts.len());
        for d in drafts {
            added.push(staged.add(d)?);
        }
        self.annotations = staged;
        self.save_annotations()?;
        Ok(added)
    }

    pub fn ingest(&mut self, document: &str) -> Result<IngestSummary, ApiError> {
        let work = workanno_core::Work::from_document(document)?;
        if let Some(path) = self.file(WORKS_DIR, work.id(), "json") {
            Self::write(&path, work.to_document().as_bytes())?;
        }
        if let Some(path) = self.features_path(work.id()).filter(|p| p.exists()) {
            fs::remove_file(&path).map_err(|e| ApiError::io(path.display(), e))?;
        }
        let summary = IngestSummary {
            work: work.id().to_string(),
            leaves: work.leaf_count(),
            objects: work.len(),
        };
        self.sources.insert(work);
        Ok(summary)
    }

    pub fn load_features(&mut self, work: &str, table: &str) -> Result<FeatureSummary, ApiError> {
        let mut staged = self.sources.clone();
        let assignments = staged.load_features(work, table)?;
        let entry = staged.entry(work)?;
        if let Some(path) = self.features_path(work) {
            Self::write(&path, entry.features.to_table(&entry.work).as_bytes())?;
        }
        self.sources = staged;
        Ok(FeatureSummary {
            work: work.to_string(),
            assignments,
        })
    }

    pub fn query(&self, work: &str, text: &str, limit: Option<usize>) -> Result<QueryResult, ApiError> {
        let entry = self.sources.entry(work)?;
        let query = Query::parse(text)?;
        Ok(tql::run_query(
            &entry.featured(),
            &query,
            limit.unwrap_or(tql::DEFAULT_LIMIT),
        )?)
    }

    pub fn freeze_query(&mut self, work: &str, text: &str, metadata: Metadata) -> Result<Annotation, ApiError> {
        let entry = self.sources.entry(work)?;
        let draft = workanno_core::annotations::freeze_query_draft(
            &entry.featured(),
            text,
            metadata,
            self.clock.as_ref(),
        )?;
        Ok(self.add_all(vec![draft])?.remove(0))
    }

    pub fn freeze_feature(
        &mut self,
        work: &str,
        key: &str,
        value: &str,
        metadata: Metadata,
    ) -> Result<Annotation, ApiError> {
        let entry = self.sources.entry(work)?;
        let mut staged = self.annotations.clone();
        let added = staged.freeze_feature(&entry.featured(), key, value, metadata)?;
        self.annotations = staged;
        self.save_annotations()?;
        Ok(added)
    }

    pub fn keyword(&mut self, keyword: &str, targets: &[String], metadata: Metadata) -> Result<Annotation, ApiError> {
        let anchors = parse_anchors(targets)?;
        let mut staged = self.annotations.clone();
        let added = staged.assign_keyword(keyword, anchors, metadata)?;
        self.annotations = staged;
        self.save_annotations()?;
        Ok(added)
    }

    /// One annotation per target.
    pub fn topic(
        &mut self,
        topic: TopicSpec,
        targets: &[String],
        confidence: f64,
        metadata: Metadata,
    ) -> Result<Vec<Annotation>, ApiError> {
        let anchors = parse_anchors(targets)?;
        if anchors.is_empty() {
            return Err(ApiError::bad_request("no_targets", "one or more targets required"));
        }
        let body = TopicBody {
            topic_id: topic.topic_id,
            label: topic.label,
            words: topic.words,
            confidence,
        };
        let mut staged = self.annotations.clone();
        let mut added = Vec::new();
        for anchor in anchors {
            added.push(staged.assign_topic(body.clone(), anchor, metadata.clone())?);
        }
        self.annotations = staged;
        self.save_annotations()?;
        Ok(added)
    }

    /// Port annotations from `source` to `dest`. With no ids, every
    /// annotation whose targets all lie in `source` is ported.
    pub fn port(
        &mut self,
        source: &str,
        dest: &str,
        rules: &[NormalizationRule],
        ids: &[String],
        max_group: Option<usize>,
    ) -> Result<PortOutput, ApiError> {
        let src = self.sources.entry(source)?;
        let dst = self.sources.entry(dest)?;
        let max_group = max_group.unwrap_or(porter::DEFAULT_MAX_GROUP);
        if max_group == 0 {
            return Err(ApiError::bad_request("invalid_input", "max_group must be at least 1"));
        }
        let chosen: Vec<Annotation> = if ids.is_empty() {
            self.annotations
                .iter()
                .filter(|a| a.targets.iter().all(|t| t.work() == Some(source)))
                .cloned()
                .collect()
        } else {
            ids.iter()
                .map(|id| {
                    self.annotations
                        .get(&AnnotationId(id.clone()))
                        .cloned()
                        .ok_or_else(|| ApiError::not_found("unknown_annotation", format!("no annotation {id}")))
                })
                .collect::<Result<_, _>>()?
        };
        let alignment = porter::align_works(&src.work, &dst.work, rules, max_group);
        let mut drafts = Vec::new();
        let mut reports = Vec::new();
        for ann in &chosen {
            let (draft, report) = porter::port_annotation(ann, &src.work, &dst.work, &alignment)?;
            reports.push((draft.is_some(), report));
            drafts.extend(draft);
        }
        let mut added = self.add_all(drafts)?.into_iter();
        let results = reports
            .into_iter()
            .map(|(produced, report)| PortedAnnotation {
                ported_id: if produced { added.next().map(|a| a.id) } else { None },
                report,
            })
            .collect();
        Ok(PortOutput {
            source: source.to_string(),
            dest: dest.to_string(),
            cost: alignment.cost,
            links: LinkCounts {
                one_one: alignment.count(LinkKind::OneOne),
                merge: alignment.count(LinkKind::Merge),
                split: alignment.count(LinkKind::Split),
                modified: alignment.count(LinkKind::Modified),
            },
            unmatched_source: alignment.unmatched_source.len(),
            unmatched_dest: alignment.unmatched_dest.len(),
            results,
        })
    }

    pub fn export(&self, base: &str) -> Result<String, ApiError> {
        Ok(linked::export_store(&self.annotations, base)?)
    }

    pub fn import(&mut self, document: &str, base: &str) -> Result<ImportSummary, ApiError> {
        let set = linked::import_triples(document, base)?;
        let opaque: Vec<Vec<String>> = set.annotations.iter().map(|a| a.opaque_targets.clone()).collect();
        let mut staged = self.annotations.clone();
        let remap = set.apply(&mut staged)?;
        self.annotations = staged;
        self.save_annotations()?;
        let opaque = remap
            .iter()
            .zip(opaque)
            .filter(|(_, targets)| !targets.is_empty())
            .map(|((_, local), targets)| OpaqueTargets {
                annotation: local.clone(),
                targets,
            })
            .collect();
        Ok(ImportSummary {
            imported: remap
                .into_iter()
                .map(|(foreign, local)| Remapped { foreign, local })
                .collect(),
            opaque,
        })
    }

    pub fn targeting(&self, anchor: &Anchor, scope: Scope) -> Vec<&Annotation> {
        self.annotations.targeting(anchor, scope)
    }

    pub fn filter(&self, filter: &Filter) -> Vec<&Annotation> {
        self.annotations.filter(filter)
    }
}

pub fn parse_anchors(texts: &[String]) -> Result<Vec<Anchor>, ApiError> {
    texts
        .iter()
        .map(|t| Anchor::parse(t).map_err(|e| ApiError::bad_request("invalid_anchor", format!("{t}: {e}"))))
        .collect()
}

/// Parse `k=v` pairs into metadata; later pairs win.
pub fn parse_meta(pairs: &[String]) -> Result<Metadata, ApiError> {
    let mut metadata = Metadata::new();
    for pair in pairs {
        let (k, v) = pair
            .split_once('=')
            .filter(|(k, _)| !k.is_empty())
            .ok_or_else(|| ApiError::bad_request("invalid_input", format!("metadata {pair:?} is not k=v")))?;
        metadata.insert(k.to_string(), v.to_string());
    }
    Ok(metadata)
}

/// Target strings as stored, for display.
pub fn target_strings(a: &Annotation) -> Vec<String> {
    a.targets.iter().map(Target::to_string).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use workanno_core::clock::FixedClock;

    fn clock() -> Arc<dyn Clock> {
        Arc::new(FixedClock::parse("2026-10-14T09:30:00Z").unwrap())
    }

    const W1: &str = include_str!("../../../fixtures/w1.json");
    const F1: &str = include_str!("../../../fixtures/f1.tsv");

    #[test]
    fn mutations_persist_and_reload() {
        let dir = tempfile::tempdir().unwrap();
        let mut ws = Workspace::open(dir.path(), clock()).unwrap();
        assert_eq!(ws.ingest(W1).unwrap().leaves, 6);
        assert_eq!(ws.load_features("W1", F1).unwrap().assignments, 7);
        let a = ws.freeze_feature("W1", "pos", "verb", Metadata::new()).unwrap();
        assert_eq!(a.targets.len(), 2);

        let again = Workspace::open(dir.path(), clock()).unwrap();
        assert_eq!(again.annotations.to_jsonl(), ws.annotations.to_jsonl());
        assert_eq!(again.sources.get("W1").unwrap().features.len(), 7);
        assert!(dir.path().join("works/W1.json").exists());
        assert!(dir.path().join("features/W1.tsv").exists());
    }

    #[test]
    fn reingest_drops_feature_file() {
        let dir = tempfile::tempdir().unwrap();
        let mut ws = Workspace::open(dir.path(), clock()).unwrap();
        ws.ingest(W1).unwrap();
        ws.load_features("W1", F1).unwrap();
        ws.ingest(W1).unwrap();
        assert!(!dir.path().join("features/W1.tsv").exists());
        assert!(Workspace::open(dir.path(), clock()).unwrap().sources.get("W1").unwrap().features.is_empty());
    }

    #[test]
    fn failed_operations_leave_store_untouched() {
        let dir = tempfile::tempdir().unwrap();
        let mut ws = Workspace::open(dir.path(), clock()).unwrap();
        ws.ingest(W1).unwrap();
        let bad = ws.load_features("W1", "W1:book/B/chapter/7\tpos\tverb\n").unwrap_err();
        assert_eq!(bad.code, "invalid_features");
        assert!(!dir.path().join("features/W1.tsv").exists());
        let err = ws.freeze_query("W1", "[verse [word", Metadata::new()).unwrap_err();
        assert_eq!(err.code, "query_syntax");
        let err = ws.freeze_feature("W1", "pos", "verb", Metadata::new()).unwrap_err();
        assert_eq!((err.status, err.code), (409, "empty_result"));
        assert!(ws.annotations.is_empty());
        assert!(!dir.path().join(ANNOTATIONS_FILE).exists());
    }

    #[test]
    fn meta_pairs() {
        let m = parse_meta(&["author=eep".into(), "note=a=b".into()]).unwrap();
        assert_eq!(m.get("note").map(String::as_str), Some("a=b"));
        assert!(parse_meta(&["=x".into()]).is_err());
        assert!(parse_meta(&["novalue".into()]).is_err());
    }
}
