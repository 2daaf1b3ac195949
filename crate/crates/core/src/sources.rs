//! The sources store: ingested works and their features.
//!
//! Entries are immutable snapshots behind `Arc`; replacing a work or loading
//! features swaps in a new snapshot, so readers holding the old one are
//! never disturbed.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::anchor::Anchor;
use crate::corpus::{CorpusError, TextObject, Work};
use crate::features::{FeatureError, FeatureIndex, Featured};

#[derive(Debug, Clone)]
pub struct WorkEntry {
    pub work: Work,
    pub features: FeatureIndex,
}

impl WorkEntry {
    pub fn featured(&self) -> Featured<'_> {
        Featured::new(&self.work, &self.features)
    }
}

#[derive(Debug, Clone, Default)]
pub struct SourceStore {
    works: BTreeMap<String, Arc<WorkEntry>>,
}

impl SourceStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parse and store a work; an existing work with the same id is replaced
    /// together with its features.
    pub fn ingest(&mut self, document: &str) -> Result<Arc<WorkEntry>, CorpusError> {
        let work = Work::from_document(document)?;
        Ok(self.insert(work))
    }

    pub fn insert(&mut self, work: Work) -> Arc<WorkEntry> {
        let entry = Arc::new(WorkEntry {
            work,
            features: FeatureIndex::new(),
        });
        self.works
            .insert(entry.work.id().to_string(), Arc::clone(&entry));
        entry
    }

    pub fn remove(&mut self, work_id: &str) -> Option<Arc<WorkEntry>> {
        self.works.remove(work_id)
    }

    pub fn clear(&mut self) {
        self.works.clear();
    }

    pub fn load_features(&mut self, work_id: &str, table: &str) -> Result<usize, SourceError> {
        let entry = self.entry(work_id)?;
        let mut features = entry.features.clone();
        let count = features.load_table(&entry.work, table)?;
        let updated = Arc::new(WorkEntry {
            work: entry.work.clone(),
            features,
        });
        self.works.insert(work_id.to_string(), updated);
        Ok(count)
    }

    pub fn entry(&self, work_id: &str) -> Result<Arc<WorkEntry>, CorpusError> {
        self.works
            .get(work_id)
            .cloned()
            .ok_or_else(|| CorpusError::UnknownWork(work_id.to_string()))
    }

    pub fn get(&self, work_id: &str) -> Option<&WorkEntry> {
        self.works.get(work_id).map(|e| e.as_ref())
    }

    pub fn works(&self) -> impl Iterator<Item = &WorkEntry> {
        self.works.values().map(|e| e.as_ref())
    }

    pub fn is_empty(&self) -> bool {
        self.works.is_empty()
    }

    pub fn resolve(&self, anchor: &Anchor) -> Result<&TextObject, CorpusError> {
        self.get(anchor.work())
            .ok_or_else(|| CorpusError::UnknownWork(anchor.work().to_string()))?
            .work
            .resolve(anchor)
    }

    pub fn text_of(&self, anchor: &Anchor) -> Result<String, CorpusError> {
        self.get(anchor.work())
            .ok_or_else(|| CorpusError::UnknownWork(anchor.work().to_string()))?
            .work
            .text_of(anchor)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SourceError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}
