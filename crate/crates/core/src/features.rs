//! Key=value feature assignments on text objects.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::anchor::Anchor;
use crate::corpus::{NodeId, Work};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeatureError {
    #[error("row {row}: expected anchor<TAB>key<TAB>value")]
    MalformedRow { row: usize },
    #[error("row {row}: invalid anchor: {message}")]
    BadAnchor { row: usize, message: String },
    #[error("row {row}: unresolved anchor {anchor}")]
    Unresolved { row: usize, anchor: String },
    #[error("row {row}: conflicting value for {key} on {anchor}: {existing:?} vs {new:?}")]
    Conflict {
        row: usize,
        anchor: String,
        key: String,
        existing: String,
        new: String,
    },
}

/// Feature assignments of one work, indexed by object and by `(key, value)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureIndex {
    by_object: HashMap<NodeId, BTreeMap<String, String>>,
    by_value: HashMap<(String, String), BTreeSet<NodeId>>,
    len: usize,
}

impl FeatureIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of distinct assignments.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Load a tab-separated feature table for `work`.
    ///
    /// The table is validated in full before anything is indexed. Returns the
    /// number of distinct assignments the table contains.
    pub fn load_table(&mut self, work: &Work, table: &str) -> Result<usize, FeatureError> {
        let mut rows: BTreeMap<(NodeId, String), (String, usize)> = BTreeMap::new();
        for (i, line) in table.lines().enumerate() {
            let row = i + 1;
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [anchor, key, value] = fields[..] else {
                return Err(FeatureError::MalformedRow { row });
            };
            if key.is_empty() {
                return Err(FeatureError::MalformedRow { row });
            }
            let anchor = Anchor::parse(anchor).map_err(|e| FeatureError::BadAnchor {
                row,
                message: e.to_string(),
            })?;
            let id = work
                .node_id(&anchor)
                .map_err(|_| FeatureError::Unresolved {
                    row,
                    anchor: anchor.to_string(),
                })?;
            let existing = self
                .value_of(id, key)
                .map(str::to_string)
                .or_else(|| rows.get(&(id, key.to_string())).map(|(v, _)| v.clone()));
            if let Some(existing) = existing {
                if existing != value {
                    return Err(FeatureError::Conflict {
                        row,
                        anchor: anchor.to_string(),
                        key: key.to_string(),
                        existing,
                        new: value.to_string(),
                    });
                }
            }
            rows.entry((id, key.to_string()))
                .or_insert_with(|| (value.to_string(), row));
        }
        let count = rows.len();
        for ((id, key), (value, _)) in rows {
            self.insert(id, key, value);
        }
        Ok(count)
    }

    /// Insert one assignment; returns false when it was already present.
    pub fn insert(&mut self, id: NodeId, key: String, value: String) -> bool {
        let slot = self.by_object.entry(id).or_default();
        if slot.contains_key(&key) {
            return false;
        }
        slot.insert(key.clone(), value.clone());
        self.by_value.entry((key, value)).or_default().insert(id);
        self.len += 1;
        true
    }

    pub fn value_of(&self, id: NodeId, key: &str) -> Option<&str> {
        self.by_object.get(&id)?.get(key).map(String::as_str)
    }

    /// All features of one object, ordered by key.
    pub fn features_of(&self, id: NodeId) -> Option<&BTreeMap<String, String>> {
        self.by_object.get(&id)
    }

    /// Ids carrying `key=value`, in document order.
    pub fn ids_with(&self, key: &str, value: &str) -> Vec<NodeId> {
        self.by_value
            .get(&(key.to_string(), value.to_string()))
            .map(|ids| ids.iter().copied().collect())
            .unwrap_or_default()
    }

    /// Every assignment as `(id, key, value)`, in document order then key order.
    pub fn assignments(&self) -> Vec<(NodeId, &str, &str)> {
        let mut ids: Vec<&NodeId> = self.by_object.keys().collect();
        ids.sort();
        ids.into_iter()
            .flat_map(|id| {
                self.by_object[id]
                    .iter()
                    .map(move |(k, v)| (*id, k.as_str(), v.as_str()))
            })
            .collect()
    }

    /// Serialize as a feature table in canonical row order.
    pub fn to_table(&self, work: &Work) -> String {
        let mut out = String::new();
        for (id, key, value) in self.assignments() {
            out.push_str(&format!("{}\t{key}\t{value}\n", work.object(id).anchor()));
        }
        out
    }
}

/// A work together with its features.
pub struct Featured<'a> {
    pub work: &'a Work,
    pub features: &'a FeatureIndex,
}

impl<'a> Featured<'a> {
    pub fn new(work: &'a Work, features: &'a FeatureIndex) -> Self {
        Featured { work, features }
    }

    /// The stored value, or `None` for an absent feature or unresolved anchor.
    pub fn feature_value(&self, anchor: &Anchor, key: &str) -> Option<&'a str> {
        let id = self.work.node_id(anchor).ok()?;
        self.features.value_of(id, key)
    }

    pub fn objects_with_feature(&self, key: &str, value: &str) -> Vec<Anchor> {
        self.features
            .ids_with(key, value)
            .into_iter()
            .map(|id| self.work.object(id).anchor().clone())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const W1: &str = include_str!("../../../fixtures/w1.json");
    const F1: &str = include_str!("../../../fixtures/f1.tsv");

    fn anchor(suffix: &str) -> Anchor {
        Anchor::parse(&format!("W1:book/B/chapter/1/{suffix}")).unwrap()
    }

    fn loaded() -> (Work, FeatureIndex) {
        let work = Work::from_document(W1).unwrap();
        let mut index = FeatureIndex::new();
        assert_eq!(index.load_table(&work, F1).unwrap(), 7);
        (work, index)
    }

    #[test]
    fn loads_fixture() {
        let (_, index) = loaded();
        assert_eq!(index.len(), 7);
    }

    #[test]
    fn loading_twice_is_idempotent() {
        let (work, mut index) = loaded();
        assert_eq!(index.load_table(&work, F1).unwrap(), 7);
        assert_eq!(index.len(), 7);
        let doubled = format!("{F1}{F1}");
        let mut fresh = FeatureIndex::new();
        assert_eq!(fresh.load_table(&work, &doubled).unwrap(), 7);
    }

    #[test]
    fn unresolved_row_reported() {
        let work = Work::from_document(W1).unwrap();
        let table = "# header\nW1:book/B/chapter/1/verse/1/word/1\tpos\tprep\nW1:book/B/chapter/9/verse/1\tpos\tx\n";
        let mut index = FeatureIndex::new();
        let err = index.load_table(&work, table).unwrap_err();
        assert!(matches!(err, FeatureError::Unresolved { row: 3, .. }));
        assert!(index.is_empty(), "failed loads leave the index untouched");
    }

    #[test]
    fn conflicting_values_rejected() {
        let (work, mut index) = loaded();
        let table = "W1:book/B/chapter/1/verse/1/word/3\ttense\timperfect\n";
        assert!(matches!(
            index.load_table(&work, table),
            Err(FeatureError::Conflict { row: 1, .. })
        ));
        let inner = "W1:book/B\tx\t1\nW1:book/B\tx\t2\n";
        assert!(matches!(
            FeatureIndex::new().load_table(&work, inner),
            Err(FeatureError::Conflict { row: 2, .. })
        ));
        assert!(matches!(
            FeatureIndex::new().load_table(&work, "W1:book/B\tx\n"),
            Err(FeatureError::MalformedRow { row: 1 })
        ));
    }

    #[test]
    fn value_lookup() {
        let (work, index) = loaded();
        let f = Featured::new(&work, &index);
        assert_eq!(f.feature_value(&anchor("verse/2/word/1"), "gender"), Some("female"));
        assert_eq!(f.feature_value(&anchor("verse/1/word/1"), "gender"), None);
        assert_eq!(f.feature_value(&anchor("verse/1/word/3"), "tense"), Some("perfect"));
    }

    #[test]
    fn extension_lookup() {
        let (work, index) = loaded();
        let f = Featured::new(&work, &index);
        assert_eq!(
            f.objects_with_feature("pos", "verb"),
            vec![anchor("verse/1/word/3"), anchor("verse/2/word/2")]
        );
        assert!(f.objects_with_feature("gender", "male").is_empty());
        assert_eq!(
            f.objects_with_feature("pos", "noun"),
            vec![anchor("verse/1/word/2"), anchor("verse/2/word/1")]
        );
    }

    #[test]
    fn table_serialization_reloads() {
        let (work, index) = loaded();
        let table = index.to_table(&work);
        let mut again = FeatureIndex::new();
        again.load_table(&work, &table).unwrap();
        assert_eq!(again, index);
        assert_eq!(again.to_table(&work), table);
    }
}
