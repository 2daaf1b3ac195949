use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::AnnotationError;
use crate::anchor::Anchor;

/// Tolerance on the sum of topic word weights.
pub const WEIGHT_TOLERANCE: f64 = 1e-9;

/// Metadata names with an agreed meaning.
pub mod meta {
    pub const AUTHOR: &str = "author";
    pub const CREATED: &str = "created";
    pub const PROJECT: &str = "project";
    pub const PUBLICATIONS: &str = "publications";
    pub const RESEARCH_PROBLEM: &str = "research_problem";
    pub const LAST_RUN: &str = "last_run";
    pub const PORTED_FROM: &str = "ported_from";
}

pub type Metadata = BTreeMap<String, String>;

/// Annotation identifier. Decimal ids order numerically and sort before
/// any non-decimal id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AnnotationId(pub String);

impl AnnotationId {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn number(&self) -> Option<u64> {
        if self.0.is_empty() || !self.0.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        self.0.parse().ok()
    }
}

impl Ord for AnnotationId {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.number(), other.number()) {
            (Some(a), Some(b)) => a.cmp(&b).then_with(|| self.0.cmp(&other.0)),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => self.0.cmp(&other.0),
        }
    }
}

impl PartialOrd for AnnotationId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for AnnotationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AnnotationId {
    fn from(s: &str) -> Self {
        AnnotationId(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Query,
    Feature,
    Keyword,
    Topic,
}

impl Kind {
    pub const ALL: [Kind; 4] = [Kind::Query, Kind::Feature, Kind::Keyword, Kind::Topic];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Query => "query",
            Kind::Feature => "feature",
            Kind::Keyword => "keyword",
            Kind::Topic => "topic",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kind {
    type Err = AnnotationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Kind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| AnnotationError::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryBody {
    pub language: String,
    pub text: String,
    pub result_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureBody {
    pub key: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordBody {
    pub keyword: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicWord {
    pub word: String,
    pub weight: f64,
}

/// A weighted word list assigned with a confidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicBody {
    pub topic_id: String,
    pub label: String,
    pub words: Vec<TopicWord>,
    pub confidence: f64,
}

impl TopicBody {
    pub fn validate(&self) -> Result<(), AnnotationError> {
        if let Some(w) = self.words.iter().find(|w| !(w.weight > 0.0) || !w.weight.is_finite()) {
            return Err(AnnotationError::InvalidTopic(format!(
                "weight of {:?} must be strictly positive",
                w.word
            )));
        }
        let sum: f64 = self.words.iter().map(|w| w.weight).sum();
        if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(AnnotationError::InvalidTopic(format!(
                "weights must sum to 1 (got {sum})"
            )));
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(AnnotationError::InvalidTopic(format!(
                "confidence {} outside [0, 1]",
                self.confidence
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "body", rename_all = "lowercase")]
pub enum Body {
    Query(QueryBody),
    Feature(FeatureBody),
    Keyword(KeywordBody),
    Topic(TopicBody),
}

impl Body {
    pub fn kind(&self) -> Kind {
        match self {
            Body::Query(_) => Kind::Query,
            Body::Feature(_) => Kind::Feature,
            Body::Keyword(_) => Kind::Keyword,
            Body::Topic(_) => Kind::Topic,
        }
    }

    pub fn validate(&self) -> Result<(), AnnotationError> {
        match self {
            Body::Topic(t) => t.validate(),
            _ => Ok(()),
        }
    }
}

/// The string form used for display and substring filtering.
impl fmt::Display for Body {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Body::Query(q) => f.write_str(&q.text),
            Body::Feature(b) => write!(f, "{}={}", b.key, b.value),
            Body::Keyword(k) => f.write_str(&k.keyword),
            Body::Topic(t) => write!(f, "{}: {}", t.topic_id, t.label),
        }
    }
}

/// What an annotation points at: a local anchor, or an absolute URI outside
/// this system's base kept verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Anchor(Anchor),
    Opaque(String),
}

impl Target {
    pub fn anchor(&self) -> Option<&Anchor> {
        match self {
            Target::Anchor(a) => Some(a),
            Target::Opaque(_) => None,
        }
    }

    pub fn work(&self) -> Option<&str> {
        self.anchor().map(Anchor::work)
    }

    /// Parse the stored form: an anchor, or `<uri>` for an opaque target.
    pub fn parse(text: &str) -> Result<Target, AnnotationError> {
        if let Some(uri) = text.strip_prefix('<').and_then(|t| t.strip_suffix('>')) {
            if uri.is_empty() || uri.contains(['<', '>']) {
                return Err(AnnotationError::InvalidTarget(text.to_string()));
            }
            return Ok(Target::Opaque(uri.to_string()));
        }
        Anchor::parse(text)
            .map(Target::Anchor)
            .map_err(|e| AnnotationError::InvalidTarget(format!("{text}: {e}")))
    }
}

impl From<Anchor> for Target {
    fn from(a: Anchor) -> Self {
        Target::Anchor(a)
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Anchor(a) => a.fmt(f),
            Target::Opaque(u) => write!(f, "<{u}>"),
        }
    }
}

impl Serialize for Target {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Target {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Target::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// A body bound to one or more targets, with metadata carried alongside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub id: AnnotationId,
    #[serde(flatten)]
    pub body: Body,
    pub targets: Vec<Target>,
    #[serde(default)]
    pub metadata: Metadata,
}

impl Annotation {
    pub fn kind(&self) -> Kind {
        self.body.kind()
    }

    pub fn draft(&self) -> AnnotationDraft {
        AnnotationDraft {
            body: self.body.clone(),
            targets: self.targets.clone(),
            metadata: self.metadata.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), AnnotationError> {
        if self.targets.is_empty() {
            return Err(AnnotationError::NoTargets);
        }
        self.body.validate()
    }
}

/// An annotation that has not been given an id yet.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationDraft {
    pub body: Body,
    pub targets: Vec<Target>,
    pub metadata: Metadata,
}

impl AnnotationDraft {
    pub fn new(body: Body, targets: Vec<Target>, metadata: Metadata) -> Self {
        AnnotationDraft {
            body,
            targets,
            metadata,
        }
    }

    pub fn with_id(self, id: AnnotationId) -> Annotation {
        Annotation {
            id,
            body: self.body,
            targets: self.targets,
            metadata: self.metadata,
        }
    }
}
