//! Export and import of annotation sets as N-Triples.
//!
//! Mapping (frozen):
//!
//! | thing              | rendering                                      |
//! |--------------------|------------------------------------------------|
//! | annotation         | `{base}annotation/{id}`                        |
//! | body node          | `{annotation}/body`                            |
//! | topic word node    | `{body}/word/{i}`                              |
//! | anchor             | `{base}work/{work}/{type}/{key}/...`           |
//! | class              | `rdf:type oa:Annotation`                       |
//! | body, target       | `oa:hasBody`, `oa:hasTarget`                   |
//! | body fields        | [`NS`] + kind, key, value, queryText, resultCount, keyword, topicId, label, word, weight, confidence |
//! | metadata `{name}`  | [`META_NS`] + name                             |
//!
//! Feature bodies carry `value` as the rendered `key=value` string, and
//! numbers are plain literals with at most 9 significant digits.

mod ntriples;

use std::collections::HashMap;

use thiserror::Error;

use crate::anchor::{decode_segment, encode_segment, Anchor, Step};
use crate::annotations::{
    Annotation, AnnotationDraft, AnnotationError, AnnotationId, AnnotationStore, Body, FeatureBody,
    KeywordBody, Kind, Metadata, QueryBody, Target, TopicBody, TopicWord,
};
use crate::tql;

pub use ntriples::{parse_document, write_document, SyntaxError, Term, Triple};

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const OA: &str = "http://www.w3.org/ns/oa#";
pub const NS: &str = "http://purl.org/workanno/ns#";
pub const META_NS: &str = "http://purl.org/workanno/meta#";

fn oa(term: &str) -> String {
    format!("{OA}{term}")
}

fn ns(term: &str) -> String {
    format!("{NS}{term}")
}

#[derive(Debug, Error)]
pub enum LinkedError {
    #[error("malformed base {base:?}: {message}")]
    MalformedBase { base: String, message: String },
    #[error("foreign base: {uri} is not under {base}work/")]
    ForeignBase { uri: String, base: String },
    #[error("dangling type in {uri}")]
    DanglingType { uri: String },
    #[error("bad segment in {uri}: {message}")]
    BadSegment { uri: String, message: String },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("annotation {annotation} has no target")]
    MissingTarget { annotation: String },
    #[error("annotation {annotation} has unknown kind {kind:?}")]
    UnknownKind { annotation: String, kind: String },
    #[error("{node}: missing {field}")]
    MissingField { node: String, field: String },
    #[error("{node}: bad {field}: {message}")]
    InvalidField {
        node: String,
        field: String,
        message: String,
    },
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
}

impl From<SyntaxError> for LinkedError {
    fn from(e: SyntaxError) -> Self {
        LinkedError::Malformed {
            line: e.line,
            message: e.message,
        }
    }
}

/// Check that `base` is an absolute URI ending in "/".
pub fn check_base(base: &str) -> Result<(), LinkedError> {
    let malformed = |message: &str| LinkedError::MalformedBase {
        base: base.to_string(),
        message: message.to_string(),
    };
    let url = url::Url::parse(base).map_err(|e| malformed(&e.to_string()))?;
    if url.cannot_be_a_base() {
        return Err(malformed("not a hierarchical URI"));
    }
    if !base.ends_with('/') {
        return Err(malformed("must end with '/'"));
    }
    if base.contains(['<', '>', '"', ' ', '\\']) || url.fragment().is_some() || url.query().is_some() {
        return Err(malformed("must not contain a query, fragment or reserved characters"));
    }
    Ok(())
}

pub fn anchor_to_uri(anchor: &Anchor, base: &str) -> Result<String, LinkedError> {
    check_base(base)?;
    Ok(anchor_uri(anchor, base))
}

fn anchor_uri(anchor: &Anchor, base: &str) -> String {
    let mut uri = format!("{base}work/{}", encode_segment(anchor.work()));
    for step in anchor.path() {
        uri.push('/');
        uri.push_str(&encode_segment(&step.object_type));
        uri.push('/');
        uri.push_str(&encode_segment(&step.key));
    }
    uri
}

pub fn uri_to_anchor(uri: &str, base: &str) -> Result<Anchor, LinkedError> {
    let prefix = format!("{base}work/");
    let rest = uri.strip_prefix(&prefix).ok_or_else(|| LinkedError::ForeignBase {
        uri: uri.to_string(),
        base: base.to_string(),
    })?;
    let bad = |e: crate::anchor::AnchorError| LinkedError::BadSegment {
        uri: uri.to_string(),
        message: e.to_string(),
    };
    let mut offset = prefix.len();
    let mut segments = Vec::new();
    for raw in rest.split('/') {
        segments.push(decode_segment(raw, offset).map_err(bad)?);
        offset += raw.len() + 1;
    }
    let work = segments.remove(0);
    if segments.len() % 2 == 1 {
        return Err(LinkedError::DanglingType {
            uri: uri.to_string(),
        });
    }
    let path = segments
        .chunks(2)
        .map(|p| Step::new(p[0].clone(), p[1].clone()))
        .collect();
    Ok(Anchor::new(work, path))
}

/// Render a number with at most 9 significant digits and no trailing zeros.
pub fn format_number(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() { "0".into() } else { x.to_string() };
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };
    // Decimal point sits after digit index `exp`.
    let point = exp + 1;
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if point <= 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat('0').take((-point) as usize));
        out.push_str(digits);
    } else if point as usize >= digits.len() {
        out.push_str(digits);
        out.extend(std::iter::repeat('0').take(point as usize - digits.len()));
    } else {
        out.push_str(&digits[..point as usize]);
        out.push('.');
        out.push_str(&digits[point as usize..]);
    }
    out
}

fn annotation_uri(base: &str, id: &AnnotationId) -> String {
    format!("{base}annotation/{}", encode_segment(id.as_str()))
}

fn target_uri(target: &Target, base: &str) -> String {
    match target {
        Target::Anchor(a) => anchor_uri(a, base),
        Target::Opaque(uri) => uri.clone(),
    }
}

fn annotation_triples(a: &Annotation, base: &str, out: &mut Vec<Triple>) {
    let subject = annotation_uri(base, &a.id);
    let body = format!("{subject}/body");
    out.push(Triple::iri(&subject, RDF_TYPE, &oa("Annotation")));
    out.push(Triple::iri(&subject, &oa("hasBody"), &body));
    out.push(Triple::literal(&body, &ns("kind"), a.kind().as_str()));
    match &a.body {
        Body::Query(q) => {
            out.push(Triple::literal(&body, &ns("queryText"), &q.text));
            out.push(Triple::literal(&body, &ns("resultCount"), &q.result_count.to_string()));
        }
        Body::Feature(f) => {
            out.push(Triple::literal(&body, &ns("key"), &f.key));
            out.push(Triple::literal(&body, &ns("value"), &a.body.to_string()));
        }
        Body::Keyword(k) => out.push(Triple::literal(&body, &ns("keyword"), &k.keyword)),
        Body::Topic(t) => {
            out.push(Triple::literal(&body, &ns("topicId"), &t.topic_id));
            out.push(Triple::literal(&body, &ns("label"), &t.label));
            for (i, w) in t.words.iter().enumerate() {
                let node = format!("{body}/word/{i}");
                out.push(Triple::iri(&body, &ns("word"), &node));
                out.push(Triple::literal(&node, &ns("label"), &w.word));
                out.push(Triple::literal(&node, &ns("weight"), &format_number(w.weight)));
            }
            out.push(Triple::literal(&body, &ns("confidence"), &format_number(t.confidence)));
        }
    }
    for t in &a.targets {
        out.push(Triple::iri(&subject, &oa("hasTarget"), &target_uri(t, base)));
    }
    for (name, value) in &a.metadata {
        out.push(Triple::literal(&subject, &format!("{META_NS}{}", encode_segment(name)), value));
    }
}

/// Export annotations in the order given (callers pass id order).
pub fn export_triples<'a>(
    annotations: impl IntoIterator<Item = &'a Annotation>,
    base: &str,
) -> Result<String, LinkedError> {
    check_base(base)?;
    let mut triples = Vec::new();
    for a in annotations {
        annotation_triples(a, base, &mut triples);
    }
    Ok(write_document(&triples))
}

pub fn export_store(store: &AnnotationStore, base: &str) -> Result<String, LinkedError> {
    export_triples(store.iter(), base)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportedAnnotation {
    /// The annotation's identifier in the document: the id when under our
    /// base, the full URI otherwise.
    pub foreign_id: String,
    pub draft: AnnotationDraft,
    /// Targets kept verbatim because they lie outside `base`.
    pub opaque_targets: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImportedSet {
    pub annotations: Vec<ImportedAnnotation>,
}

impl ImportedSet {
    pub fn has_opaque_targets(&self) -> bool {
        self.annotations.iter().any(|a| !a.opaque_targets.is_empty())
    }

    /// Add every annotation to `store` under fresh ids, all or nothing.
    /// Returns (foreign id, local id) pairs in document order.
    pub fn apply(self, store: &mut AnnotationStore) -> Result<Vec<(String, AnnotationId)>, LinkedError> {
        let mut staged = store.clone();
        let mut remap = Vec::with_capacity(self.annotations.len());
        for imported in self.annotations {
            let added = staged.add(imported.draft)?;
            remap.push((imported.foreign_id, added.id));
        }
        *store = staged;
        Ok(remap)
    }
}

struct Node<'a> {
    iris: Vec<(&'a str, &'a str)>,
    literals: Vec<(&'a str, &'a str)>,
}

impl<'a> Node<'a> {
    fn literal(&self, predicate: &str) -> Option<&'a str> {
        self.literals.iter().find(|(p, _)| *p == predicate).map(|(_, v)| *v)
    }

    fn iri(&self, predicate: &str) -> Option<&'a str> {
        self.iris.iter().find(|(p, _)| *p == predicate).map(|(_, v)| *v)
    }

    fn iris_of(&self, predicate: &'a str) -> impl Iterator<Item = &'a str> + '_ {
        self.iris.iter().filter(move |(p, _)| *p == predicate).map(|(_, v)| *v)
    }
}

fn required<'a>(node: &Node<'a>, uri: &str, field: &str) -> Result<&'a str, LinkedError> {
    node.literal(&ns(field)).ok_or_else(|| LinkedError::MissingField {
        node: uri.to_string(),
        field: field.to_string(),
    })
}

fn number<T: std::str::FromStr>(node: &Node<'_>, uri: &str, field: &str) -> Result<T, LinkedError>
where
    T::Err: std::fmt::Display,
{
    required(node, uri, field)?
        .parse()
        .map_err(|e: T::Err| LinkedError::InvalidField {
            node: uri.to_string(),
            field: field.to_string(),
            message: e.to_string(),
        })
}

/// Parse a document and reconstruct its annotations without ids.
pub fn import_triples(text: &str, base: &str) -> Result<ImportedSet, LinkedError> {
    check_base(base)?;
    let triples = parse_document(text)?;
    let mut order: Vec<&str> = Vec::new();
    let mut nodes: HashMap<&str, Node> = HashMap::new();
    let annotation_class = oa("Annotation");
    for t in &triples {
        let node = nodes.entry(&t.subject).or_insert_with(|| Node {
            iris: Vec::new(),
            literals: Vec::new(),
        });
        match &t.object {
            Term::Iri(o) => {
                if t.predicate == RDF_TYPE && *o == annotation_class {
                    order.push(&t.subject);
                }
                node.iris.push((&t.predicate, o));
            }
            Term::Literal(v) => node.literals.push((&t.predicate, v)),
        }
    }
    let empty = Node {
        iris: Vec::new(),
        literals: Vec::new(),
    };
    let annotation_prefix = format!("{base}annotation/");
    let (has_body, has_target) = (oa("hasBody"), oa("hasTarget"));
    let mut set = ImportedSet::default();
    let mut seen = std::collections::HashSet::new();
    for subject in order {
        if !seen.insert(subject) {
            continue;
        }
        let node = &nodes[subject];
        let body_uri = node.iri(&has_body).ok_or_else(|| LinkedError::MissingField {
            node: subject.to_string(),
            field: "hasBody".into(),
        })?;
        let body_node = nodes.get(body_uri).unwrap_or(&empty);
        let kind_text = required(body_node, body_uri, "kind")?;
        let kind: Kind = kind_text.parse().map_err(|_| LinkedError::UnknownKind {
            annotation: subject.to_string(),
            kind: kind_text.to_string(),
        })?;
        let body = match kind {
            Kind::Query => Body::Query(QueryBody {
                language: tql::LANGUAGE.to_string(),
                text: required(body_node, body_uri, "queryText")?.to_string(),
                result_count: number(body_node, body_uri, "resultCount")?,
            }),
            Kind::Feature => {
                let key = required(body_node, body_uri, "key")?;
                let rendered = required(body_node, body_uri, "value")?;
                let value = rendered
                    .strip_prefix(key)
                    .and_then(|v| v.strip_prefix('='))
                    .ok_or_else(|| LinkedError::InvalidField {
                        node: body_uri.to_string(),
                        field: "value".into(),
                        message: format!("expected \"{key}=...\", got {rendered:?}"),
                    })?;
                Body::Feature(FeatureBody {
                    key: key.to_string(),
                    value: value.to_string(),
                })
            }
            Kind::Keyword => Body::Keyword(KeywordBody {
                keyword: required(body_node, body_uri, "keyword")?.to_string(),
            }),
            Kind::Topic => {
                let mut words = Vec::new();
                for word_uri in body_node.iris_of(&ns("word")) {
                    let w = nodes.get(word_uri).unwrap_or(&empty);
                    words.push(TopicWord {
                        word: required(w, word_uri, "label")?.to_string(),
                        weight: number(w, word_uri, "weight")?,
                    });
                }
                let topic = TopicBody {
                    topic_id: required(body_node, body_uri, "topicId")?.to_string(),
                    label: required(body_node, body_uri, "label")?.to_string(),
                    words,
                    confidence: number(body_node, body_uri, "confidence")?,
                };
                topic.validate()?;
                Body::Topic(topic)
            }
        };
        let mut targets = Vec::new();
        let mut opaque_targets = Vec::new();
        for uri in node.iris_of(&has_target) {
            match uri_to_anchor(uri, base) {
                Ok(anchor) => targets.push(Target::Anchor(anchor)),
                Err(LinkedError::ForeignBase { .. }) => {
                    opaque_targets.push(uri.to_string());
                    targets.push(Target::Opaque(uri.to_string()));
                }
                Err(e) => return Err(e),
            }
        }
        if targets.is_empty() {
            return Err(LinkedError::MissingTarget {
                annotation: subject.to_string(),
            });
        }
        let mut metadata = Metadata::new();
        for (p, v) in &node.literals {
            if let Some(name) = p.strip_prefix(META_NS) {
                let name = decode_segment(name, 0).map_err(|e| LinkedError::InvalidField {
                    node: subject.to_string(),
                    field: (*p).to_string(),
                    message: e.to_string(),
                })?;
                metadata.insert(name, v.to_string());
            }
        }
        let foreign_id = match subject.strip_prefix(&annotation_prefix) {
            Some(id) => decode_segment(id, 0)
                .unwrap_or_else(|_| subject.to_string()),
            None => subject.to_string(),
        };
        set.annotations.push(ImportedAnnotation {
            foreign_id,
            draft: AnnotationDraft::new(body, targets, metadata),
            opaque_targets,
        });
    }
    Ok(set)
}
