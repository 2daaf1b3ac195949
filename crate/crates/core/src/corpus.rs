//! Works as single-rooted trees of typed text objects.
//!
//! Objects are stored in an arena in pre-order, so a [`NodeId`] doubles as
//! the object's rank in document order and every subtree occupies a
//! contiguous id range.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anchor::Anchor;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("single root required")]
    SingleRootRequired,
    #[error("invalid object at {at}: {message}")]
    InvalidObject { at: String, message: String },
    #[error("duplicate sibling key {key:?} under {parent}")]
    DuplicateKey { parent: String, key: String },
    #[error("type {object_type:?} at {at} is not in the type order")]
    TypeNotDeclared { object_type: String, at: String },
    #[error("type {child:?} at {at} is not finer than its parent type {parent:?}")]
    TypeNotFiner {
        child: String,
        parent: String,
        at: String,
    },
    #[error("unknown work {0:?}")]
    UnknownWork(String),
    #[error("unknown type {0:?}")]
    UnknownType(String),
    #[error("unresolved anchor {anchor}: unresolved path at segment {segment}")]
    Unresolved { anchor: String, segment: usize },
}

/// Index of an object within its work; also its document-order rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

/// Inclusive range of leaf indices covered by an object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub first: usize,
    pub last: usize,
}

impl Span {
    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.first <= other.first && other.last <= self.last
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.first, self.last)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Content {
    Children(Vec<NodeId>),
    Token(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextObject {
    object_type: String,
    type_rank: usize,
    key: String,
    content: Content,
    span: Span,
    parent: Option<NodeId>,
    subtree_end: usize,
    depth: usize,
    anchor: Anchor,
}

impl TextObject {
    pub fn object_type(&self) -> &str {
        &self.object_type
    }

    /// Position of the object's type in the work's type order.
    pub fn type_rank(&self) -> usize {
        self.type_rank
    }

    pub fn key(&self) -> &str {
        &self.key
    }

    pub fn content(&self) -> &Content {
        &self.content
    }

    pub fn children(&self) -> &[NodeId] {
        match &self.content {
            Content::Children(c) => c,
            Content::Token(_) => &[],
        }
    }

    pub fn token(&self) -> Option<&str> {
        match &self.content {
            Content::Token(t) => Some(t),
            Content::Children(_) => None,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.content, Content::Token(_))
    }

    pub fn span(&self) -> Span {
        self.span
    }

    pub fn parent(&self) -> Option<NodeId> {
        self.parent
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn anchor(&self) -> &Anchor {
        &self.anchor
    }
}

/// A single ingested work.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Work {
    id: String,
    types: Vec<String>,
    nodes: Vec<TextObject>,
    leaves: Vec<NodeId>,
    by_anchor: HashMap<Anchor, NodeId>,
    by_type: Vec<Vec<NodeId>>,
}

// Interchange format.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    work: String,
    types: Vec<String>,
    tree: RawTree,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RawTree {
    One(RawNode),
    Many(Vec<RawNode>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    #[serde(rename = "type")]
    object_type: String,
    key: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    children: Option<Vec<RawNode>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
}

struct Builder<'a> {
    work: &'a str,
    rank: HashMap<&'a str, usize>,
    nodes: Vec<TextObject>,
    leaves: Vec<NodeId>,
}

impl<'a> Builder<'a> {
    fn add(
        &mut self,
        raw: RawNode,
        parent: Option<(NodeId, usize)>,
        anchor: Anchor,
        depth: usize,
    ) -> Result<NodeId, CorpusError> {
        let at = anchor.to_string();
        let type_rank = *self.rank.get(raw.object_type.as_str()).ok_or_else(|| {
            CorpusError::TypeNotDeclared {
                object_type: raw.object_type.clone(),
                at: at.clone(),
            }
        })?;
        match parent {
            None if type_rank != 0 => {
                return Err(CorpusError::InvalidObject {
                    at,
                    message: "root type must be the first declared type".into(),
                })
            }
            Some((pid, parent_rank)) if type_rank <= parent_rank => {
                return Err(CorpusError::TypeNotFiner {
                    child: raw.object_type,
                    parent: self.nodes[pid.0].object_type.clone(),
                    at,
                })
            }
            _ => {}
        }
        let id = NodeId(self.nodes.len());
        let first = self.leaves.len();
        self.nodes.push(TextObject {
            object_type: raw.object_type,
            type_rank,
            key: raw.key,
            content: Content::Children(Vec::new()),
            span: Span { first, last: first },
            parent: parent.map(|(p, _)| p),
            subtree_end: id.0 + 1,
            depth,
            anchor: anchor.clone(),
        });
        let content = match (raw.children, raw.text) {
            (Some(_), Some(_)) => {
                return Err(CorpusError::InvalidObject {
                    at,
                    message: "object has both children and text".into(),
                })
            }
            (None, None) => {
                return Err(CorpusError::InvalidObject {
                    at,
                    message: "object has neither children nor text".into(),
                })
            }
            (Some(children), None) if children.is_empty() => {
                return Err(CorpusError::InvalidObject {
                    at,
                    message: "object has an empty child list".into(),
                })
            }
            (None, Some(token)) => {
                self.leaves.push(id);
                Content::Token(token)
            }
            (Some(children), None) => {
                let mut seen = HashSet::new();
                let mut ids = Vec::with_capacity(children.len());
                for child in children {
                    if child.key.is_empty() {
                        return Err(CorpusError::InvalidObject {
                            at: at.clone(),
                            message: "child with empty key".into(),
                        });
                    }
                    if !seen.insert(child.key.clone()) {
                        return Err(CorpusError::DuplicateKey {
                            parent: at.clone(),
                            key: child.key,
                        });
                    }
                    let child_anchor = anchor.child(child.object_type.clone(), child.key.clone());
                    ids.push(self.add(child, Some((id, type_rank)), child_anchor, depth + 1)?);
                }
                Content::Children(ids)
            }
        };
        let subtree_end = self.nodes.len();
        let node = &mut self.nodes[id.0];
        node.content = content;
        node.span = Span {
            first,
            last: self.leaves.len() - 1,
        };
        node.subtree_end = subtree_end;
        Ok(id)
    }
}

impl Work {
    /// Parse and validate a corpus-interchange JSON document.
    pub fn from_document(text: &str) -> Result<Work, CorpusError> {
        let raw: RawDocument =
            serde_json::from_str(text).map_err(|e| CorpusError::Malformed(e.to_string()))?;
        let root = match raw.tree {
            RawTree::One(node) => node,
            RawTree::Many(mut nodes) if nodes.len() == 1 => nodes.pop().unwrap(),
            RawTree::Many(_) => return Err(CorpusError::SingleRootRequired),
        };
        Work::build(raw.work, raw.types, root)
    }

    fn build(id: String, types: Vec<String>, root: RawNode) -> Result<Work, CorpusError> {
        if id.is_empty() {
            return Err(CorpusError::Malformed("empty work id".into()));
        }
        if types.is_empty() {
            return Err(CorpusError::Malformed("empty type order".into()));
        }
        let mut rank = HashMap::new();
        for (i, t) in types.iter().enumerate() {
            if t.is_empty() {
                return Err(CorpusError::Malformed("empty type name".into()));
            }
            if rank.insert(t.as_str(), i).is_some() {
                return Err(CorpusError::Malformed(format!("type {t:?} declared twice")));
            }
        }
        let mut builder = Builder {
            work: &id,
            rank,
            nodes: Vec::new(),
            leaves: Vec::new(),
        };
        if root.key.is_empty() {
            return Err(CorpusError::InvalidObject {
                at: format!("{id}:"),
                message: "root with empty key".into(),
            });
        }
        let root_anchor = Anchor::root(builder.work).child(root.object_type.clone(), root.key.clone());
        builder.add(root, None, root_anchor, 0)?;
        let Builder { nodes, leaves, .. } = builder;

        let mut by_type = vec![Vec::new(); types.len()];
        let mut by_anchor = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            by_type[node.type_rank].push(NodeId(i));
            by_anchor.insert(node.anchor.clone(), NodeId(i));
        }
        Ok(Work {
            id,
            types,
            nodes,
            leaves,
            by_anchor,
            by_type,
        })
    }

    /// Canonical interchange serialization (compact JSON).
    pub fn to_document(&self) -> String {
        let doc = RawDocument {
            work: self.id.clone(),
            types: self.types.clone(),
            tree: RawTree::One(self.raw_node(self.root_id())),
        };
        serde_json::to_string(&doc).expect("work documents always serialize")
    }

    fn raw_node(&self, id: NodeId) -> RawNode {
        let node = self.object(id);
        let (children, text) = match &node.content {
            Content::Token(t) => (None, Some(t.clone())),
            Content::Children(c) => (Some(c.iter().map(|&c| self.raw_node(c)).collect()), None),
        };
        RawNode {
            object_type: node.object_type.clone(),
            key: node.key.clone(),
            children,
            text,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn types(&self) -> &[String] {
        &self.types
    }

    pub fn type_rank(&self, object_type: &str) -> Option<usize> {
        self.types.iter().position(|t| t == object_type)
    }

    pub fn root_id(&self) -> NodeId {
        NodeId(0)
    }

    pub fn root(&self) -> &TextObject {
        &self.nodes[0]
    }

    pub fn object(&self, id: NodeId) -> &TextObject {
        &self.nodes[id.0]
    }

    /// All objects in document order.
    pub fn objects(&self) -> impl Iterator<Item = (NodeId, &TextObject)> {
        self.nodes.iter().enumerate().map(|(i, n)| (NodeId(i), n))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Leaf objects in token order; index `i` is leaf position `i`.
    pub fn leaves(&self) -> &[NodeId] {
        &self.leaves
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// Ids of all strict descendants of `id` (a contiguous range in document order).
    pub fn descendant_range(&self, id: NodeId) -> std::ops::Range<usize> {
        id.0 + 1..self.nodes[id.0].subtree_end
    }

    pub fn is_descendant(&self, ancestor: NodeId, node: NodeId) -> bool {
        self.descendant_range(ancestor).contains(&node.0)
    }

    /// Objects of the given type rank, in document order.
    pub fn ids_of_rank(&self, rank: usize) -> &[NodeId] {
        &self.by_type[rank]
    }

    pub fn node_id(&self, anchor: &Anchor) -> Result<NodeId, CorpusError> {
        if anchor.work() != self.id {
            return Err(CorpusError::UnknownWork(anchor.work().to_string()));
        }
        if anchor.is_root() {
            return Ok(self.root_id());
        }
        if let Some(&id) = self.by_anchor.get(anchor) {
            return Ok(id);
        }
        // Walk from the root to find the first step that does not resolve.
        let mut current: Option<NodeId> = None;
        for (i, step) in anchor.path().iter().enumerate() {
            let candidates = match current {
                None => vec![self.root_id()],
                Some(c) => self.object(c).children().to_vec(),
            };
            let next = candidates.into_iter().find(|&c| {
                let child = self.object(c);
                child.object_type == step.object_type && child.key == step.key
            });
            match next {
                Some(c) => current = Some(c),
                None => {
                    return Err(CorpusError::Unresolved {
                        anchor: anchor.to_string(),
                        segment: i + 1,
                    })
                }
            }
        }
        unreachable!("anchor index covers every object path")
    }

    pub fn resolve(&self, anchor: &Anchor) -> Result<&TextObject, CorpusError> {
        self.node_id(anchor).map(|id| self.object(id))
    }

    /// Anchors of all objects of a type, in document order.
    pub fn objects_of(&self, object_type: &str) -> Result<Vec<Anchor>, CorpusError> {
        let rank = self
            .type_rank(object_type)
            .ok_or_else(|| CorpusError::UnknownType(object_type.to_string()))?;
        Ok(self.by_type[rank]
            .iter()
            .map(|&id| self.object(id).anchor.clone())
            .collect())
    }

    /// Leaf tokens under `id`, joined by single spaces.
    pub fn text_of_id(&self, id: NodeId) -> String {
        let span = self.object(id).span;
        self.leaves[span.first..=span.last]
            .iter()
            .filter_map(|&leaf| self.object(leaf).token())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn text_of(&self, anchor: &Anchor) -> Result<String, CorpusError> {
        self.node_id(anchor).map(|id| self.text_of_id(id))
    }

    /// The deepest object whose span covers both leaf positions.
    pub fn smallest_cover(&self, first_leaf: usize, last_leaf: usize) -> NodeId {
        let target = Span {
            first: first_leaf.min(last_leaf),
            last: first_leaf.max(last_leaf),
        };
        let mut current = self.leaves[target.first];
        while !self.object(current).span.contains(&target) {
            current = self
                .object(current)
                .parent
                .expect("the root spans every leaf");
        }
        current
    }
}
