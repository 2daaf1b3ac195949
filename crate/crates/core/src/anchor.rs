//! Work-level symbolic anchors.
//!
//! An anchor names a work, or one object inside it, by the path of
//! `(type, key)` pairs leading from the root:
//!
//! ```text
//! anchor := WORKID ":" [ TYPE "/" KEY { "/" TYPE "/" KEY } ]
//! ```
//!
//! Segments are percent-encoded; the unreserved charset is `[A-Za-z0-9_.-]`.
//! Anchors are the only link between the sources store and the annotation
//! store, so the canonical text form must round-trip exactly.

use std::fmt;
use std::str::FromStr;

use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Bytes that are percent-encoded inside an anchor segment.
pub const SEGMENT: &AsciiSet = &NON_ALPHANUMERIC.remove(b'_').remove(b'.').remove(b'-');

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnchorError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("empty segment at position {position}")]
    EmptySegment { position: usize },
    #[error("dangling type without key at position {position}")]
    DanglingType { position: usize },
}

/// Percent-encode one anchor segment.
pub fn encode_segment(raw: &str) -> String {
    utf8_percent_encode(raw, SEGMENT).to_string()
}

/// Validate and decode one segment; `offset` is the segment's byte position
/// in the enclosing text, used for error reporting.
pub fn decode_segment(text: &str, offset: usize) -> Result<String, AnchorError> {
    if text.is_empty() {
        return Err(AnchorError::EmptySegment { position: offset });
    }
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if b == b'%' {
            let ok = i + 2 < bytes.len()
                && bytes[i + 1].is_ascii_hexdigit()
                && bytes[i + 2].is_ascii_hexdigit();
            if !ok {
                return Err(AnchorError::Syntax {
                    position: offset + i,
                    message: "malformed percent escape".into(),
                });
            }
            i += 3;
        } else if b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'-') {
            i += 1;
        } else {
            let ch = text[i..].chars().next().unwrap_or('?');
            return Err(AnchorError::Syntax {
                position: offset + i,
                message: format!("character {ch:?} must be percent-encoded"),
            });
        }
    }
    percent_decode_str(text)
        .decode_utf8()
        .map(|s| s.into_owned())
        .map_err(|_| AnchorError::Syntax {
            position: offset,
            message: "percent escapes do not decode to UTF-8".into(),
        })
}

/// One `(object_type, key)` step of an anchor path.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Step {
    pub object_type: String,
    pub key: String,
}

impl Step {
    pub fn new(object_type: impl Into<String>, key: impl Into<String>) -> Self {
        Step {
            object_type: object_type.into(),
            key: key.into(),
        }
    }
}

/// A symbolic identifier for a work or one of its fragments.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Anchor {
    work: String,
    path: Vec<Step>,
}

impl Anchor {
    /// The anchor of a work's root object.
    pub fn root(work: impl Into<String>) -> Self {
        Anchor {
            work: work.into(),
            path: Vec::new(),
        }
    }

    pub fn new(work: impl Into<String>, path: Vec<Step>) -> Self {
        Anchor {
            work: work.into(),
            path,
        }
    }

    /// Extend the path by one step.
    pub fn child(&self, object_type: impl Into<String>, key: impl Into<String>) -> Self {
        let mut path = self.path.clone();
        path.push(Step::new(object_type, key));
        Anchor {
            work: self.work.clone(),
            path,
        }
    }

    pub fn work(&self) -> &str {
        &self.work
    }

    pub fn path(&self) -> &[Step] {
        &self.path
    }

    pub fn is_root(&self) -> bool {
        self.path.is_empty()
    }

    /// The enclosing anchor, or `None` for a work root.
    pub fn parent(&self) -> Option<Anchor> {
        if self.path.is_empty() {
            return None;
        }
        Some(Anchor {
            work: self.work.clone(),
            path: self.path[..self.path.len() - 1].to_vec(),
        })
    }

    /// All proper prefixes, from the work root downwards.
    pub fn ancestors(&self) -> impl Iterator<Item = Anchor> + '_ {
        (0..self.path.len()).map(move |n| Anchor {
            work: self.work.clone(),
            path: self.path[..n].to_vec(),
        })
    }

    /// True when `self` is a proper prefix of `other` within the same work.
    pub fn is_ancestor_of(&self, other: &Anchor) -> bool {
        self.work == other.work
            && self.path.len() < other.path.len()
            && other.path[..self.path.len()] == self.path[..]
    }

    /// Parse the canonical text form.
    pub fn parse(text: &str) -> Result<Anchor, AnchorError> {
        let colon = text.find(':').ok_or_else(|| AnchorError::Syntax {
            position: text.len(),
            message: "expected ':' after work id".into(),
        })?;
        let work = decode_segment(&text[..colon], 0)?;
        let rest = &text[colon + 1..];
        let base = colon + 1;
        if rest.is_empty() {
            return Ok(Anchor::root(work));
        }
        let mut segments = Vec::new();
        let mut offset = base;
        for raw in rest.split('/') {
            segments.push((decode_segment(raw, offset)?, offset));
            offset += raw.len() + 1;
        }
        if segments.len() % 2 == 1 {
            let (_, position) = segments[segments.len() - 1];
            return Err(AnchorError::DanglingType { position });
        }
        let path = segments
            .chunks(2)
            .map(|pair| Step::new(pair[0].0.clone(), pair[1].0.clone()))
            .collect();
        Ok(Anchor { work, path })
    }
}

impl fmt::Display for Anchor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", encode_segment(&self.work))?;
        for (i, step) in self.path.iter().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            write!(
                f,
                "{}/{}",
                encode_segment(&step.object_type),
                encode_segment(&step.key)
            )?;
        }
        Ok(())
    }
}

impl FromStr for Anchor {
    type Err = AnchorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Anchor::parse(s)
    }
}

impl Serialize for Anchor {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Anchor {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Anchor::parse(&text).map_err(serde::de::Error::custom)
    }
}
