//! A small topographic query language over typed text objects.
//!
//! ```text
//! query := block
//! block := "[" TYPE test* block* "]"
//! test  := KEY ("=" | "!=") (BAREWORD | QUOTED)
//! ```
//!
//! A block binds an object of its type that passes all its tests. Child
//! blocks bind strict descendants of the parent's object, and consecutive
//! sibling blocks bind objects in left-to-right order without overlap.
//! `key=value` fails when the key is absent; `key!=value` succeeds.

mod eval;
mod parser;

use std::fmt;

use thiserror::Error;

pub use eval::{run_query, Binding, Match, QueryResult};

pub const DEFAULT_LIMIT: usize = 10_000;

/// Query language tag stored in frozen query bodies.
pub const LANGUAGE: &str = "tql";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TqlError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("unclosed block at {line}:{col}")]
    UnclosedBlock { line: usize, col: usize },
    #[error("unknown escape \\{escape} at {line}:{col}")]
    UnknownEscape {
        line: usize,
        col: usize,
        escape: char,
    },
    #[error("unknown object type {0:?}")]
    UnknownType(String),
    #[error("limit must be positive")]
    InvalidLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Eq,
    Ne,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Test {
    pub key: String,
    pub op: Op,
    pub value: String,
}

impl Test {
    pub fn accepts(&self, actual: Option<&str>) -> bool {
        match self.op {
            Op::Eq => actual == Some(self.value.as_str()),
            Op::Ne => actual != Some(self.value.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Block {
    pub object_type: String,
    pub tests: Vec<Test>,
    pub children: Vec<Block>,
}

impl Block {
    pub fn new(object_type: impl Into<String>) -> Self {
        Block {
            object_type: object_type.into(),
            tests: Vec::new(),
            children: Vec::new(),
        }
    }

    pub fn test(mut self, key: &str, op: Op, value: &str) -> Self {
        self.tests.push(Test {
            key: key.into(),
            op,
            value: value.into(),
        });
        self
    }

    pub fn child(mut self, child: Block) -> Self {
        self.children.push(child);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Query {
    pub root: Block,
}

impl Query {
    pub fn parse(text: &str) -> Result<Query, TqlError> {
        parser::parse(text)
    }

    /// Blocks in pre-order with their index paths; the root's path is empty.
    pub fn blocks(&self) -> Vec<(Vec<usize>, &Block)> {
        fn walk<'a>(block: &'a Block, path: Vec<usize>, out: &mut Vec<(Vec<usize>, &'a Block)>) {
            out.push((path.clone(), block));
            for (i, child) in block.children.iter().enumerate() {
                let mut p = path.clone();
                p.push(i);
                walk(child, p, out);
            }
        }
        let mut out = Vec::new();
        walk(&self.root, Vec::new(), &mut out);
        out
    }
}

fn write_value(f: &mut fmt::Formatter<'_>, value: &str) -> fmt::Result {
    if !value.is_empty() && value.chars().all(|c| !c.is_whitespace() && !"[]=!\"\\".contains(c)) {
        return f.write_str(value);
    }
    f.write_str("\"")?;
    for c in value.chars() {
        if c == '"' || c == '\\' {
            f.write_str("\\")?;
        }
        write!(f, "{c}")?;
    }
    f.write_str("\"")
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}", self.object_type)?;
        for t in &self.tests {
            let op = match t.op {
                Op::Eq => "=",
                Op::Ne => "!=",
            };
            write!(f, " {}{op}", t.key)?;
            write_value(f, &t.value)?;
        }
        for c in &self.children {
            write!(f, " {c}")?;
        }
        f.write_str("]")
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}
