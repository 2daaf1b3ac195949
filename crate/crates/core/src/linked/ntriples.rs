//! A line-oriented N-Triples subset: IRI subjects and predicates, IRI or
//! plain literal objects.

use std::fmt::{self, Write as _};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Iri(String),
    Literal(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: Term,
}

impl Triple {
    pub fn iri(subject: &str, predicate: &str, object: &str) -> Triple {
        Triple {
            subject: subject.to_string(),
            predicate: predicate.to_string(),
            object: Term::Iri(object.to_string()),
        }
    }

    pub fn literal(subject: &str, predicate: &str, value: &str) -> Triple {
        Triple {
            subject: subject.to_string(),
            predicate: predicate.to_string(),
            object: Term::Literal(value.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub line: usize,
    pub message: String,
}

fn escape_literal(out: &mut String, value: &str) {
    for c in value.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 || c == '\u{7f}' => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}> <{}> ", self.subject, self.predicate)?;
        match &self.object {
            Term::Iri(iri) => write!(f, "<{iri}>")?,
            Term::Literal(value) => {
                let mut s = String::with_capacity(value.len() + 2);
                s.push('"');
                escape_literal(&mut s, value);
                s.push('"');
                f.write_str(&s)?;
            }
        }
        f.write_str(" .")
    }
}

/// Serialize triples one per line, each line terminated by a newline.
pub fn write_document(triples: &[Triple]) -> String {
    let mut out = String::new();
    for t in triples {
        let _ = writeln!(out, "{t}");
    }
    out
}

struct Cursor<'a> {
    rest: &'a str,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            line: self.line,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        self.rest = self.rest.trim_start_matches([' ', '\t']);
    }

    fn iri(&mut self, what: &str) -> Result<String, SyntaxError> {
        self.skip_ws();
        let body = self
            .rest
            .strip_prefix('<')
            .ok_or_else(|| self.err(format!("expected <iri> for {what}")))?;
        let end = body
            .find('>')
            .ok_or_else(|| self.err(format!("unterminated iri in {what}")))?;
        let iri = &body[..end];
        if iri.is_empty() {
            return Err(self.err(format!("empty iri in {what}")));
        }
        if let Some(c) = iri.chars().find(|c| c.is_whitespace() || matches!(c, '<' | '"' | '{' | '}' | '|' | '^' | '`' | '\\')) {
            return Err(self.err(format!("character {c:?} not allowed in iri")));
        }
        self.rest = &body[end + 1..];
        Ok(iri.to_string())
    }

    fn literal(&mut self) -> Result<String, SyntaxError> {
        let mut chars = self.rest[1..].char_indices();
        let mut value = String::new();
        loop {
            let (i, c) = chars
                .next()
                .ok_or_else(|| self.err("unterminated literal"))?;
            match c {
                '"' => {
                    self.rest = &self.rest[1 + i + 1..];
                    break;
                }
                '\\' => {
                    let (_, e) = chars
                        .next()
                        .ok_or_else(|| self.err("unterminated escape"))?;
                    match e {
                        't' => value.push('\t'),
                        'b' => value.push('\u{8}'),
                        'n' => value.push('\n'),
                        'r' => value.push('\r'),
                        'f' => value.push('\u{c}'),
                        '"' => value.push('"'),
                        '\'' => value.push('\''),
                        '\\' => value.push('\\'),
                        'u' | 'U' => {
                            let width = if e == 'u' { 4 } else { 8 };
                            let hex: String = chars.by_ref().take(width).map(|(_, c)| c).collect();
                            let decoded = (hex.len() == width)
                                .then(|| u32::from_str_radix(&hex, 16).ok())
                                .flatten()
                                .and_then(char::from_u32)
                                .ok_or_else(|| self.err(format!("bad \\{e} escape")))?;
                            value.push(decoded);
                        }
                        other => return Err(self.err(format!("unknown escape \\{other}"))),
                    }
                }
                '\n' | '\r' => return Err(self.err("line break inside literal")),
                c => value.push(c),
            }
        }
        if self.rest.starts_with("^^") || self.rest.starts_with('@') {
            return Err(self.err("typed and language-tagged literals are not supported"));
        }
        Ok(value)
    }

    fn object(&mut self) -> Result<Term, SyntaxError> {
        self.skip_ws();
        if self.rest.starts_with('"') {
            self.literal().map(Term::Literal)
        } else if self.rest.starts_with('<') {
            self.iri("object").map(Term::Iri)
        } else {
            Err(self.err("expected <iri> or \"literal\" as object"))
        }
    }
}

/// Parse a document; blank lines and `#` comment lines are skipped.
pub fn parse_document(text: &str) -> Result<Vec<Triple>, SyntaxError> {
    let mut triples = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut cur = Cursor {
            rest: line,
            line: n + 1,
        };
        let subject = cur.iri("subject")?;
        let predicate = cur.iri("predicate")?;
        let object = cur.object()?;
        cur.skip_ws();
        if cur.rest.trim_end() != "." {
            return Err(cur.err("missing terminal \" .\""));
        }
        triples.push(Triple {
            subject,
            predicate,
            object,
        });
    }
    Ok(triples)
}
