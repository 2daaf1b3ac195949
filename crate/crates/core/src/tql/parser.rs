use std::iter::Peekable;
use std::str::Chars;

use super::{Block, Op, Query, Test, TqlError};

struct Cursor<'a> {
    chars: Peekable<Chars<'a>>,
    line: usize,
    col: usize,
}

fn is_word_char(c: char) -> bool {
    !c.is_whitespace() && !matches!(c, '[' | ']' | '=' | '!' | '"')
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor {
            chars: text.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    fn syntax(&self, message: impl Into<String>) -> TqlError {
        TqlError::Syntax {
            line: self.line,
            col: self.col,
            message: message.into(),
        }
    }

    fn word(&mut self) -> Option<String> {
        let mut out = String::new();
        while let Some(c) = self.peek().filter(|&c| is_word_char(c)) {
            out.push(c);
            self.bump();
        }
        (!out.is_empty()).then_some(out)
    }

    fn quoted(&mut self) -> Result<String, TqlError> {
        self.bump();
        let mut out = String::new();
        loop {
            let (line, col) = (self.line, self.col);
            match self.bump() {
                None => return Err(self.syntax("unterminated quoted value")),
                Some('"') => return Ok(out),
                Some('\\') => match self.bump() {
                    Some(c @ ('"' | '\\')) => out.push(c),
                    Some(c) => return Err(TqlError::UnknownEscape { line, col, escape: c }),
                    None => return Err(self.syntax("unterminated quoted value")),
                },
                Some(c) => out.push(c),
            }
        }
    }

    fn test(&mut self) -> Result<Test, TqlError> {
        let key = self.word().ok_or_else(|| self.syntax("expected feature key"))?;
        self.skip_ws();
        let op = match self.peek() {
            Some('=') => {
                self.bump();
                Op::Eq
            }
            Some('!') => {
                self.bump();
                if self.peek() != Some('=') {
                    return Err(self.syntax("expected '=' after '!'"));
                }
                self.bump();
                Op::Ne
            }
            _ => return Err(self.syntax("expected '=' or '!='")),
        };
        self.skip_ws();
        let value = match self.peek() {
            Some('"') => self.quoted()?,
            _ => self.word().ok_or_else(|| self.syntax("expected feature value"))?,
        };
        Ok(Test { key, op, value })
    }

    /// Parses a block whose opening bracket has been consumed.
    fn block(&mut self) -> Result<Block, TqlError> {
        self.skip_ws();
        let object_type = self.word().ok_or_else(|| self.syntax("expected object type"))?;
        let mut block = Block {
            object_type,
            tests: Vec::new(),
            children: Vec::new(),
        };
        loop {
            self.skip_ws();
            match self.peek() {
                None => {
                    return Err(TqlError::UnclosedBlock {
                        line: self.line,
                        col: self.col,
                    })
                }
                Some(']') => {
                    self.bump();
                    return Ok(block);
                }
                Some('[') => {
                    self.bump();
                    block.children.push(self.block()?);
                }
                Some(c) if is_word_char(c) => {
                    if !block.children.is_empty() {
                        return Err(self.syntax("feature tests must precede child blocks"));
                    }
                    block.tests.push(self.test()?);
                }
                Some(c) => return Err(self.syntax(format!("unexpected character {c:?}"))),
            }
        }
    }
}

pub fn parse(text: &str) -> Result<Query, TqlError> {
    let mut cursor = Cursor::new(text);
    cursor.skip_ws();
    if cursor.peek() != Some('[') {
        return Err(cursor.syntax("expected '['"));
    }
    cursor.bump();
    let root = cursor.block()?;
    cursor.skip_ws();
    if cursor.peek().is_some() {
        return Err(cursor.syntax("unexpected input after query"));
    }
    Ok(Query { root })
}
