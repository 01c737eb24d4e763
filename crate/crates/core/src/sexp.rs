//! Reader for the parenthesized notation shared by rule files, chunk
//! patterns, feature-structure literals, decision trees and SPL.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    /// Bare or `|bar-quoted|` symbol.
    Sym(String),
    /// Double-quoted string.
    Str(String),
    List(Vec<Sexp>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ReadError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl Sexp {
    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Sexp::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(items) => Some(items),
            _ => None,
        }
    }

    pub fn is_sym(&self, name: &str) -> bool {
        matches!(self, Sexp::Sym(s) if s.eq_ignore_ascii_case(name))
    }
}

/// Symbols that cannot be written bare are wrapped in `|...|`.
pub fn write_symbol(out: &mut String, s: &str) {
    let needs_bars = s.is_empty()
        || s.chars().any(|c| c.is_whitespace() || matches!(c, '(' | ')' | '"' | ';' | '|'));
    if needs_bars {
        out.push('|');
        out.push_str(s);
        out.push('|');
    } else {
        out.push_str(s);
    }
}

pub fn write_string(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_sexp(&mut s, self);
        f.write_str(&s)
    }
}

fn write_sexp(out: &mut String, e: &Sexp) {
    match e {
        Sexp::Sym(s) => write_symbol(out, s),
        Sexp::Str(s) => write_string(out, s),
        Sexp::List(items) => {
            out.push('(');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                write_sexp(out, item);
            }
            out.push(')');
        }
    }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Reader { chars: text.chars().peekable(), line: 1, column: 1 }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, message: impl Into<String>) -> ReadError {
        ReadError { line: self.line, column: self.column, message: message.into() }
    }

    fn skip_blank(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Option<(Sexp, usize)>, ReadError> {
        self.skip_blank();
        let line = self.line;
        let Some(&c) = self.chars.peek() else {
            return Ok(None);
        };
        let e = match c {
            '(' => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_blank();
                    match self.chars.peek() {
                        None => return Err(self.error(format!("unclosed list opened on line {line}"))),
                        Some(')') => {
                            self.bump();
                            break;
                        }
                        Some(_) => {
                            let (item, _) = self.read()?.expect("peeked a character");
                            items.push(item);
                        }
                    }
                }
                Sexp::List(items)
            }
            ')' => return Err(self.error("unexpected ')'")),
            '"' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(self.error("unterminated string")),
                        Some('\\') => match self.bump() {
                            Some(c) => s.push(c),
                            None => return Err(self.error("unterminated string")),
                        },
                        Some('"') => break,
                        Some(c) => s.push(c),
                    }
                }
                Sexp::Str(s)
            }
            '|' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(self.error("unterminated |symbol|")),
                        Some('|') => break,
                        Some(c) => s.push(c),
                    }
                }
                Sexp::Sym(s)
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || matches!(c, '(' | ')' | '"' | ';') {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                Sexp::Sym(s)
            }
        };
        Ok(Some((e, line)))
    }
}

/// Reads every top-level expression, returning each with its starting line.
pub fn read_all(text: &str) -> Result<Vec<(Sexp, usize)>, ReadError> {
    let mut reader = Reader::new(text);
    let mut out = Vec::new();
    while let Some(item) = reader.read()? {
        out.push(item);
    }
    Ok(out)
}

/// Reads exactly one expression.
pub fn read_one(text: &str) -> Result<Sexp, ReadError> {
    let mut items = read_all(text)?;
    match items.len() {
        1 => Ok(items.pop().unwrap().0),
        0 => Err(ReadError { line: 1, column: 1, message: "empty input".into() }),
        _ => Err(ReadError {
            line: items[1].1,
            column: 1,
            message: "trailing input after expression".into(),
        }),
    }
}
