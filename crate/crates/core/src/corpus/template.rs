//! `{field}` join templates over record fields.
//!
//! `{name}` inserts a field, `{{` and `}}` are literal braces, and the escapes
//! `\n`, `\t` and `\\` are expanded so templates can be passed on a shell
//! command line. Any other backslash is kept literally.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Literal(String),
    Field(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    source: String,
    pieces: Vec<Piece>,
}

impl Template {
    pub fn parse(source: &str) -> Result<Self> {
        let mut pieces = Vec::new();
        let mut literal = String::new();
        let mut chars = source.chars().peekable();
        while let Some(c) = chars.next() {
            match c {
                '{' if chars.peek() == Some(&'{') => {
                    chars.next();
                    literal.push('{');
                }
                '}' if chars.peek() == Some(&'}') => {
                    chars.next();
                    literal.push('}');
                }
                '{' => {
                    let mut name = String::new();
                    loop {
                        match chars.next() {
                            Some('}') => break,
                            Some('{') => {
                                return Err(Error::Template(format!(
                                    "nested `{{` in placeholder of `{source}`"
                                )))
                            }
                            Some(ch) => name.push(ch),
                            None => {
                                return Err(Error::Template(format!(
                                    "unterminated placeholder in `{source}`"
                                )))
                            }
                        }
                    }
                    let name = name.trim();
                    if name.is_empty() {
                        return Err(Error::Template(format!("empty placeholder in `{source}`")));
                    }
                    if !literal.is_empty() {
                        pieces.push(Piece::Literal(std::mem::take(&mut literal)));
                    }
                    pieces.push(Piece::Field(name.to_string()));
                }
                '}' => {
                    return Err(Error::Template(format!(
                        "unmatched `}}` in `{source}` (write `}}}}` for a literal brace)"
                    )))
                }
                '\\' => match chars.peek() {
                    Some('n') => {
                        chars.next();
                        literal.push('\n');
                    }
                    Some('t') => {
                        chars.next();
                        literal.push('\t');
                    }
                    Some('\\') => {
                        chars.next();
                        literal.push('\\');
                    }
                    _ => literal.push('\\'),
                },
                other => literal.push(other),
            }
        }
        if !literal.is_empty() {
            pieces.push(Piece::Literal(literal));
        }
        if !pieces.iter().any(|p| matches!(p, Piece::Field(_))) {
            return Err(Error::Template(format!("`{source}` references no field")));
        }
        Ok(Self {
            source: source.to_string(),
            pieces,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn fields(&self) -> impl Iterator<Item = &str> {
        self.pieces.iter().filter_map(|p| match p {
            Piece::Field(name) => Some(name.as_str()),
            Piece::Literal(_) => None,
        })
    }

    /// Renders the template; missing fields render as empty strings.
    ///
    /// Returns `None` when none of the referenced fields is present.
    pub fn render<'a>(&self, lookup: impl Fn(&str) -> Option<&'a str>) -> Option<String> {
        let mut out = String::new();
        let mut matched = false;
        for piece in &self.pieces {
            match piece {
                Piece::Literal(s) => out.push_str(s),
                Piece::Field(name) => {
                    if let Some(value) = lookup(name) {
                        matched = true;
                        out.push_str(value);
                    }
                }
            }
        }
        matched.then_some(out)
    }
}
