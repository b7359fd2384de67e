//! A small s-expression reader with source positions.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SexpKind {
    Atom(String),
    Str(String),
    List(Vec<Sexp>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sexp {
    pub kind: SexpKind,
    pub pos: Pos,
}

impl Sexp {
    pub fn atom(&self) -> Option<&str> {
        match &self.kind {
            SexpKind::Atom(a) => Some(a),
            _ => None,
        }
    }
    pub fn list(&self) -> Option<&[Sexp]> {
        match &self.kind {
            SexpKind::List(l) => Some(l),
            _ => None,
        }
    }
    /// Head atom of a list form.
    pub fn head(&self) -> Option<&str> {
        self.list().and_then(|l| l.first()).and_then(|h| h.atom())
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            SexpKind::Atom(a) => write!(f, "{a}"),
            SexpKind::Str(s) => write!(f, "{s:?}"),
            SexpKind::List(l) => {
                write!(f, "(")?;
                for (i, x) in l.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("syntax error at {pos}: {msg}")]
pub struct SyntaxError {
    pub pos: Pos,
    pub msg: String,
}

/// Reads every top-level form. `;` starts a comment running to end of line.
pub fn read_all(text: &str) -> Result<Vec<Sexp>, SyntaxError> {
    let mut r = Reader { chars: text.chars().collect(), i: 0, line: 1, col: 1 };
    let mut out = Vec::new();
    loop {
        r.skip_ws();
        if r.peek().is_none() {
            return Ok(out);
        }
        out.push(r.read()?);
    }
}

struct Reader {
    chars: Vec<char>,
    i: usize,
    line: usize,
    col: usize,
}

impl Reader {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).copied()
    }
    fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.col }
    }
    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }
    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c == ';' {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }
    fn read(&mut self) -> Result<Sexp, SyntaxError> {
        self.skip_ws();
        let pos = self.pos();
        match self.peek() {
            None => Err(SyntaxError { pos, msg: "unexpected end of input".into() }),
            Some(')') => Err(SyntaxError { pos, msg: "unbalanced ')'".into() }),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.peek() {
                        None => return Err(SyntaxError { pos, msg: "unclosed '('".into() }),
                        Some(')') => {
                            self.bump();
                            return Ok(Sexp { kind: SexpKind::List(items), pos });
                        }
                        _ => items.push(self.read()?),
                    }
                }
            }
            Some('"') => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(SyntaxError { pos, msg: "unterminated string".into() }),
                        Some('"') => return Ok(Sexp { kind: SexpKind::Str(s), pos }),
                        Some('\\') => match self.bump() {
                            Some('n') => s.push('\n'),
                            Some(c) => s.push(c),
                            None => return Err(SyntaxError { pos, msg: "unterminated string".into() }),
                        },
                        Some(c) => s.push(c),
                    }
                }
            }
            Some(_) => {
                let mut a = String::new();
                while let Some(c) = self.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == '"' || c == ';' {
                        break;
                    }
                    a.push(c);
                    self.bump();
                }
                Ok(Sexp { kind: SexpKind::Atom(a), pos })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_forms_with_positions() {
        let v = read_all("; c\n(a (b \"x y\") c)\n(d)").unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v[0].pos, Pos { line: 2, col: 1 });
        assert_eq!(v[0].to_string(), "(a (b \"x y\") c)");
        assert_eq!(v[1].head(), Some("d"));
    }

    #[test]
    fn reports_unbalanced() {
        let e = read_all("(a (b)").unwrap_err();
        assert_eq!(e.pos, Pos { line: 1, col: 1 });
        assert!(read_all(")").is_err());
    }
}
