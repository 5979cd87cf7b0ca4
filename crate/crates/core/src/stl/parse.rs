//! Recursive-descent parser for the textual formula grammar.
//!
//! ```text
//! formula := "true" | atom | "not" formula | formula ("and"|"or") formula
//!          | formula "U" window? formula | ("F"|"G") window? formula | "(" formula ")"
//! atom    := "x" (">="|"<=") number
//! window  := "[" number "," number "]"
//! ```
//!
//! Precedence, tightest first: `not`, then `F`/`G`/`U` (right-associative),
//! then `and`, then `or`.

use thiserror::Error;

use super::{Comparison, Formula, TimeWindow, WindowError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected {}, found {found}", .expected.join(" | "))]
    Syntax {
        offset: usize,
        expected: Vec<&'static str>,
        found: String,
    },
    #[error("invalid window at byte {offset}: {source}")]
    Window {
        offset: usize,
        #[source]
        source: WindowError,
    },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::Window { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Ge,
    Le,
    Num(f64),
    X,
    True,
    Not,
    And,
    Or,
    Until,
    Eventually,
    Globally,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::LParen => "\"(\"".into(),
            Tok::RParen => "\")\"".into(),
            Tok::LBracket => "\"[\"".into(),
            Tok::RBracket => "\"]\"".into(),
            Tok::Comma => "\",\"".into(),
            Tok::Ge => "\">=\"".into(),
            Tok::Le => "\"<=\"".into(),
            Tok::Num(v) => format!("number {v}"),
            Tok::X => "\"x\"".into(),
            Tok::True => "\"true\"".into(),
            Tok::Not => "\"not\"".into(),
            Tok::And => "\"and\"".into(),
            Tok::Or => "\"or\"".into(),
            Tok::Until => "\"U\"".into(),
            Tok::Eventually => "\"F\"".into(),
            Tok::Globally => "\"G\"".into(),
            Tok::End => "end of input".into(),
        }
    }
}

const FORMULA_START: &[&str] = &["\"true\"", "\"x\"", "\"not\"", "\"F\"", "\"G\"", "\"(\""];

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'[' => Tok::LBracket,
            b']' => Tok::RBracket,
            b',' => Tok::Comma,
            b'>' | b'<' if bytes.get(i + 1) == Some(&b'=') => {
                i += 1;
                if c == b'>' {
                    Tok::Ge
                } else {
                    Tok::Le
                }
            }
            b'0'..=b'9' | b'-' | b'+' | b'.' => {
                let end = scan_number(bytes, i);
                let lexeme = &text[i..end];
                match lexeme.parse::<f64>() {
                    Ok(v) if v.is_finite() => {
                        i = end - 1;
                        Tok::Num(v)
                    }
                    _ => {
                        return Err(ParseError::Syntax {
                            offset: start,
                            expected: vec!["finite number"],
                            found: format!("{lexeme:?}"),
                        })
                    }
                }
            }
            c if c.is_ascii_alphabetic() => {
                let mut end = i;
                while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                    end += 1;
                }
                let word = &text[i..end];
                let tok = match word {
                    "x" => Tok::X,
                    "true" => Tok::True,
                    "not" => Tok::Not,
                    "and" => Tok::And,
                    "or" => Tok::Or,
                    "U" => Tok::Until,
                    "F" => Tok::Eventually,
                    "G" => Tok::Globally,
                    _ => {
                        return Err(ParseError::Syntax {
                            offset: start,
                            expected: vec!["keyword or \"x\""],
                            found: format!("{word:?}"),
                        })
                    }
                };
                i = end - 1;
                tok
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: start,
                    expected: vec!["token"],
                    found: format!("{ch:?}"),
                });
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

fn scan_number(bytes: &[u8], mut i: usize) -> usize {
    if matches!(bytes.get(i), Some(b'-' | b'+')) {
        i += 1;
    }
    while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
        i += 1;
    }
    if matches!(bytes.get(i), Some(b'e' | b'E')) {
        let mut j = i + 1;
        if matches!(bytes.get(j), Some(b'-' | b'+')) {
            j += 1;
        }
        if bytes.get(j).is_some_and(|b| b.is_ascii_digit()) {
            i = j;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
        }
    }
    i
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&'static str]) -> ParseError {
        ParseError::Syntax {
            offset: self.offset(),
            expected: expected.to_vec(),
            found: self.peek().describe(),
        }
    }

    fn expect(&mut self, tok: Tok, name: &'static str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[name]))
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        match *self.peek() {
            Tok::Num(v) => {
                self.bump();
                Ok(v)
            }
            _ => Err(self.error(&["number"])),
        }
    }

    fn or_expr(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.and_expr()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.and_expr()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.temporal()?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.temporal()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn temporal(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.unary()?;
        if *self.peek() == Tok::Until {
            self.bump();
            let window = self.window()?;
            let rhs = self.temporal()?;
            return Ok(Formula::until(lhs, rhs, window));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Tok::Not => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Eventually => {
                self.bump();
                let window = self.window()?;
                Ok(Formula::eventually(self.temporal()?, window))
            }
            Tok::Globally => {
                self.bump();
                let window = self.window()?;
                Ok(Formula::globally(self.temporal()?, window))
            }
            _ => self.primary(),
        }
    }

    fn window(&mut self) -> Result<Option<TimeWindow>, ParseError> {
        if *self.peek() != Tok::LBracket {
            return Ok(None);
        }
        let offset = self.offset();
        self.bump();
        let lo = self.number()?;
        self.expect(Tok::Comma, "\",\"")?;
        let hi = self.number()?;
        self.expect(Tok::RBracket, "\"]\"")?;
        TimeWindow::new(lo, hi)
            .map(Some)
            .map_err(|source| ParseError::Window { offset, source })
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Tok::True => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::X => {
                self.bump();
                let cmp = match self.peek() {
                    Tok::Ge => Comparison::Ge,
                    Tok::Le => Comparison::Le,
                    _ => return Err(self.error(&["\">=\"", "\"<=\""])),
                };
                self.bump();
                let threshold = self.number()?;
                Ok(Formula::Atom { cmp, threshold })
            }
            Tok::LParen => {
                self.bump();
                let inner = self.or_expr()?;
                self.expect(Tok::RParen, "\")\"")?;
                Ok(inner)
            }
            _ => Err(self.error(FORMULA_START)),
        }
    }
}

/// Parses one formula; the whole input must be consumed.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut parser = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    let f = parser.or_expr()?;
    if *parser.peek() != Tok::End {
        return Err(parser.error(&["\"and\"", "\"or\"", "\"U\"", "end of input"]));
    }
    Ok(f)
}
