//! One token grammar for all four languages. Keywords are not reserved at
//! this level: every bare word is a [`Tok::Word`] and parsers match words
//! case-insensitively.

use crate::error::{Error, Result, Span};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Word(String),
    Str(String),
    Int(i64),
    Real(f64),
    /// Punctuation and operators, normalized: `→` is `->`, `∧` is `^`,
    /// `!=` is `<>`, `$<$` is `<`.
    Sym(&'static str),
    Eof,
}

impl Tok {
    pub fn is_kw(&self, kw: &str) -> bool {
        matches!(self, Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    pub fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Str(s) => format!("string '{s}'"),
            Tok::Int(i) => format!("number {i}"),
            Tok::Real(r) => format!("number {r}"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

const SYMBOLS: &[&str] = &[
    "$<$", "->", "..", "<=", ">=", "<>", "!=", "(", ")", "{", "}", "[", "]", ",", ";", ".", "*", "=", "<", ">",
    "+", "-", "/", ":", "%", "^", "&",
];

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
}

impl Cursor {
    fn peek(&self, k: usize) -> Option<char> {
        self.chars.get(self.pos + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn span(&self) -> Span {
        Span::new(self.line, self.col)
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek(i) == Some(c))
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '#'
}

/// `attr=` as a prefix of a descriptor literal.
fn is_attr_eq(s: &str) -> bool {
    let Some(name) = s.strip_suffix('=') else {
        return false;
    };
    let mut cs = name.chars();
    cs.next().is_some_and(is_ident_start) && cs.all(is_ident_char)
}

pub fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut c = Cursor {
        chars: text.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        while c.peek(0).is_some_and(char::is_whitespace) {
            c.bump();
        }
        let span = c.span();
        let Some(ch) = c.peek(0) else {
            out.push(Token { tok: Tok::Eof, span });
            return Ok(out);
        };
        if c.starts_with("/*") {
            c.bump();
            c.bump();
            loop {
                if c.starts_with("*/") {
                    c.bump();
                    c.bump();
                    break;
                }
                if c.bump().is_none() {
                    return Err(Error::Lex {
                        span,
                        message: "unterminated comment".into(),
                    });
                }
            }
            continue;
        }
        if c.starts_with("--") {
            while c.peek(0).is_some_and(|x| x != '\n') {
                c.bump();
            }
            continue;
        }
        let tok = if ch == '\'' {
            lex_string(&mut c, span)?
        } else if ch.is_ascii_digit() {
            lex_number(&mut c, span)?
        } else if is_ident_start(ch) {
            let mut w = String::new();
            while let Some(x) = c.peek(0).filter(|x| is_ident_char(*x)) {
                w.push(x);
                c.bump();
            }
            Tok::Word(w)
        } else if ch == '→' {
            c.bump();
            Tok::Sym("->")
        } else if ch == '∧' {
            c.bump();
            Tok::Sym("^")
        } else if let Some(s) = SYMBOLS.iter().find(|s| c.starts_with(s)) {
            for _ in 0..s.chars().count() {
                c.bump();
            }
            Tok::Sym(match *s {
                "$<$" => "<",
                "!=" => "<>",
                s => s,
            })
        } else {
            return Err(Error::Lex {
                span,
                message: format!("unexpected character `{ch}`"),
            });
        };
        out.push(Token { tok, span });
    }
}

/// Standard SQL strings with `''` escapes, plus the descriptor literal
/// `'ITEM='A''`, read as the string `ITEM='A'`.
fn lex_string(c: &mut Cursor, span: Span) -> Result<Tok> {
    c.bump();
    let mut s = String::new();
    let unterminated = || Error::Lex {
        span,
        message: "unterminated string".into(),
    };
    loop {
        match c.bump() {
            None => return Err(unterminated()),
            Some('\'') if c.peek(0) == Some('\'') => {
                c.bump();
                s.push('\'');
            }
            Some('\'') => {
                let glued = c
                    .peek(0)
                    .is_some_and(|x| x.is_alphanumeric() || x == '_' || x == '[');
                if is_attr_eq(&s) && glued {
                    s.push('\'');
                    loop {
                        match c.bump() {
                            None => return Err(unterminated()),
                            Some('\'') if c.peek(0) == Some('\'') => {
                                c.bump();
                                s.push('\'');
                                return Ok(Tok::Str(s));
                            }
                            Some('\'') => return Err(unterminated()),
                            Some(x) => s.push(x),
                        }
                    }
                }
                return Ok(Tok::Str(s));
            }
            Some(x) => s.push(x),
        }
    }
}

fn lex_number(c: &mut Cursor, span: Span) -> Result<Tok> {
    let mut s = String::new();
    while let Some(x) = c.peek(0).filter(char::is_ascii_digit) {
        s.push(x);
        c.bump();
    }
    let mut real = false;
    if c.peek(0) == Some('.') && c.peek(1).is_some_and(|x| x.is_ascii_digit()) {
        real = true;
        s.push('.');
        c.bump();
        while let Some(x) = c.peek(0).filter(char::is_ascii_digit) {
            s.push(x);
            c.bump();
        }
    }
    if matches!(c.peek(0), Some('e' | 'E'))
        && (c.peek(1).is_some_and(|x| x.is_ascii_digit())
            || (matches!(c.peek(1), Some('+' | '-')) && c.peek(2).is_some_and(|x| x.is_ascii_digit())))
    {
        real = true;
        s.push('e');
        c.bump();
        if let Some(sign) = c.peek(0).filter(|x| matches!(x, '+' | '-')) {
            s.push(sign);
            c.bump();
        }
        while let Some(x) = c.peek(0).filter(char::is_ascii_digit) {
            s.push(x);
            c.bump();
        }
    }
    let bad = || Error::Lex {
        span,
        message: format!("malformed number `{s}`"),
    };
    if real {
        s.parse::<f64>().map(Tok::Real).map_err(|_| bad())
    } else {
        s.parse::<i64>().map(Tok::Int).map_err(|_| bad())
    }
}
