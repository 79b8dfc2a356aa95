//! Recursive-descent parser for the coefficient grammar:
//!
//! ```text
//! expr   := ["-"] term { ("+"|"-") term } ;
//! term   := factor { ("*"|"/") factor } ;
//! factor := base [ "^" ["-"] integer ] ;
//! base   := number | ident | "(" expr ")" | func "(" expr ")" ;
//! ```

use thiserror::Error;

use super::{Expr, Func, Number, SymbolUniverse};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    UnknownIdentifier(String),
    Arity { func: &'static str, got: usize },
}

/// A parse failure at a 1-based character column.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("at position {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Number(s) => format!("number `{s}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn syntax(position: usize, message: impl Into<String>) -> ParseError {
    ParseError { position, message: message.into(), kind: ParseErrorKind::Syntax }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            out.push((tok, pos));
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                } else {
                    return Err(syntax(j + 1, "expected digits in number exponent"));
                }
            }
            out.push((Tok::Number(chars[start..i].iter().collect()), pos));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
        } else {
            return Err(syntax(pos, format!("unexpected character `{c}`")));
        }
    }
    out.push((Tok::End, chars.len() + 1));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    universe: &'a SymbolUniverse,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let tok = self.toks[self.at].0.clone();
        if tok != Tok::End {
            self.at += 1;
        }
        tok
    }

    fn expect(&mut self, want: Tok, context: &str) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(syntax(
                self.pos(),
                format!("expected {} {context}, found {}", want.describe(), self.peek().describe()),
            ))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = if *self.peek() == Tok::Minus {
            self.bump();
            Expr::neg(self.term()?)
        } else {
            self.term()?
        };
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    acc = Expr::add(acc, self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    acc = Expr::sub(acc, self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    acc = Expr::mul(acc, self.factor()?);
                }
                Tok::Slash => {
                    self.bump();
                    acc = Expr::div(acc, self.factor()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let pos = self.pos();
        match self.bump() {
            Tok::Number(text) if text.bytes().all(|b| b.is_ascii_digit()) => {
                let magnitude: i64 = text
                    .parse()
                    .map_err(|_| syntax(pos, format!("exponent `{text}` out of range")))?;
                let exp = if negative { -magnitude } else { magnitude };
                if *self.peek() == Tok::Caret {
                    return Err(syntax(self.pos(), "chained `^` needs parentheses"));
                }
                Ok(Expr::pow(base, exp))
            }
            other => Err(syntax(pos, format!("expected integer exponent after `^`, found {}", other.describe()))),
        }
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Number(text) => Number::from_literal(&text)
                .map(Expr::Const)
                .ok_or_else(|| syntax(pos, format!("invalid number `{text}`"))),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "to close `(`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    self.expect(Tok::LParen, &format!("after function `{name}`"))?;
                    let arg = self.expr()?;
                    let mut count = 1;
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        self.expr()?;
                        count += 1;
                    }
                    if count != 1 {
                        return Err(ParseError {
                            position: pos,
                            message: format!("function `{name}` takes 1 argument, got {count}"),
                            kind: ParseErrorKind::Arity { func: func.name(), got: count },
                        });
                    }
                    self.expect(Tok::RParen, &format!("to close `{name}(`"))?;
                    Ok(Expr::func(func, arg))
                } else if self.universe.contains(&name) {
                    Ok(Expr::Var(name))
                } else {
                    Err(ParseError {
                        position: pos,
                        message: format!("unknown identifier `{name}`"),
                        kind: ParseErrorKind::UnknownIdentifier(name),
                    })
                }
            }
            other => Err(syntax(pos, format!("expected a number, identifier or `(`, found {}", other.describe()))),
        }
    }
}

pub fn parse_expr(text: &str, universe: &SymbolUniverse) -> Result<Expr, ParseError> {
    let mut parser = Parser { toks: lex(text)?, at: 0, universe };
    let e = parser.expr()?;
    if *parser.peek() != Tok::End {
        return Err(syntax(parser.pos(), format!("unexpected {}", parser.peek().describe())));
    }
    Ok(e)
}
