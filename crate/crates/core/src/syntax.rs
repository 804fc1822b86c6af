//! Tokenizer and polynomial-expression parser shared by the formula and
//! model-file grammars.

use crate::error::{Location, ParseError};
use crate::polynomial::SparsePolynomial;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Number(f64),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub loc: Location,
}

const SYMBOLS: [&str; 22] = [
    "<=", ">=", "&&", "||", "==", "(", ")", "[", "]", "{", "}", ",", ";", "+", "-", "*", "/", "^",
    "'", "=", "<", ">",
];

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize| {
        let c = chars[*i];
        *i += 1;
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let loc = Location { line, column: col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col);
            continue;
        }
        if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col);
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                advance(&mut i, &mut line, &mut col);
            }
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                loc,
            });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()))
        {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                advance(&mut i, &mut line, &mut col);
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while i < j {
                        advance(&mut i, &mut line, &mut col);
                    }
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        advance(&mut i, &mut line, &mut col);
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v: f64 = s
                .parse()
                .map_err(|_| ParseError::new(loc, format!("malformed number `{s}`")))?;
            out.push(Token {
                tok: Tok::Number(v),
                loc,
            });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let sym = SYMBOLS.iter().find(|s| rest.starts_with(**s));
        match sym {
            Some(s) => {
                for _ in 0..s.len() {
                    advance(&mut i, &mut line, &mut col);
                }
                out.push(Token {
                    tok: Tok::Sym(s),
                    loc,
                });
            }
            None if c == '!' || c == '~' => {
                return Err(ParseError::new(
                    loc,
                    "negation is not supported: formulas must be in positive normal form",
                ))
            }
            None => return Err(ParseError::new(loc, format!("unexpected character `{c}`"))),
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        loc: Location { line, column: col },
    });
    Ok(out)
}

/// Names that expressions may refer to. Variables become polynomial
/// variables; parameters become parameter coefficients.
pub(crate) struct Scope<'a> {
    pub vars: &'a [String],
    pub params: &'a [String],
}

pub(crate) struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    pub fn new(text: &str) -> Result<Self, ParseError> {
        Ok(Parser {
            tokens: tokenize(text)?,
            pos: 0,
        })
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn rewind(&mut self, pos: usize) {
        self.pos = pos;
    }

    pub fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    pub fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    pub fn loc(&self) -> Location {
        self.tokens[self.pos].loc
    }

    pub fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(self.loc(), msg)
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(v) => format!("number {v}"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    pub fn unexpected(&self, expected: &str) -> ParseError {
        self.error(format!(
            "expected {expected}, found {}",
            Self::describe(self.peek())
        ))
    }

    pub fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    pub fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{s}`")))
        }
    }

    pub fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.is_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    pub fn expect_ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected("a name")),
        }
    }

    pub fn expect_uint(&mut self) -> Result<u64, ParseError> {
        match *self.peek() {
            Tok::Number(v) if v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(53) => {
                self.bump();
                Ok(v as u64)
            }
            _ => Err(self.unexpected("a non-negative integer")),
        }
    }

    /// A possibly negated numeric literal.
    pub fn expect_real(&mut self) -> Result<f64, ParseError> {
        let neg = self.eat_sym("-");
        if !neg {
            self.eat_sym("+");
        }
        match *self.peek() {
            Tok::Number(v) => {
                self.bump();
                Ok(if neg { -v } else { v })
            }
            _ => Err(self.unexpected("a number")),
        }
    }

    /// `expr := term (('+'|'-') term)*`
    pub fn expression(&mut self, scope: &Scope) -> Result<SparsePolynomial, ParseError> {
        let mut acc = self.product(scope)?;
        loop {
            let loc = self.loc();
            if self.eat_sym("+") {
                let rhs = self.product(scope)?;
                acc = acc
                    .checked_add(&rhs)
                    .map_err(|e| ParseError::new(loc, e.to_string()))?;
            } else if self.eat_sym("-") {
                let rhs = self.product(scope)?;
                acc = acc
                    .checked_sub(&rhs)
                    .map_err(|e| ParseError::new(loc, e.to_string()))?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self, scope: &Scope) -> Result<SparsePolynomial, ParseError> {
        let mut acc = self.unary(scope)?;
        loop {
            let loc = self.loc();
            if self.eat_sym("*") {
                let rhs = self.unary(scope)?;
                acc = acc.checked_mul(&rhs).map_err(|_| {
                    ParseError::new(
                        loc,
                        "product of two parameter-dependent factors is not linear in the parameters",
                    )
                })?;
            } else if self.eat_sym("/") {
                let rhs = self.unary(scope)?;
                let divisor = constant_value(&rhs)
                    .ok_or_else(|| ParseError::new(loc, "division is only allowed by a constant"))?;
                if divisor == 0.0 {
                    return Err(ParseError::new(loc, "division by zero"));
                }
                acc = acc.scaled(1.0 / divisor);
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self, scope: &Scope) -> Result<SparsePolynomial, ParseError> {
        if self.eat_sym("-") {
            return Ok(self.unary(scope)?.negated());
        }
        if self.eat_sym("+") {
            return self.unary(scope);
        }
        let base = self.atom(scope)?;
        if self.is_sym("^") {
            let loc = self.loc();
            self.bump();
            let e = self.expect_uint()?;
            let e = u32::try_from(e).map_err(|_| ParseError::new(loc, "exponent too large"))?;
            return base.checked_pow(e).map_err(|_| {
                ParseError::new(
                    loc,
                    "power of a parameter-dependent factor is not linear in the parameters",
                )
            });
        }
        Ok(base)
    }

    fn atom(&mut self, scope: &Scope) -> Result<SparsePolynomial, ParseError> {
        let n = scope.vars.len();
        let m = scope.params.len();
        match self.peek().clone() {
            Tok::Number(v) => {
                self.bump();
                Ok(SparsePolynomial::constant(n, m, v))
            }
            Tok::Ident(name) => {
                let loc = self.loc();
                self.bump();
                if let Some(k) = scope.vars.iter().position(|v| *v == name) {
                    Ok(SparsePolynomial::variable(n, m, k))
                } else if let Some(j) = scope.params.iter().position(|p| *p == name) {
                    Ok(SparsePolynomial::parameter(n, m, j))
                } else if name == "not" {
                    Err(ParseError::new(
                        loc,
                        "negation is not supported: formulas must be in positive normal form",
                    ))
                } else {
                    Err(ParseError::new(loc, format!("unknown identifier `{name}`")))
                }
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expression(scope)?;
                self.expect_sym(")")?;
                Ok(e)
            }
            _ => Err(self.unexpected("an expression")),
        }
    }
}

/// The value of a parameter-free constant polynomial.
pub(crate) fn constant_value(p: &SparsePolynomial) -> Option<f64> {
    if p.total_degree() > 0 || !p.is_parameter_free() {
        return None;
    }
    Some(p.terms().next().map_or(0.0, |(_, a)| a.constant))
}
