//! Parser for the rendered expression grammar. Factors may be separated by
//! `·`, `*`, whitespace, or nothing at all (`CR(D,G)CR(S,I)`).

use crate::cr::{Binding, Block};
use crate::error::{Error, Result};

use super::{CrTerm, FactorExpr, PTerm};

pub fn parse_expr(text: &str) -> Result<FactorExpr> {
    let mut p = Parser {
        chars: text.chars().collect(),
        pos: 0,
    };
    let e = p.product()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.error(format!("unexpected `{}`", p.chars[p.pos])));
    }
    Ok(e)
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::ExprParse {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`")))
        }
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.chars.get(self.pos + i) == Some(&c))
    }

    fn product(&mut self) -> Result<FactorExpr> {
        let mut factors = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                None | Some(')') | Some(']') => break,
                Some('·') | Some('*') if !factors.is_empty() => {
                    self.pos += 1;
                    self.skip_ws();
                    if matches!(self.peek(), None | Some(')') | Some(']')) {
                        return Err(self.error("dangling product operator"));
                    }
                }
                _ => {}
            }
            factors.push(self.factor()?);
        }
        match factors.len() {
            0 => Err(self.error("empty expression")),
            1 => Ok(factors.pop().unwrap()),
            _ => Ok(FactorExpr::Product(factors)),
        }
    }

    fn factor(&mut self) -> Result<FactorExpr> {
        self.skip_ws();
        let atom = if self.starts_with("CR(") {
            self.pos += 3;
            let blocks = self.block_list()?;
            let cond = self.condition()?;
            self.expect(')')?;
            FactorExpr::Cr(CrTerm { blocks, cond, exp: 1 })
        } else if self.starts_with("P(") {
            self.pos += 2;
            let block = self.block(true)?;
            let cond = self.condition()?;
            self.expect(')')?;
            FactorExpr::P(PTerm { block, cond, exp: 1 })
        } else if self.starts_with("sum_") {
            self.pos += 4;
            let var = self.ident()?;
            self.expect('[')?;
            let body = self.product()?;
            self.expect(']')?;
            return Ok(FactorExpr::sum(var, body));
        } else if self.eat('(') {
            let inner = self.product()?;
            self.expect(')')?;
            return Ok(match inner {
                p @ FactorExpr::Product(_) => p,
                other => FactorExpr::Product(vec![other]),
            });
        } else if self.peek().is_some_and(|c| c.is_ascii_digit() || c == '.') {
            return Ok(FactorExpr::Const(self.number()?));
        } else {
            return Err(self.error("expected `CR(`, `P(`, `sum_`, `(` or a number"));
        };
        self.skip_ws();
        if self.peek() == Some('^') {
            self.pos += 1;
            let exp = self.integer()?;
            if exp == 0 {
                return Err(self.error("exponent must be nonzero"));
            }
            return atom.pow(exp).map_err(|e| self.error(e.to_string()));
        }
        Ok(atom)
    }

    fn block_list(&mut self) -> Result<Vec<Block>> {
        let mut blocks = vec![self.block(false)?];
        while self.eat(',') {
            blocks.push(self.block(false)?);
        }
        Ok(blocks)
    }

    fn condition(&mut self) -> Result<Option<Block>> {
        if self.eat('|') {
            let b = self.block(false)?;
            Ok(Some(b))
        } else {
            Ok(None)
        }
    }

    /// Whitespace-separated `name` or `name=state` items.
    fn block(&mut self, allow_empty: bool) -> Result<Block> {
        let mut members = Vec::new();
        loop {
            self.skip_ws();
            if !self.peek().is_some_and(|c| c.is_ascii_alphabetic() || c == '_') {
                break;
            }
            let name = self.ident()?;
            let binding = if self.peek() == Some('=') {
                self.pos += 1;
                let s = self.integer()?;
                Binding::Pinned(usize::try_from(s).map_err(|_| self.error("state must be non-negative"))?)
            } else {
                Binding::Free
            };
            members.push((name, binding));
        }
        if members.is_empty() && !allow_empty {
            return Err(self.error("expected a variable name"));
        }
        Block::new(members).map_err(|e| self.error(e.to_string()))
    }

    fn ident(&mut self) -> Result<String> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
            self.pos += 1;
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        if !crate::model::is_identifier(&s) {
            self.pos = start;
            return Err(self.error("expected an identifier"));
        }
        Ok(s)
    }

    fn integer(&mut self) -> Result<i32> {
        let start = self.pos;
        if self.peek() == Some('-') {
            self.pos += 1;
        }
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        s.parse().map_err(|_| {
            self.pos = start;
            self.error("expected an integer")
        })
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E'))
            || (self.pos > start
                && matches!(self.chars[self.pos - 1], 'e' | 'E')
                && matches!(self.peek(), Some('-') | Some('+')))
        {
            self.pos += 1;
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        s.parse().map_err(|_| {
            self.pos = start;
            self.error(format!("bad number `{s}`"))
        })
    }
}
