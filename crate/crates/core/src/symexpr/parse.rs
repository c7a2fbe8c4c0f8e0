//! Parsers for distribution terms and LaTeX/JSON expressions.

use super::expr::Expr;
use super::term::DistTerm;
use crate::error::{Error, Result};
use crate::var::{validate_name, var_with, Kinds, VarSet};

const MAX_DEPTH: usize = 200;

/// Parses `P(Y,Z | do(X),W)` (or lowercase `p`). Whitespace is ignored.
pub fn parse_dist_term(text: &str, kinds: &Kinds) -> Result<DistTerm> {
    let mut c = Cursor::new(text);
    let t = c.dist_term(kinds)?;
    c.skip_ws();
    if !c.at_end() {
        return Err(c.err("trailing characters after distribution"));
    }
    Ok(t)
}

/// Parses the LaTeX grammar produced by [`super::render::latex`].
pub fn parse_latex(text: &str, kinds: &Kinds) -> Result<Expr> {
    let mut c = Cursor::new(text);
    let e = c.product(kinds, 0)?;
    c.skip_ws();
    if !c.at_end() {
        return Err(c.err("unexpected trailing input"));
    }
    Ok(e)
}

/// Parses the JSON tree encoding produced by [`super::render::json`].
pub fn parse_json(text: &str) -> Result<Expr> {
    let e: Expr = serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.to_string()))?;
    if !e.is_well_formed() {
        return Err(Error::Validation("expression is not well formed".into()));
    }
    Ok(e)
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Cursor { src, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn line(&self) -> usize {
        1 + self.src[..self.pos].matches('\n').count()
    }

    fn err(&self, msg: &str) -> Error {
        Error::parse(self.line(), format!("{msg} (offset {})", self.pos))
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{tok}`")))
        }
    }

    fn ident(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let rest = self.rest();
        let len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        if len == 0 {
            return Err(self.err("expected a variable name"));
        }
        self.pos += len;
        let name = &rest[..len];
        validate_name(name)?;
        Ok(name)
    }

    fn name_list(&mut self, kinds: &Kinds, close: &str) -> Result<VarSet> {
        let mut out = VarSet::new();
        loop {
            let name = self.ident()?;
            if !out.insert(var_with(kinds, name)) {
                return Err(self.err(&format!("variable `{name}` repeated")));
            }
            if self.eat(",") {
                continue;
            }
            self.expect(close)?;
            return Ok(out);
        }
    }

    fn dist_term(&mut self, kinds: &Kinds) -> Result<DistTerm> {
        self.skip_ws();
        if !(self.eat("P(") || self.eat("p(")) {
            // allow `P (`
            if self.eat("P") || self.eat("p") {
                self.expect("(")?;
            } else {
                return Err(self.err("expected `P(`"));
            }
        }
        let mut outcomes = VarSet::new();
        loop {
            let name = self.ident()?;
            if !outcomes.insert(var_with(kinds, name)) {
                return Err(self.err(&format!("variable `{name}` repeated")));
            }
            if !self.eat(",") {
                break;
            }
        }
        let mut interventions = VarSet::new();
        let mut conditions = VarSet::new();
        let mut seen_do = false;
        if self.eat("|") {
            loop {
                self.skip_ws();
                let save = self.pos;
                if self.eat("do") && self.eat("(") {
                    if seen_do {
                        return Err(self.err("more than one do(...) group"));
                    }
                    seen_do = true;
                    interventions = self.name_list(kinds, ")")?;
                } else {
                    self.pos = save;
                    let name = self.ident()?;
                    if !conditions.insert(var_with(kinds, name)) {
                        return Err(self.err(&format!("variable `{name}` repeated")));
                    }
                }
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        DistTerm::new(outcomes, interventions, conditions).map_err(|e| self.err(&e.to_string()))
    }

    fn at_product_end(&mut self) -> bool {
        self.skip_ws();
        self.at_end() || self.rest().starts_with("\\right)") || self.rest().starts_with('}')
    }

    fn product(&mut self, kinds: &Kinds, depth: usize) -> Result<Expr> {
        if depth > MAX_DEPTH {
            return Err(self.err("expression nested too deeply"));
        }
        let mut factors = Vec::new();
        while !self.at_product_end() {
            if self.eat("\\sum_{") {
                let bound = self.name_list(kinds, "}")?;
                self.skip_ws();
                let body = if self.rest().starts_with("\\left(") {
                    self.group(kinds, depth + 1)?
                } else {
                    self.product(kinds, depth + 1)?
                };
                factors.push(Expr::sum(bound, body));
            } else if self.eat("\\frac{") {
                let num = self.product(kinds, depth + 1)?;
                self.expect("}")?;
                self.expect("{")?;
                let den = self.product(kinds, depth + 1)?;
                self.expect("}")?;
                factors.push(Expr::quotient(num, den));
            } else if self.rest().starts_with("\\left(") {
                factors.push(self.group(kinds, depth + 1)?);
            } else {
                factors.push(Expr::Atom(self.dist_term(kinds)?));
            }
        }
        match factors.len() {
            0 => Err(self.err("empty expression")),
            1 => Ok(factors.pop().unwrap()),
            _ => Ok(Expr::Product(factors)),
        }
    }

    fn group(&mut self, kinds: &Kinds, depth: usize) -> Result<Expr> {
        self.expect("\\left(")?;
        let e = self.product(kinds, depth)?;
        self.expect("\\right)")?;
        Ok(e)
    }
}
