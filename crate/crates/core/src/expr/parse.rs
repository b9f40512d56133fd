//! Recursive-descent parser for the canonical grammar.
//!
//! ```text
//! expr   := term (('+' | &'-') term)*
//! term   := ['-'] number [factor] | ['-'] factor
//! factor := 'x' | 'g_' N | call | '(' expr ')' | '||' expr '||_' p ['^2']
//! call   := name '(' expr (',' expr)* ')'
//! ```
//!
//! A `-` directly before an atom that has a negated twin (`-exp(u)`,
//! `-max(0,u)`, `-||u||_1`, ...) yields the twin. The composite templates
//! `log(1+exp(u))` and `log(exp(u1)+exp(u2)+...)` are matched with
//! backtracking before falling back to a plain `log`.

use thiserror::Error;

use super::Expr;
use crate::atoms::AtomId;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("parse error at {pos}: {msg}")]
pub struct ParseError {
    /// Byte offset into the input.
    pub pos: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    LParen,
    RParen,
    Comma,
    Plus,
    Minus,
    NormOpen,
    /// `||_p`, optionally followed by `^2`.
    NormClose(AtomId),
}

fn lex(s: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let b = s.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    let err = |pos: usize, msg: &str| ParseError { pos, msg: msg.to_string() };
    while i < b.len() {
        let c = b[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let tok = match c {
            b'(' => {
                i += 1;
                Tok::LParen
            }
            b')' => {
                i += 1;
                Tok::RParen
            }
            b',' => {
                i += 1;
                Tok::Comma
            }
            b'+' => {
                i += 1;
                Tok::Plus
            }
            b'-' => {
                i += 1;
                Tok::Minus
            }
            b'|' => {
                if b.get(i + 1) != Some(&b'|') {
                    return Err(err(i, "expected '||'"));
                }
                i += 2;
                if b.get(i) == Some(&b'_') {
                    i += 1;
                    let rest = &s[i..];
                    let (atom, used) = if rest.starts_with("inf") {
                        (AtomId::NormInf, 3)
                    } else if rest.starts_with("1") {
                        (AtomId::Norm1, 1)
                    } else if rest.starts_with("2^2") {
                        (AtomId::SqNorm2, 3)
                    } else if rest.starts_with("2") {
                        (AtomId::Norm2, 1)
                    } else {
                        return Err(err(i, "expected norm order 1, 2 or inf"));
                    };
                    i += used;
                    Tok::NormClose(atom)
                } else {
                    Tok::NormOpen
                }
            }
            b'0'..=b'9' | b'.' => {
                while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
                    i += 1;
                }
                let text = &s[start..i];
                let v: f64 = text.parse().map_err(|_| err(start, &format!("bad number {text:?}")))?;
                Tok::Num(v)
            }
            c if c.is_ascii_alphabetic() => {
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                    i += 1;
                }
                Tok::Ident(s[start..i].to_string())
            }
            _ => return Err(err(i, &format!("unexpected character {:?}", s[i..].chars().next().unwrap()))),
        };
        out.push((tok, start));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

type PResult<T> = Result<T, ParseError>;

pub fn parse(s: &str) -> Result<Expr, ParseError> {
    let toks = lex(s)?;
    let mut p = Parser { toks, pos: 0, end: s.len() };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(p.error("trailing input"));
    }
    Ok(e)
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, p)| *p)
    }

    fn error(&self, msg: &str) -> ParseError {
        ParseError { pos: self.offset(), msg: msg.to_string() }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok, what: &str) -> PResult<()> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.error(&format!("expected {what}")))
        }
    }

    fn expect_ident(&mut self, name: &str) -> PResult<()> {
        if self.peek() == Some(&Tok::Ident(name.to_string())) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected {name:?}")))
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut terms = Vec::new();
        let mut offset = 0.0;
        self.term(&mut terms, &mut offset)?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    self.term(&mut terms, &mut offset)?;
                }
                Some(Tok::Minus) => self.term(&mut terms, &mut offset)?,
                _ => break,
            }
        }
        Ok(Expr::lin(terms, offset))
    }

    fn starts_factor(&self) -> bool {
        matches!(self.peek(), Some(Tok::Ident(_) | Tok::LParen | Tok::NormOpen))
    }

    fn term(&mut self, terms: &mut Vec<(f64, Expr)>, offset: &mut f64) -> PResult<()> {
        let negative = self.eat(&Tok::Minus);
        let sign = if negative { -1.0 } else { 1.0 };
        if let Some(Tok::Num(v)) = self.peek().cloned() {
            self.pos += 1;
            if self.starts_factor() {
                let f = self.factor()?;
                terms.push((sign * v, f));
            } else {
                *offset += sign * v;
            }
            return Ok(());
        }
        if !self.starts_factor() {
            return Err(self.error("expected a term"));
        }
        let grouped = self.peek() == Some(&Tok::LParen);
        let f = self.factor()?;
        // `-exp(u)` and friends are the negated atoms, `-(...)` a negation.
        let twin = match &f {
            Expr::Apply(atom, args) if negative && !grouped => atom.negated().map(|n| (n, args.clone())),
            _ => None,
        };
        match twin {
            Some((n, args)) => {
                let e = Expr::apply(n, args).map_err(|e| self.error(&e.to_string()))?;
                terms.push((1.0, e));
            }
            None => terms.push((sign, f)),
        }
        Ok(())
    }

    fn factor(&mut self) -> PResult<Expr> {
        let start = self.pos;
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(&Tok::RParen, "')'")?;
                Ok(e)
            }
            Some(Tok::NormOpen) => {
                self.pos += 1;
                let e = self.expr()?;
                match self.peek().cloned() {
                    Some(Tok::NormClose(atom)) => {
                        self.pos += 1;
                        Ok(Expr::call(atom, e))
                    }
                    _ => Err(self.error("expected '||_p'")),
                }
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if name == "x" {
                    return Ok(Expr::Var);
                }
                if let Some(n) = name.strip_prefix("g_") {
                    if let Ok(i) = n.parse::<usize>() {
                        if i >= 1 {
                            return Ok(Expr::Ref(i));
                        }
                    }
                }
                if self.peek() != Some(&Tok::LParen) {
                    self.pos = start;
                    return Err(self.error(&format!("unknown symbol {name:?}")));
                }
                if name == "log" {
                    let after = self.pos;
                    if let Ok(e) = self.softplus_tail() {
                        return Ok(e);
                    }
                    self.pos = after;
                    if let Ok(e) = self.lse_tail() {
                        return Ok(e);
                    }
                    self.pos = after;
                }
                let atom = match name.parse::<AtomId>() {
                    Ok(a) if a.is_applied() => a,
                    _ => {
                        self.pos = start;
                        return Err(self.error(&format!("unknown function {name:?}")));
                    }
                };
                self.expect(&Tok::LParen, "'('")?;
                let mut args = vec![self.expr()?];
                while self.eat(&Tok::Comma) {
                    args.push(self.expr()?);
                }
                self.expect(&Tok::RParen, "')'")?;
                Expr::apply(atom, args).map_err(|e| {
                    self.pos = start;
                    self.error(&e.to_string())
                })
            }
            _ => Err(self.error("expected 'x', a function, '(' or '||'")),
        }
    }

    /// After `log`: `(1+exp(u))`.
    fn softplus_tail(&mut self) -> PResult<Expr> {
        self.expect(&Tok::LParen, "'('")?;
        if self.peek() != Some(&Tok::Num(1.0)) || self.peek_at(1) != Some(&Tok::Plus) {
            return Err(self.error("not softplus"));
        }
        self.pos += 2;
        self.expect_ident("exp")?;
        self.expect(&Tok::LParen, "'('")?;
        let u = self.expr()?;
        self.expect(&Tok::RParen, "')'")?;
        self.expect(&Tok::RParen, "')'")?;
        Ok(Expr::call(AtomId::Softplus, u))
    }

    /// After `log`: `(exp(u1)+exp(u2)+...)` with at least two terms.
    fn lse_tail(&mut self) -> PResult<Expr> {
        self.expect(&Tok::LParen, "'('")?;
        let mut args = Vec::new();
        loop {
            self.expect_ident("exp")?;
            self.expect(&Tok::LParen, "'('")?;
            args.push(self.expr()?);
            self.expect(&Tok::RParen, "')'")?;
            if !self.eat(&Tok::Plus) {
                break;
            }
        }
        self.expect(&Tok::RParen, "')'")?;
        if args.len() < 2 {
            return Err(self.error("not log-sum-exp"));
        }
        Expr::apply(AtomId::LogSumExp, args).map_err(|e| self.error(&e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::super::print;
    use super::*;

    fn rt(s: &str) {
        let e = parse(s).unwrap_or_else(|e| panic!("{s}: {e}"));
        assert_eq!(print(&e), s);
    }

    #[test]
    fn simple() {
        assert_eq!(parse("x").unwrap(), Expr::Var);
        assert_eq!(parse("-0.342x+1.24").unwrap(), Expr::affine(-0.342, 1.24));
        assert_eq!(parse(" 2 x + 1 ").unwrap(), Expr::affine(2.0, 1.0));
    }

    #[test]
    fn canonical_round_trips() {
        for s in [
            "exp(-(0.945x+0.5))",
            "exp(-x)",
            "log(1+exp(x))",
            "-log(1+exp(2x-1))",
            "-(log(1+exp(x)))",
            "log(exp(x)+exp(-(0.3x+0.5)))",
            "log(exp(x)+1)",
            "max(0,x)",
            "-max(0,x+1)",
            "max(x,-x,2)",
            "min(log(x),sqrt(x))",
            "||1.37x+0.0336||_1",
            "-||x||_inf",
            "||0.471(-0.517x-0.471)||_2^2",
            "-(||x||_2^2)",
            "hinge(x)",
            "0.534g_3+0.238g_4+g_5",
            "exp(exp(-(0.534(-exp(0.656(-0.342x+1.24)+0.76))+0.238(-||1.37x+0.0336||_1)-0.263x-1.33)))",
            "||||x||_1-1||_2",
            "-(-exp(x))",
            "-(exp(-x))",
            "-(exp(x))",
            "2",
        ] {
            rt(s);
        }
    }

    #[test]
    fn negated_twins() {
        assert_eq!(parse("-exp(x)").unwrap(), Expr::call(AtomId::NegExp, Expr::Var));
        assert_eq!(parse("-sqrt(x)").unwrap(), Expr::call(AtomId::NegSqrt, Expr::Var));
        assert_eq!(parse("-log(x)").unwrap(), Expr::neg(Expr::call(AtomId::Log, Expr::Var)));
        // same function, one tree
        assert_eq!(parse("-exp(-x)").unwrap(), parse("-(exp(-x))").unwrap());
    }

    #[test]
    fn lenient_offsets() {
        let e = parse("max(0,-0.86x-0.925+||x||_2^2)").unwrap();
        assert_eq!(print(&e), "max(0,-0.86x+||x||_2^2-0.925)");
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse("exp(x").unwrap_err();
        assert_eq!(e.pos, 5);
        let e = parse("exp(x))").unwrap_err();
        assert_eq!(e.pos, 6);
        assert_eq!(parse("tanh(x)").unwrap_err().pos, 0);
        assert!(parse("max(x)").is_err());
        assert!(parse("||x||_3").is_err());
        assert!(parse("").is_err());
        assert!(parse("x $ 1").is_err());
    }
}
