//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := '-' unary | power
//! power    := atom ('^' exponent)?
//! exponent := ['-'] integer | '(' ['-'] integer ['/' integer] ')'
//! atom     := integer | ident | func '(' expr ')' | '(' expr ')'
//! func     := sqrt | exp | ln | sin | cos | abs
//! ```
//!
//! Unary minus binds looser than `^`, so `-x^2` is `-(x^2)`, and an
//! unparenthesized exponent is a single integer, so `x^2/2` is `(x^2)/2`.

use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

use super::{rat, Expr, Func, Rational};

/// Variables of the base space.
pub const XYP: &[&str] = &["x", "y", "p"];
/// Variables of a canonical chart.
pub const ABC: &[&str] = &["a", "b", "c"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown identifier `{name}` at {position}")]
    UnknownIdentifier { position: usize, name: String },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { position, .. } | ParseError::UnknownIdentifier { position, .. } => *position,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Sym(char),
    End,
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    vars: &'a [&'a str],
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, ch) = chars[i];
        if ch.is_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].1.is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().map(|(_, c)| c).collect();
            out.push((Tok::Int(text.parse().expect("digits")), pos));
        } else if ch.is_ascii_alphabetic() || ch == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().map(|(_, c)| c).collect()), pos));
        } else if "+-*/^()".contains(ch) {
            out.push((Tok::Sym(ch), pos));
            i += 1;
        } else {
            return Err(ParseError::Syntax { position: pos, message: format!("unexpected character `{ch}`") });
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`")))
        }
    }

    fn error(&self, message: String) -> ParseError {
        ParseError::Syntax { position: self.pos(), message }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat('+') {
                terms.push(self.term()?);
            } else if self.eat('-') {
                terms.push(-self.term()?);
            } else {
                return Ok(Expr::sum(terms));
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut factors = vec![self.unary()?];
        loop {
            if self.eat('*') {
                factors.push(self.unary()?);
            } else if self.eat('/') {
                factors.push(self.unary()?.recip());
            } else {
                return Ok(Expr::product(factors));
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            Ok(-self.unary()?)
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat('^') {
            let e = self.exponent()?;
            Ok(base.pow(e))
        } else {
            Ok(base)
        }
    }

    fn integer(&mut self) -> Result<BigInt, ParseError> {
        match self.bump() {
            Tok::Int(n) => Ok(n),
            _ => {
                self.at -= 1;
                Err(self.error("exponent must be a rational constant".into()))
            }
        }
    }

    fn exponent(&mut self) -> Result<Rational, ParseError> {
        if self.eat('(') {
            let neg = self.eat('-');
            let n = self.integer()?;
            let d = if self.eat('/') {
                let at = self.pos();
                let d = self.integer()?;
                if d.is_zero() {
                    return Err(ParseError::Syntax { position: at, message: "zero denominator in exponent".into() });
                }
                d
            } else {
                BigInt::from(1)
            };
            self.expect(')')?;
            let r = Rational::new(n, d);
            Ok(if neg { -r } else { r })
        } else {
            let neg = self.eat('-');
            let n = Rational::from_integer(self.integer()?);
            Ok(if neg { -n } else { n })
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Int(n) => Ok(Expr::constant(Rational::from_integer(n))),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let func = match name.as_str() {
                    "sqrt" => None,
                    "exp" => Some(Func::Exp),
                    "ln" => Some(Func::Ln),
                    "sin" => Some(Func::Sin),
                    "cos" => Some(Func::Cos),
                    "abs" => Some(Func::Abs),
                    _ => {
                        return if self.vars.contains(&name.as_str()) {
                            Ok(Expr::var(&name))
                        } else {
                            Err(ParseError::UnknownIdentifier { position: pos, name })
                        };
                    }
                };
                self.expect('(')?;
                let arg = self.expr()?;
                self.expect(')')?;
                Ok(match func {
                    None => arg.pow(rat(1, 2)),
                    Some(f) => Expr::apply(f, arg),
                })
            }
            Tok::End => {
                self.at = self.toks.len() - 1;
                Err(self.error("unexpected end of input".into()))
            }
            Tok::Sym(c) => {
                self.at -= 1;
                Err(self.error(format!("unexpected `{c}`")))
            }
        }
    }
}

/// Parses `src`, allowing only the declared variable names.
pub fn parse(src: &str, vars: &[&str]) -> Result<Expr, ParseError> {
    let mut p = Parser { toks: lex(src)?, at: 0, vars };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.error("trailing input".into()));
    }
    Ok(e)
}

/// Parses an expression over the base variables `x, y, p`.
pub fn parse_in(src: &str) -> Result<Expr, ParseError> {
    parse(src, XYP)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{int, Kind};

    #[test]
    fn precedence() {
        let e = parse("p^2 - x*y", XYP).unwrap();
        assert_eq!(e, Expr::var("p").powi(2) - Expr::var("x") * Expr::var("y"));
        assert_eq!(parse("-x^2", XYP).unwrap(), -Expr::var("x").powi(2));
        assert_eq!(parse("x^2/2", XYP).unwrap(), Expr::var("x").powi(2).scale(rat(1, 2)));
        assert_eq!(parse("x^(3/2)", XYP).unwrap(), Expr::var("x").pow(rat(3, 2)));
        assert_eq!(parse("x^-1", XYP).unwrap(), Expr::var("x").recip());
    }

    #[test]
    fn sqrt_is_a_half_power() {
        let e = parse("sqrt(p^2+4*p^4)", XYP).unwrap();
        match e.kind() {
            Kind::Pow(_, n) => assert_eq!(*n, rat(1, 2)),
            other => panic!("expected a power node, got {other:?}"),
        }
    }

    #[test]
    fn integral_of_example_one() {
        let g = parse("y - p*x", XYP).unwrap();
        assert_eq!(g, Expr::var("y") - Expr::var("p") * Expr::var("x"));
        assert_eq!(parse("3/6", XYP).unwrap().as_const(), Some(&rat(1, 2)));
        assert_eq!(parse(" 2 * ( 1 ) ", XYP).unwrap().as_const(), Some(&int(2)));
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(parse("x + * y", XYP).unwrap_err().position(), 4);
        assert_eq!(parse("x + q", XYP).unwrap_err(), ParseError::UnknownIdentifier { position: 4, name: "q".into() });
        assert_eq!(parse("(x + y", XYP).unwrap_err().position(), 6);
        assert!(matches!(parse("x^y", XYP), Err(ParseError::Syntax { position: 2, .. })));
        assert!(matches!(parse("x $ y", XYP), Err(ParseError::Syntax { position: 2, .. })));
        assert!(matches!(parse("", XYP), Err(ParseError::Syntax { position: 0, .. })));
        assert!(matches!(parse("x y", XYP), Err(ParseError::Syntax { position: 2, .. })));
    }
}
