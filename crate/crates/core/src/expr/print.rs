//! Printing in the input grammar, so printed text always parses back.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed};

use super::{Expr, Kind, Rational};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Sum,
    Product,
    Power,
}

fn prec(e: &Expr) -> Prec {
    match e.kind() {
        Kind::Add(_) => Prec::Sum,
        Kind::Mul(_) => Prec::Product,
        Kind::Const(c) if c.is_negative() || !c.is_integer() => Prec::Product,
        Kind::Pow(_, n) if n.is_negative() => Prec::Product,
        _ => Prec::Power,
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expr, min: Prec) -> fmt::Result {
    if prec(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Numerator and denominator factor lists of a product.
fn split_fraction(e: &Expr) -> (Rational, Vec<Expr>, Vec<Expr>) {
    let factors: Vec<Expr> = match e.kind() {
        Kind::Mul(fs) => fs.clone(),
        _ => vec![e.clone()],
    };
    let mut coef = Rational::one();
    let mut num = Vec::new();
    let mut den = Vec::new();
    for f in factors {
        match f.kind() {
            Kind::Const(c) => coef *= c,
            Kind::Pow(b, n) if n.is_negative() => den.push(b.pow(-n)),
            _ => num.push(f),
        }
    }
    (coef, num, den)
}

fn write_power(f: &mut fmt::Formatter<'_>, base: &Expr, n: &Rational) -> fmt::Result {
    if *n == Rational::new(1.into(), 2.into()) {
        return write!(f, "sqrt({base})");
    }
    let atomic = match base.kind() {
        Kind::Var(_) | Kind::Func(..) => true,
        Kind::Const(c) => c.is_integer() && !c.is_negative(),
        Kind::Pow(_, m) => *m == Rational::new(1.into(), 2.into()),
        _ => false,
    };
    if atomic {
        write!(f, "{base}")?;
    } else {
        write!(f, "({base})")?;
    }
    if n.is_integer() && n.is_positive() {
        write!(f, "^{n}")
    } else {
        write!(f, "^({n})")
    }
}

fn write_factors(f: &mut fmt::Formatter<'_>, lead: Option<&BigInt>, factors: &[Expr]) -> fmt::Result {
    let mut first = true;
    if let Some(c) = lead {
        write!(f, "{c}")?;
        first = false;
    }
    for x in factors {
        if !first {
            write!(f, "*")?;
        }
        first = false;
        write_wrapped(f, x, Prec::Power)?;
    }
    Ok(())
}

fn write_product(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    let (coef, num, den) = split_fraction(e);
    if coef.is_negative() {
        write!(f, "-")?;
    }
    let cn = coef.numer().abs();
    let cd = coef.denom().clone();
    // a bare `-(u + v)*w` would parse back as `(-u - v)*w`
    let guard = coef.is_negative() && num.first().is_some_and(|x| matches!(x.kind(), Kind::Add(_)));
    let lead = (!cn.is_one() || num.is_empty() || guard).then_some(&cn);
    write_factors(f, lead, &num)?;
    if den.is_empty() && cd.is_one() {
        return Ok(());
    }
    write!(f, "/")?;
    if !cd.is_one() && den.len() == 1 && matches!(den[0].kind(), Kind::Add(_)) {
        // `2*(u + v)` would parse back as `2*u + 2*v`
        return write!(f, "{cd}/({})", den[0]);
    }
    let dlead = (!cd.is_one()).then_some(&cd);
    let count = den.len() + usize::from(dlead.is_some());
    if count > 1 {
        write!(f, "(")?;
        write_factors(f, dlead, &den)?;
        write!(f, ")")
    } else {
        write_factors(f, dlead, &den)
    }
}

fn is_negative_term(e: &Expr) -> bool {
    match e.kind() {
        Kind::Const(c) => c.is_negative(),
        Kind::Mul(fs) => fs[0].as_const().is_some_and(|c| c.is_negative()),
        _ => false,
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            Kind::Const(c) => write!(f, "{c}"),
            Kind::Var(v) => write!(f, "{v}"),
            Kind::Func(func, a) => write!(f, "{}({a})", func.name()),
            Kind::Pow(b, n) if n.is_negative() => write_product(f, self),
            Kind::Pow(b, n) => write_power(f, b, n),
            Kind::Mul(_) => write_product(f, self),
            Kind::Add(ts) => {
                for (i, t) in ts.iter().enumerate() {
                    if i == 0 {
                        write!(f, "{t}")?;
                    } else if is_negative_term(t) {
                        write!(f, " - ")?;
                        write_wrapped(f, &-t, Prec::Product)?;
                    } else {
                        write!(f, " + {t}")?;
                    }
                }
                Ok(())
            }
        }
    }
}
