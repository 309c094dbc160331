use std::collections::HashMap;

use num_traits::One;

use super::{Expr, Func, Kind, Rational};

/// Partial derivative of `e` with respect to the variable `v`.
pub fn differentiate(e: &Expr, v: &str) -> Expr {
    Differentiator::new().diff(e, v)
}

/// Memoizing differentiator.
///
/// Results are cached per shared node and variable, so repeated
/// differentiation of overlapping DAGs reuses earlier work. The cache keeps
/// its inputs alive, which makes node addresses valid keys.
#[derive(Default)]
pub struct Differentiator {
    cache: HashMap<(usize, Box<str>), (Expr, Expr)>,
}

impl Differentiator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cached(&self) -> usize {
        self.cache.len()
    }

    pub fn diff(&mut self, e: &Expr, v: &str) -> Expr {
        let key = (e.node_id(), Box::from(v));
        if let Some((_, d)) = self.cache.get(&key) {
            return d.clone();
        }
        let d = match e.kind() {
            Kind::Const(_) => Expr::zero(),
            Kind::Var(name) => {
                if &**name == v {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Kind::Add(ts) => Expr::sum(ts.iter().map(|t| self.diff(t, v)).collect::<Vec<_>>()),
            Kind::Mul(fs) => {
                let mut terms = Vec::new();
                for (i, f) in fs.iter().enumerate() {
                    let df = self.diff(f, v);
                    if df.is_zero() {
                        continue;
                    }
                    let mut factors: Vec<Expr> = Vec::with_capacity(fs.len());
                    factors.extend(fs.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, g)| g.clone()));
                    factors.push(df);
                    terms.push(Expr::product(factors));
                }
                Expr::sum(terms)
            }
            Kind::Pow(b, n) => {
                let db = self.diff(b, v);
                if db.is_zero() {
                    Expr::zero()
                } else {
                    Expr::product([Expr::constant(n.clone()), b.pow(n - Rational::one()), db])
                }
            }
            Kind::Func(f, a) => {
                let da = self.diff(a, v);
                if da.is_zero() {
                    Expr::zero()
                } else {
                    let outer = match f {
                        Func::Exp => e.clone(),
                        Func::Ln => a.recip(),
                        Func::Sin => a.cos(),
                        Func::Cos => -a.sin(),
                        // d|u| = sign(u) du, written as |u|/u
                        Func::Abs => e / a,
                    };
                    outer * da
                }
            }
        };
        self.cache.insert(key, (e.clone(), d.clone()));
        d
    }
}
