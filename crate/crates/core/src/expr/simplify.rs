use std::collections::{BTreeMap, HashMap};

use num_traits::ToPrimitive;

use super::{Expr, Kind};

fn rebuild(e: &Expr, leaf: &dyn Fn(&str) -> Option<Expr>, memo: &mut HashMap<usize, Expr>) -> Expr {
    if let Some(r) = memo.get(&e.node_id()) {
        return r.clone();
    }
    let r = match e.kind() {
        Kind::Const(_) => e.clone(),
        Kind::Var(v) => leaf(v).unwrap_or_else(|| e.clone()),
        Kind::Add(ts) => Expr::sum(ts.iter().map(|t| rebuild(t, leaf, memo)).collect::<Vec<_>>()),
        Kind::Mul(fs) => Expr::product(fs.iter().map(|f| rebuild(f, leaf, memo)).collect::<Vec<_>>()),
        Kind::Pow(b, n) => rebuild(b, leaf, memo).pow(n.clone()),
        Kind::Func(f, a) => Expr::apply(*f, rebuild(a, leaf, memo)),
    };
    memo.insert(e.node_id(), r.clone());
    r
}

/// Rebuilds `e` bottom-up through the normalizing constructors.
///
/// Constructors already normalize, so on freshly built trees this is the
/// identity; it matters for trees whose children were produced elsewhere.
pub fn simplify(e: &Expr) -> Expr {
    rebuild(e, &|_| None, &mut HashMap::new())
}

/// Largest number of terms a single distribution step may produce.
const EXPAND_LIMIT: usize = 4096;

fn terms_of(e: &Expr) -> Vec<Expr> {
    match e.kind() {
        Kind::Add(ts) => ts.clone(),
        _ => vec![e.clone()],
    }
}

fn distribute(factors: Vec<Expr>) -> Expr {
    let width: usize = factors.iter().map(|f| terms_of(f).len()).product();
    if width > EXPAND_LIMIT {
        return Expr::product(factors);
    }
    let mut acc = vec![Expr::one()];
    for f in &factors {
        let ts = terms_of(f);
        acc = acc.iter().flat_map(|a| ts.iter().map(move |t| a * t)).collect();
    }
    Expr::sum(acc)
}

fn expand_rec(e: &Expr, memo: &mut HashMap<usize, Expr>) -> Expr {
    if let Some(r) = memo.get(&e.node_id()) {
        return r.clone();
    }
    let r = match e.kind() {
        Kind::Const(_) | Kind::Var(_) => e.clone(),
        Kind::Add(ts) => Expr::sum(ts.iter().map(|t| expand_rec(t, memo)).collect::<Vec<_>>()),
        Kind::Mul(fs) => distribute(fs.iter().map(|f| expand_rec(f, memo)).collect()),
        Kind::Pow(b, n) => {
            let b = expand_rec(b, memo);
            match n.to_integer().to_usize().filter(|k| n.is_integer() && (1..=16).contains(k)) {
                Some(k) if matches!(b.kind(), Kind::Add(_)) => distribute(vec![b; k]),
                _ => b.pow(n.clone()),
            }
        }
        Kind::Func(f, a) => Expr::apply(*f, expand_rec(a, memo)),
    };
    memo.insert(e.node_id(), r.clone());
    r
}

/// Distributes products and small positive integer powers over sums.
///
/// Negative and fractional powers are kept as atoms with expanded bases,
/// so the result is a sum of monomials in those atoms. Steps that would
/// produce more than a few thousand terms are left unexpanded.
pub fn expand(e: &Expr) -> Expr {
    expand_rec(e, &mut HashMap::new())
}

/// Simultaneous substitution of variables by expressions.
pub fn substitute(e: &Expr, bindings: &BTreeMap<String, Expr>) -> Expr {
    if bindings.is_empty() {
        return e.clone();
    }
    rebuild(e, &|v| bindings.get(v).cloned(), &mut HashMap::new())
}
