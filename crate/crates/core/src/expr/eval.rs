use std::collections::HashMap;

use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use super::{rational_to_f64, Expr, Func, Kind, Rational};

/// Failure while evaluating an expression numerically.
#[derive(Debug, Clone, Error)]
pub enum EvalError {
    #[error("division by zero in `{term}`")]
    DivisionByZero { term: Expr },
    #[error("domain error in `{term}`: {reason}")]
    Domain { term: Expr, reason: &'static str },
    #[error("non-finite value in `{term}`")]
    NonFinite { term: Expr },
    #[error("unbound variable `{0}`")]
    Unbound(String),
}

impl EvalError {
    /// The offending subterm, when there is one.
    pub fn term(&self) -> Option<&Expr> {
        match self {
            EvalError::DivisionByZero { term } | EvalError::Domain { term, .. } | EvalError::NonFinite { term } => Some(term),
            EvalError::Unbound(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
enum Op {
    Const(f64),
    Var(usize),
    Add(u32, u32),
    Mul(u32, u32),
    PowInt(u32, i32),
    PowFrac(u32, f64),
    Func(Func, u32),
}

/// A set of expressions compiled to a straight-line program.
///
/// Shared and structurally equal subterms are computed once. A tape is
/// immutable after compilation and can be evaluated from many threads.
#[derive(Debug, Clone)]
pub struct Tape {
    vars: Vec<String>,
    ops: Vec<Op>,
    args: Vec<u32>,
    terms: Vec<Expr>,
    outputs: Vec<u32>,
}

struct Compiler<'a> {
    vars: &'a [String],
    by_ptr: HashMap<usize, u32>,
    by_struct: HashMap<Expr, u32>,
    ops: Vec<Op>,
    args: Vec<u32>,
    terms: Vec<Expr>,
}

impl Compiler<'_> {
    fn slot(&mut self, e: &Expr) -> Result<u32, EvalError> {
        if let Some(&s) = self.by_ptr.get(&e.node_id()) {
            return Ok(s);
        }
        if let Some(&s) = self.by_struct.get(e) {
            self.by_ptr.insert(e.node_id(), s);
            return Ok(s);
        }
        let op = match e.kind() {
            Kind::Const(c) => Op::Const(rational_to_f64(c)),
            Kind::Var(v) => {
                let idx = self.vars.iter().position(|n| n == &**v).ok_or_else(|| EvalError::Unbound(v.to_string()))?;
                Op::Var(idx)
            }
            Kind::Add(xs) | Kind::Mul(xs) => {
                let mut slots = Vec::with_capacity(xs.len());
                for x in xs {
                    slots.push(self.slot(x)?);
                }
                let start = self.args.len() as u32;
                self.args.extend(slots);
                let len = xs.len() as u32;
                if matches!(e.kind(), Kind::Add(_)) {
                    Op::Add(start, len)
                } else {
                    Op::Mul(start, len)
                }
            }
            Kind::Pow(b, n) => {
                let s = self.slot(b)?;
                match n.is_integer().then(|| n.to_i32()).flatten() {
                    Some(k) => Op::PowInt(s, k),
                    None => Op::PowFrac(s, rational_to_f64(n)),
                }
            }
            Kind::Func(f, a) => Op::Func(*f, self.slot(a)?),
        };
        let s = self.ops.len() as u32;
        self.ops.push(op);
        self.terms.push(e.clone());
        self.by_ptr.insert(e.node_id(), s);
        self.by_struct.insert(e.clone(), s);
        Ok(s)
    }
}

impl Tape {
    /// Compiles `exprs` for evaluation at points whose coordinates are given
    /// in the order of `vars`.
    pub fn compile<S: AsRef<str>>(exprs: &[Expr], vars: &[S]) -> Result<Tape, EvalError> {
        let vars: Vec<String> = vars.iter().map(|v| v.as_ref().to_string()).collect();
        let mut c = Compiler {
            vars: &vars,
            by_ptr: HashMap::new(),
            by_struct: HashMap::new(),
            ops: Vec::new(),
            args: Vec::new(),
            terms: Vec::new(),
        };
        let mut outputs = Vec::with_capacity(exprs.len());
        for e in exprs {
            outputs.push(c.slot(e)?);
        }
        let (ops, args, terms) = (c.ops, c.args, c.terms);
        Ok(Tape { vars, ops, args, terms, outputs })
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Evaluates every compiled expression at `point`.
    pub fn eval(&self, point: &[f64]) -> Result<Vec<f64>, EvalError> {
        let mut regs = Vec::new();
        self.eval_with(point, &mut regs)
    }

    /// Like [`Tape::eval`], reusing a caller-provided register buffer.
    pub fn eval_with(&self, point: &[f64], regs: &mut Vec<f64>) -> Result<Vec<f64>, EvalError> {
        assert_eq!(point.len(), self.vars.len(), "point dimension does not match tape variables");
        regs.clear();
        regs.reserve(self.ops.len());
        for (i, op) in self.ops.iter().enumerate() {
            let v = match *op {
                Op::Const(c) => c,
                Op::Var(k) => point[k],
                Op::Add(s, n) => self.args[s as usize..(s + n) as usize].iter().map(|&a| regs[a as usize]).sum(),
                Op::Mul(s, n) => self.args[s as usize..(s + n) as usize].iter().map(|&a| regs[a as usize]).product(),
                Op::PowInt(b, k) => {
                    let x = regs[b as usize];
                    if k < 0 && x == 0.0 {
                        return Err(EvalError::DivisionByZero { term: self.terms[i].clone() });
                    }
                    x.powi(k)
                }
                Op::PowFrac(b, k) => {
                    let x = regs[b as usize];
                    if x < 0.0 {
                        return Err(EvalError::Domain { term: self.terms[i].clone(), reason: "fractional power of a negative number" });
                    }
                    if x == 0.0 && k < 0.0 {
                        return Err(EvalError::DivisionByZero { term: self.terms[i].clone() });
                    }
                    if k == 0.5 {
                        x.sqrt()
                    } else {
                        x.powf(k)
                    }
                }
                Op::Func(f, a) => {
                    let x = regs[a as usize];
                    match f {
                        Func::Exp => x.exp(),
                        Func::Ln => {
                            if x <= 0.0 {
                                return Err(EvalError::Domain { term: self.terms[i].clone(), reason: "logarithm of a non-positive number" });
                            }
                            x.ln()
                        }
                        Func::Sin => x.sin(),
                        Func::Cos => x.cos(),
                        Func::Abs => x.abs(),
                    }
                }
            };
            if !v.is_finite() {
                return Err(EvalError::NonFinite { term: self.terms[i].clone() });
            }
            regs.push(v);
        }
        Ok(self.outputs.iter().map(|&o| regs[o as usize]).collect())
    }
}

/// Evaluates `e` with the given variable bindings.
pub fn eval_num(e: &Expr, bindings: &[(&str, f64)]) -> Result<f64, EvalError> {
    let names: Vec<&str> = bindings.iter().map(|(n, _)| *n).collect();
    let values: Vec<f64> = bindings.iter().map(|(_, v)| *v).collect();
    let tape = Tape::compile(std::slice::from_ref(e), &names)?;
    Ok(tape.eval(&values)?[0])
}

/// Evaluates `e` exactly at a rational point.
///
/// Only rational operations are supported: functions and non-integer powers
/// are reported as domain errors.
pub fn eval_exact(e: &Expr, bindings: &[(&str, Rational)]) -> Result<Rational, EvalError> {
    eval_exact_many(std::slice::from_ref(e), bindings)?.pop().ok_or(EvalError::NonFinite { term: e.clone() })
}

/// [`eval_exact`] of several expressions sharing one memo, so common
/// subexpressions are evaluated once.
pub fn eval_exact_many(exprs: &[Expr], bindings: &[(&str, Rational)]) -> Result<Vec<Rational>, EvalError> {
    fn go(e: &Expr, bindings: &[(&str, Rational)], memo: &mut HashMap<usize, Rational>) -> Result<Rational, EvalError> {
        if let Some(v) = memo.get(&e.node_id()) {
            return Ok(v.clone());
        }
        let v = match e.kind() {
            Kind::Const(c) => c.clone(),
            Kind::Var(name) => {
                bindings.iter().find(|(n, _)| *n == &**name).map(|(_, v)| v.clone()).ok_or_else(|| EvalError::Unbound(name.to_string()))?
            }
            Kind::Add(ts) => {
                let mut acc = Rational::zero();
                for t in ts {
                    acc += go(t, bindings, memo)?;
                }
                acc
            }
            Kind::Mul(fs) => {
                let mut acc = Rational::one();
                for f in fs {
                    acc *= go(f, bindings, memo)?;
                }
                acc
            }
            Kind::Pow(b, k) => {
                if !k.is_integer() {
                    return Err(EvalError::Domain { term: e.clone(), reason: "non-integer power in exact evaluation" });
                }
                let base = go(b, bindings, memo)?;
                let k = k.to_integer().to_i32().ok_or(EvalError::NonFinite { term: e.clone() })?;
                if k < 0 && base.is_zero() {
                    return Err(EvalError::DivisionByZero { term: e.clone() });
                }
                num_traits::pow::Pow::pow(base, k)
            }
            Kind::Func(..) => return Err(EvalError::Domain { term: e.clone(), reason: "function in exact evaluation" }),
        };
        memo.insert(e.node_id(), v.clone());
        Ok(v)
    }
    let mut memo = HashMap::new();
    exprs.iter().map(|e| go(e, bindings, &mut memo)).collect()
}
