use std::sync::Mutex;

use crate::expr::{differentiate, expand, is_identically_zero, Differentiator, Expr, Tape, ZeroTestConfig, ZeroTestError, XYP};

use super::QuadError;

/// `u ∂x + v ∂y + w ∂p`.
#[derive(Debug, Clone, PartialEq)]
pub struct VecField3 {
    pub comps: [Expr; 3],
}

impl VecField3 {
    pub fn new(comps: [Expr; 3]) -> Self {
        VecField3 { comps }
    }

    /// The derivative of `e` along the field.
    pub fn apply(&self, e: &Expr) -> Expr {
        Expr::sum((0..3).map(|j| &self.comps[j] * differentiate(e, XYP[j])))
    }

    /// Like [`VecField3::apply`], reusing a shared derivative cache.
    pub fn apply_with(&self, e: &Expr, diff: &Mutex<Differentiator>) -> Expr {
        let mut d = diff.lock().expect("differentiator poisoned");
        Expr::sum((0..3).map(|j| &self.comps[j] * d.diff(e, XYP[j])))
    }
}

/// `∂x + p ∂y + l ∂p`.
pub fn char_field(lambda: &Expr) -> VecField3 {
    VecField3::new([Expr::one(), Expr::var("p"), lambda.clone()])
}

/// `[X, Y]`, componentwise `X(Y_i) - Y(X_i)`.
pub fn lie_bracket(x: &VecField3, y: &VecField3) -> VecField3 {
    VecField3::new(std::array::from_fn(|i| expand(&(x.apply(&y.comps[i]) - y.apply(&x.comps[i])))))
}

/// `grad u × grad v`: a field annihilating `u` and `v`.
pub fn kernel_field(u: &Expr, v: &Expr) -> VecField3 {
    let gu: [Expr; 3] = std::array::from_fn(|j| differentiate(u, XYP[j]));
    let gv: [Expr; 3] = std::array::from_fn(|j| differentiate(v, XYP[j]));
    VecField3::new(std::array::from_fn(|i| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        &gu[j] * &gv[k] - &gu[k] * &gv[j]
    }))
}

fn cross(a: &[Expr; 3], b: &[Expr; 3]) -> [Expr; 3] {
    std::array::from_fn(|i| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        &a[j] * &b[k] - &a[k] * &b[j]
    })
}

fn det(a: &[Expr; 3], b: &[Expr; 3], c: &[Expr; 3]) -> Expr {
    let n = cross(b, c);
    &a[0] * &n[0] + &a[1] * &n[1] + &a[2] * &n[2]
}

/// True iff some component is nonzero at every evaluable sample point.
fn pointwise_nonzero(v: &[Expr; 3], cfg: &ZeroTestConfig) -> Result<bool, QuadError> {
    let tape = Tape::compile(v, XYP).map_err(ZeroTestError::from)?;
    let mut sampler = crate::expr::Sampler::new(&cfg.sample_box, XYP, cfg.seed)?;
    for _ in 0..cfg.trials {
        if let Ok(vals) = tape.eval(&sampler.sample()) {
            if vals.iter().all(|c| c.abs() <= cfg.tolerance) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Both conditions of general position for the lines spanned by `x`, `y`:
/// pointwise independence, and `det[X | Y | [X, Y]]` not identically zero.
pub fn general_position(x: &VecField3, y: &VecField3, cfg: &ZeroTestConfig) -> Result<bool, QuadError> {
    if !pointwise_nonzero(&cross(&x.comps, &y.comps), cfg)? {
        return Ok(false);
    }
    let bracket = lie_bracket(x, y);
    Ok(!is_identically_zero(&det(&x.comps, &y.comps, &bracket.comps), cfg)?)
}

/// `X u ≡ 0`, `X v ≡ 0` and `du ∧ dv ≢ 0`.
pub fn verify_integrals(x: &VecField3, u: &Expr, v: &Expr, cfg: &ZeroTestConfig) -> Result<bool, QuadError> {
    if !is_identically_zero(&x.apply(u), cfg)? || !is_identically_zero(&x.apply(v), cfg)? {
        return Ok(false);
    }
    let wedge = kernel_field(u, v).comps;
    for minor in &wedge {
        if !is_identically_zero(minor, cfg)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// The three functions have independent differentials somewhere on the box.
pub(crate) fn independent(u: &Expr, v: &Expr, w: &Expr, cfg: &ZeroTestConfig) -> Result<bool, QuadError> {
    let g = |e: &Expr| -> [Expr; 3] { std::array::from_fn(|j| differentiate(e, XYP[j])) };
    Ok(!is_identically_zero(&det(&g(u), &g(v), &g(w)), cfg)?)
}
