//! Restricted jets of `y'' = f(x, y, p)` and the relative invariants built
//! from them.
//!
//! Every computation goes through a [`JetFrame`]: three commuting-or-not
//! derivations on functions of three variables, a slope playing the role of
//! `p` and a right-hand side playing the role of `q`. For an explicit
//! equation these are plain partials, `p` and `f`. For an equation known only
//! through a chart the derivations are frame fields and everything below is
//! computed without ever writing the equation in its own variables.

mod tower;
mod transform;

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Neg};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{is_identically_zero, parse, rat, Differentiator, Expr, ParseError, ZeroTestConfig, ZeroTestError, XYP};

pub use tower::{barred_exponents, reorient, Barred, InvariantTower, SignPolicy, BARRED_NAMES};
pub use transform::{point_transform, LiftedMap, PointMap, Primitive};

#[derive(Debug, Clone, Error)]
pub enum JetError {
    #[error("equation is not generic: {0} vanishes identically")]
    NonGeneric(&'static str),
    #[error("right-hand side uses variable `{0}` outside x, y, p")]
    ForeignVariable(String),
    #[error("weight bookkeeping mismatch for {name}: computed ({r}, {s}), expected ({er}, {es})")]
    WeightMismatch { name: &'static str, r: i64, s: i64, er: i64, es: i64 },
    #[error("degenerate point map: Jacobian vanishes identically")]
    DegenerateMap,
    #[error("lift denominator vanishes at ({x}, {y}, {p})")]
    LiftDenominator { x: f64, y: f64, p: f64 },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    ZeroTest(#[from] ZeroTestError),
}

/// An explicit second-order equation `y'' = f(x, y, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ode2 {
    f: Expr,
}

impl Ode2 {
    pub fn new(f: Expr) -> Result<Self, JetError> {
        if let Some(v) = f.free_vars().into_iter().find(|v| !XYP.contains(&v.as_str())) {
            return Err(JetError::ForeignVariable(v));
        }
        Ok(Ode2 { f })
    }

    pub fn parse(src: &str) -> Result<Self, JetError> {
        Ode2::new(parse(src, XYP)?)
    }

    pub fn f(&self) -> &Expr {
        &self.f
    }
}

impl fmt::Display for Ode2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "y'' = {}", self.f)
    }
}

/// Bi-degree of a relative invariant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Weight {
    pub r: i64,
    pub s: i64,
}

impl Weight {
    pub const ZERO: Weight = Weight { r: 0, s: 0 };
    pub const I: Weight = Weight { r: -2, s: 3 };
    pub const H: Weight = Weight { r: 2, s: 1 };

    pub const fn new(r: i64, s: i64) -> Self {
        Weight { r, s }
    }
}

impl Add for Weight {
    type Output = Weight;
    fn add(self, o: Weight) -> Weight {
        Weight::new(self.r + o.r, self.s + o.s)
    }
}

impl Neg for Weight {
    type Output = Weight;
    fn neg(self) -> Weight {
        Weight::new(-self.r, -self.s)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.r, self.s)
    }
}

/// A relative invariant restricted to an equation, with its weight.
#[derive(Debug, Clone, PartialEq)]
pub struct RelInv {
    pub value: Expr,
    pub weight: Weight,
}

impl RelInv {
    pub fn new(value: Expr, weight: Weight) -> Self {
        RelInv { value, weight }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    P,
}

/// Derivations and section data that jets are computed from.
pub trait JetFrame {
    /// Applies the derivation along `axis` to a restricted expression.
    fn derive(&self, axis: Axis, e: &Expr) -> Expr;
    /// The fibre coordinate (`p` for an explicit equation).
    fn slope(&self) -> &Expr;
    /// The section (`f` for an explicit equation).
    fn rhs(&self) -> &Expr;
}

/// Plain partial derivatives in `x, y, p`, for an explicit equation.
pub struct PlainFrame {
    p: Expr,
    f: Expr,
    diff: Mutex<Differentiator>,
}

impl PlainFrame {
    pub fn new(ode: &Ode2) -> Self {
        PlainFrame { p: Expr::var("p"), f: ode.f.clone(), diff: Mutex::new(Differentiator::new()) }
    }
}

impl JetFrame for PlainFrame {
    fn derive(&self, axis: Axis, e: &Expr) -> Expr {
        let v = match axis {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::P => "p",
        };
        self.diff.lock().expect("differentiator poisoned").diff(e, v)
    }

    fn slope(&self) -> &Expr {
        &self.p
    }

    fn rhs(&self) -> &Expr {
        &self.f
    }
}

/// Memoized restricted jets and the invariant operators over one frame.
pub struct Jets<F: JetFrame> {
    frame: F,
    cache: Mutex<HashMap<(u32, u32, u32), Expr>>,
}

impl Jets<PlainFrame> {
    pub fn of(ode: &Ode2) -> Self {
        Jets::new(PlainFrame::new(ode))
    }
}

impl<F: JetFrame> Jets<F> {
    pub fn new(frame: F) -> Self {
        Jets { frame, cache: Mutex::new(HashMap::new()) }
    }

    pub fn frame(&self) -> &F {
        &self.frame
    }

    /// `D̂x = Dx + p Dy`.
    pub fn dhat_x(&self, e: &Expr) -> Expr {
        self.frame.derive(Axis::X, e) + self.frame.slope() * self.frame.derive(Axis::Y, e)
    }

    /// `Dx + p Dy + q Dp`, the total derivative along solutions.
    pub fn total_x(&self, e: &Expr) -> Expr {
        self.dhat_x(e) + self.frame.rhs() * self.frame.derive(Axis::P, e)
    }

    /// `q^k_{lm} = D̂x^l Dy^m Dp^k q`, with the `p`-derivatives applied first.
    pub fn q(&self, l: u32, m: u32, k: u32) -> Expr {
        if let Some(e) = self.cache.lock().expect("jet cache poisoned").get(&(l, m, k)) {
            return e.clone();
        }
        let e = if l > 0 {
            self.dhat_x(&self.q(l - 1, m, k))
        } else if m > 0 {
            self.frame.derive(Axis::Y, &self.q(0, m - 1, k))
        } else if k > 0 {
            self.frame.derive(Axis::P, &self.q(0, 0, k - 1))
        } else {
            self.frame.rhs().clone()
        };
        self.cache.lock().expect("jet cache poisoned").insert((l, m, k), e.clone());
        e
    }

    pub fn i(&self) -> RelInv {
        RelInv::new(self.q(0, 0, 4), Weight::I)
    }

    pub fn h(&self) -> RelInv {
        let q = |l, m, k| self.q(l, m, k);
        let f = self.frame.rhs();
        let value = q(2, 0, 2) - q(1, 1, 1).scale(rat(4, 1))
            + q(0, 2, 0).scale(rat(6, 1))
            + f * (q(1, 0, 3).scale(rat(2, 1)) - q(0, 1, 2).scale(rat(3, 1)))
            - q(0, 0, 1) * (q(1, 0, 2) - q(0, 1, 1).scale(rat(4, 1)))
            + q(0, 0, 3) * q(1, 0, 0)
            - (q(0, 0, 2) * q(0, 1, 0)).scale(rat(3, 1))
            + f * f * q(0, 0, 4);
        RelInv::new(value, Weight::H)
    }

    fn require_i(&self) -> Result<Expr, JetError> {
        let i = self.q(0, 0, 4);
        if i.is_zero() {
            return Err(JetError::NonGeneric("I"));
        }
        Ok(i)
    }

    /// `Δp = Dp + (r - s) q⁵/(5 q⁴)`, raising the weight by `(-1, 1)`.
    pub fn delta_p(&self, inv: &RelInv) -> Result<RelInv, JetError> {
        let q4 = self.require_i()?;
        let Weight { r, s } = inv.weight;
        let corr = (self.q(0, 0, 5) / q4).scale(rat(r - s, 5));
        let value = self.frame.derive(Axis::P, &inv.value) + corr * &inv.value;
        Ok(RelInv::new(value, inv.weight + Weight::new(-1, 1)))
    }

    /// `Δx`, raising the weight by `(1, 0)`.
    pub fn delta_x(&self, inv: &RelInv) -> Result<RelInv, JetError> {
        let q4 = self.require_i()?;
        let Weight { r, s } = inv.weight;
        let f = self.frame.rhs();
        let q1 = self.q(0, 0, 1);
        let t = (self.q(0, 0, 5) * f + self.q(1, 0, 4)) / q4;
        let corr = (q1.scale(rat(3, 1)) + t.scale(rat(2, 1))).scale(rat(r, 1)) + (q1.scale(rat(2, 1)) + t).scale(rat(s, 1));
        let value = self.total_x(&inv.value) + corr * &inv.value;
        Ok(RelInv::new(value, inv.weight + Weight::new(1, 0)))
    }

    /// `Δy`, raising the weight by `(0, 1)`.
    ///
    /// First-order part `R Dx + (1 + pR) Dy + (2q¹ + (5q⁴₁₀ + 6q⁵q)/(5q⁴)) Dp`
    /// with `R = q⁵/(5q⁴)`; this is the first-order part of `[Δp, Δx]`. The
    /// zeroth-order coefficients are those of `[Δp, Δx]` minus weight-(0, 1)
    /// invariant multipliers, fixed so that no order-6 jets remain and the
    /// `q²` coefficients are `3/8` and `1/4`.
    pub fn delta_y(&self, inv: &RelInv) -> Result<RelInv, JetError> {
        let q4 = self.require_i()?;
        let Weight { r, s } = inv.weight;
        let f = self.frame.rhs();
        let p = self.frame.slope();
        let (q1, q2, q5) = (self.q(0, 0, 1), self.q(0, 0, 2), self.q(0, 0, 5));
        let (q4_10, q4_01) = (self.q(1, 0, 4), self.q(0, 1, 4));
        let ratio = (&q5 / &q4).scale(rat(1, 5));
        let cp = q1.scale(rat(2, 1)) + (q4_10.scale(rat(5, 1)) + (&q5 * f).scale(rat(6, 1))) / q4.scale(rat(5, 1));
        let t15 = &q1 * &q5 / &q4;
        let t01 = &q4_01 / &q4;
        let mixed = (&q5 * f + &q4_10) * &q5 / q4.powi(2);
        let cr = q2.scale(rat(3, 8)) + t15.scale(rat(7, 10)) + t01.scale(rat(13, 20)) + mixed.scale(rat(33, 100));
        let cs = q2.scale(rat(1, 4)) - t15.scale(rat(1, 5)) + t01.scale(rat(1, 10)) - mixed.scale(rat(9, 50));
        let e = &inv.value;
        let value = &ratio * self.frame.derive(Axis::X, e)
            + (Expr::one() + p * &ratio) * self.frame.derive(Axis::Y, e)
            + cp * self.frame.derive(Axis::P, e)
            + (cr.scale(rat(r, 1)) + cs.scale(rat(s, 1))) * e;
        Ok(RelInv::new(value, inv.weight + Weight::new(0, 1)))
    }

    /// `Ω⁶ = q⁶ - (6/5) (q⁵)² / q⁴`, of weight `(-4, 5)`.
    pub fn omega6(&self) -> Result<RelInv, JetError> {
        let q4 = self.require_i()?;
        let value = self.q(0, 0, 6) - (self.q(0, 0, 5).powi(2) / q4).scale(rat(6, 5));
        Ok(RelInv::new(value, Weight::new(-4, 5)))
    }
}

/// `q^k_{lm}` of an explicit equation.
pub fn restricted_jet(ode: &Ode2, l: u32, m: u32, k: u32) -> Expr {
    Jets::of(ode).q(l, m, k)
}

pub fn rel_inv_i(ode: &Ode2) -> RelInv {
    Jets::of(ode).i()
}

pub fn rel_inv_h(ode: &Ode2) -> RelInv {
    Jets::of(ode).h()
}

/// True iff neither `I` nor `H` vanishes identically.
pub fn is_generic(ode: &Ode2, cfg: &ZeroTestConfig) -> Result<bool, JetError> {
    let jets = Jets::of(ode);
    Ok(!is_identically_zero(&jets.i().value, cfg)? && !is_identically_zero(&jets.h().value, cfg)?)
}
