//! Point transformations with closed-form inverses, lifted to `(x, y, p)`.

use std::collections::BTreeMap;

use super::{JetError, Ode2};
use crate::expr::{differentiate, expand, Expr, Rational, Tape};

/// Building blocks of the transformation family.
#[derive(Debug, Clone, PartialEq)]
pub enum Primitive {
    /// `(x, y) -> M (x, y) + b` with `det M != 0`.
    Affine { m: [[Rational; 2]; 2], b: [Rational; 2] },
    /// `(x, y) -> (y, x)`.
    Swap,
    /// `(x, y) -> (x, y + phi(x))`.
    Shear(Expr),
    /// `(x, y) -> (x, c y)` with `c != 0`.
    ScaleY(Rational),
}

impl Primitive {
    fn forward(&self) -> (Expr, Expr) {
        let (x, y) = (Expr::var("x"), Expr::var("y"));
        match self {
            Primitive::Affine { m, b } => (
                x.scale(m[0][0].clone()) + y.scale(m[0][1].clone()) + Expr::constant(b[0].clone()),
                x.scale(m[1][0].clone()) + y.scale(m[1][1].clone()) + Expr::constant(b[1].clone()),
            ),
            Primitive::Swap => (y, x),
            Primitive::Shear(phi) => (x, y + phi),
            Primitive::ScaleY(c) => (x, y.scale(c.clone())),
        }
    }

    fn inverse(&self) -> (Expr, Expr) {
        let (x, y) = (Expr::var("x"), Expr::var("y"));
        match self {
            Primitive::Affine { m, b } => {
                let det = &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0];
                let (u, v) = (x - Expr::constant(b[0].clone()), y - Expr::constant(b[1].clone()));
                (
                    (u.scale(m[1][1].clone()) - v.scale(m[0][1].clone())).scale(det.recip()),
                    (v.scale(m[0][0].clone()) - u.scale(m[1][0].clone())).scale(det.recip()),
                )
            }
            Primitive::Swap => (y, x),
            Primitive::Shear(phi) => (x.clone(), y - phi),
            Primitive::ScaleY(c) => (x, y.scale(c.recip())),
        }
    }

    fn is_degenerate(&self) -> bool {
        match self {
            Primitive::Affine { m, .. } => (&m[0][0] * &m[1][1] - &m[0][1] * &m[1][0]) == Rational::from_integer(0.into()),
            Primitive::ScaleY(c) => *c == Rational::from_integer(0.into()),
            Primitive::Swap | Primitive::Shear(_) => false,
        }
    }
}

fn compose_into(outer: &(Expr, Expr), inner: &(Expr, Expr)) -> (Expr, Expr) {
    let map: BTreeMap<String, Expr> = [("x".to_string(), inner.0.clone()), ("y".to_string(), inner.1.clone())].into();
    (expand(&crate::expr::substitute(&outer.0, &map)), expand(&crate::expr::substitute(&outer.1, &map)))
}

/// A composition of primitives, with both directions in closed form.
#[derive(Debug, Clone)]
pub struct PointMap {
    pub primitives: Vec<Primitive>,
    pub forward: (Expr, Expr),
    pub inverse: (Expr, Expr),
}

impl PointMap {
    pub fn identity() -> Self {
        PointMap { primitives: Vec::new(), forward: (Expr::var("x"), Expr::var("y")), inverse: (Expr::var("x"), Expr::var("y")) }
    }

    /// Applies `primitives` in order, first one first.
    pub fn compose(primitives: Vec<Primitive>) -> Result<Self, JetError> {
        let mut map = PointMap::identity();
        for p in &primitives {
            if p.is_degenerate() {
                return Err(JetError::DegenerateMap);
            }
            map.forward = compose_into(&p.forward(), &map.forward);
            map.inverse = compose_into(&map.inverse, &p.inverse());
        }
        map.primitives = primitives;
        Ok(map)
    }
}

/// Denominator and numerator of the lifted slope of `(X, Y)`.
fn slope_lift(xm: &Expr, ym: &Expr) -> (Expr, Expr) {
    let p = Expr::var("p");
    let den = differentiate(xm, "x") + &p * differentiate(xm, "y");
    let num = differentiate(ym, "x") + &p * differentiate(ym, "y");
    (num, den)
}

/// The prolongation `(x, y, p) -> (X, Y, P)` of a point map.
#[derive(Debug, Clone)]
pub struct LiftedMap {
    pub x: Expr,
    pub y: Expr,
    pub p: Expr,
    den: Expr,
    jac: Expr,
    tape: Tape,
}

impl LiftedMap {
    fn new(map: &PointMap) -> Result<Self, JetError> {
        let (fx, fy) = &map.forward;
        let (num, den) = slope_lift(fx, fy);
        let p = &num / &den;
        let jac = expand(&(differentiate(fx, "x") * differentiate(fy, "y") - differentiate(fx, "y") * differentiate(fy, "x")));
        let tape = Tape::compile(&[fx.clone(), fy.clone(), den.clone(), num, jac.clone()], &["x", "y", "p"]).map_err(crate::expr::ZeroTestError::from)?;
        Ok(LiftedMap { x: fx.clone(), y: fy.clone(), p, den, jac, tape })
    }

    /// Image of a point, failing where the lift is undefined.
    pub fn apply(&self, pt: [f64; 3]) -> Result<[f64; 3], JetError> {
        let v = self.tape.eval(&pt).map_err(crate::expr::ZeroTestError::from)?;
        if v[2] == 0.0 {
            return Err(JetError::LiftDenominator { x: pt[0], y: pt[1], p: pt[2] });
        }
        Ok([v[0], v[1], v[3] / v[2]])
    }

    /// `Xx + p Xy`, which must not vanish on the working domain.
    pub fn denominator(&self) -> &Expr {
        &self.den
    }

    /// `Xx Yy - Xy Yx`.
    pub fn jacobian(&self) -> &Expr {
        &self.jac
    }

    /// Signs by which `dx` and the contact form `dy - p dx` are rescaled at
    /// `pt`. A barred entry with normalizer `J1^a J2^b` picks up the factor
    /// `s1^a s2^b`, since the weights `(1, 0)` and `(0, 1)` scale like those
    /// two forms.
    pub fn orientation(&self, pt: [f64; 3]) -> Result<[i8; 2], JetError> {
        let v = self.tape.eval(&pt).map_err(crate::expr::ZeroTestError::from)?;
        if v[2] == 0.0 {
            return Err(JetError::LiftDenominator { x: pt[0], y: pt[1], p: pt[2] });
        }
        let sign = |t: f64| if t < 0.0 { -1 } else { 1 };
        Ok([sign(v[2]), sign(v[2] * v[4])])
    }
}

/// Rewrites `y'' = f` in the coordinates `(X, Y)` given by `map`.
///
/// With `P = (Yx + p Yy)/(Xx + p Xy)` the new second derivative is
/// `(D̂x P + f ∂p P)/(Xx + p Xy)`; it is expressed in the new variables by
/// substituting the closed-form inverse and its lifted slope.
pub fn point_transform(ode: &Ode2, map: &PointMap) -> Result<(Ode2, LiftedMap), JetError> {
    let lifted = LiftedMap::new(map)?;
    if lifted.jac.is_zero() {
        return Err(JetError::DegenerateMap);
    }
    let p = Expr::var("p");
    let big_p = &lifted.p;
    let dhat = differentiate(big_p, "x") + &p * differentiate(big_p, "y");
    let q_new = (dhat + ode.f() * differentiate(big_p, "p")) / lifted.denominator();
    let (inum, iden) = slope_lift(&map.inverse.0, &map.inverse.1);
    let back: BTreeMap<String, Expr> =
        [("x".to_string(), map.inverse.0.clone()), ("y".to_string(), map.inverse.1.clone()), ("p".to_string(), inum / iden)].into();
    Ok((Ode2::new(crate::expr::substitute(&q_new, &back))?, lifted))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{eval_num, parse, rat, XYP};

    fn e(src: &str) -> Expr {
        parse(src, XYP).unwrap()
    }

    fn agree(a: &Expr, b: &Expr) {
        for pt in [[0.3, 0.7, 0.9], [1.1, -0.4, 1.7], [-0.6, 0.2, 0.45]] {
            let at = |u: &Expr| eval_num(u, &[("x", pt[0]), ("y", pt[1]), ("p", pt[2])]).unwrap();
            assert!((at(a) - at(b)).abs() < 1e-10 * at(b).abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn identity_leaves_equation_unchanged() {
        let ode = Ode2::parse("x*p^4 + y").unwrap();
        let (t, lift) = point_transform(&ode, &PointMap::identity()).unwrap();
        assert_eq!(t.f(), ode.f());
        assert_eq!(lift.apply([1.0, 2.0, 3.0]).unwrap(), [1.0, 2.0, 3.0]);
    }

    #[test]
    fn swap_inverts_the_graph() {
        // d²x/dy² = -y''/y'^3, and y'' = p^4 becomes -p^4/p^3 at p = 1/p̃
        let ode = Ode2::parse("p^4").unwrap();
        let (t, lift) = point_transform(&ode, &PointMap::compose(vec![Primitive::Swap]).unwrap()).unwrap();
        agree(t.f(), &e("-1/p"));
        assert_eq!(lift.apply([1.0, 2.0, 4.0]).unwrap(), [2.0, 1.0, 0.25]);
        assert!(matches!(lift.apply([1.0, 2.0, 0.0]), Err(JetError::LiftDenominator { .. })));
    }

    #[test]
    fn scaling_x() {
        let m = [[rat(2, 1), rat(0, 1)], [rat(0, 1), rat(1, 1)]];
        let map = PointMap::compose(vec![Primitive::Affine { m, b: [rat(0, 1), rat(0, 1)] }]).unwrap();
        let (t, _) = point_transform(&Ode2::parse("x*p^2 + y").unwrap(), &map).unwrap();
        agree(t.f(), &e("((x/2)*(2*p)^2 + y)/4"));
    }

    #[test]
    fn composition_round_trips() {
        let map = PointMap::compose(vec![
            Primitive::Shear(e("x^2 - x")),
            Primitive::Swap,
            Primitive::Affine { m: [[rat(1, 1), rat(2, 1)], [rat(-1, 1), rat(3, 1)]], b: [rat(1, 2), rat(0, 1)] },
            Primitive::ScaleY(rat(-3, 2)),
        ])
        .unwrap();
        let fwd: BTreeMap<String, Expr> = [("x".to_string(), map.forward.0.clone()), ("y".to_string(), map.forward.1.clone())].into();
        agree(&crate::expr::substitute(&map.inverse.0, &fwd), &e("x"));
        agree(&crate::expr::substitute(&map.inverse.1, &fwd), &e("y"));
        assert!(matches!(PointMap::compose(vec![Primitive::ScaleY(rat(0, 1))]), Err(JetError::DegenerateMap)));
    }
}
