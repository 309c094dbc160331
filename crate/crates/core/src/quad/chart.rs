use std::collections::BTreeMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::expr::{inverse3, is_identically_zero, jacobian, parse, substitute, zero_test, Differentiator, Expr, SampleBox, ZeroTestConfig, XYP};
use crate::jet::{Axis, InvariantTower, JetFrame, Jets};

use super::field::{char_field, independent, verify_integrals, VecField3};
use super::{QuadError, QuadOde};

/// Two pairs of first integrals: `(a, b)` of one field, `(f, g)` of the other.
#[derive(Debug, Clone, PartialEq)]
pub struct Integrals {
    pub a: Expr,
    pub b: Expr,
    pub f: Expr,
    pub g: Expr,
}

impl Integrals {
    pub fn new(a: Expr, b: Expr, f: Expr, g: Expr) -> Result<Self, QuadError> {
        for e in [&a, &b, &f, &g] {
            super::check_vars(e)?;
        }
        Ok(Integrals { a, b, f, g })
    }

    pub fn parse(a: &str, b: &str, f: &str, g: &str) -> Result<Self, QuadError> {
        Integrals::new(parse(a, XYP)?, parse(b, XYP)?, parse(f, XYP)?, parse(g, XYP)?)
    }

    /// The same functions with the roles of the two pairs exchanged.
    pub fn swapped(&self) -> Self {
        Integrals { a: self.f.clone(), b: self.g.clone(), f: self.a.clone(), g: self.b.clone() }
    }
}

/// Which field the chart is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Order {
    /// Chart from the integrals of `X1`; the equation is defined by `X2`.
    Primary,
    /// Chart from the integrals of `X2`; the equation is defined by `X1`.
    Swapped,
}

fn dual_frame(inv: &crate::expr::Matrix3) -> [VecField3; 3] {
    std::array::from_fn(|u| VecField3::new(std::array::from_fn(|j| inv[j][u].clone())))
}

/// Canonical coordinates `(a, b, c)` with `c = -h_a/h_b` where `g = h(a, b, f)`.
#[derive(Debug, Clone)]
pub struct Chart {
    pub ints: Integrals,
    /// The field `(a, b)` are integrals of.
    pub x1: VecField3,
    /// The field defining the associated equation.
    pub x2: VecField3,
    pub h_a: Expr,
    pub h_b: Expr,
    pub h_f: Expr,
    pub c: Expr,
    /// Fields dual to `(a, b, f)`.
    pub abf_frame: [VecField3; 3],
    /// `∇a, ∇b, ∇c`, dual to `(a, b, c)`.
    pub frame: [VecField3; 3],
    /// Jacobian determinant of `(a, b, c)` in `(x, y, p)`.
    pub delta: Expr,
    pub sample_box: SampleBox,
}

/// Builds the canonical chart of the pair `(x1, x2)` from verified integrals.
///
/// The partials of `h` are read off the frame dual to `(a, b, f)`, so `h` is
/// never written down: `h_u = ∇'_u g`.
pub fn build_chart(ints: &Integrals, x1: &VecField3, x2: &VecField3, cfg: &ZeroTestConfig) -> Result<Chart, QuadError> {
    if !verify_integrals(x1, &ints.a, &ints.b, cfg)? {
        return Err(QuadError::BadIntegrals("(a, b)"));
    }
    if !verify_integrals(x2, &ints.f, &ints.g, cfg)? {
        return Err(QuadError::BadIntegrals("(f, g)"));
    }
    let Integrals { a, b, f, g } = ints;
    for (u, v, w, what) in [(a, b, f, "a, b, f"), (a, b, g, "a, b, g"), (a, f, g, "a, f, g"), (b, f, g, "b, f, g")] {
        if !independent(u, v, w, cfg)? {
            return Err(QuadError::Dependent(what));
        }
    }
    let (inv, _) = inverse3(&jacobian(&[a.clone(), b.clone(), f.clone()], ["x", "y", "p"])).ok_or(QuadError::Dependent("a, b, f"))?;
    let abf_frame = dual_frame(&inv);
    let [h_a, h_b, h_f] = std::array::from_fn(|u| abf_frame[u].apply(g));
    if is_identically_zero(&h_a, cfg)? {
        return Err(QuadError::Degenerate("h_a vanishes"));
    }
    if is_identically_zero(&h_b, cfg)? {
        return Err(QuadError::Degenerate("h_b vanishes"));
    }
    let c = -(&h_a / &h_b);
    let (inv, delta) = inverse3(&jacobian(&[a.clone(), b.clone(), c.clone()], ["x", "y", "p"])).ok_or(QuadError::Degenerate("(a, b, c) are dependent"))?;
    if is_identically_zero(&delta, cfg)? {
        return Err(QuadError::Degenerate("(a, b, c) are dependent: h_a h_bf - h_b h_af vanishes"));
    }
    Ok(Chart {
        ints: ints.clone(),
        x1: x1.clone(),
        x2: x2.clone(),
        h_a,
        h_b,
        h_f,
        c,
        abf_frame,
        frame: dual_frame(&inv),
        delta,
        sample_box: cfg.sample_box.clone(),
    })
}

impl Chart {
    /// The chart coordinates as functions of `(x, y, p)`.
    pub fn coords(&self) -> [&Expr; 3] {
        [&self.ints.a, &self.ints.b, &self.c]
    }

    /// `∇u(v) - δ_uv` for `u, v` in `(a, b, c)`; each entry should vanish.
    pub fn duality_residuals(&self) -> [[Expr; 3]; 3] {
        let coords = self.coords();
        std::array::from_fn(|u| {
            std::array::from_fn(|v| {
                let d = self.frame[u].apply(coords[v]);
                if u == v {
                    d - Expr::one()
                } else {
                    d
                }
            })
        })
    }

    /// `h_aa h_b² - 2 h_a h_b h_ab + h_bb h_a²`, with second partials from
    /// the `(a, b, f)` frame applied twice.
    pub fn flex(&self) -> Expr {
        let h_aa = self.abf_frame[0].apply(&self.h_a);
        let h_ab = self.abf_frame[1].apply(&self.h_a);
        let h_bb = self.abf_frame[1].apply(&self.h_b);
        h_aa * self.h_b.powi(2) - (&self.h_a * &self.h_b * h_ab).scale(crate::expr::rat(2, 1)) + h_bb * self.h_a.powi(2)
    }

    /// Rewrites an expression in chart variables `a, b, c` as a function of
    /// `(x, y, p)`.
    pub fn pull_back(&self, e: &Expr) -> Expr {
        let map: BTreeMap<String, Expr> =
            [("a".to_string(), self.ints.a.clone()), ("b".to_string(), self.ints.b.clone()), ("c".to_string(), self.c.clone())].into();
        substitute(e, &map)
    }
}

/// The associated equation `b'' = G(a, b, b')`, with `G` kept as a function
/// on the original `(x, y, p)`.
#[derive(Debug, Clone)]
pub struct AssocOde {
    pub chart: Chart,
    pub g: Expr,
    pub order: Order,
}

/// `G = X2(c)/X2(a)`, cross-checked against `G = -Flex(h)/h_b³`.
pub fn assoc_ode(chart: &Chart, order: Order, cfg: &ZeroTestConfig) -> Result<AssocOde, QuadError> {
    let x2 = &chart.x2;
    let x2a = x2.apply(&chart.ints.a);
    if is_identically_zero(&x2a, cfg)? {
        return Err(QuadError::WrongRole);
    }
    if !is_identically_zero(&(x2.apply(&chart.ints.b) - &chart.c * &x2a), cfg)? {
        return Err(QuadError::Degenerate("X2 is not tangent to db - c da"));
    }
    let g = x2.apply(&chart.c) / x2a;
    let report = zero_test(&(&g * chart.h_b.powi(3) + chart.flex()), cfg)?;
    if !report.is_zero() {
        return Err(QuadError::RouteDisagreement { max_abs: report.max_abs, witness: report.witness });
    }
    Ok(AssocOde { chart: chart.clone(), g, order })
}

/// True iff `ghat(a, b, c)`, composed with the chart, equals `G`.
pub fn verify_closed_form(assoc: &AssocOde, ghat: &Expr, cfg: &ZeroTestConfig) -> Result<bool, QuadError> {
    if let Some(v) = ghat.free_vars().into_iter().find(|v| !["a", "b", "c"].contains(&v.as_str())) {
        return Err(QuadError::ForeignVariable(v));
    }
    Ok(is_identically_zero(&(assoc.chart.pull_back(ghat) - &assoc.g), cfg)?)
}

/// Both associated equations of a pair of fields: the first from the chart
/// of `(a, b)`, the second with the roles of the fields exchanged.
pub fn associated_pair(ints: &Integrals, x1: &VecField3, x2: &VecField3, cfg: &ZeroTestConfig) -> Result<(AssocOde, AssocOde), QuadError> {
    let first = assoc_ode(&build_chart(ints, x1, x2, cfg)?, Order::Primary, cfg)?;
    let second = assoc_ode(&build_chart(&ints.swapped(), x2, x1, cfg)?, Order::Swapped, cfg)?;
    Ok((first, second))
}

/// The dual pair of associated equations of a hyperbolic quadratic equation.
///
/// `(a, b)` are matched with whichever root field they are integrals of; the
/// first returned equation is built from their chart.
pub fn dual_pair(q: &QuadOde, ints: &Integrals, cfg: &ZeroTestConfig) -> Result<(AssocOde, AssocOde), QuadError> {
    let (l1, l2) = q.factor_roots(cfg)?;
    let (x1, x2) = (char_field(&l1), char_field(&l2));
    if verify_integrals(&x1, &ints.a, &ints.b, cfg)? {
        associated_pair(ints, &x1, &x2, cfg)
    } else if verify_integrals(&x2, &ints.a, &ints.b, cfg)? {
        associated_pair(ints, &x2, &x1, cfg)
    } else {
        Err(QuadError::BadIntegrals("(a, b)"))
    }
}

/// The chart frame as a jet frame: `∇a, ∇b, ∇c` play `∂x, ∂y, ∂p`, the
/// coordinate `c` plays `p` and `G` plays `f`.
pub struct ChartFrame {
    frame: [VecField3; 3],
    c: Expr,
    g: Expr,
    diff: Mutex<Differentiator>,
}

impl ChartFrame {
    pub fn new(assoc: &AssocOde) -> Self {
        ChartFrame { frame: assoc.chart.frame.clone(), c: assoc.chart.c.clone(), g: assoc.g.clone(), diff: Mutex::new(Differentiator::new()) }
    }
}

impl JetFrame for ChartFrame {
    fn derive(&self, axis: Axis, e: &Expr) -> Expr {
        let field = match axis {
            Axis::X => &self.frame[0],
            Axis::Y => &self.frame[1],
            Axis::P => &self.frame[2],
        };
        field.apply_with(e, &self.diff)
    }

    fn slope(&self) -> &Expr {
        &self.c
    }

    fn rhs(&self) -> &Expr {
        &self.g
    }
}

impl AssocOde {
    pub fn jets(&self) -> Jets<ChartFrame> {
        Jets::new(ChartFrame::new(self))
    }
}

/// The invariant tower of an associated equation, computed on `(x, y, p)`
/// through the chart frame.
pub fn assoc_invariants(assoc: &AssocOde, cfg: &ZeroTestConfig) -> Result<InvariantTower, QuadError> {
    let jets = assoc.jets();
    if is_identically_zero(&jets.i().value, cfg)? {
        return Err(QuadError::NonGeneric("I vanishes (cubic class)"));
    }
    if is_identically_zero(&jets.h().value, cfg)? {
        return Err(QuadError::NonGeneric("H vanishes"));
    }
    Ok(InvariantTower::build(&jets)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{differentiate, ABC};

    fn cfg() -> ZeroTestConfig {
        ZeroTestConfig::default().with_box(SampleBox::new().with("x", 0.1, 0.9).with("y", 0.2, 1.2).with("p", 0.3, 1.3))
    }

    fn example_one() -> (Integrals, VecField3, VecField3) {
        let ints = Integrals::parse("p - x", "x^2/2 - p*x + y", "p", "y - p*x").unwrap();
        (ints, char_field(&Expr::one()), char_field(&Expr::zero()))
    }

    fn zero(e: &Expr) -> bool {
        is_identically_zero(e, &cfg()).unwrap()
    }

    #[test]
    fn example_one_chart() {
        let (ints, x1, x2) = example_one();
        let chart = build_chart(&ints, &x1, &x2, &cfg()).unwrap();
        assert!(zero(&(&chart.c + Expr::var("x"))));
        for row in chart.duality_residuals() {
            for r in row {
                assert!(zero(&r));
            }
        }
        let swapped = build_chart(&ints.swapped(), &x2, &x1, &cfg()).unwrap();
        assert!(zero(&(&swapped.c + Expr::var("x"))));
    }

    #[test]
    fn example_one_pair() {
        let (ints, x1, x2) = example_one();
        let (g2, g1) = associated_pair(&ints, &x1, &x2, &cfg()).unwrap();
        assert!(zero(&(&g2.g - Expr::one())));
        assert!(zero(&(&g1.g + Expr::one())));
        assert!(verify_closed_form(&g2, &Expr::one(), &cfg()).unwrap());
        assert!(!verify_closed_form(&g2, &Expr::zero(), &cfg()).unwrap());
        assert!(matches!(assoc_invariants(&g2, &cfg()), Err(QuadError::NonGeneric(_))));
    }

    #[test]
    fn roles_and_degeneracy() {
        let (ints, x1, x2) = example_one();
        assert!(matches!(build_chart(&ints, &x2, &x1, &cfg()), Err(QuadError::BadIntegrals("(a, b)"))));
        let same = Integrals { f: ints.a.clone(), ..ints.clone() };
        assert!(build_chart(&same, &x1, &x1, &cfg()).is_err());
    }

    #[test]
    fn printed_frame_formulas() {
        // ∇c = (grad a × grad b)/Δ, with Δ = a_p b_x c_y - a_p b_y c_x - a_y b_x c_p
        // + a_y b_p c_x + a_x b_y c_p - a_x b_p c_y
        let q = QuadOde::parse("x - 1", "-x").unwrap();
        let ints = Integrals::parse("x^2/2 + p", "-x^3/3 - p*x + y", "p - x", "x^2/2 - p*x + y").unwrap();
        let (p1, p2) = dual_pair(&q, &ints, &cfg()).unwrap();
        for chart in [&p1.chart, &p2.chart] {
            let d = |u: &Expr, v: &str| differentiate(u, v);
            let (a, b, c) = (&chart.ints.a, &chart.ints.b, &chart.c);
            let delta = d(a, "p") * d(b, "x") * d(c, "y") - d(a, "p") * d(b, "y") * d(c, "x") - d(a, "y") * d(b, "x") * d(c, "p")
                + d(a, "y") * d(b, "p") * d(c, "x")
                + d(a, "x") * d(b, "y") * d(c, "p")
                - d(a, "x") * d(b, "p") * d(c, "y");
            assert!(zero(&(&delta - &chart.delta)));
            let nc = [
                d(a, "y") * d(b, "p") - d(a, "p") * d(b, "y"),
                d(a, "p") * d(b, "x") - d(a, "x") * d(b, "p"),
                d(a, "x") * d(b, "y") - d(a, "y") * d(b, "x"),
            ];
            for (printed, ours) in nc.iter().zip(&chart.frame[2].comps) {
                assert!(zero(&(printed / &delta - ours)));
            }
        }
    }

    #[test]
    fn pull_back_uses_chart_variables() {
        let (ints, x1, x2) = example_one();
        let chart = build_chart(&ints, &x1, &x2, &cfg()).unwrap();
        let e = chart.pull_back(&parse("a - c", ABC).unwrap());
        assert!(zero(&(e - Expr::var("p"))));
        assert!(zero(&(chart.flex() + Expr::one())));
    }
}
