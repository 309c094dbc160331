//! Worked examples: four quadratic equations (or pairs of fields) with
//! verified first integrals and the closed forms of their associated
//! equations in chart variables `a, b, c`.

use crate::expr::{parse, SampleBox, ZeroTestConfig, ABC};

use super::chart::{associated_pair, dual_pair, AssocOde, Integrals};
use super::field::kernel_field;
use super::{QuadError, QuadOde};

/// Where the two fields come from.
#[derive(Debug, Clone, Copy)]
pub enum Source {
    /// `y''^2 + A y'' + B = 0`, given as `(A, B)`.
    Quadratic { a: &'static str, b: &'static str, roots: [&'static str; 2] },
    /// `X1 = grad a × grad b`, `X2 = grad f × grad g`.
    Kernels,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub source: Source,
    /// `a, b, f, g` in `x, y, p`.
    pub integrals: [&'static str; 4],
    /// Closed forms of the first and second associated equations, where known.
    pub closed_forms: [Option<&'static str>; 2],
    /// Tolerance for certifying each closed form.
    pub tolerances: [f64; 2],
    pub sample_box: SampleBox,
}

fn boxed(x: (f64, f64), y: (f64, f64), p: (f64, f64)) -> SampleBox {
    SampleBox::new().with("x", x.0, x.1).with("y", y.0, y.1).with("p", p.0, p.1)
}

pub fn example_1() -> Fixture {
    Fixture {
        name: "y''^2 - y'' = 0",
        source: Source::Quadratic { a: "-1", b: "0", roots: ["1", "0"] },
        integrals: ["p - x", "x^2/2 - p*x + y", "p", "y - p*x"],
        closed_forms: [Some("1"), Some("-1")],
        tolerances: [1e-9, 1e-9],
        sample_box: boxed((0.25, 1.25), (0.25, 1.25), (0.25, 1.25)),
    }
}

/// The printed `a = p^2 - x^2` is not an integral of `∂x + p∂y + y∂p`;
/// `p^2 - y^2` is.
pub fn example_2() -> Fixture {
    Fixture {
        name: "(y'' - y)(y'' - y') = 0",
        source: Source::Quadratic { a: "-(y + p)", b: "y*p", roots: ["y", "p"] },
        integrals: ["p^2 - y^2", "x - ln(p + y)", "y - p", "p*exp(-x)"],
        closed_forms: [Some("-c*(2 + a*c)/a"), Some("c/a")],
        tolerances: [1e-9, 1e-9],
        sample_box: boxed((0.1, 0.9), (1.5, 2.5), (0.2, 1.0)),
    }
}

/// `b` carries `-x^3/3`; with `+x^3/3` it is not an integral.
pub fn example_3() -> Fixture {
    Fixture {
        name: "(y'' + x)(y'' - 1) = 0",
        source: Source::Quadratic { a: "x - 1", b: "-x", roots: ["-x", "1"] },
        integrals: ["x^2/2 + p", "-x^3/3 - p*x + y", "p - x", "x^2/2 - p*x + y"],
        closed_forms: [
            Some("1/(c - 1)"),
            Some("(-1 - 4*c^2 + 2*sqrt(c^2 + 4*c^4))/(1 + 8*c^2 - 4*sqrt(c^2 + 4*c^4))^(3/2)"),
        ],
        tolerances: [1e-9, 1e-7],
        sample_box: boxed((0.1, 0.9), (0.2, 1.2), (0.3, 1.3)),
    }
}

/// Functions tied by `a^2 - 2ab + f^2 + 2bf - g^2 + b^2 = 1` with
/// `g >= 0` and `b - a + f >= 0`, realized as `(a, b, f) = (x, y, p)`.
pub fn example_4() -> Fixture {
    Fixture {
        name: "a^2 - 2ab + f^2 + 2bf - g^2 + b^2 = 1",
        source: Source::Kernels,
        integrals: ["x", "y", "p", "sqrt(x^2 - 2*x*y + p^2 + 2*y*p + y^2 - 1)"],
        closed_forms: [Some("c/(a - b) - 2*c^2/(a - b) + c^3/(a - b)"), None],
        tolerances: [1e-9, 1e-9],
        sample_box: boxed((0.1, 0.5), (1.5, 2.5), (1.0, 2.0)),
    }
}

pub fn all() -> [Fixture; 4] {
    [example_1(), example_2(), example_3(), example_4()]
}

impl Fixture {
    pub fn config(&self) -> ZeroTestConfig {
        ZeroTestConfig::default().with_box(self.sample_box.clone())
    }

    pub fn integrals(&self) -> Result<Integrals, QuadError> {
        let [a, b, f, g] = self.integrals;
        Integrals::parse(a, b, f, g)
    }

    pub fn quad(&self) -> Option<QuadOde> {
        match self.source {
            Source::Quadratic { a, b, .. } => Some(QuadOde::parse(a, b).expect("fixture equation parses")),
            Source::Kernels => None,
        }
    }

    /// The associated pair, first from the chart of `(a, b)`.
    pub fn pair(&self) -> Result<(AssocOde, AssocOde), QuadError> {
        let ints = self.integrals()?;
        let cfg = self.config();
        match self.quad() {
            Some(q) => dual_pair(&q, &ints, &cfg),
            None => associated_pair(&ints, &kernel_field(&ints.a, &ints.b), &kernel_field(&ints.f, &ints.g), &cfg),
        }
    }

    pub fn closed_form(&self, which: usize) -> Option<crate::expr::Expr> {
        self.closed_forms[which].map(|s| parse(s, ABC).expect("fixture closed form parses"))
    }
}
