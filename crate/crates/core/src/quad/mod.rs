//! Quadratic equations `y''^2 + A y'' + B = 0`, their characteristic
//! fields and the associated equations built in canonical charts.

mod chart;
mod field;
pub mod fixtures;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{expand, parse, Expr, ParseError, Tape, ZeroTestConfig, ZeroTestError, XYP};
use crate::jet::JetError;

pub use chart::{assoc_invariants, assoc_ode, build_chart, dual_pair, verify_closed_form, AssocOde, Chart, ChartFrame, Integrals, Order};
pub use field::{char_field, general_position, kernel_field, lie_bracket, verify_integrals, VecField3};

#[derive(Debug, Clone, Error)]
pub enum QuadError {
    #[error("equation is {0:?} on the sampling box, not hyperbolic")]
    NotHyperbolic(Classification),
    #[error("expression uses variable `{0}` outside x, y, p")]
    ForeignVariable(String),
    #[error("{0} are not independent integrals of their field")]
    BadIntegrals(&'static str),
    #[error("integrals are dependent: {0}")]
    Dependent(&'static str),
    #[error("degenerate chart: {0}")]
    Degenerate(&'static str),
    #[error("X2(a) vanishes identically: (a, b) are integrals of the wrong field")]
    WrongRole,
    #[error("field-transport and Flex routes disagree (max |difference| {max_abs:e})")]
    RouteDisagreement { max_abs: f64, witness: Option<Vec<f64>> },
    #[error("associated equation is not generic: {0}")]
    NonGeneric(&'static str),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    ZeroTest(#[from] ZeroTestError),
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// Sign behaviour of the discriminant on a sampling box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Hyperbolic,
    Elliptic,
    Degenerate,
    Mixed,
}

/// `y''^2 + A(x, y, p) y'' + B(x, y, p) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadOde {
    a: Expr,
    b: Expr,
}

fn check_vars(e: &Expr) -> Result<(), QuadError> {
    match e.free_vars().into_iter().find(|v| !XYP.contains(&v.as_str())) {
        Some(v) => Err(QuadError::ForeignVariable(v)),
        None => Ok(()),
    }
}

impl QuadOde {
    pub fn new(a: Expr, b: Expr) -> Result<Self, QuadError> {
        check_vars(&a)?;
        check_vars(&b)?;
        Ok(QuadOde { a, b })
    }

    pub fn parse(a: &str, b: &str) -> Result<Self, QuadError> {
        QuadOde::new(parse(a, XYP)?, parse(b, XYP)?)
    }

    /// The equation `(y'' - l1)(y'' - l2) = 0`.
    pub fn from_roots(l1: &Expr, l2: &Expr) -> Result<Self, QuadError> {
        QuadOde::new(expand(&-(l1 + l2)), expand(&(l1 * l2)))
    }

    pub fn a(&self) -> &Expr {
        &self.a
    }

    pub fn b(&self) -> &Expr {
        &self.b
    }

    /// `D = A^2 - 4B`.
    pub fn discriminant(&self) -> Expr {
        expand(&(self.a.powi(2) - self.b.scale(crate::expr::rat(4, 1))))
    }

    /// Sign of `D` on the configured box.
    ///
    /// `Degenerate` if `D` passes the zero test; otherwise `Hyperbolic`
    /// (`Elliptic`) when every evaluable sample exceeds the tolerance
    /// (is below minus the tolerance), and `Mixed` in all other cases.
    pub fn classify(&self, cfg: &ZeroTestConfig) -> Result<Classification, QuadError> {
        let d = self.discriminant();
        if crate::expr::is_identically_zero(&d, cfg)? {
            return Ok(Classification::Degenerate);
        }
        let vars: Vec<String> = d.free_vars().into_iter().collect();
        if vars.is_empty() {
            let v = crate::expr::eval_num(&d, &[]).map_err(ZeroTestError::from)?;
            return Ok(if v > 0.0 { Classification::Hyperbolic } else { Classification::Elliptic });
        }
        let tape = Tape::compile(std::slice::from_ref(&d), &vars).map_err(ZeroTestError::from)?;
        let mut sampler = crate::expr::Sampler::new(&cfg.sample_box, &vars, cfg.seed)?;
        let (mut pos, mut neg, mut other) = (0, 0, 0);
        for _ in 0..cfg.trials {
            match tape.eval(&sampler.sample()) {
                Ok(v) if v[0] > cfg.tolerance => pos += 1,
                Ok(v) if v[0] < -cfg.tolerance => neg += 1,
                _ => other += 1,
            }
        }
        Ok(match (pos, neg, other) {
            (_, 0, 0) => Classification::Hyperbolic,
            (0, _, 0) => Classification::Elliptic,
            _ => Classification::Mixed,
        })
    }

    /// `(l1, l2) = ((-A + sqrt D)/2, (-A - sqrt D)/2)` on a hyperbolic box.
    pub fn factor_roots(&self, cfg: &ZeroTestConfig) -> Result<(Expr, Expr), QuadError> {
        match self.classify(cfg)? {
            Classification::Hyperbolic => {}
            other => return Err(QuadError::NotHyperbolic(other)),
        }
        let sqrt_d = self.discriminant().sqrt();
        let half = crate::expr::rat(1, 2);
        Ok(((-&self.a + &sqrt_d).scale(half.clone()), (-&self.a - sqrt_d).scale(half)))
    }
}

impl std::fmt::Display for QuadOde {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "y''^2 + ({})*y'' + ({}) = 0", self.a, self.b)
    }
}
