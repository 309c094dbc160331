//! Order 5 and 6 invariants and their absolute (barred) versions.

use serde::{Deserialize, Serialize};

use super::{JetError, JetFrame, Jets, RelInv, Weight};
use crate::expr::{rat, Expr, Rational};

/// How fractional powers of `I` and `H` are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SignPolicy {
    /// Plain powers; evaluation fails where `I` or `H` is negative.
    #[default]
    Strict,
    /// Powers of `|I|` and `|H|`, with the signs kept as two extra entries.
    Lenient,
}

pub const BARRED_NAMES: [&str; 11] = ["H10", "H01", "K", "H20", "H11", "H02", "K10", "K01", "Omega6", "Omega5_10", "Omega4_20"];

/// Exponents `(a, b)` of the normalizer `J1^a J2^b` for each barred entry.
pub const fn barred_exponents() -> [(i64, i64); 11] {
    [(3, 1), (2, 2), (1, 2), (4, 1), (3, 2), (2, 3), (2, 2), (1, 3), (-4, 5), (-2, 4), (0, 3)]
}

/// Multiplies barred values by the sign factor `s1^a s2^b` of each entry.
///
/// Absolute invariants are only invariant up to this factor under maps that
/// reverse `dx` or the contact form (see [`super::LiftedMap::orientation`]).
pub fn reorient(values: &mut [f64], signs: [i8; 2]) {
    for (v, (a, b)) in values.iter_mut().zip(barred_exponents()) {
        let flip = (signs[0] < 0 && a % 2 != 0) != (signs[1] < 0 && b % 2 != 0);
        if flip {
            *v = -*v;
        }
    }
}

/// The eleven absolute invariants, in [`BARRED_NAMES`] order.
#[derive(Debug, Clone)]
pub struct Barred {
    pub entries: [Expr; 11],
    /// `sign(I)` and `sign(H)` under the lenient policy.
    pub signs: Option<[Expr; 2]>,
}

impl Barred {
    /// The three invariants used as coordinates.
    pub fn coordinates(&self) -> [&Expr; 3] {
        [&self.entries[0], &self.entries[1], &self.entries[2]]
    }

    /// The eight invariants compared as functions of the coordinates.
    pub fn derived(&self) -> &[Expr] {
        &self.entries[3..]
    }

    pub fn named(&self) -> impl Iterator<Item = (&'static str, &Expr)> {
        BARRED_NAMES.into_iter().zip(self.entries.iter())
    }
}

#[derive(Debug, Clone)]
pub struct InvariantTower {
    pub i: RelInv,
    pub h: RelInv,
    pub h10: RelInv,
    pub h01: RelInv,
    pub k: RelInv,
    pub h20: RelInv,
    pub h11: RelInv,
    pub h02: RelInv,
    pub k10: RelInv,
    pub k01: RelInv,
    pub omega6: RelInv,
    pub omega5_10: RelInv,
    pub omega4_20: RelInv,
    pub j1: RelInv,
    pub j2: RelInv,
}

fn check(name: &'static str, inv: &RelInv, expected: Weight) -> Result<(), JetError> {
    if inv.weight != expected {
        return Err(JetError::WeightMismatch { name, r: inv.weight.r, s: inv.weight.s, er: expected.r, es: expected.s });
    }
    Ok(())
}

impl InvariantTower {
    /// Builds the relative invariants through order 6.
    ///
    /// Only structural degeneracy (`I` literally zero) is detected here;
    /// genericity on a domain is the caller's zero test.
    pub fn build<F: JetFrame>(jets: &Jets<F>) -> Result<Self, JetError> {
        let i = jets.i();
        let h = jets.h();
        if h.value.is_zero() {
            return Err(JetError::NonGeneric("H"));
        }
        let h10 = jets.delta_x(&h)?;
        let h01 = jets.delta_y(&h)?;
        let k = jets.delta_p(&h)?;
        let h20 = jets.delta_x(&h10)?;
        let h11 = jets.delta_x(&h01)?;
        let h02 = jets.delta_y(&h01)?;
        let k10 = jets.delta_x(&k)?;
        let k01 = jets.delta_y(&k)?;
        let omega6 = jets.omega6()?;
        // [Δp, Δx] H - Δy H, each operator applied with its operand's weight
        let bracket = jets.delta_p(&h10)?.value - &k10.value - &h01.value;
        let omega5_10 = RelInv::new(
            (&i.value / &h.value).scale(rat(5, 24)) * bracket,
            i.weight + -h.weight + Weight::new(2, 2),
        );
        let kk = jets.delta_p(&k)?;
        let omega4_20 = RelInv::new(kk.value - &omega6.value * &h.value / i.value.scale(rat(5, 1)), kk.weight);
        let j1 = RelInv::new(i.value.pow(rat(-1, 8)) * h.value.pow(rat(3, 8)), Weight::new(1, 0));
        let j2 = RelInv::new(i.value.pow(rat(1, 4)) * h.value.pow(rat(1, 4)), Weight::new(0, 1));
        let tower = InvariantTower { i, h, h10, h01, k, h20, h11, h02, k10, k01, omega6, omega5_10, omega4_20, j1, j2 };
        tower.check_weights()?;
        Ok(tower)
    }

    fn check_weights(&self) -> Result<(), JetError> {
        let w = Weight::new;
        check("H10", &self.h10, w(3, 1))?;
        check("H01", &self.h01, w(2, 2))?;
        check("K", &self.k, w(1, 2))?;
        check("H20", &self.h20, w(4, 1))?;
        check("H11", &self.h11, w(3, 2))?;
        check("H02", &self.h02, w(2, 3))?;
        check("K10", &self.k10, w(2, 2))?;
        check("K01", &self.k01, w(1, 3))?;
        check("Omega6", &self.omega6, w(-4, 5))?;
        check("Omega5_10", &self.omega5_10, w(-2, 4))?;
        check("Omega4_20", &self.omega4_20, w(0, 3))?;
        // J1 and J2 weights follow from those of I and H
        let from_ih = |a: Rational, b: Rational| {
            let r = a.clone() * Rational::from_integer(self.i.weight.r.into()) + b.clone() * Rational::from_integer(self.h.weight.r.into());
            let s = a * Rational::from_integer(self.i.weight.s.into()) + b * Rational::from_integer(self.h.weight.s.into());
            (r, s)
        };
        let int = |n: i64| Rational::from_integer(n.into());
        if from_ih(rat(-1, 8), rat(3, 8)) != (int(1), int(0)) || from_ih(rat(1, 4), rat(1, 4)) != (int(0), int(1)) {
            return Err(JetError::WeightMismatch { name: "J1/J2", r: 0, s: 0, er: 0, es: 0 });
        }
        Ok(())
    }

    pub fn relative(&self) -> [&RelInv; 11] {
        [&self.h10, &self.h01, &self.k, &self.h20, &self.h11, &self.h02, &self.k10, &self.k01, &self.omega6, &self.omega5_10, &self.omega4_20]
    }

    /// Divides each relative invariant by the normalizer of its weight.
    ///
    /// The printed normalizer exponents are checked against the weights, so
    /// every entry has weight `(0, 0)`. The normalizer `J1^a J2^b` is expanded
    /// as `I^(-a/8 + b/4) H^(3a/8 + b/4)`.
    pub fn barred(&self, policy: SignPolicy) -> Result<Barred, JetError> {
        let (i, h) = match policy {
            SignPolicy::Strict => (self.i.value.clone(), self.h.value.clone()),
            SignPolicy::Lenient => (self.i.value.abs(), self.h.value.abs()),
        };
        let mut entries = Vec::with_capacity(11);
        for ((name, inv), (a, b)) in BARRED_NAMES.into_iter().zip(self.relative()).zip(barred_exponents()) {
            check(name, inv, Weight::new(a, b))?;
            let ei = rat(-a, 8) + rat(b, 4);
            let eh = rat(3 * a, 8) + rat(b, 4);
            entries.push(&inv.value * i.pow(-ei) * h.pow(-eh));
        }
        let signs = match policy {
            SignPolicy::Strict => None,
            SignPolicy::Lenient => Some([&self.i.value / &i, &self.h.value / &h]),
        };
        Ok(Barred { entries: entries.try_into().expect("eleven entries"), signs })
    }
}
