//! Symbolic 3×3 linear algebra for frames and Jacobians.

use super::{differentiate, expand, Expr};

pub type Matrix3 = [[Expr; 3]; 3];

pub fn det3(m: &Matrix3) -> Expr {
    let minor = |r1: usize, r2: usize, c1: usize, c2: usize| &m[r1][c1] * &m[r2][c2] - &m[r1][c2] * &m[r2][c1];
    &m[0][0] * minor(1, 2, 1, 2) - &m[0][1] * minor(1, 2, 0, 2) + &m[0][2] * minor(1, 2, 0, 1)
}

/// Inverse by the adjugate, together with the determinant.
///
/// Returns `None` only when the determinant is literally zero; vanishing
/// on a region has to be checked numerically by the caller.
pub fn inverse3(m: &Matrix3) -> Option<(Matrix3, Expr)> {
    let det = det3(m);
    if det.is_zero() {
        return None;
    }
    let inv_det = det.recip();
    let cof = |r: usize, c: usize| {
        let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
        let (c1, c2) = ((c + 1) % 3, (c + 2) % 3);
        &m[r1][c1] * &m[r2][c2] - &m[r1][c2] * &m[r2][c1]
    };
    let inv = std::array::from_fn(|i| std::array::from_fn(|j| cof(j, i) * &inv_det));
    Some((inv, det))
}

/// Matrix of partials `∂es[i]/∂vs[j]`.
pub fn jacobian(es: &[Expr; 3], vs: [&str; 3]) -> Matrix3 {
    std::array::from_fn(|i| std::array::from_fn(|j| differentiate(&es[i], vs[j])))
}

/// Expanded determinant of [`jacobian`].
pub fn jacobian_det(es: &[Expr; 3], vs: [&str; 3]) -> Expr {
    expand(&det3(&jacobian(es, vs)))
}
