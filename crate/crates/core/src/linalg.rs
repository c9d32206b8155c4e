//! Infinity norms and guarded inversion.

use nalgebra::{DMatrix, DVector};

/// Condition estimates above this value are treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

pub fn vec_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Induced infinity-norm: maximum absolute row sum.
pub fn mat_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn is_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|x| x.is_finite())
}

/// Inverse by LU with partial pivoting, together with the infinity-norm
/// condition number `||M|| ||M^-1||`. `Err` carries the condition estimate
/// (infinite when the factorisation breaks down).
pub fn checked_inverse(m: &DMatrix<f64>) -> std::result::Result<(DMatrix<f64>, f64), f64> {
    let norm = mat_norm(m);
    if norm == 0.0 || !norm.is_finite() {
        return Err(f64::INFINITY);
    }
    match m.clone().lu().try_inverse() {
        Some(inv) if is_finite(&inv) => {
            let cond = norm * mat_norm(&inv);
            if cond > SINGULAR_CONDITION {
                Err(cond)
            } else {
                Ok((inv, cond))
            }
        }
        _ => Err(f64::INFINITY),
    }
}
