//! Matrix exponential: Pade(13) with scaling and squaring.
//!
//! The fixed order-13 approximant with one-norm scaling is accurate to
//! machine precision for the small dense matrices this library handles;
//! the order-selection refinements of adaptive implementations buy nothing
//! at n <= 16.

use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;
use crate::numerics::solve;

const THETA_13: f64 = 5.371920351148152;

const B: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

pub fn expm(m: &Matrix) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::InvalidInput("expm needs a square matrix".into()));
    }
    if !m.all_finite() {
        return Err(Error::InvalidInput("expm input has non-finite entries".into()));
    }
    let n = m.rows();
    let norm = m.norm_one();
    let s = if norm > THETA_13 {
        ((norm / THETA_13).log2().ceil() as i32).max(0)
    } else {
        0
    };
    let a = m.scale(0.5f64.powi(s));

    let eye = Matrix::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    // U = A (A6 (b13 A6 + b11 A4 + b9 A2) + b7 A6 + b5 A4 + b3 A2 + b1 I)
    let u_inner = &(&a2.scale(B[9]) + &(&a4.scale(B[11]) + &a6.scale(B[13]))) * &a6;
    let u_poly = &(&u_inner + &a6.scale(B[7])) + &(&(&a4.scale(B[5]) + &a2.scale(B[3])) + &eye.scale(B[1]));
    let u = &a * &u_poly;
    // V = A6 (b12 A6 + b10 A4 + b8 A2) + b6 A6 + b4 A4 + b2 A2 + b0 I
    let v_inner = &(&a2.scale(B[8]) + &(&a4.scale(B[10]) + &a6.scale(B[12]))) * &a6;
    let v = &(&v_inner + &a6.scale(B[6])) + &(&(&a4.scale(B[4]) + &a2.scale(B[2])) + &eye.scale(B[0]));

    // expm(A) = (V - U)^{-1} (V + U), then undo the scaling by squaring.
    // Solve column by column rather than forming the inverse: substitution
    // reproduces exact quotients (expm(0) == I to the bit), an inverse does
    // not.
    let denom = &v - &u;
    let numer = &v + &u;
    let mut result = Matrix::zeros(n, n);
    for j in 0..n {
        let col = solve::solve(&denom, &numer.col(j))
            .map_err(|_| Error::NumericalFailure("Pade denominator is singular".into()))?;
        result.set_col(j, &col);
    }
    for _ in 0..s {
        result = &result * &result;
        if !result.all_finite() {
            return Err(Error::NumericalFailure("overflow while squaring expm result".into()));
        }
    }
    if !result.all_finite() {
        return Err(Error::NumericalFailure("expm overflowed".into()));
    }
    Ok(result)
}
