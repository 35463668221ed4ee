use super::{lu, LinalgError, Matrix};
use crate::scalar::Real;

// Coefficients of the [13/13] Padé approximant to exp.
const B13: [f64; 14] = [
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

// Largest 1-norm for which the [13/13] approximant meets double-precision backward error.
const THETA_13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a degree-13 Padé approximant.
///
/// Panics on non-square input; returns an error only for non-finite entries or a singular Padé
/// denominator (which cannot happen after scaling for finite input).
pub fn matrix_exponential<T: Real>(m: &Matrix<T>) -> Result<Matrix<T>, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    if !m.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = m.rows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let norm = m.norm_one().as_f64();
    let squarings = if norm > THETA_13 { (norm / THETA_13).log2().ceil() as i32 } else { 0 };
    let a = if squarings > 0 { m.scale(T::lit(0.5f64.powi(squarings))) } else { m.clone() };

    let b = |k: usize| T::lit(B13[k]);
    let id = Matrix::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &a6 * &(a6.scale(b(13)) + a4.scale(b(11)) + a2.scale(b(9)));
    let u_outer = u_inner + a6.scale(b(7)) + a4.scale(b(5)) + a2.scale(b(3)) + id.scale(b(1));
    let u = &a * &u_outer;
    let v_inner = &a6 * &(a6.scale(b(12)) + a4.scale(b(10)) + a2.scale(b(8)));
    let v = v_inner + a6.scale(b(6)) + a4.scale(b(4)) + a2.scale(b(2)) + id.scale(b(0));

    let mut r = lu::solve(&(&v - &u), &(&v + &u))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_of_zero_is_identity() {
        let e = matrix_exponential(&Matrix::<f64>::zeros(3, 3)).unwrap();
        assert_eq!(e, Matrix::identity(3));
    }

    #[test]
    fn rotation_generator() {
        for &t in &[0.1f64, 1.0, 2.5, 10.0, 50.0] {
            let m = Matrix::from_rows(&[[0.0, t], [-t, 0.0]]);
            let e = matrix_exponential(&m).unwrap();
            let want = Matrix::from_rows(&[[t.cos(), t.sin()], [-t.sin(), t.cos()]]);
            assert!(e.max_abs_diff(&want) < 1e-12 * (1.0 + t), "t = {t}");
        }
    }

    #[test]
    fn works_in_single_precision() {
        let m = Matrix::<f32>::from_rows(&[[0.0, 1.0], [-1.0, 0.0]]);
        let e = matrix_exponential(&m).unwrap();
        assert!((e[(0, 0)] - 1f32.cos()).abs() < 1e-6);
        assert!((e[(0, 1)] - 1f32.sin()).abs() < 1e-6);
    }
}
