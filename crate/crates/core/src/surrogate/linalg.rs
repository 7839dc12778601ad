use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative singular value below which a basis matrix counts as rank deficient.
pub(crate) const RANK_TOLERANCE: f64 = 1e-10;

pub(crate) struct LeastSquares {
    pub coefficients: DVector<f64>,
    /// Diagonal of the hat matrix `X (XᵀX)⁻¹ Xᵀ`.
    pub leverages: Vec<f64>,
}

/// Ordinary least squares through a thin QR of the basis matrix; the rank
/// check uses its singular values.
pub(crate) fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<LeastSquares> {
    let (n, p) = x.shape();
    if n < p {
        return Err(Error::SingularFit(format!("{n} supports for {p} basis terms")));
    }
    let s = x.singular_values();
    let s_max = s.max();
    let s_min = s.min();
    if !(s_max > 0.0) || s_min <= RANK_TOLERANCE * s_max {
        return Err(Error::SingularFit(format!(
            "basis matrix is rank deficient (condition {:.3e})",
            s_max / s_min
        )));
    }
    let qr = x.clone().qr();
    let q = qr.q();
    let coefficients = qr
        .r()
        .solve_upper_triangular(&(q.transpose() * y))
        .ok_or_else(|| Error::SingularFit("triangular factor is singular".into()))?;
    let leverages = (0..n).map(|i| q.row(i).norm_squared()).collect();
    Ok(LeastSquares { coefficients, leverages })
}

/// Solves a small symmetric positive definite system, refusing near-singular matrices.
pub(crate) fn solve_checked(a: DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let s = a.singular_values();
    let s_max = s.max();
    if !(s_max > 0.0) || s.min() <= RANK_TOLERANCE * s_max {
        return None;
    }
    a.cholesky().map(|c| c.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0]);
        let y = DVector::from_vec(vec![2.0, 5.0, 8.0]);
        let ls = least_squares(&x, &y).unwrap();
        assert!((ls.coefficients[0] - 2.0).abs() < 1e-12);
        assert!((ls.coefficients[1] - 3.0).abs() < 1e-12);
        assert!((ls.leverages.iter().sum::<f64>() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn detects_rank_deficiency() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert!(least_squares(&x, &y).is_err());
        assert!(least_squares(&DMatrix::zeros(1, 2), &DVector::zeros(1)).is_err());
    }
}
