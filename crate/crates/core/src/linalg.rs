//! Small dense helpers over complex matrices shared by the estimators.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::C64;

/// Relative singular-value threshold below which a column set counts as rank deficient.
pub const RANK_TOL: f64 = 1e-10;

/// Columns `idx` of `matrix`, in the given order.
pub fn select_columns(matrix: &DMatrix<C64>, idx: &[usize]) -> DMatrix<C64> {
    DMatrix::from_fn(matrix.nrows(), idx.len(), |i, j| matrix[(i, idx[j])])
}

/// Full-column-rank least squares `argmin |a x - b|` via SVD.
pub fn least_squares(a: &DMatrix<C64>, b: &DVector<C64>) -> Result<DVector<C64>> {
    if a.ncols() == 0 {
        return Ok(DVector::zeros(0));
    }
    if a.ncols() > a.nrows() {
        return Err(Error::RankDeficient(format!(
            "{} columns with only {} rows",
            a.ncols(),
            a.nrows()
        )));
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > RANK_TOL * smax) {
        return Err(Error::RankDeficient(format!(
            "condition number {:.3e} exceeds {:.0e}",
            smax / smin,
            1.0 / RANK_TOL
        )));
    }
    svd.solve(b, 0.0).map_err(|e| Error::Numerical(e.to_string()))
}

/// Minimum-norm least squares, truncating singular values below `RANK_TOL * s_max`.
pub fn min_norm_least_squares(a: &DMatrix<C64>, b: &DVector<C64>) -> Result<DVector<C64>> {
    if a.ncols() == 0 {
        return Ok(DVector::zeros(0));
    }
    let svd = a.clone().svd(true, true);
    let eps = RANK_TOL * svd.singular_values.max();
    svd.solve(b, eps).map_err(|e| Error::Numerical(e.to_string()))
}

/// Ridge solution `(a^H a + ridge I)^{-1} a^H b`.
pub fn ridge(a: &DMatrix<C64>, b: &DVector<C64>, ridge: f64) -> Result<DVector<C64>> {
    let mut gram = a.adjoint() * a;
    for i in 0..gram.nrows() {
        gram[(i, i)] += C64::new(ridge, 0.0);
    }
    let rhs = a.adjoint() * b;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Numerical("ridge system is not positive definite".into()))?;
    Ok(chol.solve(&rhs))
}

/// Minimum-norm right inverse `a^H (a a^H)^{-1}` of a full-row-rank matrix.
pub fn right_pseudo_inverse(a: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    if a.nrows() > a.ncols() {
        return Err(Error::RankDeficient(format!(
            "{} x {} matrix cannot have full row rank",
            a.nrows(),
            a.ncols()
        )));
    }
    let svd = a.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > RANK_TOL * smax) {
        return Err(Error::RankDeficient("measurement matrix lacks full row rank".into()));
    }
    let gram = a * a.adjoint();
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::RankDeficient("a a^H is not positive definite".into()))?;
    Ok(a.adjoint() * chol.inverse())
}

/// Natural log of the determinant of a Hermitian positive-definite matrix and its Cholesky factor.
pub fn hpd_log_det(matrix: DMatrix<C64>) -> Option<(f64, nalgebra::Cholesky<C64, nalgebra::Dyn>)> {
    let chol = matrix.cholesky()?;
    let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.re.ln()).sum::<f64>();
    Some((log_det, chol))
}

/// Largest singular value.
pub fn spectral_norm(matrix: &DMatrix<C64>) -> f64 {
    matrix.clone().svd(false, false).singular_values.max()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_system_solves_exactly() {
        let a = DMatrix::from_row_slice(2, 2, &[C64::new(2.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        let x = DVector::from_vec(vec![C64::new(1.0, -1.0), C64::new(0.5, 2.0)]);
        let b = &a * &x;
        let got = least_squares(&a, &b).unwrap();
        assert!((got - x).norm() < 1e-12);
    }

    #[test]
    fn duplicate_columns_are_rank_deficient() {
        let a = DMatrix::from_fn(4, 2, |i, _| C64::new(i as f64 + 1.0, 0.0));
        let b = DVector::from_element(4, C64::new(1.0, 0.0));
        assert!(matches!(least_squares(&a, &b), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn right_inverse_is_identity_on_range() {
        let a = DMatrix::from_fn(2, 3, |i, j| C64::new((i * 3 + j) as f64, (i + j) as f64 * 0.5 + 1.0));
        let pinv = right_pseudo_inverse(&a).unwrap();
        let id = &a * pinv;
        assert!((id - DMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn log_det_of_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![C64::new(2.0, 0.0), C64::new(3.0, 0.0)]));
        let (ld, _) = hpd_log_det(m).unwrap();
        assert!((ld - 6f64.ln()).abs() < 1e-14);
    }
}
