//! Thin wrappers over nalgebra's dense LU.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Solves `a x = b` by partial-pivot LU. `a` is `n x n` row-major.
pub(crate) fn solve(n: usize, a: Vec<f64>, b: Vec<f64>) -> Result<Vec<f64>> {
    let matrix = DMatrix::from_row_slice(n, n, &a);
    let rhs = DVector::from_vec(b);
    let x = matrix.lu().solve(&rhs).ok_or(Error::SolveFailure)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolveFailure);
    }
    Ok(x.iter().copied().collect())
}

/// Solves a symmetric positive (semi)definite system, first by Cholesky and
/// falling back to LU when the factorisation fails.
pub(crate) fn solve_spd(n: usize, a: Vec<f64>, b: Vec<f64>) -> Result<Vec<f64>> {
    let matrix = DMatrix::from_row_slice(n, n, &a);
    let rhs = DVector::from_vec(b.clone());
    if let Some(chol) = matrix.clone().cholesky() {
        let x = chol.solve(&rhs);
        if x.iter().all(|v| v.is_finite()) {
            return Ok(x.iter().copied().collect());
        }
    }
    solve(n, a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let x = solve(2, vec![2.0, 1.0, 1.0, 3.0], vec![3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn singular_system_fails() {
        assert!(matches!(
            solve(2, vec![1.0, 2.0, 2.0, 4.0], vec![1.0, 1.0]),
            Err(Error::SolveFailure)
        ));
    }
}
