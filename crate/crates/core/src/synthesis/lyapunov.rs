//! Small dense matrix helpers: Lyapunov equations, symmetric square roots and
//! spectral abscissas.

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Solves `A·X + X·Aᵀ + C = 0` by vectorization,
/// `(I ⊗ A + A ⊗ I)·vec(X) = −vec(C)`. Intended for n ≲ 20.
pub fn solve_lyapunov(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let nn = n * n;
    let mut kron = DMatrix::<f64>::zeros(nn, nn);
    // column-major vec: index(i, j) = i + j·n
    for j in 0..n {
        for i in 0..n {
            let row = i + j * n;
            for k in 0..n {
                // (A·X)_{ij} = Σ_k A_ik X_kj
                kron[(row, k + j * n)] += a[(i, k)];
                // (X·Aᵀ)_{ij} = Σ_k X_ik A_jk
                kron[(row, i + k * n)] += a[(j, k)];
            }
        }
    }
    let rhs = DMatrix::from_iterator(nn, 1, c.iter().map(|v| -v));
    let sol = kron
        .full_piv_lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NumericalFailure("singular Lyapunov operator".into()))?;
    let x = DMatrix::from_column_slice(n, n, sol.as_slice());
    Ok(symmetrize(&x))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Symmetric eigen square root; eigenvalues below `floor` are raised to it.
pub fn sym_sqrt(m: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let eig = symmetrize(m).symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(floor).sqrt()));
    symmetrize(&(&eig.eigenvectors * d * eig.eigenvectors.transpose()))
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetrize(m).symmetric_eigenvalues().min()
}

pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetrize(m).symmetric_eigenvalues().max()
}

/// Largest real part among the eigenvalues of `m`.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lyapunov_residual_vanishes() {
        let a = DMatrix::from_row_slice(3, 3, &[-1.0, 2.0, 0.0, 0.0, -3.0, 1.0, 0.5, 0.0, -2.0]);
        let c = DMatrix::identity(3, 3);
        let x = solve_lyapunov(&a, &c).unwrap();
        let r = &a * &x + &x * a.transpose() + &c;
        assert!(r.norm() < 1e-12);
        assert!(min_eigenvalue(&x) > 0.0);
    }

    #[test]
    fn scalar_lyapunov() {
        let a = DMatrix::from_element(1, 1, -2.0);
        let c = DMatrix::from_element(1, 1, 1.0);
        assert!((solve_lyapunov(&a, &c).unwrap()[(0, 0)] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn sqrt_squares_back() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let s = sym_sqrt(&m, 1e-12);
        assert!((&s * &s - &m).norm() < 1e-12);
        assert!((&s - s.transpose()).norm() == 0.0);
    }

    #[test]
    fn abscissa_of_rotation() {
        let m = DMatrix::from_row_slice(2, 2, &[-0.5, 3.0, -3.0, -0.5]);
        assert!((spectral_abscissa(&m) + 0.5).abs() < 1e-12);
    }
}
