//! Independent numerical oracles shared by the integration tests. Nothing here
//! calls into the solvers under test.

#![allow(dead_code)]

use nalgebra::DMatrix;
use windlq::coefficients::CoefficientSurface;
use windlq::equilibrium::Equilibrium;
use windlq::linearize::StateScaling;
use windlq::turbine::{f_augmented, AugmentedState, TurbineParameters};
use windlq::{StateMatrix, StateVector, NX};

/// Solves `a·X + X·aᵀ + c = 0` through the Kronecker form
/// `(I ⊗ a + a ⊗ I)·vec(X) = −vec(c)`.
pub fn kron_lyapunov(a: &DMatrix<f64>, c: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let op = eye.kronecker(a) + a.kronecker(&eye);
    let rhs = -DMatrix::from_column_slice(n * n, 1, c.as_slice());
    let v = op.lu().solve(&rhs).expect("Lyapunov operator is singular");
    let x = DMatrix::from_column_slice(n, n, v.as_slice());
    (&x + x.transpose()) * 0.5
}

pub fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn min_eig(m: &DMatrix<f64>) -> f64 {
    let s = (m + m.transpose()) * 0.5;
    s.symmetric_eigenvalues().min()
}

/// Stabilizing gain (convention `A + B·K`) by Bass's method: with
/// `β > max(−Re λ(A))`, solve `(A + βI)Z + Z(A + βI)ᵀ = 2BBᵀ`, then
/// `K = −Bᵀ Z⁻¹` places every closed-loop eigenvalue at real part `−β`.
pub fn bass_gain(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let beta = 1.0 + a.norm();
    let shifted = a + DMatrix::identity(n, n) * beta;
    // (A+βI)Z + Z(A+βI)ᵀ − 2BBᵀ = 0
    let z = kron_lyapunov(&shifted, &(-(b * b.transpose()) * 2.0));
    let z_inv = z.cholesky().expect("Bass Gramian not positive definite").inverse();
    -(b.transpose() * z_inv)
}

/// Continuous LQR gain by Kleinman's Newton iteration on the Riccati
/// equation `AᵀX + XA − XBR⁻¹BᵀX + Q = 0`. Returns `K = −R⁻¹BᵀX` for the
/// convention `u = K·x`.
pub fn kleinman_lqr(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> DMatrix<f64> {
    let r_inv = r.clone().try_inverse().expect("R singular");
    let mut k = bass_gain(a, b);
    assert!(spectral_abscissa(&(a + b * &k)) < 0.0, "Bass gain does not stabilize");
    for _ in 0..200 {
        let acl = a + b * &k;
        // Aclᵀ X + X Acl + Q + Kᵀ R K = 0
        let x = kron_lyapunov(&acl.transpose(), &(q + k.transpose() * r * &k));
        let next = -(&r_inv * b.transpose() * &x);
        let change = (&next - &k).amax() / next.amax().max(1e-300);
        k = next;
        if change < 1e-14 {
            break;
        }
    }
    k
}

/// Entrywise comparison with relative tolerance and absolute floor. Returns
/// the worst ratio `|a−b| / max(rel·|b|, abs)`; at most 1 means agreement.
pub fn entrywise_ratio(a: &DMatrix<f64>, b: &DMatrix<f64>, rel: f64, abs: f64) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs() / (rel * y.abs()).max(abs))
        .fold(0.0, f64::max)
}

/// Central-difference Jacobian of `f_a` at `eq`, step
/// `h_i = max(1e-6·|x_i|, 1e-7·s_i)` with `s` the characteristic scales.
pub fn fd_jacobian(
    params: &TurbineParameters,
    surface: &CoefficientSurface,
    eq: &Equilibrium,
    scaling: &StateScaling,
) -> StateMatrix {
    let x0 = eq.x_s.to_vector();
    let mut jac = StateMatrix::zeros();
    for j in 0..NX {
        let h = (1e-6 * x0[j].abs()).max(1e-7 * scaling.state[j]);
        let mut xp = x0;
        let mut xm = x0;
        xp[j] += h;
        xm[j] -= h;
        let fp = f_augmented(params, surface, &AugmentedState::from_vector(&xp), &eq.w_s).unwrap();
        let fm = f_augmented(params, surface, &AugmentedState::from_vector(&xm), &eq.w_s).unwrap();
        let col: StateVector = (fp - fm) / (2.0 * h);
        jac.set_column(j, &col);
    }
    jac
}

/// Max-norm of a state difference divided by the characteristic scales.
pub fn scaled_distance(a: &AugmentedState, b: &AugmentedState, scaling: &StateScaling) -> f64 {
    let (va, vb) = (a.to_vector(), b.to_vector());
    (0..NX)
        .map(|i| ((va[i] - vb[i]) / scaling.state[i]).abs())
        .fold(0.0, f64::max)
}

pub fn to_dmatrix<const R: usize, const C: usize>(m: &nalgebra::SMatrix<f64, R, C>) -> DMatrix<f64> {
    DMatrix::from_fn(R, C, |i, j| m[(i, j)])
}
