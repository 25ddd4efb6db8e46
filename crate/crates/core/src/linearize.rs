//! Jacobian of the augmented model at an equilibrium, state scaling, and a
//! controllability test.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientSurface;
use crate::equilibrium::Equilibrium;
use crate::turbine::{b_matrix, TurbineParameters};
use crate::{GainMatrix, InputMatrix, StateMatrix, NU, NX};

/// Relative singular-value threshold of the controllability test.
pub const CONTROLLABILITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub a: StateMatrix,
    pub b: InputMatrix,
    pub equilibrium: Equilibrium,
}

/// Entries of `A` that may be nonzero (zero-based).
pub const SPARSITY: [(usize, usize); 11] = [
    (0, 0),
    (0, 5),
    (0, 6),
    (1, 2),
    (2, 0),
    (2, 1),
    (2, 2),
    (2, 5),
    (3, 0),
    (4, 0),
    (4, 6),
];

/// Linearizes `f_a` around `eq`. Coefficient derivatives come from the
/// surface interpolant; an equilibrium on a grid line uses the cell towards
/// larger arguments.
pub fn linearize(
    params: &TurbineParameters,
    surface: &CoefficientSurface,
    eq: &Equilibrium,
) -> LinearModel {
    let v = eq.w_s.v;
    let omega = eq.x_s.omega;
    let theta = eq.x_s.theta;
    let lambda = eq.lambda_s;
    if surface.on_kink(lambda, theta) {
        log::debug!("linearizing on a surface kink at λ = {lambda}, θ = {theta}");
    }
    let (dcp_dl, dcp_dt) = surface.partial_cp(lambda, theta);
    let (dct_dl, dct_dt) = surface.partial_ct(lambda, theta);
    let cp = surface.eval_cp(lambda, theta);
    let dl_domega = params.r / (params.n_g * v);

    let area = params.rotor_area();
    let ng2 = params.n_g * params.n_g;
    let drive = params.rho * area * ng2 / (2.0 * params.j_t) * v.powi(3);
    let tower = params.rho * area / (2.0 * params.m_t) * v * v;

    let mut a = StateMatrix::zeros();
    a[(0, 0)] = drive * (dcp_dl * dl_domega * omega - cp) / (omega * omega);
    a[(0, 5)] = drive / omega * dcp_dt;
    a[(0, 6)] = -ng2 / params.j_t;
    a[(1, 2)] = 1.0;
    a[(2, 0)] = tower * dct_dl * dl_domega;
    a[(2, 1)] = -params.k_t / params.m_t;
    a[(2, 2)] = -params.d_t / params.m_t;
    a[(2, 5)] = tower * dct_dt;
    a[(3, 0)] = -1.0;
    a[(4, 0)] = -params.eta * eq.x_s.m_g;
    a[(4, 6)] = -params.eta * omega;

    LinearModel {
        a,
        b: b_matrix(),
        equilibrium: *eq,
    }
}

impl LinearModel {
    pub fn controllability(&self) -> Controllability {
        controllability_check(
            &DMatrix::from_column_slice(NX, NX, self.a.as_slice()),
            &DMatrix::from_column_slice(NX, NU, self.b.as_slice()),
        )
    }
}

/// Diagonal characteristic magnitudes of states and inputs. Synthesis works in
/// `ξ̃ = S_x⁻¹ξ`, `μ̃ = S_u⁻¹μ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateScaling {
    pub state: [f64; NX],
    pub input: [f64; NU],
}

impl StateScaling {
    /// Deviation-sized magnitudes: 1 % of rated speed, power and maximum
    /// torque; 0.1 m and 0.1 m/s for the tower; 1° of pitch; the actuator rate
    /// limits for the inputs.
    pub fn characteristic(params: &TurbineParameters) -> Self {
        let omega = 0.01 * params.omega_rated;
        Self {
            state: [
                omega,
                0.1,
                0.1,
                omega,
                0.01 * params.p_rated,
                1f64.to_radians(),
                0.01 * params.mg_max,
            ],
            input: [params.dtheta_max, params.dmg_max],
        }
    }

    pub fn identity() -> Self {
        Self {
            state: [1.0; NX],
            input: [1.0; NU],
        }
    }

    /// `S_x⁻¹·A·S_x`.
    pub fn scale_a(&self, a: &StateMatrix) -> StateMatrix {
        StateMatrix::from_fn(|i, j| a[(i, j)] * self.state[j] / self.state[i])
    }

    /// `S_x⁻¹·B·S_u`.
    pub fn scale_b(&self, b: &InputMatrix) -> InputMatrix {
        InputMatrix::from_fn(|i, j| b[(i, j)] * self.input[j] / self.state[i])
    }

    /// `K_phys = S_u·K̃·S_x⁻¹`.
    pub fn unscale_gain(&self, k: &GainMatrix) -> GainMatrix {
        GainMatrix::from_fn(|i, j| self.input[i] * k[(i, j)] / self.state[j])
    }

    /// `K̃ = S_u⁻¹·K_phys·S_x`.
    pub fn scale_gain(&self, k: &GainMatrix) -> GainMatrix {
        GainMatrix::from_fn(|i, j| k[(i, j)] * self.state[j] / self.input[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Controllability {
    pub controllable: bool,
    pub rank: usize,
}

/// Rank of the Krylov space `span{B, AB, …, Aⁿ⁻¹B}`.
///
/// `A` is first balanced by an exact power-of-two diagonal similarity. The
/// space is then grown block by block; each new block is orthogonalized
/// against the current basis and its numerical rank read off its singular
/// values, relative to `‖A‖` with threshold [`CONTROLLABILITY_TOL`].
pub fn controllability_check(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Controllability {
    let n = a.nrows();
    let (a, d) = balance(a);
    let b = DMatrix::from_fn(n, b.ncols(), |i, j| b[(i, j)] / d[i]);

    let mut basis = DMatrix::<f64>::zeros(n, 0);
    let (mut basis, mut last) = extend_basis(&mut basis, &b, CONTROLLABILITY_TOL * b.norm());
    let a_norm = a.norm();
    while basis.ncols() < n && last.ncols() > 0 && a_norm > 0.0 {
        let next = &a * &last;
        let (nb, nl) = extend_basis(&mut basis, &next, CONTROLLABILITY_TOL * a_norm);
        basis = nb;
        last = nl;
    }
    let rank = basis.ncols();
    Controllability {
        controllable: rank == n,
        rank,
    }
}

/// Orthogonalizes `block` against `basis` and appends its significant left
/// singular vectors. Returns the new basis and the appended columns.
fn extend_basis(
    basis: &mut DMatrix<f64>,
    block: &DMatrix<f64>,
    threshold: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = block.nrows();
    let mut w = block.clone();
    for _ in 0..2 {
        if basis.ncols() > 0 {
            let proj = basis.transpose() * &w;
            w -= &*basis * proj;
        }
    }
    let svd = w.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > threshold && **s > 0.0)
        .map(|(k, _)| k)
        .collect();
    let added = DMatrix::from_fn(n, keep.len(), |i, j| u[(i, keep[j])]);
    let mut combined = DMatrix::zeros(n, basis.ncols() + keep.len());
    combined.columns_mut(0, basis.ncols()).copy_from(basis);
    combined
        .columns_mut(basis.ncols(), keep.len())
        .copy_from(&added);
    (combined, added)
}

/// Osborne balancing with power-of-two factors. Returns `D⁻¹AD` and `D`.
fn balance(a: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut d = vec![1.0; n];
    for _ in 0..100 {
        let mut changed = false;
        for i in 0..n {
            let c: f64 = (0..n).filter(|&k| k != i).map(|k| a[(k, i)].abs()).sum();
            let r: f64 = (0..n).filter(|&k| k != i).map(|k| a[(i, k)].abs()).sum();
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let f = 2f64.powi(((r / c).log2() / 2.0).round() as i32);
            if f != 1.0 && (c * f + r / f) < 0.95 * (c + r) {
                for k in 0..n {
                    a[(k, i)] *= f;
                    a[(i, k)] /= f;
                }
                d[i] *= f;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    (a, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::default_surface;
    use crate::equilibrium::compute_equilibrium;
    use crate::turbine::ExternalInput;

    fn region3_model() -> (TurbineParameters, LinearModel) {
        let p = TurbineParameters::default();
        let s = default_surface();
        let eq = compute_equilibrium(
            &p,
            &s,
            &ExternalInput {
                v: 14.8,
                omega_d: p.omega_rated,
                p_d: 0.8 * p.p_rated,
            },
        )
        .unwrap();
        let m = linearize(&p, &s, &eq);
        (p, m)
    }

    #[test]
    fn constant_entries() {
        let (p, m) = region3_model();
        assert_eq!(m.a[(0, 6)], -p.n_g * p.n_g / p.j_t);
        assert_eq!(m.a[(1, 2)], 1.0);
        assert_eq!(m.a[(3, 0)], -1.0);
        assert_eq!(m.a[(2, 1)], -p.k_t / p.m_t);
        assert_eq!(m.a[(2, 2)], -p.d_t / p.m_t);
        assert_eq!(m.a[(4, 0)], -p.eta * m.equilibrium.x_s.m_g);
        assert_eq!(m.a[(4, 6)], -p.eta * m.equilibrium.x_s.omega);
    }

    #[test]
    fn sparsity_pattern() {
        let (_, m) = region3_model();
        for i in 0..NX {
            for j in 0..NX {
                if !SPARSITY.contains(&(i, j)) {
                    assert_eq!(m.a[(i, j)], 0.0, "entry ({i},{j})");
                }
            }
        }
        assert!(m.a.row(5).iter().chain(m.a.row(6).iter()).all(|v| *v == 0.0));
    }

    #[test]
    fn region3_model_controllable() {
        let (_, m) = region3_model();
        let c = m.controllability();
        assert!(c.controllable, "rank {}", c.rank);
    }

    #[test]
    fn zero_dynamics_not_controllable() {
        let a = DMatrix::zeros(NX, NX);
        let b = DMatrix::from_column_slice(NX, NU, b_matrix().as_slice());
        let c = controllability_check(&a, &b);
        assert_eq!(c.rank, 2);
        assert!(!c.controllable);
    }

    #[test]
    fn scaling_a_by_two_keeps_verdict() {
        let (_, m) = region3_model();
        let a = DMatrix::from_column_slice(NX, NX, m.a.as_slice());
        let b = DMatrix::from_column_slice(NX, NU, m.b.as_slice());
        assert_eq!(
            controllability_check(&a, &b),
            controllability_check(&(a.clone() * 2.0), &b)
        );
    }

    #[test]
    fn scaling_is_a_similarity() {
        let (p, m) = region3_model();
        let s = StateScaling::characteristic(&p);
        let mut e1: Vec<f64> = m.a.complex_eigenvalues().iter().map(|z| z.re).collect();
        let mut e2: Vec<f64> = s
            .scale_a(&m.a)
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .collect();
        e1.sort_by(f64::total_cmp);
        e2.sort_by(f64::total_cmp);
        for (x, y) in e1.iter().zip(&e2) {
            assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()), "{x} vs {y}");
        }
        let k = GainMatrix::from_fn(|i, j| (i * 7 + j) as f64 - 3.0);
        let back = s.scale_gain(&s.unscale_gain(&k));
        assert!((back - k).norm() < 1e-12);
    }
}
