//! Plant parameters and the augmented nonlinear turbine model.
//!
//! State `x = [ω, x_t, v_t, z_ω, z_P, θ, M_g]`, input `u = [θ̇, Ṁ_g]`,
//! external input `w = [V, ω^d, P^d]`. Generator-side speed `ω` relates to
//! rotor speed by `ω = N_g·ω_r`.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientSurface;
use crate::{Error, InputMatrix, Result, StateVector};

const DEFAULT_JSON: &str = include_str!("../data/turbine_default.json");

/// Physical constants and actuator limits, SI units throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurbineParameters {
    /// Air density (kg/m³).
    pub rho: f64,
    /// Rotor radius (m).
    pub r: f64,
    /// Gearbox ratio.
    pub n_g: f64,
    /// Drive-train inertia on the rotor side (kg·m²).
    pub j_t: f64,
    /// Combined gearbox and generator efficiency.
    pub eta: f64,
    /// Tower-top modal mass (kg).
    pub m_t: f64,
    /// Tower damping (N·s/m).
    pub d_t: f64,
    /// Tower stiffness (N/m).
    pub k_t: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub mg_min: f64,
    pub mg_max: f64,
    pub dtheta_min: f64,
    pub dtheta_max: f64,
    pub dmg_min: f64,
    pub dmg_max: f64,
    /// Lowest generator speed at which the model is evaluated (rad/s).
    pub omega_min: f64,
    /// Rated electrical power (W).
    pub p_rated: f64,
    /// Rated generator speed (rad/s).
    pub omega_rated: f64,
    pub v_cutin: f64,
    pub v_cutout: f64,
}

impl Default for TurbineParameters {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_JSON).expect("bundled turbine fixture parses")
    }
}

impl TurbineParameters {
    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let p: Self = serde_json::from_str(&text)
            .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho", self.rho),
            ("r", self.r),
            ("n_g", self.n_g),
            ("j_t", self.j_t),
            ("m_t", self.m_t),
            ("d_t", self.d_t),
            ("k_t", self.k_t),
            ("omega_min", self.omega_min),
            ("p_rated", self.p_rated),
            ("omega_rated", self.omega_rated),
            ("v_cutin", self.v_cutin),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Parameters(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::Parameters(format!(
                "eta must lie in (0, 1], got {}",
                self.eta
            )));
        }
        let bounds = [
            ("theta", self.theta_min, self.theta_max),
            ("mg", self.mg_min, self.mg_max),
            ("dtheta", self.dtheta_min, self.dtheta_max),
            ("dmg", self.dmg_min, self.dmg_max),
            ("omega", self.omega_min, self.omega_rated),
            ("v_cut", self.v_cutin, self.v_cutout),
        ];
        for (name, lo, hi) in bounds {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Parameters(format!(
                    "{name}: lower bound {lo} must be below upper bound {hi}"
                )));
            }
        }
        Ok(())
    }

    /// Swept rotor area (m²).
    pub fn rotor_area(&self) -> f64 {
        PI * self.r * self.r
    }

    /// Power contained in the wind crossing the rotor disc (W).
    pub fn wind_power(&self, v: f64) -> f64 {
        0.5 * self.rho * self.rotor_area() * v.powi(3)
    }

    /// `λ = r·ω/(N_g·V)` with `ω` the generator speed.
    pub fn tip_speed_ratio(&self, omega: f64, v: f64) -> Result<f64> {
        if !(v > 0.0) {
            return Err(Error::Domain(format!(
                "tip-speed ratio needs positive wind speed, got {v}"
            )));
        }
        Ok(self.r * omega / (self.n_g * v))
    }

    /// Aerodynamic rotor torque (N·m, rotor side).
    pub fn rotor_torque(
        &self,
        surface: &CoefficientSurface,
        omega: f64,
        v: f64,
        theta: f64,
    ) -> Result<f64> {
        self.guard_omega(omega)?;
        let lambda = self.tip_speed_ratio(omega, v)?;
        let omega_r = omega / self.n_g;
        Ok(self.wind_power(v) * surface.eval_cp(lambda, theta) / omega_r)
    }

    /// Electrical output power `η·ω·M_g` (W).
    pub fn electrical_power(&self, omega: f64, m_g: f64) -> f64 {
        self.eta * omega * m_g
    }

    /// Aerodynamic thrust on the tower top (N).
    pub fn tower_force(&self, surface: &CoefficientSurface, omega: f64, v: f64, theta: f64) -> f64 {
        if !(v > 0.0) {
            return 0.0;
        }
        let lambda = self.r * omega / (self.n_g * v);
        0.5 * self.rho * self.rotor_area() * v * v * surface.eval_ct(lambda, theta)
    }

    /// Characteristic generator-torque scale used for region-2 operation,
    /// `k_opt` such that `M_g = k_opt·ω²` holds the optimal tip-speed ratio.
    pub fn k_opt(&self, surface: &CoefficientSurface) -> f64 {
        let (lambda_opt, _) = surface.cp_opt_point();
        0.5 * self.rho * self.rotor_area() * self.r.powi(3) * surface.cp_opt()
            / (lambda_opt.powi(3) * self.n_g.powi(3))
    }

    pub(crate) fn guard_omega(&self, omega: f64) -> Result<()> {
        if omega < self.omega_min || !omega.is_finite() {
            return Err(Error::Singularity {
                omega,
                omega_min: self.omega_min,
            });
        }
        Ok(())
    }
}

/// Augmented plant state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AugmentedState {
    /// Generator speed (rad/s).
    pub omega: f64,
    /// Tower-top fore-aft position (m).
    pub x_t: f64,
    /// Tower-top fore-aft velocity (m/s).
    pub v_t: f64,
    /// Integral speed error (rad).
    pub z_omega: f64,
    /// Integral power error (J).
    pub z_p: f64,
    /// Pitch angle (rad).
    pub theta: f64,
    /// Generator torque (N·m).
    pub m_g: f64,
}

impl AugmentedState {
    pub fn to_vector(&self) -> StateVector {
        StateVector::from([
            self.omega, self.x_t, self.v_t, self.z_omega, self.z_p, self.theta, self.m_g,
        ])
    }

    pub fn from_vector(v: &StateVector) -> Self {
        Self {
            omega: v[0],
            x_t: v[1],
            v_t: v[2],
            z_omega: v[3],
            z_p: v[4],
            theta: v[5],
            m_g: v[6],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }
}

/// Pitch rate and torque rate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    /// Pitch rate (rad/s).
    pub u1: f64,
    /// Generator-torque rate (N·m/s).
    pub u2: f64,
}

impl ControlInput {
    pub const ZERO: ControlInput = ControlInput { u1: 0.0, u2: 0.0 };
}

/// Wind speed, desired generator speed and desired electrical power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExternalInput {
    /// Wind speed (m/s).
    pub v: f64,
    /// Desired generator speed (rad/s).
    pub omega_d: f64,
    /// Desired electrical power (W).
    pub p_d: f64,
}

/// Drift term `f_a(x, w)` of the augmented model. The full derivative is
/// `f_a(x, w) + B·u`.
pub fn f_augmented(
    params: &TurbineParameters,
    surface: &CoefficientSurface,
    x: &AugmentedState,
    w: &ExternalInput,
) -> Result<StateVector> {
    params.guard_omega(x.omega)?;
    let lambda = params.tip_speed_ratio(x.omega, w.v)?;
    let aero = 0.5 * params.rho * params.rotor_area();
    let ng2_over_j = params.n_g * params.n_g / params.j_t;
    let cp = surface.eval_cp(lambda, x.theta);
    let ct = surface.eval_ct(lambda, x.theta);
    let omega_dot = ng2_over_j * aero * w.v.powi(3) / x.omega * cp - ng2_over_j * x.m_g;
    let v_t_dot = (aero * w.v * w.v * ct - params.d_t * x.v_t - params.k_t * x.x_t) / params.m_t;
    Ok(StateVector::from([
        omega_dot,
        x.v_t,
        v_t_dot,
        w.omega_d - x.omega,
        w.p_d - params.electrical_power(x.omega, x.m_g),
        0.0,
        0.0,
    ]))
}

/// Input matrix `B = [0_{2×5} I_2]ᵀ`.
pub fn b_matrix() -> InputMatrix {
    let mut b = InputMatrix::zeros();
    b[(5, 0)] = 1.0;
    b[(6, 1)] = 1.0;
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::default_surface;

    #[test]
    fn default_fixture_is_valid() {
        let p = TurbineParameters::default();
        p.validate().unwrap();
        assert!((p.dtheta_max - 7f64.to_radians()).abs() < 1e-15);
        assert_eq!(p.dmg_max, 15_000.0);
    }

    #[test]
    fn invalid_parameters_rejected() {
        let mut p = TurbineParameters::default();
        p.eta = 1.2;
        assert!(p.validate().is_err());
        let mut p = TurbineParameters::default();
        p.theta_max = p.theta_min;
        assert!(p.validate().is_err());
        let mut p = TurbineParameters::default();
        p.k_t = 0.0;
        assert!(p.validate().is_err());
        assert!(TurbineParameters::from_json("{\"rho\": 1.0, \"bogus\": 2}").is_err());
    }

    #[test]
    fn wind_power_values() {
        let mut p = TurbineParameters::default();
        assert_eq!(p.wind_power(0.0), 0.0);
        assert!((p.wind_power(6.0) / p.wind_power(3.0) - 8.0).abs() < 1e-12);
        p.rho = 1.225;
        p.r = 10.0;
        // 0.6125·π·100·8
        assert!((p.wind_power(2.0) - 1539.380).abs() < 1e-3);
    }

    #[test]
    fn tip_speed_ratio_values() {
        let mut p = TurbineParameters::default();
        p.r = 65.0;
        p.n_g = 1.0;
        assert!((p.tip_speed_ratio(1.0, 10.0).unwrap() - 6.5).abs() < 1e-15);
        assert_eq!(p.tip_speed_ratio(0.0, 10.0).unwrap(), 0.0);
        let a = p.tip_speed_ratio(3.0, 7.0).unwrap();
        let b = p.tip_speed_ratio(6.0, 14.0).unwrap();
        assert!((a - b).abs() < 1e-15);
        assert!(matches!(p.tip_speed_ratio(1.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn rotor_torque_guards_and_zero_cp() {
        let p = TurbineParameters::default();
        let s = default_surface();
        assert!(matches!(
            p.rotor_torque(&s, 0.01, 10.0, 0.0),
            Err(Error::Singularity { .. })
        ));
        // λ = 4 at full feather: Cp clips to zero there
        let omega = 4.0 * p.n_g * 20.0 / p.r;
        assert_eq!(s.eval_cp(4.0, p.theta_max), 0.0);
        assert_eq!(p.rotor_torque(&s, omega, 20.0, p.theta_max).unwrap(), 0.0);
    }

    #[test]
    fn rotor_torque_hand_evaluation() {
        let p = TurbineParameters::default();
        let s = default_surface();
        // ω_r = 1 rad/s, V = 10 m/s, θ = 0: λ = 6.5
        let omega = p.n_g;
        let cp = s.eval_cp(6.5, 0.0);
        let expected = 0.5 * 1.225 * std::f64::consts::PI * 65.0 * 65.0 * 1000.0 * cp;
        let got = p.rotor_torque(&s, omega, 10.0, 0.0).unwrap();
        assert!((got - expected).abs() <= 1e-9 * expected);
    }

    #[test]
    fn electrical_power_values() {
        let mut p = TurbineParameters::default();
        assert_eq!(p.electrical_power(100.0, 0.0), 0.0);
        p.eta = 1.0;
        assert_eq!(p.electrical_power(2.0, 3.0), 6.0);
        assert_eq!(p.electrical_power(4.0, 6.0), 24.0);
    }

    #[test]
    fn tower_force_values() {
        let p = TurbineParameters::default();
        let s = default_surface();
        let f1 = p.tower_force(&s, 80.0, 8.0, 0.05);
        let f2 = p.tower_force(&s, 160.0, 16.0, 0.05);
        assert!((f2 / f1 - 4.0).abs() < 1e-12);
        let lambda = p.r * 80.0 / (p.n_g * 8.0);
        let expected = 0.5 * p.rho * p.rotor_area() * 64.0 * s.eval_ct(lambda, 0.05);
        assert!((f1 - expected).abs() <= 1e-12 * expected);
        let omega = 4.0 * p.n_g * 20.0 / p.r;
        assert_eq!(p.tower_force(&s, omega, 20.0, p.theta_max), 0.0);
    }

    #[test]
    fn f_augmented_structure() {
        let p = TurbineParameters::default();
        let s = default_surface();
        let x = AugmentedState {
            omega: 9.0,
            x_t: 0.3,
            v_t: -0.1,
            z_omega: 5.0,
            z_p: -1.0,
            theta: 0.1,
            m_g: 1000.0,
        };
        let w = ExternalInput {
            v: 8.0,
            omega_d: 10.0,
            p_d: 0.0,
        };
        let f = f_augmented(&p, &s, &x, &w).unwrap();
        assert_eq!(f[5], 0.0);
        assert_eq!(f[6], 0.0);
        assert_eq!(f[3], 1.0);
        assert_eq!(f[1], x.v_t);
        assert_eq!(f[4], -p.eta * 9.0 * 1000.0);
    }

    #[test]
    fn b_matrix_layout() {
        let b = b_matrix();
        assert_eq!(b[(5, 0)], 1.0);
        assert_eq!(b[(6, 1)], 1.0);
        assert_eq!(b.iter().filter(|v| **v != 0.0).count(), 2);
        assert_eq!(b.transpose() * b, nalgebra::Matrix2::identity());
    }
}
