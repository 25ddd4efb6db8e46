//! Operating points of the augmented model for constant external input.
//!
//! An equilibrium exists iff `Cp(λ^s, θ) = 2P^d/(ρπr²ηV³)` has a root in the
//! pitch bounds, with `λ^s = r·ω^d/(N_g·V)`. When several roots exist the
//! largest pitch angle is used.

use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientSurface;
use crate::linearize::StateScaling;
use crate::turbine::{
    b_matrix, f_augmented, AugmentedState, ControlInput, ExternalInput, TurbineParameters,
};
use crate::{Error, Result};

/// Uniform pitch samples used to bracket roots before bisection.
pub const SCAN_SAMPLES: usize = 2000;
/// Bisection stops once the bracket is narrower than this (rad).
pub const BISECTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub x_s: AugmentedState,
    pub u_s: ControlInput,
    pub w_s: ExternalInput,
    pub lambda_s: f64,
    pub theta_s: f64,
}

/// Power coefficient needed to deliver `w.p_d` at wind speed `w.v`.
pub fn required_cp(params: &TurbineParameters, w: &ExternalInput) -> f64 {
    2.0 * w.p_d / (params.rho * params.rotor_area() * params.eta * w.v.powi(3))
}

/// Pitch samples in `[theta_min, theta_max]`: a uniform scan merged with the
/// surface's pitch grid nodes, so the sample set contains every local extremum
/// of the piecewise-affine map `θ ↦ Cp(λ, θ)`.
fn pitch_samples(surface: &CoefficientSurface, theta_min: f64, theta_max: f64) -> Vec<f64> {
    let mut samples: Vec<f64> = (0..SCAN_SAMPLES)
        .map(|k| {
            if k + 1 == SCAN_SAMPLES {
                theta_max
            } else {
                theta_min + (theta_max - theta_min) * k as f64 / (SCAN_SAMPLES - 1) as f64
            }
        })
        .collect();
    samples.extend(
        surface
            .theta_grid()
            .iter()
            .copied()
            .filter(|t| *t > theta_min && *t < theta_max),
    );
    samples.sort_by(f64::total_cmp);
    samples.dedup();
    samples
}

/// Range `[min, max]` of `Cp(λ, θ)` over `θ ∈ [theta_min, theta_max]`.
pub fn attainable_cp(
    surface: &CoefficientSurface,
    lambda: f64,
    theta_min: f64,
    theta_max: f64,
) -> (f64, f64) {
    pitch_samples(surface, theta_min, theta_max)
        .into_iter()
        .map(|t| surface.eval_cp(lambda, t))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
            (lo.min(c), hi.max(c))
        })
}

/// Largest `θ ∈ [theta_min, theta_max]` with `Cp(λ, θ) = target_cp`.
pub fn solve_theta(
    surface: &CoefficientSurface,
    lambda: f64,
    target_cp: f64,
    theta_min: f64,
    theta_max: f64,
) -> Result<f64> {
    let samples = pitch_samples(surface, theta_min, theta_max);
    let g = |t: f64| surface.eval_cp(lambda, t) - target_cp;
    let values: Vec<f64> = samples.iter().map(|&t| g(t)).collect();
    let n = samples.len();
    if values[n - 1] == 0.0 {
        return Ok(samples[n - 1]);
    }
    for k in (0..n - 1).rev() {
        if values[k] * values[k + 1] < 0.0 {
            return Ok(bisect(&g, samples[k], samples[k + 1], values[k]));
        }
        if values[k] == 0.0 {
            return Ok(samples[k]);
        }
    }
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v + target_cp), hi.max(v + target_cp))
        });
    Err(Error::NoEquilibrium {
        required: target_cp,
        lambda,
        min,
        max,
    })
}

fn bisect(g: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, g_lo: f64) -> f64 {
    let lo_negative = g_lo < 0.0;
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if (gm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Equilibrium of the augmented model for constant `w_s`. Integrator states
/// are set to zero.
pub fn compute_equilibrium(
    params: &TurbineParameters,
    surface: &CoefficientSurface,
    w_s: &ExternalInput,
) -> Result<Equilibrium> {
    if !(w_s.v > 0.0) {
        return Err(Error::Domain(format!(
            "equilibrium needs positive wind speed, got {}",
            w_s.v
        )));
    }
    if !(w_s.p_d >= 0.0) {
        return Err(Error::Domain(format!(
            "desired power must be nonnegative, got {}",
            w_s.p_d
        )));
    }
    params.guard_omega(w_s.omega_d)?;
    let lambda_s = params.tip_speed_ratio(w_s.omega_d, w_s.v)?;
    let target = required_cp(params, w_s);
    let theta_s = solve_theta(surface, lambda_s, target, params.theta_min, params.theta_max)?;
    let m_g = w_s.p_d / (params.eta * w_s.omega_d);
    let x_t = 0.5 * params.rho * params.rotor_area() / params.k_t
        * w_s.v
        * w_s.v
        * surface.eval_ct(lambda_s, theta_s);
    Ok(Equilibrium {
        x_s: AugmentedState {
            omega: w_s.omega_d,
            x_t,
            v_t: 0.0,
            z_omega: 0.0,
            z_p: 0.0,
            theta: theta_s,
            m_g,
        },
        u_s: ControlInput::ZERO,
        w_s: *w_s,
        lambda_s,
        theta_s,
    })
}

/// Max-norm of `f_a(x^s, w^s) + B·u^s`, each row divided by its
/// characteristic magnitude (per second).
pub fn scaled_residual(
    params: &TurbineParameters,
    surface: &CoefficientSurface,
    eq: &Equilibrium,
    scaling: &StateScaling,
) -> Result<f64> {
    let u = nalgebra::Vector2::new(eq.u_s.u1, eq.u_s.u2);
    let f = f_augmented(params, surface, &eq.x_s, &eq.w_s)? + b_matrix() * u;
    Ok(f.iter()
        .zip(scaling.state.iter())
        .map(|(r, s)| (r / s).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::default_surface;

    #[test]
    fn required_cp_values() {
        let p = TurbineParameters::default();
        let w = ExternalInput {
            v: 10.0,
            omega_d: 100.0,
            p_d: 0.0,
        };
        assert_eq!(required_cp(&p, &w), 0.0);
        let w1 = ExternalInput {
            p_d: p.eta * p.wind_power(10.0),
            ..w
        };
        assert!((required_cp(&p, &w1) - 1.0).abs() < 1e-12);
        let w2 = ExternalInput { v: 20.0, ..w1 };
        assert!((required_cp(&p, &w2) - 1.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_root_and_unreachable_target() {
        let s = default_surface();
        let p = TurbineParameters::default();
        let target = s.eval_cp(5.0, p.theta_max);
        let theta = solve_theta(&s, 5.0, target, p.theta_min, p.theta_max).unwrap();
        assert_eq!(theta, p.theta_max);
        let (_, max) = attainable_cp(&s, 5.0, p.theta_min, p.theta_max);
        let err = solve_theta(&s, 5.0, max + 1e-6, p.theta_min, p.theta_max).unwrap_err();
        assert!(matches!(err, Error::NoEquilibrium { .. }));
    }

    #[test]
    fn closed_form_components() {
        let p = TurbineParameters::default();
        let s = default_surface();
        let w = ExternalInput {
            v: 14.0,
            omega_d: p.omega_rated,
            p_d: 0.8 * p.p_rated,
        };
        let eq = compute_equilibrium(&p, &s, &w).unwrap();
        assert_eq!(eq.x_s.m_g, w.p_d / (p.eta * w.omega_d));
        assert_eq!(eq.x_s.v_t, 0.0);
        assert_eq!(eq.x_s.omega, w.omega_d);
        assert_eq!(eq.u_s, ControlInput::ZERO);
        let res = scaled_residual(&p, &s, &eq, &StateScaling::characteristic(&p)).unwrap();
        assert!(res <= 1e-8, "residual {res}");
    }

    #[test]
    fn too_slow_generator_is_rejected() {
        let p = TurbineParameters::default();
        let s = default_surface();
        let w = ExternalInput {
            v: 10.0,
            omega_d: 0.01,
            p_d: 1e5,
        };
        assert!(matches!(
            compute_equilibrium(&p, &s, &w),
            Err(Error::Singularity { .. })
        ));
    }
}
