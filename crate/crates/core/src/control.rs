//! Runtime controllers.
//!
//! The robust LQ controller chains, at every sampling instant,
//!
//! 1. `P^d = min(P^ref, η·½ρπr²·V̂³·Cp_opt)` ([`desired_power`]),
//! 2. `ω^d = LUT(P^d)` ([`PowerSpeedTable::desired_speed`]),
//! 3. the blending weight `α(V̂)` ([`compute_alpha`]) and the gain
//!    `K = α·K₂ + (1 − α)·K₃` ([`blended_gain`]),
//! 4. an equilibrium `x^s` for `(V̂, ω^d, P^d)` refreshed with hysteresis,
//!
//! and returns `u = u^s + K·(x − x^s)` with `u^s = 0`.
//!
//! [`BaselineController`] is a conventional two-loop design used as a
//! comparison target.

use log::{debug, warn};
use nalgebra::Vector2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientSurface;
use crate::equilibrium::{compute_equilibrium, Equilibrium};
use crate::turbine::{AugmentedState, ControlInput, ExternalInput, TurbineParameters};
use crate::{Error, GainMatrix, Result};

/// Default half-width of the region-2/3 blending ramp (m/s).
pub const DEFAULT_DELTA_V: f64 = 0.5;
/// Default number of nodes of the generated power/speed table.
pub const DEFAULT_TABLE_NODES: usize = 201;

/// Available electrical power at wind speed `v` when operating at `Cp_opt`.
pub fn available_power(params: &TurbineParameters, surface: &CoefficientSurface, v: f64) -> f64 {
    params.eta * params.wind_power(v) * surface.cp_opt()
}

/// Reference power corrected by the power available in the wind.
pub fn desired_power(
    params: &TurbineParameters,
    surface: &CoefficientSurface,
    p_ref: f64,
    v_hat: f64,
) -> f64 {
    p_ref.min(available_power(params, surface, v_hat))
}

/// Wind speed at which the available power equals `p_ref`.
pub fn region_boundary_speed(
    params: &TurbineParameters,
    surface: &CoefficientSurface,
    p_ref: f64,
) -> f64 {
    (2.0 * p_ref / (params.rho * params.rotor_area() * params.eta * surface.cp_opt())).cbrt()
}

/// Blending weight: 1 deep in region 2, 0 deep in region 3, linear in between.
pub fn compute_alpha(v_hat: f64, v_d: f64, delta_v: f64) -> f64 {
    if v_hat <= v_d - delta_v {
        1.0
    } else if v_hat >= v_d + delta_v {
        0.0
    } else {
        -(v_hat - v_d - delta_v) / (2.0 * delta_v)
    }
}

/// Desired generator speed as a function of desired power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSpeedTable {
    p_grid: Vec<f64>,
    omega_grid: Vec<f64>,
}

impl PowerSpeedTable {
    pub fn new(p_grid: Vec<f64>, omega_grid: Vec<f64>) -> Result<Self> {
        if p_grid.len() != omega_grid.len() || p_grid.len() < 2 {
            return Err(Error::Validation(format!(
                "power/speed table needs two equally long columns with at least 2 rows, got {} and {}",
                p_grid.len(),
                omega_grid.len()
            )));
        }
        if p_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Validation(
                "power/speed table: power column must be strictly increasing".into(),
            ));
        }
        if omega_grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Validation(
                "power/speed table: speed column must be nondecreasing".into(),
            ));
        }
        if p_grid.iter().chain(&omega_grid).any(|v| !v.is_finite()) {
            return Err(Error::Validation("power/speed table has non-finite entries".into()));
        }
        Ok(Self { p_grid, omega_grid })
    }

    /// Table holding the optimal tip-speed ratio:
    /// `ω^d = clamp(N_g·λ_opt·V_eq(P)/r, ω_min, ω_rated)` with `V_eq` the wind
    /// speed whose available power is `P`. Nodes are spaced uniformly in
    /// `V_eq` up to rated power.
    pub fn generate(
        params: &TurbineParameters,
        surface: &CoefficientSurface,
        nodes: usize,
    ) -> Result<Self> {
        let nodes = nodes.max(2);
        let (lambda_opt, _) = surface.cp_opt_point();
        let v_top = region_boundary_speed(params, surface, params.p_rated);
        let mut p_grid = Vec::with_capacity(nodes);
        let mut omega_grid = Vec::with_capacity(nodes);
        for k in 0..nodes {
            let v = v_top * k as f64 / (nodes - 1) as f64;
            let p = if k + 1 == nodes {
                params.p_rated
            } else {
                available_power(params, surface, v)
            };
            let omega = (params.n_g * lambda_opt * v / params.r)
                .clamp(params.omega_min, params.omega_rated);
            p_grid.push(p);
            omega_grid.push(omega);
        }
        Self::new(p_grid, omega_grid)
    }

    pub fn p_grid(&self) -> &[f64] {
        &self.p_grid
    }

    pub fn omega_grid(&self) -> &[f64] {
        &self.omega_grid
    }

    /// Linear interpolation, clamped at both ends.
    pub fn desired_speed(&self, p_d: f64) -> f64 {
        let n = self.p_grid.len();
        if p_d <= self.p_grid[0] {
            return self.omega_grid[0];
        }
        if p_d >= self.p_grid[n - 1] {
            return self.omega_grid[n - 1];
        }
        let i = self.p_grid.partition_point(|p| *p <= p_d) - 1;
        let t = (p_d - self.p_grid[i]) / (self.p_grid[i + 1] - self.p_grid[i]);
        self.omega_grid[i] + t * (self.omega_grid[i + 1] - self.omega_grid[i])
    }
}

/// Region-2 and region-3 gains (physical units) and the blending half-width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainSchedule {
    #[serde(with = "gain_rows")]
    pub k2: GainMatrix,
    #[serde(with = "gain_rows")]
    pub k3: GainMatrix,
    pub delta_v: f64,
}

/// Gains as a row-major list of rows.
pub mod gain_rows {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    use crate::{GainMatrix, NU, NX};

    pub fn serialize<S: Serializer>(k: &GainMatrix, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(k.row_iter().map(|r| r.iter().copied().collect::<Vec<f64>>()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<GainMatrix, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        if rows.len() != NU || rows.iter().any(|r| r.len() != NX) {
            return Err(D::Error::custom(format!("gain must be {NU}×{NX}")));
        }
        Ok(GainMatrix::from_fn(|i, j| rows[i][j]))
    }
}

impl GainSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_v > 0.0) {
            return Err(Error::Validation(format!(
                "delta_v must be positive, got {}",
                self.delta_v
            )));
        }
        if self.k2.iter().chain(self.k3.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Validation("gain schedule has non-finite entries".into()));
        }
        Ok(())
    }
}

/// `α·K₂ + (1 − α)·K₃`.
pub fn blended_gain(schedule: &GainSchedule, alpha: f64) -> GainMatrix {
    schedule.k2 * alpha + schedule.k3 * (1.0 - alpha)
}

/// Hysteresis thresholds for recomputing the equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RefreshPolicy {
    /// Wind-estimate change that triggers a refresh (m/s).
    pub wind_threshold: f64,
    /// Desired-power change that triggers a refresh, as a fraction of rated.
    pub power_threshold: f64,
}

impl Default for RefreshPolicy {
    fn default() -> Self {
        Self {
            wind_threshold: 0.25,
            power_threshold: 0.01,
        }
    }
}

/// Mutable controller memory: the held operating point and gain.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub equilibrium: Option<Equilibrium>,
    pub gain: GainMatrix,
    pub alpha: f64,
    /// Number of equilibrium recomputations.
    pub refreshes: usize,
    /// Number of refresh attempts that found no operating point.
    pub failed_refreshes: usize,
}

impl Default for ControllerState {
    fn default() -> Self {
        Self {
            equilibrium: None,
            gain: GainMatrix::zeros(),
            alpha: 0.0,
            refreshes: 0,
            failed_refreshes: 0,
        }
    }
}

/// Everything a controller decided at one sampling instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    /// Commanded input (before actuator saturation).
    pub u: ControlInput,
    pub p_d: f64,
    pub omega_d: f64,
    pub alpha: f64,
    pub v_hat: f64,
}

/// Static data shared by every robust LQ step.
#[derive(Debug, Clone, Copy)]
pub struct LqContext<'a> {
    pub params: &'a TurbineParameters,
    pub surface: &'a CoefficientSurface,
    pub table: &'a PowerSpeedTable,
    pub schedule: &'a GainSchedule,
    pub refresh: RefreshPolicy,
    pub p_ref: f64,
}

/// Equilibrium for `w`. If `P^d` exceeds what the rotor can deliver at the
/// commanded tip-speed ratio (region 2, where `P^d` is the available power),
/// the operating point is placed at the attainable maximum instead.
pub fn operating_point(
    params: &TurbineParameters,
    surface: &CoefficientSurface,
    w: &ExternalInput,
) -> Result<Equilibrium> {
    match compute_equilibrium(params, surface, w) {
        Err(Error::NoEquilibrium { required, max, .. }) if required > max && max > 0.0 => {
            let clipped = ExternalInput {
                p_d: w.p_d * (max / required) * (1.0 - 1e-9),
                ..*w
            };
            compute_equilibrium(params, surface, &clipped)
        }
        other => other,
    }
}

/// One robust LQ step: reference pipeline, gain blending, equilibrium refresh
/// and deviation feedback.
pub fn control_step(
    state: &mut ControllerState,
    ctx: &LqContext<'_>,
    x: &AugmentedState,
    v_hat: f64,
) -> Result<ControlOutput> {
    let p_d = desired_power(ctx.params, ctx.surface, ctx.p_ref, v_hat);
    let omega_d = ctx.table.desired_speed(p_d);
    let v_d = region_boundary_speed(ctx.params, ctx.surface, ctx.p_ref);
    let alpha = compute_alpha(v_hat, v_d, ctx.schedule.delta_v);

    let needs_refresh = match &state.equilibrium {
        None => true,
        Some(eq) => {
            (v_hat - eq.w_s.v).abs() > ctx.refresh.wind_threshold
                || (p_d - eq.w_s.p_d).abs() > ctx.refresh.power_threshold * ctx.params.p_rated
        }
    };
    if needs_refresh {
        let w = ExternalInput {
            v: v_hat,
            omega_d,
            p_d,
        };
        match operating_point(ctx.params, ctx.surface, &w) {
            Ok(eq) => {
                state.equilibrium = Some(eq);
                state.gain = blended_gain(ctx.schedule, alpha);
                state.alpha = alpha;
                state.refreshes += 1;
                debug!(
                    "equilibrium refresh: V = {v_hat:.3}, P^d = {p_d:.1}, theta_s = {:.5}",
                    eq.theta_s
                );
            }
            Err(e) if state.equilibrium.is_some() => {
                state.failed_refreshes += 1;
                warn!("holding previous equilibrium and gain: {e}");
            }
            Err(e) => return Err(e),
        }
    } else {
        state.gain = blended_gain(ctx.schedule, alpha);
        state.alpha = alpha;
    }
    let eq = state.equilibrium.as_ref().expect("equilibrium set above");
    let xi = x.to_vector() - eq.x_s.to_vector();
    let mu: Vector2<f64> = state.gain * xi;
    Ok(ControlOutput {
        u: ControlInput {
            u1: eq.u_s.u1 + mu[0],
            u2: eq.u_s.u2 + mu[1],
        },
        p_d,
        omega_d,
        alpha: state.alpha,
        v_hat,
    })
}

/// Source of the wind-speed estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", deny_unknown_fields)]
pub enum EstimatorMode {
    /// Torque-balance observer.
    Observer {
        /// Low-pass time constant on the speed derivative (s).
        #[serde(default = "default_tau")]
        tau: f64,
        /// Bisection tolerance on the wind speed (m/s).
        #[serde(default = "default_tolerance")]
        tolerance: f64,
    },
    /// True wind speed plus white Gaussian noise.
    Oracle {
        #[serde(default)]
        noise_std: f64,
    },
}

fn default_tau() -> f64 {
    0.5
}

fn default_tolerance() -> f64 {
    1e-4
}

impl Default for EstimatorMode {
    fn default() -> Self {
        EstimatorMode::Observer {
            tau: default_tau(),
            tolerance: default_tolerance(),
        }
    }
}

/// What the estimator sees at a sampling instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub omega: f64,
    pub m_g: f64,
    pub theta: f64,
    /// Used only in oracle mode.
    pub v_true: f64,
}

/// Wind-speed estimator.
///
/// In observer mode the aerodynamic torque is reconstructed from the drive
/// train balance `M̂_r = (J_t/N_g)·ω̇_f + N_g·M_g`, where `ω̇_f` is the
/// finite-difference speed derivative passed through a first-order low-pass,
/// and `V̂` is the smallest wind speed in `[V_cutin, V_cutout]` whose rotor
/// torque matches `M̂_r`.
#[derive(Debug, Clone)]
pub struct WindEstimator {
    mode: EstimatorMode,
    last_omega: Option<f64>,
    omega_dot: f64,
    estimate: f64,
    rng: ChaCha8Rng,
}

/// Wind-speed samples used to bracket the torque-matching root.
const ESTIMATOR_SCAN: usize = 200;

impl WindEstimator {
    pub fn new(mode: EstimatorMode, initial_estimate: f64, seed: u64) -> Self {
        Self {
            mode,
            last_omega: None,
            omega_dot: 0.0,
            estimate: initial_estimate,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn estimate(&self) -> f64 {
        self.estimate
    }

    pub fn mode(&self) -> EstimatorMode {
        self.mode
    }

    pub fn filtered_omega_dot(&self) -> f64 {
        self.omega_dot
    }

    /// Advances the estimator by `dt` and returns the new estimate.
    pub fn update(
        &mut self,
        params: &TurbineParameters,
        surface: &CoefficientSurface,
        m: &Measurement,
        dt: f64,
    ) -> f64 {
        match self.mode {
            EstimatorMode::Oracle { noise_std } => {
                let noise = if noise_std > 0.0 {
                    Normal::new(0.0, noise_std)
                        .map(|d| d.sample(&mut self.rng))
                        .unwrap_or(0.0)
                } else {
                    0.0
                };
                self.estimate = (m.v_true + noise).max(f64::MIN_POSITIVE);
            }
            EstimatorMode::Observer { tau, tolerance } => {
                if let Some(prev) = self.last_omega {
                    let raw = (m.omega - prev) / dt;
                    let a = dt / (tau + dt);
                    self.omega_dot += a * (raw - self.omega_dot);
                }
                self.last_omega = Some(m.omega);
                let torque = params.j_t / params.n_g * self.omega_dot + params.n_g * m.m_g;
                if let Some(v) = invert_rotor_torque(params, surface, m.omega, m.theta, torque, tolerance)
                {
                    self.estimate = v;
                }
            }
        }
        self.estimate
    }
}

/// Smallest `V ∈ [V_cutin, V_cutout]` with `M_r(ω, V, θ) = torque`.
pub fn invert_rotor_torque(
    params: &TurbineParameters,
    surface: &CoefficientSurface,
    omega: f64,
    theta: f64,
    torque: f64,
    tolerance: f64,
) -> Option<f64> {
    let g = |v: f64| {
        params
            .rotor_torque(surface, omega, v, theta)
            .map(|m| m - torque)
            .ok()
    };
    let (lo, hi) = (params.v_cutin, params.v_cutout);
    let mut prev_v = lo;
    let mut prev_g = g(lo)?;
    if prev_g == 0.0 {
        return Some(lo);
    }
    for k in 1..=ESTIMATOR_SCAN {
        let v = lo + (hi - lo) * k as f64 / ESTIMATOR_SCAN as f64;
        let gv = g(v)?;
        if gv == 0.0 {
            return Some(v);
        }
        if (gv < 0.0) != (prev_g < 0.0) {
            let (mut a, mut b, ga) = (prev_v, v, prev_g);
            while b - a > tolerance {
                let mid = 0.5 * (a + b);
                let gm = g(mid)?;
                if (gm < 0.0) == (ga < 0.0) {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            return Some(0.5 * (a + b));
        }
        prev_v = v;
        prev_g = gv;
    }
    None
}

/// Gains of the baseline controller's pitch loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineConfig {
    /// Closed-loop natural frequency of the speed loop (rad/s).
    pub natural_frequency: f64,
    pub damping_ratio: f64,
    /// Lower bound on `|∂M_r/∂θ|` used for gain scheduling (N·m/rad).
    pub min_sensitivity: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            natural_frequency: 0.6,
            damping_ratio: 0.7,
            min_sensitivity: 1e5,
        }
    }
}

/// Conventional two-loop controller.
///
/// Torque: `M_g = min(k_opt·ω², P^d/(η·ω), M̄_g)`, the optimal-tip-speed law
/// limited to the desired power. Pitch: PI on `ω − ω^d` with
/// `K_p = 2ζω_n·J_t/(N_g·|∂M_r/∂θ|)`, `K_i = ω_n²·J_t/(N_g·|∂M_r/∂θ|)`; the
/// integrator is clamped to the pitch range.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineController {
    pub config: BaselineConfig,
    /// Pitch-loop integrator (rad).
    pub integrator: f64,
}

/// Commanded levels of the baseline controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineCommand {
    pub theta_cmd: f64,
    pub m_g_cmd: f64,
    pub p_d: f64,
    pub omega_d: f64,
}

impl BaselineController {
    pub fn new(config: BaselineConfig, initial_pitch: f64) -> Self {
        Self {
            config,
            integrator: initial_pitch,
        }
    }

    /// Region-2 torque law limited by the desired power.
    pub fn torque_law(params: &TurbineParameters, k_opt: f64, omega: f64, p_d: f64) -> f64 {
        let quadratic = k_opt * omega * omega;
        let limited = if omega > 0.0 {
            p_d / (params.eta * omega)
        } else {
            f64::INFINITY
        };
        quadratic.min(limited).clamp(params.mg_min, params.mg_max)
    }

    /// `|∂M_r/∂θ|` at the current operating point, floored.
    pub fn pitch_sensitivity(
        &self,
        params: &TurbineParameters,
        surface: &CoefficientSurface,
        omega: f64,
        v_hat: f64,
        theta: f64,
    ) -> f64 {
        let lambda = params.r * omega / (params.n_g * v_hat);
        let (_, dcp_dtheta) = surface.partial_cp(lambda, theta);
        let omega_r = omega / params.n_g;
        (params.wind_power(v_hat) * dcp_dtheta / omega_r)
            .abs()
            .max(self.config.min_sensitivity)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn step(
        &mut self,
        params: &TurbineParameters,
        surface: &CoefficientSurface,
        table: &PowerSpeedTable,
        k_opt: f64,
        omega: f64,
        theta: f64,
        v_hat: f64,
        p_ref: f64,
        dt: f64,
    ) -> BaselineCommand {
        let p_d = desired_power(params, surface, p_ref, v_hat);
        let omega_d = table.desired_speed(p_ref);
        let m_g_cmd = Self::torque_law(params, k_opt, omega, p_d);
        let s = self.pitch_sensitivity(params, surface, omega, v_hat, theta);
        let BaselineConfig {
            natural_frequency: wn,
            damping_ratio: zeta,
            ..
        } = self.config;
        let kp = 2.0 * zeta * wn * params.j_t / (params.n_g * s);
        let ki = wn * wn * params.j_t / (params.n_g * s);
        let error = omega - omega_d;
        self.integrator = (self.integrator + ki * error * dt).clamp(params.theta_min, params.theta_max);
        let theta_cmd = (self.integrator + kp * error).clamp(params.theta_min, params.theta_max);
        BaselineCommand {
            theta_cmd,
            m_g_cmd,
            p_d,
            omega_d,
        }
    }
}
