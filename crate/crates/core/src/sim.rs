//! Closed-loop simulation of the saturated augmented plant.
//!
//! The controller runs every `ts` seconds and its command is held over the
//! sampling interval. The continuous states `ω, x_t, v_t, z_ω, z_P` are
//! integrated with classical fourth-order Runge-Kutta on `integrator_substeps`
//! sub-intervals. Pitch and torque follow the exact solution of the
//! rate-then-level saturated integrator, so the actuator limits hold at every
//! evaluation point. The wind speed is sampled at the controller rate and held.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientSurface;
use crate::control::{
    control_step, desired_power, operating_point, BaselineConfig, BaselineController,
    ControllerState, EstimatorMode, GainSchedule, LqContext, Measurement, PowerSpeedTable,
    RefreshPolicy, WindEstimator,
};
use crate::turbine::{f_augmented, AugmentedState, ControlInput, ExternalInput, TurbineParameters};
use crate::{Error, Result, NX};

/// Integral length scale of the turbulent wind filter (m).
pub const DEFAULT_LENGTH_SCALE: f64 = 340.2;
/// Smallest wind speed produced by the generator (m/s).
pub const MIN_WIND: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindMode {
    Constant,
    Ramp,
    Turbulent,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindSpec {
    pub mode: WindMode,
    /// Mean (turbulent), constant value, or ramp start (m/s).
    #[serde(default)]
    pub mean: f64,
    /// Turbulence intensity, standard deviation over mean.
    #[serde(default)]
    pub intensity: f64,
    /// Ramp slope (m/s²).
    #[serde(default)]
    pub ramp_rate: f64,
    #[serde(default = "default_length_scale")]
    pub length_scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

fn default_length_scale() -> f64 {
    DEFAULT_LENGTH_SCALE
}

impl WindSpec {
    pub fn constant(mean: f64) -> Self {
        Self {
            mode: WindMode::Constant,
            mean,
            intensity: 0.0,
            ramp_rate: 0.0,
            length_scale: DEFAULT_LENGTH_SCALE,
            file: None,
        }
    }

    pub fn turbulent(mean: f64, intensity: f64) -> Self {
        Self {
            mode: WindMode::Turbulent,
            intensity,
            ..Self::constant(mean)
        }
    }

    pub fn ramp(start: f64, rate: f64) -> Self {
        Self {
            mode: WindMode::Ramp,
            ramp_rate: rate,
            ..Self::constant(start)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode != WindMode::File && !(self.mean > 0.0) {
            return Err(Error::Validation(format!(
                "wind mean must be positive, got {}",
                self.mean
            )));
        }
        if !(self.intensity >= 0.0) {
            return Err(Error::Validation(format!(
                "turbulence intensity must be nonnegative, got {}",
                self.intensity
            )));
        }
        if !(self.length_scale > 0.0) {
            return Err(Error::Validation("wind length scale must be positive".into()));
        }
        if self.mode == WindMode::File && self.file.is_none() {
            return Err(Error::Validation("wind mode `file` needs `file`".into()));
        }
        Ok(())
    }
}

/// Wind speed at `t_k = k·ts`, `k = 0..=n` with `n = round(duration/ts)`.
///
/// Turbulent mode: an Ornstein-Uhlenbeck process with time constant
/// `L/mean`, discretized exactly, whose sample mean is then removed and whose
/// sample standard deviation is rescaled to `intensity·mean`.
pub fn generate_wind(spec: &WindSpec, duration: f64, ts: f64, seed: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    let n = sample_count(duration, ts);
    let times = (0..=n).map(|k| k as f64 * ts);
    let series: Vec<f64> = match spec.mode {
        WindMode::Constant => vec![spec.mean; n + 1],
        WindMode::Ramp => times
            .map(|t| (spec.mean + spec.ramp_rate * t).max(MIN_WIND))
            .collect(),
        WindMode::Turbulent => {
            if spec.intensity == 0.0 {
                return Ok(vec![spec.mean; n + 1]);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = (-ts * spec.mean / spec.length_scale).exp();
            let b = (1.0 - a * a).sqrt();
            let mut z: f64 = StandardNormal.sample(&mut rng);
            let mut raw = Vec::with_capacity(n + 1);
            raw.push(z);
            for _ in 0..n {
                let e: f64 = StandardNormal.sample(&mut rng);
                z = a * z + b * e;
                raw.push(z);
            }
            let mean = raw.iter().sum::<f64>() / raw.len() as f64;
            let var = raw.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / raw.len() as f64;
            let scale = if var > 0.0 {
                spec.intensity * spec.mean / var.sqrt()
            } else {
                0.0
            };
            raw.iter()
                .map(|v| (spec.mean + (v - mean) * scale).max(MIN_WIND))
                .collect()
        }
        WindMode::File => {
            let path = spec.file.as_ref().expect("validated");
            let (t, v) = read_wind_csv(path)?;
            times.map(|tk| interpolate(&t, &v, tk)).collect()
        }
    };
    Ok(series)
}

fn sample_count(duration: f64, ts: f64) -> usize {
    (duration / ts).round().max(1.0) as usize
}

fn interpolate(t: &[f64], v: &[f64], x: f64) -> f64 {
    if x <= t[0] {
        return v[0];
    }
    if x >= t[t.len() - 1] {
        return v[v.len() - 1];
    }
    let i = t.partition_point(|ti| *ti <= x) - 1;
    let s = (x - t[i]) / (t[i + 1] - t[i]);
    v[i] + s * (v[i + 1] - v[i])
}

/// Parses a `time_s,wind_mps` CSV with uniform time spacing.
pub fn parse_wind_csv(text: &str, origin: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut t = Vec::new();
    let mut v = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if lineno == 0 {
            if line.replace(' ', "") != "time_s,wind_mps" {
                return Err(Error::parse(
                    origin,
                    format!("line 1: expected header `time_s,wind_mps`, found `{line}`"),
                ));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(Error::parse(
                origin,
                format!("line {}: expected 2 columns, found {}", lineno + 1, fields.len()),
            ));
        }
        let parse = |s: &str, col: usize| {
            s.parse::<f64>().map_err(|e| {
                Error::parse(origin, format!("line {}, column {col}: {e}", lineno + 1))
            })
        };
        t.push(parse(fields[0], 1)?);
        v.push(parse(fields[1], 2)?);
    }
    if t.len() < 2 {
        return Err(Error::parse(origin, "need at least two samples"));
    }
    let dt = t[1] - t[0];
    if !(dt > 0.0) {
        return Err(Error::parse(origin, "time column must be increasing"));
    }
    for (k, w) in t.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt.max(1.0) {
            return Err(Error::parse(
                origin,
                format!("line {}: non-uniform time spacing", k + 3),
            ));
        }
    }
    if let Some(k) = v.iter().position(|x| !(*x > 0.0)) {
        return Err(Error::parse(
            origin,
            format!("line {}: wind speed must be positive", k + 2),
        ));
    }
    Ok((t, v))
}

pub fn read_wind_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    parse_wind_csv(&text, &path.display().to_string())
}

pub fn wind_to_csv(ts: f64, series: &[f64]) -> String {
    let mut out = String::from("time_s,wind_mps\n");
    for (k, v) in series.iter().enumerate() {
        let _ = writeln!(out, "{},{}", k as f64 * ts, v);
    }
    out
}

/// Realized rate-limited and level-limited actuator motion over `dt`.
/// Returns `(θ_new, M_g_new, realized rates)`.
pub fn apply_saturations(
    params: &TurbineParameters,
    theta_prev: f64,
    mg_prev: f64,
    u: ControlInput,
    dt: f64,
) -> (f64, f64, ControlInput) {
    let r1 = u.u1.clamp(params.dtheta_min, params.dtheta_max);
    let r2 = u.u2.clamp(params.dmg_min, params.dmg_max);
    let theta_free = theta_prev + r1 * dt;
    let mg_free = mg_prev + r2 * dt;
    let theta = theta_free.clamp(params.theta_min, params.theta_max);
    let mg = mg_free.clamp(params.mg_min, params.mg_max);
    (
        theta,
        mg,
        ControlInput {
            u1: realized_rate(r1, theta_prev, theta, theta == theta_free, dt),
            u2: realized_rate(r2, mg_prev, mg, mg == mg_free, dt),
        },
    )
}

/// The commanded rate when no level limit interfered, else the mean rate.
fn realized_rate(rate: f64, from: f64, to: f64, free: bool, dt: f64) -> f64 {
    if free {
        rate
    } else {
        (to - from) / dt
    }
}

/// Which actuator limits were active over a sampling interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SaturationFlags {
    pub pitch_rate: bool,
    pub torque_rate: bool,
    pub pitch_level: bool,
    pub torque_level: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    RobustLq,
    Baseline,
}

/// Initial condition: the operating point of the initial wind sample plus an
/// optional offset (physical units, state order).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialCondition {
    pub offset: [f64; NX],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default = "default_ts")]
    pub ts: f64,
    #[serde(default = "default_substeps")]
    pub integrator_substeps: usize,
    pub duration: f64,
    pub wind: WindSpec,
    #[serde(default)]
    pub seed: u64,
    pub controller: ControllerKind,
    /// Reference power (W).
    pub p_ref: f64,
    #[serde(default)]
    pub initial: InitialCondition,
}

fn default_ts() -> f64 {
    0.004
}

fn default_substeps() -> usize {
    4
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ts > 0.0) {
            return Err(Error::Validation(format!("ts must be positive, got {}", self.ts)));
        }
        if self.integrator_substeps == 0 {
            return Err(Error::Validation("integrator_substeps must be at least 1".into()));
        }
        if !(self.duration >= self.ts) {
            return Err(Error::Validation(format!(
                "duration {} shorter than ts {}",
                self.duration, self.ts
            )));
        }
        if !(self.p_ref >= 0.0) {
            return Err(Error::Validation(format!(
                "p_ref must be nonnegative, got {}",
                self.p_ref
            )));
        }
        self.wind.validate()
    }
}

/// Controller-specific runtime settings.
#[derive(Debug, Clone, PartialEq)]
pub enum ControllerSetup {
    RobustLq {
        schedule: GainSchedule,
        refresh: RefreshPolicy,
        estimator: EstimatorMode,
    },
    Baseline {
        config: BaselineConfig,
        estimator: EstimatorMode,
    },
}

impl ControllerSetup {
    pub fn kind(&self) -> ControllerKind {
        match self {
            ControllerSetup::RobustLq { .. } => ControllerKind::RobustLq,
            ControllerSetup::Baseline { .. } => ControllerKind::Baseline,
        }
    }

    fn estimator(&self) -> EstimatorMode {
        match self {
            ControllerSetup::RobustLq { estimator, .. } | ControllerSetup::Baseline { estimator, .. } => {
                *estimator
            }
        }
    }
}

/// Uniformly sampled closed-loop log; row `k` describes `t_k = k·ts` and the
/// interval `[t_k, t_k + ts)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub ts: f64,
    pub time: Vec<f64>,
    pub state: Vec<AugmentedState>,
    pub u_cmd: Vec<ControlInput>,
    pub u_eff: Vec<ControlInput>,
    pub wind: Vec<f64>,
    pub wind_hat: Vec<f64>,
    pub power: Vec<f64>,
    pub power_d: Vec<f64>,
    pub omega_d: Vec<f64>,
    pub alpha: Vec<f64>,
    pub saturation: Vec<SaturationFlags>,
    /// State at the end of the last interval.
    pub final_state: AugmentedState,
}

/// Column order of [`Trajectory::to_csv`].
pub const TRAJECTORY_COLUMNS: [&str; 22] = [
    "time_s",
    "omega",
    "x_t",
    "v_t",
    "z_omega",
    "z_p",
    "theta",
    "m_g",
    "u1_cmd",
    "u2_cmd",
    "u1_eff",
    "u2_eff",
    "wind",
    "wind_hat",
    "power",
    "power_d",
    "omega_d",
    "alpha",
    "sat_pitch_rate",
    "sat_torque_rate",
    "sat_pitch_level",
    "sat_torque_level",
];

impl Trajectory {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    fn push(&mut self, row: Row) {
        self.time.push(row.t);
        self.state.push(row.x);
        self.u_cmd.push(row.u_cmd);
        self.u_eff.push(row.u_eff);
        self.wind.push(row.v);
        self.wind_hat.push(row.v_hat);
        self.power.push(row.p);
        self.power_d.push(row.p_d);
        self.omega_d.push(row.omega_d);
        self.alpha.push(row.alpha);
        self.saturation.push(row.sat);
    }

    /// One row per controller step, shortest round-trip float formatting.
    pub fn to_csv(&self) -> String {
        let mut out = TRAJECTORY_COLUMNS.join(",");
        out.push('\n');
        for k in 0..self.len() {
            let x = &self.state[k];
            let s = &self.saturation[k];
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                self.time[k],
                x.omega,
                x.x_t,
                x.v_t,
                x.z_omega,
                x.z_p,
                x.theta,
                x.m_g,
                self.u_cmd[k].u1,
                self.u_cmd[k].u2,
                self.u_eff[k].u1,
                self.u_eff[k].u2,
                self.wind[k],
                self.wind_hat[k],
                self.power[k],
                self.power_d[k],
                self.omega_d[k],
                self.alpha[k],
                s.pitch_rate as u8,
                s.torque_rate as u8,
                s.pitch_level as u8,
                s.torque_level as u8,
            );
        }
        out
    }

    /// Inverse of [`to_csv`](Self::to_csv). The final state is taken from the
    /// last row.
    pub fn from_csv(text: &str, origin: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let header = lines
            .next()
            .map(|(_, l)| l.trim().to_string())
            .ok_or_else(|| Error::parse(origin, "empty trajectory file"))?;
        let expected = TRAJECTORY_COLUMNS.join(",");
        if header != expected {
            return Err(Error::parse(
                origin,
                format!("line 1: expected header `{expected}`"),
            ));
        }
        let mut traj = Trajectory::default();
        for (lineno, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<f64> = line
                .split(',')
                .enumerate()
                .map(|(col, s)| {
                    s.trim().parse::<f64>().map_err(|e| {
                        Error::parse(origin, format!("line {}, column {}: {e}", lineno + 1, col + 1))
                    })
                })
                .collect::<Result<_>>()?;
            if f.len() != TRAJECTORY_COLUMNS.len() {
                return Err(Error::parse(
                    origin,
                    format!(
                        "line {}: expected {} columns, found {}",
                        lineno + 1,
                        TRAJECTORY_COLUMNS.len(),
                        f.len()
                    ),
                ));
            }
            traj.push(Row {
                t: f[0],
                x: AugmentedState {
                    omega: f[1],
                    x_t: f[2],
                    v_t: f[3],
                    z_omega: f[4],
                    z_p: f[5],
                    theta: f[6],
                    m_g: f[7],
                },
                u_cmd: ControlInput { u1: f[8], u2: f[9] },
                u_eff: ControlInput { u1: f[10], u2: f[11] },
                v: f[12],
                v_hat: f[13],
                p: f[14],
                p_d: f[15],
                omega_d: f[16],
                alpha: f[17],
                sat: SaturationFlags {
                    pitch_rate: f[18] != 0.0,
                    torque_rate: f[19] != 0.0,
                    pitch_level: f[20] != 0.0,
                    torque_level: f[21] != 0.0,
                },
            });
        }
        if traj.len() < 2 {
            return Err(Error::parse(origin, "trajectory needs at least two rows"));
        }
        traj.ts = traj.time[1] - traj.time[0];
        traj.final_state = *traj.state.last().expect("nonempty");
        Ok(traj)
    }

    /// Every logged `θ`, `M_g` lies within the level limits and successive
    /// differences respect the rate limits up to `slack`.
    pub fn check_saturation_invariants(&self, params: &TurbineParameters, slack: f64) -> Result<()> {
        for (k, x) in self.state.iter().enumerate() {
            if x.theta < params.theta_min - slack || x.theta > params.theta_max + slack {
                return Err(Error::Validation(format!("row {k}: pitch {} outside bounds", x.theta)));
            }
            if x.m_g < params.mg_min - slack || x.m_g > params.mg_max + slack {
                return Err(Error::Validation(format!("row {k}: torque {} outside bounds", x.m_g)));
            }
        }
        let dt = self.ts;
        for k in 1..self.len() {
            let r1 = (self.state[k].theta - self.state[k - 1].theta) / dt;
            let r2 = (self.state[k].m_g - self.state[k - 1].m_g) / dt;
            if r1 < params.dtheta_min - slack || r1 > params.dtheta_max + slack {
                return Err(Error::Validation(format!("row {k}: pitch rate {r1} outside bounds")));
            }
            let torque_slack = slack * params.dmg_max.abs().max(1.0);
            if r2 < params.dmg_min - torque_slack || r2 > params.dmg_max + torque_slack {
                return Err(Error::Validation(format!("row {k}: torque rate {r2} outside bounds")));
            }
        }
        Ok(())
    }
}

struct Row {
    t: f64,
    x: AugmentedState,
    u_cmd: ControlInput,
    u_eff: ControlInput,
    v: f64,
    v_hat: f64,
    p: f64,
    p_d: f64,
    omega_d: f64,
    alpha: f64,
    sat: SaturationFlags,
}

/// `θ` or `M_g` after time `s` at constant (already rate-limited) rate.
fn actuator_path(start: f64, rate: f64, s: f64, lo: f64, hi: f64) -> f64 {
    (start + rate * s).clamp(lo, hi)
}

/// Continuous part of the state: `[ω, x_t, v_t, z_ω, z_P]`.
type Continuous = [f64; 5];

fn derivative(
    params: &TurbineParameters,
    surface: &CoefficientSurface,
    y: &Continuous,
    theta: f64,
    m_g: f64,
    w: &ExternalInput,
) -> Result<Continuous> {
    let x = AugmentedState {
        omega: y[0],
        x_t: y[1],
        v_t: y[2],
        z_omega: y[3],
        z_p: y[4],
        theta,
        m_g,
    };
    let f = f_augmented(params, surface, &x, w)?;
    Ok([f[0], f[1], f[2], f[3], f[4]])
}

fn axpy(y: &Continuous, h: f64, k: &Continuous) -> Continuous {
    std::array::from_fn(|i| y[i] + h * k[i])
}

/// Advances the plant over one sampling interval with held command `u` and
/// wind `w`. Returns the new state, the realized rates and saturation flags.
pub fn plant_step(
    params: &TurbineParameters,
    surface: &CoefficientSurface,
    x: &AugmentedState,
    u: ControlInput,
    w: &ExternalInput,
    ts: f64,
    substeps: usize,
) -> Result<(AugmentedState, ControlInput, SaturationFlags)> {
    let r1 = u.u1.clamp(params.dtheta_min, params.dtheta_max);
    let r2 = u.u2.clamp(params.dmg_min, params.dmg_max);
    let h = ts / substeps as f64;
    let mut y: Continuous = [x.omega, x.x_t, x.v_t, x.z_omega, x.z_p];
    let mut theta0 = x.theta;
    let mut mg0 = x.m_g;
    let mut pitch_level = false;
    let mut torque_level = false;
    for _ in 0..substeps {
        let th = |s: f64| actuator_path(theta0, r1, s, params.theta_min, params.theta_max);
        let mg = |s: f64| actuator_path(mg0, r2, s, params.mg_min, params.mg_max);
        let k1 = derivative(params, surface, &y, th(0.0), mg(0.0), w)?;
        let k2 = derivative(params, surface, &axpy(&y, 0.5 * h, &k1), th(0.5 * h), mg(0.5 * h), w)?;
        let k3 = derivative(params, surface, &axpy(&y, 0.5 * h, &k2), th(0.5 * h), mg(0.5 * h), w)?;
        let k4 = derivative(params, surface, &axpy(&y, h, &k3), th(h), mg(h), w)?;
        y = std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        let (t_new, m_new, _) = apply_saturations(params, theta0, mg0, ControlInput { u1: r1, u2: r2 }, h);
        pitch_level |= t_new != theta0 + r1 * h;
        torque_level |= m_new != mg0 + r2 * h;
        theta0 = t_new;
        mg0 = m_new;
    }
    let next = AugmentedState {
        omega: y[0],
        x_t: y[1],
        v_t: y[2],
        z_omega: y[3],
        z_p: y[4],
        theta: theta0,
        m_g: mg0,
    };
    let u_eff = ControlInput {
        u1: realized_rate(r1, x.theta, theta0, !pitch_level, ts),
        u2: realized_rate(r2, x.m_g, mg0, !torque_level, ts),
    };
    let flags = SaturationFlags {
        pitch_rate: r1 != u.u1,
        torque_rate: r2 != u.u2,
        pitch_level,
        torque_level,
    };
    Ok((next, u_eff, flags))
}

/// Operating point the simulation starts from.
pub fn initial_state(
    config: &SimulationConfig,
    params: &TurbineParameters,
    surface: &CoefficientSurface,
    table: &PowerSpeedTable,
    v0: f64,
) -> Result<AugmentedState> {
    let p_d = desired_power(params, surface, config.p_ref, v0);
    let omega_d = table.desired_speed(p_d);
    let eq = operating_point(
        params,
        surface,
        &ExternalInput {
            v: v0,
            omega_d,
            p_d,
        },
    )?;
    let mut x = eq.x_s.to_vector();
    for (xi, d) in x.iter_mut().zip(config.initial.offset.iter()) {
        *xi += d;
    }
    let mut x = AugmentedState::from_vector(&x);
    x.theta = x.theta.clamp(params.theta_min, params.theta_max);
    x.m_g = x.m_g.clamp(params.mg_min, params.mg_max);
    Ok(x)
}

enum Runtime {
    Lq {
        state: ControllerState,
        schedule: GainSchedule,
        refresh: RefreshPolicy,
    },
    Baseline {
        controller: BaselineController,
        k_opt: f64,
    },
}

/// Runs a closed-loop simulation. Identical inputs give bitwise-identical
/// trajectories.
pub fn simulate(
    config: &SimulationConfig,
    params: &TurbineParameters,
    surface: &CoefficientSurface,
    table: &PowerSpeedTable,
    setup: &ControllerSetup,
) -> Result<Trajectory> {
    config.validate()?;
    if setup.kind() != config.controller {
        return Err(Error::Validation(format!(
            "controller setup {:?} does not match configured controller {:?}",
            setup.kind(),
            config.controller
        )));
    }
    let wind = generate_wind(&config.wind, config.duration, config.ts, config.seed)?;
    simulate_with_wind(config, params, surface, table, setup, &wind)
}

/// As [`simulate`] with a precomputed wind series (one sample per step).
pub fn simulate_with_wind(
    config: &SimulationConfig,
    params: &TurbineParameters,
    surface: &CoefficientSurface,
    table: &PowerSpeedTable,
    setup: &ControllerSetup,
    wind: &[f64],
) -> Result<Trajectory> {
    let n = sample_count(config.duration, config.ts);
    if wind.len() < n {
        return Err(Error::Validation(format!(
            "wind series has {} samples, simulation needs {n}",
            wind.len()
        )));
    }
    let ts = config.ts;
    let mut x = initial_state(config, params, surface, table, wind[0])?;
    let mut estimator = WindEstimator::new(
        setup.estimator(),
        wind[0],
        config.seed.wrapping_add(0x9E37_79B9_7F4A_7C15),
    );
    let mut runtime = match setup {
        ControllerSetup::RobustLq {
            schedule,
            refresh,
            ..
        } => {
            schedule.validate()?;
            Runtime::Lq {
                state: ControllerState::default(),
                schedule: schedule.clone(),
                refresh: *refresh,
            }
        }
        ControllerSetup::Baseline { config: bc, .. } => Runtime::Baseline {
            controller: BaselineController::new(*bc, x.theta),
            k_opt: params.k_opt(surface),
        },
    };

    let mut traj = Trajectory {
        ts,
        ..Trajectory::default()
    };
    for k in 0..n {
        let t = k as f64 * ts;
        let v = wind[k];
        let abort = |reason: String| Error::SimulationAbort {
            time: t,
            step: k,
            reason,
        };
        if !x.is_finite() {
            return Err(abort("non-finite state".into()));
        }
        if x.omega < params.omega_min {
            return Err(abort(format!(
                "generator speed {} below omega_min {}",
                x.omega, params.omega_min
            )));
        }
        let v_hat = estimator.update(
            params,
            surface,
            &Measurement {
                omega: x.omega,
                m_g: x.m_g,
                theta: x.theta,
                v_true: v,
            },
            ts,
        );
        let (u_cmd, p_d, omega_d, alpha) = match &mut runtime {
            Runtime::Lq {
                state,
                schedule,
                refresh,
            } => {
                let ctx = LqContext {
                    params,
                    surface,
                    table,
                    schedule,
                    refresh: *refresh,
                    p_ref: config.p_ref,
                };
                let out = control_step(state, &ctx, &x, v_hat).map_err(|e| abort(e.to_string()))?;
                (out.u, out.p_d, out.omega_d, out.alpha)
            }
            Runtime::Baseline { controller, k_opt } => {
                let cmd = controller.step(
                    params, surface, table, *k_opt, x.omega, x.theta, v_hat, config.p_ref, ts,
                );
                let u = ControlInput {
                    u1: (cmd.theta_cmd - x.theta) / ts,
                    u2: (cmd.m_g_cmd - x.m_g) / ts,
                };
                (u, cmd.p_d, cmd.omega_d, f64::NAN)
            }
        };
        let w = ExternalInput { v, omega_d, p_d };
        let (next, u_eff, sat) =
            plant_step(params, surface, &x, u_cmd, &w, ts, config.integrator_substeps)
                .map_err(|e| abort(e.to_string()))?;
        traj.push(Row {
            t,
            x,
            u_cmd,
            u_eff,
            v,
            v_hat,
            p: params.electrical_power(x.omega, x.m_g),
            p_d,
            omega_d,
            alpha,
            sat,
        });
        x = next;
    }
    if !x.is_finite() || x.omega < params.omega_min {
        return Err(Error::SimulationAbort {
            time: n as f64 * ts,
            step: n,
            reason: format!("final state invalid (omega = {})", x.omega),
        });
    }
    traj.final_state = x;
    Ok(traj)
}
