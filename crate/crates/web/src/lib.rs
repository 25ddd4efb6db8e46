//! Browser bindings: a power-coefficient slice, operating points, and short
//! closed-loop simulations. Every export returns a JSON string.

use std::cell::RefCell;

use serde::Serialize;
use wasm_bindgen::prelude::*;

use windlq::coefficients::{default_surface, CoefficientSurface};
use windlq::control::{desired_power, region_boundary_speed, GainSchedule, PowerSpeedTable};
use windlq::design::{design, DesignConfig};
use windlq::equilibrium::compute_equilibrium;
use windlq::linearize::linearize;
use windlq::metrics::{evaluate, MetricsConfig, MetricsReport};
use windlq::scenario::Scenario;
use windlq::sim::{simulate, ControllerKind, WindSpec};
use windlq::turbine::{ExternalInput, TurbineParameters};

/// Longest simulation the page may request (s).
pub const MAX_DURATION: f64 = 300.0;
/// Samples kept per plotted series.
const PLOT_POINTS: usize = 1200;

struct Plant {
    params: TurbineParameters,
    surface: CoefficientSurface,
    table: PowerSpeedTable,
}

thread_local! {
    static PLANT: Plant = {
        let params = TurbineParameters::default();
        let surface = default_surface();
        let table = PowerSpeedTable::generate(&params, &surface, windlq::control::DEFAULT_TABLE_NODES)
            .expect("default power-speed table");
        Plant { params, surface, table }
    };
    /// Last synthesized schedule, keyed by the reference power's bits.
    static GAINS: RefCell<Option<(u64, GainSchedule)>> = const { RefCell::new(None) };
}

#[derive(Serialize)]
struct CpSlice {
    theta_deg: f64,
    lambda: Vec<f64>,
    cp: Vec<f64>,
    cp_max: f64,
    lambda_at_max: f64,
}

/// `Cp(λ, θ)` over the surface's tip-speed-ratio range at fixed pitch.
pub fn cp_slice_json(theta_deg: f64, points: usize) -> Result<String, String> {
    if !theta_deg.is_finite() {
        return Err("pitch must be finite".into());
    }
    let points = points.clamp(2, 2000);
    PLANT.with(|p| {
        let (lo, hi) = p.surface.lambda_range();
        let (tlo, thi) = p.surface.theta_range();
        let theta = theta_deg.to_radians().clamp(tlo, thi);
        let lambda: Vec<f64> = (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect();
        let cp: Vec<f64> = lambda.iter().map(|l| p.surface.eval_cp(*l, theta)).collect();
        let (imax, cp_max) = cp
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |a, (i, c)| if c > a.1 { (i, c) } else { a });
        let slice = CpSlice {
            theta_deg: theta.to_degrees(),
            lambda_at_max: lambda[imax],
            lambda,
            cp,
            cp_max,
        };
        serde_json::to_string(&slice).map_err(|e| e.to_string())
    })
}

#[derive(Serialize)]
struct OperatingPoint {
    wind: f64,
    p_d: f64,
    omega: f64,
    theta_deg: f64,
    m_g: f64,
    lambda: f64,
    tower_deflection: f64,
    region_boundary_speed: f64,
    eigenvalues: Vec<[f64; 2]>,
}

/// Equilibrium and open-loop eigenvalues at wind speed `wind` for a power
/// reference of `p_ref_mw`.
pub fn equilibrium_json(wind: f64, p_ref_mw: f64) -> Result<String, String> {
    PLANT.with(|p| {
        let p_ref = checked_reference(&p.params, p_ref_mw)?;
        if !(wind > 0.0 && wind.is_finite()) {
            return Err("wind speed must be positive".into());
        }
        let p_d = desired_power(&p.params, &p.surface, p_ref, wind);
        let w = ExternalInput {
            v: wind,
            omega_d: p.table.desired_speed(p_d),
            p_d,
        };
        let eq = compute_equilibrium(&p.params, &p.surface, &w).map_err(|e| e.to_string())?;
        let model = linearize(&p.params, &p.surface, &eq);
        let mut eigenvalues: Vec<[f64; 2]> = model.a.complex_eigenvalues().iter().map(|c| [c.re, c.im]).collect();
        eigenvalues.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        let op = OperatingPoint {
            wind,
            p_d,
            omega: eq.x_s.omega,
            theta_deg: eq.theta_s.to_degrees(),
            m_g: eq.x_s.m_g,
            lambda: eq.lambda_s,
            tower_deflection: eq.x_s.x_t,
            region_boundary_speed: region_boundary_speed(&p.params, &p.surface, p_ref),
            eigenvalues,
        };
        serde_json::to_string(&op).map_err(|e| e.to_string())
    })
}

fn checked_reference(params: &TurbineParameters, p_ref_mw: f64) -> Result<f64, String> {
    let p_ref = p_ref_mw * 1e6;
    if p_ref > 0.0 && p_ref <= params.p_rated {
        Ok(p_ref)
    } else {
        Err(format!(
            "power reference must lie in (0, {}] MW",
            params.p_rated / 1e6
        ))
    }
}

fn schedule_for(plant: &Plant, p_ref: f64) -> Result<GainSchedule, String> {
    GAINS.with(|cache| {
        if let Some((key, s)) = cache.borrow().as_ref() {
            if *key == p_ref.to_bits() {
                return Ok(s.clone());
            }
        }
        let d = design(&plant.params, &plant.surface, &DesignConfig::with_defaults(p_ref))
            .map_err(|e| e.to_string())?;
        for r in [&d.region2, &d.region3] {
            if !r.report.passed() {
                return Err(format!("{} certificate failed: {}", r.region.label(), r.report.failures.join("; ")));
            }
        }
        *cache.borrow_mut() = Some((p_ref.to_bits(), d.schedule.clone()));
        Ok(d.schedule)
    })
}

#[derive(Serialize)]
struct SimulationView {
    controller: &'static str,
    time: Vec<f64>,
    wind: Vec<f64>,
    power: Vec<f64>,
    power_d: Vec<f64>,
    pitch_deg: Vec<f64>,
    torque: Vec<f64>,
    metrics: MetricsReport,
}

fn every_nth(v: &[f64], step: usize) -> Vec<f64> {
    v.iter().step_by(step).copied().collect()
}

/// Closed-loop run in turbulent wind. `controller` is `robust-lq` or
/// `baseline`; the robust LQ gains are synthesized on first use.
pub fn simulate_json(
    controller: &str,
    wind_mean: f64,
    intensity: f64,
    p_ref_mw: f64,
    duration: f64,
    seed: u64,
) -> Result<String, String> {
    let kind = match controller {
        "robust-lq" => ControllerKind::RobustLq,
        "baseline" => ControllerKind::Baseline,
        other => return Err(format!("unknown controller `{other}`")),
    };
    if !(duration > 0.0 && duration <= MAX_DURATION) {
        return Err(format!("duration must lie in (0, {MAX_DURATION}] s"));
    }
    PLANT.with(|p| {
        let p_ref = checked_reference(&p.params, p_ref_mw)?;
        let mut scenario = Scenario::default_for(&p.params);
        scenario.design = DesignConfig::with_defaults(p_ref);
        let cfg = &mut scenario.simulation;
        cfg.duration = duration;
        cfg.seed = seed;
        cfg.controller = kind;
        cfg.p_ref = p_ref;
        cfg.wind = WindSpec::turbulent(wind_mean, intensity);
        cfg.validate().map_err(|e| e.to_string())?;
        let schedule = match kind {
            ControllerKind::RobustLq => Some(schedule_for(p, p_ref)?),
            ControllerKind::Baseline => None,
        };
        let setup = scenario
            .controller_setup(kind, schedule.as_ref())
            .map_err(|e| e.to_string())?;
        let traj = simulate(&scenario.simulation, &p.params, &p.surface, &p.table, &setup)
            .map_err(|e| e.to_string())?;
        let metrics = evaluate(&traj, &p.params, &p.surface, &MetricsConfig::default()).map_err(|e| e.to_string())?;
        let step = traj.len().div_ceil(PLOT_POINTS).max(1);
        let view = SimulationView {
            controller: match kind {
                ControllerKind::RobustLq => "robust-lq",
                ControllerKind::Baseline => "baseline",
            },
            time: every_nth(&traj.time, step),
            wind: every_nth(&traj.wind, step),
            power: every_nth(&traj.power, step),
            power_d: every_nth(&traj.power_d, step),
            pitch_deg: traj.state.iter().step_by(step).map(|x| x.theta.to_degrees()).collect(),
            torque: traj.state.iter().step_by(step).map(|x| x.m_g).collect(),
            metrics,
        };
        serde_json::to_string(&view).map_err(|e| e.to_string())
    })
}

#[wasm_bindgen]
pub fn cp_slice(theta_deg: f64, points: usize) -> Result<String, JsError> {
    cp_slice_json(theta_deg, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn equilibrium(wind: f64, p_ref_mw: f64) -> Result<String, JsError> {
    equilibrium_json(wind, p_ref_mw).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate_run(
    controller: &str,
    wind_mean: f64,
    intensity: f64,
    p_ref_mw: f64,
    duration: f64,
    seed: u32,
) -> Result<String, JsError> {
    simulate_json(controller, wind_mean, intensity, p_ref_mw, duration, u64::from(seed))
        .map_err(|e| JsError::new(&e))
}
