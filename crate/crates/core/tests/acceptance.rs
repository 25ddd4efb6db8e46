//! Acceptance suite. Runs every criterion in sequence and prints one PASS/FAIL
//! line each. With `WINDLQ_ACCEPTANCE_STRICT` set, any failure makes the
//! process exit nonzero.

mod common;

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use windlq::coefficients::{default_surface, CoefficientSurface};
use windlq::control::{desired_power, operating_point, region_boundary_speed};
use windlq::design::{
    design, scaled_model_set, synthesis_weights, vertex_inputs, vertex_models, Design, RegionWeights,
};
use windlq::equilibrium::{compute_equilibrium, required_cp};
use windlq::linearize::{linearize, StateScaling};
use windlq::metrics::{evaluate, rainflow, turning_points, Cycle, MetricsReport};
use windlq::scenario::Scenario;
use windlq::sim::{simulate, ControllerKind, SimulationConfig, Trajectory, WindSpec};
use windlq::synthesis::{synthesize, ModelSet, SynthesisOptions, SynthesisWeights};
use windlq::turbine::{b_matrix, f_augmented, ExternalInput, TurbineParameters};
use windlq::{Error, NX};

type Outcome = Result<String, String>;

struct Fixture {
    params: TurbineParameters,
    surface: CoefficientSurface,
    scenario: Scenario,
    design: Design,
    scaling: StateScaling,
}

impl Fixture {
    fn new() -> Self {
        let params = TurbineParameters::default();
        let surface = default_surface();
        let scenario = Scenario::default_for(&params);
        let design = design(&params, &surface, &scenario.design).expect("default design");
        Self {
            scaling: StateScaling::characteristic(&params),
            params,
            surface,
            scenario,
            design,
        }
    }

    fn run(&self, cfg: &SimulationConfig) -> windlq::Result<Trajectory> {
        let setup = self
            .scenario
            .controller_setup(cfg.controller, Some(&self.design.schedule))?;
        simulate(cfg, &self.params, &self.surface, &self.design.table, &setup)
    }

    fn config(&self, wind: WindSpec, duration: f64, kind: ControllerKind) -> SimulationConfig {
        let mut cfg = self.scenario.simulation_config();
        cfg.wind = wind;
        cfg.duration = duration;
        cfg.controller = kind;
        cfg
    }
}

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    check(
        elapsed.as_secs_f64() < limit_s,
        format!("runtime {:.2} s exceeds {limit_s} s", elapsed.as_secs_f64()),
    )
}

fn lqr_match(models: &ModelSet, weights: &SynthesisWeights, epsilon: f64) -> Result<f64, String> {
    let opts = SynthesisOptions { epsilon, ..SynthesisOptions::default() };
    let res = synthesize(models, weights, &opts).map_err(|e| e.to_string())?;
    let oracle = kleinman_lqr(&models.vertices[0], &models.b, &weights.q, &weights.r);
    Ok(entrywise_ratio(&res.k, &oracle, 1e-3, 1e-6))
}

fn criterion_1(fx: &Fixture) -> Outcome {
    let t0 = Instant::now();
    let toy = ModelSet::new(
        vec![DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0])],
        DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
    )
    .map_err(|e| e.to_string())?;
    let toy_w = SynthesisWeights::new(DMatrix::identity(2, 2), DMatrix::identity(1, 1)).unwrap();
    let toy_ratio = lqr_match(&toy, &toy_w, 1e-8)?;

    let p = &fx.params;
    let table = &fx.design.table;
    let v = fx.design.region3.inputs[1].v;
    let inputs = vertex_inputs(p, &fx.surface, table, fx.design.p_ref, &[v]);
    let lin = vertex_models(p, &fx.surface, &inputs).map_err(|e| e.to_string())?;
    let set = scaled_model_set(&lin, &fx.scaling).map_err(|e| e.to_string())?;
    let w = synthesis_weights(&RegionWeights::default_region3(), &set).map_err(|e| e.to_string())?;
    let r3_ratio = lqr_match(&set, &w, 1e-8)?;
    let elapsed = t0.elapsed();

    check(toy_ratio <= 1.0, format!("double integrator: worst entry ratio {toy_ratio:.3}"))?;
    if r3_ratio > 1.0 {
        // the gap shrinks linearly with the margin when the solve is exact
        let small = lqr_match(&set, &w, 1e-11)?;
        return Err(format!(
            "region-3 model at {v:.2} m/s: worst entry ratio {r3_ratio:.3} at epsilon 1e-8 ({small:.2e} at 1e-11)"
        ));
    }
    within(elapsed, 5.0)?;
    Ok(format!(
        "worst |K−K_lqr| / tol: toy {toy_ratio:.2e}, region-3 {r3_ratio:.2e} ({:.2} s)",
        elapsed.as_secs_f64()
    ))
}

fn criterion_2(fx: &Fixture) -> Outcome {
    let mut notes = Vec::new();
    for region in [&fx.design.region2, &fx.design.region3] {
        let t0 = Instant::now();
        let label = region.region.label();
        let res = &region.result;
        let eps = res.epsilon;
        check(region.models.vertices.len() == 4, format!("{label}: expected 4 vertices"))?;
        let n = region.models.n();
        // Schur block [[X, R½Y], [YᵀR½, P]] and P
        let rh = {
            let e = region.weights.r.clone().symmetric_eigen();
            &e.eigenvectors
                * DMatrix::from_diagonal(&e.eigenvalues.map(|v| v.max(1e-12).sqrt()))
                * e.eigenvectors.transpose()
        };
        let ry = &rh * &res.y;
        let m = res.x_bound.nrows();
        let mut schur = DMatrix::zeros(m + n, m + n);
        schur.view_mut((0, 0), (m, m)).copy_from(&res.x_bound);
        schur.view_mut((0, m), (m, n)).copy_from(&ry);
        schur.view_mut((m, 0), (n, m)).copy_from(&ry.transpose());
        schur.view_mut((m, m), (n, n)).copy_from(&res.p);
        let schur_min = min_eig(&schur);
        check(schur_min >= eps / 2.0, format!("{label}: Schur block min eig {schur_min:.3e}"))?;
        let p_min = min_eig(&res.p);
        check(p_min >= eps / 2.0, format!("{label}: P min eig {p_min:.3e}"))?;
        let j = (&region.weights.q * &res.p).trace()
            + (&rh * &res.k * &res.p * res.k.transpose() * &rh).trace();
        let mut worst_gap = f64::INFINITY;
        for (i, a) in region.models.vertices.iter().enumerate() {
            let bk = &region.models.b * &res.y;
            let lmi = a * &res.p + &res.p * a.transpose() + &bk + bk.transpose() + DMatrix::identity(n, n);
            let lmax = -min_eig(&-lmi);
            check(lmax <= -eps / 2.0, format!("{label} vertex {i}: LMI max eig {lmax:.3e}"))?;
            let acl = a + &region.models.b * &res.k;
            let pi = kron_lyapunov(&acl, &DMatrix::identity(n, n));
            let margin = min_eig(&(&res.p - &pi));
            check(margin > 0.0, format!("{label} vertex {i}: min eig(P − P_i) = {margin:.3e}"))?;
            let ji = (&region.weights.q * &pi).trace() + (&rh * &res.k * &pi * res.k.transpose() * &rh).trace();
            check(ji < j, format!("{label} vertex {i}: J_i {ji:.6e} ≥ J {j:.6e}"))?;
            check(ji <= res.cost_j, format!("{label} vertex {i}: J_i above SDP objective"))?;
            worst_gap = worst_gap.min(j - ji);
        }
        check(region.report.passed(), format!("{label}: library certificate failed"))?;
        // the design itself already ran; time a fresh certification plus synthesis
        let again = synthesize(&region.models, &region.weights, &SynthesisOptions::default())
            .map_err(|e| format!("{label}: {e}"))?;
        check(again.k == res.k, format!("{label}: synthesis not reproducible"))?;
        within(t0.elapsed(), 10.0)?;
        notes.push(format!("{label} min J−J_i {worst_gap:.3e}"));
    }
    Ok(notes.join(", "))
}

fn criterion_3(fx: &Fixture) -> Outcome {
    let t0 = Instant::now();
    let mut notes = Vec::new();
    for (seed, region) in [(11_u64, &fx.design.region2), (13, &fx.design.region3)] {
        let label = region.region.label();
        let set = &region.models;
        let bk = &set.b * &region.result.k;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..500 {
            // uniform simplex point from sorted uniform spacings
            let mut cuts: Vec<f64> = (0..set.vertices.len() - 1).map(|_| rng.random()).collect();
            cuts.push(0.0);
            cuts.push(1.0);
            cuts.sort_by(f64::total_cmp);
            let mut a = DMatrix::zeros(set.n(), set.n());
            for (k, v) in set.vertices.iter().enumerate() {
                a += v * (cuts[k + 1] - cuts[k]);
            }
            worst = worst.max(spectral_abscissa(&(a + &bk)));
        }
        let lib = windlq::synthesis::polytope_stability_sample(&region.result.k, set, 500, seed);
        check(worst < 0.0, format!("{label}: sampled abscissa {worst:.3e}"))?;
        check(lib < 0.0, format!("{label}: library sampled abscissa {lib:.3e}"))?;
        notes.push(format!("{label} worst abscissa {:.3e}", worst.max(lib)));
    }
    within(t0.elapsed(), 5.0)?;
    Ok(notes.join(", "))
}

/// Region-3 and region-2 operating points away from surface grid lines.
fn jacobian_points(fx: &Fixture) -> Vec<ExternalInput> {
    let p = &fx.params;
    let table = &fx.design.table;
    let mut out = Vec::new();
    for frac in [0.5, 0.7, 0.8, 0.9, 1.0] {
        let p_ref = frac * p.p_rated;
        let v_d = region_boundary_speed(p, &fx.surface, p_ref);
        for v in [v_d + 1.3, 0.5 * (v_d + p.v_cutout), p.v_cutout - 1.7, 0.6 * v_d + 1.5] {
            let p_d = desired_power(p, &fx.surface, p_ref, v);
            out.push(ExternalInput {
                v,
                omega_d: table.desired_speed(p_d),
                p_d,
            });
        }
    }
    out
}

fn criterion_4(fx: &Fixture) -> Outcome {
    let t0 = Instant::now();
    let mut tested = 0;
    let mut worst = 0.0_f64;
    for w in jacobian_points(fx) {
        let Ok(eq) = operating_point(&fx.params, &fx.surface, &w) else {
            continue;
        };
        // keep the central-difference stencil inside one interpolation cell
        let cell_margin = grid_margin(&fx.surface, eq.lambda_s, eq.theta_s);
        if cell_margin < 1e-3 {
            continue;
        }
        let analytic = linearize(&fx.params, &fx.surface, &eq).a;
        let fd = fd_jacobian(&fx.params, &fx.surface, &eq, &fx.scaling);
        let ratio = entrywise_ratio(&to_dmatrix(&analytic), &to_dmatrix(&fd), 1e-4, 1e-8);
        check(
            ratio <= 1.0,
            format!("V = {:.2}, P_d = {:.3e}: worst entry ratio {ratio:.3}", w.v, w.p_d),
        )?;
        worst = worst.max(ratio);
        tested += 1;
    }
    check(tested >= 10, format!("only {tested} interior equilibria"))?;
    within(t0.elapsed(), 2.0)?;
    Ok(format!("{tested} equilibria, worst entry ratio {worst:.3e}"))
}

/// Distance of `(λ, θ)` to the nearest grid line, relative to the cell width.
fn grid_margin(surface: &CoefficientSurface, lambda: f64, theta: f64) -> f64 {
    let axis = |grid: &[f64], x: f64| {
        let k = grid.partition_point(|g| *g <= x).clamp(1, grid.len() - 1);
        let (lo, hi) = (grid[k - 1], grid[k]);
        ((x - lo).min(hi - x) / (hi - lo)).max(0.0)
    };
    axis(surface.lambda_grid(), lambda).min(axis(surface.theta_grid(), theta))
}

fn criterion_5(fx: &Fixture) -> Outcome {
    let t0 = Instant::now();
    let p = &fx.params;
    let table = &fx.design.table;
    let mut worst = 0.0_f64;
    for frac in [0.6, 0.8, 1.0] {
        let p_ref = frac * p.p_rated;
        let v_d = region_boundary_speed(p, &fx.surface, p_ref);
        let omega_d = table.desired_speed(p_ref);
        for k in 0..5 {
            let v = v_d + 1.0 + (p.v_cutout - 1.0 - v_d - 1.0) * k as f64 / 4.0;
            let w = ExternalInput { v, omega_d, p_d: p_ref };
            let eq = compute_equilibrium(p, &fx.surface, &w).map_err(|e| format!("V = {v:.2}: {e}"))?;
            let u = nalgebra::Vector2::new(eq.u_s.u1, eq.u_s.u2);
            let f = f_augmented(p, &fx.surface, &eq.x_s, &w).unwrap() + b_matrix() * u;
            let r = (0..NX).map(|i| (f[i] / fx.scaling.state[i]).abs()).fold(0.0, f64::max);
            check(r <= 1e-8, format!("V = {v:.2}, P = {p_ref:.3e}: scaled residual {r:.3e}"))?;
            worst = worst.max(r);
        }
    }
    // NoEquilibrium exactly when the required coefficient is out of reach
    let (t_lo, t_hi) = (p.theta_min, p.theta_max);
    let mut agree = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..60 {
        let v = rng.random_range(4.0..25.0);
        let omega_d = rng.random_range(60.0..p.omega_rated);
        let p_d = rng.random_range(0.0..1.2) * p.p_rated;
        let w = ExternalInput { v, omega_d, p_d };
        let lambda = p.tip_speed_ratio(omega_d, v).unwrap();
        let target = required_cp(p, &w);
        let (lo, hi) = (0..=100_000)
            .map(|k| fx.surface.eval_cp(lambda, t_lo + (t_hi - t_lo) * k as f64 / 100_000.0))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), c| (a.min(c), b.max(c)));
        let scan_says = target >= lo - 1e-12 && target <= hi + 1e-12;
        if (target - hi).abs() < 1e-6 || (target - lo).abs() < 1e-6 {
            continue;
        }
        let got = compute_equilibrium(p, &fx.surface, &w);
        match (&got, scan_says) {
            (Ok(_), true) | (Err(Error::NoEquilibrium { .. }), false) => agree += 1,
            _ => {
                return Err(format!(
                    "V = {v:.2}, ω_d = {omega_d:.2}, P_d = {p_d:.3e}: scan feasible = {scan_says}, solver gave {:?}",
                    got.map(|e| e.theta_s)
                ))
            }
        }
    }
    within(t0.elapsed(), 2.0)?;
    Ok(format!(
        "15 points, worst scaled residual {worst:.2e}; feasibility agrees with scan on {agree} samples"
    ))
}

fn criterion_6(fx: &Fixture) -> Outcome {
    let mut cfg = fx.config(WindSpec::constant(14.8), 600.0, ControllerKind::RobustLq);
    cfg.initial.offset = [2.0, 0.05, 0.0, 0.0, 0.0, 0.02, 1000.0];
    let t0 = Instant::now();
    let traj = fx.run(&cfg).map_err(|e| e.to_string())?;
    let elapsed = t0.elapsed();
    let settle = 120.0;
    let limit = 1e-3 * fx.params.p_rated;
    let worst = traj
        .time
        .iter()
        .zip(traj.power.iter().zip(&traj.power_d))
        .filter(|(t, _)| **t >= settle)
        .map(|(_, (p, d))| (p - d).abs())
        .fold(0.0, f64::max);
    let xi = |k: usize| {
        let (x, eq) = (&traj.state[k], &fx.design.region3.linear_models[0].equilibrium.x_s);
        (x.omega - eq.omega) / fx.scaling.state[0]
    };
    check(worst <= limit, format!("|P − P^d| reached {worst:.3e} W after {settle} s"))?;
    check(
        xi(traj.len() - 1).abs() < xi(0).abs(),
        "speed deviation did not decay",
    )?;
    within(elapsed, 30.0)?;
    Ok(format!(
        "max |P − P^d| after {settle} s = {:.2e} of rated ({:.2} s for 600 s)",
        worst / fx.params.p_rated,
        elapsed.as_secs_f64()
    ))
}

struct Comparison {
    robust: MetricsReport,
    baseline: MetricsReport,
    elapsed: Duration,
}

fn compare_turbulent(fx: &Fixture) -> Result<Comparison, String> {
    let t0 = Instant::now();
    let wind = WindSpec::turbulent(14.8, 0.06);
    let (a, b) = std::thread::scope(|s| {
        let h = s.spawn(|| fx.run(&fx.config(wind.clone(), 600.0, ControllerKind::Baseline)));
        let a = fx.run(&fx.config(wind.clone(), 600.0, ControllerKind::RobustLq));
        (a, h.join().expect("baseline thread"))
    });
    let (a, b) = (a.map_err(|e| e.to_string())?, b.map_err(|e| e.to_string())?);
    let m = &fx.scenario.metrics;
    let robust = evaluate(&a, &fx.params, &fx.surface, m).map_err(|e| e.to_string())?;
    let baseline = evaluate(&b, &fx.params, &fx.surface, m).map_err(|e| e.to_string())?;
    for t in [&a, &b] {
        t.check_saturation_invariants(&fx.params, 1e-12).map_err(|e| e.to_string())?;
    }
    Ok(Comparison {
        robust,
        baseline,
        elapsed: t0.elapsed(),
    })
}

fn criterion_7(fx: &Fixture, cmp: &Result<Comparison, String>) -> Outcome {
    let c = cmp.as_ref().map_err(Clone::clone)?;
    let ratio = c.robust.rms_tracking_error / c.baseline.rms_tracking_error;
    check(ratio <= 0.5, format!("RMS ratio {ratio:.3}"))?;
    let slack = 1.0 + 1e-12;
    for (name, r) in [("robust-lq", &c.robust), ("baseline", &c.baseline)] {
        check(
            r.rates.max_pitch_rate <= fx.params.dtheta_max * slack,
            format!("{name}: pitch rate {:.6} rad/s", r.rates.max_pitch_rate),
        )?;
        check(
            r.rates.max_torque_rate <= fx.params.dmg_max * slack,
            format!("{name}: torque rate {:.3} N·m/s", r.rates.max_torque_rate),
        )?;
    }
    within(c.elapsed, 60.0)?;
    Ok(format!(
        "RMS {:.1} W vs baseline {:.1} W (ratio {ratio:.3}); max rates {:.2}°/s, {:.0} N·m/s ({:.2} s)",
        c.robust.rms_tracking_error,
        c.baseline.rms_tracking_error,
        c.robust.rates.max_pitch_rate.to_degrees(),
        c.robust.rates.max_torque_rate,
        c.elapsed.as_secs_f64()
    ))
}

fn criterion_8() -> Outcome {
    let t0 = Instant::now();
    let fixture = [
        Cycle { range: 4.0, mean: 1.0, count: 1.0 },
        Cycle { range: 3.0, mean: -0.5, count: 0.5 },
        Cycle { range: 4.0, mean: -1.0, count: 0.5 },
        Cycle { range: 8.0, mean: 1.0, count: 0.5 },
        Cycle { range: 9.0, mean: 0.5, count: 0.5 },
        Cycle { range: 8.0, mean: 0.0, count: 0.5 },
        Cycle { range: 6.0, mean: 1.0, count: 0.5 },
    ];
    let got = rainflow(&[-2.0, 1.0, -3.0, 5.0, -1.0, 3.0, -4.0, 4.0, -2.0]);
    check(got == fixture, format!("teaching sequence gave {got:?}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for case in 0..100 {
        let len = rng.random_range(2..400);
        let signal: Vec<f64> = (0..len).map(|_| rng.random_range(-50.0..50.0)).collect();
        let cycles = rainflow(&signal);
        let halves: f64 = cycles.iter().map(|c| 2.0 * c.count).sum();
        let tp = turning_points(&signal).len();
        check(
            halves == (tp.max(1) - 1) as f64,
            format!("signal {case}: {halves} half cycles for {tp} turning points"),
        )?;
        let offset = rng.random_range(-1e3..1e3);
        let shifted: Vec<f64> = signal.iter().map(|v| v + offset).collect();
        let moved = rainflow(&shifted);
        check(moved.len() == cycles.len(), format!("signal {case}: offset changed the cycle count"))?;
        for (a, b) in cycles.iter().zip(&moved) {
            check(
                (a.range - b.range).abs() <= 1e-9 * (1.0 + offset.abs()) && a.count == b.count,
                format!("signal {case}: offset changed a range"),
            )?;
        }
    }
    within(t0.elapsed(), 1.0)?;
    Ok("teaching fixture exact; conservation and offset invariance on 100 signals".into())
}

fn criterion_9(cmp: &Result<Comparison, String>) -> Outcome {
    let c = cmp.as_ref().map_err(Clone::clone)?;
    let mut notes = Vec::new();
    for (a, b) in c.robust.dels.iter().zip(&c.baseline.dels) {
        let ratio = a.del / b.del;
        check(ratio <= 1.3, format!("{} DEL ratio {ratio:.3}", a.channel.name()))?;
        notes.push(format!("{} {ratio:.3}", a.channel.name()));
    }
    Ok(format!("DEL ratios {}", notes.join(", ")))
}

fn criterion_10(fx: &Fixture) -> Outcome {
    let t0 = Instant::now();
    let mut notes = Vec::new();
    // reruns: synthesis, wind and closed loop
    let again = design(&fx.params, &fx.surface, &fx.scenario.design).map_err(|e| e.to_string())?;
    check(again == fx.design, "design differs between runs")?;
    for kind in [ControllerKind::RobustLq, ControllerKind::Baseline] {
        let cfg = fx.config(WindSpec::turbulent(14.8, 0.06), 60.0, kind);
        let (a, b) = (fx.run(&cfg).map_err(|e| e.to_string())?, fx.run(&cfg).map_err(|e| e.to_string())?);
        check(bits(&a) == bits(&b), format!("{kind:?}: reruns differ"))?;
    }
    for wind in [WindSpec::constant(14.8), WindSpec::turbulent(14.8, 0.06)] {
        let mut cfg = fx.config(wind.clone(), 60.0, ControllerKind::RobustLq);
        cfg.initial.offset = [2.0, 0.05, 0.0, 0.0, 0.0, 0.02, 1000.0];
        let coarse = fx.run(&cfg).map_err(|e| e.to_string())?;
        cfg.integrator_substeps *= 2;
        let fine = fx.run(&cfg).map_err(|e| e.to_string())?;
        let d = scaled_distance(&coarse.final_state, &fine.final_state, &fx.scaling);
        check(d <= 1e-7, format!("{:?} wind: step halving moved the final state by {d:.3e}", wind.mode))?;
        notes.push(format!("{:?} {d:.2e}", wind.mode));
    }
    Ok(format!(
        "reruns bitwise identical; step-halving final-state change {} ({:.2} s)",
        notes.join(", "),
        t0.elapsed().as_secs_f64()
    ))
}

fn bits(t: &Trajectory) -> Vec<u64> {
    let mut out = Vec::new();
    for k in 0..t.len() {
        out.extend(t.state[k].to_vector().iter().map(|v| v.to_bits()));
        out.extend([
            t.time[k], t.u_cmd[k].u1, t.u_cmd[k].u2, t.u_eff[k].u1, t.u_eff[k].u2, t.wind[k],
            t.wind_hat[k], t.power[k], t.power_d[k], t.omega_d[k], t.alpha[k],
        ]
        .map(f64::to_bits));
    }
    out.extend(t.final_state.to_vector().iter().map(|v| v.to_bits()));
    out
}

fn main() {
    let names = [
        "LQR-oracle equivalence",
        "certificate suite",
        "polytopic robustness",
        "Jacobian correctness",
        "equilibrium residual",
        "closed-loop steady-state tracking",
        "turbulent RMS and rate limits vs baseline",
        "rainflow oracle",
        "DEL non-regression vs baseline",
        "determinism and step-halving convergence",
    ];
    let fx = Fixture::new();
    let cmp = compare_turbulent(&fx);
    let outcomes: [Outcome; 10] = [
        criterion_1(&fx),
        criterion_2(&fx),
        criterion_3(&fx),
        criterion_4(&fx),
        criterion_5(&fx),
        criterion_6(&fx),
        criterion_7(&fx, &cmp),
        criterion_8(),
        criterion_9(&cmp),
        criterion_10(&fx),
    ];
    let mut failed = 0;
    println!();
    for (i, (name, out)) in names.iter().zip(&outcomes).enumerate() {
        match out {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", outcomes.len() - failed);
    if failed > 0 {
        println!("acceptance: set WINDLQ_ACCEPTANCE_STRICT=1 to turn failures into a non-zero exit");
    }
    if failed > 0 && std::env::var_os("WINDLQ_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
