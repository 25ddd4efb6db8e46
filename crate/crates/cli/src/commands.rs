use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use log::info;
use serde::Serialize;
use serde_json::{json, Value};

use windlq::coefficients::CoefficientSurface;
use windlq::control::{desired_power, region_boundary_speed, GainSchedule, PowerSpeedTable};
use windlq::design::{design, Design};
use windlq::equilibrium::{compute_equilibrium, scaled_residual};
use windlq::linearize::{linearize, StateScaling};
use windlq::metrics::{evaluate, load_proxy, rainflow, cycles_to_csv, trim, MetricsReport};
use windlq::scenario::Scenario;
use windlq::sim::{simulate, ControllerKind, Trajectory};
use windlq::turbine::{ExternalInput, TurbineParameters};
use windlq::{Error, NU, NX};

use crate::plot::{grouped_bars, line_chart, Series};
use crate::{validate, Cli, Command, PointArgs};

/// Slack for rate and level checks on logged trajectories.
const INVARIANT_SLACK: f64 = 1e-9;

pub const STATE_NAMES: [&str; NX] = ["omega", "x_t", "v_t", "z_omega", "z_p", "theta", "m_g"];
pub const INPUT_NAMES: [&str; NU] = ["u1", "u2"];

/// Scenario, plant and surface shared by all commands.
struct Setup {
    scenario: Scenario,
    params: TurbineParameters,
    surface: CoefficientSurface,
    out: PathBuf,
}

impl Setup {
    fn load(path: Option<&Path>, seed: Option<u64>, out: Option<&Path>) -> Result<Self> {
        let mut scenario = match path {
            Some(p) => Scenario::load(p)?,
            None => Scenario::default_for(&TurbineParameters::default()),
        };
        if let Some(s) = seed {
            scenario.simulation.seed = s;
        }
        scenario.validate()?;
        let params = scenario.params()?;
        let surface = scenario.surface()?;
        let out = match out {
            Some(o) => o.to_path_buf(),
            None => scenario.resolve(&scenario.output_dir),
        };
        Ok(Self { scenario, params, surface, out })
    }

    fn table(&self) -> Result<PowerSpeedTable> {
        Ok(PowerSpeedTable::generate(&self.params, &self.surface, self.scenario.design.table_nodes)?)
    }

    /// Gain schedule from the scenario, or freshly synthesized.
    fn schedule(&self) -> Result<GainSchedule> {
        if let Some(g) = self.scenario.load_gains()? {
            return Ok(g);
        }
        info!("no gain file in scenario; synthesizing");
        let d = checked_design(self)?;
        Ok(d.schedule)
    }

    fn simulate(&self, kind: ControllerKind, schedule: Option<&GainSchedule>) -> Result<Trajectory> {
        let mut cfg = self.scenario.simulation_config();
        cfg.controller = kind;
        let setup = self.scenario.controller_setup(kind, schedule)?;
        let table = self.table()?;
        info!("simulating {kind:?} for {} s", cfg.duration);
        Ok(simulate(&cfg, &self.params, &self.surface, &table, &setup)?)
    }
}

/// Files written by one command, for `--validate`.
#[derive(Default)]
struct Emitted(Vec<PathBuf>);

impl Emitted {
    fn write(&mut self, dir: &Path, name: &str, contents: &str) -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.0.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, dir: &Path, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(dir, name, &text)
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let ctx = Setup::load(cli.scenario.as_deref(), cli.seed, cli.out.as_deref())?;
    fs::create_dir_all(&ctx.out).with_context(|| format!("creating {}", ctx.out.display()))?;
    let mut emitted = Emitted::default();
    let outcome = match &cli.command {
        Command::Synthesize => synthesize(&ctx, &mut emitted),
        Command::Simulate { controller } => {
            let kind = controller.map(Into::into).unwrap_or(ctx.scenario.simulation.controller);
            simulate_cmd(&ctx, kind, &mut emitted)
        }
        Command::Compare { against } => compare(&ctx, against.as_deref(), cli.seed, &mut emitted),
        Command::Equilibrium(args) => equilibrium_cmd(&ctx, args, &mut emitted),
        Command::Linearize(args) => linearize_cmd(&ctx, args, &mut emitted),
        Command::Del { trajectory, cycles } => del_cmd(&ctx, trajectory, *cycles, &mut emitted),
    };
    // Files are checked even when the command itself failed after writing them.
    if cli.validate {
        for path in &emitted.0 {
            validate::check_file(path)?;
        }
        eprintln!("validated {} file(s)", emitted.0.len());
    }
    outcome
}

fn run_design(ctx: &Setup) -> Result<Design> {
    Ok(design(&ctx.params, &ctx.surface, &ctx.scenario.design)?)
}

fn certification_error(d: &Design) -> Option<Error> {
    let failures: Vec<String> = [&d.region2, &d.region3]
        .iter()
        .flat_map(|r| r.report.failures.iter().map(move |f| format!("{}: {f}", r.region.label())))
        .collect();
    (!failures.is_empty()).then(|| Error::CertificationFailure(failures.join("; ")))
}

fn checked_design(ctx: &Setup) -> Result<Design> {
    let d = run_design(ctx)?;
    match certification_error(&d) {
        Some(e) => Err(e.into()),
        None => Ok(d),
    }
}

fn synthesize(ctx: &Setup, emitted: &mut Emitted) -> Result<()> {
    let d = run_design(ctx)?;
    emitted.json(&ctx.out, "gains.json", &d.schedule)?;
    let regions: Vec<Value> = [&d.region2, &d.region3]
        .iter()
        .map(|r| {
            json!({
                "region": r.region,
                "operating_points": r.inputs,
                "gain": rows(&r.k),
                "gain_scaled": r.result.k.row_iter().map(|row| row.iter().copied().collect()).collect::<Vec<Vec<f64>>>(),
                "cost_j": r.result.cost_j,
                "per_vertex_cost": r.result.per_vertex_cost,
                "solver_iterations": r.result.solver_iterations,
                "certificate": r.report,
                "certified": r.report.passed(),
            })
        })
        .collect();
    let summary = json!({
        "p_ref": d.p_ref,
        "v_d": d.v_d,
        "epsilon": ctx.scenario.design.epsilon,
        "delta_v": d.schedule.delta_v,
        "scaling": d.scaling,
        "regions": regions,
    });
    emitted.json(&ctx.out, "synthesis.json", &summary)?;
    let mut cert = String::new();
    for r in [&d.region2, &d.region3] {
        cert.push_str(&format!(
            "== {} ({}) ==\n{}\n",
            r.region.label(),
            if r.report.passed() { "PASS" } else { "FAIL" },
            r.report
        ));
    }
    emitted.write(&ctx.out, "certificate.txt", &cert)?;
    print!("{cert}");
    println!("gains written to {}", ctx.out.join("gains.json").display());
    match certification_error(&d) {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn rows<const R: usize, const C: usize>(m: &nalgebra::SMatrix<f64, R, C>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn trajectory_checks(traj: &Trajectory, params: &TurbineParameters) -> Vec<Check> {
    let sat = traj.check_saturation_invariants(params, INVARIANT_SLACK);
    let finite = traj.state.iter().all(|x| x.is_finite()) && traj.final_state.is_finite();
    let omega_ok = traj.state.iter().all(|x| x.omega >= params.omega_min);
    vec![
        Check {
            name: "actuator_limits",
            passed: sat.is_ok(),
            detail: sat.err().map_or_else(|| "levels and rates within limits".into(), |e| e.to_string()),
        },
        Check {
            name: "finite_states",
            passed: finite,
            detail: format!("{} samples", traj.len()),
        },
        Check {
            name: "speed_above_validity_limit",
            passed: omega_ok,
            detail: format!(
                "min omega {:.4} rad/s, limit {:.4} rad/s",
                traj.state.iter().map(|x| x.omega).fold(f64::INFINITY, f64::min),
                params.omega_min
            ),
        },
    ]
}

fn metrics_document(
    ctx: &Setup,
    label: &str,
    kind: Option<ControllerKind>,
    traj: &Trajectory,
    report: &MetricsReport,
) -> Value {
    json!({
        "label": label,
        "controller": kind,
        "seed": ctx.scenario.simulation.seed,
        "metrics": report,
        "checks": trajectory_checks(traj, &ctx.params),
    })
}

fn power_plot(title: &str, traj: &Trajectory, extra: Option<(&str, &Trajectory)>, label: &str) -> String {
    let mw = |p: &[f64]| p.iter().map(|v| v / 1e6).collect::<Vec<f64>>();
    let pd = mw(&traj.power_d);
    let p = mw(&traj.power);
    let other = extra.map(|(_, t)| mw(&t.power));
    let mut series = vec![
        Series { label: "desired", x: &traj.time, y: &pd },
        Series { label, x: &traj.time, y: &p },
    ];
    if let (Some((name, t)), Some(o)) = (extra, other.as_ref()) {
        series.push(Series { label: name, x: &t.time, y: o });
    }
    line_chart(title, "time (s)", "power (MW)", &series)
}

fn actuator_plot(traj: &Trajectory) -> String {
    let theta: Vec<f64> = traj.state.iter().map(|x| x.theta.to_degrees()).collect();
    let mg: Vec<f64> = traj.state.iter().map(|x| x.m_g / 1e3).collect();
    let pitch = line_chart(
        "Pitch angle",
        "time (s)",
        "pitch (deg)",
        &[Series { label: "pitch", x: &traj.time, y: &theta }],
    );
    let torque = line_chart(
        "Generator torque",
        "time (s)",
        "torque (kN m)",
        &[Series { label: "torque", x: &traj.time, y: &mg }],
    );
    stack_svgs(&[pitch, torque])
}

/// Places complete SVG documents below each other in one document.
fn stack_svgs(parts: &[String]) -> String {
    let mut y = 0.0;
    let mut body = String::new();
    let mut width: f64 = 0.0;
    for p in parts {
        let (w, h) = svg_size(p);
        width = width.max(w);
        body.push_str(&p.replacen("<svg ", &format!("<svg y=\"{y}\" "), 1));
        y += h;
    }
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{y}\" viewBox=\"0 0 {width} {y}\">\n{body}</svg>\n"
    )
}

fn svg_size(svg: &str) -> (f64, f64) {
    let attr = |name: &str| {
        svg.split(&format!(" {name}=\""))
            .nth(1)
            .and_then(|s| s.split('"').next())
            .and_then(|s| s.parse::<f64>().ok())
            .unwrap_or(0.0)
    };
    (attr("width"), attr("height"))
}

fn simulate_cmd(ctx: &Setup, kind: ControllerKind, emitted: &mut Emitted) -> Result<()> {
    let schedule = match kind {
        ControllerKind::RobustLq => Some(ctx.schedule()?),
        ControllerKind::Baseline => None,
    };
    let traj = ctx.simulate(kind, schedule.as_ref())?;
    let report = evaluate(&traj, &ctx.params, &ctx.surface, &ctx.scenario.metrics)?;
    emitted.write(&ctx.out, "trajectory.csv", &traj.to_csv())?;
    let doc = metrics_document(ctx, controller_name(kind), Some(kind), &traj, &report);
    emitted.json(&ctx.out, "metrics.json", &doc)?;
    emitted.write(
        &ctx.out,
        "power.svg",
        &power_plot("Desired and electrical power", &traj, None, controller_name(kind)),
    )?;
    emitted.write(&ctx.out, "actuators.svg", &actuator_plot(&traj))?;
    print_metrics(controller_name(kind), &report);
    let failed: Vec<&str> = trajectory_checks(&traj, &ctx.params)
        .into_iter()
        .filter(|c| !c.passed)
        .map(|c| c.name)
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(format!("trajectory checks failed: {}", failed.join(", "))).into())
    }
}

fn controller_name(kind: ControllerKind) -> &'static str {
    match kind {
        ControllerKind::RobustLq => "robust-lq",
        ControllerKind::Baseline => "baseline",
    }
}

fn print_metrics(label: &str, r: &MetricsReport) {
    println!("{label}:");
    println!(
        "  rms tracking error  {:.4e} W ({:.4} % of rated)",
        r.rms_tracking_error,
        100.0 * r.rms_tracking_error_rel_rated
    );
    println!(
        "  max rates           {:.3} deg/s, {:.1} N m/s",
        r.rates.max_pitch_rate.to_degrees(),
        r.rates.max_torque_rate
    );
    for d in &r.dels {
        println!(
            "  DEL {:<15} {:.4e} (m = {}, {} cycles)",
            d.channel.name(),
            d.del,
            d.woehler_exponent,
            d.cycles
        );
    }
}

/// One side of a comparison.
struct Run {
    label: String,
    kind: ControllerKind,
    traj: Trajectory,
    report: MetricsReport,
}

fn run_side(ctx: &Setup, kind: ControllerKind, label: String) -> Result<Run> {
    let schedule = match kind {
        ControllerKind::RobustLq => Some(ctx.schedule()?),
        ControllerKind::Baseline => None,
    };
    let traj = ctx.simulate(kind, schedule.as_ref())?;
    let report = evaluate(&traj, &ctx.params, &ctx.surface, &ctx.scenario.metrics)?;
    Ok(Run { label, kind, traj, report })
}

/// `(b − a)/a`, zero when both vanish.
fn relative_delta(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (b - a) / a
    }
}

fn compare(ctx: &Setup, against: Option<&Path>, seed: Option<u64>, emitted: &mut Emitted) -> Result<()> {
    let kind_a = ctx.scenario.simulation.controller;
    let other = match against {
        Some(p) => Some(Setup::load(Some(p), seed, Some(&ctx.out))?),
        None => None,
    };
    let (ctx_b, kind_b) = match &other {
        Some(c) => (c, c.scenario.simulation.controller),
        None => (
            ctx,
            match kind_a {
                ControllerKind::RobustLq => ControllerKind::Baseline,
                ControllerKind::Baseline => ControllerKind::RobustLq,
            },
        ),
    };
    let label_a = format!("A: {}", controller_name(kind_a));
    let label_b = format!("B: {}", controller_name(kind_b));
    let (a, b) = std::thread::scope(|s| {
        let hb = s.spawn(|| run_side(ctx_b, kind_b, label_b));
        let a = run_side(ctx, kind_a, label_a);
        (a, hb.join().expect("simulation thread panicked"))
    });
    let (a, b) = (a?, b?);

    let mut names = vec!["rms_tracking_error".to_string(), "max_pitch_rate".into(), "max_torque_rate".into()];
    let mut va = vec![a.report.rms_tracking_error, a.report.rates.max_pitch_rate, a.report.rates.max_torque_rate];
    let mut vb = vec![b.report.rms_tracking_error, b.report.rates.max_pitch_rate, b.report.rates.max_torque_rate];
    for da in &a.report.dels {
        if let Some(db) = b.report.dels.iter().find(|d| d.channel == da.channel) {
            names.push(format!("del_{}", da.channel.name()));
            va.push(da.del);
            vb.push(db.del);
        }
    }
    let rows: Vec<Value> = names
        .iter()
        .zip(va.iter().zip(&vb))
        .map(|(n, (x, y))| json!({ "metric": n, "a": x, "b": y, "relative_delta": relative_delta(*x, *y) }))
        .collect();
    let doc = json!({
        "a": metrics_document(ctx, &a.label, Some(a.kind), &a.traj, &a.report),
        "b": metrics_document(ctx_b, &b.label, Some(b.kind), &b.traj, &b.report),
        "deltas": rows,
    });
    emitted.json(&ctx.out, "comparison.json", &doc)?;

    // Bars normalized by side A so that metrics of different units share an axis.
    let norm_a: Vec<f64> = va.iter().map(|x| if *x != 0.0 { 1.0 } else { 0.0 }).collect();
    let norm_b: Vec<f64> = va.iter().zip(&vb).map(|(x, y)| if *x != 0.0 { y / x } else { 0.0 }).collect();
    let labels = [a.label.as_str(), b.label.as_str()];
    emitted.write(
        &ctx.out,
        "comparison.svg",
        &grouped_bars("Metrics relative to A", "value / A", &names, &labels, &[norm_a, norm_b]),
    )?;
    emitted.write(
        &ctx.out,
        "power_compare.svg",
        &power_plot("Desired and electrical power", &a.traj, Some((&b.label, &b.traj)), &a.label),
    )?;

    println!("{:<22} {:>14} {:>14} {:>10}", "metric", "A", "B", "delta");
    for (n, (x, y)) in names.iter().zip(va.iter().zip(&vb)) {
        println!("{n:<22} {x:>14.6e} {y:>14.6e} {:>+9.2}%", 100.0 * relative_delta(*x, *y));
    }
    Ok(())
}

fn external_input(ctx: &Setup, args: &PointArgs) -> Result<ExternalInput> {
    if !(args.wind > 0.0) {
        return Err(Error::Validation(format!("wind speed must be positive, got {}", args.wind)).into());
    }
    let p_d = args
        .p_d
        .unwrap_or_else(|| desired_power(&ctx.params, &ctx.surface, ctx.scenario.design.p_ref, args.wind));
    let omega_d = match args.omega_d {
        Some(w) => w,
        None => ctx.table()?.desired_speed(p_d),
    };
    Ok(ExternalInput { v: args.wind, omega_d, p_d })
}

fn equilibrium_cmd(ctx: &Setup, args: &PointArgs, emitted: &mut Emitted) -> Result<()> {
    let w = external_input(ctx, args)?;
    let eq = compute_equilibrium(&ctx.params, &ctx.surface, &w)?;
    let scaling = StateScaling::characteristic(&ctx.params);
    let residual = scaled_residual(&ctx.params, &ctx.surface, &eq, &scaling)?;
    let doc = json!({
        "equilibrium": eq,
        "theta_deg": eq.theta_s.to_degrees(),
        "scaled_residual": residual,
        "region_boundary_speed": region_boundary_speed(&ctx.params, &ctx.surface, ctx.scenario.design.p_ref),
    });
    emitted.json(&ctx.out, "equilibrium.json", &doc)?;
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(())
}

fn matrix_csv<const R: usize, const C: usize>(m: &nalgebra::SMatrix<f64, R, C>, cols: &[&str]) -> String {
    let mut s = String::from("row,");
    s.push_str(&cols.join(","));
    s.push('\n');
    for (i, r) in m.row_iter().enumerate() {
        s.push_str(STATE_NAMES[i]);
        for v in r.iter() {
            s.push_str(&format!(",{v}"));
        }
        s.push('\n');
    }
    s
}

fn linearize_cmd(ctx: &Setup, args: &PointArgs, emitted: &mut Emitted) -> Result<()> {
    let w = external_input(ctx, args)?;
    let eq = compute_equilibrium(&ctx.params, &ctx.surface, &w)?;
    let model = linearize(&ctx.params, &ctx.surface, &eq);
    emitted.write(&ctx.out, "a.csv", &matrix_csv(&model.a, &STATE_NAMES))?;
    emitted.write(&ctx.out, "b.csv", &matrix_csv(&model.b, &INPUT_NAMES))?;
    let ctrb = model.controllability();
    let eig = model.a.complex_eigenvalues();
    let mut eigs: Vec<(f64, f64)> = eig.iter().map(|c| (c.re, c.im)).collect();
    eigs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    let doc = json!({
        "equilibrium": eq,
        "a": rows(&model.a),
        "b": rows(&model.b),
        "eigenvalues": eigs.iter().map(|(re, im)| json!({"re": re, "im": im})).collect::<Vec<_>>(),
        "controllable": ctrb.controllable,
        "controllability_rank": ctrb.rank,
    });
    emitted.json(&ctx.out, "linearization.json", &doc)?;
    println!("A =\n{}", model.a);
    println!("B =\n{}", model.b);
    println!("controllable: {} (rank {})", ctrb.controllable, ctrb.rank);
    Ok(())
}

fn del_cmd(ctx: &Setup, path: &Path, write_cycles: bool, emitted: &mut Emitted) -> Result<()> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let traj = Trajectory::from_csv(&text, &path.display().to_string())?;
    let report = evaluate(&traj, &ctx.params, &ctx.surface, &ctx.scenario.metrics)?;
    let doc = metrics_document(ctx, &path.display().to_string(), None, &traj, &report);
    emitted.json(&ctx.out, "metrics.json", &doc)?;
    if write_cycles {
        let trimmed = trim(&traj, ctx.scenario.metrics.skip);
        for ch in &ctx.scenario.metrics.channels {
            let signal = load_proxy(&trimmed, &ctx.params, &ctx.surface, ch.channel, ctx.scenario.metrics.tower_lever);
            emitted.write(
                &ctx.out,
                &format!("cycles_{}.csv", ch.channel.name()),
                &cycles_to_csv(&rainflow(&signal)),
            )?;
        }
    }
    print_metrics(&path.display().to_string(), &report);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deltas() {
        assert_eq!(relative_delta(0.0, 0.0), 0.0);
        assert_eq!(relative_delta(2.0, 2.0), 0.0);
        assert_eq!(relative_delta(2.0, 1.0), -0.5);
    }

    #[test]
    fn stacked_svg_height_adds() {
        let one = line_chart("a", "x", "y", &[Series { label: "s", x: &[0.0, 1.0], y: &[0.0, 1.0] }]);
        let (w, h) = svg_size(&one);
        let both = stack_svgs(&[one.clone(), one]);
        assert_eq!(svg_size(&both), (w, 2.0 * h));
        assert_eq!(both.matches("</svg>").count(), 3);
    }
}
