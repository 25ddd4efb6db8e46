import init, { cp_slice, equilibrium, simulate_run } from "./pkg/windlq_web.js";

const $ = (id) => document.getElementById(id);
const COLORS = ["#1f77b4", "#d62728", "#2ca02c"];

function plot(canvas, x, series, xLabel) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height;
  const pad = { l: 70, r: 10, t: 24, b: 30 };
  ctx.clearRect(0, 0, w, h);
  const ys = series.flatMap((s) => s.y).filter(Number.isFinite);
  let lo = Math.min(...ys), hi = Math.max(...ys);
  if (hi - lo < 1e-12 * Math.max(1, Math.abs(hi))) { lo -= 1; hi += 1; }
  const x0 = x[0], x1 = x[x.length - 1];
  const sx = (v) => pad.l + (v - x0) / (x1 - x0) * (w - pad.l - pad.r);
  const sy = (v) => h - pad.b - (v - lo) / (hi - lo) * (h - pad.t - pad.b);

  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad.l, pad.t, w - pad.l - pad.r, h - pad.t - pad.b);
  ctx.fillStyle = "#333";
  ctx.font = "12px sans-serif";
  for (let i = 0; i <= 4; i++) {
    const v = lo + (hi - lo) * i / 4;
    ctx.fillText(v.toPrecision(4), 4, sy(v) + 4);
    const t = x0 + (x1 - x0) * i / 4;
    ctx.fillText(t.toPrecision(3), sx(t) - 10, h - 10);
  }
  ctx.fillText(xLabel, w / 2, h - 10);
  series.forEach((s, k) => {
    ctx.strokeStyle = COLORS[k % COLORS.length];
    ctx.beginPath();
    s.y.forEach((v, i) => (i ? ctx.lineTo(sx(x[i]), sy(v)) : ctx.moveTo(sx(x[i]), sy(v))));
    ctx.stroke();
    ctx.fillStyle = COLORS[k % COLORS.length];
    ctx.fillText(s.label, pad.l + 10 + 140 * k, 15);
  });
}

function guarded(out, f) {
  try {
    out.classList.remove("err");
    f();
  } catch (e) {
    out.textContent = String(e.message ?? e);
    out.classList.add("err");
  }
}

function drawCp() {
  guarded($("cp-info"), () => {
    const s = JSON.parse(cp_slice(Number($("cp-theta").value), 400));
    $("cp-info").textContent =
      `pitch ${s.theta_deg.toFixed(1)} deg, max Cp ${s.cp_max.toFixed(4)} at tip-speed ratio ${s.lambda_at_max.toFixed(2)}`;
    plot($("cp-plot"), s.lambda, [{ label: "Cp", y: s.cp }], "tip-speed ratio");
  });
}

function runEquilibrium() {
  guarded($("eq-out"), () => {
    const r = JSON.parse(equilibrium(Number($("eq-wind").value), Number($("eq-pref").value)));
    const eig = r.eigenvalues.map(([re, im]) => `${re.toFixed(4)}${im >= 0 ? "+" : "-"}${Math.abs(im).toFixed(4)}i`);
    $("eq-out").textContent = [
      `desired power      ${(r.p_d / 1e6).toFixed(4)} MW`,
      `generator speed    ${r.omega.toFixed(3)} rad/s`,
      `pitch              ${r.theta_deg.toFixed(3)} deg`,
      `generator torque   ${r.m_g.toFixed(1)} N m`,
      `tip-speed ratio    ${r.lambda.toFixed(4)}`,
      `tower deflection   ${r.tower_deflection.toFixed(4)} m`,
      `region boundary    ${r.region_boundary_speed.toFixed(3)} m/s`,
      `open-loop poles    ${eig.join(", ")}`,
    ].join("\n");
  });
}

function runSimulation() {
  $("sim-info").textContent = "running...";
  // Let the browser paint the message before the synchronous run.
  setTimeout(() => guarded($("sim-info"), () => {
    const t0 = performance.now();
    const r = JSON.parse(simulate_run(
      $("sim-ctrl").value,
      Number($("sim-wind").value),
      Number($("sim-ti").value),
      Number($("sim-pref").value),
      Number($("sim-dur").value),
      Number($("sim-seed").value) >>> 0,
    ));
    const m = r.metrics;
    $("sim-info").textContent =
      `${r.controller}: RMS tracking error ${(m.rms_tracking_error / 1e3).toFixed(3)} kW, ` +
      `max pitch rate ${(m.rates.max_pitch_rate * 180 / Math.PI).toFixed(2)} deg/s, ` +
      `max torque rate ${m.rates.max_torque_rate.toFixed(0)} N m/s ` +
      `(${((performance.now() - t0) / 1000).toFixed(1)} s)`;
    const mw = (v) => v.map((p) => p / 1e6);
    plot($("sim-power"), r.time, [
      { label: "desired power (MW)", y: mw(r.power_d) },
      { label: "power (MW)", y: mw(r.power) },
    ], "time (s)");
    plot($("sim-pitch"), r.time, [{ label: "pitch (deg)", y: r.pitch_deg }], "time (s)");
  }), 20);
}

await init();
$("status").textContent = "Ready.";
$("cp-theta").addEventListener("input", drawCp);
$("eq-run").addEventListener("click", runEquilibrium);
$("sim-run").addEventListener("click", runSimulation);
drawCp();
runEquilibrium();
