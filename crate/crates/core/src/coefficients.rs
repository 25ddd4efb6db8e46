//! Gridded power and thrust coefficient surfaces.
//!
//! Both maps are sampled on the same rectilinear `(λ, θ)` grid and evaluated
//! by bilinear interpolation. Queries outside the grid are clamped to the
//! boundary. Partial derivatives are the exact derivatives of the interpolant;
//! on a cell edge the cell towards larger `λ` (resp. larger `θ`) is used.

use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

/// Piecewise-affine `Cp(λ, θ)` and `CT(λ, θ)` maps. Pitch angles in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSurface {
    lambda_grid: Vec<f64>,
    theta_grid: Vec<f64>,
    // row-major, one row per lambda node
    cp_values: Vec<f64>,
    ct_values: Vec<f64>,
}

/// Location of a query inside the grid.
#[derive(Debug, Clone, Copy)]
struct Cell {
    i: usize,
    j: usize,
    t: f64,
    s: f64,
    width_lambda: f64,
    width_theta: f64,
    clamped_lambda: bool,
    clamped_theta: bool,
}

impl CoefficientSurface {
    /// Builds and validates a surface. `cp_values[i][j]` is the sample at
    /// `(lambda_grid[i], theta_grid[j])`.
    pub fn new(
        lambda_grid: Vec<f64>,
        theta_grid: Vec<f64>,
        cp_values: Vec<Vec<f64>>,
        ct_values: Vec<Vec<f64>>,
    ) -> Result<Self> {
        check_grid("lambda", &lambda_grid)?;
        check_grid("theta", &theta_grid)?;
        let cp = flatten("Cp", &cp_values, lambda_grid.len(), theta_grid.len())?;
        let ct = flatten("CT", &ct_values, lambda_grid.len(), theta_grid.len())?;
        if let Some((k, v)) = cp
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            let (i, j) = (k / theta_grid.len(), k % theta_grid.len());
            return Err(Error::Surface(format!(
                "Cp sample {v} at (row {i}, column {j}) outside [0, 1]"
            )));
        }
        if let Some((k, v)) = ct
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            let (i, j) = (k / theta_grid.len(), k % theta_grid.len());
            return Err(Error::Surface(format!(
                "CT sample {v} at (row {i}, column {j}) is negative or not finite"
            )));
        }
        Ok(Self {
            lambda_grid,
            theta_grid,
            cp_values: cp,
            ct_values: ct,
        })
    }

    pub fn lambda_grid(&self) -> &[f64] {
        &self.lambda_grid
    }

    pub fn theta_grid(&self) -> &[f64] {
        &self.theta_grid
    }

    pub fn lambda_range(&self) -> (f64, f64) {
        (self.lambda_grid[0], *self.lambda_grid.last().unwrap())
    }

    pub fn theta_range(&self) -> (f64, f64) {
        (self.theta_grid[0], *self.theta_grid.last().unwrap())
    }

    pub fn cp_sample(&self, i: usize, j: usize) -> f64 {
        self.cp_values[i * self.theta_grid.len() + j]
    }

    pub fn ct_sample(&self, i: usize, j: usize) -> f64 {
        self.ct_values[i * self.theta_grid.len() + j]
    }

    pub fn eval_cp(&self, lambda: f64, theta: f64) -> f64 {
        let cell = self.locate(lambda, theta);
        interpolate(&self.cp_values, self.theta_grid.len(), &cell).clamp(0.0, 1.0)
    }

    pub fn eval_ct(&self, lambda: f64, theta: f64) -> f64 {
        let cell = self.locate(lambda, theta);
        interpolate(&self.ct_values, self.theta_grid.len(), &cell).max(0.0)
    }

    /// `(∂Cp/∂λ, ∂Cp/∂θ)` of the interpolant at the query point.
    pub fn partial_cp(&self, lambda: f64, theta: f64) -> (f64, f64) {
        let cell = self.locate(lambda, theta);
        gradient(&self.cp_values, self.theta_grid.len(), &cell)
    }

    /// `(∂CT/∂λ, ∂CT/∂θ)` of the interpolant at the query point.
    pub fn partial_ct(&self, lambda: f64, theta: f64) -> (f64, f64) {
        let cell = self.locate(lambda, theta);
        gradient(&self.ct_values, self.theta_grid.len(), &cell)
    }

    /// Maximum power coefficient. For a piecewise-affine map the maximum is
    /// attained at a grid node.
    pub fn cp_opt(&self) -> f64 {
        self.cp_values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Grid node `(λ, θ)` where [`cp_opt`](Self::cp_opt) is attained (first
    /// occurrence in row-major order).
    pub fn cp_opt_point(&self) -> (f64, f64) {
        let m = self.theta_grid.len();
        let (k, _) = self
            .cp_values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (k, &v)| {
                if v > acc.1 {
                    (k, v)
                } else {
                    acc
                }
            });
        (self.lambda_grid[k / m], self.theta_grid[k % m])
    }

    /// True if `(λ, θ)` lies on a grid line of either axis.
    pub fn on_kink(&self, lambda: f64, theta: f64) -> bool {
        self.lambda_grid.contains(&lambda) || self.theta_grid.contains(&theta)
    }

    fn locate(&self, lambda: f64, theta: f64) -> Cell {
        let (i, t, wl, cl) = axis_cell(&self.lambda_grid, lambda);
        let (j, s, wt, ct) = axis_cell(&self.theta_grid, theta);
        Cell {
            i,
            j,
            t,
            s,
            width_lambda: wl,
            width_theta: wt,
            clamped_lambda: cl,
            clamped_theta: ct,
        }
    }

    /// Serializes one of the two maps in the documented CSV layout.
    pub fn to_csv(&self, which: CoefficientKind) -> String {
        let values = match which {
            CoefficientKind::Power => &self.cp_values,
            CoefficientKind::Thrust => &self.ct_values,
        };
        let m = self.theta_grid.len();
        let mut out = String::from("lambda\\theta");
        for th in &self.theta_grid {
            let _ = write!(out, ",{th:.16e}");
        }
        out.push('\n');
        for (i, lam) in self.lambda_grid.iter().enumerate() {
            let _ = write!(out, "{lam:.16e}");
            for v in &values[i * m..(i + 1) * m] {
                let _ = write!(out, ",{v:.16e}");
            }
            out.push('\n');
        }
        out
    }

    /// Parses a Cp CSV and a CT CSV of identical grid layout.
    pub fn from_csv(cp_text: &str, ct_text: &str) -> Result<Self> {
        let (lg, tg, cp) = parse_csv("Cp", cp_text)?;
        let (lg2, tg2, ct) = parse_csv("CT", ct_text)?;
        if lg != lg2 || tg != tg2 {
            return Err(Error::Surface(
                "Cp and CT files use different grids".to_string(),
            ));
        }
        Self::new(lg, tg, cp, ct)
    }

    pub fn save(&self, cp_path: &Path, ct_path: &Path) -> Result<()> {
        std::fs::write(cp_path, self.to_csv(CoefficientKind::Power))?;
        std::fs::write(ct_path, self.to_csv(CoefficientKind::Thrust))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientKind {
    Power,
    Thrust,
}

/// Loads a surface from a Cp CSV and a CT CSV.
pub fn load_surface(cp_path: &Path, ct_path: &Path) -> Result<CoefficientSurface> {
    let cp = std::fs::read_to_string(cp_path)?;
    let ct = std::fs::read_to_string(ct_path)?;
    CoefficientSurface::from_csv(&cp, &ct).map_err(|e| match e {
        Error::Surface(msg) => Error::Surface(format!(
            "{} / {}: {msg}",
            cp_path.display(),
            ct_path.display()
        )),
        other => other,
    })
}

/// Constants of the analytic power-coefficient model
/// `Cp = c1·(c2/λi − c3·θ − c4)·exp(−c5/λi) + c6·λ`,
/// `1/λi = 1/(λ + 0.08·θ) − 0.035/(θ³ + 1)`, θ in degrees.
pub const ANALYTIC_CP: [f64; 6] = [0.5176, 116.0, 0.4, 5.0, 21.0, 0.0068];

/// Grid of the bundled default surface.
pub const DEFAULT_LAMBDA_RANGE: (f64, f64) = (1.0, 15.0);
pub const DEFAULT_THETA_RANGE_DEG: (f64, f64) = (0.0, 45.0);
pub const DEFAULT_GRID_POINTS: usize = 40;
pub const DEFAULT_CT_MAX: f64 = 1.2;

/// Analytic power coefficient, clipped to `[0, 1]`. `theta_deg` in degrees.
pub fn analytic_cp(lambda: f64, theta_deg: f64) -> f64 {
    let [c1, c2, c3, c4, c5, c6] = ANALYTIC_CP;
    let inv_li = 1.0 / (lambda + 0.08 * theta_deg) - 0.035 / (theta_deg.powi(3) + 1.0);
    let cp = c1 * (c2 * inv_li - c3 * theta_deg - c4) * (-c5 * inv_li).exp() + c6 * lambda;
    cp.clamp(0.0, 1.0)
}

/// Thrust coefficient consistent with `Cp` under actuator-disc momentum
/// theory: the axial induction `a ∈ [0, 1/3]` solves `Cp = 4a(1−a)²` and
/// `CT = 4a(1−a)`, clipped to `[0, DEFAULT_CT_MAX]`.
pub fn momentum_ct(cp: f64) -> f64 {
    let target = cp.clamp(0.0, 16.0 / 27.0);
    if target == 0.0 {
        return 0.0;
    }
    let power = |a: f64| 4.0 * a * (1.0 - a) * (1.0 - a);
    let (mut lo, mut hi) = (0.0_f64, 1.0 / 3.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if power(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let a = 0.5 * (lo + hi);
    (4.0 * a * (1.0 - a)).clamp(0.0, DEFAULT_CT_MAX)
}

/// The bundled default surface: [`analytic_cp`] and [`momentum_ct`] sampled on
/// a 40×40 grid over `λ ∈ [1, 15]`, `θ ∈ [0°, 45°]`.
pub fn default_surface() -> CoefficientSurface {
    let n = DEFAULT_GRID_POINTS;
    let lambda_grid = linspace(DEFAULT_LAMBDA_RANGE.0, DEFAULT_LAMBDA_RANGE.1, n);
    let theta_deg = linspace(DEFAULT_THETA_RANGE_DEG.0, DEFAULT_THETA_RANGE_DEG.1, n);
    let theta_grid: Vec<f64> = theta_deg.iter().map(|d| d.to_radians()).collect();
    let cp: Vec<Vec<f64>> = lambda_grid
        .iter()
        .map(|&l| theta_deg.iter().map(|&t| analytic_cp(l, t)).collect())
        .collect();
    let ct = cp
        .iter()
        .map(|row| row.iter().map(|&c| momentum_ct(c)).collect())
        .collect();
    CoefficientSurface::new(lambda_grid, theta_grid, cp, ct)
        .expect("default surface satisfies its invariants")
}

pub(crate) fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            if k + 1 == n {
                b
            } else {
                a + (b - a) * k as f64 / (n - 1) as f64
            }
        })
        .collect()
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::Surface(format!(
            "{name} grid needs at least 2 points, got {}",
            grid.len()
        )));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::Surface(format!("{name} grid has non-finite entries")));
    }
    if let Some(k) = grid.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::Surface(format!(
            "{name} grid not strictly increasing at index {}",
            k + 1
        )));
    }
    Ok(())
}

fn flatten(name: &str, rows: &[Vec<f64>], n: usize, m: usize) -> Result<Vec<f64>> {
    if rows.len() != n {
        return Err(Error::Surface(format!(
            "{name} has {} rows, expected {n}",
            rows.len()
        )));
    }
    let mut out = Vec::with_capacity(n * m);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != m {
            return Err(Error::Surface(format!(
                "{name} row {i} has {} columns, expected {m}",
                row.len()
            )));
        }
        out.extend_from_slice(row);
    }
    Ok(out)
}

/// Cell index, local coordinate in `[0, 1]`, cell width, and whether the
/// query was clamped to the grid.
fn axis_cell(grid: &[f64], x: f64) -> (usize, f64, f64, bool) {
    let n = grid.len();
    let (lo, hi) = (grid[0], grid[n - 1]);
    let clamped = !(lo..=hi).contains(&x);
    let xc = x.clamp(lo, hi);
    // first index with grid[k] > xc, minus one: the cell to the right of a node
    let k = grid.partition_point(|&g| g <= xc);
    let i = k.saturating_sub(1).min(n - 2);
    let w = grid[i + 1] - grid[i];
    let t = ((xc - grid[i]) / w).clamp(0.0, 1.0);
    (i, t, w, clamped)
}

fn corners(values: &[f64], m: usize, c: &Cell) -> (f64, f64, f64, f64) {
    let base = c.i * m + c.j;
    (
        values[base],
        values[base + m],
        values[base + 1],
        values[base + m + 1],
    )
}

fn interpolate(values: &[f64], m: usize, c: &Cell) -> f64 {
    let (f00, f10, f01, f11) = corners(values, m, c);
    let (t, s) = (c.t, c.s);
    (1.0 - t) * (1.0 - s) * f00 + t * (1.0 - s) * f10 + (1.0 - t) * s * f01 + t * s * f11
}

fn gradient(values: &[f64], m: usize, c: &Cell) -> (f64, f64) {
    let (f00, f10, f01, f11) = corners(values, m, c);
    let (t, s) = (c.t, c.s);
    let d_lambda = if c.clamped_lambda {
        0.0
    } else {
        ((1.0 - s) * (f10 - f00) + s * (f11 - f01)) / c.width_lambda
    };
    let d_theta = if c.clamped_theta {
        0.0
    } else {
        ((1.0 - t) * (f01 - f00) + t * (f11 - f10)) / c.width_theta
    };
    (d_lambda, d_theta)
}

type ParsedCsv = (Vec<f64>, Vec<f64>, Vec<Vec<f64>>);

fn parse_csv(name: &str, text: &str) -> Result<ParsedCsv> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(name, "empty file"))?;
    let mut cols = header.split(',');
    let corner = cols.next().unwrap_or_default().trim();
    if corner != "lambda\\theta" {
        return Err(Error::parse(
            name,
            format!("line 1: expected header cell `lambda\\theta`, found `{corner}`"),
        ));
    }
    let theta_grid = cols
        .enumerate()
        .map(|(k, s)| parse_num(name, 1, k + 2, s))
        .collect::<Result<Vec<_>>>()?;
    let mut lambda_grid = Vec::new();
    let mut rows = Vec::new();
    for (ln, line) in lines.enumerate() {
        let line_no = ln + 2;
        let mut cells = line.split(',');
        let lam = parse_num(name, line_no, 1, cells.next().unwrap_or_default())?;
        let row = cells
            .enumerate()
            .map(|(k, s)| parse_num(name, line_no, k + 2, s))
            .collect::<Result<Vec<_>>>()?;
        if row.len() != theta_grid.len() {
            return Err(Error::Surface(format!(
                "{name} line {line_no}: {} values, header has {} pitch angles",
                row.len(),
                theta_grid.len()
            )));
        }
        lambda_grid.push(lam);
        rows.push(row);
    }
    Ok((lambda_grid, theta_grid, rows))
}

fn parse_num(name: &str, line: usize, col: usize, s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| {
        Error::parse(name, format!("line {line}, column {col}: `{}`: {e}", s.trim()))
    })
}
