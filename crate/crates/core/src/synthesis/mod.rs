//! Robust multi-model H2 state-feedback synthesis.
//!
//! For vertex systems `(Aᵢ, B)` and weights `(Q, R)` the gain `K = Y·P⁻¹`
//! comes from the linear semidefinite program
//!
//! ```text
//! minimize   Tr(Q·P) + Tr(X)
//! subject to [[X, R½·Y], [Yᵀ·R½, P]] ⪰ ε·I
//!            P ⪰ ε·I
//!            Aᵢ·P + P·Aᵢᵀ + B·Y + Yᵀ·Bᵀ + I ⪯ −ε·I    for every vertex i
//! ```
//!
//! `V(ξ) = ξᵀP⁻¹ξ` is then a common Lyapunov function for every vertex and for
//! every convex combination of vertices. The optimal value bounds the
//! per-vertex H2 costs `Jᵢ` from above; [`certify`] checks this chain with
//! independently solved Lyapunov equations.

pub mod lyapunov;
pub mod sdp;

use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linearize::controllability_check;
use crate::{Error, Result};
use lyapunov::{max_eigenvalue, min_eigenvalue, solve_lyapunov, spectral_abscissa, sym_sqrt};
use sdp::{Entry, InteriorPointSolver, SdpProgram, SdpSolver};

/// Default strictness margin (scaled coordinates).
pub const DEFAULT_EPSILON: f64 = 1e-8;
/// Eigenvalue floor of the symmetric square root of `R`.
pub const SQRT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisWeights {
    #[serde(with = "serde_rows")]
    pub q: DMatrix<f64>,
    #[serde(with = "serde_rows")]
    pub r: DMatrix<f64>,
}

impl SynthesisWeights {
    pub fn new(q: DMatrix<f64>, r: DMatrix<f64>) -> Result<Self> {
        let w = Self { q, r };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, m) in [("Q", &self.q), ("R", &self.r)] {
            if !m.is_square() {
                return Err(Error::Synthesis(format!("{name} is not square")));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::Synthesis(format!("{name} has non-finite entries")));
            }
            let asym = (m - m.transpose()).amax();
            if asym > 1e-12 {
                return Err(Error::Synthesis(format!(
                    "{name} not symmetric (max asymmetry {asym:.3e})"
                )));
            }
        }
        let qmin = min_eigenvalue(&self.q);
        if qmin < -1e-10 {
            return Err(Error::Synthesis(format!(
                "Q not positive semidefinite (smallest eigenvalue {qmin:.3e})"
            )));
        }
        let rmin = min_eigenvalue(&self.r);
        if rmin < 1e-10 {
            return Err(Error::Synthesis(format!(
                "R not positive definite (smallest eigenvalue {rmin:.3e})"
            )));
        }
        Ok(())
    }
}

/// Vertex systems sharing one input matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSet {
    #[serde(with = "serde_rows_vec")]
    pub vertices: Vec<DMatrix<f64>>,
    #[serde(with = "serde_rows")]
    pub b: DMatrix<f64>,
}

impl ModelSet {
    pub fn new(vertices: Vec<DMatrix<f64>>, b: DMatrix<f64>) -> Result<Self> {
        let set = Self { vertices, b };
        set.validate()?;
        Ok(set)
    }

    pub fn n(&self) -> usize {
        self.b.nrows()
    }

    pub fn p(&self) -> usize {
        self.b.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        if self.vertices.is_empty() {
            return Err(Error::Synthesis("model set has no vertices".into()));
        }
        let n = self.n();
        for (i, a) in self.vertices.iter().enumerate() {
            if a.nrows() != n || a.ncols() != n {
                return Err(Error::Synthesis(format!(
                    "vertex {i} is {}×{}, expected {n}×{n}",
                    a.nrows(),
                    a.ncols()
                )));
            }
            let c = controllability_check(a, &self.b);
            if !c.controllable {
                return Err(Error::Synthesis(format!(
                    "vertex {i} not controllable (Krylov rank {} < {n})",
                    c.rank
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisResult {
    #[serde(with = "serde_rows")]
    pub k: DMatrix<f64>,
    #[serde(with = "serde_rows")]
    pub p: DMatrix<f64>,
    #[serde(with = "serde_rows")]
    pub y: DMatrix<f64>,
    #[serde(with = "serde_rows")]
    pub x_bound: DMatrix<f64>,
    /// Optimal value `Tr(Q·P) + Tr(X)`.
    pub cost_j: f64,
    pub epsilon: f64,
    /// H2 cost of each vertex closed loop with gain `k`.
    pub per_vertex_cost: Vec<f64>,
    pub solver_iterations: usize,
}

/// Layout of the decision variables in the LMI program.
#[derive(Debug, Clone, Copy)]
pub struct VariableLayout {
    pub n: usize,
    pub p: usize,
}

impl VariableLayout {
    pub fn num_p(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    pub fn num_y(&self) -> usize {
        self.p * self.n
    }

    pub fn num_x(&self) -> usize {
        self.p * (self.p + 1) / 2
    }

    pub fn total(&self) -> usize {
        self.num_p() + self.num_y() + self.num_x()
    }

    /// Index of `P_ij`, `i ≤ j`.
    pub fn p_index(&self, i: usize, j: usize) -> usize {
        upper_index(self.n, i.min(j), i.max(j))
    }

    pub fn y_index(&self, k: usize, l: usize) -> usize {
        self.num_p() + k * self.n + l
    }

    pub fn x_index(&self, a: usize, b: usize) -> usize {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        self.num_p() + self.num_y() + upper_index(self.p, a, b)
    }

    pub fn unpack(&self, y: &[f64]) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let p = DMatrix::from_fn(self.n, self.n, |i, j| y[upper_index(self.n, i.min(j), i.max(j))]);
        let yy = DMatrix::from_fn(self.p, self.n, |k, l| y[self.y_index(k, l)]);
        let x = DMatrix::from_fn(self.p, self.p, |a, b| y[self.x_index(a, b)]);
        (p, yy, x)
    }
}

/// Row-major index of `(i, j)`, `i ≤ j`, in the upper triangle of an `n×n`
/// matrix.
fn upper_index(n: usize, i: usize, j: usize) -> usize {
    i * n - i * i.saturating_sub(1) / 2 + (j - i)
}

/// Builds the LMI program. Blocks: 0 the Schur block, 1 the `P ⪰ εI` block,
/// `2 + i` the Lyapunov inequality of vertex `i`.
pub fn assemble_sdp(
    models: &ModelSet,
    weights: &SynthesisWeights,
    epsilon: f64,
) -> Result<SdpProgram> {
    weights.validate()?;
    if !(epsilon > 0.0) {
        return Err(Error::Synthesis(format!("epsilon must be positive, got {epsilon}")));
    }
    let (n, p) = (models.n(), models.p());
    if weights.q.nrows() != n || weights.r.nrows() != p {
        return Err(Error::Synthesis(format!(
            "weights are {}×{} / {}×{}, model needs {n}×{n} / {p}×{p}",
            weights.q.nrows(),
            weights.q.ncols(),
            weights.r.nrows(),
            weights.r.ncols()
        )));
    }
    let layout = VariableLayout { n, p };
    let rh = sym_sqrt(&weights.r, SQRT_FLOOR);
    let nvars = layout.total();
    let nv = models.vertices.len();
    let mut block_sizes = vec![p + n, n];
    block_sizes.extend(std::iter::repeat_n(n, nv));

    let mut constant = Vec::new();
    for (blk, &size) in block_sizes.iter().enumerate() {
        let diag = if blk >= 2 { -(1.0 + epsilon) } else { -epsilon };
        for i in 0..size {
            constant.push(Entry {
                block: blk,
                row: i,
                col: i,
                value: diag,
            });
        }
    }

    let mut coefficients: Vec<Vec<Entry>> = vec![Vec::new(); nvars];
    let mut objective = vec![0.0; nvars];
    let push = |list: &mut Vec<Entry>, block: usize, r: usize, c: usize, v: f64| {
        if v != 0.0 {
            let (row, col) = if r <= c { (r, c) } else { (c, r) };
            list.push(Entry {
                block,
                row,
                col,
                value: v,
            });
        }
    };

    // P variables
    for i in 0..n {
        for j in i..n {
            let k = upper_index(n, i, j);
            objective[k] = if i == j {
                weights.q[(i, i)]
            } else {
                2.0 * weights.q[(i, j)]
            };
            let list = &mut coefficients[k];
            push(list, 0, p + i, p + j, 1.0);
            push(list, 1, i, j, 1.0);
            // E = e_i e_jᵀ + e_j e_iᵀ (or e_i e_iᵀ); block gets −(A·E + E·Aᵀ)
            let mut e = DMatrix::<f64>::zeros(n, n);
            e[(i, j)] = 1.0;
            e[(j, i)] = 1.0;
            for (v, a) in models.vertices.iter().enumerate() {
                let ae = a * &e;
                let m = -(&ae + ae.transpose());
                for r in 0..n {
                    for c in r..n {
                        push(list, 2 + v, r, c, m[(r, c)]);
                    }
                }
            }
        }
    }
    // Y variables
    for kk in 0..p {
        for l in 0..n {
            let idx = layout.y_index(kk, l);
            let list = &mut coefficients[idx];
            // top-right block R½·E_kl: column l gets R½[:, kk]
            for a in 0..p {
                push(list, 0, a, p + l, rh[(a, kk)]);
            }
            // −(B·E_kl + E_lk·Bᵀ) = −(b_k e_lᵀ + e_l b_kᵀ)
            let bk = models.b.column(kk);
            let mut m = DMatrix::<f64>::zeros(n, n);
            for r in 0..n {
                m[(r, l)] -= bk[r];
                m[(l, r)] -= bk[r];
            }
            for v in 0..nv {
                for r in 0..n {
                    for c in r..n {
                        push(list, 2 + v, r, c, m[(r, c)]);
                    }
                }
            }
        }
    }
    // X variables
    for a in 0..p {
        for b in a..p {
            let idx = layout.x_index(a, b);
            if a == b {
                objective[idx] = 1.0;
            }
            push(&mut coefficients[idx], 0, a, b, 1.0);
        }
    }

    Ok(SdpProgram {
        block_sizes,
        objective,
        constant,
        coefficients,
    })
}

/// `A·P + P·Aᵀ + B·Y + Yᵀ·Bᵀ + I`, the left-hand side of the vertex LMI.
pub fn lyapunov_lmi(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    p: &DMatrix<f64>,
    y: &DMatrix<f64>,
) -> DMatrix<f64> {
    let n = a.nrows();
    let ap = a * p;
    let by = b * y;
    &ap + ap.transpose() + &by + by.transpose() + DMatrix::identity(n, n)
}

/// `[[X, R½·Y], [Yᵀ·R½, P]]`.
pub fn schur_block(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    p: &DMatrix<f64>,
    r_half: &DMatrix<f64>,
) -> DMatrix<f64> {
    let (pp, n) = (x.nrows(), p.nrows());
    let ry = r_half * y;
    let mut m = DMatrix::zeros(pp + n, pp + n);
    m.view_mut((0, 0), (pp, pp)).copy_from(x);
    m.view_mut((0, pp), (pp, n)).copy_from(&ry);
    m.view_mut((pp, 0), (n, pp)).copy_from(&ry.transpose());
    m.view_mut((pp, pp), (n, n)).copy_from(p);
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthesisOptions {
    pub epsilon: f64,
    pub solver: InteriorPointSolver,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            solver: InteriorPointSolver::default(),
        }
    }
}

/// Solves the LMI program with the reference interior-point solver and
/// certifies the result.
pub fn synthesize(
    models: &ModelSet,
    weights: &SynthesisWeights,
    options: &SynthesisOptions,
) -> Result<SynthesisResult> {
    synthesize_with(&options.solver, models, weights, options.epsilon)
}

pub fn synthesize_with(
    solver: &dyn SdpSolver,
    models: &ModelSet,
    weights: &SynthesisWeights,
    epsilon: f64,
) -> Result<SynthesisResult> {
    models.validate()?;
    let program = assemble_sdp(models, weights, epsilon)?;
    let solution = solver.solve(&program).map_err(|e| match e {
        Error::Infeasible(msg) => Error::Infeasible(format!(
            "{msg}; vertex spectral abscissas: {:?}",
            models
                .vertices
                .iter()
                .map(spectral_abscissa)
                .collect::<Vec<_>>()
        )),
        other => other,
    })?;
    let layout = VariableLayout {
        n: models.n(),
        p: models.p(),
    };
    let (p, y, x) = layout.unpack(&solution.y);
    let p_inv = p
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NumericalFailure("P is not positive definite".into()))?
        .inverse();
    let k = &y * p_inv;
    let mut result = SynthesisResult {
        k,
        p,
        y,
        x_bound: x,
        cost_j: solution.objective,
        epsilon,
        per_vertex_cost: Vec::new(),
        solver_iterations: solution.iterations,
    };
    let report = certify(&result, models, weights)?;
    result.per_vertex_cost = report.vertices.iter().map(|v| v.cost).collect();
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexCertificate {
    /// Largest eigenvalue of `AᵢP + PAᵢᵀ + BY + YᵀBᵀ + I`.
    pub lmi_max_eigenvalue: f64,
    pub spectral_abscissa: f64,
    /// `Jᵢ` from the vertex Lyapunov solution `Pᵢ`.
    pub cost: f64,
    /// Smallest eigenvalue of `P − Pᵢ`.
    pub p_margin: f64,
    /// `J − Jᵢ` with `J = Tr(QP) + Tr(R½KPKᵀR½)`.
    pub cost_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub epsilon: f64,
    pub schur_min_eigenvalue: f64,
    pub p_min_eigenvalue: f64,
    /// `Tr(QP) + Tr(R½KPKᵀR½)`, the quadratic-cost bound for gain `K`.
    pub cost_bound: f64,
    pub cost_j: f64,
    pub vertices: Vec<VertexCertificate>,
    pub failures: Vec<String>,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for CertificateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "LMI certificate (epsilon = {:.3e})", self.epsilon)?;
        writeln!(
            f,
            "  Schur block min eigenvalue : {:+.6e}  (required >= {:.3e})",
            self.schur_min_eigenvalue,
            self.epsilon / 2.0
        )?;
        writeln!(
            f,
            "  P min eigenvalue           : {:+.6e}  (required >= {:.3e})",
            self.p_min_eigenvalue,
            self.epsilon / 2.0
        )?;
        writeln!(f, "  SDP objective              : {:.9e}", self.cost_j)?;
        writeln!(f, "  quadratic cost bound J     : {:.9e}", self.cost_bound)?;
        writeln!(
            f,
            "  vertex  lmi_max_eig      abscissa        J_i              min eig(P-P_i)   J-J_i"
        )?;
        for (i, v) in self.vertices.iter().enumerate() {
            writeln!(
                f,
                "  {:>6}  {:+.6e}  {:+.6e}  {:.9e}  {:+.6e}  {:+.6e}",
                i + 1,
                v.lmi_max_eigenvalue,
                v.spectral_abscissa,
                v.cost,
                v.p_margin,
                v.cost_margin
            )?;
        }
        if self.failures.is_empty() {
            writeln!(f, "  result: PASS")
        } else {
            writeln!(f, "  result: FAIL")?;
            for m in &self.failures {
                writeln!(f, "    - {m}")?;
            }
            Ok(())
        }
    }
}

/// H2 cost of the closed loop `A_cl = A + B·K`:
/// `Tr(Q·Pᵢ) + Tr(R½·K·Pᵢ·Kᵀ·R½)` with `A_cl·Pᵢ + Pᵢ·A_clᵀ + I = 0`.
/// Returns the cost and `Pᵢ`.
pub fn vertex_cost(
    a_cl: &DMatrix<f64>,
    k: &DMatrix<f64>,
    weights: &SynthesisWeights,
) -> Result<(f64, DMatrix<f64>)> {
    let n = a_cl.nrows();
    let pi = solve_lyapunov(a_cl, &DMatrix::identity(n, n))?;
    Ok((quadratic_cost(&pi, k, weights), pi))
}

fn quadratic_cost(p: &DMatrix<f64>, k: &DMatrix<f64>, weights: &SynthesisWeights) -> f64 {
    let rh = sym_sqrt(&weights.r, SQRT_FLOOR);
    (&weights.q * p).trace() + (&rh * k * p * k.transpose() * &rh).trace()
}

/// Evaluates every certificate condition without failing.
pub fn certificate_report(
    result: &SynthesisResult,
    models: &ModelSet,
    weights: &SynthesisWeights,
) -> Result<CertificateReport> {
    let eps = result.epsilon;
    let half = eps / 2.0;
    let rh = sym_sqrt(&weights.r, SQRT_FLOOR);
    let mut failures = Vec::new();

    let schur_min = min_eigenvalue(&schur_block(&result.x_bound, &result.y, &result.p, &rh));
    if !(schur_min >= half) {
        failures.push(format!(
            "Schur block min eigenvalue {schur_min:.3e} < epsilon/2 = {half:.3e}"
        ));
    }
    let p_min = min_eigenvalue(&result.p);
    if !(p_min >= half) {
        failures.push(format!("P min eigenvalue {p_min:.3e} < epsilon/2 = {half:.3e}"));
    }
    let cost_bound = quadratic_cost(&result.p, &result.k, weights);
    let n = models.n();

    let mut vertices = Vec::with_capacity(models.vertices.len());
    for (i, a) in models.vertices.iter().enumerate() {
        let lmi_max = max_eigenvalue(&lyapunov_lmi(a, &models.b, &result.p, &result.y));
        if !(lmi_max <= -half) {
            failures.push(format!(
                "vertex {}: Lyapunov LMI max eigenvalue {lmi_max:.3e} > -epsilon/2",
                i + 1
            ));
        }
        let a_cl = a + &models.b * &result.k;
        let abscissa = spectral_abscissa(&a_cl);
        if !(abscissa < 0.0) {
            failures.push(format!(
                "vertex {}: closed loop not Hurwitz (abscissa {abscissa:.3e})",
                i + 1
            ));
            vertices.push(VertexCertificate {
                lmi_max_eigenvalue: lmi_max,
                spectral_abscissa: abscissa,
                cost: f64::INFINITY,
                p_margin: f64::NAN,
                cost_margin: f64::NAN,
            });
            continue;
        }
        let (cost, _) = vertex_cost(&a_cl, &result.k, weights)?;
        // P − Pᵢ solves A_cl·D + D·A_clᵀ − S = 0 with
        // S = A_cl·P + P·A_clᵀ + I ≺ 0.
        let ap = &a_cl * &result.p;
        let s = &ap + ap.transpose() + DMatrix::identity(n, n);
        let d = solve_lyapunov(&a_cl, &(-s))?;
        let p_margin = min_eigenvalue(&d);
        let cost_margin = quadratic_cost(&d, &result.k, weights);
        if !(p_margin > 0.0) {
            failures.push(format!(
                "vertex {}: P - P_i not positive definite (min eigenvalue {p_margin:.3e})",
                i + 1
            ));
        }
        if !(cost_margin > 0.0) {
            failures.push(format!(
                "vertex {}: J_i = {cost:.6e} not below J (margin {cost_margin:.3e})",
                i + 1
            ));
        }
        vertices.push(VertexCertificate {
            lmi_max_eigenvalue: lmi_max,
            spectral_abscissa: abscissa,
            cost,
            p_margin,
            cost_margin,
        });
    }
    let max_vertex = vertices.iter().map(|v| v.cost).fold(f64::NEG_INFINITY, f64::max);
    if !(result.cost_j >= max_vertex) {
        failures.push(format!(
            "SDP objective {:.6e} below max vertex cost {max_vertex:.6e}",
            result.cost_j
        ));
    }
    Ok(CertificateReport {
        epsilon: eps,
        schur_min_eigenvalue: schur_min,
        p_min_eigenvalue: p_min,
        cost_bound,
        cost_j: result.cost_j,
        vertices,
        failures,
    })
}

/// Certifies a synthesis result; fails with the violated conditions.
pub fn certify(
    result: &SynthesisResult,
    models: &ModelSet,
    weights: &SynthesisWeights,
) -> Result<CertificateReport> {
    let report = certificate_report(result, models, weights)?;
    if report.passed() {
        Ok(report)
    } else {
        Err(Error::CertificationFailure(report.failures.join("; ")))
    }
}

/// Worst spectral abscissa of `Ã + B·K` over `n_samples` random convex
/// combinations `Ã = Σ αᵢAᵢ`, α uniform on the simplex.
pub fn polytope_stability_sample(
    k: &DMatrix<f64>,
    models: &ModelSet,
    n_samples: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bk = &models.b * k;
    let q = models.vertices.len();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..n_samples.max(1) {
        let alpha = simplex_sample(&mut rng, q);
        worst = worst.max(spectral_abscissa(&(combine(&models.vertices, &alpha) + &bk)));
    }
    worst
}

/// Uniform sample from the probability simplex (normalized unit exponentials).
pub fn simplex_sample(rng: &mut impl Rng, q: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..q)
        .map(|_| {
            let u: f64 = rng.random::<f64>();
            -(1.0 - u).ln()
        })
        .collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|v| v / total).collect()
}

/// `Σ αᵢ·Aᵢ`.
pub fn combine(vertices: &[DMatrix<f64>], alpha: &[f64]) -> DMatrix<f64> {
    let mut acc = DMatrix::zeros(vertices[0].nrows(), vertices[0].ncols());
    for (a, w) in vertices.iter().zip(alpha) {
        acc += a * *w;
    }
    acc
}

/// Serializes a dynamic matrix as a row-major list of rows.
pub mod serde_rows {
    use nalgebra::DMatrix;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
        m.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, String> {
        let nr = rows.len();
        let nc = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != nc) {
            return Err("ragged matrix rows".into());
        }
        Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
    }

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(to_rows(m))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        from_rows(&rows).map_err(D::Error::custom)
    }
}

mod serde_rows_vec {
    use nalgebra::DMatrix;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    use super::serde_rows::{from_rows, to_rows};

    pub fn serialize<S: Serializer>(m: &[DMatrix<f64>], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(m.iter().map(to_rows))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<DMatrix<f64>>, D::Error> {
        let all = Vec::<Vec<Vec<f64>>>::deserialize(d)?;
        all.iter()
            .map(|r| from_rows(r).map_err(D::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn double_integrator() -> ModelSet {
        ModelSet::new(
            vec![DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0])],
            DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
        )
        .unwrap()
    }

    #[test]
    fn layout_indices_are_a_bijection() {
        let l = VariableLayout { n: 7, p: 2 };
        let mut seen = vec![false; l.total()];
        for i in 0..7 {
            for j in i..7 {
                seen[upper_index(7, i, j)] = true;
            }
        }
        for k in 0..2 {
            for j in 0..7 {
                seen[l.y_index(k, j)] = true;
            }
        }
        for a in 0..2 {
            for b in a..2 {
                seen[l.x_index(a, b)] = true;
            }
        }
        assert!(seen.iter().all(|s| *s));
        assert_eq!(l.total(), 28 + 14 + 3);
    }

    #[test]
    fn single_vertex_has_three_blocks() {
        let w = SynthesisWeights::new(DMatrix::identity(2, 2), DMatrix::identity(1, 1)).unwrap();
        let prog = assemble_sdp(&double_integrator(), &w, 1e-8).unwrap();
        assert_eq!(prog.block_sizes.len(), 3);
        assert_eq!(prog.block_sizes, vec![3, 2, 2]);
    }

    #[test]
    fn program_matches_direct_lmi_evaluation() {
        let models = ModelSet::new(
            vec![DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, 0.5, -3.0])],
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.3, 1.0]),
        )
        .unwrap();
        let r = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let w = SynthesisWeights::new(DMatrix::identity(2, 2), r.clone()).unwrap();
        let eps = 1e-3;
        let prog = assemble_sdp(&models, &w, eps).unwrap();
        let layout = VariableLayout { n: 2, p: 2 };
        let yv: Vec<f64> = (0..layout.total()).map(|k| 0.3 + 0.17 * k as f64).collect();
        let (p, y, x) = layout.unpack(&yv);
        let f = prog.evaluate(&yv);
        let rh = sym_sqrt(&r, SQRT_FLOOR);
        let i4 = DMatrix::<f64>::identity(4, 4);
        let i2 = DMatrix::<f64>::identity(2, 2);
        assert!((&f[0] - (schur_block(&x, &y, &p, &rh) - &i4 * eps)).norm() < 1e-12);
        assert!((&f[1] - (&p - &i2 * eps)).norm() < 1e-12);
        let lmi = lyapunov_lmi(&models.vertices[0], &models.b, &p, &y);
        assert!((&f[2] + lmi + &i2 * eps).norm() < 1e-12);
        let obj: f64 = prog.objective.iter().zip(&yv).map(|(c, v)| c * v).sum();
        assert!((obj - ((&w.q * &p).trace() + x.trace())).abs() < 1e-12);
    }

    #[test]
    fn infeasible_candidate_plug_in() {
        let n = 7;
        let a = DMatrix::identity(n, n);
        let b = DMatrix::from_fn(n, 2, |i, j| if i == 5 + j { 1.0 } else { 0.0 });
        let lmi = lyapunov_lmi(&a, &b, &DMatrix::identity(n, n), &DMatrix::zeros(2, n));
        assert!((max_eigenvalue(&lmi) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn weights_validation() {
        let bad_r = SynthesisWeights::new(
            DMatrix::identity(2, 2),
            DMatrix::from_row_slice(1, 1, &[-1.0]),
        );
        assert!(matches!(bad_r, Err(Error::Synthesis(m)) if m.contains("R not positive definite")));
        let asym = SynthesisWeights::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]),
            DMatrix::identity(1, 1),
        );
        assert!(asym.is_err());
        let indefinite_q = SynthesisWeights::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5]),
            DMatrix::identity(1, 1),
        );
        assert!(indefinite_q.is_err());
    }

    #[test]
    fn uncontrollable_vertex_rejected() {
        let err = ModelSet::new(
            vec![DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0])],
            DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
        )
        .unwrap_err();
        assert!(err.to_string().contains("not controllable"));
    }

    #[test]
    fn zero_gain_cost_is_trace_q_p() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, 0.0, -2.0]);
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let w = SynthesisWeights::new(q.clone(), DMatrix::identity(1, 1)).unwrap();
        let k = DMatrix::zeros(1, 2);
        let (j, p1) = vertex_cost(&a, &k, &w).unwrap();
        assert_eq!(j, (&q * &p1).trace());
        // with K and Pᵢ fixed, doubling Q doubles the first trace term
        let w2 = SynthesisWeights::new(&q * 2.0, DMatrix::identity(1, 1)).unwrap();
        let (j2, _) = vertex_cost(&a, &k, &w2).unwrap();
        assert!((j2 - 2.0 * j).abs() < 1e-12 * j);
    }

    #[test]
    fn simplex_samples_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for q in 1..6 {
            let a = simplex_sample(&mut rng, q);
            assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(a.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn serde_rows_layout() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(
            serde_rows::to_rows(&m),
            vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]
        );
        assert!(serde_rows::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }
}
