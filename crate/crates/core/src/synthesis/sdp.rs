//! Linear matrix inequality programs and a primal-dual interior-point solver
//! for small dense instances.
//!
//! A program is
//!
//! ```text
//! minimize  cᵀy   subject to  F(y) = F₀ + Σₖ yₖ·Fₖ ⪰ 0   (block diagonal)
//! ```
//!
//! with Lagrange dual `maximize −⟨F₀, W⟩ s.t. ⟨Fₖ, W⟩ = cₖ, W ⪰ 0`. The
//! solver follows the infeasible-start HKM search direction with a Mehrotra
//! predictor-corrector step, then refines the converged pair with a few
//! Newton steps on the complementarity conditions.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::synthesis::lyapunov::symmetrize;
use crate::{Error, Result};

/// One upper-triangle entry of a coefficient matrix (zero-based indices,
/// `row ≤ col`). Off-diagonal entries stand for both symmetric positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpProgram {
    pub block_sizes: Vec<usize>,
    /// Objective vector `c`.
    pub objective: Vec<f64>,
    /// Entries of `F₀`.
    pub constant: Vec<Entry>,
    /// Entries of `Fₖ`, one list per variable.
    pub coefficients: Vec<Vec<Entry>>,
}

pub type Blocks = Vec<DMatrix<f64>>;

impl SdpProgram {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.coefficients.len() != self.objective.len() {
            return Err(Error::Synthesis(format!(
                "{} coefficient matrices for {} variables",
                self.coefficients.len(),
                self.objective.len()
            )));
        }
        let lists = std::iter::once(&self.constant).chain(self.coefficients.iter());
        for list in lists {
            for e in list {
                let size = *self.block_sizes.get(e.block).ok_or_else(|| {
                    Error::Synthesis(format!("entry refers to missing block {}", e.block))
                })?;
                if e.row > e.col || e.col >= size || !e.value.is_finite() {
                    return Err(Error::Synthesis(format!("malformed entry {e:?}")));
                }
            }
        }
        Ok(())
    }

    pub fn dense(&self, entries: &[Entry]) -> Blocks {
        let mut blocks: Blocks = self
            .block_sizes
            .iter()
            .map(|&n| DMatrix::zeros(n, n))
            .collect();
        for e in entries {
            blocks[e.block][(e.row, e.col)] += e.value;
            if e.row != e.col {
                blocks[e.block][(e.col, e.row)] += e.value;
            }
        }
        blocks
    }

    /// `F(y)` as dense blocks.
    pub fn evaluate(&self, y: &[f64]) -> Blocks {
        let mut f = self.dense(&self.constant);
        for (k, list) in self.coefficients.iter().enumerate() {
            for e in list {
                let v = y[k] * e.value;
                f[e.block][(e.row, e.col)] += v;
                if e.row != e.col {
                    f[e.block][(e.col, e.row)] += v;
                }
            }
        }
        f
    }

    /// SDPA sparse text format. SDPA states `Σ Fₖxₖ − F₀ ⪰ 0`, so the constant
    /// term is written with flipped sign.
    pub fn to_sdpa(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.num_vars());
        let _ = writeln!(out, "{}", self.block_sizes.len());
        let sizes: Vec<String> = self.block_sizes.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "{}", sizes.join(" "));
        let c: Vec<String> = self.objective.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "{}", c.join(" "));
        for e in &self.constant {
            let _ = writeln!(
                out,
                "0 {} {} {} {:?}",
                e.block + 1,
                e.row + 1,
                e.col + 1,
                -e.value
            );
        }
        for (k, list) in self.coefficients.iter().enumerate() {
            for e in list {
                let _ = writeln!(
                    out,
                    "{} {} {} {} {:?}",
                    k + 1,
                    e.block + 1,
                    e.row + 1,
                    e.col + 1,
                    e.value
                );
            }
        }
        out
    }

    pub fn from_sdpa(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::parse("sdpa", format!("line {line}: {msg}"));
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('"') && !l.starts_with('*'));
        let mut next = |what: &str| lines.next().ok_or_else(|| bad(0, &format!("missing {what}")));
        let (ln, l) = next("variable count")?;
        let m: usize = l.parse().map_err(|_| bad(ln, "bad variable count"))?;
        let (ln, l) = next("block count")?;
        let nb: usize = l.parse().map_err(|_| bad(ln, "bad block count"))?;
        let (ln, l) = next("block sizes")?;
        let block_sizes = l
            .split_whitespace()
            .map(|s| s.parse::<usize>().map_err(|_| bad(ln, "bad block size")))
            .collect::<Result<Vec<_>>>()?;
        if block_sizes.len() != nb {
            return Err(bad(ln, "block size count mismatch"));
        }
        let (ln, l) = next("objective")?;
        let objective = l
            .split_whitespace()
            .map(|s| s.parse::<f64>().map_err(|_| bad(ln, "bad objective entry")))
            .collect::<Result<Vec<_>>>()?;
        if objective.len() != m {
            return Err(bad(ln, "objective length mismatch"));
        }
        let mut constant = Vec::new();
        let mut coefficients = vec![Vec::new(); m];
        for (ln, l) in lines {
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 5 {
                return Err(bad(ln, "expected `mat block row col value`"));
            }
            let idx = |s: &str| s.parse::<usize>().map_err(|_| bad(ln, "bad index"));
            let (mat, block, row, col) = (idx(f[0])?, idx(f[1])?, idx(f[2])?, idx(f[3])?);
            let value: f64 = f[4].parse().map_err(|_| bad(ln, "bad value"))?;
            if block == 0 || row == 0 || col == 0 || mat > m {
                return Err(bad(ln, "index out of range"));
            }
            let entry = Entry {
                block: block - 1,
                row: row - 1,
                col: col - 1,
                value,
            };
            if mat == 0 {
                constant.push(Entry {
                    value: -value,
                    ..entry
                });
            } else {
                coefficients[mat - 1].push(entry);
            }
        }
        let prog = Self {
            block_sizes,
            objective,
            constant,
            coefficients,
        };
        prog.validate()?;
        Ok(prog)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpSolution {
    pub y: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
    /// Smallest eigenvalue of each block of `F(y)`.
    pub block_min_eigenvalues: Vec<f64>,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub relative_gap: f64,
    /// Accepted Newton refinement steps after the interior-point phase.
    #[serde(default)]
    pub refinement_steps: usize,
}

/// Anything that can solve an [`SdpProgram`] to the residual contract: every
/// block of `F(y)` has smallest eigenvalue `≥ −tolerance`.
pub trait SdpSolver {
    fn solve(&self, program: &SdpProgram) -> Result<SdpSolution>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteriorPointSolver {
    /// Relative feasibility and duality-gap tolerance.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Upper bound on refinement steps; 0 disables refinement.
    #[serde(default = "default_refinement")]
    pub max_refinement_steps: usize,
}

fn default_refinement() -> usize {
    8
}

impl Default for InteriorPointSolver {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 150,
            max_refinement_steps: default_refinement(),
        }
    }
}

/// A run that stalls within this factor of the tolerance is still accepted.
const STALL_FACTOR: f64 = 100.0;

fn inner(a: &Blocks, b: &Blocks) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn frob(a: &Blocks) -> f64 {
    inner(a, a).sqrt()
}

fn mul(a: &Blocks, b: &Blocks) -> Blocks {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

fn axpy(alpha: f64, x: &Blocks, y: &Blocks) -> Blocks {
    x.iter().zip(y).map(|(a, b)| a * alpha + b).collect()
}

fn identity_like(sizes: &[usize], scale: f64) -> Blocks {
    sizes
        .iter()
        .map(|&n| DMatrix::identity(n, n) * scale)
        .collect()
}

fn sym_blocks(a: &Blocks) -> Blocks {
    a.iter().map(symmetrize).collect()
}

fn inverse(a: &Blocks) -> Result<Blocks> {
    a.iter()
        .map(|m| {
            m.clone()
                .cholesky()
                .map(|c| symmetrize(&c.inverse()))
                .ok_or_else(|| Error::NumericalFailure("iterate lost positive definiteness".into()))
        })
        .collect()
}

/// Largest `α` with `x + α·dx ⪰ 0`, capped at `1e30`.
fn max_step(x: &Blocks, dx: &Blocks) -> Result<f64> {
    let mut alpha = 1e30_f64;
    for (m, d) in x.iter().zip(dx) {
        if m.nrows() == 0 {
            continue;
        }
        let chol = m
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NumericalFailure("iterate lost positive definiteness".into()))?;
        let l = chol.l();
        let linv = l
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::NumericalFailure("singular Cholesky factor".into()))?;
        let s = symmetrize(&(&linv * d * linv.transpose()));
        let lmin = s.symmetric_eigenvalues().min();
        if lmin < 0.0 {
            alpha = alpha.min(-1.0 / lmin);
        }
    }
    Ok(alpha)
}

struct Direction {
    dy: DVector<f64>,
    dw: Blocks,
    dz: Blocks,
}

fn evaluate_blocks(f0: &Blocks, fk: &[Blocks], y: &DVector<f64>) -> Blocks {
    let mut f = f0.clone();
    for (k, fkb) in fk.iter().enumerate() {
        if y[k] != 0.0 {
            f = axpy(y[k], fkb, &f);
        }
    }
    f
}

impl InteriorPointSolver {
    /// Newton's method on `⟨Fₖ, W⟩ = cₖ`, `F(y)·W + W·F(y) = 0` from a
    /// converged primal-dual pair. At a strictly complementary solution the
    /// Jacobian of this system is nonsingular, so the iteration converges
    /// quadratically where the interior-point method stalls on roundoff. The
    /// refined pair is kept only if it reduces the residual and stays
    /// semidefinite within the tolerance.
    fn refine(&self, f0: &Blocks, fk: &[Blocks], c: &DVector<f64>, sol: SdpSolution, w0: &Blocks) -> SdpSolution {
        if self.max_refinement_steps == 0 {
            return sol;
        }
        let m = c.len();
        let sizes: Vec<usize> = f0.iter().map(|b| b.nrows()).collect();
        let coords: Vec<(usize, usize, usize)> = sizes
            .iter()
            .enumerate()
            .flat_map(|(j, &n)| (0..n).flat_map(move |a| (a..n).map(move |b| (j, a, b))))
            .collect();
        let mut offsets = vec![0; sizes.len()];
        for j in 1..sizes.len() {
            offsets[j] = offsets[j - 1] + sizes[j - 1] * (sizes[j - 1] + 1) / 2;
        }
        let nw = coords.len();
        let f0_norm = frob(f0);
        let c_norm = c.norm();

        let residual = |y: &DVector<f64>, w: &Blocks| -> (DVector<f64>, Blocks) {
            let f = evaluate_blocks(f0, fk, y);
            let mut r = DVector::zeros(m + nw);
            for k in 0..m {
                r[k] = c[k] - inner(&fk[k], w);
            }
            let comp: Blocks = f.iter().zip(w).map(|(a, b)| a * b + b * a).collect();
            for (t, &(j, a, b)) in coords.iter().enumerate() {
                r[m + t] = comp[j][(a, b)];
            }
            (r, f)
        };

        let mut y = DVector::from_column_slice(&sol.y);
        let mut w = w0.clone();
        let (mut r, mut f) = residual(&y, &w);
        let r0 = r.norm();
        let mut best: Option<(f64, DVector<f64>, Blocks, Blocks, usize)> = None;
        let mut last = r0;
        for step in 1..=self.max_refinement_steps {
            let mut jac = DMatrix::<f64>::zeros(m + nw, m + nw);
            for k in 0..m {
                for j in 0..sizes.len() {
                    let fkj = &fk[k][j];
                    if fkj.amax() == 0.0 {
                        continue;
                    }
                    let g = fkj * &w[j] + &w[j] * fkj;
                    for a in 0..sizes[j] {
                        for b in a..sizes[j] {
                            jac[(m + block_row(&offsets, &sizes, j, a, b), k)] = g[(a, b)];
                        }
                    }
                }
            }
            for (t, &(j, a, b)) in coords.iter().enumerate() {
                let col = m + t;
                let n = sizes[j];
                for k in 0..m {
                    let fkj = &fk[k][j];
                    jac[(k, col)] = if a == b { -fkj[(a, a)] } else { -(fkj[(a, b)] + fkj[(b, a)]) };
                }
                let mut e = DMatrix::<f64>::zeros(n, n);
                e[(a, b)] = 1.0;
                e[(b, a)] = 1.0;
                let g = &f[j] * &e + &e * &f[j];
                for p in 0..n {
                    for q in p..n {
                        jac[(m + block_row(&offsets, &sizes, j, p, q), col)] = g[(p, q)];
                    }
                }
            }
            let Some(delta) = jac.lu().solve(&-&r) else {
                break;
            };
            y += delta.rows(0, m);
            for (t, &(j, a, b)) in coords.iter().enumerate() {
                let d = delta[m + t];
                w[j][(a, b)] += d;
                if a != b {
                    w[j][(b, a)] += d;
                }
            }
            (r, f) = residual(&y, &w);
            let norm = r.norm();
            if !norm.is_finite() {
                break;
            }
            if best.as_ref().is_none_or(|b| norm < b.0) {
                best = Some((norm, y.clone(), w.clone(), f.clone(), step));
            }
            if norm > 0.5 * last {
                break;
            }
            last = norm;
        }
        let Some((norm, y, w, f, steps)) = best else {
            return sol;
        };
        if !(norm < r0) {
            return sol;
        }
        let f_min = f.iter().map(|b| symmetrize(b).symmetric_eigenvalues().min()).fold(f64::INFINITY, f64::min);
        let w_min = w.iter().map(|b| symmetrize(b).symmetric_eigenvalues().min()).fold(f64::INFINITY, f64::min);
        let slack = self.tolerance * (1.0 + f0_norm);
        if f_min < -slack || w_min < -self.tolerance * (1.0 + frob(&w)) {
            log::debug!("sdp refinement rejected: min eig F {f_min:.2e}, W {w_min:.2e}");
            return sol;
        }
        let pobj = c.dot(&y);
        let dobj = -inner(f0, &w);
        let rp = DVector::from_iterator(m, (0..m).map(|k| c[k] - inner(&fk[k], &w)));
        log::debug!("sdp refinement: {steps} steps, KKT residual {r0:.2e} -> {norm:.2e}");
        SdpSolution {
            y: y.iter().copied().collect(),
            objective: pobj,
            dual_objective: dobj,
            iterations: sol.iterations,
            block_min_eigenvalues: f.iter().map(|b| symmetrize(b).symmetric_eigenvalues().min()).collect(),
            primal_infeasibility: rp.norm() / (1.0 + c_norm),
            dual_infeasibility: (-f_min).max(0.0) / (1.0 + f0_norm),
            relative_gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
            refinement_steps: steps,
        }
    }
}

/// Position of upper-triangle entry `(a, b)` of block `j` in the stacked
/// complementarity residual.
fn block_row(offsets: &[usize], sizes: &[usize], j: usize, a: usize, b: usize) -> usize {
    let n = sizes[j];
    offsets[j] + a * n - a * (a + 1) / 2 + a + (b - a)
}

impl SdpSolver for InteriorPointSolver {
    fn solve(&self, prog: &SdpProgram) -> Result<SdpSolution> {
        prog.validate()?;
        let m = prog.num_vars();
        let sizes = &prog.block_sizes;
        let dim: usize = sizes.iter().sum();
        let f0 = prog.dense(&prog.constant);
        let fk: Vec<Blocks> = prog.coefficients.iter().map(|l| prog.dense(l)).collect();
        let c = DVector::from_column_slice(&prog.objective);

        let f0_norm = frob(&f0);
        let c_norm = c.norm();
        let fk_norm_max = fk.iter().map(frob).fold(0.0, f64::max);
        let tau_z = 10f64.max((dim as f64).sqrt()).max(f0_norm).max(fk_norm_max);
        let tau_w = fk
            .iter()
            .zip(c.iter())
            .map(|(f, ck)| dim as f64 * (1.0 + ck.abs()) / (1.0 + frob(f)))
            .fold(10.0, f64::max);

        let mut y = DVector::<f64>::zeros(m);
        let mut z = identity_like(sizes, tau_z);
        let mut w = identity_like(sizes, tau_w);

        let eval_f = |y: &DVector<f64>| -> Blocks {
            let mut f = f0.clone();
            for (k, fkb) in fk.iter().enumerate() {
                if y[k] != 0.0 {
                    f = axpy(y[k], fkb, &f);
                }
            }
            f
        };

        let mut stats = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
        // best iterate seen, returned if roundoff stalls the method just short
        // of the tolerance
        let mut best: Option<(f64, SdpSolution, Blocks)> = None;
        let mut failure: Option<Error> = None;
        for iter in 0..=self.max_iterations {
            let fy = eval_f(&y);
            let rd: Blocks = fy.iter().zip(&z).map(|(a, b)| a - b).collect();
            let rp = DVector::from_iterator(m, (0..m).map(|k| c[k] - inner(&fk[k], &w)));
            let pobj = c.dot(&y);
            let dobj = -inner(&f0, &w);
            let pinf = rp.norm() / (1.0 + c_norm);
            let dinf = frob(&rd) / (1.0 + f0_norm);
            let gap = inner(&w, &z);
            let relgap = gap.abs().max((pobj - dobj).abs()) / (1.0 + pobj.abs() + dobj.abs());
            stats = (pinf, dinf, relgap);
            log::trace!(
                "sdp iter {iter}: pobj {pobj:.10e} dobj {dobj:.10e} pinf {pinf:.2e} dinf {dinf:.2e} gap {relgap:.2e}"
            );
            let score = pinf.max(dinf).max(relgap);
            let converged = score <= self.tolerance;
            if converged || best.as_ref().is_none_or(|b| score < b.0) {
                let block_min_eigenvalues = fy
                    .iter()
                    .map(|b| symmetrize(b).symmetric_eigenvalues().min())
                    .collect();
                let sol = SdpSolution {
                    y: y.iter().copied().collect(),
                    objective: pobj,
                    dual_objective: dobj,
                    iterations: iter,
                    block_min_eigenvalues,
                    primal_infeasibility: pinf,
                    dual_infeasibility: dinf,
                    relative_gap: relgap,
                    refinement_steps: 0,
                };
                if converged {
                    return Ok(self.refine(&f0, &fk, &c, sol, &w));
                }
                best = Some((score, sol, w.clone()));
            }
            if iter == self.max_iterations {
                break;
            }
            let w_trace: f64 = w.iter().map(|b| b.trace()).sum();
            if w_trace > 1e14 * (1.0 + tau_w) && dinf > self.tolerance {
                return Err(Error::Infeasible(format!(
                    "dual multiplier diverged (trace {w_trace:.3e}) with LMI residual {dinf:.3e}"
                )));
            }

            let mu = gap / dim as f64;
            let zinv = match inverse(&z) {
                Ok(v) => v,
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            };

            // Schur complement M_ij = tr(F_i·W·F_j·Z⁻¹)
            let g: Vec<Blocks> = fk.iter().map(|f| mul(&mul(&w, f), &zinv)).collect();
            let mut schur = DMatrix::<f64>::zeros(m, m);
            for i in 0..m {
                for j in i..m {
                    let v: f64 = fk[i]
                        .iter()
                        .zip(&g[j])
                        .map(|(a, b)| a.component_mul(&b.transpose()).sum())
                        .sum();
                    schur[(i, j)] = v;
                    schur[(j, i)] = v;
                }
            }
            let diag_max = schur.diagonal().max().max(1.0);
            let chol = match schur.clone().cholesky() {
                Some(c) => c,
                None => {
                    let mut reg = schur.clone();
                    for i in 0..m {
                        reg[(i, i)] += 1e-14 * diag_max;
                    }
                    match reg.cholesky() {
                        Some(c) => c,
                        None => {
                            failure = Some(Error::NumericalFailure(
                                "Schur complement not positive definite".into(),
                            ));
                            break;
                        }
                    }
                }
            };
            let w_rd_zinv = mul(&mul(&w, &rd), &zinv);
            let direction = |rc: &Blocks| -> Direction {
                let rc_zinv = mul(rc, &zinv);
                let rhs = DVector::from_iterator(
                    m,
                    (0..m).map(|k| {
                        let f = &fk[k];
                        f.iter()
                            .zip(&rc_zinv)
                            .zip(&w_rd_zinv)
                            .map(|((fb, a), b)| fb.component_mul(&(a - b).transpose()).sum())
                            .sum::<f64>()
                            - rp[k]
                    }),
                );
                let dy = chol.solve(&rhs);
                let mut dz = rd.clone();
                for k in 0..m {
                    if dy[k] != 0.0 {
                        dz = axpy(dy[k], &fk[k], &dz);
                    }
                }
                let wdz = mul(&w, &dz);
                let dw: Blocks = rc
                    .iter()
                    .zip(&wdz)
                    .zip(&zinv)
                    .map(|((r, a), zi)| symmetrize(&((r - a) * zi)))
                    .collect();
                Direction { dy, dw, dz }
            };

            // predictor
            let wz = mul(&w, &z);
            let rc_aff: Blocks = wz.iter().map(|b| -b).collect();
            let aff = direction(&rc_aff);
            let (ap, ad) = match (max_step(&w, &aff.dw), max_step(&z, &aff.dz)) {
                (Ok(a), Ok(b)) => (a.min(1.0), b.min(1.0)),
                (Err(e), _) | (_, Err(e)) => {
                    failure = Some(e);
                    break;
                }
            };
            let w_aff = axpy(ap, &aff.dw, &w);
            let z_aff = axpy(ad, &aff.dz, &z);
            let mu_aff = inner(&w_aff, &z_aff) / dim as f64;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

            // corrector
            let cross = mul(&aff.dw, &aff.dz);
            let rc: Blocks = wz
                .iter()
                .zip(&cross)
                .zip(sizes)
                .map(|((a, b), &n)| DMatrix::identity(n, n) * (sigma * mu) - a - b)
                .collect();
            let dir = direction(&rc);
            let gamma = if relgap < 1e-6 { 0.98 } else { 0.95 };
            let (ap, ad) = match (max_step(&w, &dir.dw), max_step(&z, &dir.dz)) {
                (Ok(a), Ok(b)) => ((gamma * a).min(1.0), (gamma * b).min(1.0)),
                (Err(e), _) | (_, Err(e)) => {
                    failure = Some(e);
                    break;
                }
            };
            w = sym_blocks(&axpy(ap, &dir.dw, &w));
            z = sym_blocks(&axpy(ad, &dir.dz, &z));
            y += dir.dy * ad;
        }
        if let Some((score, sol, w_best)) = best {
            if score <= STALL_FACTOR * self.tolerance {
                log::debug!(
                    "sdp stalled at accuracy {score:.2e}; refining iterate {}",
                    sol.iterations
                );
                return Ok(self.refine(&f0, &fk, &c, sol, &w_best));
            }
        }
        if let Some(e) = failure {
            return Err(e);
        }
        let (pinf, dinf, relgap) = stats;
        if dinf > 1e3 * self.tolerance {
            Err(Error::Infeasible(format!(
                "no LMI-feasible point after {} iterations (residual {dinf:.3e}, primal {pinf:.3e}, gap {relgap:.3e})",
                self.max_iterations
            )))
        } else {
            Err(Error::NumericalFailure(format!(
                "not converged after {} iterations (primal {pinf:.3e}, dual {dinf:.3e}, gap {relgap:.3e})",
                self.max_iterations
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(block: usize, row: usize, col: usize, value: f64) -> Entry {
        Entry {
            block,
            row,
            col,
            value,
        }
    }

    /// minimize y subject to [[y, 1], [1, y]] ⪰ 0  →  y* = 1.
    #[test]
    fn scalar_lmi() {
        let prog = SdpProgram {
            block_sizes: vec![2],
            objective: vec![1.0],
            constant: vec![entry(0, 0, 1, 1.0)],
            coefficients: vec![vec![entry(0, 0, 0, 1.0), entry(0, 1, 1, 1.0)]],
        };
        let sol = InteriorPointSolver::default().solve(&prog).unwrap();
        assert!((sol.y[0] - 1.0).abs() < 1e-8, "{}", sol.y[0]);
    }

    /// minimize y₁ + y₂ with y₁ ≥ 2, y₂ ≥ 1 as 1×1 blocks and an LP-like
    /// coupling y₁ + y₂ ≥ 4.
    #[test]
    fn diagonal_blocks_behave_like_lp() {
        let prog = SdpProgram {
            block_sizes: vec![1, 1, 1],
            objective: vec![1.0, 2.0],
            constant: vec![entry(0, 0, 0, -2.0), entry(1, 0, 0, -1.0), entry(2, 0, 0, -4.0)],
            coefficients: vec![
                vec![entry(0, 0, 0, 1.0), entry(2, 0, 0, 1.0)],
                vec![entry(1, 0, 0, 1.0), entry(2, 0, 0, 1.0)],
            ],
        };
        let sol = InteriorPointSolver::default().solve(&prog).unwrap();
        assert!((sol.y[0] - 3.0).abs() < 1e-7 && (sol.y[1] - 1.0).abs() < 1e-7, "{:?}", sol.y);
        assert!((sol.objective - 5.0).abs() < 1e-8);
    }

    #[test]
    fn infeasible_lmi_reported() {
        // y ≥ 1 and −y ≥ 0
        let prog = SdpProgram {
            block_sizes: vec![1, 1],
            objective: vec![1.0],
            constant: vec![entry(0, 0, 0, -1.0)],
            coefficients: vec![vec![entry(0, 0, 0, 1.0), entry(1, 0, 0, -1.0)]],
        };
        let err = InteriorPointSolver::default().solve(&prog).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)), "{err}");
    }

    #[test]
    fn sdpa_round_trip() {
        let prog = SdpProgram {
            block_sizes: vec![2, 1],
            objective: vec![0.1, -3.5e-7],
            constant: vec![entry(0, 0, 1, 1.0 / 3.0), entry(1, 0, 0, -2.0)],
            coefficients: vec![
                vec![entry(0, 0, 0, 1.0), entry(1, 0, 0, 0.7)],
                vec![entry(0, 1, 1, std::f64::consts::PI)],
            ],
        };
        let back = SdpProgram::from_sdpa(&prog.to_sdpa()).unwrap();
        assert_eq!(back, prog);
        assert!(SdpProgram::from_sdpa("2\n1\n2\n1.0\n").is_err());
    }
}
