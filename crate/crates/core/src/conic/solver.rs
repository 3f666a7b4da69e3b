//! Infeasible primal-dual path following with Nesterov-Todd scaling and a
//! Mehrotra predictor-corrector.
//!
//! The Newton system is reduced to the Schur complement `M = A H A^T`,
//! formed densely and factored by Cholesky. Free variables are split into
//! two nonnegative parts. Rows are normalized, the objective and right-hand
//! side are divided by their infinity norms, and linearly dependent rows are
//! dropped before the first iteration; reported quantities are always in the
//! units of the original program.

use std::fmt;
use std::time::Instant;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::llt::factor::LltRegularization;
use faer::linalg::cholesky::{llt, llt_pivoting};
use faer::linalg::triangular_solve;
use faer::{Mat, Par};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::program::{smat, svec, svec_len, Cone, ConicProgram};
use super::sparse::SparseMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Bound on `|primal - dual| / (1 + |primal|)`.
    pub gap_tolerance: f64,
    /// Bound on the relative equality residuals of both problems.
    pub feasibility_tolerance: f64,
    pub max_iterations: usize,
    /// Fraction of the maximal step to the cone boundary.
    pub step_fraction: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            gap_tolerance: 1e-8,
            feasibility_tolerance: 1e-8,
            max_iterations: 200,
            step_fraction: 0.98,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.gap_tolerance) || !positive(self.feasibility_tolerance) {
            return Err(Error::invalid("solver tolerances must be positive"));
        }
        if !(self.step_fraction > 0.0 && self.step_fraction < 1.0) {
            return Err(Error::invalid("step fraction must lie in (0, 1)"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("iteration limit must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    SlowProgress,
    IterationLimit,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::SlowProgress => "slow-progress",
            SolveStatus::IterationLimit => "iteration-limit",
        })
    }
}

/// Outcome of [`solve`].
///
/// `gap`, `primal_residual` and `dual_residual` are relative:
/// `|c.x - b.y| / (1 + |c.x|)`, `|Ax - b|_inf / (1 + |b|_inf)` and
/// `|c - A^T y - s|_inf / (1 + |c|_inf)`. For `Infeasible` the dual point is
/// a Farkas ray scaled to `b.y = 1`; for `Unbounded` the primal point is an
/// improving ray scaled to `c.x = -1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub seconds: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
}

impl SolveReport {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Largest svec length of a row inside one PSD block that is still handled
/// entrywise when forming the Schur complement, as a multiple of the order.
const DENSE_ROW_FACTOR: usize = 2;
const MIN_STEP: f64 = 1e-10;
const STALL_LIMIT: usize = 5;
const REFINEMENT_STEPS: usize = 2;
const PIVOT_EPSILON: f64 = 1e-14;
const PIVOT_DELTA: f64 = 1e-10;
/// Largest `dim * m^2` for which the QR fallback is attempted.
const QR_BUDGET: f64 = 2e10;
const INFEASIBILITY_WARMUP: usize = 5;

enum ColumnMap {
    Single(usize),
    Split(usize, usize),
}

struct Block {
    offset: usize,
    order: usize,
    pq: Vec<(usize, usize)>,
    rows: Vec<BlockRow>,
}

struct BlockRow {
    row: usize,
    entries: Vec<(usize, f64)>,
    dense: bool,
}

/// Presolved, scaled program in internal column order: nonnegative columns
/// first, then PSD blocks.
struct Internal {
    m: usize,
    m_orig: usize,
    dim: usize,
    a: SparseMatrix,
    at: SparseMatrix,
    b: Vec<f64>,
    c: Vec<f64>,
    nlp: usize,
    lp_cols: Vec<Vec<(usize, f64)>>,
    blocks: Vec<Block>,
    degree: f64,
    kept_rows: Vec<usize>,
    row_scale: Vec<f64>,
    b_scale: f64,
    c_scale: f64,
    map: Vec<ColumnMap>,
}

struct Iterate {
    x: Vec<f64>,
    y: Vec<f64>,
    s: Vec<f64>,
}

struct PsdScaling {
    g: DMatrix<f64>,
    ginv: DMatrix<f64>,
    w: DMatrix<f64>,
    lam: DVector<f64>,
}

struct Scaling {
    w_lp: Vec<f64>,
    lam_lp: Vec<f64>,
    psd: Vec<PsdScaling>,
}

enum NormalFactor<'a> {
    /// Cholesky factor of the equilibrated Schur complement.
    Llt { l: &'a Mat<f64>, equil: Vec<f64> },
    /// Upper triangular `R` with `R^T R` equal to the Schur complement.
    Qr { r: Mat<f64> },
}

/// Direction in scaled coordinates, per cone.
struct ScaledDir {
    lp: Vec<f64>,
    psd: Vec<DMatrix<f64>>,
}

struct Metrics {
    pobj: f64,
    dobj: f64,
    gap: f64,
    compl: f64,
    rp: f64,
    rd: f64,
}

impl Metrics {
    fn merit(&self) -> f64 {
        self.gap.max(self.compl).max(self.rp).max(self.rd)
    }
}

pub fn solve(program: &ConicProgram, config: &SolverConfig) -> Result<SolveReport> {
    config.validate()?;
    let start = Instant::now();
    let mut report = match Internal::new(program) {
        Some(internal) => run(program, &internal, config),
        None => trivially_infeasible(program),
    };
    report.seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

fn trivially_infeasible(program: &ConicProgram) -> SolveReport {
    SolveReport {
        status: SolveStatus::Infeasible,
        primal_objective: f64::NAN,
        dual_objective: f64::NAN,
        gap: f64::NAN,
        primal_residual: f64::NAN,
        dual_residual: f64::NAN,
        iterations: 0,
        seconds: 0.0,
        x: vec![0.0; program.dim()],
        y: vec![0.0; program.num_constraints()],
        s: vec![0.0; program.dim()],
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Internal {
    /// `None` when a zero row has a nonzero right-hand side.
    fn new(program: &ConicProgram) -> Option<Internal> {
        let mut map = Vec::with_capacity(program.dim());
        let mut nlp = 0;
        for cone in program.cones() {
            match *cone {
                Cone::Free(k) => nlp += 2 * k,
                Cone::Nonnegative(k) => nlp += k,
                Cone::Psd(_) => {}
            }
        }
        let mut lp_next = 0;
        let mut psd_next = nlp;
        let mut block_shapes = Vec::new();
        for cone in program.cones() {
            match *cone {
                Cone::Free(k) => {
                    for _ in 0..k {
                        map.push(ColumnMap::Split(lp_next, lp_next + 1));
                        lp_next += 2;
                    }
                }
                Cone::Nonnegative(k) => {
                    for _ in 0..k {
                        map.push(ColumnMap::Single(lp_next));
                        lp_next += 1;
                    }
                }
                Cone::Psd(order) => {
                    block_shapes.push((psd_next, order));
                    for _ in 0..svec_len(order) {
                        map.push(ColumnMap::Single(psd_next));
                        psd_next += 1;
                    }
                }
            }
        }
        let dim = psd_next;

        let a0 = program.constraints();
        let mut triplets = Vec::with_capacity(a0.nnz());
        for (r, c, v) in a0.triplets() {
            match map[c] {
                ColumnMap::Single(j) => triplets.push((r, j, v)),
                ColumnMap::Split(p, q) => {
                    triplets.push((r, p, v));
                    triplets.push((r, q, -v));
                }
            }
        }
        let full = SparseMatrix::from_triplets(a0.nrows(), dim, &triplets);

        let mut nonzero_rows = Vec::new();
        for r in 0..full.nrows() {
            if full.row_norm2(r) > 0.0 {
                nonzero_rows.push(r);
            } else if program.rhs()[r] != 0.0 {
                return None;
            }
        }
        let mut a = full.select_rows(&nonzero_rows);
        let norms: Vec<f64> = (0..a.nrows()).map(|r| a.row_norm2(r)).collect();
        let inv: Vec<f64> = norms.iter().map(|v| 1.0 / v).collect();
        a.scale_rows(&inv);
        let mut b: Vec<f64> = nonzero_rows
            .iter()
            .zip(&inv)
            .map(|(&r, s)| program.rhs()[r] * s)
            .collect();

        let independent = independent_rows(&a);
        let (a, kept_rows, row_scale) = if independent.len() == a.nrows() {
            (a, nonzero_rows, inv)
        } else {
            b = independent.iter().map(|&i| b[i]).collect();
            (
                a.select_rows(&independent),
                independent.iter().map(|&i| nonzero_rows[i]).collect(),
                independent.iter().map(|&i| inv[i]).collect(),
            )
        };

        let mut c = vec![0.0; dim];
        for (j, &v) in program.objective().iter().enumerate() {
            match map[j] {
                ColumnMap::Single(k) => c[k] = v,
                ColumnMap::Split(p, q) => {
                    c[p] = v;
                    c[q] = -v;
                }
            }
        }
        let b_scale = match inf_norm(&b) {
            v if v > 0.0 => v,
            _ => 1.0,
        };
        let c_scale = match inf_norm(&c) {
            v if v > 0.0 => v,
            _ => 1.0,
        };
        b.iter_mut().for_each(|v| *v /= b_scale);
        c.iter_mut().for_each(|v| *v /= c_scale);

        let m = a.nrows();
        let at = a.transpose();
        let lp_cols: Vec<Vec<(usize, f64)>> = (0..nlp).map(|j| at.row(j).collect()).collect();
        let blocks = block_shapes
            .into_iter()
            .map(|(offset, order)| {
                let mut pq = Vec::with_capacity(svec_len(order));
                for j in 0..order {
                    for i in 0..=j {
                        pq.push((i, j));
                    }
                }
                let mut per_row: Vec<(usize, Vec<(usize, f64)>)> = Vec::new();
                for u in 0..svec_len(order) {
                    for (r, v) in at.row(offset + u) {
                        per_row.push((r, vec![(u, v)]));
                    }
                }
                per_row.sort_by_key(|e| e.0);
                let mut rows: Vec<BlockRow> = Vec::new();
                for (r, e) in per_row {
                    match rows.last_mut() {
                        Some(last) if last.row == r => last.entries.extend(e),
                        _ => rows.push(BlockRow {
                            row: r,
                            entries: e,
                            dense: false,
                        }),
                    }
                }
                for row in &mut rows {
                    row.dense = row.entries.len() > DENSE_ROW_FACTOR * order;
                }
                Block {
                    offset,
                    order,
                    pq,
                    rows,
                }
            })
            .collect::<Vec<_>>();
        let degree = (nlp + blocks.iter().map(|b| b.order).sum::<usize>()) as f64;

        Some(Internal {
            m,
            m_orig: program.num_constraints(),
            dim,
            a,
            at,
            b,
            c,
            nlp,
            lp_cols,
            blocks,
            degree,
            kept_rows,
            row_scale,
            b_scale,
            c_scale,
            map,
        })
    }

    fn initial(&self) -> Iterate {
        let mut x = vec![0.0; self.dim];
        x[..self.nlp].iter_mut().for_each(|v| *v = 1.0);
        for blk in &self.blocks {
            for (u, &(i, j)) in blk.pq.iter().enumerate() {
                if i == j {
                    x[blk.offset + u] = 1.0;
                }
            }
        }
        Iterate {
            s: x.clone(),
            x,
            y: vec![0.0; self.m],
        }
    }

    fn block_mat(&self, k: usize, v: &[f64]) -> DMatrix<f64> {
        let blk = &self.blocks[k];
        smat(blk.order, &v[blk.offset..blk.offset + svec_len(blk.order)])
    }

    fn set_block(&self, k: usize, out: &mut [f64], m: &DMatrix<f64>) {
        let blk = &self.blocks[k];
        out[blk.offset..blk.offset + svec_len(blk.order)].copy_from_slice(&svec(m));
    }

    fn to_original(&self, it: &Iterate) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut x = Vec::with_capacity(self.map.len());
        let mut s = Vec::with_capacity(self.map.len());
        for cm in &self.map {
            match *cm {
                ColumnMap::Single(j) => {
                    x.push(it.x[j] * self.b_scale);
                    s.push(it.s[j] * self.c_scale);
                }
                ColumnMap::Split(p, q) => {
                    x.push((it.x[p] - it.x[q]) * self.b_scale);
                    s.push(0.0);
                }
            }
        }
        (x, self.dual_to_original(&it.y), s)
    }

    fn dual_to_original(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m_orig];
        for (i, &r) in self.kept_rows.iter().enumerate() {
            out[r] = y[i] * self.row_scale[i] * self.c_scale;
        }
        out
    }

    fn apply_h(&self, sc: &Scaling, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for j in 0..self.nlp {
            out[j] = sc.w_lp[j] * sc.w_lp[j] * v[j];
        }
        for (k, ps) in sc.psd.iter().enumerate() {
            let vm = self.block_mat(k, v);
            let r = &ps.w * vm * &ps.w;
            self.set_block(k, &mut out, &r);
        }
        out
    }

    fn scaling(&self, it: &Iterate) -> Option<Scaling> {
        let mut w_lp = Vec::with_capacity(self.nlp);
        let mut lam_lp = Vec::with_capacity(self.nlp);
        for j in 0..self.nlp {
            let (x, s) = (it.x[j], it.s[j]);
            if !(x > 0.0 && s > 0.0) {
                return None;
            }
            w_lp.push((x / s).sqrt());
            lam_lp.push((x * s).sqrt());
        }
        let mut psd = Vec::with_capacity(self.blocks.len());
        for k in 0..self.blocks.len() {
            let l = self.block_mat(k, &it.x).cholesky()?.l();
            let r = self.block_mat(k, &it.s).cholesky()?.l();
            let svd = (r.transpose() * &l).svd(true, true);
            let (u, vt) = (svd.u?, svd.v_t?);
            let lam = svd.singular_values;
            if lam.iter().any(|&v| !(v > 0.0)) {
                return None;
            }
            let isq = DMatrix::from_diagonal(&lam.map(|v| 1.0 / v.sqrt()));
            let g = &l * vt.transpose() * &isq;
            let ginv = &isq * u.transpose() * r.transpose();
            let w = &g * g.transpose();
            psd.push(PsdScaling { g, ginv, w, lam });
        }
        Some(Scaling { w_lp, lam_lp, psd })
    }

    /// Lower triangle of `A H A^T`.
    fn schur(&self, sc: &Scaling, mat: &mut Mat<f64>) {
        mat.fill(0.0);
        for (j, col) in self.lp_cols.iter().enumerate() {
            let h = sc.w_lp[j] * sc.w_lp[j];
            for (a, &(ri, vi)) in col.iter().enumerate() {
                let hv = h * vi;
                for &(rj, vj) in &col[a..] {
                    let (hi, lo) = if ri >= rj { (ri, rj) } else { (rj, ri) };
                    mat[(hi, lo)] += hv * vj;
                }
            }
        }
        let sqrt_half = std::f64::consts::FRAC_1_SQRT_2;
        for (k, blk) in self.blocks.iter().enumerate() {
            let w = &sc.psd[k].w;
            let alpha = |u: usize| {
                let (p, q) = blk.pq[u];
                if p == q {
                    sqrt_half
                } else {
                    1.0
                }
            };
            let h = |u: usize, v: usize| {
                let (p, q) = blk.pq[u];
                let (r, s) = blk.pq[v];
                alpha(u) * alpha(v) * (w[(p, r)] * w[(q, s)] + w[(p, s)] * w[(q, r)])
            };
            for (jdx, rj) in blk.rows.iter().enumerate() {
                if rj.dense {
                    let mut aj = DMatrix::zeros(blk.order, blk.order);
                    for &(u, v) in &rj.entries {
                        let (p, q) = blk.pq[u];
                        if p == q {
                            aj[(p, p)] = v;
                        } else {
                            aj[(p, q)] = v * sqrt_half;
                            aj[(q, p)] = v * sqrt_half;
                        }
                    }
                    let g = svec(&(w * aj * w));
                    for (idx, ri) in blk.rows.iter().enumerate() {
                        if ri.dense && idx > jdx {
                            continue;
                        }
                        let val: f64 = ri.entries.iter().map(|&(u, v)| v * g[u]).sum();
                        let (hi, lo) = if ri.row >= rj.row {
                            (ri.row, rj.row)
                        } else {
                            (rj.row, ri.row)
                        };
                        mat[(hi, lo)] += val;
                    }
                } else {
                    for ri in blk.rows[jdx..].iter().filter(|r| !r.dense) {
                        let mut val = 0.0;
                        for &(u, vu) in &ri.entries {
                            for &(v, vv) in &rj.entries {
                                val += vu * vv * h(u, v);
                            }
                        }
                        let (hi, lo) = if ri.row >= rj.row {
                            (ri.row, rj.row)
                        } else {
                            (rj.row, ri.row)
                        };
                        mat[(hi, lo)] += val;
                    }
                }
            }
        }
    }

    fn scale_dir(&self, sc: &Scaling, dx: &[f64], ds: &[f64]) -> (ScaledDir, ScaledDir) {
        let mut xl = Vec::with_capacity(self.nlp);
        let mut sl = Vec::with_capacity(self.nlp);
        for j in 0..self.nlp {
            xl.push(dx[j] / sc.w_lp[j]);
            sl.push(ds[j] * sc.w_lp[j]);
        }
        let mut xp = Vec::with_capacity(self.blocks.len());
        let mut sp = Vec::with_capacity(self.blocks.len());
        for (k, ps) in sc.psd.iter().enumerate() {
            xp.push(&ps.ginv * self.block_mat(k, dx) * ps.ginv.transpose());
            sp.push(ps.g.transpose() * self.block_mat(k, ds) * &ps.g);
        }
        (ScaledDir { lp: xl, psd: xp }, ScaledDir { lp: sl, psd: sp })
    }

    /// Largest step keeping `lambda + alpha * d` in the cone.
    fn max_step(&self, sc: &Scaling, d: &ScaledDir) -> f64 {
        let mut alpha = f64::INFINITY;
        for j in 0..self.nlp {
            if d.lp[j] < 0.0 {
                alpha = alpha.min(-sc.lam_lp[j] / d.lp[j]);
            }
        }
        for (k, ps) in sc.psd.iter().enumerate() {
            let isq = ps.lam.map(|v| 1.0 / v.sqrt());
            let n = ps.lam.len();
            let t = DMatrix::from_fn(n, n, |i, j| isq[i] * d.psd[k][(i, j)] * isq[j]);
            let t = 0.5 * (&t + t.transpose());
            let emin = SymmetricEigen::new(t).eigenvalues.min();
            if emin < 0.0 {
                alpha = alpha.min(-1.0 / emin);
            }
        }
        alpha
    }

    /// Internal-unit complementarity right-hand side `R_c` from the scaled
    /// target `r` of `lambda o (dx~ + ds~) = r`.
    fn complementarity_rhs(&self, sc: &Scaling, r: &ScaledDir) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for j in 0..self.nlp {
            out[j] = sc.w_lp[j] * r.lp[j] / sc.lam_lp[j];
        }
        for (k, ps) in sc.psd.iter().enumerate() {
            let n = ps.lam.len();
            let z = DMatrix::from_fn(n, n, |i, j| 2.0 * r.psd[k][(i, j)] / (ps.lam[i] + ps.lam[j]));
            let rc = &ps.g * z * ps.g.transpose();
            self.set_block(k, &mut out, &rc);
        }
        out
    }

    /// Triangular `R` with `R^T R = A H A^T`, from a QR factorization of
    /// `H^{1/2} A^T`. Avoids the cancellation of forming the product when
    /// the scaling spans many orders of magnitude.
    fn normal_qr(&self, sc: &Scaling) -> Option<Mat<f64>> {
        let mut b = Mat::<f64>::zeros(self.dim, self.m);
        for (j, col) in self.lp_cols.iter().enumerate() {
            for &(r, v) in col {
                b[(j, r)] = sc.w_lp[j] * v;
            }
        }
        let sqrt_half = std::f64::consts::FRAC_1_SQRT_2;
        for (k, blk) in self.blocks.iter().enumerate() {
            let g = &sc.psd[k].g;
            for row in &blk.rows {
                let mut a = DMatrix::zeros(blk.order, blk.order);
                for &(u, v) in &row.entries {
                    let (p, q) = blk.pq[u];
                    if p == q {
                        a[(p, p)] = v;
                    } else {
                        a[(p, q)] = v * sqrt_half;
                        a[(q, p)] = v * sqrt_half;
                    }
                }
                let scaled = svec(&(g.transpose() * a * g));
                for (u, v) in scaled.iter().enumerate() {
                    b[(blk.offset + u, row.row)] = *v;
                }
            }
        }
        let r = b.qr().thin_R().to_owned();
        let finite = (0..self.m).all(|i| r[(i, i)].is_finite() && r[(i, i)] != 0.0);
        finite.then_some(r)
    }

    fn newton(
        &self,
        sc: &Scaling,
        factor: &NormalFactor<'_>,
        rp: &[f64],
        rd: &[f64],
        rc: &[f64],
        stack: &mut MemStack,
    ) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let hrd = self.apply_h(sc, rd);
        let arc = self.a.mul_vec(rc);
        let ahrd = self.a.mul_vec(&hrd);
        let target: Vec<f64> = (0..self.m).map(|i| rp[i] - arc[i] + ahrd[i]).collect();
        let solve_normal = |rhs: &[f64], stack: &mut MemStack| -> Vec<f64> {
            match factor {
                NormalFactor::Llt { l, equil } => {
                    let mut z = Mat::<f64>::from_fn(self.m, 1, |i, _| rhs[i] * equil[i]);
                    llt::solve::solve_in_place(l.as_ref(), z.as_mut(), Par::Seq, stack);
                    (0..self.m).map(|i| z[(i, 0)] * equil[i]).collect()
                }
                NormalFactor::Qr { r } => {
                    let mut z = Mat::<f64>::from_fn(self.m, 1, |i, _| rhs[i]);
                    triangular_solve::solve_lower_triangular_in_place(r.transpose(), z.as_mut(), Par::Seq);
                    triangular_solve::solve_upper_triangular_in_place(r.as_ref(), z.as_mut(), Par::Seq);
                    (0..self.m).map(|i| z[(i, 0)]).collect()
                }
            }
        };
        let back = |dy: &[f64]| -> (Vec<f64>, Vec<f64>) {
            let aty = self.at.mul_vec(dy);
            let ds: Vec<f64> = rd.iter().zip(&aty).map(|(r, a)| r - a).collect();
            let hds = self.apply_h(sc, &ds);
            let dx: Vec<f64> = rc.iter().zip(&hds).map(|(r, h)| r - h).collect();
            (dx, ds)
        };
        let mut dy = solve_normal(&target, &mut *stack);
        let (mut dx, mut ds) = back(&dy);
        // Refine against the primal equation itself: a dual correction
        // `delta` moves `A dx` by `A H A^T delta`. Stops as soon as a
        // correction fails to reduce the residual.
        let primal_gap = |dx: &[f64]| -> Vec<f64> {
            let adx = self.a.mul_vec(dx);
            rp.iter().zip(&adx).map(|(r, a)| r - a).collect()
        };
        let mut resid = primal_gap(&dx);
        let mut resid_norm = inf_norm(&resid);
        for _ in 0..REFINEMENT_STEPS {
            if resid_norm <= f64::EPSILON * (1.0 + inf_norm(rp)) {
                break;
            }
            let delta = solve_normal(&resid, &mut *stack);
            let trial: Vec<f64> = dy.iter().zip(&delta).map(|(v, d)| v + d).collect();
            let (tx, ts) = back(&trial);
            let trial_resid = primal_gap(&tx);
            let trial_norm = inf_norm(&trial_resid);
            if !(trial_norm < resid_norm) {
                break;
            }
            (dy, dx, ds, resid, resid_norm) = (trial, tx, ts, trial_resid, trial_norm);
        }
        let finite = dx.iter().chain(&dy).chain(&ds).all(|v| v.is_finite());
        finite.then_some((dx, dy, ds))
    }
}

/// Indices of a maximal set of linearly independent rows.
fn independent_rows(a: &SparseMatrix) -> Vec<usize> {
    let m = a.nrows();
    if m == 0 {
        return Vec::new();
    }
    let at = a.transpose();
    let mut gram = Mat::<f64>::zeros(m, m);
    for j in 0..at.nrows() {
        let col: Vec<(usize, f64)> = at.row(j).collect();
        for (p, &(ri, vi)) in col.iter().enumerate() {
            for &(rj, vj) in &col[p..] {
                let (hi, lo) = if ri >= rj { (ri, rj) } else { (rj, ri) };
                gram[(hi, lo)] += vi * vj;
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            gram[(j, i)] = gram[(i, j)];
        }
    }
    let mut trial = gram.clone();
    let mut buf = MemBuffer::new(llt::factor::cholesky_in_place_scratch::<f64>(
        m,
        Par::Seq,
        Default::default(),
    ));
    let plain = llt::factor::cholesky_in_place(
        trial.as_mut(),
        LltRegularization::default(),
        Par::Seq,
        MemStack::new(&mut buf),
        Default::default(),
    );
    let well_conditioned = plain.is_ok() && (0..m).all(|i| trial[(i, i)] > 1e-7);
    if well_conditioned {
        return (0..m).collect();
    }
    let mut perm = vec![0usize; m];
    let mut perm_inv = vec![0usize; m];
    let mut buf = MemBuffer::new(llt_pivoting::factor::cholesky_in_place_scratch::<usize, f64>(
        m,
        Par::Seq,
        Default::default(),
    ));
    let rank = match llt_pivoting::factor::cholesky_in_place(
        gram.as_mut(),
        &mut perm,
        &mut perm_inv,
        Par::Seq,
        MemStack::new(&mut buf),
        Default::default(),
    ) {
        Ok((info, _)) => info.rank,
        Err(_) => m,
    };
    // The pivoted factorization stops at its own rank estimate; trim pivots
    // that are negligible relative to unit-norm rows.
    let rank = (0..rank).take_while(|&i| gram[(i, i)] > 1e-7).count();
    let mut kept: Vec<usize> = perm[..rank].to_vec();
    kept.sort_unstable();
    kept
}

fn run(program: &ConicProgram, p: &Internal, config: &SolverConfig) -> SolveReport {
    let mut it = p.initial();
    let mut schur = Mat::<f64>::zeros(p.m, p.m);
    let mut l = Mat::<f64>::zeros(p.m, p.m);
    let scratch = llt::factor::cholesky_in_place_scratch::<f64>(p.m, Par::Seq, Default::default())
        .or(llt::solve::solve_in_place_scratch::<f64>(p.m, 1, Par::Seq));
    let mut buf = MemBuffer::new(scratch);

    let mut best: Option<(f64, Vec<f64>, Vec<f64>, Vec<f64>, usize)> = None;
    let mut stalls = 0;
    let mut status = SolveStatus::IterationLimit;
    let mut iterations = 0;
    let b_norm = inf_norm(program.rhs());
    let c_norm = inf_norm(program.objective());

    loop {
        let (x, y, s) = p.to_original(&it);
        let metrics = evaluate(program, &x, &y, &s, b_norm, c_norm);
        let converged = metrics.gap <= config.gap_tolerance
            && metrics.compl <= config.gap_tolerance
            && metrics.rp <= config.feasibility_tolerance
            && metrics.rd <= config.feasibility_tolerance;
        if best.as_ref().is_none_or(|b| metrics.merit() <= b.0) {
            best = Some((metrics.merit(), x, y, s, iterations));
        }
        if converged {
            status = SolveStatus::Optimal;
            break;
        }
        if iterations >= INFEASIBILITY_WARMUP {
            if let Some(report) = certificate(program, p, &it, config, iterations) {
                return report;
            }
        }
        if iterations >= config.max_iterations {
            break;
        }
        iterations += 1;

        let Some(sc) = p.scaling(&it) else {
            status = SolveStatus::SlowProgress;
            break;
        };
        p.schur(&sc, &mut schur);
        // Factor the unit-diagonal equilibration so the pivot test is
        // relative to each row's own scale.
        let equil: Vec<f64> = (0..p.m)
            .map(|i| match schur[(i, i)] {
                v if v > 0.0 => 1.0 / v.sqrt(),
                _ => 1.0,
            })
            .collect();
        for j in 0..p.m {
            for i in j..p.m {
                l[(i, j)] = schur[(i, j)] * equil[i] * equil[j];
            }
        }
        let reg = LltRegularization {
            dynamic_regularization_delta: PIVOT_DELTA,
            dynamic_regularization_epsilon: PIVOT_EPSILON,
        };
        let info =
            llt::factor::cholesky_in_place(l.as_mut(), reg, Par::Seq, MemStack::new(&mut buf), Default::default());
        let clean = matches!(info, Ok(i) if i.dynamic_regularization_count == 0);
        let qr_affordable = (p.dim as f64) * (p.m as f64).powi(2) <= QR_BUDGET;
        let factor = match (clean, qr_affordable) {
            (true, _) => NormalFactor::Llt { l: &l, equil },
            (false, true) => match p.normal_qr(&sc) {
                Some(r) => NormalFactor::Qr { r },
                None => {
                    status = SolveStatus::SlowProgress;
                    break;
                }
            },
            (false, false) if info.is_ok() => NormalFactor::Llt { l: &l, equil },
            (false, false) => {
                status = SolveStatus::SlowProgress;
                break;
            }
        };

        let ax = p.a.mul_vec(&it.x);
        let rp: Vec<f64> = p.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let aty = p.at.mul_vec(&it.y);
        let rd: Vec<f64> = (0..p.dim).map(|j| p.c[j] - aty[j] - it.s[j]).collect();
        let mu = dot(&it.x, &it.s) / p.degree.max(1.0);

        let neg_x: Vec<f64> = it.x.iter().map(|v| -v).collect();
        let Some((dxa, _, dsa)) = p.newton(&sc, &factor, &rp, &rd, &neg_x, MemStack::new(&mut buf)) else {
            status = SolveStatus::SlowProgress;
            break;
        };
        let (sxa, ssa) = p.scale_dir(&sc, &dxa, &dsa);
        let ap = p.max_step(&sc, &sxa).min(1.0);
        let ad = p.max_step(&sc, &ssa).min(1.0);
        let sigma = if p.degree > 0.0 {
            let xa: Vec<f64> = it.x.iter().zip(&dxa).map(|(x, d)| x + ap * d).collect();
            let sa: Vec<f64> = it.s.iter().zip(&dsa).map(|(s, d)| s + ad * d).collect();
            let mu_aff = dot(&xa, &sa) / p.degree;
            (mu_aff / mu).clamp(0.0, 1.0).powi(3)
        } else {
            0.0
        };

        let target = ScaledDir {
            lp: (0..p.nlp)
                .map(|j| sigma * mu - sc.lam_lp[j] * sc.lam_lp[j] - sxa.lp[j] * ssa.lp[j])
                .collect(),
            psd: sc
                .psd
                .iter()
                .enumerate()
                .map(|(k, ps)| {
                    let cross = 0.5 * (&sxa.psd[k] * &ssa.psd[k] + &ssa.psd[k] * &sxa.psd[k]);
                    let diag = DMatrix::from_diagonal(&ps.lam.map(|l| sigma * mu - l * l));
                    diag - cross
                })
                .collect(),
        };
        let rc = p.complementarity_rhs(&sc, &target);
        let Some((dx, dy, ds)) = p.newton(&sc, &factor, &rp, &rd, &rc, MemStack::new(&mut buf)) else {
            status = SolveStatus::SlowProgress;
            break;
        };
        let (sx, ss) = p.scale_dir(&sc, &dx, &ds);
        let ap = (config.step_fraction * p.max_step(&sc, &sx)).min(1.0);
        let ad = (config.step_fraction * p.max_step(&sc, &ss)).min(1.0);

        it.x.iter_mut().zip(&dx).for_each(|(v, d)| *v += ap * d);
        it.y.iter_mut().zip(&dy).for_each(|(v, d)| *v += ad * d);
        it.s.iter_mut().zip(&ds).for_each(|(v, d)| *v += ad * d);

        if ap < MIN_STEP && ad < MIN_STEP {
            stalls += 1;
            if stalls >= STALL_LIMIT {
                status = SolveStatus::SlowProgress;
                break;
            }
        } else {
            stalls = 0;
        }
    }

    let (_, x, y, s, _) = best.expect("at least one iterate evaluated");
    let metrics = evaluate(program, &x, &y, &s, b_norm, c_norm);
    SolveReport {
        status,
        primal_objective: metrics.pobj,
        dual_objective: metrics.dobj,
        gap: metrics.gap,
        primal_residual: metrics.rp,
        dual_residual: metrics.rd,
        iterations,
        seconds: 0.0,
        x,
        y,
        s,
    }
}

fn evaluate(program: &ConicProgram, x: &[f64], y: &[f64], s: &[f64], b_norm: f64, c_norm: f64) -> Metrics {
    let a = program.constraints();
    let mut y_full = y.to_vec();
    y_full.resize(program.num_constraints(), 0.0);
    let ax = a.mul_vec(x);
    let rp = ax
        .iter()
        .zip(program.rhs())
        .fold(0.0f64, |acc, (l, r)| acc.max((l - r).abs()));
    let aty = a.tr_mul_vec(&y_full);
    let rd = (0..program.dim()).fold(0.0f64, |acc, j| acc.max((program.objective()[j] - aty[j] - s[j]).abs()));
    let pobj = dot(program.objective(), x);
    let dobj = dot(program.rhs(), &y_full);
    let scale = 1.0 + pobj.abs();
    Metrics {
        pobj,
        dobj,
        gap: (pobj - dobj).abs() / scale,
        compl: dot(x, s).abs() / scale,
        rp: rp / (1.0 + b_norm),
        rd: rd / (1.0 + c_norm),
    }
}

/// Farkas-type certificates read off a diverging iterate.
fn certificate(
    program: &ConicProgram,
    p: &Internal,
    it: &Iterate,
    config: &SolverConfig,
    iterations: usize,
) -> Option<SolveReport> {
    let tol = config.feasibility_tolerance;
    let by = dot(&p.b, &it.y);
    if by > 0.0 {
        let aty = p.at.mul_vec(&it.y);
        let viol = (0..p.dim).fold(0.0f64, |acc, j| acc.max((aty[j] + it.s[j]).abs()));
        if viol / by < tol {
            let (_, y, s) = p.to_original(it);
            let by_orig = dot(program.rhs(), &y);
            return Some(ray_report(
                SolveStatus::Infeasible,
                program,
                vec![0.0; program.dim()],
                y.iter().map(|v| v / by_orig).collect(),
                s.iter().map(|v| v / by_orig).collect(),
                iterations,
            ));
        }
    }
    let cx = dot(&p.c, &it.x);
    if cx < 0.0 {
        let ax = p.a.mul_vec(&it.x);
        if inf_norm(&ax) / -cx < tol {
            let (x, _, _) = p.to_original(it);
            let cx_orig = dot(program.objective(), &x);
            return Some(ray_report(
                SolveStatus::Unbounded,
                program,
                x.iter().map(|v| v / -cx_orig).collect(),
                vec![0.0; program.num_constraints()],
                vec![0.0; program.dim()],
                iterations,
            ));
        }
    }
    None
}

fn ray_report(
    status: SolveStatus,
    program: &ConicProgram,
    x: Vec<f64>,
    mut y: Vec<f64>,
    s: Vec<f64>,
    iterations: usize,
) -> SolveReport {
    y.resize(program.num_constraints(), 0.0);
    SolveReport {
        status,
        primal_objective: if status == SolveStatus::Unbounded {
            f64::NEG_INFINITY
        } else {
            f64::NAN
        },
        dual_objective: if status == SolveStatus::Infeasible {
            f64::INFINITY
        } else {
            f64::NAN
        },
        gap: f64::NAN,
        primal_residual: f64::NAN,
        dual_residual: f64::NAN,
        iterations,
        seconds: 0.0,
        x,
        y,
        s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::ProgramBuilder;

    fn lower_bound_lp() -> ConicProgram {
        let mut pb = ProgramBuilder::new();
        let x = pb.add_nonnegative(2);
        pb.add_objective(x.start, 1.0);
        pb.add_equality(&[(x.start, 1.0), (x.start + 1, -1.0)], 1.0);
        pb.build().unwrap()
    }

    fn max_eigen_sdp() -> ConicProgram {
        let mut pb = ProgramBuilder::new();
        let t = pb.add_free(1).start;
        let s = pb.add_psd(2);
        pb.add_objective(t, 1.0);
        let d = [1.0, 2.0];
        for i in 0..2 {
            for j in i..2 {
                let ident = if i == j { 1.0 } else { 0.0 };
                let diag = if i == j { d[i] } else { 0.0 };
                pb.add_equality(&[(t, ident), s.term(i, j, -1.0)], diag);
            }
        }
        pb.build().unwrap()
    }

    #[test]
    fn lp_lower_bound() {
        let r = solve(&lower_bound_lp(), &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.primal_objective - 1.0).abs() < 1e-7);
        assert!((r.x[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn sdp_largest_eigenvalue() {
        let r = solve(&max_eigen_sdp(), &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.primal_objective - 2.0).abs() < 1e-7, "{r:?}");
        assert!((r.dual_objective - 2.0).abs() < 1e-7);
    }

    #[test]
    fn infeasible_lp_is_detected() {
        let mut pb = ProgramBuilder::new();
        let x = pb.add_nonnegative(1);
        pb.add_objective(x.start, 1.0);
        pb.add_equality(&[(x.start, 1.0)], -1.0);
        let r = solve(&pb.build().unwrap(), &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert!((r.y[0] + 1.0).abs() < 1e-6);
    }

    #[test]
    fn unbounded_lp_is_detected() {
        let mut pb = ProgramBuilder::new();
        let x = pb.add_nonnegative(2);
        pb.add_objective(x.start, -1.0);
        pb.add_equality(&[(x.start, 1.0), (x.start + 1, -1.0)], 0.0);
        let r = solve(&pb.build().unwrap(), &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Unbounded);
        assert!(r.x.iter().all(|&v| v >= -1e-9));
    }

    #[test]
    fn duplicate_rows_are_presolved() {
        let mut pb = ProgramBuilder::new();
        let x = pb.add_nonnegative(3);
        pb.add_objective(x.start, 1.0);
        pb.add_objective(x.start + 1, 2.0);
        pb.add_equality(&[(x.start, 1.0), (x.start + 1, 1.0), (x.start + 2, 1.0)], 3.0);
        pb.add_equality(&[(x.start, 2.0), (x.start + 1, 2.0), (x.start + 2, 2.0)], 6.0);
        pb.add_equality(&[(x.start + 2, 1.0)], 1.0);
        let r = solve(&pb.build().unwrap(), &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.primal_objective - 2.0).abs() < 1e-7, "{r:?}");
    }

    #[test]
    fn zero_row_with_nonzero_rhs_is_infeasible() {
        let mut pb = ProgramBuilder::new();
        let x = pb.add_nonnegative(1);
        pb.add_objective(x.start, 1.0);
        pb.add_equality(&[], 1.0);
        let r = solve(&pb.build().unwrap(), &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = SolverConfig {
            step_fraction: 1.0,
            ..SolverConfig::default()
        };
        assert!(solve(&lower_bound_lp(), &cfg).is_err());
    }
}
