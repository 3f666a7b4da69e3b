//! Scheme relaxation: nonnegative blocks `X^(1..=d)` summing to `J - I`
//! with the `d` eigenvalue LMIs.
//!
//! With row sums modeled, every LMI matrix `L_i` satisfies `L_i e = 0`
//! identically, so the PSD slack is written on the complement of `e`:
//! `R_i = V^T L_i V` with `V = [I; -e^T]` of order `n - 1`. On the affine
//! hull this is equivalent to `L_i >= 0` and restores a strictly feasible
//! point for the interior-point method.

use std::time::Instant;

use nalgebra::DMatrix;

use super::point::{lmi_coefficient, MultiBlockPoint};
use super::{check_order, num_pairs, pair_index, pairs};
use crate::bound::{BoundResult, Method, SolveSummary};
use crate::circulant::scheme_matrices;
use crate::conic::{solve, svec, ConicProgram, ProgramBuilder, PsdBlock, SolveReport, SolverConfig};
use crate::distance::DistanceMatrix;
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NewSdpOptions {
    /// Add `X^(k) e = 2e` (`e` at the antipode).
    pub row_sums: bool,
}

impl Default for NewSdpOptions {
    fn default() -> Self {
        NewSdpOptions { row_sums: true }
    }
}

/// Variable layout shared by the bound program and the extension test.
#[derive(Clone, Debug)]
pub(crate) struct Layout {
    pub n: usize,
    pub x_start: usize,
    pub lmi: Vec<PsdBlock>,
    pub row_sums: bool,
}

impl Layout {
    pub fn d(&self) -> usize {
        self.n / 2
    }

    /// Column of `X^(k)_{pq}`, `k` in `1..=d`.
    pub fn x_col(&self, k: usize, p: usize, q: usize) -> usize {
        self.x_start + (k - 1) * num_pairs(self.n) + pair_index(self.n, p, q)
    }

    pub fn extract(&self, x: &[f64]) -> MultiBlockPoint<f64> {
        let n = self.n;
        let blocks = (1..=self.d())
            .map(|k| DMatrix::from_fn(n, n, |p, q| if p == q { 0.0 } else { x[self.x_col(k, p, q)] }))
            .collect();
        MultiBlockPoint::new(n, blocks).expect("layout produces a consistent point")
    }

    pub fn embed(&self, point: &MultiBlockPoint<f64>, dim: usize) -> Vec<f64> {
        let n = self.n;
        let mut x = vec![0.0; dim];
        for k in 1..=self.d() {
            for (p, q) in pairs(n) {
                x[self.x_col(k, p, q)] = point.block(k)[(p, q)];
            }
        }
        for (i, blk) in self.lmi.iter().enumerate() {
            let l = point.lmi_matrix(i + 1);
            let slack = if self.row_sums {
                let v = complement_basis(n);
                v.transpose() * l * v
            } else {
                l
            };
            let s = svec(&slack);
            x[blk.offset()..blk.offset() + s.len()].copy_from_slice(&s);
        }
        x
    }
}

/// `V = [I; -e^T]`, an `n x (n-1)` basis of the complement of `e`.
fn complement_basis(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n - 1, |i, j| {
        if i == n - 1 {
            -1.0
        } else if i == j {
            1.0
        } else {
            0.0
        }
    })
}

/// Adds the variables and constraints; no objective.
pub(crate) fn assemble(pb: &mut ProgramBuilder, n: usize, opts: NewSdpOptions) -> Layout {
    let d = n / 2;
    let np = num_pairs(n);
    let x_start = pb.add_nonnegative(d * np).start;
    let order = if opts.row_sums { n - 1 } else { n };
    let lmi: Vec<PsdBlock> = (0..d).map(|_| pb.add_psd(order)).collect();
    let layout = Layout {
        n,
        x_start,
        lmi,
        row_sums: opts.row_sums,
    };

    for (p, q) in pairs(n) {
        let terms: Vec<(usize, f64)> = (1..=d).map(|k| (layout.x_col(k, p, q), 1.0)).collect();
        pb.add_equality(&terms, 1.0);
    }

    let last = n - 1;
    for (idx, blk) in layout.lmi.iter().enumerate() {
        let i = idx + 1;
        for b in 0..order {
            for a in 0..=b {
                let mut terms = vec![blk.term(a, b, 1.0)];
                let rhs;
                if opts.row_sums {
                    // (V^T L V)_ab = L_ab - L_a,last - L_last,b + L_last,last.
                    for k in 1..=d {
                        let c = lmi_coefficient(n, i, k);
                        if c == 0.0 {
                            continue;
                        }
                        if a == b {
                            terms.push((layout.x_col(k, a, last), 2.0 * c));
                        } else {
                            terms.push((layout.x_col(k, a, b), -c));
                            terms.push((layout.x_col(k, a, last), c));
                            terms.push((layout.x_col(k, b, last), c));
                        }
                    }
                    rhs = if a == b { 2.0 } else { 1.0 };
                } else {
                    if a != b {
                        for k in 1..=d {
                            let c = lmi_coefficient(n, i, k);
                            if c != 0.0 {
                                terms.push((layout.x_col(k, a, b), -c));
                            }
                        }
                    }
                    rhs = if a == b { 1.0 } else { 0.0 };
                }
                pb.add_equality(&terms, rhs);
            }
        }
    }

    if opts.row_sums {
        // The antipodal (or last) block's sums follow from the others.
        for k in 1..d {
            let target = if 2 * k == n { 1.0 } else { 2.0 };
            for p in 0..n {
                let terms: Vec<(usize, f64)> = (0..n)
                    .filter(|&q| q != p)
                    .map(|q| (layout.x_col(k, p, q), 1.0))
                    .collect();
                pb.add_equality(&terms, target);
            }
        }
    }
    layout
}

/// Scheme relaxation assembled as a conic program.
#[derive(Clone, Debug)]
pub struct NewSdp {
    program: ConicProgram,
    layout: Layout,
}

impl NewSdp {
    pub fn program(&self) -> &ConicProgram {
        &self.program
    }

    pub fn n(&self) -> usize {
        self.layout.n
    }

    pub fn has_row_sums(&self) -> bool {
        self.layout.row_sums
    }

    /// Program vector of a point, with the LMI slacks filled in.
    pub fn embed(&self, point: &MultiBlockPoint<f64>) -> Vec<f64> {
        self.layout.embed(point, self.program.dim())
    }

    pub fn extract(&self, x: &[f64]) -> MultiBlockPoint<f64> {
        self.layout.extract(x)
    }
}

pub fn build_new_sdp(d: &DistanceMatrix) -> Result<NewSdp> {
    build_new_sdp_with(d, NewSdpOptions::default())
}

pub fn build_new_sdp_with(d: &DistanceMatrix, opts: NewSdpOptions) -> Result<NewSdp> {
    check_order(d)?;
    let n = d.n();
    let mut pb = ProgramBuilder::new();
    let layout = assemble(&mut pb, n, opts);
    for (p, q) in pairs(n) {
        pb.add_objective(layout.x_col(1, p, q), d.get(p, q));
    }
    Ok(NewSdp {
        program: pb.build()?,
        layout,
    })
}

/// `X^(k) = A^(k)`, the scheme of the identity tour.
pub fn canonical_point(n: usize) -> Result<MultiBlockPoint<i64>> {
    if n < super::MIN_ORDER {
        return Err(crate::Error::invalid(format!(
            "canonical point needs n >= {}, got {n}",
            super::MIN_ORDER
        )));
    }
    let scheme = scheme_matrices::<i64>(n)?;
    MultiBlockPoint::new(n, scheme.matrices()[1..].to_vec())
}

#[derive(Clone, Debug)]
pub struct NewSdpSolution {
    pub bound: BoundResult,
    pub point: MultiBlockPoint<f64>,
    pub report: SolveReport,
}

pub fn solve_new_sdp(d: &DistanceMatrix, opts: NewSdpOptions, config: &SolverConfig) -> Result<NewSdpSolution> {
    let start = Instant::now();
    let sdp = build_new_sdp_with(d, opts)?;
    let report = solve(sdp.program(), config)?;
    let point = sdp.extract(&report.x);
    let bound = BoundResult::new(
        Method::NewSdp,
        report.dual_objective,
        d.is_integral(),
        SolveSummary::from(&report),
        1,
        start.elapsed(),
    );
    Ok(NewSdpSolution { bound, point, report })
}
