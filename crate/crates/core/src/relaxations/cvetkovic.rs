//! Single-matrix relaxation: degree-2 adjacency `X` with
//! `2I - X + (2 - 2cos(2 pi/n))(J - I) >= 0`.

use std::time::Instant;

use nalgebra::DMatrix;

use super::{check_order, num_pairs, pair_index, pairs};
use crate::bound::{BoundResult, Method, SolveSummary};
use crate::conic::{solve, svec, ConicProgram, ProgramBuilder, PsdBlock, SolveReport, SolverConfig};
use crate::distance::DistanceMatrix;
use crate::error::Result;

/// `2 - 2cos(2 pi / n)`, the spectral gap of the `n`-cycle.
pub(crate) fn cycle_gap(n: usize) -> f64 {
    2.0 - 2.0 * (std::f64::consts::TAU / n as f64).cos()
}

/// `2I - X + (2 - 2cos(2 pi/n))(J - I)`.
pub(crate) fn cvetkovic_lmi(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let gap = cycle_gap(n);
    DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 - x[(i, i)] } else { gap - x[(i, j)] })
}

#[derive(Clone, Debug)]
pub struct CvetkovicSdp {
    program: ConicProgram,
    n: usize,
    x_start: usize,
    slack_start: usize,
    lmi: PsdBlock,
}

impl CvetkovicSdp {
    pub fn program(&self) -> &ConicProgram {
        &self.program
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn extract(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |p, q| {
            if p == q {
                0.0
            } else {
                x[self.x_start + pair_index(n, p, q)]
            }
        })
    }

    /// Program vector of a symmetric zero-diagonal `X` with slacks filled in.
    pub fn embed(&self, adj: &DMatrix<f64>) -> Vec<f64> {
        let n = self.n;
        let mut x = vec![0.0; self.program.dim()];
        for (p, q) in pairs(n) {
            let k = pair_index(n, p, q);
            x[self.x_start + k] = adj[(p, q)];
            x[self.slack_start + k] = 1.0 - adj[(p, q)];
        }
        let s = svec(&cvetkovic_lmi(adj));
        x[self.lmi.offset()..self.lmi.offset() + s.len()].copy_from_slice(&s);
        x
    }
}

pub fn build_cvetkovic_sdp(d: &DistanceMatrix) -> Result<CvetkovicSdp> {
    check_order(d)?;
    let n = d.n();
    let np = num_pairs(n);
    let gap = cycle_gap(n);
    let mut pb = ProgramBuilder::new();
    let x_start = pb.add_nonnegative(np).start;
    let slack_start = pb.add_nonnegative(np).start;
    let lmi = pb.add_psd(n);

    // Each edge variable and its upper-bound slack appear in exactly one
    // row, tied to the matrix entry, so the LP part of the Schur complement
    // stays diagonal. Degrees are stated on the matrix entries.
    for (p, q) in pairs(n) {
        let k = pair_index(n, p, q);
        pb.add_objective(x_start + k, d.get(p, q));
    }
    for b in 0..n {
        for a in 0..=b {
            if a == b {
                pb.add_equality(&[lmi.term(a, a, 1.0)], 2.0);
            } else {
                let k = pair_index(n, a, b);
                pb.add_equality(&[lmi.term(a, b, 1.0), (x_start + k, 1.0)], gap);
                pb.add_equality(&[lmi.term(a, b, -1.0), (slack_start + k, 1.0)], 1.0 - gap);
            }
        }
    }
    for a in 0..n {
        let terms: Vec<(usize, f64)> = (0..n).filter(|&b| b != a).map(|b| lmi.term(a, b, 1.0)).collect();
        pb.add_equality(&terms, (n - 1) as f64 * gap - 2.0);
    }
    Ok(CvetkovicSdp {
        program: pb.build()?,
        n,
        x_start,
        slack_start,
        lmi,
    })
}

#[derive(Clone, Debug)]
pub struct CvetkovicSolution {
    pub bound: BoundResult,
    pub x: DMatrix<f64>,
    pub report: SolveReport,
}

pub fn solve_cvetkovic(d: &DistanceMatrix, config: &SolverConfig) -> Result<CvetkovicSolution> {
    let start = Instant::now();
    let sdp = build_cvetkovic_sdp(d)?;
    let report = solve(sdp.program(), config)?;
    let x = sdp.extract(&report.x);
    let bound = BoundResult::new(
        Method::Cvetkovic,
        report.dual_objective,
        d.is_integral(),
        SolveSummary::from(&report),
        1,
        start.elapsed(),
    );
    Ok(CvetkovicSolution { bound, x, report })
}
