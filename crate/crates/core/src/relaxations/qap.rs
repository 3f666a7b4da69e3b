//! Lifted assignment relaxation over `Y ~ vec(P) vec(P)^T`.
//!
//! The bordered matrix `[1 y^T; y Y]` is written as `V R V^T` with
//! `V = [1 0; (e (x) e)/n  W (x) W]`, `W = [I; -e^T]`, which parametrizes
//! exactly the symmetric matrices whose lifted row and column sums match a
//! permutation. The trace equality `tr(Y) - 2e^T y = -n` forces the
//! bordered matrix onto this face, and on the face it holds identically,
//! so it is not stated again. Vectorization is column-major: entry `u = i + n j`
//! of `y` is city `i` at position `j`.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::check_order;
use crate::bound::{BoundResult, Method, SolveSummary};
use crate::circulant::scheme_matrices;
use crate::conic::{solve, svec, ConicProgram, ProgramBuilder, PsdBlock, SolveReport, SolverConfig};
use crate::distance::DistanceMatrix;
use crate::error::{Error, Result};

pub const QAP_DEFAULT_CAP: usize = 10;

/// Lifted point `(Y, y)` in original coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftedPoint {
    pub n: usize,
    pub y: DVector<f64>,
    pub big_y: DMatrix<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LiftedViolation {
    pub bordered_psd: f64,
    pub nonnegativity: f64,
    pub diagonal: f64,
    pub gangster: f64,
    pub trace: f64,
}

impl LiftedViolation {
    pub fn max(&self) -> f64 {
        self.bordered_psd
            .max(self.nonnegativity)
            .max(self.diagonal)
            .max(self.gangster)
            .max(self.trace)
    }
}

fn is_gangster(n: usize, u: usize, v: usize) -> bool {
    let (iu, ju) = (u % n, u / n);
    let (iv, jv) = (v % n, v / n);
    u != v && (iu == iv || ju == jv)
}

impl LiftedPoint {
    /// `vec(P) vec(P)^T` for the tour visiting `tour[j]` at position `j`.
    pub fn from_tour(tour: &[usize]) -> Self {
        let n = tour.len();
        let mut y = DVector::zeros(n * n);
        for (j, &i) in tour.iter().enumerate() {
            y[i + n * j] = 1.0;
        }
        let big_y = &y * y.transpose();
        LiftedPoint { n, y, big_y }
    }

    /// `1/2 tr((C_1 (x) D) Y)`.
    pub fn objective(&self, d: &DistanceMatrix) -> f64 {
        let n = self.n;
        let c1 = scheme_matrices::<f64>(n).expect("order checked").matrix(1).clone();
        let mut total = 0.0;
        for u in 0..n * n {
            for v in 0..n * n {
                total += c1[(u / n, v / n)] * d.get(u % n, v % n) * self.big_y[(u, v)];
            }
        }
        0.5 * total
    }

    pub fn violation(&self) -> LiftedViolation {
        let n = self.n;
        let nn = n * n;
        let bordered = DMatrix::from_fn(nn + 1, nn + 1, |a, b| match (a, b) {
            (0, 0) => 1.0,
            (0, v) => self.y[v - 1],
            (u, 0) => self.y[u - 1],
            (u, v) => self.big_y[(u - 1, v - 1)],
        });
        let emin = SymmetricEigen::new(bordered).eigenvalues.min();
        let mut nonneg = 0.0f64;
        let mut gangster = 0.0f64;
        let mut diagonal = 0.0f64;
        for u in 0..nn {
            diagonal = diagonal.max((self.big_y[(u, u)] - self.y[u]).abs());
            for v in 0..nn {
                nonneg = nonneg.max(-self.big_y[(u, v)]);
                if is_gangster(n, u, v) {
                    gangster = gangster.max(self.big_y[(u, v)].abs());
                }
            }
        }
        let trace = (self.big_y.trace() - 2.0 * self.y.sum() + n as f64).abs();
        LiftedViolation {
            bordered_psd: (-emin).max(0.0),
            nonnegativity: nonneg,
            diagonal,
            gangster,
            trace,
        }
    }
}

/// Sparse rows of the `(n^2 + 1) x ((n-1)^2 + 1)` face basis.
fn face_basis_rows(n: usize) -> Vec<Vec<(usize, f64)>> {
    let m = n - 1;
    // Rows of W = [I; -e^T].
    let w_row = |i: usize| -> Vec<(usize, f64)> {
        if i < m {
            vec![(i, 1.0)]
        } else {
            (0..m).map(|a| (a, -1.0)).collect()
        }
    };
    let mut rows = vec![vec![(0, 1.0)]];
    for j in 0..n {
        for i in 0..n {
            let mut row = vec![(0, 1.0 / n as f64)];
            for &(aj, vj) in &w_row(j) {
                for &(ai, vi) in &w_row(i) {
                    row.push((1 + ai + m * aj, vi * vj));
                }
            }
            rows.push(row);
        }
    }
    rows
}

/// Lifted relaxation assembled over the face.
#[derive(Clone, Debug)]
pub struct QapSdp {
    program: ConicProgram,
    n: usize,
    block: PsdBlock,
    basis: Vec<Vec<(usize, f64)>>,
}

impl QapSdp {
    pub fn program(&self) -> &ConicProgram {
        &self.program
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Order of the reduced PSD variable.
    pub fn reduced_order(&self) -> usize {
        self.block.order()
    }

    fn basis_matrix(&self) -> DMatrix<f64> {
        let mut v = DMatrix::zeros(self.basis.len(), self.block.order());
        for (r, row) in self.basis.iter().enumerate() {
            for &(c, val) in row {
                v[(r, c)] = val;
            }
        }
        v
    }

    pub fn lift(&self, x: &[f64]) -> LiftedPoint {
        let v = self.basis_matrix();
        let full = &v * self.block.extract(x) * v.transpose();
        let nn = self.n * self.n;
        LiftedPoint {
            n: self.n,
            y: DVector::from_fn(nn, |u, _| full[(u + 1, 0)]),
            big_y: full.view((1, 1), (nn, nn)).into_owned(),
        }
    }

    /// Program vector of `vec(P) vec(P)^T` for a tour.
    pub fn embed_tour(&self, tour: &[usize]) -> Vec<f64> {
        let n = self.n;
        let m = n - 1;
        let lifted = LiftedPoint::from_tour(tour);
        // Left inverse of the basis: keep the border and the leading block of P.
        let mut r = DVector::zeros(self.block.order());
        r[0] = 1.0;
        for aj in 0..m {
            for ai in 0..m {
                r[1 + ai + m * aj] = lifted.y[ai + n * aj] - 1.0 / n as f64;
            }
        }
        let mut x = vec![0.0; self.program.dim()];
        let s = svec(&(&r * r.transpose()));
        x[self.block.offset()..self.block.offset() + s.len()].copy_from_slice(&s);
        let nn = n * n;
        let mut next = 0;
        for u in 0..nn {
            for v in u..nn {
                if !is_gangster(n, u, v) {
                    x[next] = lifted.big_y[(u, v)];
                    next += 1;
                }
            }
        }
        x
    }
}

pub fn build_qap_sdp(d: &DistanceMatrix) -> Result<QapSdp> {
    build_qap_sdp_with_cap(d, QAP_DEFAULT_CAP)
}

pub fn build_qap_sdp_with_cap(d: &DistanceMatrix, cap: usize) -> Result<QapSdp> {
    check_order(d)?;
    let n = d.n();
    if n > cap {
        return Err(Error::Capacity {
            what: "lifted assignment relaxation",
            n,
            limit: cap,
        });
    }
    let nn = n * n;
    let basis = face_basis_rows(n);
    let c1 = scheme_matrices::<f64>(n)?.matrix(1).clone();

    let mut pb = ProgramBuilder::new();
    let free_entries: Vec<(usize, usize)> = (0..nn)
        .flat_map(|u| (u..nn).map(move |v| (u, v)))
        .filter(|&(u, v)| !is_gangster(n, u, v))
        .collect();
    let w_start = pb.add_nonnegative(free_entries.len()).start;
    let block = pb.add_psd((n - 1) * (n - 1) + 1);

    // Linear functional of R giving entry (s, t) of the bordered matrix;
    // off-diagonal keys collect both (a, b) and (b, a).
    let entry = |s: usize, t: usize, scale: f64, acc: &mut BTreeMap<(usize, usize), f64>| {
        for &(a, va) in &basis[s] {
            for &(b, vb) in &basis[t] {
                let key = if a <= b { (a, b) } else { (b, a) };
                *acc.entry(key).or_insert(0.0) += scale * va * vb;
            }
        }
    };
    let emit = |pb: &mut ProgramBuilder, acc: BTreeMap<(usize, usize), f64>, extra: &[(usize, f64)], rhs: f64| {
        let mut terms: Vec<(usize, f64)> = acc
            .into_iter()
            .filter(|&(_, v)| v.abs() > 1e-15)
            .map(|((a, b), v)| block.term(a, b, v))
            .collect();
        terms.extend_from_slice(extra);
        pb.add_equality(&terms, rhs);
    };

    let mut acc = BTreeMap::new();
    entry(0, 0, 1.0, &mut acc);
    emit(&mut pb, acc, &[], 1.0);

    for u in 0..nn {
        let mut acc = BTreeMap::new();
        entry(1 + u, 1 + u, 1.0, &mut acc);
        entry(0, 1 + u, -1.0, &mut acc);
        emit(&mut pb, acc, &[], 0.0);
    }
    for u in 0..nn {
        for v in u + 1..nn {
            if is_gangster(n, u, v) {
                let mut acc = BTreeMap::new();
                entry(1 + u, 1 + v, 1.0, &mut acc);
                emit(&mut pb, acc, &[], 0.0);
            }
        }
    }
    for (idx, &(u, v)) in free_entries.iter().enumerate() {
        let mut acc = BTreeMap::new();
        entry(1 + u, 1 + v, 1.0, &mut acc);
        emit(&mut pb, acc, &[(w_start + idx, -1.0)], 0.0);
        if u != v {
            let coef = c1[(u / n, v / n)] * d.get(u % n, v % n);
            if coef != 0.0 {
                pb.add_objective(w_start + idx, coef);
            }
        }
    }
    Ok(QapSdp {
        program: pb.build()?,
        n,
        block,
        basis,
    })
}

pub fn solve_qap_sdp(d: &DistanceMatrix, config: &SolverConfig) -> Result<(BoundResult, LiftedPoint, SolveReport)> {
    let start = Instant::now();
    let sdp = build_qap_sdp(d)?;
    let report = solve(sdp.program(), config)?;
    let lifted = sdp.lift(&report.x);
    let bound = BoundResult::new(
        Method::QapSdp,
        report.dual_objective,
        d.is_integral(),
        SolveSummary::from(&report),
        1,
        start.elapsed(),
    );
    Ok((bound, lifted, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tour_embedding_is_feasible() {
        let d = DistanceMatrix::from_fn(5, |i, j| (i + 2 * j) as f64).unwrap();
        let sdp = build_qap_sdp(&d).unwrap();
        let tour = [0, 2, 4, 1, 3];
        let x = sdp.embed_tour(&tour);
        let r = sdp.program().residuals(&x).unwrap();
        assert!(r.equality_inf_norm() < 1e-12, "{}", r.equality_inf_norm());
        assert!(r.max_cone_violation() < 1e-12);
        let obj: f64 = sdp.program().objective().iter().zip(&x).map(|(c, v)| c * v).sum();
        assert!((obj - d.tour_length(&tour)).abs() < 1e-12);
        let lifted = sdp.lift(&x);
        assert!((&lifted.big_y - LiftedPoint::from_tour(&tour).big_y).amax() < 1e-12);
        assert!(lifted.violation().max() < 1e-10);
    }

    #[test]
    fn uniform_five_gives_five() {
        let (b, lifted, _) = solve_qap_sdp(&DistanceMatrix::uniform(5).unwrap(), &SolverConfig::default()).unwrap();
        assert!(b.is_optimal());
        assert!((b.raw - 5.0).abs() < 1e-6);
        assert!(lifted.violation().max() < 1e-6);
    }

    #[test]
    fn cap_is_enforced() {
        let d = DistanceMatrix::uniform(7).unwrap();
        assert!(matches!(
            build_qap_sdp_with_cap(&d, 6),
            Err(Error::Capacity { limit: 6, .. })
        ));
    }
}
