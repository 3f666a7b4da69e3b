//! Certificates linking the relaxations: the nonnegative aggregation of the
//! scheme LMIs into the single-matrix LMI, and the extension test that asks
//! whether a given first block completes to a feasible scheme point.

use nalgebra::{DMatrix, SymmetricEigen};

use super::cvetkovic::{cvetkovic_lmi, cycle_gap};
use super::new_sdp::{assemble, NewSdpOptions};
use super::point::{lmi_coefficient, MultiBlockPoint};
use super::{pairs, MIN_ORDER};
use crate::conic::{solve, ProgramBuilder, SolveReport, SolverConfig};
use crate::error::{Error, Result};

/// Tolerance on the scheme invariants accepted by [`project_to_cvetkovic`].
pub const POINT_TOLERANCE: f64 = 1e-6;
/// Tolerance on the preconditions of [`extendability_check`].
pub const EXTENSION_INPUT_TOLERANCE: f64 = 1e-7;
/// Elastic optimum at or below which an extension is reported.
pub const EXTENSION_TOLERANCE: f64 = 1e-6;
const EXTENSION_SOLVE_TOLERANCE: f64 = 1e-7;

/// Weights `x_0..x_d` with `sum_i x_i L_i = 2I - X + (2 - 2cos(2 pi/n))(J - I)`
/// where `L_0 = I + sum_k X^(k)` and `L_i` is the `i`-th scheme LMI.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregationWeights {
    pub n: usize,
    pub x: Vec<f64>,
}

impl AggregationWeights {
    /// `A_ij = cos(2 pi i j / n)`, `i, j = 0..=d`.
    pub fn system_matrix(&self) -> DMatrix<f64> {
        let d = self.n / 2;
        DMatrix::from_fn(d + 1, d + 1, |i, j| {
            (std::f64::consts::TAU * ((i * j) % self.n) as f64 / self.n as f64).cos()
        })
    }

    /// `b = (2, 1 - 2cos(2 pi/n), 2 - 2cos(2 pi/n), ..)`.
    pub fn rhs(&self) -> Vec<f64> {
        let d = self.n / 2;
        let gap = cycle_gap(self.n);
        (0..=d)
            .map(|j| match j {
                0 => 2.0,
                1 => gap - 1.0,
                _ => gap,
            })
            .collect()
    }

    /// `||A x - b||_inf`.
    pub fn residual(&self) -> f64 {
        let ax = self.system_matrix() * nalgebra::DVector::from_column_slice(&self.x);
        ax.iter()
            .zip(self.rhs())
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }

    pub fn min_weight(&self) -> f64 {
        self.x.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Closed-form aggregation weights.
pub fn aggregation_weights(n: usize) -> Result<AggregationWeights> {
    if n < MIN_ORDER {
        return Err(Error::invalid(format!("aggregation needs n >= {MIN_ORDER}, got {n}")));
    }
    let d = n / 2;
    let c1 = (std::f64::consts::TAU / n as f64).cos();
    let scale = 4.0 / n as f64;
    let ci = |i: usize| (std::f64::consts::TAU * i as f64 / n as f64).cos();
    let x = (0..=d)
        .map(|i| {
            if i == 0 {
                let lead = if n % 2 == 1 { d as f64 } else { (n - 1) as f64 / 2.0 };
                scale * lead * (1.0 - c1)
            } else if n % 2 == 0 && i == d {
                scale * 0.5 * (c1 - ci(i))
            } else {
                scale * (c1 - ci(i))
            }
        })
        .collect();
    Ok(AggregationWeights { n, x })
}

/// First block of a scheme point checked against the single-matrix
/// relaxation.
#[derive(Clone, Debug)]
pub struct CvetkovicReport {
    pub x: DMatrix<f64>,
    pub row_sum_residual: f64,
    pub diagonal_residual: f64,
    /// Largest violation of `0 <= X <= J`.
    pub bound_violation: f64,
    pub lmi_min_eigenvalue: f64,
    /// `||sum_i x_i L_i - (2I - X + gap (J - I))||_max`.
    pub aggregation_residual: f64,
    /// Smallest eigenvalue of the weighted sum of the scheme LMIs.
    pub aggregated_min_eigenvalue: f64,
    pub weights: AggregationWeights,
}

impl CvetkovicReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.row_sum_residual <= tol
            && self.diagonal_residual <= tol
            && self.bound_violation <= tol
            && self.lmi_min_eigenvalue >= -tol
    }
}

pub fn project_to_cvetkovic(point: &MultiBlockPoint<f64>) -> Result<CvetkovicReport> {
    let n = point.n();
    let weights = aggregation_weights(n)?;
    let viol = point.violation().max();
    if viol > POINT_TOLERANCE {
        return Err(Error::invalid(format!(
            "point violates the scheme constraints by {viol:.3e} > {POINT_TOLERANCE:e}"
        )));
    }
    let x = point.block(1).clone();
    let mut row_sum_residual = 0.0f64;
    let mut diagonal_residual = 0.0f64;
    let mut bound_violation = 0.0f64;
    for i in 0..n {
        row_sum_residual = row_sum_residual.max((x.row(i).sum() - 2.0).abs());
        diagonal_residual = diagonal_residual.max(x[(i, i)].abs());
        for j in 0..n {
            if i != j {
                bound_violation = bound_violation.max(-x[(i, j)]).max(x[(i, j)] - 1.0);
            }
        }
    }
    let target = cvetkovic_lmi(&x);
    let lmi_min_eigenvalue = SymmetricEigen::new(target.clone()).eigenvalues.min();

    let mut total = DMatrix::<f64>::identity(n, n);
    for k in 1..=point.d() {
        total += point.block(k);
    }
    total *= weights.x[0];
    for i in 1..=point.d() {
        total += point.lmi_matrix(i) * weights.x[i];
    }
    let aggregation_residual = (&total - &target).amax();
    let aggregated_min_eigenvalue = SymmetricEigen::new(total).eigenvalues.min();
    Ok(CvetkovicReport {
        x,
        row_sum_residual,
        diagonal_residual,
        bound_violation,
        lmi_min_eigenvalue,
        aggregation_residual,
        aggregated_min_eigenvalue,
        weights,
    })
}

#[derive(Clone, Debug)]
pub enum Extendability {
    /// Some scheme point has the given first block.
    Feasible {
        witness: MultiBlockPoint<f64>,
        report: SolveReport,
    },
    /// No scheme point has it; `distance` is the optimal `l1` distance from
    /// the given block to the first blocks of scheme points.
    Infeasible { distance: f64, report: SolveReport },
}

impl Extendability {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Extendability::Feasible { .. })
    }

    pub fn report(&self) -> &SolveReport {
        match self {
            Extendability::Feasible { report, .. } | Extendability::Infeasible { report, .. } => report,
        }
    }
}

fn check_extension_input(xbar: &DMatrix<f64>) -> Result<()> {
    let n = xbar.nrows();
    if xbar.ncols() != n || n < MIN_ORDER {
        return Err(Error::invalid(format!(
            "expected a square matrix of order >= {MIN_ORDER}"
        )));
    }
    let tol = EXTENSION_INPUT_TOLERANCE;
    for i in 0..n {
        if xbar[(i, i)].abs() > tol {
            return Err(Error::invalid(format!("diagonal entry {i} is nonzero")));
        }
        if (xbar.row(i).sum() - 2.0).abs() > tol {
            return Err(Error::invalid(format!("row {i} does not sum to 2")));
        }
        for j in 0..n {
            let v = xbar[(i, j)];
            if !v.is_finite() || v < -tol || v > 1.0 + tol {
                return Err(Error::invalid(format!("entry ({i}, {j}) = {v} outside [0, 1]")));
            }
            if (v - xbar[(j, i)]).abs() > tol {
                return Err(Error::invalid(format!("entries ({i}, {j}) and ({j}, {i}) differ")));
            }
        }
    }
    Ok(())
}

/// Decides whether `xbar` is the first block of a scheme point by
/// minimizing `sum |X^(1)_pq - xbar_pq|` over the scheme relaxation.
pub fn extendability_check(xbar: &DMatrix<f64>, config: &SolverConfig) -> Result<Extendability> {
    check_extension_input(xbar)?;
    let n = xbar.nrows();
    let mut pb = ProgramBuilder::new();
    let layout = assemble(&mut pb, n, NewSdpOptions::default());
    let np = super::num_pairs(n);
    let over = pb.add_nonnegative(np).start;
    let under = pb.add_nonnegative(np).start;
    for (idx, (p, q)) in pairs(n).enumerate() {
        pb.add_objective(over + idx, 1.0);
        pb.add_objective(under + idx, 1.0);
        pb.add_equality(
            &[(layout.x_col(1, p, q), 1.0), (over + idx, -1.0), (under + idx, 1.0)],
            xbar[(p, q)],
        );
    }
    let program = pb.build()?;
    // The verdict only needs the distance to EXTENSION_TOLERANCE; the
    // optimal face is highly degenerate when xbar does extend, so the
    // solve stops at a correspondingly looser accuracy.
    let local = SolverConfig {
        gap_tolerance: config.gap_tolerance.max(EXTENSION_SOLVE_TOLERANCE),
        feasibility_tolerance: config.feasibility_tolerance.max(EXTENSION_SOLVE_TOLERANCE),
        ..*config
    };
    let report = solve(&program, &local)?;
    let accurate = report.gap.max(report.primal_residual).max(report.dual_residual) <= EXTENSION_TOLERANCE;
    if !(report.is_optimal() || accurate) {
        return Err(Error::NotConverged {
            status: report.status,
            detail: "extension program".into(),
        });
    }
    let distance = report.primal_objective.max(0.0);
    if distance <= EXTENSION_TOLERANCE {
        let witness = layout.extract(&report.x);
        Ok(Extendability::Feasible { witness, report })
    } else {
        Ok(Extendability::Infeasible { distance, report })
    }
}

/// `sum_i x_i L_i` is linear in the point; exposed for tests of the
/// aggregation identity on arbitrary blocks.
pub fn aggregate_lmis(point: &MultiBlockPoint<f64>, weights: &AggregationWeights) -> DMatrix<f64> {
    let n = point.n();
    let mut total = DMatrix::<f64>::zeros(n, n);
    for i in 0..=point.d() {
        let mut l = DMatrix::<f64>::identity(n, n);
        for k in 1..=point.d() {
            l += point.block(k) * if i == 0 { 1.0 } else { lmi_coefficient(n, i, k) };
        }
        total += l * weights.x[i];
    }
    total
}
