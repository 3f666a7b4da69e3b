use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `cos(2 pi i k / n)`, with values below `1e-14` in magnitude snapped to
/// zero so that structurally vanishing coefficients stay exact.
pub fn lmi_coefficient(n: usize, i: usize, k: usize) -> f64 {
    let c = (std::f64::consts::TAU * ((i * k) % n) as f64 / n as f64).cos();
    if c.abs() < 1e-14 {
        0.0
    } else {
        c
    }
}

/// Matrix variables `X^(1), .., X^(d)` of the scheme relaxation.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiBlockPoint<T = f64> {
    n: usize,
    blocks: Vec<DMatrix<T>>,
}

impl<T: Scalar> MultiBlockPoint<T> {
    /// Requires `floor(n/2)` symmetric blocks of order `n`.
    pub fn new(n: usize, blocks: Vec<DMatrix<T>>) -> Result<Self> {
        if blocks.len() != n / 2 {
            return Err(Error::invalid(format!(
                "expected {} blocks, got {}",
                n / 2,
                blocks.len()
            )));
        }
        for (k, b) in blocks.iter().enumerate() {
            if b.nrows() != n || b.ncols() != n {
                return Err(Error::invalid(format!("block {} is not {n}x{n}", k + 1)));
            }
            if b != &b.transpose() {
                return Err(Error::invalid(format!("block {} is not symmetric", k + 1)));
            }
        }
        Ok(MultiBlockPoint { n, blocks })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.n / 2
    }

    /// `X^(k)` for `k` in `1..=d`.
    pub fn block(&self, k: usize) -> &DMatrix<T> {
        &self.blocks[k - 1]
    }

    pub fn blocks(&self) -> &[DMatrix<T>] {
        &self.blocks
    }

    /// Row sum of `X^(k)` at a feasible point.
    pub fn row_sum_target(&self, k: usize) -> usize {
        if 2 * k == self.n {
            1
        } else {
            2
        }
    }

    pub fn to_f64(&self) -> MultiBlockPoint<f64> {
        MultiBlockPoint {
            n: self.n,
            blocks: self.blocks.iter().map(|b| b.map(|v| v.to_f64_lossy())).collect(),
        }
    }
}

/// Largest violation of each constraint family of the scheme relaxation.
#[derive(Clone, Debug, PartialEq)]
pub struct PointViolation {
    pub nonnegativity: f64,
    pub sum_to_complement: f64,
    pub diagonal: f64,
    pub row_sums: f64,
    /// `max(0, -lambda_min)` of the `i`-th LMI, `i = 1..=d`.
    pub lmi: Vec<f64>,
}

impl PointViolation {
    pub fn max(&self) -> f64 {
        self.lmi.iter().copied().fold(
            self.nonnegativity
                .max(self.sum_to_complement)
                .max(self.diagonal)
                .max(self.row_sums),
            f64::max,
        )
    }
}

impl MultiBlockPoint<f64> {
    /// `I + sum_k cos(2 pi i k / n) X^(k)`.
    pub fn lmi_matrix(&self, i: usize) -> DMatrix<f64> {
        let mut m = DMatrix::identity(self.n, self.n);
        for k in 1..=self.d() {
            m += self.block(k) * lmi_coefficient(self.n, i, k);
        }
        m
    }

    /// `1/2 trace(D X^(1))`.
    pub fn objective(&self, d: &crate::distance::DistanceMatrix) -> f64 {
        d.half_trace(self.block(1))
    }

    pub fn violation(&self) -> PointViolation {
        let n = self.n;
        let mut nonneg = 0.0f64;
        let mut diag = 0.0f64;
        let mut rows = 0.0f64;
        let mut sum = DMatrix::<f64>::zeros(n, n);
        for k in 1..=self.d() {
            let b = self.block(k);
            sum += b;
            let target = self.row_sum_target(k) as f64;
            for i in 0..n {
                diag = diag.max(b[(i, i)].abs());
                rows = rows.max((b.row(i).sum() - target).abs());
                for j in 0..n {
                    nonneg = nonneg.max(-b[(i, j)]);
                }
            }
        }
        let complement = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 });
        let lmi = (1..=self.d())
            .map(|i| {
                let e = SymmetricEigen::new(self.lmi_matrix(i)).eigenvalues.min();
                (-e).max(0.0)
            })
            .collect();
        PointViolation {
            nonnegativity: nonneg,
            sum_to_complement: (sum - complement).amax(),
            diagonal: diag,
            row_sums: rows,
            lmi,
        }
    }
}
