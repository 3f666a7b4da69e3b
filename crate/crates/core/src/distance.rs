use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric, nonnegative edge lengths with a zero diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    entries: DMatrix<f64>,
}

impl DistanceMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        if entries.ncols() != n || n == 0 {
            return Err(Error::invalid(format!(
                "distance matrix must be square and nonempty, got {}x{}",
                n,
                entries.ncols()
            )));
        }
        for i in 0..n {
            if entries[(i, i)] != 0.0 {
                return Err(Error::invalid(format!("nonzero diagonal entry at {i}")));
            }
            for j in 0..n {
                let v = entries[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::invalid(format!(
                        "entry ({i}, {j}) = {v} is not a finite nonnegative length"
                    )));
                }
                if v != entries[(j, i)] {
                    return Err(Error::invalid(format!("entries ({i}, {j}) and ({j}, {i}) differ")));
                }
            }
        }
        Ok(DistanceMatrix { entries })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        Self::new(DMatrix::from_fn(
            n,
            n,
            |i, j| if i == j { 0.0 } else { f(i.min(j), i.max(j)) },
        ))
    }

    pub fn from_integers(rows: &[Vec<i64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("ragged distance rows"));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j] as f64))
    }

    /// `J - I`.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::from_fn(n, |_, _| 1.0)
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn is_integral(&self) -> bool {
        self.entries.iter().all(|v| v.fract() == 0.0)
    }

    /// `1/2 trace(D X)` for symmetric `X`.
    pub fn half_trace(&self, x: &DMatrix<f64>) -> f64 {
        0.5 * self.entries.component_mul(x).sum()
    }

    /// Length of the closed tour visiting `tour` in order.
    pub fn tour_length(&self, tour: &[usize]) -> f64 {
        let k = tour.len();
        (0..k).map(|i| self.get(tour[i], tour[(i + 1) % k])).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_asymmetry_diagonal_and_negatives() {
        assert!(DistanceMatrix::from_integers(&[vec![0, 1], vec![2, 0]]).is_err());
        assert!(DistanceMatrix::from_integers(&[vec![1, 1], vec![1, 0]]).is_err());
        assert!(DistanceMatrix::from_integers(&[vec![0, -1], vec![-1, 0]]).is_err());
        assert!(DistanceMatrix::new(DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn tour_length_and_half_trace_agree() {
        let d = DistanceMatrix::from_fn(4, |i, j| (i + j) as f64).unwrap();
        let tour = [0, 1, 2, 3];
        let mut x = DMatrix::zeros(4, 4);
        for i in 0..4 {
            let j = (i + 1) % 4;
            x[(i, j)] = 1.0;
            x[(j, i)] = 1.0;
        }
        assert_eq!(d.tour_length(&tour), d.half_trace(&x));
        assert!(d.is_integral());
    }
}
