//! Matrix-tree counts and the connectivity minor `det((2I - X)[1:, 1:]) >= n`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Determinant by fraction-free (Bareiss) elimination. `None` on overflow.
fn bareiss_determinant(mut m: Vec<Vec<i128>>) -> Option<i128> {
    let n = m.len();
    if n == 0 {
        return Some(1);
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            let Some(swap) = (k + 1..n).find(|&r| m[r][k] != 0) else {
                return Some(0);
            };
            m.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = m[i][j]
                    .checked_mul(m[k][k])?
                    .checked_sub(m[i][k].checked_mul(m[k][j])?)?;
                // Exact by Sylvester's identity.
                m[i][j] = num / prev;
            }
            m[i][k] = 0;
        }
        prev = m[k][k];
    }
    m[n - 1][n - 1].checked_mul(sign)
}

/// Laplacian of a simple graph with row and column 0 deleted.
fn reduced_laplacian(adj: &DMatrix<i64>) -> Vec<Vec<i128>> {
    let n = adj.nrows();
    (1..n)
        .map(|i| {
            (1..n)
                .map(|j| {
                    if i == j {
                        adj.row(i).iter().map(|&v| v as i128).sum()
                    } else {
                        -(adj[(i, j)] as i128)
                    }
                })
                .collect()
        })
        .collect()
}

/// Number of spanning trees of the graph with 0/1 adjacency `adj`.
pub fn spanning_tree_minor(adj: &DMatrix<i64>) -> Result<i128> {
    let n = adj.nrows();
    if adj.ncols() != n || n == 0 {
        return Err(Error::invalid("adjacency must be square and nonempty"));
    }
    for i in 0..n {
        if adj[(i, i)] != 0 {
            return Err(Error::invalid(format!("loop at vertex {i}")));
        }
        for j in 0..n {
            let v = adj[(i, j)];
            if v != 0 && v != 1 {
                return Err(Error::invalid(format!("entry ({i}, {j}) = {v} is not 0/1")));
            }
            if v != adj[(j, i)] {
                return Err(Error::invalid(format!("entries ({i}, {j}) and ({j}, {i}) differ")));
            }
        }
    }
    bareiss_determinant(reduced_laplacian(adj)).ok_or(Error::Capacity {
        what: "exact spanning-tree count",
        n,
        limit: n - 1,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinorCheck {
    pub value: f64,
    pub pass: bool,
    /// Whether the value came from exact integer arithmetic.
    pub exact: bool,
}

/// Slack in `det >= n - MINOR_SLACK`.
pub const MINOR_SLACK: f64 = 1e-6;

/// `det((2I - X)` with row and column 0 deleted`)`, compared with `n`.
pub fn minor_inequality_check(x: &DMatrix<f64>) -> MinorCheck {
    let n = x.nrows();
    let integral = x.iter().all(|v| v.fract() == 0.0 && v.abs() < 1e15);
    if integral && n > 0 {
        let m: Vec<Vec<i128>> = (1..n)
            .map(|i| {
                (1..n)
                    .map(|j| {
                        if i == j {
                            2 - x[(i, j)] as i128
                        } else {
                            -(x[(i, j)] as i128)
                        }
                    })
                    .collect()
            })
            .collect();
        if let Some(det) = bareiss_determinant(m) {
            let value = det as f64;
            return MinorCheck {
                value,
                pass: value >= n as f64 - MINOR_SLACK,
                exact: true,
            };
        }
    }
    let reduced = DMatrix::from_fn(n.saturating_sub(1), n.saturating_sub(1), |i, j| {
        let v = -x[(i + 1, j + 1)];
        if i == j {
            2.0 + v
        } else {
            v
        }
    });
    let value = reduced.lu().determinant();
    MinorCheck {
        value,
        pass: value >= n as f64 - MINOR_SLACK,
        exact: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(n: usize) -> DMatrix<i64> {
        DMatrix::from_fn(n, n, |i, j| i64::from((i + 1) % n == j || (j + 1) % n == i))
    }

    #[test]
    fn cycles_have_n_trees() {
        for n in 3..=20 {
            assert_eq!(spanning_tree_minor(&cycle(n)).unwrap(), n as i128);
        }
    }

    #[test]
    fn complete_four_has_sixteen() {
        let k4 = DMatrix::from_fn(4, 4, |i, j| i64::from(i != j));
        assert_eq!(spanning_tree_minor(&k4).unwrap(), 16);
    }

    #[test]
    fn edgeless_graph_has_none() {
        assert_eq!(spanning_tree_minor(&DMatrix::zeros(3, 3)).unwrap(), 0);
    }

    #[test]
    fn non_binary_input_is_rejected() {
        let mut a = cycle(4);
        a[(0, 1)] = 2;
        a[(1, 0)] = 2;
        assert!(spanning_tree_minor(&a).is_err());
    }

    #[test]
    fn cycle_passes_minor_check_exactly() {
        let c = cycle(9).map(|v| v as f64);
        let r = minor_inequality_check(&c);
        assert!(r.exact && r.pass);
        assert_eq!(r.value, 9.0);
    }

    #[test]
    fn two_squares_fail() {
        let mut x = DMatrix::<f64>::zeros(8, 8);
        for base in [0, 4] {
            for k in 0..4 {
                let (p, q) = (base + k, base + (k + 1) % 4);
                x[(p, q)] = 1.0;
                x[(q, p)] = 1.0;
            }
        }
        let r = minor_inequality_check(&x);
        assert_eq!(r.value, 0.0);
        assert!(!r.pass);
    }

    #[test]
    fn fractional_path_matches_exact() {
        let c = cycle(7).map(|v| v as f64 * (1.0 - 1e-13) + 0.0);
        let r = minor_inequality_check(&c);
        assert!(!r.exact);
        assert!((r.value - 7.0).abs() < 1e-9);
    }
}
