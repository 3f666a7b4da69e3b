use std::fmt::Write as _;
use std::ops::Range;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::sparse::SparseMatrix;
use crate::error::{Error, Result};

/// One segment of the variable vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cone {
    Free(usize),
    Nonnegative(usize),
    /// Symmetric matrix of the given order, stored as [`svec`].
    Psd(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Free(k) | Cone::Nonnegative(k) => k,
            Cone::Psd(order) => svec_len(order),
        }
    }

    /// Contribution to the barrier degree.
    pub fn degree(&self) -> usize {
        match *self {
            Cone::Free(_) => 0,
            Cone::Nonnegative(k) | Cone::Psd(k) => k,
        }
    }
}

pub fn svec_len(order: usize) -> usize {
    order * (order + 1) / 2
}

/// Position of entry `(i, j)` in the scaled vectorization; order-symmetric.
pub fn svec_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    j * (j + 1) / 2 + i
}

/// Upper triangle column by column, off-diagonal entries scaled by `sqrt(2)`
/// so that `svec(A) . svec(B) = trace(A B)`.
pub fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut v = Vec::with_capacity(svec_len(n));
    for j in 0..n {
        for i in 0..=j {
            if i == j {
                v.push(m[(i, i)]);
            } else {
                v.push(0.5 * (m[(i, j)] + m[(j, i)]) * std::f64::consts::SQRT_2);
            }
        }
    }
    v
}

/// Inverse of [`svec`].
pub fn smat(order: usize, v: &[f64]) -> DMatrix<f64> {
    assert_eq!(v.len(), svec_len(order));
    let mut m = DMatrix::zeros(order, order);
    let mut k = 0;
    for j in 0..order {
        for i in 0..=j {
            if i == j {
                m[(i, i)] = v[k];
            } else {
                let x = v[k] * std::f64::consts::FRAC_1_SQRT_2;
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
            k += 1;
        }
    }
    m
}

/// Coefficient on an svec coordinate that reproduces `coef * X[i][j]`.
pub fn entry_coefficient(i: usize, j: usize, coef: f64) -> f64 {
    if i == j {
        coef
    } else {
        coef * std::f64::consts::FRAC_1_SQRT_2
    }
}

/// `minimize c.x  subject to  A x = b,  x in K`, with `K` the product of
/// the listed cones in order.
#[derive(Clone, Debug)]
pub struct ConicProgram {
    objective: Vec<f64>,
    a: SparseMatrix,
    b: Vec<f64>,
    cones: Vec<Cone>,
}

impl ConicProgram {
    pub fn new(objective: Vec<f64>, a: SparseMatrix, b: Vec<f64>, cones: Vec<Cone>) -> Result<Self> {
        let dim: usize = cones.iter().map(Cone::dim).sum();
        if objective.len() != dim || a.ncols() != dim {
            return Err(Error::invalid(format!(
                "cone dimension {dim}, objective length {}, constraint columns {}",
                objective.len(),
                a.ncols()
            )));
        }
        if b.len() != a.nrows() {
            return Err(Error::invalid(format!(
                "{} constraint rows but right-hand side of length {}",
                a.nrows(),
                b.len()
            )));
        }
        if objective.iter().chain(&b).any(|v| !v.is_finite()) || a.triplets().any(|t| !t.2.is_finite()) {
            return Err(Error::invalid("non-finite program data"));
        }
        Ok(ConicProgram { objective, a, b, cones })
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &SparseMatrix {
        &self.a
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    pub fn cones(&self) -> &[Cone] {
        &self.cones
    }

    pub fn dim(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.b.len()
    }

    /// Column range of each cone segment.
    pub fn segments(&self) -> Vec<Range<usize>> {
        let mut start = 0;
        self.cones
            .iter()
            .map(|c| {
                let r = start..start + c.dim();
                start = r.end;
                r
            })
            .collect()
    }

    pub fn residuals(&self, point: &[f64]) -> Result<ResidualReport> {
        if point.len() != self.dim() {
            return Err(Error::invalid(format!(
                "point of length {} for a program of dimension {}",
                point.len(),
                self.dim()
            )));
        }
        let ax = self.a.mul_vec(point);
        let equality: Vec<f64> = ax.iter().zip(&self.b).map(|(l, r)| l - r).collect();
        let cone_violation = self
            .cones
            .iter()
            .zip(self.segments())
            .map(|(cone, range)| cone_violation(cone, &point[range]))
            .collect();
        Ok(ResidualReport {
            equality,
            cone_violation,
        })
    }

    /// Plain-text sparse dump, readable by [`ConicProgram::from_dump`].
    pub fn to_dump(&self) -> String {
        let mut out = String::new();
        let cones: Vec<String> = self
            .cones
            .iter()
            .map(|c| match c {
                Cone::Free(k) => format!("free:{k}"),
                Cone::Nonnegative(k) => format!("nonneg:{k}"),
                Cone::Psd(k) => format!("psd:{k}"),
            })
            .collect();
        writeln!(out, "conic-program 1").unwrap();
        writeln!(out, "cones {}", cones.join(" ")).unwrap();
        writeln!(out, "rows {} cols {}", self.num_constraints(), self.dim()).unwrap();
        writeln!(out, "objective").unwrap();
        for (j, v) in self.objective.iter().enumerate() {
            if *v != 0.0 {
                writeln!(out, "{j} {v:e}").unwrap();
            }
        }
        writeln!(out, "constraints").unwrap();
        for (r, c, v) in self.a.triplets() {
            writeln!(out, "{r} {c} {v:e}").unwrap();
        }
        writeln!(out, "rhs").unwrap();
        for (r, v) in self.b.iter().enumerate() {
            if *v != 0.0 {
                writeln!(out, "{r} {v:e}").unwrap();
            }
        }
        out
    }

    pub fn from_dump(text: &str) -> Result<Self> {
        let bad = |line: usize, what: &str| Error::invalid(format!("dump line {}: {what}", line + 1));
        let mut lines = text.lines().enumerate();
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::invalid(format!("dump ended before {what}")))
        };

        let (i, header) = next("header")?;
        if header.trim() != "conic-program 1" {
            return Err(bad(i, "unknown header"));
        }
        let (i, cone_line) = next("cone list")?;
        let mut cones = Vec::new();
        for tok in cone_line.split_whitespace().skip(1) {
            let (kind, k) = tok.split_once(':').ok_or_else(|| bad(i, "cone token"))?;
            let k: usize = k.parse().map_err(|_| bad(i, "cone size"))?;
            cones.push(match kind {
                "free" => Cone::Free(k),
                "nonneg" => Cone::Nonnegative(k),
                "psd" => Cone::Psd(k),
                _ => return Err(bad(i, "cone kind")),
            });
        }
        let (i, dims) = next("dimensions")?;
        let dims: Vec<&str> = dims.split_whitespace().collect();
        if dims.len() != 4 {
            return Err(bad(i, "dimensions"));
        }
        let m: usize = dims[1].parse().map_err(|_| bad(i, "row count"))?;
        let n: usize = dims[3].parse().map_err(|_| bad(i, "column count"))?;

        let mut objective = vec![0.0; n];
        let mut triplets = Vec::new();
        let mut b = vec![0.0; m];
        let mut section = "";
        for (i, line) in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks.as_slice() {
                [] => {}
                [s @ ("objective" | "constraints" | "rhs")] => section = s,
                [j, v] if section == "objective" || section == "rhs" => {
                    let j: usize = j.parse().map_err(|_| bad(i, "index"))?;
                    let v: f64 = v.parse().map_err(|_| bad(i, "value"))?;
                    let target = if section == "objective" { &mut objective } else { &mut b };
                    *target.get_mut(j).ok_or_else(|| bad(i, "index out of range"))? = v;
                }
                [r, c, v] if section == "constraints" => {
                    let r: usize = r.parse().map_err(|_| bad(i, "row"))?;
                    let c: usize = c.parse().map_err(|_| bad(i, "column"))?;
                    let v: f64 = v.parse().map_err(|_| bad(i, "value"))?;
                    if r >= m || c >= n {
                        return Err(bad(i, "entry out of range"));
                    }
                    triplets.push((r, c, v));
                }
                _ => return Err(bad(i, "unexpected line")),
            }
        }
        ConicProgram::new(objective, SparseMatrix::from_triplets(m, n, &triplets), b, cones)
    }
}

fn cone_violation(cone: &Cone, x: &[f64]) -> f64 {
    match *cone {
        Cone::Free(_) => 0.0,
        Cone::Nonnegative(_) => x.iter().fold(0.0, |acc: f64, &v| acc.max(-v)),
        Cone::Psd(order) => {
            if order == 0 {
                return 0.0;
            }
            let eig = SymmetricEigen::new(smat(order, x));
            (-eig.eigenvalues.min()).max(0.0)
        }
    }
}

/// Equality residual `A x - b` and, per cone segment, the distance below
/// the cone boundary (negated minimum entry or minimum eigenvalue, floored
/// at zero).
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    pub equality: Vec<f64>,
    pub cone_violation: Vec<f64>,
}

impl ResidualReport {
    pub fn equality_inf_norm(&self) -> f64 {
        self.equality.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn max_cone_violation(&self) -> f64 {
        self.cone_violation.iter().fold(0.0, |acc: f64, &v| acc.max(v))
    }
}

/// Handle to a PSD block allocated by a [`ProgramBuilder`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PsdBlock {
    offset: usize,
    order: usize,
}

impl PsdBlock {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn column(&self, i: usize, j: usize) -> usize {
        assert!(i < self.order && j < self.order);
        self.offset + svec_index(i, j)
    }

    /// Column and coefficient reproducing `coef * X[i][j]`.
    pub fn term(&self, i: usize, j: usize, coef: f64) -> (usize, f64) {
        (self.column(i, j), entry_coefficient(i, j, coef))
    }

    pub fn extract(&self, x: &[f64]) -> DMatrix<f64> {
        smat(self.order, &x[self.offset..self.offset + svec_len(self.order)])
    }
}

/// Incremental assembly of a [`ConicProgram`].
#[derive(Clone, Debug, Default)]
pub struct ProgramBuilder {
    cones: Vec<Cone>,
    dim: usize,
    objective: Vec<(usize, f64)>,
    triplets: Vec<(usize, usize, f64)>,
    rhs: Vec<f64>,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, cone: Cone) -> usize {
        let start = self.dim;
        self.dim += cone.dim();
        self.cones.push(cone);
        start
    }

    pub fn add_free(&mut self, k: usize) -> Range<usize> {
        let s = self.push(Cone::Free(k));
        s..s + k
    }

    pub fn add_nonnegative(&mut self, k: usize) -> Range<usize> {
        let s = self.push(Cone::Nonnegative(k));
        s..s + k
    }

    pub fn add_psd(&mut self, order: usize) -> PsdBlock {
        let offset = self.push(Cone::Psd(order));
        PsdBlock { offset, order }
    }

    pub fn add_objective(&mut self, col: usize, coef: f64) {
        self.objective.push((col, coef));
    }

    /// Adds `sum coef * x[col] = rhs`; returns the row index.
    pub fn add_equality(&mut self, terms: &[(usize, f64)], rhs: f64) -> usize {
        let row = self.rhs.len();
        self.triplets.extend(terms.iter().map(|&(c, v)| (row, c, v)));
        self.rhs.push(rhs);
        row
    }

    pub fn num_constraints(&self) -> usize {
        self.rhs.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn build(self) -> Result<ConicProgram> {
        let mut c = vec![0.0; self.dim];
        for (col, v) in self.objective {
            c[col] += v;
        }
        let a = SparseMatrix::from_triplets(self.rhs.len(), self.dim, &self.triplets);
        ConicProgram::new(c, a, self.rhs, self.cones)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svec_round_trip_and_inner_product() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 5.0, 3.0, 5.0, 6.0]);
        let b = DMatrix::from_row_slice(3, 3, &[0.5, -1.0, 0.0, -1.0, 2.0, 1.5, 0.0, 1.5, -3.0]);
        assert!((smat(3, &svec(&a)) - &a).amax() < 1e-14);
        let dot: f64 = svec(&a).iter().zip(svec(&b)).map(|(x, y)| x * y).sum();
        assert!((dot - (&a * &b).trace()).abs() < 1e-12);
    }

    #[test]
    fn svec_index_is_column_major_upper() {
        assert_eq!(svec_index(0, 0), 0);
        assert_eq!(svec_index(0, 1), 1);
        assert_eq!(svec_index(1, 1), 2);
        assert_eq!(svec_index(2, 0), 3);
    }

    #[test]
    fn zero_point_residual_against_lower_bound() {
        let mut pb = ProgramBuilder::new();
        let x = pb.add_nonnegative(2);
        pb.add_objective(x.start, 1.0);
        pb.add_equality(&[(x.start, 1.0), (x.start + 1, -1.0)], 1.0);
        let prog = pb.build().unwrap();
        let r = prog.residuals(&[0.0, 0.0]).unwrap();
        assert_eq!(r.equality_inf_norm(), 1.0);
        assert_eq!(r.max_cone_violation(), 0.0);
        assert!(prog.residuals(&[0.0]).is_err());
    }

    #[test]
    fn psd_violation_is_negated_min_eigenvalue() {
        let mut pb = ProgramBuilder::new();
        let blk = pb.add_psd(2);
        let prog = pb.build().unwrap();
        let x = svec(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]));
        let r = prog.residuals(&x).unwrap();
        assert!((r.cone_violation[0] - 1.0).abs() < 1e-12);
        assert!((blk.extract(&x)[(0, 1)] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn dump_round_trip() {
        let mut pb = ProgramBuilder::new();
        let f = pb.add_free(1);
        let blk = pb.add_psd(2);
        pb.add_objective(f.start, 1.5);
        let t = blk.term(0, 1, 2.0);
        pb.add_equality(&[(f.start, 1.0), t, blk.term(1, 1, 1.0)], -0.25);
        let prog = pb.build().unwrap();
        let back = ConicProgram::from_dump(&prog.to_dump()).unwrap();
        assert_eq!(back.cones(), prog.cones());
        assert_eq!(back.objective(), prog.objective());
        assert_eq!(back.rhs(), prog.rhs());
        assert_eq!(back.constraints(), prog.constraints());
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let a = SparseMatrix::from_triplets(1, 2, &[(0, 0, 1.0)]);
        assert!(ConicProgram::new(vec![0.0; 3], a.clone(), vec![1.0], vec![Cone::Nonnegative(3)]).is_err());
        assert!(ConicProgram::new(vec![0.0; 2], a, vec![], vec![Cone::Nonnegative(2)]).is_err());
    }
}
