//! Circulant matrices, the discrete Fourier eigenbasis, and the distance
//! association scheme of the `n`-cycle.
//!
//! Two scalings of the symmetric circulant basis are exposed and never mixed
//! implicitly:
//!
//! * [`SchemeFamily`] holds the 0/1 distance matrices `A^(0) = I, A^(1), ..,
//!   A^(d)`, `d = floor(n/2)`. For even `n` the antipodal matrix `A^(n/2)` is
//!   a perfect matching with row sums 1.
//! * [`basis_matrix`] follows the doubled convention `C^(0) = 2I` and
//!   `C^(n/2) = 2 A^(n/2)`, under which every basis element has eigenvalues
//!   `2 cos(2 pi m k / n)`. Use [`basis_scale`] to convert: `C^(k) =
//!   basis_scale(n, k) * A^(k)`.
//!
//! Eigenvalues are always listed in Fourier-column order `m = 0..n`, i.e.
//! `lambda_m(C)` is the eigenvalue belonging to column `m` of
//! [`fourier_matrix`].

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

/// Defining row `(c_0, .., c_{n-1})` of a circulant matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CirculantCoefficients<T> {
    c: Vec<T>,
}

impl<T: Scalar> CirculantCoefficients<T> {
    pub fn new(c: Vec<T>) -> Result<Self> {
        if c.len() < 3 {
            return Err(Error::invalid(format!(
                "circulant order must be at least 3, got {}",
                c.len()
            )));
        }
        Ok(Self { c })
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn coefficients(&self) -> &[T] {
        &self.c
    }

    /// `c_k == c_{n-k}` for every `k` in `1..n`.
    pub fn is_symmetric(&self) -> bool {
        let n = self.n();
        (1..n).all(|k| self.c[k] == self.c[n - k])
    }

    pub fn to_matrix(&self) -> DMatrix<T> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| self.c[(j + n - i) % n])
    }
}

/// Assembles the circulant `M_ij = c_{(j - i) mod n}`.
pub fn circulant_from_coefficients<T: Scalar>(n: usize, c: &[T]) -> Result<DMatrix<T>> {
    if c.len() != n {
        return Err(Error::invalid(format!(
            "expected {n} circulant coefficients, got {}",
            c.len()
        )));
    }
    Ok(CirculantCoefficients::new(c.to_vec())?.to_matrix())
}

fn unit_angle<T: Real>(num: usize, n: usize) -> T {
    T::tau() * T::from_usize(num % n).unwrap() / T::from_usize(n).unwrap()
}

/// `lambda_m = c_0 + sum_k c_k exp(-2 pi i m k / n)` for `m = 0..n`.
pub fn circulant_eigenvalues<T: Real>(coeffs: &CirculantCoefficients<T>) -> Vec<Complex<T>> {
    let n = coeffs.n();
    let c = coeffs.coefficients();
    (0..n)
        .map(|m| {
            c.iter()
                .enumerate()
                .fold(Complex::new(T::zero(), T::zero()), |acc, (k, &ck)| {
                    let theta = unit_angle::<T>(m * k, n);
                    acc + Complex::new(ck * theta.cos(), -ck * theta.sin())
                })
        })
        .collect()
}

/// Unitary DFT matrix `Q_ij = exp(-2 pi i ij / n) / sqrt(n)`.
pub fn fourier_matrix<T: Real>(n: usize) -> DMatrix<Complex<T>> {
    let scale = T::one() / T::from_usize(n).unwrap().sqrt();
    DMatrix::from_fn(n, n, |i, j| {
        let theta = unit_angle::<T>(i * j, n);
        Complex::new(scale * theta.cos(), -scale * theta.sin())
    })
}

/// Factor relating the doubled basis to the 0/1 scheme: `C^(k) = s * A^(k)`.
pub fn basis_scale(n: usize, k: usize) -> i64 {
    if k == 0 || 2 * k == n {
        2
    } else {
        1
    }
}

/// Symmetric circulant basis element `C^(k)` with `C^(0) = 2I` and a doubled
/// antipodal element for even `n`.
pub fn basis_matrix<T: Scalar>(n: usize, k: usize) -> Result<DMatrix<T>> {
    if n < 3 {
        return Err(Error::invalid(format!("order must be at least 3, got {n}")));
    }
    if k > n / 2 {
        return Err(Error::invalid(format!("basis index {k} out of range 0..={}", n / 2)));
    }
    let scale = T::from_i64(basis_scale(n, k)).unwrap();
    Ok(distance_matrix(n, k).map(|v: T| v * scale))
}

fn cycle_distance(n: usize, i: usize, j: usize) -> usize {
    let diff = i.abs_diff(j);
    diff.min(n - diff)
}

fn distance_matrix<T: Scalar>(n: usize, k: usize) -> DMatrix<T> {
    DMatrix::from_fn(n, n, |i, j| {
        if cycle_distance(n, i, j) == k {
            T::one()
        } else {
            T::zero()
        }
    })
}

/// Distance matrices `A^(0..=d)` of the `n`-cycle.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemeFamily<T> {
    n: usize,
    matrices: Vec<DMatrix<T>>,
}

impl<T: Scalar> SchemeFamily<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Diameter of the cycle, `floor(n/2)`.
    pub fn d(&self) -> usize {
        self.n / 2
    }

    pub fn matrix(&self, k: usize) -> &DMatrix<T> {
        &self.matrices[k]
    }

    pub fn matrices(&self) -> &[DMatrix<T>] {
        &self.matrices
    }

    /// Expected common row sum of `A^(k)`.
    pub fn row_sum(&self, k: usize) -> usize {
        match k {
            0 => 1,
            k if 2 * k == self.n => 1,
            _ => 2,
        }
    }
}

/// `A^(k)_ij = 1` iff the cycle distance between `i` and `j` is `k`.
pub fn scheme_matrices<T: Scalar>(n: usize) -> Result<SchemeFamily<T>> {
    if n < 3 {
        return Err(Error::invalid(format!("cycle order must be at least 3, got {n}")));
    }
    let matrices = (0..=n / 2).map(|k| distance_matrix(n, k)).collect();
    Ok(SchemeFamily { n, matrices })
}

/// Outcome of checking the association-scheme axioms on a matrix family.
#[derive(Clone, Debug, PartialEq)]
pub struct AxiomReport {
    /// Every entry is 0 or 1 and the first matrix is the identity.
    pub zero_one_with_identity: bool,
    pub sums_to_all_ones: bool,
    pub closed_under_transpose: bool,
    pub commutative: bool,
    pub closed_under_products: bool,
    /// Largest least-squares residual of a pairwise product against the span.
    pub max_span_residual: f64,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.zero_one_with_identity
            && self.sums_to_all_ones
            && self.closed_under_transpose
            && self.commutative
            && self.closed_under_products
    }
}

pub const SPAN_RESIDUAL_TOLERANCE: f64 = 1e-9;

/// Evaluates the axioms of a commutative association scheme: 0/1 entries,
/// identity first, sum equal to the all-ones matrix, closure under
/// transpose, commutativity and closure under products. The
/// product axiom is tested against the span of the whole family, identity
/// included.
pub fn verify_scheme_axioms<T: Scalar>(matrices: &[DMatrix<T>]) -> Result<AxiomReport> {
    let Some(first) = matrices.first() else {
        return Err(Error::invalid("empty matrix family"));
    };
    let n = first.nrows();
    if matrices.iter().any(|m| m.nrows() != n || m.ncols() != n) {
        return Err(Error::invalid("all matrices must be square of the same order"));
    }

    let zero_one = matrices
        .iter()
        .all(|m| m.iter().all(|&v| v == T::zero() || v == T::one()));
    let zero_one_with_identity = zero_one && *first == DMatrix::identity(n, n);

    let total = matrices.iter().fold(DMatrix::<T>::zeros(n, n), |acc, m| acc + m);
    let sums_to_all_ones = total.iter().all(|&v| v == T::one());

    let closed_under_transpose = matrices
        .iter()
        .all(|m| matrices.iter().any(|other| m.transpose() == *other));

    let mut commutative = true;
    let mut max_span_residual = 0.0_f64;

    let basis = DMatrix::<f64>::from_fn(n * n, matrices.len(), |r, c| matrices[c][(r % n, r / n)].to_f64_lossy());
    let svd = basis.clone().svd(true, true);

    for (i, a) in matrices.iter().enumerate() {
        for b in &matrices[i..] {
            let ab = a * b;
            if ab != b * a {
                commutative = false;
            }
            let target = DVector::<f64>::from_iterator(n * n, ab.as_slice().iter().map(|v| v.to_f64_lossy()));
            let coeffs = svd
                .solve(&target, 1e-12)
                .map_err(|e| Error::invalid(format!("least squares failed: {e}")))?;
            let residual = (&basis * coeffs - &target).amax();
            max_span_residual = max_span_residual.max(residual);
        }
    }

    Ok(AxiomReport {
        zero_one_with_identity,
        sums_to_all_ones,
        closed_under_transpose,
        commutative,
        closed_under_products: max_span_residual <= SPAN_RESIDUAL_TOLERANCE,
        max_span_residual,
    })
}

/// `lambda_m(A^(k))` of the 0/1 scheme matrix in Fourier order.
pub fn scheme_eigenvalue<T: Real>(n: usize, m: usize, k: usize) -> T {
    if k == 0 {
        T::one()
    } else if 2 * k == n {
        if m % 2 == 0 {
            T::one()
        } else {
            -T::one()
        }
    } else {
        T::from_f64(2.0).unwrap() * unit_angle::<T>(m * k, n).cos()
    }
}

/// `lambda_m(C^(k)) = 2 cos(2 pi m k / n)` for the doubled basis.
pub fn basis_eigenvalue<T: Real>(n: usize, m: usize, k: usize) -> T {
    T::from_f64(2.0).unwrap() * unit_angle::<T>(m * k, n).cos()
}

/// Table `T[(m, k)] = lambda_m(A^(k))`, `m = 0..n`, `k = 0..=floor(n/2)`.
pub fn eigenvalue_table<T: Real>(n: usize) -> Result<DMatrix<T>> {
    if n < 3 {
        return Err(Error::invalid(format!("cycle order must be at least 3, got {n}")));
    }
    Ok(DMatrix::from_fn(n, n / 2 + 1, |m, k| scheme_eigenvalue(n, m, k)))
}

/// `2 + sum_{k=1..d} w_k lambda_k(C^(i)) lambda_k(C^(j))` with `w_k = 1`
/// except `w_{n/2} = 1/2` for even `n`.
///
/// Up to a factor 1/2 this is the eigenvalue, on Fourier column `j`, of the
/// `i`-th scheme LMI evaluated at the canonical point; it is positive (`n`,
/// or `2n` for the antipodal index) when `i == j` and vanishes otherwise.
/// For odd `n` all weights are one.
pub fn scheme_lmi_pairing<T: Real>(n: usize, i: usize, j: usize) -> T {
    let two = T::from_f64(2.0).unwrap();
    (1..=n / 2).fold(two, |acc, k| {
        let w = if 2 * k == n {
            T::from_f64(0.5).unwrap()
        } else {
            T::one()
        };
        acc + w * basis_eigenvalue::<T>(n, k, i) * basis_eigenvalue::<T>(n, k, j)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn cycle_adjacency(n: usize) -> DMatrix<i64> {
        DMatrix::from_fn(n, n, |i, j| i64::from(cycle_distance(n, i, j) == 1))
    }

    #[test]
    fn circulant_examples() {
        let m = circulant_from_coefficients(4, &[0i64, 1, 0, 1]).unwrap();
        assert_eq!(m, cycle_adjacency(4));

        let m = circulant_from_coefficients(3, &[5i64, 0, 0]).unwrap();
        assert_eq!(m, DMatrix::identity(3, 3) * 5);

        let m = circulant_from_coefficients(5, &[0i64, 1, 0, 0, 1]).unwrap();
        assert_eq!(m, cycle_adjacency(5));
    }

    #[test]
    fn circulant_rejects_bad_length() {
        assert!(circulant_from_coefficients(4, &[0i64, 1, 0]).is_err());
        assert!(CirculantCoefficients::new(vec![1i64, 2]).is_err());
    }

    #[test]
    fn circulant_entries_follow_wrapped_diagonals() {
        let c: Vec<i64> = vec![3, 1, 4, 1, 5, 9];
        let m = circulant_from_coefficients(6, &c).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(m[(i, j)], c[(j + 6 - i) % 6]);
            }
        }
    }

    #[test]
    fn symmetric_flag() {
        assert!(CirculantCoefficients::new(vec![1i64, 2, 3, 2]).unwrap().is_symmetric());
        assert!(!CirculantCoefficients::new(vec![1i64, 2, 3, 4]).unwrap().is_symmetric());
    }

    #[test]
    fn four_cycle_spectrum() {
        let c = CirculantCoefficients::new(vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let ev = circulant_eigenvalues(&c);
        let expected = [2.0f64, 0.0, -2.0, 0.0];
        for (l, e) in ev.iter().zip(expected) {
            assert!((l.re - e).abs() < 1e-14 && l.im.abs() < 1e-14);
        }
    }

    #[test]
    fn five_cycle_spectrum() {
        let c = CirculantCoefficients::new(vec![0.0, 1.0, 0.0, 0.0, 1.0]).unwrap();
        for (m, l) in circulant_eigenvalues(&c).iter().enumerate() {
            let e = 2.0 * (std::f64::consts::TAU * m as f64 / 5.0).cos();
            assert!((l.re - e).abs() < 1e-14 && l.im.abs() < 1e-14);
        }
    }

    #[test]
    fn basis_examples() {
        assert_eq!(basis_matrix::<i64>(5, 0).unwrap(), DMatrix::identity(5, 5) * 2);
        assert_eq!(basis_matrix::<i64>(5, 1).unwrap(), cycle_adjacency(5));
        let c3 = basis_matrix::<i64>(6, 3).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(c3[(i, j)], if (i + 3) % 6 == j { 2 } else { 0 });
            }
        }
        assert!(basis_matrix::<i64>(6, 4).is_err());
    }

    #[test]
    fn basis_and_scheme_are_related_by_documented_scale() {
        for n in 3..12 {
            let fam = scheme_matrices::<i64>(n).unwrap();
            for k in 0..=n / 2 {
                let c = basis_matrix::<i64>(n, k).unwrap();
                assert_eq!(c, fam.matrix(k) * basis_scale(n, k));
            }
        }
    }

    #[test]
    fn scheme_examples() {
        let f = scheme_matrices::<i64>(5).unwrap();
        assert_eq!(*f.matrix(1), cycle_adjacency(5));
        let j = DMatrix::<i64>::from_element(5, 5, 1);
        assert_eq!(*f.matrix(2), j - DMatrix::identity(5, 5) - f.matrix(1));

        let f = scheme_matrices::<i64>(6).unwrap();
        for i in 0..6 {
            assert_eq!(f.matrix(3).row(i).sum(), 1);
        }

        let f = scheme_matrices::<i64>(8).unwrap();
        assert!(verify_scheme_axioms(f.matrices()).unwrap().all_pass());
    }

    #[test]
    fn scheme_sums_to_all_ones_exactly() {
        for n in 3..=64 {
            let f = scheme_matrices::<i64>(n).unwrap();
            let total = f.matrices().iter().fold(DMatrix::<i64>::zeros(n, n), |acc, m| acc + m);
            assert!(total.iter().all(|&v| v == 1), "n = {n}");
            for k in 0..=f.d() {
                for i in 0..n {
                    assert_eq!(f.matrix(k).row(i).sum() as usize, f.row_sum(k));
                }
            }
        }
    }

    #[test]
    fn scheme_is_exact_over_rationals() {
        let f = scheme_matrices::<Ratio<i64>>(7).unwrap();
        let report = verify_scheme_axioms(f.matrices()).unwrap();
        assert!(report.all_pass());
    }

    #[test]
    fn axioms_of_seven_cycle_and_trivial_scheme() {
        let f = scheme_matrices::<i64>(7).unwrap();
        let r = verify_scheme_axioms(f.matrices()).unwrap();
        assert!(r.all_pass(), "{r:?}");

        let i4 = DMatrix::<i64>::identity(4, 4);
        let rest = DMatrix::<i64>::from_element(4, 4, 1) - &i4;
        assert!(verify_scheme_axioms(&[i4, rest]).unwrap().all_pass());
    }

    #[test]
    fn shift_without_transpose_fails_transpose_closure() {
        // Upper shift U (without wrap) and the remainder J - I - U.
        let n = 4;
        let i4 = DMatrix::<i64>::identity(n, n);
        let shift = DMatrix::<i64>::from_fn(n, n, |i, j| i64::from(j == i + 1));
        let rest = DMatrix::<i64>::from_element(n, n, 1) - &i4 - &shift;
        let r = verify_scheme_axioms(&[i4, shift.clone(), rest.clone()]).unwrap();
        assert!(r.zero_one_with_identity);
        assert!(r.sums_to_all_ones);
        // U^T is neither I, U, nor the remainder (which contains U^T and more).
        assert_ne!(shift.transpose(), rest);
        assert!(!r.closed_under_transpose);
        assert!(!r.all_pass());
    }

    #[test]
    fn eigenvalue_table_examples() {
        let t = eigenvalue_table::<f64>(5).unwrap();
        assert!((t[(1, 1)] - 0.618_034_0).abs() < 1e-7);
        let t = eigenvalue_table::<f64>(6).unwrap();
        for m in 0..6 {
            assert_eq!(t[(m, 3)], if m % 2 == 0 { 1.0 } else { -1.0 });
        }
        // Row m = n/2 of the non-antipodal columns alternates with k.
        for k in 1..3 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!((t[(3, k)] - 2.0 * sign).abs() < 1e-12);
        }
    }

    #[test]
    fn eigenvalue_table_symmetries() {
        for n in 3..=40 {
            let t = eigenvalue_table::<f64>(n).unwrap();
            let half = (n - 1) / 2;
            for k in 1..=half {
                for m in 1..=half {
                    assert!((t[(m, k)] - t[(k, m)]).abs() < 1e-12);
                }
                for m in 1..n {
                    assert!((t[(m, k)] - t[(n - m, k)]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn fourier_matrix_is_unitary() {
        for n in [3usize, 8, 17, 32] {
            let q = fourier_matrix::<f64>(n);
            let prod = q.adjoint() * &q;
            for i in 0..n {
                for j in 0..n {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((prod[(i, j)] - Complex::new(e, 0.0)).norm() < 1e-12);
                }
            }
            let ones = DMatrix::<Complex<f64>>::from_element(n, 1, Complex::new(1.0, 0.0));
            let qe = q.adjoint() * ones;
            assert!((qe[(0, 0)].re - (n as f64).sqrt()).abs() < 1e-12);
            assert!((1..n).all(|i| qe[(i, 0)].norm() < 1e-12));
        }
    }

    #[test]
    fn pairing_vanishes_off_diagonal_for_both_parities() {
        for n in 3..=32 {
            for i in 1..=n / 2 {
                for j in 1..=n / 2 {
                    let v: f64 = scheme_lmi_pairing(n, i, j);
                    if i == j {
                        assert!(v >= -1e-8, "n={n} i={i}: {v}");
                        let expected = if 2 * i == n { 2 * n } else { n };
                        assert!((v - expected as f64).abs() < 1e-8);
                    } else {
                        assert!(v.abs() < 1e-8, "n={n} i={i} j={j}: {v}");
                    }
                }
            }
        }
    }
}
