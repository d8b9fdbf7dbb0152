//! Dense complex linear algebra for small bipartite operators.
//!
//! Tensor-product basis ordering is row-major (A-major): the product ket
//! `|i⟩_A ⊗ |j⟩_B` sits at row `i * d_B + j`. The same convention extends to
//! any number of factors, the first factor being the most significant digit.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Relative tolerance used when a matrix is required to be Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not Hermitian: max |X_ij - conj(X_ji)| = {violation:e} exceeds {allowed:e}")]
    NotHermitian { violation: f64, allowed: f64 },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid subsystem layout: {0}")]
    Layout(String),
}

/// Dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    /// Builds a matrix from entries listed in row-major order.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[Complex64]) -> Result<Self, LinalgError> {
        if entries.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch { expected: rows * cols, found: entries.len() });
        }
        Ok(Self(DMatrix::from_row_slice(rows, cols, entries)))
    }

    /// Builds a matrix from separate row-major real and imaginary parts.
    pub fn from_parts(rows: usize, cols: usize, re: &[f64], im: &[f64]) -> Result<Self, LinalgError> {
        for part in [re, im] {
            if part.len() != rows * cols {
                return Err(LinalgError::DimensionMismatch { expected: rows * cols, found: part.len() });
            }
        }
        Ok(Self::from_fn(rows, cols, |i, j| Complex64::new(re[i * cols + j], im[i * cols + j])))
    }

    pub fn from_real(m: &DMatrix<f64>) -> Self {
        Self(m.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { Complex64::new(diag[i], 0.0) } else { Complex64::new(0.0, 0.0) })
    }

    /// Rank-one operator `|v⟩⟨v|`.
    pub fn projector(ket: &[Complex64]) -> Self {
        let n = ket.len();
        Self::from_fn(n, n, |i, j| ket[i] * ket[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn inner(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        Self(&self.0 * s)
    }

    /// `Tr[self · other]`.
    pub fn trace_product(&self, other: &ComplexMatrix) -> Complex64 {
        assert_eq!(self.cols(), other.rows());
        assert_eq!(self.rows(), other.cols());
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.rows() {
            for k in 0..self.cols() {
                acc += self.0[(i, k)] * other.0[(k, i)];
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max_ij |X_ij - conj(X_ji)|`.
    pub fn hermiticity_violation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.is_square() && self.hermiticity_violation() <= rel_tol * (1.0 + self.max_abs())
    }

    /// `(X + X†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0))
    }

    pub fn real_part(&self) -> DMatrix<f64> {
        self.0.map(|z| z.re)
    }

    pub fn imag_part(&self) -> DMatrix<f64> {
        self.0.map(|z| z.im)
    }

    /// True when every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.0.iter().all(|z| z.im == 0.0)
    }

    /// Row-major real parts followed by row-major imaginary parts.
    pub fn to_parts(&self) -> (Vec<f64>, Vec<f64>) {
        let (r, c) = (self.rows(), self.cols());
        let mut re = Vec::with_capacity(r * c);
        let mut im = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                re.push(self.0[(i, j)].re);
                im.push(self.0[(i, j)].im);
            }
        }
        (re, im)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.0[idx]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut Complex64 {
        &mut self.0[idx]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-&self.0)
    }
}

impl fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows() {
            let row: Vec<String> = (0..self.cols())
                .map(|j| {
                    let z = self.0[(i, j)];
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix(a.0.kronecker(&b.0))
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermEig {
    pub values: Vec<f64>,
    /// Columns are the eigenvectors, in the order of `values`.
    pub vectors: ComplexMatrix,
}

impl HermEig {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `U f(Λ) U†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let u = &self.vectors.0;
        let n = u.nrows();
        let mut scaled = u.clone();
        for (k, &lam) in self.values.iter().enumerate() {
            let s = f(lam);
            for i in 0..n {
                scaled[(i, k)] *= s;
            }
        }
        ComplexMatrix(scaled * u.adjoint())
    }
}

fn require_hermitian(h: &ComplexMatrix) -> Result<(), LinalgError> {
    if !h.is_square() {
        return Err(LinalgError::NotSquare { rows: h.rows(), cols: h.cols() });
    }
    let allowed = HERMITIAN_TOL * (1.0 + h.max_abs());
    let violation = h.hermiticity_violation();
    if violation > allowed {
        return Err(LinalgError::NotHermitian { violation, allowed });
    }
    Ok(())
}

pub fn herm_eig(h: &ComplexMatrix) -> Result<HermEig, LinalgError> {
    require_hermitian(h)?;
    let eig = h.hermitian_part().0.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let n = h.rows();
    let vectors = ComplexMatrix::from_fn(n, n, |i, k| eig.eigenvectors[(i, order[k])]);
    Ok(HermEig { values, vectors })
}

/// Sum of singular values. Hermitian inputs go through [`herm_eig`].
pub fn trace_norm(x: &ComplexMatrix) -> f64 {
    match herm_eig(x) {
        Ok(eig) => eig.values.iter().map(|l| l.abs()).sum(),
        Err(_) => x.0.clone().svd(false, false).singular_values.iter().sum(),
    }
}

/// `λ_min(h) ≥ -tol · (1 + ‖h‖)` with `‖h‖` the spectral norm.
pub fn is_psd(h: &ComplexMatrix, tol: f64) -> bool {
    match herm_eig(h) {
        Ok(eig) => {
            let norm = eig.min().abs().max(eig.max().abs());
            eig.min() >= -tol * (1.0 + norm)
        }
        Err(_) => false,
    }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn lambda_min(h: &ComplexMatrix) -> Result<f64, LinalgError> {
    Ok(herm_eig(h)?.min())
}

/// Matrix absolute value `|h| = U |Λ| U†`; eigenvalues below `zero_tol` in
/// magnitude are dropped.
pub fn herm_abs(h: &ComplexMatrix, zero_tol: f64) -> Result<ComplexMatrix, LinalgError> {
    let eig = herm_eig(h)?;
    Ok(eig.reconstruct_with(|l| if l.abs() <= zero_tol { 0.0 } else { l.abs() }))
}

fn check_layout(m: &ComplexMatrix, dims: &[usize]) -> Result<usize, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    let total: usize = dims.iter().product();
    if total != m.rows() {
        return Err(LinalgError::DimensionMismatch { expected: total, found: m.rows() });
    }
    Ok(total)
}

fn split_index(mut idx: usize, dims: &[usize], digits: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        digits[k] = idx % dims[k];
        idx /= dims[k];
    }
}

fn join_index(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&d, &n)| acc * n + d)
}

/// Transposes every factor flagged in `which`, in the computational basis.
pub fn partial_transpose_subsystems(
    m: &ComplexMatrix,
    dims: &[usize],
    which: &[bool],
) -> Result<ComplexMatrix, LinalgError> {
    let n = check_layout(m, dims)?;
    if which.len() != dims.len() {
        return Err(LinalgError::Layout(format!("{} flags for {} factors", which.len(), dims.len())));
    }
    let k = dims.len();
    let mut out = ComplexMatrix::zeros(n, n);
    let (mut r, mut c) = (vec![0; k], vec![0; k]);
    for row in 0..n {
        split_index(row, dims, &mut r);
        for col in 0..n {
            split_index(col, dims, &mut c);
            let (mut r2, mut c2) = (r.clone(), c.clone());
            for f in 0..k {
                if which[f] {
                    std::mem::swap(&mut r2[f], &mut c2[f]);
                }
            }
            out[(join_index(&r2, dims), join_index(&c2, dims))] = m[(row, col)];
        }
    }
    Ok(out)
}

/// Traces out every factor not flagged in `keep`. Kept factors retain their order.
pub fn partial_trace_subsystems(
    m: &ComplexMatrix,
    dims: &[usize],
    keep: &[bool],
) -> Result<ComplexMatrix, LinalgError> {
    let n = check_layout(m, dims)?;
    if keep.len() != dims.len() {
        return Err(LinalgError::Layout(format!("{} flags for {} factors", keep.len(), dims.len())));
    }
    let kept_dims: Vec<usize> = dims.iter().zip(keep).filter(|(_, &k)| k).map(|(&d, _)| d).collect();
    let out_n: usize = kept_dims.iter().product();
    let k = dims.len();
    let mut out = ComplexMatrix::zeros(out_n, out_n);
    let (mut r, mut c) = (vec![0; k], vec![0; k]);
    for row in 0..n {
        split_index(row, dims, &mut r);
        for col in 0..n {
            split_index(col, dims, &mut c);
            let traced_match = (0..k).all(|f| keep[f] || r[f] == c[f]);
            if !traced_match {
                continue;
            }
            let rk: Vec<usize> = (0..k).filter(|&f| keep[f]).map(|f| r[f]).collect();
            let ck: Vec<usize> = (0..k).filter(|&f| keep[f]).map(|f| c[f]).collect();
            out[(join_index(&rk, &kept_dims), join_index(&ck, &kept_dims))] += m[(row, col)];
        }
    }
    Ok(out)
}

/// Reorders tensor factors: factor `perm[k]` of the input becomes factor `k`
/// of the output.
pub fn permute_subsystems(m: &ComplexMatrix, dims: &[usize], perm: &[usize]) -> Result<ComplexMatrix, LinalgError> {
    let n = check_layout(m, dims)?;
    let k = dims.len();
    let mut seen = vec![false; k];
    if perm.len() != k || perm.iter().any(|&p| p >= k || std::mem::replace(&mut seen[p], true)) {
        return Err(LinalgError::Layout(format!("{perm:?} is not a permutation of {k} factors")));
    }
    let out_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let mut map = vec![0usize; n];
    let mut digits = vec![0; k];
    let mut out_digits = vec![0; k];
    for (idx, slot) in map.iter_mut().enumerate() {
        split_index(idx, dims, &mut digits);
        for f in 0..k {
            out_digits[f] = digits[perm[f]];
        }
        *slot = join_index(&out_digits, &out_dims);
    }
    let mut out = ComplexMatrix::zeros(n, n);
    for row in 0..n {
        for col in 0..n {
            out[(map[row], map[col])] = m[(row, col)];
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Square operator on `C^{d_A} ⊗ C^{d_B}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteOperator {
    matrix: ComplexMatrix,
    dim_a: usize,
    dim_b: usize,
}

impl BipartiteOperator {
    pub fn new(matrix: ComplexMatrix, dim_a: usize, dim_b: usize) -> Result<Self, LinalgError> {
        if !matrix.is_square() {
            return Err(LinalgError::NotSquare { rows: matrix.rows(), cols: matrix.cols() });
        }
        if dim_a == 0 || dim_b == 0 || matrix.rows() != dim_a * dim_b {
            return Err(LinalgError::DimensionMismatch { expected: dim_a * dim_b, found: matrix.rows() });
        }
        Ok(Self { matrix, dim_a, dim_b })
    }

    pub fn identity(dim_a: usize, dim_b: usize) -> Self {
        Self { matrix: ComplexMatrix::identity(dim_a * dim_b), dim_a, dim_b }
    }

    /// `a ⊗ b` with `a` on A and `b` on B.
    pub fn product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Self, LinalgError> {
        if !a.is_square() || !b.is_square() {
            return Err(LinalgError::NotSquare { rows: a.rows(), cols: b.cols() });
        }
        Self::new(kron(a, b), a.rows(), b.rows())
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    /// Total dimension `d_A · d_B`.
    pub fn dim(&self) -> usize {
        self.dim_a * self.dim_b
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.dim_a == other.dim_a && self.dim_b == other.dim_b
    }

    /// Replaces the matrix while keeping the local dimensions.
    pub fn with_matrix(&self, matrix: ComplexMatrix) -> Result<Self, LinalgError> {
        Self::new(matrix, self.dim_a, self.dim_b)
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Transpose on B: entry `((i,j),(k,l))` of the result is entry `((i,l),(k,j))` of `self`.
    pub fn partial_transpose(&self) -> Self {
        let (da, db) = (self.dim_a, self.dim_b);
        let n = da * db;
        let m = &self.matrix;
        let out = ComplexMatrix::from_fn(n, n, |r, c| {
            let (i, j) = (r / db, r % db);
            let (k, l) = (c / db, c % db);
            m[(i * db + l, k * db + j)]
        });
        Self { matrix: out, dim_a: da, dim_b: db }
    }

    /// Reduced operator on the kept subsystem.
    pub fn partial_trace(&self, keep: Subsystem) -> ComplexMatrix {
        let (da, db) = (self.dim_a, self.dim_b);
        let m = &self.matrix;
        match keep {
            Subsystem::A => ComplexMatrix::from_fn(da, da, |i, k| (0..db).map(|j| m[(i * db + j, k * db + j)]).sum()),
            Subsystem::B => ComplexMatrix::from_fn(db, db, |j, l| (0..da).map(|i| m[(i * db + j, i * db + l)]).sum()),
        }
    }

    /// `self ⊗ other` regrouped into the bipartition `A A' | B B'`.
    pub fn tensor(&self, other: &Self) -> Self {
        let joint = kron(&self.matrix, &other.matrix);
        let dims = [self.dim_a, self.dim_b, other.dim_a, other.dim_b];
        let matrix = permute_subsystems(&joint, &dims, &[0, 2, 1, 3]).expect("layout is consistent by construction");
        Self { matrix, dim_a: self.dim_a * other.dim_a, dim_b: self.dim_b * other.dim_b }
    }

    /// Linear combination `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        assert!(self.same_shape(other), "operators act on different spaces");
        let matrix = &self.matrix.scale(a) + &other.matrix.scale(b);
        Self { matrix, dim_a: self.dim_a, dim_b: self.dim_b }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { matrix: self.matrix.scale(s), dim_a: self.dim_a, dim_b: self.dim_b }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn bell() -> BipartiteOperator {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let ket = [c(s), c(0.0), c(0.0), c(s)];
        BipartiteOperator::new(ComplexMatrix::projector(&ket), 2, 2).unwrap()
    }

    fn random_hermitian(entries: &[(f64, f64)], n: usize) -> ComplexMatrix {
        let x = ComplexMatrix::from_fn(n, n, |i, j| {
            let (re, im) = entries[(i * n + j) % entries.len()];
            Complex64::new(re, im)
        });
        x.hermitian_part()
    }

    #[test]
    fn kron_examples() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));

        let a = ComplexMatrix::from_diagonal(&[1.0, 2.0]);
        let b = ComplexMatrix::from_diagonal(&[3.0]);
        assert_eq!(kron(&a, &b), ComplexMatrix::from_diagonal(&[3.0, 6.0]));

        let p0 = ComplexMatrix::from_diagonal(&[1.0, 0.0]);
        let p1 = ComplexMatrix::from_diagonal(&[0.0, 1.0]);
        let k = kron(&p0, &p1);
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == 1 && j == 1 { 1.0 } else { 0.0 };
                assert_eq!(k[(i, j)], c(expected));
            }
        }
    }

    #[test]
    fn partial_transpose_of_product() {
        let sigma = ComplexMatrix::from_row_major(2, 2, &[c(0.7), Complex64::new(0.1, 0.2), Complex64::new(0.1, -0.2), c(0.3)]).unwrap();
        let tau = ComplexMatrix::from_row_major(2, 2, &[c(0.4), Complex64::new(0.0, 0.3), Complex64::new(0.0, -0.3), c(0.6)]).unwrap();
        let x = BipartiteOperator::product(&sigma, &tau).unwrap();
        let expected = BipartiteOperator::product(&sigma, &tau.transpose()).unwrap();
        assert_eq!(x.partial_transpose(), expected);
    }

    #[test]
    fn partial_transpose_of_bell_is_half_swap() {
        let pt = bell().partial_transpose();
        let swap = ComplexMatrix::from_fn(4, 4, |r, col| {
            let (i, j) = (r / 2, r % 2);
            let (k, l) = (col / 2, col % 2);
            c(if i == l && j == k { 0.5 } else { 0.0 })
        });
        assert!((pt.matrix() - &swap).max_abs() < 1e-15);
        let eig = herm_eig(pt.matrix()).unwrap();
        let expected = [-0.5, 0.5, 0.5, 0.5];
        for (got, want) in eig.values.iter().zip(expected) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn general_partial_transpose_matches_bipartite_one() {
        let x = random_hermitian(&[(0.3, 0.1), (-0.2, 0.5), (0.9, -0.4), (0.05, 0.0), (0.6, 0.7)], 6);
        let op = BipartiteOperator::new(x.clone(), 2, 3).unwrap();
        let general = partial_transpose_subsystems(&x, &[2, 3], &[false, true]).unwrap();
        assert_eq!(&general, op.partial_transpose().matrix());
    }

    #[test]
    fn partial_trace_examples() {
        let marg = bell().partial_trace(Subsystem::A);
        assert!((&marg - &ComplexMatrix::identity(2).scale(0.5)).max_abs() < 1e-15);

        let sigma = ComplexMatrix::from_diagonal(&[0.25, 0.75]);
        let tau = ComplexMatrix::from_diagonal(&[2.0, 1.0, 0.5]);
        let x = BipartiteOperator::product(&sigma, &tau).unwrap();
        let reduced = x.partial_trace(Subsystem::A);
        assert!((&reduced - &sigma.scale(3.5)).max_abs() < 1e-15);
        let reduced_b = x.partial_trace(Subsystem::B);
        assert!((&reduced_b - &tau).max_abs() < 1e-15);

        let general = partial_trace_subsystems(x.matrix(), &[2, 3], &[false, true]).unwrap();
        assert_eq!(general, reduced_b);
    }

    #[test]
    fn herm_eig_examples() {
        let eig = herm_eig(&ComplexMatrix::identity(5)).unwrap();
        assert!(eig.values.iter().all(|&l| (l - 1.0).abs() < 1e-14));

        let swap = ComplexMatrix::from_fn(4, 4, |r, col| c(if r / 2 == col % 2 && r % 2 == col / 2 { 1.0 } else { 0.0 }));
        let eig = herm_eig(&swap).unwrap();
        for (got, want) in eig.values.iter().zip([-1.0, 1.0, 1.0, 1.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn herm_eig_rejects_non_hermitian() {
        let x = ComplexMatrix::from_row_major(2, 2, &[c(1.0), c(2.0), c(0.0), c(1.0)]).unwrap();
        assert!(matches!(herm_eig(&x), Err(LinalgError::NotHermitian { .. })));
    }

    #[test]
    fn trace_norm_and_psd() {
        let b = bell();
        assert_abs_diff_eq!(trace_norm(b.matrix()), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(trace_norm(b.partial_transpose().matrix()), 2.0, epsilon = 1e-12);
        assert!(is_psd(&ComplexMatrix::identity(3), 1e-12));
        assert!(!is_psd(b.partial_transpose().matrix(), 1e-9));
        let classical = BipartiteOperator::new(ComplexMatrix::from_diagonal(&[0.5, 0.0, 0.0, 0.5]), 2, 2).unwrap();
        assert!(is_psd(classical.partial_transpose().matrix(), 1e-12));
    }

    #[test]
    fn tensor_regroups_subsystems() {
        let a = ComplexMatrix::from_diagonal(&[1.0, 2.0]);
        let b = ComplexMatrix::from_diagonal(&[3.0, 5.0, 7.0]);
        let a2 = ComplexMatrix::from_diagonal(&[11.0, 13.0]);
        let b2 = ComplexMatrix::from_diagonal(&[17.0, 19.0]);
        let x = BipartiteOperator::product(&a, &b).unwrap();
        let y = BipartiteOperator::product(&a2, &b2).unwrap();
        let joint = x.tensor(&y);
        let expected = BipartiteOperator::product(&kron(&a, &a2), &kron(&b, &b2)).unwrap();
        assert_eq!(joint, expected);
        assert_eq!((joint.dim_a(), joint.dim_b()), (4, 6));
    }

    #[test]
    fn permutation_rejects_bad_perm() {
        let x = ComplexMatrix::identity(4);
        assert!(permute_subsystems(&x, &[2, 2], &[0, 0]).is_err());
        assert!(permute_subsystems(&x, &[2, 2], &[1, 0]).is_ok());
    }

    fn arb_hermitian(max_side: usize) -> impl Strategy<Value = ComplexMatrix> {
        (1..=max_side).prop_flat_map(|n| {
            proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |v| random_hermitian(&v, n))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn partial_transpose_is_trace_preserving_involution((da, db, entries) in (1usize..4, 1usize..4)
            .prop_flat_map(|(a, b)| (Just(a), Just(b), proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), a * a * b * b))))
        {
            let x = BipartiteOperator::new(random_hermitian(&entries, da * db), da, db).unwrap();
            let pt = x.partial_transpose();
            prop_assert_eq!(&pt.partial_transpose(), &x);
            prop_assert!((pt.trace() - x.trace()).abs() < 1e-12);
            prop_assert!(pt.matrix().is_hermitian(1e-14));
        }

        #[test]
        fn trace_norm_dominates_trace(h in arb_hermitian(6)) {
            let tn = trace_norm(&h);
            let tr = h.trace().re;
            prop_assert!(tn + 1e-12 >= tr.abs());
            let eig = herm_eig(&h).unwrap();
            let sign_definite = eig.min() >= 0.0 || eig.max() <= 0.0;
            if sign_definite {
                prop_assert!((tn - tr.abs()).abs() < 1e-10);
            } else {
                let gap = 2.0 * eig.values.iter().filter(|&&l| l < 0.0).map(|l| l.abs()).sum::<f64>().min(
                    eig.values.iter().filter(|&&l| l > 0.0).sum::<f64>());
                prop_assert!((tn - tr.abs() - gap).abs() < 1e-10);
            }
        }

        #[test]
        fn partial_trace_preserves_trace((da, db, entries) in (1usize..4, 1usize..4)
            .prop_flat_map(|(a, b)| (Just(a), Just(b), proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), a * a * b * b))))
        {
            let x = BipartiteOperator::new(random_hermitian(&entries, da * db), da, db).unwrap();
            let ra = x.partial_trace(Subsystem::A);
            let lifted = kron(&ra, &ComplexMatrix::identity(db).scale(1.0 / db as f64));
            prop_assert!((lifted.trace().re - x.trace()).abs() < 1e-12);
            prop_assert!((x.partial_trace(Subsystem::B).trace().re - x.trace()).abs() < 1e-12);
        }
    }
}
