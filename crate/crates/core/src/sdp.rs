//! Small dense semidefinite programs in equality standard form.
//!
//! ```text
//!   primal:  minimize ⟨C, X⟩  subject to ⟨A_k, X⟩ = b_k,  X ⪰ 0
//!   dual:    maximize b·y     subject to Z = C − Σ_k y_k A_k ⪰ 0
//! ```
//!
//! `X`, `C`, `A_k` and `Z` are block diagonal with real symmetric blocks.
//! Complex Hermitian cones are handled by the real embedding
//! `H ↦ [[Re H, −Im H], [Im H, Re H]]`.
//!
//! The solver is an infeasible-start primal-dual path-following method with
//! Nesterov–Todd scaling and Mehrotra predictor-corrector steps.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{herm_eig, ComplexMatrix, LinalgError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdpError {
    #[error("block {block}: {what}")]
    MalformedBlock { block: usize, what: String },
    #[error("constraint {index}: {what}")]
    MalformedConstraint { index: usize, what: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Symmetric matrix stored as its upper-triangular nonzeros `(i, j, v)`, `i ≤ j`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseSym {
    entries: Vec<(usize, usize, f64)>,
}

impl SparseSym {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds from arbitrary `(i, j, v)` triples; `(i, j)` and `(j, i)` name the
    /// same entry and their values are summed.
    pub fn from_triplets(triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, v) in triplets {
            *map.entry((i.min(j), i.max(j))).or_default() += v;
        }
        Self { entries: map.into_iter().filter(|(_, v)| *v != 0.0).map(|((i, j), v)| (i, j, v)).collect() }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut entries = Vec::new();
        for i in 0..n {
            for j in i..n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                if v != 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
        Self { entries }
    }

    pub fn identity(n: usize, scale: f64) -> Self {
        Self { entries: (0..n).map(|i| (i, i, scale)).collect() }
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.iter().map(|&(_, j, _)| j).max()
    }

    /// Frobenius inner product with a dense symmetric matrix.
    pub fn dot(&self, x: &DMatrix<f64>) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| if i == j { v * x[(i, i)] } else { v * (x[(i, j)] + x[(j, i)]) })
            .sum()
    }

    /// `target += scale · self`.
    pub fn add_to(&self, target: &mut DMatrix<f64>, scale: f64) {
        for &(i, j, v) in &self.entries {
            target[(i, j)] += scale * v;
            if i != j {
                target[(j, i)] += scale * v;
            }
        }
    }

    pub fn to_dense(&self, n: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        self.add_to(&mut m, 1.0);
        m
    }

    /// `W · self · W` for symmetric `W`.
    fn congruence(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        let n = w.nrows();
        let mut out = DMatrix::zeros(n, n);
        for &(p, q, v) in &self.entries {
            let wp = w.column(p);
            let wq = w.column(q);
            if p == q {
                out.ger(v, &wp, &wp, 1.0);
            } else {
                out.ger(v, &wp, &wq, 1.0);
                out.ger(v, &wq, &wp, 1.0);
            }
        }
        out
    }
}

/// One equality `Σ_blocks ⟨A_k, X⟩ = rhs`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Constraint {
    /// `(block index, coefficient)`; blocks not listed have a zero coefficient.
    pub terms: Vec<(usize, SparseSym)>,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(rhs: f64) -> Self {
        Self { terms: Vec::new(), rhs }
    }

    pub fn with_term(mut self, block: usize, coeff: SparseSym) -> Self {
        if !coeff.is_empty() {
            self.terms.push((block, coeff));
        }
        self
    }

    fn apply(&self, x: &[DMatrix<f64>]) -> f64 {
        self.terms.iter().map(|(b, a)| a.dot(&x[*b])).sum()
    }
}

/// Block-diagonal SDP in equality standard form.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpProblem {
    block_sizes: Vec<usize>,
    objective: Vec<DMatrix<f64>>,
    constraints: Vec<Constraint>,
}

impl SdpProblem {
    /// Problem with zero objective and no constraints.
    pub fn new(block_sizes: Vec<usize>) -> Self {
        let objective = block_sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        Self { block_sizes, objective, constraints: Vec::new() }
    }

    pub fn set_objective(&mut self, block: usize, c: DMatrix<f64>) {
        self.objective[block] = c;
    }

    pub fn add_constraint(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn objective(&self) -> &[DMatrix<f64>] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn rhs(&self) -> DVector<f64> {
        DVector::from_iterator(self.constraints.len(), self.constraints.iter().map(|c| c.rhs))
    }

    /// Sum of the block sides.
    pub fn cone_order(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    /// Dimension of the cone as a vector space.
    pub fn cone_dimension(&self) -> usize {
        self.block_sizes.iter().map(|n| n * (n + 1) / 2).sum()
    }

    pub fn validate(&self) -> Result<(), SdpError> {
        for (b, (&n, c)) in self.block_sizes.iter().zip(&self.objective).enumerate() {
            if n == 0 {
                return Err(SdpError::MalformedBlock { block: b, what: "empty block".into() });
            }
            if c.nrows() != n || c.ncols() != n {
                return Err(SdpError::MalformedBlock {
                    block: b,
                    what: format!("objective is {}x{}, block side is {n}", c.nrows(), c.ncols()),
                });
            }
            let asym = (c - c.transpose()).amax();
            if asym > 1e-12 * (1.0 + c.amax()) {
                return Err(SdpError::MalformedBlock { block: b, what: format!("objective not symmetric ({asym:e})") });
            }
        }
        for (k, con) in self.constraints.iter().enumerate() {
            if !con.rhs.is_finite() {
                return Err(SdpError::MalformedConstraint { index: k, what: "non-finite right-hand side".into() });
            }
            for (b, a) in &con.terms {
                let Some(&n) = self.block_sizes.get(*b) else {
                    return Err(SdpError::MalformedConstraint { index: k, what: format!("unknown block {b}") });
                };
                if a.max_index().is_some_and(|j| j >= n) {
                    return Err(SdpError::MalformedConstraint {
                        index: k,
                        what: format!("coefficient exceeds side {n} of block {b}"),
                    });
                }
            }
        }
        Ok(())
    }

    /// `A(X)`.
    pub fn apply(&self, x: &[DMatrix<f64>]) -> DVector<f64> {
        DVector::from_iterator(self.constraints.len(), self.constraints.iter().map(|c| c.apply(x)))
    }

    /// `Σ_k y_k A_k`.
    pub fn apply_adjoint(&self, y: &[f64]) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = self.block_sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (con, &yk) in self.constraints.iter().zip(y) {
            if yk == 0.0 {
                continue;
            }
            for (b, a) in &con.terms {
                a.add_to(&mut out[*b], yk);
            }
        }
        out
    }

    /// Dual slack `C − Σ y_k A_k`.
    pub fn dual_slack(&self, y: &[f64]) -> Vec<DMatrix<f64>> {
        self.apply_adjoint(y).into_iter().zip(&self.objective).map(|(ay, c)| c - ay).collect()
    }

    pub fn primal_objective(&self, x: &[DMatrix<f64>]) -> f64 {
        x.iter().zip(&self.objective).map(|(x, c)| c.dot(x)).sum()
    }

    pub fn dual_objective(&self, y: &[f64]) -> f64 {
        self.constraints.iter().zip(y).map(|(c, yk)| c.rhs * yk).sum()
    }

    /// Plain-text dump for cross-checking against other solvers.
    ///
    /// ```text
    /// sdp <number of blocks> <number of constraints>
    /// sides <n_0> <n_1> ...
    /// objective <block>            followed by n_block rows of the dense C block
    /// constraint <k> <b_k>         followed by one line per nonzero:
    ///   <block> <i> <j> <value>      upper triangle, 0-based, i ≤ j
    /// end
    /// ```
    pub fn write_text(&self, out: &mut impl io::Write) -> io::Result<()> {
        let mut s = String::new();
        let _ = writeln!(s, "sdp {} {}", self.block_sizes.len(), self.constraints.len());
        let sides: Vec<String> = self.block_sizes.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(s, "sides {}", sides.join(" "));
        for (b, c) in self.objective.iter().enumerate() {
            let _ = writeln!(s, "objective {b}");
            for i in 0..c.nrows() {
                let row: Vec<String> = (0..c.ncols()).map(|j| format!("{:.17e}", c[(i, j)])).collect();
                let _ = writeln!(s, "{}", row.join(" "));
            }
        }
        for (k, con) in self.constraints.iter().enumerate() {
            let _ = writeln!(s, "constraint {k} {:.17e}", con.rhs);
            for (b, a) in &con.terms {
                for &(i, j, v) in a.entries() {
                    let _ = writeln!(s, "  {b} {i} {j} {v:.17e}");
                }
            }
        }
        s.push_str("end\n");
        out.write_all(s.as_bytes())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { gap_tol: 1e-8, feas_tol: 1e-8, max_iter: 200 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIterations,
    NumericalFailure,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SolveStatus,
    pub x: Vec<DMatrix<f64>>,
    pub y: Vec<f64>,
    pub z: Vec<DMatrix<f64>>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `|primal − dual|`.
    pub gap: f64,
    /// `‖A(X) − b‖ / (1 + ‖b‖)`.
    pub primal_infeasibility: f64,
    /// `‖C − Z − Aᵀy‖ / (1 + ‖C‖)`.
    pub dual_infeasibility: f64,
    pub iterations: usize,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Violations recomputed from scratch for a solver output.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    /// `max_k |⟨A_k, X⟩ − b_k|`.
    pub equality_residual: f64,
    /// Smallest eigenvalue over all primal blocks.
    pub primal_lambda_min: f64,
    /// Smallest eigenvalue over all blocks of `C − Σ y_k A_k`.
    pub dual_lambda_min: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `primal − dual`.
    pub gap: f64,
}

impl CertificateReport {
    /// Largest of the three violations (negative eigenvalues counted by magnitude).
    pub fn max_violation(&self) -> f64 {
        self.equality_residual.max(-self.primal_lambda_min).max(-self.dual_lambda_min).max(self.gap.abs())
    }
}

fn sym_lambda_min(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Independent residual check. Returns `None` when the solver produced no
/// candidate pair (infeasible or failed runs).
pub fn check_certificate(p: &SdpProblem, s: &SdpSolution) -> Option<CertificateReport> {
    if s.status == SolveStatus::Infeasible || s.x.len() != p.block_sizes.len() || s.y.len() != p.constraints.len() {
        return None;
    }
    let ax = p.apply(&s.x);
    let equality_residual = ax.iter().zip(p.constraints.iter()).map(|(a, c)| (a - c.rhs).abs()).fold(0.0, f64::max);
    let primal_lambda_min = s.x.iter().map(sym_lambda_min).fold(f64::INFINITY, f64::min);
    let dual_lambda_min = p.dual_slack(&s.y).iter().map(sym_lambda_min).fold(f64::INFINITY, f64::min);
    let primal_objective = p.primal_objective(&s.x);
    let dual_objective = p.dual_objective(&s.y);
    Some(CertificateReport {
        equality_residual,
        primal_lambda_min,
        dual_lambda_min,
        primal_objective,
        dual_objective,
        gap: primal_objective - dual_objective,
    })
}

/// Real symmetric embedding `[[Re h, −Im h], [Im h, Re h]]` of a Hermitian matrix.
pub fn embed_hermitian(h: &ComplexMatrix) -> Result<DMatrix<f64>, LinalgError> {
    if !h.is_hermitian(crate::linalg::HERMITIAN_TOL) {
        // herm_eig produces the diagnostic
        herm_eig(h)?;
    }
    let n = h.rows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            out[(i, j)] = z.re;
            out[(n + i, n + j)] = z.re;
            out[(n + i, j)] = z.im;
            out[(i, n + j)] = -z.im;
        }
    }
    Ok((&out + out.transpose()) * 0.5)
}

/// Hermitian `H_X` with `Tr[h · H_X] = ⟨embed(h), x⟩` for every Hermitian `h`.
/// For `x = embed(k)` this returns `2k`.
pub fn contract_hermitian(x: &DMatrix<f64>) -> ComplexMatrix {
    let n = x.nrows() / 2;
    ComplexMatrix::from_fn(n, n, |i, j| {
        let re = x[(i, j)] + x[(n + i, n + j)];
        let im = x[(n + i, j)] - x[(n + j, i)];
        Complex64::new(re, im)
    })
}

/// Scalar field of the Hermitian variables in a problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    /// Real symmetric blocks of side `n`.
    Real,
    /// Complex Hermitian blocks, embedded as real blocks of side `2n`.
    Complex,
}

impl Field {
    pub fn block_side(self, n: usize) -> usize {
        match self {
            Field::Real => n,
            Field::Complex => 2 * n,
        }
    }

    /// Coefficient block for a Hermitian matrix listed entrywise (both
    /// triangles present). In the real field imaginary parts are ignored.
    pub fn coefficient(self, n: usize, entries: &[(usize, usize, Complex64)]) -> SparseSym {
        let mut full: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut put = |i: usize, j: usize, v: f64| {
            if v != 0.0 {
                *full.entry((i, j)).or_default() += v;
            }
        };
        for &(i, j, z) in entries {
            put(i, j, z.re);
            if self == Field::Complex {
                put(n + i, n + j, z.re);
                put(n + i, j, z.im);
                put(i, n + j, -z.im);
            }
        }
        SparseSym::from_triplets(full.into_iter().filter(|((i, j), _)| i <= j).map(|((i, j), v)| (i, j, v)))
    }

    pub fn dense(self, h: &ComplexMatrix) -> Result<DMatrix<f64>, LinalgError> {
        match self {
            Field::Real => Ok(h.hermitian_part().real_part()),
            Field::Complex => embed_hermitian(h),
        }
    }

    /// Inverse of [`Field::dense`] on the structured subspace; for a generic
    /// PSD block this is the projection onto it.
    pub fn extract(self, x: &DMatrix<f64>) -> ComplexMatrix {
        match self {
            Field::Real => ComplexMatrix::from_real(&((x + x.transpose()) * 0.5)),
            Field::Complex => contract_hermitian(x).scale(0.5),
        }
    }
}

/// Nesterov–Todd scaling of one block: `W Z W = X`, `W = G Gᵀ`,
/// `G⁻¹ X G⁻ᵀ = Gᵀ Z G = diag(v)`.
struct NtScaling {
    g: DMatrix<f64>,
    g_inv: DMatrix<f64>,
    w: DMatrix<f64>,
    v: DVector<f64>,
    x_chol_inv: DMatrix<f64>,
    z_chol_inv: DMatrix<f64>,
}

fn chol_lower(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    m.clone().cholesky().map(|c| c.l())
}

fn lower_inverse(l: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = l.nrows();
    l.solve_lower_triangular(&DMatrix::identity(n, n))
}

fn nt_scaling(x: &DMatrix<f64>, z: &DMatrix<f64>) -> Option<NtScaling> {
    let lx = chol_lower(x)?;
    let lz = chol_lower(z)?;
    let x_chol_inv = lower_inverse(&lx)?;
    let z_chol_inv = lower_inverse(&lz)?;
    let t = lx.transpose() * z * &lx;
    let t = (&t + t.transpose()) * 0.5;
    let eig = t.symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return None;
    }
    let q = &eig.eigenvectors;
    let n = x.nrows();
    let quarter = eig.eigenvalues.map(|l| l.powf(0.25));
    let mut lq = &lx * q;
    for k in 0..n {
        let s = 1.0 / quarter[k];
        lq.column_mut(k).scale_mut(s);
    }
    let g = lq;
    let mut qt_linv = q.transpose() * &x_chol_inv;
    for k in 0..n {
        let s = quarter[k];
        qt_linv.row_mut(k).scale_mut(s);
    }
    let g_inv = qt_linv;
    let w = &g * g.transpose();
    let w = (&w + w.transpose()) * 0.5;
    let v = eig.eigenvalues.map(|l| l.sqrt());
    Some(NtScaling { g, g_inv, w, v, x_chol_inv, z_chol_inv })
}

/// Largest `α ≥ 0` (possibly infinite) with `L (I + α L⁻¹ Δ L⁻ᵀ) Lᵀ ⪰ 0`.
fn max_step(chol_inv: &DMatrix<f64>, delta: &DMatrix<f64>) -> f64 {
    let s = chol_inv * delta * chol_inv.transpose();
    let lmin = sym_lambda_min(&s);
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

fn blocks_dot(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a.dot(b)).sum()
}

fn blocks_norm(a: &[DMatrix<f64>]) -> f64 {
    a.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

struct SchurSystem {
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl SchurSystem {
    fn factor(mut m: DMatrix<f64>) -> Option<Self> {
        let diag_max = m.diagonal().iter().copied().fold(0.0, f64::max);
        if let Some(chol) = m.clone().cholesky() {
            return Some(Self { chol });
        }
        let mut shift = 1e-14 * diag_max.max(1e-300);
        for _ in 0..6 {
            for i in 0..m.nrows() {
                m[(i, i)] += shift;
            }
            if let Some(chol) = m.clone().cholesky() {
                return Some(Self { chol });
            }
            shift *= 100.0;
        }
        None
    }

    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(rhs)
    }
}

/// Per-block constraint lists, so the Schur complement loops only over the
/// coefficients living in a block.
fn block_index(p: &SdpProblem) -> Vec<Vec<(usize, &SparseSym)>> {
    let mut idx = vec![Vec::new(); p.block_sizes.len()];
    for (k, con) in p.constraints.iter().enumerate() {
        for (b, a) in &con.terms {
            idx[*b].push((k, a));
        }
    }
    idx
}

fn schur_matrix(m: usize, index: &[Vec<(usize, &SparseSym)>], scalings: &[NtScaling]) -> DMatrix<f64> {
    let mut schur = DMatrix::zeros(m, m);
    for (list, sc) in index.iter().zip(scalings) {
        for (pos, &(j, aj)) in list.iter().enumerate() {
            let waw = aj.congruence(&sc.w);
            for &(i, ai) in &list[pos..] {
                let v = ai.dot(&waw);
                schur[(i, j)] += v;
                if i != j {
                    schur[(j, i)] += v;
                }
            }
        }
    }
    schur
}

struct Direction {
    dx: Vec<DMatrix<f64>>,
    dy: DVector<f64>,
    dz: Vec<DMatrix<f64>>,
}

/// Solves `A(ΔX) = rp`, `Aᵀ(Δy) + ΔZ = rd`, `ΔX + W ΔZ W = rc`.
fn newton_direction(
    p: &SdpProblem,
    schur: &SchurSystem,
    scalings: &[NtScaling],
    rp: &DVector<f64>,
    rd: &[DMatrix<f64>],
    rc: &[DMatrix<f64>],
) -> Direction {
    let shifted: Vec<DMatrix<f64>> =
        rc.iter().zip(rd).zip(scalings).map(|((rc, rd), sc)| rc - &sc.w * rd * &sc.w).collect();
    let rhs = rp - p.apply(&shifted);
    let dy = schur.solve(&rhs);
    let ady = p.apply_adjoint(dy.as_slice());
    let dz: Vec<DMatrix<f64>> = rd.iter().zip(&ady).map(|(rd, a)| rd - a).collect();
    let dx: Vec<DMatrix<f64>> = rc
        .iter()
        .zip(&dz)
        .zip(scalings)
        .map(|((rc, dz), sc)| {
            let mut d = rc - &sc.w * dz * &sc.w;
            symmetrize(&mut d);
            d
        })
        .collect();
    Direction { dx, dy, dz }
}

/// Maps a scaled complementarity target `R` to `G Δ Gᵀ` where
/// `(V Δ + Δ V) / 2 = R`.
fn unscale_complementarity(sc: &NtScaling, r: &DMatrix<f64>) -> DMatrix<f64> {
    let n = r.nrows();
    let delta = DMatrix::from_fn(n, n, |i, j| 2.0 * r[(i, j)] / (sc.v[i] + sc.v[j]));
    let mut out = &sc.g * delta * sc.g.transpose();
    symmetrize(&mut out);
    out
}

fn step_lengths(dir: &Direction, scalings: &[NtScaling]) -> (f64, f64) {
    let mut ap = f64::INFINITY;
    let mut ad = f64::INFINITY;
    for ((dx, dz), sc) in dir.dx.iter().zip(&dir.dz).zip(scalings) {
        ap = ap.min(max_step(&sc.x_chol_inv, dx));
        ad = ad.min(max_step(&sc.z_chol_inv, dz));
    }
    (ap, ad)
}

/// Runs the interior-point method.
pub fn solve(p: &SdpProblem, opts: &SolveOptions) -> Result<SdpSolution, SdpError> {
    p.validate()?;
    let m = p.constraints.len();
    let order = p.cone_order() as f64;
    let b = p.rhs();
    let b_norm = b.norm();
    let c_norm = blocks_norm(&p.objective);
    let index = block_index(p);

    let alpha = 1.0 + b_norm;
    let beta = 1.0 + c_norm.max(1.0);
    let mut x: Vec<DMatrix<f64>> = p.block_sizes.iter().map(|&n| DMatrix::identity(n, n) * alpha).collect();
    let mut z: Vec<DMatrix<f64>> = p.block_sizes.iter().map(|&n| DMatrix::identity(n, n) * beta).collect();
    let mut y = DVector::<f64>::zeros(m);

    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;
    let (mut pinf, mut dinf, mut pobj, mut dobj);

    loop {
        let rp = &b - p.apply(&x);
        let ay = p.apply_adjoint(y.as_slice());
        let rd: Vec<DMatrix<f64>> =
            p.objective.iter().zip(&z).zip(&ay).map(|((c, z), a)| c - z - a).collect();
        pobj = p.primal_objective(&x);
        dobj = p.dual_objective(y.as_slice());
        pinf = rp.norm() / (1.0 + b_norm);
        dinf = blocks_norm(&rd) / (1.0 + c_norm);
        let complementarity = blocks_dot(&x, &z);
        debug_assert!(complementarity >= 0.0, "⟨X, Z⟩ < 0 on an interior iterate");
        let mu = complementarity / order;

        let gap = (pobj - dobj).abs();
        if gap <= opts.gap_tol * (1.0 + pobj.abs()) && pinf <= opts.feas_tol && dinf <= opts.feas_tol {
            status = SolveStatus::Optimal;
            break;
        }
        if certifies_primal_infeasibility(p, y.as_slice(), &ay) || certifies_dual_infeasibility(p, &x) {
            status = SolveStatus::Infeasible;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        if !(pobj.is_finite() && dobj.is_finite()) || blocks_norm(&x) > 1e14 || y.amax() > 1e14 {
            status = SolveStatus::NumericalFailure;
            break;
        }

        let Some(scalings) = x.iter().zip(&z).map(|(x, z)| nt_scaling(x, z)).collect::<Option<Vec<_>>>() else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let Some(schur) = SchurSystem::factor(schur_matrix(m, &index, &scalings)) else {
            status = SolveStatus::NumericalFailure;
            break;
        };

        // Predictor: target V∘V = 0, which unscales to ΔX + W ΔZ W = −X.
        let rc_aff: Vec<DMatrix<f64>> = x.iter().map(|x| -x).collect();
        let aff = newton_direction(p, &schur, &scalings, &rp, &rd, &rc_aff);
        let (ap_max, ad_max) = step_lengths(&aff, &scalings);
        let ap = ap_max.min(1.0);
        let ad = ad_max.min(1.0);
        let mu_aff = x
            .iter()
            .zip(&z)
            .zip(aff.dx.iter().zip(&aff.dz))
            .map(|((x, z), (dx, dz))| (x + dx * ap).dot(&(z + dz * ad)))
            .sum::<f64>()
            / order;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector with the second-order term sym(ΔX̃ ΔZ̃).
        let rc: Vec<DMatrix<f64>> = scalings
            .iter()
            .zip(aff.dx.iter().zip(&aff.dz))
            .map(|(sc, (dx, dz))| {
                let dxs = &sc.g_inv * dx * sc.g_inv.transpose();
                let dzs = sc.g.transpose() * dz * &sc.g;
                let prod = &dxs * &dzs;
                let n = sc.v.len();
                let mut r = (&prod + prod.transpose()) * -0.5;
                for i in 0..n {
                    r[(i, i)] += sigma * mu - sc.v[i] * sc.v[i];
                }
                unscale_complementarity(sc, &r)
            })
            .collect();
        let dir = newton_direction(p, &schur, &scalings, &rp, &rd, &rc);
        let (ap_max, ad_max) = step_lengths(&dir, &scalings);
        let ap = (0.98 * ap_max).min(1.0);
        let ad = (0.98 * ad_max).min(1.0);

        for (x, dx) in x.iter_mut().zip(&dir.dx) {
            *x += dx * ap;
            symmetrize(x);
        }
        y += &dir.dy * ad;
        for (z, dz) in z.iter_mut().zip(&dir.dz) {
            *z += dz * ad;
            symmetrize(z);
        }
        iterations += 1;
    }

    Ok(SdpSolution {
        status,
        x,
        y: y.as_slice().to_vec(),
        z,
        primal_objective: pobj,
        dual_objective: dobj,
        gap: (pobj - dobj).abs(),
        primal_infeasibility: pinf,
        dual_infeasibility: dinf,
        iterations,
    })
}

const INFEASIBILITY_TOL: f64 = 1e-8;

/// Farkas ray for the primal: `b·y > 0` and `Σ y_k A_k ⪯ ε (b·y) I`.
fn certifies_primal_infeasibility(p: &SdpProblem, y: &[f64], ay: &[DMatrix<f64>]) -> bool {
    let by = p.dual_objective(y);
    if !(by > 0.0) {
        return false;
    }
    let lmax = ay.iter().map(|a| -sym_lambda_min(&(-a))).fold(f64::NEG_INFINITY, f64::max);
    lmax <= INFEASIBILITY_TOL * by && y.iter().map(|v| v.abs()).fold(0.0, f64::max) > 1e3
}

/// Improving ray for the primal: `⟨C, X⟩ < 0` and `‖A(X)‖ ≤ ε |⟨C, X⟩|`.
fn certifies_dual_infeasibility(p: &SdpProblem, x: &[DMatrix<f64>]) -> bool {
    let cx = p.primal_objective(x);
    if !(cx < 0.0) {
        return false;
    }
    p.apply(x).norm() <= INFEASIBILITY_TOL * cx.abs() && blocks_norm(x) > 1e3
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{herm_eig, ComplexMatrix};

    fn toy_problem() -> SdpProblem {
        // min Tr X s.t. X_00 = 1, X ⪰ 0 on a 2x2 block
        let mut p = SdpProblem::new(vec![2]);
        p.set_objective(0, DMatrix::identity(2, 2));
        p.add_constraint(Constraint::new(1.0).with_term(0, SparseSym::from_triplets([(0, 0, 1.0)])));
        p
    }

    #[test]
    fn toy_optimum_is_one() {
        let p = toy_problem();
        let s = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.primal_objective - 1.0).abs() < 1e-7);
        assert!((s.dual_objective - 1.0).abs() < 1e-7);
        assert!((s.x[0][(1, 1)]).abs() < 1e-6);
        let cert = check_certificate(&p, &s).unwrap();
        assert!(cert.max_violation() < 1e-7, "{cert:?}");
        assert!(s.dual_objective <= s.primal_objective + 1e-8 * (1.0 + s.primal_objective.abs()));
    }

    #[test]
    fn perturbed_primal_is_flagged() {
        let p = toy_problem();
        let mut s = solve(&p, &SolveOptions::default()).unwrap();
        s.x[0] += DMatrix::identity(2, 2) * 1e-3;
        let cert = check_certificate(&p, &s).unwrap();
        assert!(cert.equality_residual >= 1e-4);
    }

    #[test]
    fn negative_trace_is_infeasible() {
        let mut p = SdpProblem::new(vec![2]);
        p.add_constraint(Constraint::new(-1.0).with_term(0, SparseSym::identity(2, 1.0)));
        let s = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
        assert!(check_certificate(&p, &s).is_none());
    }

    #[test]
    fn unbounded_primal_is_infeasible_dual() {
        // min -X_01 over 2x2 PSD with X_00 - X_11 = 0: X = t[[1,1],[1,1]] is an improving ray.
        let mut p = SdpProblem::new(vec![2]);
        p.set_objective(0, DMatrix::from_row_slice(2, 2, &[0.0, -0.5, -0.5, 0.0]));
        p.add_constraint(Constraint::new(0.0).with_term(0, SparseSym::from_triplets([(0, 0, 1.0), (1, 1, -1.0)])));
        let s = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
    }

    #[test]
    fn malformed_problems_are_rejected() {
        let mut p = SdpProblem::new(vec![2]);
        p.add_constraint(Constraint::new(1.0).with_term(0, SparseSym::from_triplets([(0, 2, 1.0)])));
        assert!(matches!(solve(&p, &SolveOptions::default()), Err(SdpError::MalformedConstraint { .. })));
        let mut p = SdpProblem::new(vec![2]);
        p.set_objective(0, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        assert!(matches!(p.validate(), Err(SdpError::MalformedBlock { .. })));
    }

    #[test]
    fn solves_are_deterministic() {
        let p = toy_problem();
        let a = solve(&p, &SolveOptions::default()).unwrap();
        let b = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(a.status, b.status);
        assert_eq!(a.primal_objective.to_bits(), b.primal_objective.to_bits());
        assert_eq!(a.dual_objective.to_bits(), b.dual_objective.to_bits());
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn lovasz_theta_of_pentagon() {
        // ϑ(C5) = √5: max ⟨J, X⟩ s.t. Tr X = 1, X_ij = 0 on edges.
        let n = 5;
        let mut p = SdpProblem::new(vec![n]);
        p.set_objective(0, -DMatrix::from_element(n, n, 1.0));
        p.add_constraint(Constraint::new(1.0).with_term(0, SparseSym::identity(n, 1.0)));
        for i in 0..n {
            let j = (i + 1) % n;
            p.add_constraint(Constraint::new(0.0).with_term(0, SparseSym::from_triplets([(i, j, 1.0)])));
        }
        let s = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.primal_objective + 5f64.sqrt()).abs() < 1e-7, "{}", s.primal_objective);
    }

    #[test]
    fn embedding_examples() {
        let e = embed_hermitian(&ComplexMatrix::identity(3)).unwrap();
        assert_eq!(e, DMatrix::identity(6, 6));

        let sy = ComplexMatrix::from_row_major(
            2,
            2,
            &[Complex64::new(0.0, 0.0), Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0)],
        )
        .unwrap();
        let e = embed_hermitian(&sy).unwrap();
        let mut ev: Vec<f64> = e.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        for (got, want) in ev.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((e.trace() - 2.0 * sy.trace().re).abs() < 1e-15);
    }

    #[test]
    fn embedding_rejects_non_hermitian() {
        let x = ComplexMatrix::from_row_major(1, 1, &[Complex64::new(0.0, 1.0)]).unwrap();
        assert!(embed_hermitian(&x).is_err());
    }

    #[test]
    fn contraction_is_adjoint_of_embedding() {
        let h = ComplexMatrix::from_row_major(
            2,
            2,
            &[Complex64::new(1.0, 0.0), Complex64::new(0.3, 0.7), Complex64::new(0.3, -0.7), Complex64::new(-2.0, 0.0)],
        )
        .unwrap();
        let k = ComplexMatrix::from_row_major(
            2,
            2,
            &[Complex64::new(0.5, 0.0), Complex64::new(-0.1, 0.2), Complex64::new(-0.1, -0.2), Complex64::new(0.25, 0.0)],
        )
        .unwrap();
        let lhs = embed_hermitian(&h).unwrap().dot(&embed_hermitian(&k).unwrap());
        let rhs = h.trace_product(&contract_hermitian(&embed_hermitian(&k).unwrap())).re;
        assert!((lhs - rhs).abs() < 1e-14);
        assert!((&Field::Complex.extract(&embed_hermitian(&k).unwrap()) - &k).max_abs() < 1e-15);
    }

    #[test]
    fn sparse_coefficients_match_dense_embedding() {
        let entries = [
            (0, 1, Complex64::new(0.5, -0.25)),
            (1, 0, Complex64::new(0.5, 0.25)),
            (2, 2, Complex64::new(-1.0, 0.0)),
        ];
        let dense = ComplexMatrix::from_fn(3, 3, |i, j| {
            entries.iter().filter(|e| e.0 == i && e.1 == j).map(|e| e.2).sum()
        });
        let sparse = Field::Complex.coefficient(3, &entries).to_dense(6);
        assert_eq!(sparse, embed_hermitian(&dense).unwrap());
        let real = Field::Real.coefficient(3, &entries).to_dense(3);
        assert_eq!(real, dense.real_part());
    }

    #[test]
    fn text_dump_lists_every_block() {
        let mut buf = Vec::new();
        toy_problem().write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("sdp 1 1\nsides 2\nobjective 0\n"));
        assert!(text.contains("constraint 0 1.00000000000000000e0"));
        assert!(text.ends_with("end\n"));
    }

    #[test]
    fn embedding_preserves_spectrum_of_random_hermitian() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.random_range(1..6);
            let h = ComplexMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .hermitian_part();
            let lmin_h = herm_eig(&h).unwrap().min();
            let lmin_e = sym_lambda_min(&embed_hermitian(&h).unwrap());
            assert!((lmin_h - lmin_e).abs() < 1e-12);
        }
    }
}
