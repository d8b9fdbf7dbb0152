//! κ-entanglement (both programs), logarithmic negativity, the `Z` upper
//! bound, binegativity, one-shot cost bounds and witnesses.
//!
//! Every Hermitian unknown is parameterized by real coordinates on a basis of
//! Hermitian matrices and enters the solver as the `y` vector of the standard
//! form. For real input states the basis is restricted to real symmetric
//! matrices; averaging any feasible point with its complex conjugate keeps it
//! feasible and leaves the objective unchanged, so nothing is lost.

use num_complex::Complex64;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::linalg::{herm_abs, herm_eig, is_psd, trace_norm, BipartiteOperator, ComplexMatrix, LinalgError};
use crate::sdp::{
    check_certificate, solve, CertificateReport, Constraint, Field, SdpError, SdpProblem, SdpSolution, SolveOptions,
    SolveStatus,
};

/// `log₂` values closer than this to zero are reported as exactly zero.
pub const ZERO_CLAMP: f64 = 5e-7;

/// Largest `d_A · d_B` accepted by the κ programs.
pub const MAX_DIMENSION: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("solver finished with status {:?} after {} iterations (gap {:e}, infeasibility {:e}/{:e})",
        .0.status, .0.iterations, .0.gap, .0.primal_infeasibility, .0.dual_infeasibility)]
    Solver(Box<SolveDiagnostics>),
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("total dimension {0} exceeds the supported maximum of {MAX_DIMENSION}")]
    DimensionTooLarge(usize),
}

/// Solver outcome attached to every computed value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub status: SolveStatus,
    pub iterations: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub certificate: Option<CertificateReport>,
}

impl SolveDiagnostics {
    pub fn new(p: &SdpProblem, s: &SdpSolution) -> Self {
        Self {
            status: s.status,
            iterations: s.iterations,
            primal_objective: s.primal_objective,
            dual_objective: s.dual_objective,
            gap: s.gap,
            primal_infeasibility: s.primal_infeasibility,
            dual_infeasibility: s.dual_infeasibility,
            certificate: check_certificate(p, s),
        }
    }
}

/// Solves and insists on an optimal certificate.
pub(crate) fn solve_optimal(p: &SdpProblem, opts: &SolveOptions) -> Result<(SdpSolution, SolveDiagnostics), MeasureError> {
    let s = solve(p, opts)?;
    let diag = SolveDiagnostics::new(p, &s);
    if s.status != SolveStatus::Optimal {
        return Err(MeasureError::Solver(Box::new(diag)));
    }
    Ok((s, diag))
}

pub(crate) fn clamp_log(v: f64) -> f64 {
    if v.abs() <= ZERO_CLAMP {
        0.0
    } else {
        v
    }
}

/// Hermitian matrix listed entrywise, both triangles present.
pub(crate) type HermEntries = Vec<(usize, usize, Complex64)>;

/// Real coordinates on the space of `n × n` Hermitian matrices.
#[derive(Clone, Debug)]
pub struct HermitianBasis {
    n: usize,
    field: Field,
    elements: Vec<HermEntries>,
}

impl HermitianBasis {
    /// Matrix units `E_ii`, `E_ij + E_ji` and (complex field) `i E_ij − i E_ji`.
    pub fn full(n: usize, field: Field) -> Self {
        let mut elements: Vec<HermEntries> = (0..n).map(|i| vec![(i, i, Complex64::new(1.0, 0.0))]).collect();
        Self::push_off_diagonal(&mut elements, n, field);
        Self { n, field, elements }
    }

    /// Traceless subspace: `E_ii − E_{n−1,n−1}` plus the off-diagonal units.
    pub fn traceless(n: usize, field: Field) -> Self {
        let one = Complex64::new(1.0, 0.0);
        let mut elements: Vec<HermEntries> =
            (0..n.saturating_sub(1)).map(|i| vec![(i, i, one), (n - 1, n - 1, -one)]).collect();
        Self::push_off_diagonal(&mut elements, n, field);
        Self { n, field, elements }
    }

    fn push_off_diagonal(elements: &mut Vec<HermEntries>, n: usize, field: Field) {
        let one = Complex64::new(1.0, 0.0);
        let i_unit = Complex64::new(0.0, 1.0);
        for i in 0..n {
            for j in (i + 1)..n {
                elements.push(vec![(i, j, one), (j, i, one)]);
                if field == Field::Complex {
                    elements.push(vec![(i, j, i_unit), (j, i, -i_unit)]);
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn elements(&self) -> &[HermEntries] {
        &self.elements
    }

    /// `Σ_k y_k B_k`.
    pub fn assemble(&self, y: &[f64]) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.n, self.n);
        for (entries, &yk) in self.elements.iter().zip(y) {
            for &(i, j, z) in entries {
                m[(i, j)] += z * yk;
            }
        }
        m
    }
}

/// Entries of `X^{T_B}` for `X` given entrywise on `C^{d_A} ⊗ C^{d_B}`.
pub(crate) fn pt_entries(entries: &[(usize, usize, Complex64)], dim_b: usize) -> HermEntries {
    entries
        .iter()
        .map(|&(r, c, z)| {
            let (i, j) = (r / dim_b, r % dim_b);
            let (k, l) = (c / dim_b, c % dim_b);
            (i * dim_b + l, k * dim_b + j, z)
        })
        .collect()
}

pub(crate) fn scaled(entries: &[(usize, usize, Complex64)], s: f64) -> HermEntries {
    entries.iter().map(|&(i, j, z)| (i, j, z * s)).collect()
}

/// `Tr[m · H]` for `H` given entrywise.
pub(crate) fn trace_against(m: &ComplexMatrix, entries: &[(usize, usize, Complex64)]) -> f64 {
    entries.iter().map(|&(i, j, z)| (z * m[(j, i)]).re).sum()
}

pub(crate) fn field_for(ops: &[&BipartiteOperator]) -> Field {
    if ops.iter().all(|o| o.matrix().is_real()) {
        Field::Real
    } else {
        Field::Complex
    }
}

fn require_density_shape(rho: &BipartiteOperator) -> Result<(), MeasureError> {
    if rho.dim() > MAX_DIMENSION {
        return Err(MeasureError::DimensionTooLarge(rho.dim()));
    }
    if !rho.matrix().is_hermitian(1e-10) {
        return Err(MeasureError::InvalidInput("state is not Hermitian".into()));
    }
    Ok(())
}

/// Standard-form program whose `y` side is `S`:
/// `max −Tr S` s.t. `S ⪰ 0`, `S^{T_B} − ρ^{T_B} ⪰ 0`, `S^{T_B} + ρ^{T_B} ⪰ 0`.
pub fn kappa_primal_problem(rho: &BipartiteOperator) -> Result<(SdpProblem, HermitianBasis), MeasureError> {
    require_density_shape(rho)?;
    let n = rho.dim();
    let field = field_for(&[rho]);
    let basis = HermitianBasis::full(n, field);
    let side = field.block_side(n);
    let r = rho.partial_transpose();
    let r_dense = field.dense(r.matrix())?;

    let mut p = SdpProblem::new(vec![side; 3]);
    p.set_objective(1, -&r_dense);
    p.set_objective(2, r_dense);
    for b in basis.elements() {
        let tr: f64 = b.iter().filter(|(i, j, _)| i == j).map(|(_, _, z)| z.re).sum();
        let pt = field.coefficient(n, &scaled(&pt_entries(b, rho.dim_b()), -1.0));
        p.add_constraint(
            Constraint::new(-tr)
                .with_term(0, field.coefficient(n, &scaled(b, -1.0)))
                .with_term(1, pt.clone())
                .with_term(2, pt),
        );
    }
    Ok((p, basis))
}

#[derive(Clone, Debug)]
pub struct KappaPrimal {
    /// `log₂ Tr S*` in bits.
    pub value: f64,
    pub s: BipartiteOperator,
    /// `max(−λ_min(S), −λ_min(S^{T_B} − ρ^{T_B}), −λ_min(S^{T_B} + ρ^{T_B}))`.
    pub constraint_violation: f64,
    pub diagnostics: SolveDiagnostics,
}

/// `E_κ(ρ) = log₂ min { Tr S : −S^{T_B} ≤ ρ^{T_B} ≤ S^{T_B}, S ⪰ 0 }`.
pub fn e_kappa_primal(rho: &BipartiteOperator, opts: &SolveOptions) -> Result<KappaPrimal, MeasureError> {
    let (p, basis) = kappa_primal_problem(rho)?;
    let (sol, diagnostics) = solve_optimal(&p, opts)?;
    let s = rho.with_matrix(basis.assemble(&sol.y).hermitian_part())?;
    let s_pt = s.partial_transpose();
    let r = rho.partial_transpose();
    let violation = [
        herm_eig(s.matrix())?.min(),
        herm_eig(&(s_pt.matrix() - r.matrix()))?.min(),
        herm_eig(&(s_pt.matrix() + r.matrix()))?.min(),
    ]
    .into_iter()
    .fold(0.0f64, |acc, l| acc.max(-l));
    let value = clamp_log(s.trace().log2());
    Ok(KappaPrimal { value, s, constraint_violation: violation, diagnostics })
}

/// Standard-form program whose `y` side is `(V, W)`:
/// `max Tr ρ(V − W)` s.t. `V^{T_B} ⪰ 0`, `W^{T_B} ⪰ 0`, `I − V − W ⪰ 0`.
pub fn kappa_dual_problem(rho: &BipartiteOperator) -> Result<(SdpProblem, HermitianBasis), MeasureError> {
    require_density_shape(rho)?;
    let n = rho.dim();
    let field = field_for(&[rho]);
    let basis = HermitianBasis::full(n, field);
    let side = field.block_side(n);

    let mut p = SdpProblem::new(vec![side; 3]);
    p.set_objective(2, field.dense(&ComplexMatrix::identity(n))?);
    for (block, sign) in [(0usize, 1.0), (1usize, -1.0)] {
        for b in basis.elements() {
            let rhs = sign * trace_against(rho.matrix(), b);
            p.add_constraint(
                Constraint::new(rhs)
                    .with_term(block, field.coefficient(n, &scaled(&pt_entries(b, rho.dim_b()), -1.0)))
                    .with_term(2, field.coefficient(n, b)),
            );
        }
    }
    Ok((p, basis))
}

#[derive(Clone, Debug)]
pub struct KappaDual {
    /// `log₂ Tr ρ(V* − W*)` in bits.
    pub value: f64,
    pub v: BipartiteOperator,
    pub w: BipartiteOperator,
    /// `max(−λ_min(V^{T_B}), −λ_min(W^{T_B}), −λ_min(I − V − W))`.
    pub constraint_violation: f64,
    pub diagnostics: SolveDiagnostics,
}

/// `E_κ^dual(ρ) = log₂ max { Tr ρ(V − W) : V + W ≤ I, V^{T_B}, W^{T_B} ⪰ 0 }`.
pub fn e_kappa_dual(rho: &BipartiteOperator, opts: &SolveOptions) -> Result<KappaDual, MeasureError> {
    let (p, basis) = kappa_dual_problem(rho)?;
    let (sol, diagnostics) = solve_optimal(&p, opts)?;
    let k = basis.len();
    let v = rho.with_matrix(basis.assemble(&sol.y[..k]).hermitian_part())?;
    let w = rho.with_matrix(basis.assemble(&sol.y[k..]).hermitian_part())?;
    let slack = &(&ComplexMatrix::identity(rho.dim()) - v.matrix()) - w.matrix();
    let violation = [
        herm_eig(v.partial_transpose().matrix())?.min(),
        herm_eig(w.partial_transpose().matrix())?.min(),
        herm_eig(&slack)?.min(),
    ]
    .into_iter()
    .fold(0.0f64, |acc, l| acc.max(-l));
    let objective = rho.matrix().trace_product(&(v.matrix() - w.matrix())).re;
    let value = clamp_log(objective.log2());
    Ok(KappaDual { value, v, w, constraint_violation: violation, diagnostics })
}

/// `E_N(ρ) = log₂ ‖ρ^{T_B}‖₁`.
pub fn log_negativity(rho: &BipartiteOperator) -> f64 {
    trace_norm(rho.partial_transpose().matrix()).log2().max(0.0)
}

/// Eigenvalues of `|ρ^{T_B}|` below this magnitude are treated as zero.
const ABS_ZERO_TOL: f64 = 1e-12;

fn binegativity_operator(rho: &BipartiteOperator) -> Result<BipartiteOperator, MeasureError> {
    let abs = herm_abs(rho.partial_transpose().matrix(), ABS_ZERO_TOL)?;
    Ok(rho.with_matrix(abs)?.partial_transpose())
}

/// `log₂ Z(ρ)` with `Z = ‖ρ^{T_B}‖₁ + d_A d_B · max{0, −λ_min(|ρ^{T_B}|^{T_B})}`.
pub fn z_bound(rho: &BipartiteOperator) -> Result<f64, MeasureError> {
    let norm = trace_norm(rho.partial_transpose().matrix());
    let lmin = herm_eig(binegativity_operator(rho)?.matrix())?.min();
    let z = norm + rho.dim() as f64 * (-lmin).max(0.0);
    Ok(z.log2().max(0.0))
}

/// `|ρ^{T_B}|^{T_B} ⪰ 0` (tolerance `1e−9`).
pub fn binegativity_holds(rho: &BipartiteOperator) -> Result<bool, MeasureError> {
    Ok(is_psd(binegativity_operator(rho)?.matrix(), 1e-9))
}

/// A real number or `−∞`; serialized as a number or the string `"-inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LowerBound {
    MinusInfinity,
    Finite(f64),
}

impl LowerBound {
    pub fn as_f64(self) -> f64 {
        match self {
            LowerBound::MinusInfinity => f64::NEG_INFINITY,
            LowerBound::Finite(v) => v,
        }
    }
}

impl Serialize for LowerBound {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            LowerBound::MinusInfinity => s.serialize_str("-inf"),
            LowerBound::Finite(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for LowerBound {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(LowerBound::Finite(v)),
            Repr::Str(s) if s == "-inf" => Ok(LowerBound::MinusInfinity),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("expected a number or \"-inf\", got {s:?}"))),
        }
    }
}

impl std::fmt::Display for LowerBound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LowerBound::MinusInfinity => f.write_str("-inf"),
            LowerBound::Finite(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneShotBounds {
    pub lower: LowerBound,
    pub upper: f64,
}

/// `log₂(2^{E_κ} − 1) ≤ E^{(1)}_PPT ≤ log₂(2^{E_κ} + 2)`.
pub fn one_shot_bounds(e_kappa: f64) -> Result<OneShotBounds, MeasureError> {
    if !(e_kappa >= 0.0) || !e_kappa.is_finite() {
        return Err(MeasureError::InvalidInput(format!("E_κ must be a finite non-negative number, got {e_kappa}")));
    }
    let base = e_kappa.exp2();
    let lower = if e_kappa == 0.0 { LowerBound::MinusInfinity } else { LowerBound::Finite((base - 1.0).log2()) };
    Ok(OneShotBounds { lower, upper: (base + 2.0).log2() })
}

#[derive(Clone, Debug)]
pub struct Witness {
    /// `Z = W* − V*`, an element of the witness-generating set.
    pub z: BipartiteOperator,
    /// `Tr[(Z + I) ρ] = 1 − 2^{E_κ^dual(ρ)}`.
    pub violation: f64,
    pub dual: KappaDual,
}

impl Witness {
    /// The entanglement witness `Z + I`.
    pub fn shifted(&self) -> BipartiteOperator {
        self.z.combine(1.0, &BipartiteOperator::identity(self.z.dim_a(), self.z.dim_b()), 1.0)
    }

    /// `Tr[(Z + I) σ]`.
    pub fn evaluate(&self, sigma: &BipartiteOperator) -> f64 {
        self.shifted().matrix().trace_product(sigma.matrix()).re
    }
}

/// Witness read off the dual optimizers.
pub fn extract_witness(rho: &BipartiteOperator, opts: &SolveOptions) -> Result<Witness, MeasureError> {
    let dual = e_kappa_dual(rho, opts)?;
    let z = dual.w.combine(1.0, &dual.v, -1.0);
    let shifted = z.combine(1.0, &BipartiteOperator::identity(rho.dim_a(), rho.dim_b()), 1.0);
    let raw = shifted.matrix().trace_product(rho.matrix()).re;
    let violation = if raw.abs() <= ZERO_CLAMP { 0.0 } else { raw };
    Ok(Witness { z, violation, dual })
}

#[derive(Clone, Debug, Serialize)]
pub struct AdditivityReport {
    /// `E_κ(ρ ⊗ ω)` solved directly on `A A' | B B'`.
    pub lhs: f64,
    /// `E_κ(ρ) + E_κ(ω)`.
    pub rhs: f64,
    pub gap: f64,
    pub e_rho: f64,
    pub e_omega: f64,
}

pub fn additivity_check(
    rho: &BipartiteOperator,
    omega: &BipartiteOperator,
    opts: &SolveOptions,
) -> Result<AdditivityReport, MeasureError> {
    let dim = rho.dim() * omega.dim();
    if dim > MAX_DIMENSION {
        return Err(MeasureError::DimensionTooLarge(dim));
    }
    let joint = rho.tensor(omega);
    let lhs = e_kappa_primal(&joint, opts)?.value;
    let e_rho = e_kappa_primal(rho, opts)?.value;
    let e_omega = e_kappa_primal(omega, opts)?.value;
    let rhs = e_rho + e_omega;
    Ok(AdditivityReport { lhs, rhs, gap: (lhs - rhs).abs(), e_rho, e_omega })
}

/// Every quantity computed for one state.
#[derive(Clone, Debug, Serialize)]
pub struct MeasureReport {
    pub dim_a: usize,
    pub dim_b: usize,
    pub e_kappa_primal: f64,
    pub e_kappa_dual: f64,
    pub e_n: f64,
    pub log2_z: f64,
    pub one_shot_lower: LowerBound,
    pub one_shot_upper: f64,
    pub binegativity_holds: bool,
    pub primal_diagnostics: SolveDiagnostics,
    pub dual_diagnostics: SolveDiagnostics,
}

pub fn measure(rho: &BipartiteOperator, opts: &SolveOptions) -> Result<MeasureReport, MeasureError> {
    let primal = e_kappa_primal(rho, opts)?;
    let dual = e_kappa_dual(rho, opts)?;
    let bounds = one_shot_bounds(primal.value)?;
    Ok(MeasureReport {
        dim_a: rho.dim_a(),
        dim_b: rho.dim_b(),
        e_kappa_primal: primal.value,
        e_kappa_dual: dual.value,
        e_n: log_negativity(rho),
        log2_z: z_bound(rho)?,
        one_shot_lower: bounds.lower,
        one_shot_upper: bounds.upper,
        binegativity_holds: binegativity_holds(rho)?,
        primal_diagnostics: primal.diagnostics,
        dual_diagnostics: dual.diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{antisym_rank2, depolarize, convexity_trio, max_entangled, monogamy_state, random_state};

    const TOL: f64 = 1e-6;

    fn opts() -> SolveOptions {
        SolveOptions::default()
    }

    #[test]
    fn basis_spans_hermitian_matrices() {
        let h = ComplexMatrix::from_row_major(
            2,
            2,
            &[Complex64::new(0.3, 0.0), Complex64::new(0.1, -0.4), Complex64::new(0.1, 0.4), Complex64::new(-1.0, 0.0)],
        )
        .unwrap();
        let basis = HermitianBasis::full(2, Field::Complex);
        assert_eq!(basis.len(), 4);
        let y = [0.3, -1.0, 0.1, -0.4];
        assert!((&basis.assemble(&y) - &h).max_abs() < 1e-15);
        assert_eq!(HermitianBasis::full(3, Field::Real).len(), 6);
        let traceless = HermitianBasis::traceless(3, Field::Complex);
        assert_eq!(traceless.len(), 8);
        assert!(traceless.assemble(&[0.7; 8]).trace().norm() < 1e-15);
    }

    #[test]
    fn partial_transpose_of_entries_matches_dense() {
        let rho = random_state(2, 3, 3, 5).unwrap();
        let entries: HermEntries =
            (0..6).flat_map(|i| (0..6).map(move |j| (i, j))).map(|(i, j)| (i, j, rho.matrix()[(i, j)])).collect();
        let pt = pt_entries(&entries, 3);
        let dense = ComplexMatrix::from_fn(6, 6, |i, j| pt.iter().filter(|e| e.0 == i && e.1 == j).map(|e| e.2).sum());
        assert_eq!(&dense, rho.partial_transpose().matrix());
    }

    #[test]
    fn maximally_entangled_normalization() {
        for d in 2..=3 {
            let rho = max_entangled(d).unwrap();
            let p = e_kappa_primal(&rho, &opts()).unwrap();
            assert!((p.value - (d as f64).log2()).abs() < TOL, "d={d}: {}", p.value);
            assert!(p.constraint_violation < 1e-7);
            let dl = e_kappa_dual(&rho, &opts()).unwrap();
            assert!((dl.value - (d as f64).log2()).abs() < TOL);
            assert!(dl.constraint_violation < 1e-7);
        }
    }

    #[test]
    fn antisymmetric_state_values() {
        let rho = antisym_rank2();
        let p = e_kappa_primal(&rho, &opts()).unwrap();
        let d = e_kappa_dual(&rho, &opts()).unwrap();
        assert!((p.value - 1.0).abs() < TOL);
        assert!((d.value - 1.0).abs() < TOL);
        assert!((log_negativity(&rho) - (1.0 + std::f64::consts::FRAC_1_SQRT_2).log2()).abs() < 1e-12);
        let z = z_bound(&rho).unwrap();
        assert!((z - (1.0 + 13.0 / (4.0 * 2f64.sqrt())).log2()).abs() < 1e-10, "{z}");
        assert!(!binegativity_holds(&rho).unwrap());
    }

    #[test]
    fn ppt_states_have_zero_kappa() {
        let rho2 = convexity_trio().rho2;
        assert_eq!(e_kappa_primal(&rho2, &opts()).unwrap().value, 0.0);
        assert_eq!(e_kappa_dual(&rho2, &opts()).unwrap().value, 0.0);
        // V = I, W = 0 is always dual feasible with value Tr ρ = 1.
        let (p, basis) = kappa_dual_problem(&rho2).unwrap();
        let k = basis.len();
        let mut y = vec![0.0; 2 * k];
        for i in 0..rho2.dim() {
            y[i] = 1.0;
        }
        assert!((p.dual_objective(&y) - 1.0).abs() < 1e-15);
        let slack = p.dual_slack(&y);
        for blk in slack {
            let lmin = blk.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
            assert!(lmin >= -1e-15);
        }
    }

    #[test]
    fn convexity_average_matches_negativity() {
        let avg = convexity_trio().average;
        let p = e_kappa_primal(&avg, &opts()).unwrap();
        assert!((p.value - 1.5f64.log2()).abs() < TOL);
        assert!(binegativity_holds(&avg).unwrap());
    }

    #[test]
    fn z_bound_equals_negativity_under_binegativity() {
        for d in 2..=4 {
            let rho = max_entangled(d).unwrap();
            assert!(binegativity_holds(&rho).unwrap());
            assert!((z_bound(&rho).unwrap() - (d as f64).log2()).abs() < 1e-10);
        }
        for seed in 0..5 {
            let rho = random_state(2, 2, 2, seed).unwrap();
            assert!(binegativity_holds(&rho).unwrap());
            assert!((z_bound(&rho).unwrap() - log_negativity(&rho)).abs() < 1e-9);
        }
    }

    #[test]
    fn one_shot_bound_examples() {
        let b = one_shot_bounds(0.0).unwrap();
        assert_eq!(b.lower, LowerBound::MinusInfinity);
        assert!((b.upper - 3f64.log2()).abs() < 1e-15);
        let b = one_shot_bounds(1.0).unwrap();
        assert_eq!(b.lower, LowerBound::Finite(0.0));
        assert_eq!(b.upper, 2.0);
        let b = one_shot_bounds(3f64.log2()).unwrap();
        assert!((b.lower.as_f64() - 1.0).abs() < 1e-15);
        assert!((b.upper - 5f64.log2()).abs() < 1e-15);
        assert!(one_shot_bounds(-0.1).is_err());
        assert_eq!(serde_json::to_string(&LowerBound::MinusInfinity).unwrap(), "\"-inf\"");
        assert_eq!(serde_json::from_str::<LowerBound>("\"-inf\"").unwrap(), LowerBound::MinusInfinity);
        assert_eq!(serde_json::from_str::<LowerBound>("0.5").unwrap(), LowerBound::Finite(0.5));
    }

    #[test]
    fn witness_examples() {
        let w = extract_witness(&max_entangled(2).unwrap(), &opts()).unwrap();
        assert!((w.violation + 1.0).abs() < TOL, "{}", w.violation);
        let w = extract_witness(&convexity_trio().average, &opts()).unwrap();
        assert!((w.violation + 0.5).abs() < TOL);
        let w = extract_witness(&convexity_trio().rho2, &opts()).unwrap();
        assert!(w.violation.abs() < TOL);
    }

    #[test]
    fn witness_is_nonnegative_on_ppt_states() {
        let w = extract_witness(&antisym_rank2(), &opts()).unwrap();
        assert!((w.violation + 1.0).abs() < TOL);
        let mut checked = 0;
        for seed in 0..40 {
            let raw = random_state(3, 3, 9, seed).unwrap();
            let sigma = (1..=20)
                .map(|k| depolarize(&raw, k as f64 * 0.05))
                .find(|s| is_psd(s.partial_transpose().matrix(), 1e-12))
                .unwrap();
            assert!(w.evaluate(&sigma) >= -1e-7);
            checked += 1;
        }
        let product = BipartiteOperator::product(
            &ComplexMatrix::from_diagonal(&[0.2, 0.3, 0.5]),
            &ComplexMatrix::from_diagonal(&[0.6, 0.1, 0.3]),
        )
        .unwrap();
        assert!(w.evaluate(&product) >= -1e-7);
        assert!(w.evaluate(&BipartiteOperator::identity(3, 3).scale(1.0 / 9.0)) >= -1e-7);
        assert!(checked > 0);
    }

    #[test]
    fn monogamy_marginal_negativity() {
        let m = monogamy_state();
        assert!((log_negativity(&m.ac) - 1.5f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn complex_states_use_embedding() {
        let rho = random_state(2, 2, 4, 3).unwrap();
        assert!(!rho.matrix().is_real());
        let (p, _) = kappa_primal_problem(&rho).unwrap();
        assert_eq!(p.block_sizes(), &[8, 8, 8]);
        let e = e_kappa_primal(&rho, &opts()).unwrap().value;
        assert!((e - log_negativity(&rho)).abs() < TOL);
    }

    #[test]
    fn oversized_input_is_rejected() {
        let big = BipartiteOperator::identity(11, 10).scale(1.0 / 110.0);
        assert!(matches!(e_kappa_primal(&big, &opts()), Err(MeasureError::DimensionTooLarge(110))));
        let phi = max_entangled(4).unwrap();
        assert!(matches!(
            additivity_check(&phi, &antisym_rank2(), &opts()),
            Err(MeasureError::DimensionTooLarge(144))
        ));
    }
}
