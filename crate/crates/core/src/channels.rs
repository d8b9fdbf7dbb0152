//! Exact one-shot preparation under completely-PPT-preserving channels.
//!
//! A state `ρ` is prepared from `Φ^m` by the measure-prepare channel
//! `Λ(X) = ρ Tr[Φ^m X] + G Tr[(I − Φ^m) X]`, which is C-PPT-P exactly when
//! `G ⪰ 0`, `Tr G = 1` and `−(m−1) G^{T_B} ≤ ρ^{T_B} ≤ (m+1) G^{T_B}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{herm_eig, kron, partial_transpose_subsystems, trace_norm, BipartiteOperator, ComplexMatrix, LinalgError};
use crate::measures::{
    e_kappa_primal, field_for, one_shot_bounds, pt_entries, scaled, solve_optimal, HermitianBasis, LowerBound,
    MeasureError, SolveDiagnostics,
};
use crate::sdp::{Constraint, SdpProblem, SolveOptions, SparseSym};
use crate::states::max_entangled;

/// Optimal `t` at or below this value counts as feasible.
pub const FEASIBLE_T: f64 = 1e-8;

/// Optimal `t` above this value certifies infeasibility.
pub const INFEASIBLE_T: f64 = 1e-6;

/// Rounding guard on the integer search window.
const WINDOW_GUARD: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no Schmidt rank in [{lo}, {hi}] is feasible for E_κ = {e_kappa} (optimal t per rank: {rejected:?})")]
    Integrity { e_kappa: f64, lo: usize, hi: usize, rejected: Vec<(usize, f64)> },
}

#[derive(Clone, Debug)]
pub struct Feasibility {
    pub m: usize,
    /// Optimal value of `t`.
    pub t: f64,
    /// Minimizing auxiliary state.
    pub g: BipartiteOperator,
    pub diagnostics: SolveDiagnostics,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        self.t <= FEASIBLE_T
    }

    pub fn certified_infeasible(&self) -> bool {
        self.t > INFEASIBLE_T
    }

    pub fn feasible_g(&self) -> Option<&BipartiteOperator> {
        self.is_feasible().then_some(&self.g)
    }
}

/// `min t` s.t. `G ⪰ 0`, `Tr G = 1`, `(m+1)G^{T_B} − ρ^{T_B} + tI ⪰ 0`,
/// `ρ^{T_B} + (m−1)G^{T_B} + tI ⪰ 0`.
pub fn feasibility_problem(rho: &BipartiteOperator, m: usize) -> Result<(SdpProblem, HermitianBasis), ChannelError> {
    if m == 0 {
        return Err(ChannelError::InvalidInput("Schmidt rank m must be at least 1".into()));
    }
    let n = rho.dim();
    if n > crate::measures::MAX_DIMENSION {
        return Err(MeasureError::DimensionTooLarge(n).into());
    }
    let field = field_for(&[rho]);
    let basis = HermitianBasis::traceless(n, field);
    let side = field.block_side(n);
    let mf = m as f64;
    let r = field.dense(rho.partial_transpose().matrix())?;
    let centre = field.dense(&ComplexMatrix::identity(n).scale(1.0 / n as f64))?;

    let mut p = SdpProblem::new(vec![side; 3]);
    p.set_objective(0, centre.clone());
    p.set_objective(1, &centre * (mf + 1.0) - &r);
    p.set_objective(2, &r + &centre * (mf - 1.0));
    for b in basis.elements() {
        let pt = pt_entries(b, rho.dim_b());
        let mut con = Constraint::new(0.0)
            .with_term(0, field.coefficient(n, &scaled(b, -1.0)))
            .with_term(1, field.coefficient(n, &scaled(&pt, -(mf + 1.0))));
        if m > 1 {
            con = con.with_term(2, field.coefficient(n, &scaled(&pt, -(mf - 1.0))));
        }
        p.add_constraint(con);
    }
    p.add_constraint(
        Constraint::new(-1.0).with_term(1, SparseSym::identity(side, -1.0)).with_term(2, SparseSym::identity(side, -1.0)),
    );
    Ok((p, basis))
}

pub fn feasibility_g(rho: &BipartiteOperator, m: usize, opts: &SolveOptions) -> Result<Feasibility, ChannelError> {
    let (p, basis) = feasibility_problem(rho, m)?;
    let (sol, diagnostics) = solve_optimal(&p, opts)?;
    let k = basis.len();
    let n = rho.dim();
    let g = &ComplexMatrix::identity(n).scale(1.0 / n as f64) + &basis.assemble(&sol.y[..k]);
    let g = rho.with_matrix(g.hermitian_part())?;
    Ok(Feasibility { m, t: sol.y[k], g, diagnostics })
}

fn check_prepare_shapes(rho: &BipartiteOperator, g: &BipartiteOperator, m: usize) -> Result<(), ChannelError> {
    if m == 0 {
        return Err(ChannelError::InvalidInput("Schmidt rank m must be at least 1".into()));
    }
    if !rho.same_shape(g) {
        return Err(ChannelError::InvalidInput(format!(
            "ρ is {}⊗{} but G is {}⊗{}",
            rho.dim_a(),
            rho.dim_b(),
            g.dim_a(),
            g.dim_b()
        )));
    }
    Ok(())
}

/// `Λ(X) = ρ Tr[Φ^m X] + G Tr[(I − Φ^m) X]` for an `m ⊗ m` input.
pub fn measure_prepare_apply(
    rho: &BipartiteOperator,
    g: &BipartiteOperator,
    m: usize,
    input: &BipartiteOperator,
) -> Result<ComplexMatrix, ChannelError> {
    check_prepare_shapes(rho, g, m)?;
    if input.dim_a() != m || input.dim_b() != m {
        return Err(ChannelError::InvalidInput(format!(
            "input is {}⊗{}, expected {m}⊗{m}",
            input.dim_a(),
            input.dim_b()
        )));
    }
    let phi = max_entangled(m).expect("m ≥ 1");
    let hit = phi.matrix().trace_product(input.matrix());
    let miss = input.matrix().trace() - hit;
    Ok(&rho.matrix().scale_complex(hit) + &g.matrix().scale_complex(miss))
}

/// `Σ_ij |i⟩⟨j| ⊗ Λ(|i⟩⟨j|)`, input factors `Â B̂` first, then output `A B`.
pub fn choi_matrix(rho: &BipartiteOperator, g: &BipartiteOperator, m: usize) -> Result<ComplexMatrix, ChannelError> {
    check_prepare_shapes(rho, g, m)?;
    let din = m * m;
    let dout = rho.dim();
    let mut choi = ComplexMatrix::zeros(din * dout, din * dout);
    for i in 0..din {
        for j in 0..din {
            let mut unit = ComplexMatrix::zeros(din, din);
            unit[(i, j)] = Complex64::new(1.0, 0.0);
            let out = measure_prepare_apply(rho, g, m, &BipartiteOperator::new(unit, m, m)?)?;
            for r in 0..dout {
                for c in 0..dout {
                    choi[(i * dout + r, j * dout + c)] = out[(r, c)];
                }
            }
        }
    }
    Ok(choi)
}

/// Partial transpose of a Choi matrix on the input `B̂` and output `B` factors.
pub fn choi_ppt_transpose(choi: &ComplexMatrix, rho: &BipartiteOperator, m: usize) -> Result<ComplexMatrix, ChannelError> {
    Ok(partial_transpose_subsystems(choi, &[m, m, rho.dim_a(), rho.dim_b()], &[false, true, false, true])?)
}

/// `T_B ∘ Λ ∘ T_B̂` applied to an `m ⊗ m` input.
pub fn transposed_map_apply(
    rho: &BipartiteOperator,
    g: &BipartiteOperator,
    m: usize,
    input: &BipartiteOperator,
) -> Result<BipartiteOperator, ChannelError> {
    let out = measure_prepare_apply(rho, g, m, &input.partial_transpose())?;
    Ok(rho.with_matrix(out)?.partial_transpose())
}

/// `Π^S` and `Π^A` on `C^m ⊗ C^m`.
pub fn symmetric_projectors(m: usize) -> (ComplexMatrix, ComplexMatrix) {
    let n = m * m;
    let swap = ComplexMatrix::from_fn(n, n, |r, c| {
        Complex64::new(if r / m == c % m && r % m == c / m { 1.0 } else { 0.0 }, 0.0)
    });
    let id = ComplexMatrix::identity(n);
    ((&id + &swap).scale(0.5), (&id - &swap).scale(0.5))
}

/// `T(X) = Φ Tr[Φ X] + (I − Φ)/(d² − 1) · Tr[(I − Φ) X]` on `d ⊗ d`.
pub fn isotropic_twirl(x: &BipartiteOperator) -> Result<BipartiteOperator, ChannelError> {
    let d = x.dim_a();
    if x.dim_b() != d {
        return Err(ChannelError::InvalidInput(format!("twirl needs d⊗d, got {}⊗{}", d, x.dim_b())));
    }
    if d < 2 {
        return Err(ChannelError::InvalidInput("twirl needs d ≥ 2".into()));
    }
    let phi = max_entangled(d).expect("d ≥ 2");
    let hit = phi.matrix().trace_product(x.matrix());
    let miss = x.matrix().trace() - hit;
    let complement = &ComplexMatrix::identity(d * d) - phi.matrix();
    let out = &phi.matrix().scale_complex(hit) + &complement.scale_complex(miss / ((d * d - 1) as f64));
    Ok(x.with_matrix(out)?)
}

/// Everything needed to audit an exact one-shot preparation.
#[derive(Clone, Debug)]
pub struct PreparationCertificate {
    pub m: usize,
    pub g: BipartiteOperator,
    /// Choi matrix on `Â B̂ A B`.
    pub choi: ComplexMatrix,
    /// `‖Λ(Φ^m) − ρ‖₁ / 2`.
    pub prep_residual: f64,
    pub cp_lambda_min: f64,
    pub pptp_lambda_min: f64,
    pub e_kappa: f64,
    pub lower: LowerBound,
    pub upper: f64,
    pub t: f64,
    /// `(m, optimal t)` for every smaller rank rejected during the scan.
    pub rejected: Vec<(usize, f64)>,
    pub g_trace: f64,
    pub g_lambda_min: f64,
    pub g_pt_lambda_min: f64,
    /// `λ_min((m+1)G^{T_B} − ρ^{T_B})`.
    pub upper_condition: f64,
    /// `λ_min(ρ^{T_B} + (m−1)G^{T_B})`.
    pub lower_condition: f64,
    /// Max-entry deviation of the transposed map on `Π^S/d_S` from `(ρ^{T_B} + (m−1)G^{T_B})/m`.
    pub symmetric_branch_residual: f64,
    /// Same on `Π^A/d_A` against `((m+1)G^{T_B} − ρ^{T_B})/m`; zero when `m = 1`.
    pub antisymmetric_branch_residual: f64,
}

/// Named pass/fail line of a certificate audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckLine {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckLine {
    fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, passed: value <= tolerance }
    }

    fn at_least(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, passed: value >= -tolerance }
    }
}

impl PreparationCertificate {
    pub fn log2_m(&self) -> f64 {
        (self.m as f64).log2()
    }

    /// Audits every invariant of the certificate.
    pub fn checks(&self) -> Vec<CheckLine> {
        let log_m = self.log2_m();
        let mut lines = vec![
            CheckLine::at_most("trace of G", (self.g_trace - 1.0).abs(), 1e-8),
            CheckLine::at_least("G positive", self.g_lambda_min, 1e-8),
            CheckLine::at_least("G PPT", self.g_pt_lambda_min, 1e-8),
            CheckLine::at_least("(m+1)G^TB - rho^TB", self.upper_condition, 1e-7),
            CheckLine::at_least("rho^TB + (m-1)G^TB", self.lower_condition, 1e-7),
            CheckLine::at_most("preparation residual", self.prep_residual, 1e-7),
            CheckLine::at_least("Choi positive", self.cp_lambda_min, 1e-7),
            CheckLine::at_least("Choi PPT", self.pptp_lambda_min, 1e-7),
            CheckLine::at_most("symmetric branch", self.symmetric_branch_residual, 1e-7),
            CheckLine::at_most("antisymmetric branch", self.antisymmetric_branch_residual, 1e-7),
            CheckLine::at_least("log2 m above lower bound", log_m - self.lower.as_f64(), 1e-6),
            CheckLine::at_least("log2 m below upper bound", self.upper - log_m, 1e-6),
            CheckLine::at_least("E_kappa at most log2 m", log_m - self.e_kappa, 1e-6),
        ];
        if let Some(&(prev, t)) = self.rejected.iter().find(|(r, _)| *r + 1 == self.m) {
            lines.push(CheckLine {
                name: format!("m-1 = {prev} infeasible"),
                value: t,
                tolerance: INFEASIBLE_T,
                passed: t > INFEASIBLE_T,
            });
        } else if self.m >= 2 {
            lines.push(CheckLine { name: "m-1 scanned".into(), value: f64::NAN, tolerance: 0.0, passed: false });
        }
        lines
    }

    pub fn passes(&self) -> bool {
        self.checks().iter().all(|c| c.passed)
    }
}

/// Builds and audits the measure-prepare certificate for a feasible `(m, G)`.
pub fn certify(
    rho: &BipartiteOperator,
    feasible: &Feasibility,
    e_kappa: f64,
    rejected: Vec<(usize, f64)>,
) -> Result<PreparationCertificate, ChannelError> {
    let m = feasible.m;
    let g = &feasible.g;
    let bounds = one_shot_bounds(e_kappa)?;
    let choi = choi_matrix(rho, g, m)?;
    let cp_lambda_min = herm_eig(&choi.hermitian_part())?.min();
    let pptp_lambda_min = herm_eig(&choi_ppt_transpose(&choi, rho, m)?.hermitian_part())?.min();

    let phi = max_entangled(m).expect("m ≥ 1");
    let prepared = measure_prepare_apply(rho, g, m, &phi)?;
    let prep_residual = 0.5 * trace_norm(&(&prepared - rho.matrix()).hermitian_part());

    let r = rho.partial_transpose();
    let gpt = g.partial_transpose();
    let mf = m as f64;
    let upper_op = gpt.combine(mf + 1.0, &r, -1.0);
    let lower_op = r.combine(1.0, &gpt, mf - 1.0);

    let (pi_s, pi_a) = symmetric_projectors(m);
    let d_s = (m * (m + 1) / 2) as f64;
    let d_a = (m * (m - 1) / 2) as f64;
    let sym_out = transposed_map_apply(rho, g, m, &BipartiteOperator::new(pi_s.scale(1.0 / d_s), m, m)?)?;
    let symmetric_branch_residual = (sym_out.matrix() - lower_op.scale(1.0 / mf).matrix()).max_abs();
    let antisymmetric_branch_residual = if m >= 2 {
        let anti_out = transposed_map_apply(rho, g, m, &BipartiteOperator::new(pi_a.scale(1.0 / d_a), m, m)?)?;
        (anti_out.matrix() - upper_op.scale(1.0 / mf).matrix()).max_abs()
    } else {
        0.0
    };

    Ok(PreparationCertificate {
        m,
        g: g.clone(),
        choi,
        prep_residual,
        cp_lambda_min,
        pptp_lambda_min,
        e_kappa,
        lower: bounds.lower,
        upper: bounds.upper,
        t: feasible.t,
        rejected,
        g_trace: g.trace(),
        g_lambda_min: herm_eig(g.matrix())?.min(),
        g_pt_lambda_min: herm_eig(gpt.matrix())?.min(),
        upper_condition: herm_eig(upper_op.matrix())?.min(),
        lower_condition: herm_eig(lower_op.matrix())?.min(),
        symmetric_branch_residual,
        antisymmetric_branch_residual,
    })
}

/// Integer window `[max(1, ⌈2^E − 1⌉), ⌊2^E + 2⌋]` with rounding guards.
pub fn search_window(e_kappa: f64) -> (usize, usize) {
    let base = e_kappa.exp2();
    let lo = ((base - 1.0 - WINDOW_GUARD).ceil().max(1.0)) as usize;
    let hi = (base + 2.0 + WINDOW_GUARD).floor() as usize;
    (lo, hi)
}

/// Smallest `m` whose preparation channel exists, with its certificate.
pub fn one_shot_exact_cost(rho: &BipartiteOperator, opts: &SolveOptions) -> Result<PreparationCertificate, ChannelError> {
    let e_kappa = e_kappa_primal(rho, opts)?.value;
    let (lo, hi) = search_window(e_kappa);
    let mut rejected = Vec::new();
    // The rank just below the window is scanned too, so minimality is always
    // backed by an explicit infeasibility certificate.
    let start = if lo >= 2 { lo - 1 } else { lo };
    for m in start..=hi {
        let f = feasibility_g(rho, m, opts)?;
        if f.is_feasible() {
            return certify(rho, &f, e_kappa, rejected);
        }
        rejected.push((m, f.t));
    }
    Err(ChannelError::Integrity { e_kappa, lo, hi, rejected })
}

/// Closed form of [`choi_matrix`]: `Φ^m ⊗ ρ + (I − Φ^m) ⊗ G`.
pub fn choi_closed_form(rho: &BipartiteOperator, g: &BipartiteOperator, m: usize) -> ComplexMatrix {
    let phi = max_entangled(m).expect("m ≥ 1");
    let complement = &ComplexMatrix::identity(m * m) - phi.matrix();
    &kron(phi.matrix(), rho.matrix()) + &kron(&complement, g.matrix())
}
