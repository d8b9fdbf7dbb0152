//! Named bipartite states and a seeded random-state generator.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::linalg::{herm_eig, BipartiteOperator, ComplexMatrix, LinalgError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("parameter {0} outside [0, 1]")]
    ParameterOutOfRange(f64),
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("rank {rank} invalid for total dimension {dim}")]
    InvalidRank { rank: usize, dim: usize },
    #[error("not a density matrix: {0}")]
    NotDensity(String),
    #[error("unknown state name '{0}'")]
    UnknownName(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Tolerances for [`validate_density`].
#[derive(Clone, Copy, Debug)]
pub struct DensityTolerance {
    pub hermitian: f64,
    pub psd: f64,
    pub trace: f64,
}

impl Default for DensityTolerance {
    fn default() -> Self {
        Self { hermitian: 1e-10, psd: 1e-10, trace: 1e-10 }
    }
}

/// Checks Hermiticity, positivity and unit trace.
pub fn validate_density(rho: &BipartiteOperator, tol: DensityTolerance) -> Result<(), StateError> {
    let m = rho.matrix();
    let herm = m.hermiticity_violation();
    if herm > tol.hermitian {
        return Err(StateError::NotDensity(format!("Hermiticity violation {herm:e}")));
    }
    let tr = m.trace();
    if (tr.re - 1.0).abs() > tol.trace || tr.im.abs() > tol.trace {
        return Err(StateError::NotDensity(format!("trace {} + {}i", tr.re, tr.im)));
    }
    let lmin = herm_eig(&m.hermitian_part())?.min();
    if lmin < -tol.psd {
        return Err(StateError::NotDensity(format!("smallest eigenvalue {lmin:e}")));
    }
    Ok(())
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Ket on `C^{d_A} ⊗ C^{d_B}` from `((i, j), amplitude)` pairs.
fn ket(dim_a: usize, dim_b: usize, terms: &[((usize, usize), f64)]) -> Vec<Complex64> {
    let mut v = vec![real(0.0); dim_a * dim_b];
    for &((i, j), amp) in terms {
        v[i * dim_b + j] += real(amp);
    }
    v
}

fn mixture(dim_a: usize, dim_b: usize, parts: &[(f64, &[Complex64])]) -> BipartiteOperator {
    let n = dim_a * dim_b;
    let mut m = ComplexMatrix::zeros(n, n);
    for &(w, v) in parts {
        if w != 0.0 {
            m = &m + &ComplexMatrix::projector(v).scale(w);
        }
    }
    BipartiteOperator::new(m, dim_a, dim_b).expect("dimensions agree by construction")
}

fn check_unit(p: f64) -> Result<(), StateError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(StateError::ParameterOutOfRange(p))
    }
}

/// `Φ^d = (1/d) Σ_ij |ii⟩⟨jj|`.
pub fn max_entangled(d: usize) -> Result<BipartiteOperator, StateError> {
    if d == 0 {
        return Err(StateError::ZeroDimension);
    }
    let amp = 1.0 / (d as f64).sqrt();
    let terms: Vec<_> = (0..d).map(|i| ((i, i), amp)).collect();
    let v = ket(d, d, &terms);
    Ok(mixture(d, d, &[(1.0, &v)]))
}

fn singlet(a: usize, b: usize) -> Vec<Complex64> {
    ket(3, 3, &[((a, b), FRAC_1_SQRT_2), ((b, a), -FRAC_1_SQRT_2)])
}

fn triplet(a: usize, b: usize) -> Vec<Complex64> {
    ket(3, 3, &[((a, b), FRAC_1_SQRT_2), ((b, a), FRAC_1_SQRT_2)])
}

/// Equal mixture of `(|01⟩ − |10⟩)/√2` and `(|02⟩ − |20⟩)/√2` on two qutrits.
pub fn antisym_rank2() -> BipartiteOperator {
    let (v1, v2) = (singlet(0, 1), singlet(0, 2));
    mixture(3, 3, &[(0.5, &v1), (0.5, &v2)])
}

/// `σ_p = p |v₁⟩⟨v₁| + (1 − p) |v₂⟩⟨v₂|` with the two antisymmetric kets of [`antisym_rank2`].
pub fn family_sigma(p: f64) -> Result<BipartiteOperator, StateError> {
    check_unit(p)?;
    let (v1, v2) = (singlet(0, 1), singlet(0, 2));
    Ok(mixture(3, 3, &[(p, &v1), (1.0 - p, &v2)]))
}

/// `ω_p = (p/2)|u₁⟩⟨u₁| + ((1−p)/2)|u₂⟩⟨u₂| + (1/2)|u₃⟩⟨u₃|` with `|u₁⟩ = |00⟩`,
/// `|u₂⟩ = (|02⟩+|20⟩)/√2`, `|u₃⟩ = (|12⟩+|21⟩)/√2`.
pub fn family_omega(p: f64) -> Result<BipartiteOperator, StateError> {
    family_omega_with(p, (0, 0))
}

/// [`family_omega`] with `|u₁⟩` replaced by the product ket `|u₁.0 u₁.1⟩`.
pub fn family_omega_with(p: f64, u1: (usize, usize)) -> Result<BipartiteOperator, StateError> {
    check_unit(p)?;
    if u1.0 >= 3 || u1.1 >= 3 {
        return Err(StateError::NotDensity(format!("|{}{}⟩ is not a two-qutrit ket", u1.0, u1.1)));
    }
    let u1 = ket(3, 3, &[(u1, 1.0)]);
    let (u2, u3) = (triplet(0, 2), triplet(1, 2));
    Ok(mixture(3, 3, &[(p / 2.0, &u1), ((1.0 - p) / 2.0, &u2), (0.5, &u3)]))
}

/// `τ_p = (3p/4)|w₁⟩⟨w₁| + (3(1−p)/4)|w₂⟩⟨w₂| + I/36` with
/// `|w₁⟩ = (|00⟩+|12⟩+|21⟩)/√3`, `|w₂⟩ = (|02⟩+|20⟩)/√2`.
pub fn family_tau(p: f64) -> Result<BipartiteOperator, StateError> {
    check_unit(p)?;
    let s3 = 1.0 / 3f64.sqrt();
    let w1 = ket(3, 3, &[((0, 0), s3), ((1, 2), s3), ((2, 1), s3)]);
    let w2 = triplet(0, 2);
    let coherent = mixture(3, 3, &[(0.75 * p, &w1), (0.75 * (1.0 - p), &w2)]);
    Ok(coherent.combine(1.0, &BipartiteOperator::identity(3, 3), 1.0 / 36.0))
}

/// Two-qubit states showing that the κ-entanglement is not convex.
#[derive(Clone, Debug)]
pub struct ConvexityTrio {
    /// `Φ²`.
    pub rho1: BipartiteOperator,
    /// `(|00⟩⟨00| + |11⟩⟨11|)/2`.
    pub rho2: BipartiteOperator,
    /// `(ρ₁ + ρ₂)/2`.
    pub average: BipartiteOperator,
}

pub fn convexity_trio() -> ConvexityTrio {
    let rho1 = max_entangled(2).expect("d = 2");
    let rho2 = BipartiteOperator::new(ComplexMatrix::from_diagonal(&[0.5, 0.0, 0.0, 0.5]), 2, 2).expect("2x2");
    let average = rho1.combine(0.5, &rho2, 0.5);
    ConvexityTrio { rho1, rho2, average }
}

/// Three-qubit pure state `(|000⟩ + |011⟩ + √2|110⟩)/2` and its cuts.
#[derive(Clone, Debug)]
pub struct MonogamyState {
    /// Whole state across `A | BC` (`d_A = 2`, `d_B = 4`).
    pub a_bc: BipartiteOperator,
    /// `Tr_C ψ`.
    pub ab: BipartiteOperator,
    /// `Tr_B ψ`.
    pub ac: BipartiteOperator,
}

pub fn monogamy_state() -> MonogamyState {
    let mut v = vec![real(0.0); 8];
    v[0b000] = real(0.5);
    v[0b011] = real(0.5);
    v[0b110] = real(std::f64::consts::SQRT_2 / 2.0);
    let psi = ComplexMatrix::projector(&v);
    let dims = [2, 2, 2];
    let ab = crate::linalg::partial_trace_subsystems(&psi, &dims, &[true, true, false]).expect("8 = 2·2·2");
    let ac = crate::linalg::partial_trace_subsystems(&psi, &dims, &[true, false, true]).expect("8 = 2·2·2");
    MonogamyState {
        a_bc: BipartiteOperator::new(psi, 2, 4).expect("8 = 2·4"),
        ab: BipartiteOperator::new(ab, 2, 2).expect("4 = 2·2"),
        ac: BipartiteOperator::new(ac, 2, 2).expect("4 = 2·2"),
    }
}

/// `G G† / Tr[G G†]` with `G` a `d_A d_B × rank` matrix of standard complex
/// Gaussian entries drawn from a ChaCha8 stream seeded with `seed`.
pub fn random_state(dim_a: usize, dim_b: usize, rank: usize, seed: u64) -> Result<BipartiteOperator, StateError> {
    if dim_a == 0 || dim_b == 0 {
        return Err(StateError::ZeroDimension);
    }
    let n = dim_a * dim_b;
    if rank == 0 || rank > n {
        return Err(StateError::InvalidRank { rank, dim: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = ComplexMatrix::zeros(n, rank);
    for i in 0..n {
        for k in 0..rank {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            g[(i, k)] = Complex64::new(re, im);
        }
    }
    let m = &g * &g.adjoint();
    let tr = m.trace().re;
    let m = m.scale(1.0 / tr).hermitian_part();
    Ok(BipartiteOperator::new(m, dim_a, dim_b)?)
}

/// `(1 − weight) ρ + weight · I/(d_A d_B)`.
pub fn depolarize(rho: &BipartiteOperator, weight: f64) -> BipartiteOperator {
    let mixed = BipartiteOperator::identity(rho.dim_a(), rho.dim_b()).scale(1.0 / rho.dim() as f64);
    rho.combine(1.0 - weight, &mixed, weight)
}

/// Built-in state names: `phi:<d>`, `rho_v`, `sigma:<p>`, `omega:<p>`,
/// `tau:<p>`, `convexity:{1,2,avg}`, `monogamy:{ab,ac,abc}`.
#[derive(Clone, Debug, PartialEq)]
pub enum NamedState {
    MaxEntangled(usize),
    AntisymRank2,
    Sigma(f64),
    Omega(f64),
    Tau(f64),
    Convexity(ConvexityPart),
    Monogamy(MonogamyPart),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvexityPart {
    One,
    Two,
    Average,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MonogamyPart {
    Ab,
    Ac,
    Abc,
}

impl NamedState {
    pub fn build(&self) -> Result<BipartiteOperator, StateError> {
        match *self {
            NamedState::MaxEntangled(d) => max_entangled(d),
            NamedState::AntisymRank2 => Ok(antisym_rank2()),
            NamedState::Sigma(p) => family_sigma(p),
            NamedState::Omega(p) => family_omega(p),
            NamedState::Tau(p) => family_tau(p),
            NamedState::Convexity(part) => {
                let trio = convexity_trio();
                Ok(match part {
                    ConvexityPart::One => trio.rho1,
                    ConvexityPart::Two => trio.rho2,
                    ConvexityPart::Average => trio.average,
                })
            }
            NamedState::Monogamy(part) => {
                let m = monogamy_state();
                Ok(match part {
                    MonogamyPart::Ab => m.ab,
                    MonogamyPart::Ac => m.ac,
                    MonogamyPart::Abc => m.a_bc,
                })
            }
        }
    }
}

impl FromStr for NamedState {
    type Err = StateError;

    fn from_str(s: &str) -> Result<Self, StateError> {
        let unknown = || StateError::UnknownName(s.to_string());
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let unit = |a: Option<&str>| -> Result<f64, StateError> {
            let p: f64 = a.ok_or_else(unknown)?.parse().map_err(|_| unknown())?;
            check_unit(p)?;
            Ok(p)
        };
        match head {
            "phi" => {
                let d: usize = arg.ok_or_else(unknown)?.parse().map_err(|_| unknown())?;
                if d == 0 {
                    return Err(StateError::ZeroDimension);
                }
                Ok(NamedState::MaxEntangled(d))
            }
            "rho_v" if arg.is_none() => Ok(NamedState::AntisymRank2),
            "sigma" => Ok(NamedState::Sigma(unit(arg)?)),
            "omega" => Ok(NamedState::Omega(unit(arg)?)),
            "tau" => Ok(NamedState::Tau(unit(arg)?)),
            "convexity" => match arg {
                Some("1") => Ok(NamedState::Convexity(ConvexityPart::One)),
                Some("2") => Ok(NamedState::Convexity(ConvexityPart::Two)),
                Some("avg") => Ok(NamedState::Convexity(ConvexityPart::Average)),
                _ => Err(unknown()),
            },
            "monogamy" => match arg {
                Some("ab") => Ok(NamedState::Monogamy(MonogamyPart::Ab)),
                Some("ac") => Ok(NamedState::Monogamy(MonogamyPart::Ac)),
                Some("abc") => Ok(NamedState::Monogamy(MonogamyPart::Abc)),
                _ => Err(unknown()),
            },
            _ => Err(unknown()),
        }
    }
}

impl fmt::Display for NamedState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NamedState::MaxEntangled(d) => write!(f, "phi:{d}"),
            NamedState::AntisymRank2 => write!(f, "rho_v"),
            NamedState::Sigma(p) => write!(f, "sigma:{p}"),
            NamedState::Omega(p) => write!(f, "omega:{p}"),
            NamedState::Tau(p) => write!(f, "tau:{p}"),
            NamedState::Convexity(ConvexityPart::One) => write!(f, "convexity:1"),
            NamedState::Convexity(ConvexityPart::Two) => write!(f, "convexity:2"),
            NamedState::Convexity(ConvexityPart::Average) => write!(f, "convexity:avg"),
            NamedState::Monogamy(MonogamyPart::Ab) => write!(f, "monogamy:ab"),
            NamedState::Monogamy(MonogamyPart::Ac) => write!(f, "monogamy:ac"),
            NamedState::Monogamy(MonogamyPart::Abc) => write!(f, "monogamy:abc"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, trace_norm, Subsystem};

    fn e_n(rho: &BipartiteOperator) -> f64 {
        trace_norm(rho.partial_transpose().matrix()).log2()
    }

    fn all_named() -> Vec<BipartiteOperator> {
        let mut v = vec![max_entangled(1).unwrap(), max_entangled(2).unwrap(), max_entangled(4).unwrap(), antisym_rank2()];
        for p in [0.0, 0.3, 0.5, 1.0] {
            v.push(family_sigma(p).unwrap());
            v.push(family_omega(p).unwrap());
            v.push(family_tau(p).unwrap());
        }
        let t = convexity_trio();
        v.extend([t.rho1, t.rho2, t.average]);
        let m = monogamy_state();
        v.extend([m.a_bc, m.ab, m.ac]);
        v
    }

    #[test]
    fn every_constructor_emits_a_density_matrix() {
        for rho in all_named() {
            validate_density(&rho, DensityTolerance::default()).unwrap();
        }
    }

    #[test]
    fn max_entangled_examples() {
        assert!(matches!(max_entangled(0), Err(StateError::ZeroDimension)));
        let phi1 = max_entangled(1).unwrap();
        assert_eq!(phi1.matrix(), &ComplexMatrix::identity(1));
        assert!((e_n(&max_entangled(2).unwrap()) - 1.0).abs() < 1e-12);
        let marg = max_entangled(4).unwrap().partial_trace(Subsystem::A);
        assert!((&marg - &ComplexMatrix::identity(4).scale(0.25)).max_abs() < 1e-14);
    }

    #[test]
    fn antisym_state_properties() {
        let rho = antisym_rank2();
        let nt = trace_norm(rho.partial_transpose().matrix());
        assert!((nt - (1.0 + FRAC_1_SQRT_2)).abs() < 1e-12);
        let eig = herm_eig(rho.matrix()).unwrap();
        assert_eq!(eig.values.iter().filter(|l| l.abs() > 1e-12).count(), 2);
        // Π^S ρ Π^S = 0 with Π^S = (I + F)/2
        let swap = ComplexMatrix::from_fn(9, 9, |r, c| real(if r / 3 == c % 3 && r % 3 == c / 3 { 1.0 } else { 0.0 }));
        let sym = (&ComplexMatrix::identity(9) + &swap).scale(0.5);
        assert!((&(&sym * rho.matrix()) * &sym).max_abs() < 1e-15);
    }

    #[test]
    fn family_examples() {
        assert_eq!(family_sigma(0.5).unwrap(), antisym_rank2());
        assert!((e_n(&family_sigma(0.0).unwrap()) - 1.0).abs() < 1e-12);
        for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let lmin = herm_eig(family_tau(p).unwrap().matrix()).unwrap().min();
            assert!(lmin >= 1.0 / 36.0 - 1e-14);
        }
        for bad in [-0.1, 1.5, f64::NAN] {
            assert!(family_sigma(bad).is_err());
            assert!(family_omega(bad).is_err());
            assert!(family_tau(bad).is_err());
        }
    }

    #[test]
    fn omega_variant_builder() {
        assert_eq!(family_omega_with(0.4, (0, 0)).unwrap(), family_omega(0.4).unwrap());
        let alt = family_omega_with(0.4, (0, 1)).unwrap();
        validate_density(&alt, DensityTolerance::default()).unwrap();
        assert!(family_omega_with(0.4, (3, 0)).is_err());
    }

    #[test]
    fn families_are_lipschitz() {
        let delta = 1e-6;
        for p in [0.0, 0.2, 0.5, 0.9] {
            for f in [family_sigma, family_omega, family_tau] {
                let a = f(p).unwrap();
                let b = f(p + delta).unwrap();
                let dist = trace_norm(&(a.matrix() - b.matrix()));
                assert!(dist <= 4.0 * delta, "{dist}");
            }
        }
    }

    #[test]
    fn convexity_trio_negativities() {
        let t = convexity_trio();
        assert!((e_n(&t.rho1) - 1.0).abs() < 1e-12);
        assert!(e_n(&t.rho2).abs() < 1e-12);
        assert!((e_n(&t.average) - 1.5f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn monogamy_state_cuts() {
        let m = monogamy_state();
        assert!((m.a_bc.trace() - 1.0).abs() < 1e-15);
        let purity = m.a_bc.matrix().trace_product(m.a_bc.matrix()).re;
        assert!((purity - 1.0).abs() < 1e-12);
        assert!((e_n(&m.a_bc) - 1.0).abs() < 1e-12);
        assert!((e_n(&m.ab) - 1.5f64.log2()).abs() < 1e-12);
        assert!((e_n(&m.ac) - 1.5f64.log2()).abs() < 1e-12);
        // Schmidt coefficients across A|BC are both 1/√2.
        let reduced = m.a_bc.partial_trace(Subsystem::A);
        let eig = herm_eig(&reduced).unwrap();
        for l in eig.values {
            assert!((l.sqrt() - FRAC_1_SQRT_2).abs() < 1e-12);
        }
    }

    #[test]
    fn random_state_contract() {
        let a = random_state(2, 3, 4, 7).unwrap();
        let b = random_state(2, 3, 4, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, random_state(2, 3, 4, 8).unwrap());
        validate_density(&a, DensityTolerance::default()).unwrap();
        let pure = random_state(3, 3, 1, 1).unwrap();
        let purity = pure.matrix().trace_product(pure.matrix()).re;
        assert!((purity - 1.0).abs() < 1e-10);
        assert!(matches!(random_state(2, 2, 0, 1), Err(StateError::InvalidRank { .. })));
        assert!(matches!(random_state(2, 2, 5, 1), Err(StateError::InvalidRank { .. })));
    }

    #[test]
    fn named_states_round_trip() {
        for name in ["phi:3", "rho_v", "sigma:0.25", "omega:1", "tau:0", "convexity:avg", "monogamy:abc"] {
            let parsed: NamedState = name.parse().unwrap();
            assert_eq!(parsed.to_string(), name);
            parsed.build().unwrap();
        }
        for bad in ["phi", "phi:0", "sigma:2", "convexity:3", "ghz", "rho_v:1"] {
            assert!(bad.parse::<NamedState>().is_err(), "{bad}");
        }
    }

    #[test]
    fn product_states_validate() {
        let sigma = ComplexMatrix::from_diagonal(&[0.25, 0.75]);
        let tau = ComplexMatrix::from_diagonal(&[0.5, 0.5]);
        let rho = BipartiteOperator::new(kron(&sigma, &tau), 2, 2).unwrap();
        validate_density(&rho, DensityTolerance::default()).unwrap();
        let bad = rho.scale(2.0);
        assert!(validate_density(&bad, DensityTolerance::default()).is_err());
    }
}
