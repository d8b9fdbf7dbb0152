//! Property suites run by `kappa-ent check`.

use std::fmt;
use std::str::FromStr;

use kappa_ent::channels::{isotropic_twirl, one_shot_exact_cost};
use kappa_ent::linalg::{is_psd, BipartiteOperator};
use kappa_ent::measures::{
    additivity_check, binegativity_holds, e_kappa_dual, e_kappa_primal, extract_witness, log_negativity,
};
use kappa_ent::sdp::SolveOptions;
use kappa_ent::states::{
    antisym_rank2, convexity_trio, depolarize, family_omega, family_sigma, family_tau, max_entangled, monogamy_state,
    random_state,
};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Duality,
    Additivity,
    Faithfulness,
    Monotonicity,
    Convexity,
    Monogamy,
    TwoQubit,
    Sandwich,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Duality,
        Suite::Additivity,
        Suite::Faithfulness,
        Suite::Monotonicity,
        Suite::Convexity,
        Suite::Monogamy,
        Suite::TwoQubit,
        Suite::Sandwich,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Duality => "duality",
            Suite::Additivity => "additivity",
            Suite::Faithfulness => "faithfulness",
            Suite::Monotonicity => "monotonicity",
            Suite::Convexity => "convexity",
            Suite::Monogamy => "monogamy",
            Suite::TwoQubit => "twoqubit",
            Suite::Sandwich => "sandwich",
        }
    }

    pub fn run(self, opts: &SolveOptions, seed: u64) -> Result<Vec<Assertion>, CliError> {
        match self {
            Suite::Duality => duality(opts, seed),
            Suite::Additivity => additivity(opts),
            Suite::Faithfulness => faithfulness(opts, seed, 50),
            Suite::Monotonicity => monotonicity(opts, seed, 50),
            Suite::Convexity => convexity(opts),
            Suite::Monogamy => monogamy(opts),
            Suite::TwoQubit => two_qubit(opts, seed, 100),
            Suite::Sandwich => sandwich(opts),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses a suite name, `all` expanding to every suite.
pub fn parse_suites(s: &str) -> Result<Vec<Suite>, CliError> {
    if s == "all" {
        return Ok(Suite::ALL.to_vec());
    }
    Suite::ALL.iter().copied().find(|x| x.name() == s).map(|x| vec![x]).ok_or_else(|| {
        let names: Vec<_> = Suite::ALL.iter().map(|x| x.name()).collect();
        CliError::Validation(format!("unknown suite '{s}' (expected one of {}, all)", names.join(", ")))
    })
}

impl FromStr for Suite {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match parse_suites(s)?.as_slice() {
            [one] => Ok(*one),
            _ => Err(CliError::Validation("'all' names several suites".into())),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Assertion {
    pub name: String,
    /// Observed quantity, positive margin meaning pass.
    pub margin: f64,
    pub detail: String,
    pub passed: bool,
}

impl Assertion {
    fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), margin: bound - value, detail: format!("{value:.3e} <= {bound:e}"), passed: value <= bound }
    }

    fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), margin: value - bound, detail: format!("{value:.9} >= {bound:e}"), passed: value >= bound }
    }

    fn near(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        let err = (value - target).abs();
        Self {
            name: name.into(),
            margin: tol - err,
            detail: format!("{value:.9} vs {target:.9} (err {err:.1e})"),
            passed: err <= tol,
        }
    }

    pub fn line(&self) -> String {
        format!("{} {:<40} {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

fn rank_for(i: usize, dim: usize) -> usize {
    1 + i % dim
}

/// Named states plus a seeded random sample.
pub fn battery_states(seed: u64) -> Result<Vec<(String, BipartiteOperator)>, CliError> {
    let trio = convexity_trio();
    let mono = monogamy_state();
    let mut states = vec![
        ("phi:2".to_string(), max_entangled(2)?),
        ("phi:3".to_string(), max_entangled(3)?),
        ("phi:4".to_string(), max_entangled(4)?),
        ("rho_v".to_string(), antisym_rank2()),
        ("convexity:1".to_string(), trio.rho1),
        ("convexity:2".to_string(), trio.rho2),
        ("convexity:avg".to_string(), trio.average),
        ("monogamy:ab".to_string(), mono.ab),
        ("monogamy:abc".to_string(), mono.a_bc),
    ];
    for p in [0.0, 0.3, 0.7, 1.0] {
        states.push((format!("sigma:{p}"), family_sigma(p)?));
        states.push((format!("omega:{p}"), family_omega(p)?));
        states.push((format!("tau:{p}"), family_tau(p)?));
    }
    for (i, (da, db)) in [(2, 2), (2, 3), (3, 3), (2, 4)].into_iter().enumerate() {
        for k in 0..3 {
            let s = seed.wrapping_add((10 * i + k) as u64);
            states.push((format!("random {da}x{db} #{s}"), random_state(da, db, rank_for(k, da * db), s)?));
        }
    }
    Ok(states)
}

pub fn duality(opts: &SolveOptions, seed: u64) -> Result<Vec<Assertion>, CliError> {
    let mut out = Vec::new();
    for (name, rho) in battery_states(seed)? {
        let p = e_kappa_primal(&rho, opts)?.value;
        let d = e_kappa_dual(&rho, opts)?.value;
        out.push(Assertion::near(format!("primal = dual, {name}"), p, d, 1e-6));
        out.push(Assertion::at_least(format!("E_kappa >= E_N, {name}"), p - log_negativity(&rho), -1e-6));
    }
    Ok(out)
}

pub fn additivity(opts: &SolveOptions) -> Result<Vec<Assertion>, CliError> {
    let phi2 = max_entangled(2)?;
    let a = additivity_check(&antisym_rank2(), &phi2, opts)?;
    let b = additivity_check(&phi2, &phi2, opts)?;
    Ok(vec![
        Assertion::near("E_kappa(rho_v (x) phi:2) = 2", a.lhs, 2.0, 1e-5),
        Assertion::near("E_kappa(phi:2 (x) phi:2) = 2", b.lhs, 2.0, 1e-5),
        Assertion::near("sum rule, rho_v (x) phi:2", a.lhs, a.rhs, 1e-5),
    ])
}

/// Mixes toward the maximally mixed state in small steps until the result is PPT.
pub fn ppt_by_mixing(rho: &BipartiteOperator) -> BipartiteOperator {
    let mut w = 0.0;
    loop {
        let mixed = depolarize(rho, w);
        if is_psd(mixed.partial_transpose().matrix(), 1e-12) || w >= 1.0 {
            return mixed;
        }
        w = (w + 0.05).min(1.0);
    }
}

pub fn faithfulness(opts: &SolveOptions, seed: u64, count: usize) -> Result<Vec<Assertion>, CliError> {
    let mut out = Vec::new();
    for i in 0..count {
        let d = 2 + i % 2;
        let s = seed.wrapping_add(1000 + i as u64);
        let ppt = ppt_by_mixing(&random_state(d, d, rank_for(i, d * d), s)?);
        let e = e_kappa_primal(&ppt, opts)?.value;
        out.push(Assertion::at_most(format!("PPT {d}x{d} #{s}: E_kappa ~ 0"), e, 1e-6));
    }
    for i in 0..count {
        let d = 2 + i % 2;
        let s = seed.wrapping_add(2000 + i as u64);
        // Pure states are entangled with probability one.
        let npt = random_state(d, d, 1, s)?;
        let e = e_kappa_primal(&npt, opts)?.value;
        out.push(Assertion::at_least(format!("NPT {d}x{d} #{s}: E_kappa > 0"), e, 1e-4));
        let w = extract_witness(&npt, opts)?;
        out.push(Assertion::at_most(format!("NPT {d}x{d} #{s}: witness violation"), w.violation, -f64::MIN_POSITIVE));
    }
    Ok(out)
}

pub fn monotonicity(opts: &SolveOptions, seed: u64, count: usize) -> Result<Vec<Assertion>, CliError> {
    let mut out = Vec::new();
    for i in 0..count {
        let d = 2 + i % 2;
        let s = seed.wrapping_add(3000 + i as u64);
        let rho = random_state(d, d, rank_for(i, 3), s)?;
        let before = e_kappa_primal(&rho, opts)?.value;
        let after = e_kappa_primal(&isotropic_twirl(&rho)?, opts)?.value;
        out.push(Assertion::at_most(format!("twirl {d}x{d} #{s}"), after - before, 1e-6));
    }
    Ok(out)
}

pub fn convexity(opts: &SolveOptions) -> Result<Vec<Assertion>, CliError> {
    let trio = convexity_trio();
    let e1 = e_kappa_primal(&trio.rho1, opts)?.value;
    let e2 = e_kappa_primal(&trio.rho2, opts)?.value;
    let avg = e_kappa_primal(&trio.average, opts)?.value;
    let margin = avg - 0.5 * (e1 + e2);
    Ok(vec![
        Assertion::near("E_kappa(rho_1) = 1", e1, 1.0, 1e-6),
        Assertion::near("E_kappa(rho_2) = 0", e2, 0.0, 1e-6),
        Assertion::near("E_kappa(average) = log2(3/2)", avg, 1.5f64.log2(), 1e-6),
        Assertion::near("convexity margin = log2(3/2) - 1/2", margin, 1.5f64.log2() - 0.5, 1e-6),
        Assertion::at_least("convexity violated", margin, 1e-4),
    ])
}

pub fn monogamy(opts: &SolveOptions) -> Result<Vec<Assertion>, CliError> {
    let m = monogamy_state();
    let whole = e_kappa_primal(&m.a_bc, opts)?.value;
    let ab = e_kappa_primal(&m.ab, opts)?.value;
    let ac = e_kappa_primal(&m.ac, opts)?.value;
    let margin = ab + ac - whole;
    Ok(vec![
        Assertion::near("E_kappa(A|BC) = 1", whole, 1.0, 1e-6),
        Assertion::near("E_kappa(AB) = log2(3/2)", ab, 1.5f64.log2(), 1e-6),
        Assertion::near("E_kappa(AC) = log2(3/2)", ac, 1.5f64.log2(), 1e-6),
        Assertion::near("monogamy margin = 2 log2(3/2) - 1", margin, 2.0 * 1.5f64.log2() - 1.0, 1e-6),
        Assertion::at_least("monogamy violated", margin, 1e-4),
    ])
}

pub fn two_qubit(opts: &SolveOptions, seed: u64, count: usize) -> Result<Vec<Assertion>, CliError> {
    let mut out = Vec::new();
    for i in 0..count {
        let s = seed.wrapping_add(4000 + i as u64);
        let rho = random_state(2, 2, rank_for(i, 4), s)?;
        let e = e_kappa_primal(&rho, opts)?.value;
        out.push(Assertion::near(format!("E_kappa = E_N, 2x2 #{s}"), e, log_negativity(&rho), 1e-6));
        let bineg = binegativity_holds(&rho)?;
        out.push(Assertion {
            name: format!("binegativity, 2x2 #{s}"),
            margin: if bineg { 0.0 } else { -1.0 },
            detail: bineg.to_string(),
            passed: bineg,
        });
    }
    Ok(out)
}

pub fn sandwich_states() -> Result<Vec<(String, BipartiteOperator)>, CliError> {
    Ok(vec![
        ("phi:2".into(), max_entangled(2)?),
        ("phi:3".into(), max_entangled(3)?),
        ("phi:4".into(), max_entangled(4)?),
        ("rho_v".into(), antisym_rank2()),
        ("convexity:2".into(), convexity_trio().rho2),
        ("convexity:avg".into(), convexity_trio().average),
        ("sigma:0.5".into(), family_sigma(0.5)?),
        ("omega:0.5".into(), family_omega(0.5)?),
        ("tau:0.5".into(), family_tau(0.5)?),
    ])
}

pub fn sandwich(opts: &SolveOptions) -> Result<Vec<Assertion>, CliError> {
    let mut out = Vec::new();
    for (name, rho) in sandwich_states()? {
        let cert = one_shot_exact_cost(&rho, opts)?;
        for line in cert.checks() {
            out.push(Assertion {
                name: format!("{name} m = {}: {}", cert.m, line.name),
                margin: if line.passed { 0.0 } else { -1.0 },
                detail: format!("{:e} (tol {:e})", line.value, line.tolerance),
                passed: line.passed,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert_eq!(parse_suites("all").unwrap().len(), 8);
        assert!(parse_suites("everything").is_err());
    }

    #[test]
    fn counterexample_suites_pass() {
        let opts = SolveOptions::default();
        for a in convexity(&opts).unwrap().into_iter().chain(monogamy(&opts).unwrap()) {
            assert!(a.passed, "{}", a.line());
        }
    }
}
