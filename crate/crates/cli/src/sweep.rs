use std::fmt;
use std::str::FromStr;

use kappa_ent::linalg::BipartiteOperator;
use kappa_ent::measures::{e_kappa_primal, log_negativity, z_bound};
use kappa_ent::sdp::SolveOptions;
use kappa_ent::states::{family_omega, family_sigma, family_tau, StateError};
use rayon::prelude::*;
use serde::Serialize;

use crate::output::format_g9;
use crate::CliError;

pub const CSV_HEADER: &str = "family,p,e_kappa,e_n,log2_z,gap";

/// Name of the variable capping sweep concurrency.
pub const THREADS_ENV: &str = "KAPPA_ENT_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Sigma,
    Omega,
    Tau,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Sigma, Family::Omega, Family::Tau];

    pub fn state(self, p: f64) -> Result<BipartiteOperator, StateError> {
        match self {
            Family::Sigma => family_sigma(p),
            Family::Omega => family_omega(p),
            Family::Tau => family_tau(p),
        }
    }
}

impl FromStr for Family {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "sigma" => Ok(Family::Sigma),
            "omega" => Ok(Family::Omega),
            "tau" => Ok(Family::Tau),
            _ => Err(CliError::Validation(format!("unknown family '{s}' (expected sigma, omega or tau)"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Sigma => "sigma",
            Family::Omega => "omega",
            Family::Tau => "tau",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRecord {
    pub family: Family,
    pub p: f64,
    pub e_kappa: f64,
    pub e_n: f64,
    pub log2_z: f64,
    pub gap: f64,
}

impl SweepRecord {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.family,
            format_g9(self.p),
            format_g9(self.e_kappa),
            format_g9(self.e_n),
            format_g9(self.log2_z),
            format_g9(self.gap)
        )
    }
}

/// Evenly spaced grid; a single point only when the range is degenerate.
pub fn grid(p0: f64, p1: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    if !(p0.is_finite() && p1.is_finite()) || p0 < 0.0 || p1 > 1.0 || p0 > p1 {
        return Err(CliError::Validation(format!("need 0 <= p0 <= p1 <= 1, got [{p0}, {p1}]")));
    }
    match steps {
        0 => Err(CliError::Validation("steps must be positive".into())),
        1 if p0 == p1 => Ok(vec![p0]),
        1 => Err(CliError::Validation("a single step needs p0 = p1".into())),
        _ if p0 == p1 => Err(CliError::Validation("p0 = p1 allows only steps = 1".into())),
        _ => {
            let last = (steps - 1) as f64;
            Ok((0..steps).map(|i| if i + 1 == steps { p1 } else { p0 + (p1 - p0) * i as f64 / last }).collect())
        }
    }
}

pub fn record(family: Family, p: f64, opts: &SolveOptions) -> Result<SweepRecord, CliError> {
    let rho = family.state(p)?;
    let e_kappa = e_kappa_primal(&rho, opts)?.value;
    let e_n = log_negativity(&rho);
    let log2_z = z_bound(&rho)?;
    let gap = e_kappa - e_n;
    if gap < -1e-6 {
        return Err(CliError::Integrity(format!("{family} at p = {p}: E_kappa - E_N = {gap:e} < 0")));
    }
    Ok(SweepRecord { family, p, e_kappa, e_n, log2_z, gap })
}

/// Worker count from the environment, `None` meaning available parallelism.
pub fn thread_limit() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Validation(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        },
    }
}

/// Rows in grid order.
pub fn run(family: Family, points: &[f64], opts: &SolveOptions, threads: Option<usize>) -> Result<Vec<SweepRecord>, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Validation(e.to_string()))?;
    pool.install(|| points.par_iter().map(|&p| record(family, p, opts)).collect())
}

pub fn to_csv(rows: &[SweepRecord]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_examples() {
        assert_eq!(grid(0.0, 1.0, 3).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(grid(0.5, 0.5, 1).unwrap(), vec![0.5]);
        assert_eq!(grid(0.0, 1.0, 11).unwrap()[10], 1.0);
        assert!(grid(0.5, 0.5, 2).is_err());
        assert!(grid(0.2, 0.1, 3).is_err());
        assert!(grid(0.0, 1.5, 3).is_err());
        assert!(grid(0.0, 1.0, 1).is_err());
        assert!(grid(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn sigma_endpoints_have_no_gap() {
        let opts = SolveOptions::default();
        for p in [0.0, 1.0] {
            assert!(record(Family::Sigma, p, &opts).unwrap().gap.abs() <= 1e-6);
        }
        assert!(record(Family::Sigma, 0.5, &opts).unwrap().gap > 1e-4);
    }

    #[test]
    fn rows_keep_grid_order_under_parallelism() {
        let opts = SolveOptions::default();
        let pts = grid(0.0, 1.0, 6).unwrap();
        let serial = run(Family::Tau, &pts, &opts, Some(1)).unwrap();
        let parallel = run(Family::Tau, &pts, &opts, Some(4)).unwrap();
        assert_eq!(to_csv(&serial), to_csv(&parallel));
        assert!(to_csv(&serial).starts_with("family,p,e_kappa,e_n,log2_z,gap\ntau,0,"));
    }
}
