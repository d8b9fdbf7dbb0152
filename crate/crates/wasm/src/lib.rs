//! Browser entry points. Every export returns a JSON string; failures come
//! back as `{"error": "..."}` so the page never has to catch exceptions.

use kappa_ent::channels::one_shot_exact_cost;
use kappa_ent::measures::{e_kappa_primal, log_negativity, measure, z_bound, LowerBound};
use kappa_ent::sdp::SolveOptions;
use kappa_ent::states::{family_omega, family_sigma, family_tau, NamedState};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct Failure {
    error: String,
}

fn respond<T: Serialize>(r: Result<T, String>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v),
        Err(error) => serde_json::to_string(&Failure { error }),
    }
    .expect("serializable")
}

#[derive(Serialize)]
pub struct CurvePoint {
    pub p: f64,
    pub e_kappa: f64,
    pub e_n: f64,
    pub log2_z: f64,
}

pub fn family_curve(family: &str, steps: usize) -> Result<Vec<CurvePoint>, String> {
    let build = match family {
        "sigma" => family_sigma,
        "omega" => family_omega,
        "tau" => family_tau,
        _ => return Err(format!("unknown family '{family}'")),
    };
    if !(2..=201).contains(&steps) {
        return Err("steps must lie in 2..=201".into());
    }
    let opts = SolveOptions::default();
    (0..steps)
        .map(|i| {
            let p = i as f64 / (steps - 1) as f64;
            let rho = build(p).map_err(|e| e.to_string())?;
            Ok(CurvePoint {
                p,
                e_kappa: e_kappa_primal(&rho, &opts).map_err(|e| e.to_string())?.value,
                e_n: log_negativity(&rho),
                log2_z: z_bound(&rho).map_err(|e| e.to_string())?,
            })
        })
        .collect()
}

/// `E_κ`, `E_N` and `log₂ Z` along a family on an even grid over `[0, 1]`.
#[wasm_bindgen]
pub fn sweep(family: &str, steps: usize) -> String {
    respond(family_curve(family, steps))
}

/// Full measure report of a built-in state such as `rho_v` or `omega:0.3`.
#[wasm_bindgen]
pub fn measure_state(name: &str) -> String {
    respond(
        name.parse::<NamedState>()
            .and_then(|s| s.build())
            .map_err(|e| e.to_string())
            .and_then(|rho| measure(&rho, &SolveOptions::default()).map_err(|e| e.to_string())),
    )
}

#[derive(Serialize)]
pub struct OneShotSummary {
    pub m: usize,
    pub log2_m: f64,
    pub e_kappa: f64,
    pub lower: LowerBound,
    pub upper: f64,
    pub rejected: Vec<(usize, f64)>,
    pub prep_residual: f64,
    pub cp_lambda_min: f64,
    pub pptp_lambda_min: f64,
    pub passed: bool,
}

pub fn one_shot_summary(name: &str) -> Result<OneShotSummary, String> {
    let rho = name.parse::<NamedState>().and_then(|s| s.build()).map_err(|e| e.to_string())?;
    let cert = one_shot_exact_cost(&rho, &SolveOptions::default()).map_err(|e| e.to_string())?;
    Ok(OneShotSummary {
        m: cert.m,
        log2_m: cert.log2_m(),
        e_kappa: cert.e_kappa,
        lower: cert.lower,
        upper: cert.upper,
        rejected: cert.rejected.clone(),
        prep_residual: cert.prep_residual,
        cp_lambda_min: cert.cp_lambda_min,
        pptp_lambda_min: cert.pptp_lambda_min,
        passed: cert.passes(),
    })
}

/// Minimal Schmidt rank and certificate residuals for a built-in state.
#[wasm_bindgen]
pub fn one_shot(name: &str) -> String {
    respond(one_shot_summary(name))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_curve_endpoints() {
        let curve = family_curve("sigma", 5).unwrap();
        assert_eq!(curve.len(), 5);
        assert!((curve[2].e_kappa - 1.0).abs() < 1e-6);
        assert!(curve[2].e_kappa > curve[2].e_n + 1e-4);
    }

    #[test]
    fn errors_are_json() {
        assert!(sweep("delta", 5).contains("\"error\""));
        assert!(sweep("tau", 1).contains("\"error\""));
        assert!(measure_state("phi:0").contains("\"error\""));
    }

    #[test]
    fn one_shot_rho_v() {
        let s = one_shot_summary("rho_v").unwrap();
        assert_eq!(s.m, 2);
        assert!(s.passed);
        assert!(one_shot("convexity:2").contains("\"lower\":\"-inf\""));
    }
}
