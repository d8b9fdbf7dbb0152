use std::fmt::Write;

use kappa_ent::channels::{CheckLine, PreparationCertificate};
use kappa_ent::measures::{LowerBound, MeasureReport, Witness};
use serde::Serialize;

use crate::statefile::StateFile;

/// C `%.9g`.
pub fn format_g9(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= DIGITS {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        strip_zeros(&format!("{:.*}", (DIGITS - 1 - exp) as usize, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn lower_text(b: LowerBound) -> String {
    match b {
        LowerBound::MinusInfinity => "-inf".into(),
        LowerBound::Finite(v) => format_g9(v),
    }
}

pub fn measure_text(name: &str, r: &MeasureReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "state            {name} ({}x{})", r.dim_a, r.dim_b);
    let _ = writeln!(s, "e_kappa          {:.6}", r.e_kappa_primal);
    let _ = writeln!(s, "e_kappa_dual     {:.6}", r.e_kappa_dual);
    let _ = writeln!(s, "e_n              {:.6}", r.e_n);
    let _ = writeln!(s, "log2_z           {:.6}", r.log2_z);
    let _ = writeln!(s, "one_shot_lower   {}", lower_text(r.one_shot_lower));
    let _ = writeln!(s, "one_shot_upper   {:.6}", r.one_shot_upper);
    let _ = writeln!(s, "binegativity     {}", r.binegativity_holds);
    let _ = writeln!(s, "duality_gap      {:e}", (r.e_kappa_primal - r.e_kappa_dual).abs());
    let _ = writeln!(
        s,
        "solver           primal {:?} in {} iterations, dual {:?} in {} iterations",
        r.primal_diagnostics.status,
        r.primal_diagnostics.iterations,
        r.dual_diagnostics.status,
        r.dual_diagnostics.iterations
    );
    s
}

/// Certificate as a state file of `G` plus scalar fields.
#[derive(Debug, Serialize)]
pub struct CertificateFile {
    #[serde(flatten)]
    pub g: StateFile,
    pub m: usize,
    pub log2_m: f64,
    pub e_kappa: f64,
    pub one_shot_lower: LowerBound,
    pub one_shot_upper: f64,
    pub t: f64,
    pub rejected: Vec<(usize, f64)>,
    pub checks: Vec<CheckLine>,
    pub passed: bool,
}

impl CertificateFile {
    pub fn new(cert: &PreparationCertificate) -> Self {
        let checks = cert.checks();
        Self {
            g: StateFile::from_operator(&cert.g),
            m: cert.m,
            log2_m: cert.log2_m(),
            e_kappa: cert.e_kappa,
            one_shot_lower: cert.lower,
            one_shot_upper: cert.upper,
            t: cert.t,
            rejected: cert.rejected.clone(),
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }
}

pub fn certificate_text(name: &str, cert: &PreparationCertificate) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "state            {name}");
    let _ = writeln!(s, "m                {}", cert.m);
    let _ = writeln!(s, "log2_m           {:.6}", cert.log2_m());
    let _ = writeln!(s, "e_kappa          {:.6}", cert.e_kappa);
    let _ = writeln!(s, "sandwich         [{}, {}]", lower_text(cert.lower), format_g9(cert.upper));
    let _ = writeln!(s, "t                {:e}", cert.t);
    for (m, t) in &cert.rejected {
        let _ = writeln!(s, "rejected m = {m:<4} t = {t:e}");
    }
    for line in cert.checks() {
        let _ = writeln!(
            s,
            "{} {:<28} {:>13} (tol {:e})",
            if line.passed { "PASS" } else { "FAIL" },
            line.name,
            format!("{:e}", line.value),
            line.tolerance
        );
    }
    s
}

/// Witness `Z + I` in state-file layout plus its value on the input.
#[derive(Debug, Serialize)]
pub struct WitnessFile {
    #[serde(flatten)]
    pub witness: StateFile,
    pub violation: f64,
}

impl WitnessFile {
    pub fn new(w: &Witness) -> Self {
        Self { witness: StateFile::from_operator(&w.shifted()), violation: w.violation }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g9_matches_printf() {
        let cases = [
            (1.0, "1"),
            (0.5, "0.5"),
            (-0.25, "-0.25"),
            (1.0 / 3.0, "0.333333333"),
            (2f64.log2(), "1"),
            (3f64.log2(), "1.5849625"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (-1e-300, "-1e-300"),
            (0.999999999951, "1"),
            (f64::NEG_INFINITY, "-inf"),
        ];
        for (x, want) in cases {
            assert_eq!(format_g9(x), want, "{x}");
        }
    }
}
