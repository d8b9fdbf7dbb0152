use std::fs;
use std::io::Write;
use std::path::Path;

use kappa_ent::linalg::{BipartiteOperator, ComplexMatrix};
use kappa_ent::states::{validate_density, DensityTolerance, NamedState};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Tolerances applied to states read from disk.
pub const FILE_TOLERANCE: DensityTolerance = DensityTolerance { hermitian: 1e-10, psd: 1e-8, trace: 1e-8 };

/// JSON interchange for bipartite operators, rows of real and imaginary parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    #[serde(rename = "dimA")]
    pub dim_a: usize,
    #[serde(rename = "dimB")]
    pub dim_b: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl StateFile {
    pub fn from_operator(op: &BipartiteOperator) -> Self {
        let n = op.dim();
        let (re, im) = op.matrix().to_parts();
        Self {
            dim_a: op.dim_a(),
            dim_b: op.dim_b(),
            re: re.chunks(n).map(<[f64]>::to_vec).collect(),
            im: im.chunks(n).map(<[f64]>::to_vec).collect(),
        }
    }

    /// Shape-checked operator, without density validation.
    pub fn to_operator(&self) -> Result<BipartiteOperator, CliError> {
        let n = self.dim_a * self.dim_b;
        if n == 0 {
            return Err(CliError::Validation("dimA and dimB must be positive".into()));
        }
        for (name, rows) in [("re", &self.re), ("im", &self.im)] {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(CliError::Validation(format!("'{name}' must be a {n}×{n} matrix")));
            }
            if rows.iter().flatten().any(|v| !v.is_finite()) {
                return Err(CliError::Validation(format!("'{name}' contains a non-finite entry")));
            }
        }
        let re: Vec<f64> = self.re.concat();
        let im: Vec<f64> = self.im.concat();
        let m = ComplexMatrix::from_parts(n, n, &re, &im).map_err(|e| CliError::Validation(e.to_string()))?;
        BipartiteOperator::new(m, self.dim_a, self.dim_b).map_err(|e| CliError::Validation(e.to_string()))
    }

    pub fn to_density(&self) -> Result<BipartiteOperator, CliError> {
        let rho = self.to_operator()?;
        validate_density(&rho, FILE_TOLERANCE)?;
        Ok(rho)
    }
}

pub fn read_state_file(path: &Path) -> Result<BipartiteOperator, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let file: StateFile =
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    file.to_density().map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Built-in name first, then a file path.
pub fn resolve_state(reference: &str) -> Result<BipartiteOperator, CliError> {
    match reference.parse::<NamedState>() {
        Ok(named) => Ok(named.build()?),
        Err(named_err) => {
            let path = Path::new(reference);
            if path.exists() {
                read_state_file(path)
            } else {
                Err(CliError::Validation(format!("{named_err}, and no file of that name exists")))
            }
        }
    }
}

/// Writes through a sibling temporary file so readers never see partial output.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| CliError::Validation(format!("cannot write to {}: {e}", dir.display())))?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| CliError::Validation(format!("cannot write {}: {}", path.display(), e.error)))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use kappa_ent::states::max_entangled;

    #[test]
    fn round_trip() {
        let phi = max_entangled(2).unwrap();
        let file = StateFile::from_operator(&phi);
        let json = serde_json::to_string(&file).unwrap();
        assert!(json.contains("\"dimA\":2"));
        let back: StateFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_density().unwrap(), phi);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let file = StateFile { dim_a: 2, dim_b: 2, re: vec![vec![1.0]], im: vec![vec![0.0]] };
        assert!(matches!(file.to_operator(), Err(CliError::Validation(_))));
    }

    #[test]
    fn non_density_rejected() {
        let mut file = StateFile::from_operator(&max_entangled(2).unwrap());
        file.re[0][0] = 2.0;
        assert!(file.to_operator().is_ok());
        assert!(matches!(file.to_density(), Err(CliError::Validation(_))));
    }

    #[test]
    fn unknown_reference_rejected() {
        assert!(matches!(resolve_state("no_such_state"), Err(CliError::Validation(_))));
        assert!(resolve_state("sigma:0.3").is_ok());
    }
}
