//! Problem files.

use std::path::Path;

use orbit_locator::operator_space::make_subspace;
use orbit_locator::{Matrix, OperatorSubspace, Vector};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// On-disk problem description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub dim: usize,
    pub basis: Vec<Vec<Vec<f64>>>,
    pub x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// A validated problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub file: ProblemFile,
    pub basis: Vec<Matrix>,
    pub x: Vector,
    pub y: Option<Vector>,
}

impl ProblemFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn validate(self) -> Result<Problem, CliError> {
        let dim = self.dim;
        if dim == 0 {
            return Err(CliError::Input("dim must be positive".into()));
        }
        if self.basis.is_empty() {
            return Err(CliError::Input("basis must contain at least one matrix".into()));
        }
        let mut basis = Vec::with_capacity(self.basis.len());
        for (i, rows) in self.basis.iter().enumerate() {
            if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                return Err(CliError::Input(format!("basis[{i}] is not a {dim}x{dim} array")));
            }
            basis.push(Matrix::from_rows(rows).map_err(|e| CliError::Input(format!("basis[{i}]: {e}")))?);
        }
        let vector = |name: &str, v: &[f64]| {
            if v.len() != dim {
                Err(CliError::Input(format!("{name} has length {}, expected {dim}", v.len())))
            } else if v.iter().any(|a| !a.is_finite()) {
                Err(CliError::Input(format!("{name} has non-finite entries")))
            } else {
                Ok(Vector::from(v))
            }
        };
        let x = vector("x", &self.x)?;
        let y = self.y.as_deref().map(|y| vector("y", y)).transpose()?;
        if let Some(n) = self.n {
            if !(n > 0.0) || !n.is_finite() {
                return Err(CliError::Input(format!("n must be positive, got {n}")));
            }
        }
        if let Some(tol) = self.tol {
            if !(tol > 0.0) {
                return Err(CliError::Input(format!("tol must be positive, got {tol}")));
            }
        }
        Ok(Problem { file: self, basis, x, y })
    }
}

impl Problem {
    pub fn subspace(&self, rank_tol: f64) -> Result<OperatorSubspace, CliError> {
        make_subspace(self.basis.clone(), rank_tol).map_err(CliError::from)
    }

    pub fn require_y(&self) -> Result<&Vector, CliError> {
        self.y
            .as_ref()
            .ok_or_else(|| CliError::Input("this command needs a target vector y in the problem file".into()))
    }
}
