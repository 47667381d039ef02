//! The diagonal algebra `{ diag(a, b) }` acting on `ξ = (1, c)`.
//!
//! For `c ≠ 0` the orbit is the whole plane and `(0, 1)` is at distance 0;
//! for `c = 0` the orbit is the first axis and the distance is 1. The inner
//! radius of `𝔄₁ξ` in the plane is `min(1, |c|)`, so the truncation index
//! for `y = (0, 1)` grows like `2/|c|`, and the nested-limit engine needs
//! about `1/|c|` levels to stabilize. No finite budget decides every row.

use rayon::prelude::*;

use crate::defaults::RANK_TOL;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::located_sets::{ball_distance_in, OrbitBall};
use crate::nested_limit::{locate_distance, Verdict};
use crate::numfmt::format_g;
use crate::open_mapping::inner_radius;
use crate::operator_space::{make_subspace, orbit, OperatorSubspace};
use crate::projection::truncation_index;

pub const DEFAULT_C_VALUES: [f64; 11] = [0.0, 1.0, -1.0, 0.5, -0.5, 0.1, -0.1, 0.01, -0.01, 0.001, -0.001];

/// Span of `diag(1, 0)` and `diag(0, 1)`.
pub fn diag_subspace() -> OperatorSubspace {
    make_subspace(vec![Matrix::diag(&[1.0, 0.0]), Matrix::diag(&[0.0, 1.0])], RANK_TOL)
        .expect("the diagonal basis is independent")
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoRow {
    pub c: f64,
    /// Inner radius of `𝔄₁ξ` within the plane.
    pub r: f64,
    /// Truncation index for `y = (0, 1)`; `None` when the pipeline refuses.
    pub n: Option<usize>,
    /// Computed distance from `(0, 1)` to the orbit.
    pub d: f64,
    /// Levels the nested-limit engine used to decide; `None` if undecided.
    pub levels: Option<usize>,
    /// Pipeline status and nested-limit verdict, as `status/verdict`.
    pub verdict: String,
}

/// One row per `c`, in input order.
pub fn demo_table(c_values: &[f64], budget: usize, tol: f64) -> Result<Vec<DemoRow>> {
    if let Some(c) = c_values.iter().find(|c| !(c.abs() <= 1.0)) {
        return Err(Error::InvalidInput(format!("demo parameters need |c| ≤ 1, got {c}")));
    }
    if budget == 0 || !(tol > 0.0) {
        return Err(Error::InvalidInput("demo needs budget ≥ 1 and tol > 0".into()));
    }
    let subspace = diag_subspace();
    c_values.par_iter().map(|&c| demo_row(&subspace, c, budget, tol)).collect()
}

fn demo_row(subspace: &OperatorSubspace, c: f64, budget: usize, tol: f64) -> Result<DemoRow> {
    let xi = Vector::new(vec![1.0, c]);
    let y = Vector::new(vec![0.0, 1.0]);
    let plane = [Vector::unit(2, 0), Vector::unit(2, 1)];
    let ball = OrbitBall::new(subspace, &xi, 1.0)?;
    let r = inner_radius(&ball, &plane, tol)?.r;

    let report = locate_distance(&y, subspace, &xi, budget, tol)?;
    let levels = match report.verdict {
        Verdict::Located { .. } | Verdict::Stabilized { .. } => Some(report.levels.len()),
        _ => None,
    };

    let (n, d, status) = if r > tol {
        let n = truncation_index(&y, r * (1.0 - tol))?;
        let geometry = orbit(subspace, &xi, RANK_TOL)?;
        let d = ball_distance_in(subspace, &geometry, &y, n as f64, tol)?.value;
        (Some(n), d, "truncated")
    } else {
        let d = match &report.verdict {
            Verdict::Located { d, .. } | Verdict::Stabilized { d, .. } => *d,
            Verdict::Undecided { upper, .. } | Verdict::SolverFailed { upper, .. } => *upper,
        };
        (None, d, "refused")
    };
    Ok(DemoRow {
        c,
        r,
        n,
        d,
        levels,
        verdict: format!("{status}/{}", report.verdict.name()),
    })
}

pub const CSV_HEADER: &str = "c,r,N,d,levels,verdict";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

/// CSV with 9 significant digits per float.
pub fn to_csv(rows: &[DemoRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            format_g(row.c, 9),
            format_g(row.r, 9),
            opt(row.n),
            format_g(row.d, 9),
            opt(row.levels),
            row.verdict
        ));
    }
    out
}

/// Aligned plain-text table.
pub fn to_text(rows: &[DemoRow]) -> String {
    let mut out = format!("{:>10} {:>12} {:>8} {:>14} {:>7}  {}\n", "c", "r", "N", "d", "levels", "verdict");
    for row in rows {
        out.push_str(&format!(
            "{:>10} {:>12} {:>8} {:>14} {:>7}  {}\n",
            format_g(row.c, 6),
            format_g(row.r, 6),
            opt(row.n),
            format_g(row.d, 9),
            opt(row.levels),
            row.verdict
        ));
    }
    out
}
