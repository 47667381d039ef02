//! Projection onto the orbit through truncation.
//!
//! If the unit orbit ball `𝔄₁x` contains the ball of radius `r` of
//! `W = 𝔄x`, then for any `y` the distance to the whole orbit equals the
//! distance to the single ball `𝔄_N x` with `N > 2‖y‖/r`. The projector
//! onto `W` is certified by comparing this truncated distance with
//! `‖y − Py‖` on a fixed set of probe vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::defaults::{PROBE_SEED, RANDOM_PROBES, RANK_TOL};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::located_sets::{ball_distance_in, OrbitBall};
use crate::open_mapping::{inner_radius, RadiusResult};
use crate::operator_space::{orbit, OperatorSubspace, OrbitGeometry};

/// Smallest integer `N ≥ 1` with `N > 2‖y‖/r`.
///
/// The quotient is inflated by `1 + 1e-12` before flooring, so a quotient
/// that rounds to just below an integer still yields a strict inequality.
pub fn truncation_index(y: &Vector, r: f64) -> Result<usize> {
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!("truncation needs a positive radius, got {r}")));
    }
    let q = 2.0 * y.norm() / r * (1.0 + 1e-12);
    if !q.is_finite() || q >= (u32::MAX as f64) {
        return Err(Error::Refused(format!(
            "truncation index 2‖y‖/r = {q:e} is too large to compute with"
        )));
    }
    Ok(q.floor() as usize + 1)
}

/// Inner radius of `𝔄₁x` within `W = 𝔄x`.
pub fn orbit_inner_radius(subspace: &OperatorSubspace, x: &Vector, tol: f64) -> Result<RadiusResult> {
    let ball = OrbitBall::new(subspace, x, 1.0)?;
    let q = ball.geometry().q.clone();
    if q.is_empty() {
        return Err(Error::Refused("the orbit is {0}; it has no inner radius".into()));
    }
    inner_radius(&ball, &q, tol)
}

/// Distance from `y` to the orbit, computed as `ρ(y, 𝔄_N x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    pub d: f64,
    pub n: usize,
    /// Inner radius used for truncation.
    pub r: f64,
    /// `‖y − Py‖`, the exact distance.
    pub oracle: f64,
}

pub fn pipeline_distance(y: &Vector, subspace: &OperatorSubspace, x: &Vector, tol: f64) -> Result<PipelineResult> {
    let radius = orbit_inner_radius(subspace, x, tol)?;
    let geometry = orbit(subspace, x, RANK_TOL)?;
    truncated_distance(y, subspace, &geometry, radius.r, tol)
}

/// Pipeline with a precomputed radius. The radius is shrunk by the relative
/// tolerance of its computation before truncating.
pub fn truncated_distance(y: &Vector, subspace: &OperatorSubspace, geometry: &OrbitGeometry, r: f64, tol: f64) -> Result<PipelineResult> {
    if !(r > tol) {
        return Err(Error::Refused(format!(
            "inner radius {r:e} of the unit orbit ball is indistinguishable from 0; \
             no truncation level is known to reach the orbit distance (try the nested-limit fallback)"
        )));
    }
    let n = truncation_index(y, r * (1.0 - tol))?;
    let res = ball_distance_in(subspace, geometry, y, n as f64, tol)?;
    Ok(PipelineResult {
        d: res.value,
        n,
        r,
        oracle: y.dist(&geometry.project(y)),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub y: Vector,
    /// Truncation index; `None` when the pipeline refused.
    pub n: Option<usize>,
    pub d_pipeline: Option<f64>,
    pub d_oracle: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionCertificate {
    /// Orthogonal projector onto `𝔄x`.
    pub p: Matrix,
    pub rank: usize,
    /// Inner radius of `𝔄₁x` within `𝔄x`.
    pub r: f64,
    pub trace: Vec<TraceEntry>,
    pub seed: u64,
    pub note: Option<String>,
}

/// Canonical basis vectors followed by seeded uniform vectors in `[−1, 1]^d`.
pub fn probe_vectors(dim: usize, seed: u64) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probes: Vec<Vector> = (0..dim).map(|i| Vector::unit(dim, i)).collect();
    for _ in 0..RANDOM_PROBES {
        probes.push(Vector::new((0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect()));
    }
    probes
}

pub fn build_projection(subspace: &OperatorSubspace, x: &Vector, tol: f64) -> Result<ProjectionCertificate> {
    build_projection_seeded(subspace, x, tol, PROBE_SEED)
}

pub fn build_projection_seeded(subspace: &OperatorSubspace, x: &Vector, tol: f64, seed: u64) -> Result<ProjectionCertificate> {
    let geometry = orbit(subspace, x, RANK_TOL)?;
    if geometry.rank == 0 {
        return Ok(ProjectionCertificate {
            p: geometry.p.clone(),
            rank: 0,
            r: 0.0,
            trace: Vec::new(),
            seed,
            note: Some("the orbit is {0}: the projector is 0 and no probe is informative".into()),
        });
    }
    let r = orbit_inner_radius(subspace, x, tol)?.r;
    let probes = probe_vectors(subspace.dim(), seed);
    let trace = probes
        .into_par_iter()
        .map(|y| {
            let d_oracle = y.dist(&geometry.project(&y));
            match truncated_distance(&y, subspace, &geometry, r, tol) {
                Ok(res) => Ok(TraceEntry {
                    y,
                    n: Some(res.n),
                    d_pipeline: Some(res.d),
                    d_oracle,
                }),
                Err(Error::Refused(_)) => Ok(TraceEntry {
                    y,
                    n: None,
                    d_pipeline: None,
                    d_oracle,
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let note = (r <= tol).then(|| format!("inner radius {r:e} is below tolerance; pipeline distances were refused"));
    Ok(ProjectionCertificate {
        p: geometry.p.clone(),
        rank: geometry.rank,
        r,
        trace,
        seed,
        note,
    })
}

/// `ρ_W(0, −𝔄₁x)`: distance from 0 to the part of `W = 𝔄x` bounded away
/// from the unit orbit ball, which is the inner radius of `𝔄₁x` within `W`.
pub fn metric_complement_distance(subspace: &OperatorSubspace, x: &Vector, tol: f64) -> Result<f64> {
    let geometry = orbit(subspace, x, RANK_TOL)?;
    if geometry.rank == 0 {
        return Err(Error::InvalidInput("the orbit is {0}; its complement distance is undefined".into()));
    }
    Ok(orbit_inner_radius(subspace, x, tol)?.r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::located_sets::ball_distance;
    use crate::operator_space::make_subspace;

    fn v(xs: &[f64]) -> Vector {
        Vector::from(xs)
    }

    fn diag() -> OperatorSubspace {
        make_subspace(vec![Matrix::diag(&[1.0, 0.0]), Matrix::diag(&[0.0, 1.0])], 1e-9).unwrap()
    }

    fn compressions() -> OperatorSubspace {
        let mut basis = Vec::new();
        for i in 0..2 {
            for j in 0..2 {
                let mut m = Matrix::zeros(3, 3);
                m[(i, j)] = 1.0;
                basis.push(m);
            }
        }
        make_subspace(basis, 1e-9).unwrap()
    }

    #[test]
    fn truncation_examples() {
        assert_eq!(truncation_index(&v(&[1.0, 0.0]), 0.1).unwrap(), 21);
        assert_eq!(truncation_index(&v(&[0.0, 0.0]), 0.3).unwrap(), 1);
        assert_eq!(truncation_index(&v(&[0.0, 1.0]), 2.0).unwrap(), 2);
        assert!(truncation_index(&v(&[1.0]), 0.0).is_err());
        assert!(truncation_index(&v(&[1.0]), -1.0).is_err());
    }

    #[test]
    fn truncation_is_strict_and_minimal() {
        for (ny, r) in [(1.0, 0.3), (2.5, 0.7), (0.01, 1.0), (3.0, 1.5)] {
            let y = v(&[ny]);
            let n = truncation_index(&y, r).unwrap() as f64;
            assert!(n > 2.0 * ny / r);
            assert!(n - 1.0 <= 2.0 * ny / r * (1.0 + 1e-12));
        }
    }

    #[test]
    fn pipeline_examples() {
        let s = diag();
        let res = pipeline_distance(&v(&[0.0, 1.0]), &s, &v(&[1.0, 0.1]), 1e-6).unwrap();
        assert_eq!(res.n, 21);
        assert!(res.d.abs() <= 1e-6 && res.oracle.abs() <= 1e-12);

        let res = pipeline_distance(&v(&[5.0, -3.0]), &s, &v(&[1.0, 1.0]), 1e-6).unwrap();
        assert_eq!(res.n, (2.0 * 34f64.sqrt()).floor() as usize + 1);
        assert!(res.d.abs() <= 1e-6);

        // within W = x-axis the orbit ball is the unit segment, r = 1
        let res = pipeline_distance(&v(&[0.0, 1.0]), &s, &v(&[1.0, 0.0]), 1e-6).unwrap();
        assert_eq!(res.n, 3);
        assert!((res.d - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn stabilized_beyond_truncation() {
        let s = diag();
        let x = v(&[1.0, 0.3]);
        let y = v(&[2.0, -1.7]);
        let res = pipeline_distance(&y, &s, &x, 1e-6).unwrap();
        let later = ball_distance(&y, &s, &x, (res.n + 5) as f64, 1e-6).unwrap().value;
        assert!((res.d - later).abs() <= 2e-6);
    }

    #[test]
    fn build_projection_examples() {
        let s = diag();
        let cert = build_projection(&s, &v(&[1.0, 0.0]), 1e-6).unwrap();
        assert!(cert.p.max_abs_diff(&Matrix::diag(&[1.0, 0.0])) < 1e-15);
        assert!((cert.r - 1.0).abs() <= 1e-6);
        assert_eq!(cert.trace.len(), 2 + RANDOM_PROBES);
        for e in &cert.trace {
            assert!((e.d_pipeline.unwrap() - e.d_oracle).abs() <= 3e-6);
        }

        let cert = build_projection(&s, &v(&[1.0, -0.25]), 1e-6).unwrap();
        assert!(cert.p.max_abs_diff(&Matrix::identity(2)) < 1e-12);
        assert!((cert.r - 0.25).abs() <= 1e-6);

        let cert = build_projection(&s, &v(&[0.0, 0.0]), 1e-6).unwrap();
        assert_eq!(cert.p, Matrix::zeros(2, 2));
        assert!(cert.trace.is_empty() && cert.note.is_some());
    }

    #[test]
    fn build_projection_is_deterministic() {
        let s = compressions();
        let x = v(&[0.6, 0.8, 0.3]);
        let a = build_projection(&s, &x, 1e-6).unwrap();
        let b = build_projection(&s, &x, 1e-6).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.seed, PROBE_SEED);
    }

    #[test]
    fn projection_is_optimal() {
        let s = compressions();
        let x = v(&[0.6, 0.8, 0.3]);
        let g = orbit(&s, &x, 1e-9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let y = Vector::new((0..3).map(|_| rng.gen_range(-2.0..2.0)).collect());
            let c = Vector::new((0..4).map(|_| rng.gen_range(-3.0..3.0)).collect());
            let w = g.point(&c);
            assert!(y.dist(&w) >= y.dist(&g.project(&y)) - 1e-9);
        }
    }

    #[test]
    fn complement_distance_examples() {
        let x = v(&[0.6, 0.8, 0.3]);
        assert!((metric_complement_distance(&compressions(), &x, 1e-6).unwrap() - 1.0).abs() <= 1e-6);
        for c in [0.5, -0.2, 1.0] {
            let d = metric_complement_distance(&diag(), &v(&[1.0, c]), 1e-6).unwrap();
            assert!((d - 1f64.min(c.abs())).abs() <= 1e-6);
        }
        let ident = make_subspace(vec![Matrix::identity(3)], 1e-9).unwrap();
        let x = v(&[1.0, -2.0, 2.0]);
        assert!((metric_complement_distance(&ident, &x, 1e-6).unwrap() - 3.0).abs() <= 1e-6 * 3.0);
        assert!(metric_complement_distance(&ident, &Vector::zeros(3), 1e-6).is_err());
    }
}
