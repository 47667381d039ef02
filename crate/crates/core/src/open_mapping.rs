//! Greedy halving decomposition, inner radii of balanced convex bodies and
//! the open-mapping radius of a surjective matrix.
//!
//! For a located balanced convex body `C` and `‖y‖ < r`, the decomposition
//! repeatedly asks whether the current remainder `z` is near `C`. If it is
//! (`ρ(z, C) < r/2`), a point `x ∈ 2C` with `‖2z − x‖ < r` is peeled off and
//! the remainder doubles; if it is clearly not, `z` witnesses that the ball
//! of radius `r` escapes `C`. When every step succeeds,
//! `ξ = Σ 2^{-i} x_i ∈ 2C` equals `y`.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::defaults::{DECOMPOSE_STEPS, DIRECTIONS_PER_TWO_DIMS, RANK_TOL};
use crate::error::{Error, Result};
use crate::linalg::{orthonormalize, Matrix, Svd, Vector};
use crate::located_sets::{LinearImageBall, LocatedSet};

/// One step of a decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub i: usize,
    /// The peeled point `x_i ∈ 2C`; zero on a witness step.
    pub x: Vector,
    /// `0` while the decomposition continues, `1` once a witness is found.
    pub lambda: u8,
    /// `‖2^i y − Σ_{j≤i} 2^{i−j} x_j‖`, below `r` while `lambda = 0`.
    pub residual: f64,
    /// `‖y − Σ_{j≤i} 2^{−j} x_j‖ = 2^{−i} residual`.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    /// `y = ξ` up to the output tolerance, with `ξ ∈ 2C`.
    Member { xi: Vector },
    /// `ρ(z, C) = dist` is clearly positive and `‖z‖ < r`.
    Witness { z: Vector, dist: f64 },
    /// The step budget ran out, or the distance fell in the band where
    /// neither branch can be chosen reliably.
    Undecided { steps: usize, error: f64 },
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::Member { .. } => "Member",
            Outcome::Witness { .. } => "Witness",
            Outcome::Undecided { .. } => "Undecided",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub steps: Vec<Step>,
    pub outcome: Outcome,
    pub r: f64,
    pub y: Vector,
}

/// [`greedy_decompose_with`] with the default step budget.
pub fn greedy_decompose(y: &Vector, c: &dyn LocatedSet, r: f64, tol: f64) -> Result<Decomposition> {
    greedy_decompose_with(y, c, r, DECOMPOSE_STEPS, tol)
}

/// Runs the halving decomposition of `y` against `c` at radius `r`.
///
/// `tol` is both the oracle accuracy and the output tolerance: the run ends
/// with `Member` once `‖y − ξ‖ ≤ tol`. The dichotomy prefers continuation
/// (`dist < r/2`) and reports a witness only for `dist > max(r/4, 10 tol)`.
pub fn greedy_decompose_with(y: &Vector, c: &dyn LocatedSet, r: f64, max_steps: usize, tol: f64) -> Result<Decomposition> {
    if y.dim() != c.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: c.ambient_dim(),
            found: y.dim(),
        });
    }
    if !(r > y.norm()) {
        return Err(Error::InvalidInput(format!("radius {r} must exceed the norm {} of y", y.norm())));
    }
    if max_steps == 0 || !(tol > 0.0) {
        return Err(Error::InvalidInput("need max_steps ≥ 1 and tol > 0".into()));
    }
    let witness_threshold = (0.25 * r).max(10.0 * tol);
    let mut steps = Vec::new();
    let mut z = y.clone();
    let mut xi = Vector::zeros(y.dim());
    let mut weight = 1.0;
    for i in 1..=max_steps {
        let (dist, nearest) = c.locate(&z, tol)?;
        weight *= 0.5;
        if dist < 0.5 * r {
            let x = nearest.scaled(2.0);
            z = &z.scaled(2.0) - &x;
            xi.axpy(weight, &x);
            let residual = z.norm();
            let error = weight * residual;
            steps.push(Step {
                i,
                x,
                lambda: 0,
                residual,
                error,
            });
            if residual == 0.0 || error <= tol {
                return Ok(Decomposition {
                    steps,
                    outcome: Outcome::Member { xi },
                    r,
                    y: y.clone(),
                });
            }
        } else if dist > witness_threshold {
            steps.push(Step {
                i,
                x: Vector::zeros(y.dim()),
                lambda: 1,
                residual: z.norm(),
                error: 2.0 * weight * z.norm(),
            });
            return Ok(Decomposition {
                steps,
                outcome: Outcome::Witness { z, dist },
                r,
                y: y.clone(),
            });
        } else {
            let error = 2.0 * weight * z.norm();
            return Ok(Decomposition {
                steps,
                outcome: Outcome::Undecided { steps: i, error },
                r,
                y: y.clone(),
            });
        }
    }
    let error = steps.last().map_or(y.norm(), |s| s.error);
    Ok(Decomposition {
        steps,
        outcome: Outcome::Undecided { steps: max_steps, error },
        r,
        y: y.clone(),
    })
}

/// Evidence attached to an inner radius.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusCertificate {
    pub directions_sampled: usize,
    pub gauge_evaluations: usize,
    /// Largest gauge seen over unit directions, `1 / r`.
    pub max_gauge: f64,
    /// Decomposition of `r (1 − tol)` times the worst direction at radius
    /// `r`; absent when `r = 0`.
    pub probe: Option<Decomposition>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadiusResult {
    /// Largest `r` with `B_W(0, r) ⊂ C`, within relative tolerance `tol`.
    pub r: f64,
    /// Unit vector of `W` along which the boundary of `C` is nearest.
    pub direction: Vector,
    pub method: &'static str,
    pub tol: f64,
    pub certificate: RadiusCertificate,
}

/// Sign convention for directions of a balanced body: first clearly nonzero
/// coordinate positive.
fn canonical(d: Vector) -> Vector {
    let lead = d.iter().copied().find(|a| a.abs() > 1e-12).unwrap_or(0.0);
    if lead < 0.0 {
        d.scaled(-1.0)
    } else {
        d
    }
}

/// Whether `(ga, a)` beats `(gb, b)`: larger gauge, ties to the
/// lexicographically smaller direction.
fn better(ga: f64, a: &Vector, gb: f64, b: &Vector) -> bool {
    if ga != gb {
        return ga > gb;
    }
    a.iter().zip(b.iter()).find(|(p, q)| p != q).is_some_and(|(p, q)| p < q)
}

struct Sampler<'a> {
    c: &'a dyn LocatedSet,
    tol: f64,
    evals: AtomicUsize,
}

impl Sampler<'_> {
    fn gauge(&self, d: &Vector) -> Result<f64> {
        self.evals.fetch_add(1, Ordering::Relaxed);
        self.c.gauge(d, self.tol)
    }

    /// Gauges of many directions, concurrently, in input order.
    fn gauges(&self, dirs: &[Vector]) -> Result<Vec<f64>> {
        dirs.par_iter().map(|d| self.gauge(d)).collect()
    }
}

fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut out = 0.0;
    while i > 0 {
        f /= base as f64;
        out += f * (i % base) as f64;
        i /= base;
    }
    out
}

const PRIMES: [usize; 24] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89];

/// Deterministic, roughly uniform points of the unit sphere of `ℝ^m`:
/// Halton points pushed through Box–Muller.
fn sphere_points(m: usize, count: usize) -> Vec<Vec<f64>> {
    let pairs = m.div_ceil(2);
    assert!(2 * pairs <= PRIMES.len(), "sphere sampling supports dimension at most {}", PRIMES.len());
    (1..=count)
        .filter_map(|i| {
            let mut g = Vec::with_capacity(2 * pairs);
            for p in 0..pairs {
                let u1 = radical_inverse(i, PRIMES[2 * p]).max(f64::MIN_POSITIVE);
                let u2 = radical_inverse(i, PRIMES[2 * p + 1]);
                let rad = (-2.0 * u1.ln()).sqrt();
                let th = 2.0 * std::f64::consts::PI * u2;
                g.push(rad * th.cos());
                g.push(rad * th.sin());
            }
            g.truncate(m);
            let n = g.iter().map(|a| a * a).sum::<f64>().sqrt();
            (n > 0.0).then(|| g.into_iter().map(|a| a / n).collect())
        })
        .collect()
}

fn embed(q: &[Vector], coords: &[f64]) -> Vector {
    let mut out = Vector::zeros(q[0].dim());
    for (qi, a) in q.iter().zip(coords) {
        out.axpy(*a, qi);
    }
    out
}

/// Inner radius of `C` within `W = span(w_basis)`: the minimum over unit
/// `w ∈ W` of `1 / gauge(w)`.
///
/// Directions are sampled deterministically (a single axis, a half circle
/// with golden-section refinement, or Halton sphere points with compass
/// search, by the dimension of `W`). An infinite gauge gives `r = 0`.
pub fn inner_radius(c: &dyn LocatedSet, w_basis: &[Vector], tol: f64) -> Result<RadiusResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    if let Some(w) = w_basis.iter().find(|w| w.dim() != c.ambient_dim()) {
        return Err(Error::DimensionMismatch {
            expected: c.ambient_dim(),
            found: w.dim(),
        });
    }
    let (q, m) = orthonormalize(w_basis, RANK_TOL);
    if m == 0 {
        return Err(Error::InvalidInput("the span W is trivial".into()));
    }
    let sampler = Sampler {
        c,
        tol,
        evals: AtomicUsize::new(0),
    };

    let (g_best, d_best, sampled, method) = match m {
        1 => {
            let d = canonical(q[0].clone());
            (sampler.gauge(&d)?, d, 1, "axis")
        }
        2 => search_circle(&sampler, &q, tol)?,
        _ => search_sphere(&sampler, &q, m, tol)?,
    };

    let r = if g_best.is_finite() && g_best > 0.0 { 1.0 / g_best } else { 0.0 };
    let probe = if r > 0.0 {
        Some(greedy_decompose(&d_best.scaled(r * (1.0 - tol)), c, r, tol)?)
    } else {
        None
    };
    Ok(RadiusResult {
        r,
        direction: d_best,
        method,
        tol,
        certificate: RadiusCertificate {
            directions_sampled: sampled,
            gauge_evaluations: sampler.evals.load(Ordering::Relaxed),
            max_gauge: g_best,
            probe,
        },
    })
}

fn argmax(dirs: &[Vector], gauges: &[f64]) -> usize {
    let mut best = 0;
    for j in 1..dirs.len() {
        if better(gauges[j], &dirs[j], gauges[best], &dirs[best]) {
            best = j;
        }
    }
    best
}

fn search_circle(sampler: &Sampler<'_>, q: &[Vector], tol: f64) -> Result<(f64, Vector, usize, &'static str)> {
    let count = DIRECTIONS_PER_TWO_DIMS;
    let step = std::f64::consts::PI / count as f64;
    let at = |th: f64| canonical(embed(q, &[th.cos(), th.sin()]));
    let dirs: Vec<Vector> = (0..count).map(|j| at(j as f64 * step)).collect();
    let gauges = sampler.gauges(&dirs)?;
    let j = argmax(&dirs, &gauges);
    let (mut g_best, mut d_best) = (gauges[j], dirs[j].clone());
    if !g_best.is_finite() {
        return Ok((g_best, d_best, count, "circle"));
    }

    // golden-section maximization of the gauge over the neighbouring cells
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = ((j as f64 - 1.0) * step, (j as f64 + 1.0) * step);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut g1, mut g2) = (sampler.gauge(&at(x1))?, sampler.gauge(&at(x2))?);
    while b - a > 1e-3 * tol.sqrt().min(1e-4) {
        if g1 >= g2 {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - inv_phi * (b - a);
            g1 = sampler.gauge(&at(x1))?;
        } else {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + inv_phi * (b - a);
            g2 = sampler.gauge(&at(x2))?;
        }
    }
    for (g, th) in [(g1, x1), (g2, x2)] {
        let d = at(th);
        if better(g, &d, g_best, &d_best) {
            g_best = g;
            d_best = d;
        }
    }
    Ok((g_best, d_best, count, "circle+golden"))
}

fn search_sphere(sampler: &Sampler<'_>, q: &[Vector], m: usize, tol: f64) -> Result<(f64, Vector, usize, &'static str)> {
    let mut coords = sphere_points(m, DIRECTIONS_PER_TWO_DIMS / 2 * m);
    for i in 0..m {
        let mut e = vec![0.0; m];
        e[i] = 1.0;
        coords.push(e);
    }
    let dirs: Vec<Vector> = coords.iter().map(|c| canonical(embed(q, c))).collect();
    let gauges = sampler.gauges(&dirs)?;
    let j = argmax(&dirs, &gauges);
    let mut g_best = gauges[j];
    let mut d_best = dirs[j].clone();
    if !g_best.is_finite() {
        return Ok((g_best, d_best, dirs.len(), "sphere"));
    }

    // compass search over tangent moves, in coordinates of W
    let mut c_best: Vec<f64> = q.iter().map(|qi| qi.dot(&d_best)).collect();
    let mut h = 0.05;
    let floor = 1e-3 * tol.sqrt().min(1e-4);
    while h > floor {
        let trials: Vec<Vector> = (0..m)
            .flat_map(|i| [h, -h].map(|s| (i, s)))
            .map(|(i, s)| {
                let mut c = c_best.clone();
                c[i] += s;
                let n = c.iter().map(|a| a * a).sum::<f64>().sqrt();
                canonical(embed(q, &c.iter().map(|a| a / n).collect::<Vec<_>>()))
            })
            .collect();
        let tg = sampler.gauges(&trials)?;
        let k = argmax(&trials, &tg);
        if better(tg[k], &trials[k], g_best, &d_best) && tg[k] > g_best {
            g_best = tg[k];
            d_best = trials[k].clone();
            c_best = q.iter().map(|qi| qi.dot(&d_best)).collect();
        } else {
            h *= 0.5;
        }
    }
    Ok((g_best, d_best, dirs.len(), "sphere+compass"))
}

/// Largest `r` with `B(0, r) ⊂ T(B(0, 1))` for a surjective `T`.
pub fn open_map_radius(t: &Matrix, tol: f64) -> Result<RadiusResult> {
    let rank = Svd::new(t)?.rank(RANK_TOL);
    if rank < t.rows() {
        return Err(Error::RankDeficient {
            rank,
            required: t.rows(),
        });
    }
    let body = LinearImageBall::new(t.clone())?;
    let basis: Vec<Vector> = (0..t.rows()).map(|i| Vector::unit(t.rows(), i)).collect();
    inner_radius(&body, &basis, tol)
}
