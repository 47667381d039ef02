//! Located sets: convex bodies that come with an approximate distance, an
//! approximate nearest point and a gauge (Minkowski functional).
//!
//! Two families are provided. [`OrbitBall`] is the orbit ball
//! `𝔄_n x = { M x : M ∈ 𝔄, ‖M‖ ≤ n }`, located by the conic solver behind
//! [`ball_distance`]. [`LinearImageBall`] is `T(B)` for the closed unit ball
//! `B`, located in closed form through the singular value decomposition of
//! `T`; it covers discs, segments and images of unit balls.

use rayon::prelude::*;

use crate::conic::{self, Lmi, Problem, Soc};
use crate::defaults::{MEM_TOL, RANK_TOL};
use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, Matrix, Svd, Vector};
use crate::operator_space::{orbit, OperatorSubspace, OrbitGeometry};

/// Newton step budget of the conic solver per call.
const MAX_NEWTON: usize = 4000;

/// A balanced convex body `C` in `ℝ^d` that can be located.
///
/// `locate(v, tol)` returns `(d, p)` with `|d − ρ(v, C)| ≤ tol`, `p ∈ C` up
/// to the membership band and `‖v − p‖ ≤ d + 2 tol`.
pub trait LocatedSet: Sync {
    fn ambient_dim(&self) -> usize;

    fn locate(&self, v: &Vector, tol: f64) -> Result<(f64, Vector)>;

    fn dist(&self, v: &Vector, tol: f64) -> Result<f64> {
        Ok(self.locate(v, tol)?.0)
    }

    fn nearest(&self, v: &Vector, tol: f64) -> Result<Vector> {
        Ok(self.locate(v, tol)?.1)
    }

    /// `inf { t > 0 : v ∈ tC }`, or `f64::INFINITY` when `v` is outside the
    /// span of `C`.
    fn gauge(&self, v: &Vector, tol: f64) -> Result<f64>;

    fn description(&self) -> String;
}

/// Solution of the ball-constrained distance problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceResult {
    /// `‖y − point‖`, within `tol` of the true distance.
    pub value: f64,
    /// Proven lower bound on the true distance, `value − lower ≤ tol`.
    pub lower: f64,
    /// Coefficients of the operator `M = Σ cᵢBᵢ` with `point = M x`.
    pub coeffs: Vector,
    pub point: Vector,
    pub tol: f64,
    pub solver_iters: usize,
}

fn check_common(subspace: &OperatorSubspace, y: &Vector, tol: f64) -> Result<()> {
    if y.dim() != subspace.dim() {
        return Err(Error::DimensionMismatch {
            expected: subspace.dim(),
            found: y.dim(),
        });
    }
    if !y.is_finite() {
        return Err(Error::InvalidInput("vector has non-finite entries".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// `[[0, M], [Mᵀ, 0]]`, whose eigenvalues are `±σᵢ(M)`.
fn dilation(m: &Matrix) -> Matrix {
    let d = m.rows();
    let mut out = Matrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            out[(i, d + j)] = m[(i, j)];
            out[(d + j, i)] = m[(i, j)];
        }
    }
    out
}

/// `ρ(y, 𝔄_n x)` with a nearest point and its operator coefficients.
pub fn ball_distance(y: &Vector, subspace: &OperatorSubspace, x: &Vector, n: f64, tol: f64) -> Result<DistanceResult> {
    let geometry = orbit(subspace, x, RANK_TOL)?;
    ball_distance_in(subspace, &geometry, y, n, tol)
}

/// [`ball_distance`] with a precomputed orbit geometry.
///
/// If the least-squares coefficients of `y` already have operator norm at
/// most `n`, the projection of `y` onto the orbit is the answer. Otherwise
/// the problem
///
/// ```text
/// minimize s  subject to  ‖y − G c‖ ≤ s,  [[nI, M(c)], [M(c)ᵀ, nI]] ⪰ 0
/// ```
///
/// is solved by barrier path following, which brackets the optimum between
/// the achieved `‖y − G c‖` and `s − gap`.
pub fn ball_distance_in(
    subspace: &OperatorSubspace,
    geometry: &OrbitGeometry,
    y: &Vector,
    n: f64,
    tol: f64,
) -> Result<DistanceResult> {
    check_common(subspace, y, tol)?;
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidInput(format!("ball scale must be positive, got {n}")));
    }
    let k = subspace.k();
    let exact = |coeffs: Vector, iters: usize| {
        let point = geometry.point(&coeffs);
        let value = y.dist(&point);
        DistanceResult {
            value,
            lower: value,
            coeffs,
            point,
            tol,
            solver_iters: iters,
        }
    };
    if geometry.rank == 0 {
        return Ok(exact(Vector::zeros(k), 0));
    }

    let c_ls = geometry.preimage(y);
    if spectral_norm(&subspace.combine(c_ls.as_slice()))? <= n * (1.0 + MEM_TOL) {
        return Ok(exact(c_ls, 0));
    }

    let d = subspace.dim();
    let g = geometry.generator();
    let mut a = Matrix::zeros(d, k + 1);
    for i in 0..d {
        for j in 0..k {
            a[(i, j)] = -g[(i, j)];
        }
    }
    let mut fs: Vec<Matrix> = subspace.basis().iter().map(dilation).collect();
    fs.push(Matrix::zeros(2 * d, 2 * d));
    let problem = Problem {
        cost: Vector::unit(k + 1, k),
        lmi: Lmi {
            f0: Matrix::identity(2 * d).scaled(n),
            fs,
        },
        soc: Some(Soc {
            a0: y.clone(),
            a,
            b0: 0.0,
            b: Vector::unit(k + 1, k),
        }),
    };
    let s0 = y.norm() + 1.0;
    let mut z0 = Vector::zeros(k + 1);
    z0[k] = s0;
    let residual = |z: &Vector| {
        let c = Vector::new(z.as_slice()[..k].to_vec());
        y.dist(&g.matvec(&c))
    };
    let t0 = problem.barrier_parameter() / s0;
    match conic::minimize(&problem, z0, t0, MAX_NEWTON, |z, gap| {
        residual(z) - (z[k] - gap).max(0.0) <= tol
    }) {
        Ok(sol) => {
            let coeffs = Vector::new(sol.z.as_slice()[..k].to_vec());
            let point = g.matvec(&coeffs);
            let value = y.dist(&point);
            Ok(DistanceResult {
                value,
                lower: (sol.z[k] - sol.gap).max(0.0).min(value),
                coeffs,
                point,
                tol,
                solver_iters: sol.newton_steps,
            })
        }
        Err(sol) => Err(Error::SolverFailure {
            lower: if sol.gap.is_finite() { (sol.z[k] - sol.gap).max(0.0) } else { 0.0 },
            upper: residual(&sol.z),
            iterations: sol.newton_steps,
        }),
    }
}

/// Brute-force `ρ(y, 𝔄_n x)` over a coefficient grid.
///
/// The grid spans the coefficient box of `𝔄_n` with spacing at most
/// `grid_step`; grid points outside `𝔄_n` are pulled radially onto its
/// boundary. Every candidate is feasible, so the result is an upper bound.
pub fn grid_oracle_distance(y: &Vector, subspace: &OperatorSubspace, x: &Vector, n: f64, grid_step: f64) -> Result<f64> {
    check_common(subspace, y, 1.0)?;
    if subspace.k() > 4 {
        return Err(Error::Refused(format!(
            "grid oracle supports subspaces of dimension at most 4, got {}",
            subspace.k()
        )));
    }
    if !(n > 0.0) || !(grid_step > 0.0) {
        return Err(Error::InvalidInput("grid oracle needs n > 0 and grid_step > 0".into()));
    }
    if x.dim() != subspace.dim() {
        return Err(Error::DimensionMismatch {
            expected: subspace.dim(),
            found: x.dim(),
        });
    }
    let g = subspace.orbit_map(x);
    let axes: Vec<Vec<f64>> = subspace
        .coefficient_box(n)
        .into_iter()
        .map(|b| {
            let count = (2.0 * b / grid_step).ceil() as usize + 1;
            (0..count).map(|j| -b + 2.0 * b * j as f64 / (count - 1) as f64).collect()
        })
        .collect();
    let total: usize = axes.iter().map(Vec::len).product();
    let best = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut rem = flat;
            let coeffs: Vec<f64> = axes
                .iter()
                .map(|axis| {
                    let v = axis[rem % axis.len()];
                    rem /= axis.len();
                    v
                })
                .collect();
            let sigma = spectral_norm(&subspace.combine(&coeffs))?;
            let scale = if sigma > n { n / sigma } else { 1.0 };
            Ok(y.dist(&g.matvec(&Vector::new(coeffs).scaled(scale))))
        })
        .try_reduce(|| f64::INFINITY, |a, b| Ok(a.min(b)))?;
    Ok(best)
}

/// Gauge of the unit orbit ball, `inf { t > 0 : v ∈ t 𝔄₁x }`.
pub fn gauge_of_orbit_ball(subspace: &OperatorSubspace, x: &Vector, v: &Vector, tol: f64) -> Result<f64> {
    let geometry = orbit(subspace, x, RANK_TOL)?;
    gauge_in(subspace, &geometry, v, tol)
}

/// [`gauge_of_orbit_ball`] with a precomputed orbit geometry.
///
/// The gauge is the least operator norm of a coefficient vector mapping to
/// `v`. When the orbit map is injective that vector is unique; otherwise the
/// norm is minimized over the affine fibre by the conic solver.
pub fn gauge_in(subspace: &OperatorSubspace, geometry: &OrbitGeometry, v: &Vector, tol: f64) -> Result<f64> {
    check_common(subspace, v, tol)?;
    let vn = v.norm();
    if vn == 0.0 {
        return Ok(0.0);
    }
    if geometry.rank == 0 {
        return Ok(f64::INFINITY);
    }
    let pv = geometry.project(v);
    if v.dist(&pv) > tol * vn {
        return Ok(f64::INFINITY);
    }
    let c0 = geometry.preimage(&pv);
    let m0 = subspace.combine(c0.as_slice());
    let sigma0 = spectral_norm(&m0)?;
    let kernel = geometry.kernel();
    if kernel.is_empty() {
        return Ok(sigma0);
    }

    let d = subspace.dim();
    let p = kernel.len();
    let mut fs: Vec<Matrix> = kernel
        .iter()
        .map(|w| dilation(&subspace.combine(w.as_slice())))
        .collect();
    fs.push(Matrix::identity(2 * d));
    let problem = Problem {
        cost: Vector::unit(p + 1, p),
        lmi: Lmi { f0: dilation(&m0), fs },
        soc: None,
    };
    let s0 = sigma0 + 1.0;
    let mut z0 = Vector::zeros(p + 1);
    z0[p] = s0;
    let t0 = problem.barrier_parameter() / s0;
    match conic::minimize(&problem, z0, t0, MAX_NEWTON, |_, gap| gap <= 0.5 * tol) {
        Ok(sol) => Ok(sol.z[p].min(sigma0)),
        Err(sol) => Err(Error::SolverFailure {
            lower: if sol.gap.is_finite() { (sol.z[p] - sol.gap).max(0.0) } else { 0.0 },
            upper: sol.z[p].min(sigma0),
            iterations: sol.newton_steps,
        }),
    }
}

/// The orbit ball `𝔄_n x` as a located set.
#[derive(Debug, Clone)]
pub struct OrbitBall {
    subspace: OperatorSubspace,
    geometry: OrbitGeometry,
    n: f64,
}

impl OrbitBall {
    pub fn new(subspace: &OperatorSubspace, x: &Vector, n: f64) -> Result<Self> {
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidInput(format!("ball scale must be positive, got {n}")));
        }
        Ok(OrbitBall {
            subspace: subspace.clone(),
            geometry: orbit(subspace, x, RANK_TOL)?,
            n,
        })
    }

    pub fn geometry(&self) -> &OrbitGeometry {
        &self.geometry
    }

    pub fn subspace(&self) -> &OperatorSubspace {
        &self.subspace
    }

    pub fn scale(&self) -> f64 {
        self.n
    }

    pub fn distance(&self, v: &Vector, tol: f64) -> Result<DistanceResult> {
        ball_distance_in(&self.subspace, &self.geometry, v, self.n, tol)
    }
}

impl LocatedSet for OrbitBall {
    fn ambient_dim(&self) -> usize {
        self.subspace.dim()
    }

    fn locate(&self, v: &Vector, tol: f64) -> Result<(f64, Vector)> {
        let r = self.distance(v, tol)?;
        Ok((r.value, r.point))
    }

    fn gauge(&self, v: &Vector, tol: f64) -> Result<f64> {
        Ok(gauge_in(&self.subspace, &self.geometry, v, tol * self.n)? / self.n)
    }

    fn description(&self) -> String {
        format!("orbit ball of scale {} in dimension {}", self.n, self.subspace.dim())
    }
}

/// `T(B)`, the image of the closed unit ball of `ℝ^p` under `T : ℝ^p → ℝ^d`.
#[derive(Debug, Clone)]
pub struct LinearImageBall {
    t: Matrix,
    svd: Svd,
    rank: usize,
}

impl LinearImageBall {
    pub fn new(t: Matrix) -> Result<Self> {
        if t.rows() == 0 || t.cols() == 0 {
            return Err(Error::InvalidInput("linear map must be non-empty".into()));
        }
        let svd = Svd::new(&t)?;
        let rank = svd.rank(RANK_TOL);
        Ok(LinearImageBall { t, svd, rank })
    }

    /// The closed unit disc of `ℝ^d`.
    pub fn unit_ball(d: usize) -> Result<Self> {
        Self::new(Matrix::identity(d))
    }

    pub fn map(&self) -> &Matrix {
        &self.t
    }

    /// `Uᵣᵀ v` over the numerical range, and the part of `v` outside it.
    fn split(&self, v: &Vector) -> (Vec<f64>, f64) {
        let u = &self.svd.u;
        let b: Vec<f64> = (0..self.rank)
            .map(|k| (0..u.rows()).map(|i| u[(i, k)] * v[i]).sum())
            .collect();
        let mut inside = Vector::zeros(v.dim());
        for (k, bk) in b.iter().enumerate() {
            inside.axpy(*bk, &u.column(k));
        }
        (b, v.dist(&inside))
    }

    fn image_of(&self, w: &[f64]) -> Vector {
        let mut pre = Vector::zeros(self.t.cols());
        for (k, wk) in w.iter().enumerate() {
            pre.axpy(*wk, &self.svd.v.column(k));
        }
        self.t.matvec(&pre)
    }
}

impl LocatedSet for LinearImageBall {
    fn ambient_dim(&self) -> usize {
        self.t.rows()
    }

    /// Trust-region subproblem `min ‖v − T u‖, ‖u‖ ≤ 1`, solved along the
    /// singular vectors with a secular equation for the multiplier.
    fn locate(&self, v: &Vector, tol: f64) -> Result<(f64, Vector)> {
        if v.dim() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                found: v.dim(),
            });
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
        }
        let (b, _) = self.split(v);
        let sigma = &self.svd.sigma[..self.rank];
        let w_of = |lambda: f64| -> Vec<f64> {
            sigma
                .iter()
                .zip(&b)
                .map(|(s, bk)| s * bk / (s * s + lambda))
                .collect()
        };
        let norm = |w: &[f64]| w.iter().map(|a| a * a).sum::<f64>().sqrt();
        let w = if norm(&w_of(0.0)) <= 1.0 {
            w_of(0.0)
        } else {
            let mut lo = 0.0;
            let mut hi = sigma.iter().zip(&b).map(|(s, bk)| s * bk.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if norm(&w_of(mid)) > 1.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            // feasible side of the bracket
            let w = w_of(hi);
            let wn = norm(&w);
            if wn > 1.0 {
                w.iter().map(|a| a / wn).collect()
            } else {
                w
            }
        };
        let point = self.image_of(&w);
        Ok((v.dist(&point), point))
    }

    fn gauge(&self, v: &Vector, tol: f64) -> Result<f64> {
        if v.dim() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                found: v.dim(),
            });
        }
        let vn = v.norm();
        if vn == 0.0 {
            return Ok(0.0);
        }
        let (b, outside) = self.split(v);
        if outside > tol * vn {
            return Ok(f64::INFINITY);
        }
        Ok(b
            .iter()
            .zip(&self.svd.sigma)
            .map(|(bk, s)| (bk / s) * (bk / s))
            .sum::<f64>()
            .sqrt())
    }

    fn description(&self) -> String {
        format!("image of the unit ball under a {}x{} map", self.t.rows(), self.t.cols())
    }
}

/// Normalizes coefficient vectors to operators of norm one, forms
/// `Σ_{j≤m} 2^{-j} A_j x + 2^{-m} A_m x` and returns its gauge in `𝔄₁x`.
///
/// The point is a superconvex combination of members of `𝔄₁x`, so the
/// result should not exceed `1` beyond the tolerance.
pub fn superconvexity_probe(subspace: &OperatorSubspace, x: &Vector, coeffs: &[Vector], tol: f64) -> Result<f64> {
    if coeffs.is_empty() {
        return Err(Error::InvalidInput("superconvexity probe needs at least one operator".into()));
    }
    let geometry = orbit(subspace, x, RANK_TOL)?;
    let mut point = Vector::zeros(subspace.dim());
    let mut weight = 1.0;
    let mut last = Vector::zeros(subspace.dim());
    for c in coeffs {
        if c.dim() != subspace.k() {
            return Err(Error::DimensionMismatch {
                expected: subspace.k(),
                found: c.dim(),
            });
        }
        let norm = spectral_norm(&subspace.combine(c.as_slice()))?;
        if norm == 0.0 {
            return Err(Error::InvalidInput("probe operator is zero".into()));
        }
        weight *= 0.5;
        last = geometry.point(&c.scaled(1.0 / norm));
        point.axpy(weight, &last);
    }
    point.axpy(weight, &last);
    gauge_in(subspace, &geometry, &point, tol)
}

/// Outcome of [`subspace_closure_probe`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureProbe {
    /// Gauge of `α u + v`.
    pub gauge: f64,
    /// `2 (2 + |α|) max(gauge(u), gauge(v))`, the scale bound for `α u + v`.
    pub bound: f64,
}

impl ClosureProbe {
    pub fn holds(&self, tol: f64) -> bool {
        self.gauge.is_finite() && self.gauge <= self.bound + tol
    }
}

/// Checks that the union of the scaled balls `n 𝔄₁x` is closed under
/// `(u, v) ↦ α u + v` with the scale bound of the linear-subspace argument.
pub fn subspace_closure_probe(
    subspace: &OperatorSubspace,
    x: &Vector,
    u: &Vector,
    v: &Vector,
    alpha: f64,
    tol: f64,
) -> Result<ClosureProbe> {
    let geometry = orbit(subspace, x, RANK_TOL)?;
    let level = gauge_in(subspace, &geometry, u, tol)?.max(gauge_in(subspace, &geometry, v, tol)?);
    let mut w = v.clone();
    w.axpy(alpha, u);
    Ok(ClosureProbe {
        gauge: gauge_in(subspace, &geometry, &w, tol)?,
        bound: 2.0 * (2.0 + alpha.abs()) * level,
    })
}
