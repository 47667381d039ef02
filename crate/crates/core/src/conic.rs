//! Log-barrier path following for small conic programs
//!
//! ```text
//! minimize    costᵀ z
//! subject to  F(z) = F₀ + Σ zᵢ Fᵢ ⪰ 0              (linear matrix inequality)
//!             ‖a₀ + A z‖ ≤ b₀ + bᵀ z               (optional second-order cone)
//! ```
//!
//! The barrier is `−log det F(z) − log((b₀+bᵀz)² − ‖a₀+Az‖²)`, with parameter
//! `ν = size(F) + 2`. Each centering step is a damped Newton iteration, so
//! every iterate is strictly feasible and the objective of the returned point
//! is an honest upper bound. After centering at weight `t` with Newton
//! decrement `λ < 1`, the suboptimality is at most
//! `(ν + (λ + √ν) λ / (1 − λ)) / t`.

use crate::linalg::{cholesky, cholesky_solve, forward_substitute, Matrix, Vector};

const MU: f64 = 10.0;
const CENTERING_STEPS: usize = 60;
const CENTERED: f64 = 1e-8; // λ² threshold
const MAX_T: f64 = 1e18;

/// `F(z) = f0 + Σ z_i fs[i]`; all blocks symmetric and of equal size.
pub(crate) struct Lmi {
    pub f0: Matrix,
    pub fs: Vec<Matrix>,
}

/// `‖a0 + A z‖ ≤ b0 + bᵀ z`.
pub(crate) struct Soc {
    pub a0: Vector,
    pub a: Matrix,
    pub b0: f64,
    pub b: Vector,
}

pub(crate) struct Problem {
    pub cost: Vector,
    pub lmi: Lmi,
    pub soc: Option<Soc>,
}

#[derive(Debug, Clone)]
pub(crate) struct Solution {
    pub z: Vector,
    /// Upper bound on `costᵀz − optimum` at `z`.
    pub gap: f64,
    pub newton_steps: usize,
}

struct Eval {
    grad: Vector,
    hess: Matrix,
}

impl Problem {
    fn dim(&self) -> usize {
        self.cost.dim()
    }

    pub(crate) fn barrier_parameter(&self) -> f64 {
        self.lmi.f0.rows() as f64 + if self.soc.is_some() { 2.0 } else { 0.0 }
    }

    fn lmi_at(&self, z: &Vector) -> Matrix {
        let mut f = self.lmi.f0.clone();
        for (zi, fi) in z.iter().zip(&self.lmi.fs) {
            if *zi != 0.0 {
                f.axpy(*zi, fi);
            }
        }
        f
    }

    pub(crate) fn is_feasible(&self, z: &Vector) -> bool {
        self.evaluate(z, false).is_some()
    }

    /// Barrier gradient and Hessian, or `None` outside the interior.
    fn evaluate(&self, z: &Vector, derivatives: bool) -> Option<Eval> {
        let p = self.dim();
        let mut grad = Vector::zeros(p);
        let mut hess = Matrix::zeros(p, p);

        let f = self.lmi_at(z);
        let l = cholesky(&f)?;
        let s = f.rows();

        if derivatives {
            // Y_i = L⁻¹ F_i L⁻ᵀ; ∂_i = −tr Y_i, ∂²_ij = ⟨Y_i, Y_j⟩.
            let ys: Vec<Option<Matrix>> = self
                .lmi
                .fs
                .iter()
                .map(|fi| {
                    if fi.as_slice().iter().all(|&a| a == 0.0) {
                        return None;
                    }
                    // columns of W = L⁻¹F_i
                    let mut w: Vec<Vec<f64>> = (0..s).map(|j| fi.column(j).into_inner()).collect();
                    for c in w.iter_mut() {
                        forward_substitute(&l, c);
                    }
                    // Y = L⁻¹Wᵀ since Y is symmetric; column r of Y solves
                    // L y = (row r of W)
                    let mut y = Matrix::zeros(s, s);
                    for r in 0..s {
                        let mut row: Vec<f64> = (0..s).map(|j| w[j][r]).collect();
                        forward_substitute(&l, &mut row);
                        for (i, val) in row.into_iter().enumerate() {
                            y[(i, r)] = val;
                        }
                    }
                    Some(y)
                })
                .collect();
            for i in 0..p {
                if let Some(yi) = &ys[i] {
                    grad[i] -= (0..s).map(|a| yi[(a, a)]).sum::<f64>();
                    for j in 0..=i {
                        if let Some(yj) = &ys[j] {
                            let h = yi.frobenius_dot(yj);
                            hess[(i, j)] += h;
                            if i != j {
                                hess[(j, i)] += h;
                            }
                        }
                    }
                }
            }
        }

        if let Some(soc) = &self.soc {
            let mut w = soc.a.matvec(z);
            w.axpy(1.0, &soc.a0);
            let u = soc.b0 + soc.b.dot(z);
            let wn = w.norm();
            if !(u > wn) {
                return None;
            }
            let q = (u - wn) * (u + wn);
            if !(q > 0.0) {
                return None;
            }
            if derivatives {
                // ∇q = 2u b − 2Aᵀw, ∇²q = 2bbᵀ − 2AᵀA
                let at = soc.a.transpose();
                let mut gq = soc.b.scaled(2.0 * u);
                gq.axpy(-2.0, &at.matvec(&w));
                grad.axpy(-1.0 / q, &gq);
                let ata = at.matmul(&soc.a);
                for i in 0..p {
                    for j in 0..p {
                        let h2 = 2.0 * soc.b[i] * soc.b[j] - 2.0 * ata[(i, j)];
                        hess[(i, j)] += gq[i] * gq[j] / (q * q) - h2 / q;
                    }
                }
            }
        }

        Some(Eval { grad, hess })
    }
}

/// Solves `H Δ = −g`, adding diagonal jitter if `H` is numerically singular.
fn newton_direction(hess: &Matrix, grad: &Vector) -> Option<Vector> {
    let p = hess.rows();
    let scale = (0..p).map(|i| hess[(i, i)].abs()).fold(0.0_f64, f64::max).max(1e-300);
    let mut jitter = 0.0;
    for _ in 0..12 {
        let mut h = hess.clone();
        for i in 0..p {
            h[(i, i)] += jitter;
        }
        if let Some(l) = cholesky(&h) {
            let d = cholesky_solve(&l, &grad.scaled(-1.0));
            if d.is_finite() {
                return Some(d);
            }
        }
        jitter = if jitter == 0.0 { scale * 1e-14 } else { jitter * 100.0 };
    }
    None
}

/// Runs the path-following method from the strictly feasible `z0`.
///
/// `t0` is the initial barrier weight. After every centering the callback
/// `done(z, gap)` decides whether the caller's accuracy target is met.
/// On failure the last iterate and its gap bound are returned.
pub(crate) fn minimize(
    problem: &Problem,
    z0: Vector,
    t0: f64,
    max_newton: usize,
    mut done: impl FnMut(&Vector, f64) -> bool,
) -> Result<Solution, Solution> {
    let nu = problem.barrier_parameter();
    let mut z = z0;
    let mut t = t0.max(1e-12);
    let mut steps = 0;
    debug_assert!(problem.is_feasible(&z), "start point must be strictly feasible");

    loop {
        let mut lambda = f64::INFINITY;
        for iter in 0..=CENTERING_STEPS {
            let Some(eval) = problem.evaluate(&z, true) else {
                break;
            };
            let mut g = problem.cost.scaled(t);
            g.axpy(1.0, &eval.grad);
            let Some(dir) = newton_direction(&eval.hess, &g) else {
                break;
            };
            let lambda_sq = (-g.dot(&dir)).max(0.0);
            lambda = lambda_sq.sqrt();
            // λ always describes the current z when the loop exits
            if lambda_sq <= CENTERED || iter == CENTERING_STEPS || steps >= max_newton {
                break;
            }
            steps += 1;
            // Damped Newton on a self-concordant function: the step
            // 1/(1+λ) stays feasible and decreases the barrier objective,
            // and the full step does once λ < 1/4. Halving only guards
            // against rounding at the boundary.
            let mut alpha = if lambda > 0.25 { 1.0 / (1.0 + lambda) } else { 1.0 };
            let mut moved = false;
            for _ in 0..60 {
                let mut trial = z.clone();
                trial.axpy(alpha, &dir);
                if problem.is_feasible(&trial) {
                    z = trial;
                    moved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !moved {
                break;
            }
        }

        let gap = if lambda < 1.0 {
            (nu + (lambda + nu.sqrt()) * lambda / (1.0 - lambda)) / t
        } else {
            f64::INFINITY
        };
        let sol = Solution {
            z: z.clone(),
            gap,
            newton_steps: steps,
        };
        if gap.is_finite() && done(&z, gap) {
            return Ok(sol);
        }
        if steps >= max_newton || t >= MAX_T {
            return Err(sol);
        }
        t *= MU;
    }
}
