//! Finite-dimensional operator subspaces `𝔄 ⊆ 𝓑(H)`, their orbits `𝔄x`, and
//! epsilon-nets of the orbit balls `𝔄_n x`.
//!
//! A subspace is stored by a basis `B₁,…,B_k`. Being finite-dimensional it
//! is automatically uniformly closed, and the orbit `𝔄x` is the column span
//! of the orbit map `G = [B₁x ⋯ B_kx]`, which is closed as well.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, orthonormalize, singular_values, spectral_norm, Matrix, Svd, Vector};

/// A linear subspace of `dim × dim` real matrices, given by a linearly
/// independent basis.
#[derive(Debug, Clone)]
pub struct OperatorSubspace {
    basis: Vec<Matrix>,
    dim: usize,
}

/// Validates `basis` and builds the subspace it spans.
///
/// Linear independence is checked on the vectorized matrices: element `i`
/// is rejected when its residual after removing the span of the earlier
/// elements is at most `rank_tol` times the largest basis norm.
pub fn make_subspace(basis: Vec<Matrix>, rank_tol: f64) -> Result<OperatorSubspace> {
    let first = basis
        .first()
        .ok_or_else(|| Error::InvalidInput("operator basis is empty".into()))?;
    let dim = first.rows();
    if dim == 0 {
        return Err(Error::InvalidInput("operators must have positive dimension".into()));
    }
    for b in &basis {
        if !b.is_square() {
            return Err(Error::InvalidInput(format!(
                "basis matrices must be square, got {}x{}",
                b.rows(),
                b.cols()
            )));
        }
        if b.rows() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: b.rows(),
            });
        }
        if !b.is_finite() {
            return Err(Error::InvalidInput("basis matrix has non-finite entries".into()));
        }
    }

    let flat: Vec<Vector> = basis.iter().map(|b| Vector::from(b.as_slice())).collect();
    for i in 0..flat.len() {
        let (_, rank) = orthonormalize(&flat[..=i], rank_tol);
        if rank <= i {
            return Err(Error::DependentBasis { index: i });
        }
    }
    Ok(OperatorSubspace { basis, dim })
}

impl OperatorSubspace {
    pub fn new(basis: Vec<Matrix>, rank_tol: f64) -> Result<Self> {
        make_subspace(basis, rank_tol)
    }

    pub fn basis(&self) -> &[Matrix] {
        &self.basis
    }

    /// Ambient dimension of `H`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dimension of the subspace.
    pub fn k(&self) -> usize {
        self.basis.len()
    }

    /// The operator `Σ cᵢ Bᵢ`.
    pub fn combine(&self, coeffs: &[f64]) -> Matrix {
        assert_eq!(coeffs.len(), self.k(), "combine: wrong number of coefficients");
        let mut m = Matrix::zeros(self.dim, self.dim);
        for (c, b) in coeffs.iter().zip(&self.basis) {
            if *c != 0.0 {
                m.axpy(*c, b);
            }
        }
        m
    }

    /// Orbit map `c ↦ Σ cᵢ Bᵢ x` as a `dim × k` matrix.
    pub fn orbit_map(&self, x: &Vector) -> Matrix {
        let cols: Vec<Vector> = self.basis.iter().map(|b| b.matvec(x)).collect();
        Matrix::from_columns(&cols, self.dim)
    }

    /// Frobenius Gram matrix `⟨Bᵢ, Bⱼ⟩`.
    pub fn gram(&self) -> Matrix {
        let k = self.k();
        let mut g = Matrix::zeros(k, k);
        for i in 0..k {
            for j in 0..=i {
                let v = self.basis[i].frobenius_dot(&self.basis[j]);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    /// Half-widths of a coordinate box in coefficient space containing every
    /// `c` with `‖Σ cᵢBᵢ‖ ≤ n`.
    ///
    /// `|cᵢ| ≤ ‖Dᵢ‖_F ‖M‖_F` for the dual basis `Dᵢ`, `‖Dᵢ‖_F² = (Gram⁻¹)ᵢᵢ`,
    /// and `‖M‖_F ≤ √dim ‖M‖`.
    pub fn coefficient_box(&self, n: f64) -> Vec<f64> {
        let k = self.k();
        let l = cholesky(&self.gram()).expect("basis is independent, so its Gram matrix is positive definite");
        (0..k)
            .map(|i| {
                let col = cholesky_solve(&l, &Vector::unit(k, i));
                n * (self.dim as f64).sqrt() * col[i].max(0.0).sqrt()
            })
            .collect()
    }

    fn check_vector(&self, v: &Vector) -> Result<()> {
        if v.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.dim(),
            });
        }
        if !v.is_finite() {
            return Err(Error::InvalidInput("vector has non-finite entries".into()));
        }
        Ok(())
    }
}

/// The orbit `𝔄x` of a vector: its spanning images, an orthonormal basis,
/// and the orthogonal projector onto it.
#[derive(Debug, Clone)]
pub struct OrbitGeometry {
    pub x: Vector,
    /// `Bᵢ x` for each basis element.
    pub orbit_basis: Vec<Vector>,
    /// Orthonormal basis of `W = span{Bᵢ x}`.
    pub q: Vec<Vector>,
    /// Orthogonal projector onto `W`.
    pub p: Matrix,
    pub rank: usize,
    generator: Matrix,
    generator_svd: Svd,
    rank_tol: f64,
}

/// Computes the orbit geometry of `x` under `subspace`.
pub fn orbit(subspace: &OperatorSubspace, x: &Vector, rank_tol: f64) -> Result<OrbitGeometry> {
    subspace.check_vector(x)?;
    let generator = subspace.orbit_map(x);
    let orbit_basis: Vec<Vector> = (0..subspace.k()).map(|j| generator.column(j)).collect();
    let (q, rank) = orthonormalize(&orbit_basis, rank_tol);
    let mut p = Matrix::zeros(subspace.dim(), subspace.dim());
    for qj in &q {
        p.axpy(1.0, &Matrix::outer(qj, qj));
    }
    let generator_svd = Svd::new(&generator)?;
    Ok(OrbitGeometry {
        x: x.clone(),
        orbit_basis,
        q,
        p,
        rank,
        generator,
        generator_svd,
        rank_tol,
    })
}

impl OrbitGeometry {
    /// The orbit map `G`, whose columns are `Bᵢ x`.
    pub fn generator(&self) -> &Matrix {
        &self.generator
    }

    /// `Σ cᵢ Bᵢ x`.
    pub fn point(&self, coeffs: &Vector) -> Vector {
        self.generator.matvec(coeffs)
    }

    /// Orthogonal projection onto the orbit.
    pub fn project(&self, v: &Vector) -> Vector {
        self.p.matvec(v)
    }

    /// Minimum-norm coefficients `c` with `G c` closest to `v`.
    pub fn preimage(&self, v: &Vector) -> Vector {
        self.generator_svd.solve_min_norm(v, self.rank_tol)
    }

    /// Orthonormal basis of `{c : G c = 0}`; empty when the orbit map is
    /// injective.
    pub fn kernel(&self) -> Vec<Vector> {
        if self.generator.cols() == 0 {
            return Vec::new();
        }
        if self.generator_svd.max_singular() == 0.0 {
            return (0..self.generator.cols())
                .map(|i| Vector::unit(self.generator.cols(), i))
                .collect();
        }
        self.generator_svd.null_space(self.rank_tol)
    }

    pub fn spectral_norm_of_generator(&self) -> f64 {
        self.generator_svd.max_singular()
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }
}

/// Operator norm `σ₁(Σ cᵢ Bᵢ)`.
pub fn op_norm(subspace: &OperatorSubspace, coeffs: &[f64], tol: f64) -> Result<f64> {
    if coeffs.len() != subspace.k() {
        return Err(Error::DimensionMismatch {
            expected: subspace.k(),
            found: coeffs.len(),
        });
    }
    Ok(singular_values(&subspace.combine(coeffs), tol)?[0])
}

/// Epsilon-net of `𝔄_n x` with the default size cap.
pub fn epsilon_net(subspace: &OperatorSubspace, x: &Vector, n: f64, eps: f64) -> Result<Vec<Vector>> {
    epsilon_net_capped(subspace, x, n, eps, crate::defaults::NET_CAP)
}

/// A finite subset of `𝔄_n x` such that every point of `𝔄_n x` lies within
/// `eps` of one of its elements.
///
/// Coefficient space is gridded over the box of [`OperatorSubspace::coefficient_box`]
/// with spacing `h`. A grid point whose operator norm exceeds `n` by at most
/// the rounding slack `(h/2) Σ σ₁(Bᵢ)` is retracted radially onto the
/// boundary of `𝔄_n`; the rest are dropped. `h` is chosen so that rounding
/// plus retraction moves an orbit point by at most `eps`.
pub fn epsilon_net_capped(
    subspace: &OperatorSubspace,
    x: &Vector,
    n: f64,
    eps: f64,
    cap: usize,
) -> Result<Vec<Vector>> {
    subspace.check_vector(x)?;
    if !(n > 0.0) || !(eps > 0.0) {
        return Err(Error::InvalidInput(format!(
            "epsilon_net needs n > 0 and eps > 0, got n = {n}, eps = {eps}"
        )));
    }
    let dim = subspace.dim();
    // every orbit-ball point has norm ≤ n‖x‖
    if eps >= n * x.norm() {
        return Ok(vec![Vector::zeros(dim)]);
    }

    let generator = subspace.orbit_map(x);
    let k = subspace.k();
    let g_norm = spectral_norm(&generator)?;
    let lip: f64 = subspace
        .basis()
        .iter()
        .map(spectral_norm)
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    let h = 2.0 * eps / (g_norm * (k as f64).sqrt() + x.norm() * lip);

    let half_widths = subspace.coefficient_box(n);
    let axes: Vec<Vec<f64>> = half_widths
        .iter()
        .map(|&b| {
            let count = ((2.0 * b / h - 1e-9).ceil().max(0.0) as usize) + 1;
            if count == 1 {
                vec![0.0]
            } else {
                (0..count)
                    .map(|j| -b + 2.0 * b * j as f64 / (count - 1) as f64)
                    .collect()
            }
        })
        .collect();
    let required: f64 = axes.iter().map(|a| a.len() as f64).product();
    if required > cap as f64 {
        return Err(Error::NetTooLarge { required, cap });
    }
    let total = required as usize;
    let slack = 0.5 * h * lip;

    let points: Vec<Option<Vector>> = (0..total)
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
            let c = Vector::new(coeffs);
            Ok(if sigma <= n {
                Some(generator.matvec(&c))
            } else if sigma <= n + slack {
                Some(generator.matvec(&c.scaled(n / sigma)))
            } else {
                None
            })
        })
        .collect::<Result<_>>()?;
    Ok(points.into_iter().flatten().collect())
}
