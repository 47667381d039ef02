//! Default tolerances, in one place.

/// Solver accuracy for distances, gauges and radii.
pub const TOL: f64 = 1e-6;

/// Equality threshold for the stabilization test `d_N = d_{N+1}`.
pub const STAB_TOL: f64 = 1e-7;

/// Number of levels the nested-limit engine may compute.
pub const BUDGET: usize = 30;

/// Relative threshold below which a direction counts as linearly dependent.
pub const RANK_TOL: f64 = 1e-9;

/// Relative band for operator-norm membership: `M ∈ 𝔄_n` iff
/// `σ₁(M) ≤ n (1 + MEM_TOL)`.
pub const MEM_TOL: f64 = 1e-10;

/// Seed for the pseudo-random probe vectors of projection certificates.
pub const PROBE_SEED: u64 = 0x00C0_FFEE;

/// Number of pseudo-random probe vectors added to the canonical basis.
pub const RANDOM_PROBES: usize = 8;

/// Sphere directions sampled per two dimensions of the span when computing
/// an inner radius.
pub const DIRECTIONS_PER_TWO_DIMS: usize = 512;

/// Largest epsilon-net the library will materialize.
pub const NET_CAP: usize = 1_000_000;

/// Step cap for the greedy halving decomposition.
pub const DECOMPOSE_STEPS: usize = 64;

/// The full set of run-time tolerances, with the defaults above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub tol: f64,
    pub stab_tol: f64,
    pub budget: usize,
    pub rank_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol: TOL,
            stab_tol: STAB_TOL,
            budget: BUDGET,
            rank_tol: RANK_TOL,
        }
    }
}
