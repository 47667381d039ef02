//! Constructive-style locating of operator orbits in finite-dimensional real
//! Hilbert spaces.
//!
//! Given a subspace `𝔄` of square matrices (by a basis) and a vector `x`,
//! the crate computes
//!
//! - distances from `y` to the orbit ball `𝔄_n x = { M x : M ∈ 𝔄, ‖M‖ ≤ n }`
//!   ([`located_sets::ball_distance`]),
//! - the nested-limit distance to the whole orbit `𝔄x` with its Cauchy
//!   certificate and stabilization test ([`nested_limit`]),
//! - the greedy halving decomposition, inner radii of balanced convex bodies
//!   and the open-mapping radius of a surjective matrix ([`open_mapping`]),
//! - the projection onto `𝔄x` through the truncation index
//!   `N > 2‖y‖ / r` ([`projection`]),
//! - and the diagonal counterexample table showing why the inner radius must
//!   be supplied ([`demo`]).

mod conic;
pub mod defaults;
pub mod demo;
pub mod error;
pub mod linalg;
pub mod located_sets;
pub mod nested_limit;
pub mod numfmt;
pub mod open_mapping;
pub mod operator_space;
pub mod projection;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
pub use located_sets::{DistanceResult, LinearImageBall, LocatedSet, OrbitBall};
pub use nested_limit::{DistanceReport, Verdict};
pub use open_mapping::{Decomposition, Outcome, RadiusResult};
pub use operator_space::{OperatorSubspace, OrbitGeometry};
pub use projection::ProjectionCertificate;
