//! Distance to the whole orbit `𝔄x` as the limit of distances to the
//! nested balls `𝔄_1 x ⊂ 𝔄_2 x ⊂ ⋯`.
//!
//! Level `n` is solved to accuracy `min(tol, 2^{-n-2})`, so its minimizer
//! `y_n` satisfies `‖y − y_n‖ < d_n + 2^{-n}`. The parallelogram law then
//! bounds `‖y_m − y_n‖²` by [`cauchy_bound`], which certifies convergence of
//! the minimizers. Independently, equal distances at two consecutive levels
//! mean the distance has stabilized (the map `n ↦ d_n` is convex and
//! nonincreasing).

use rayon::prelude::*;

use crate::defaults::{RANK_TOL, STAB_TOL};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::located_sets::{ball_distance_in, DistanceResult};
use crate::operator_space::{orbit, OperatorSubspace, OrbitGeometry};

/// Upper bound on `‖y_m − y_n‖²` for near-minimizers at levels `m ≥ n`:
/// `2((d_m + 2^{-m})² − d_m²) + 2((d_n + 2^{-n})² − d_m²)`.
pub fn cauchy_bound(d_m: f64, d_n: f64, m: usize, n: usize) -> f64 {
    let em = 0.5f64.powi(m as i32);
    let en = 0.5f64.powi(n as i32);
    2.0 * ((d_m + em).powi(2) - d_m * d_m) + 2.0 * ((d_n + en).powi(2) - d_m * d_m)
}

/// Whether two consecutive level distances agree within `stab_tol`.
pub fn stabilize_check(d_n: f64, d_n1: f64, stab_tol: f64) -> bool {
    (d_n - d_n1).abs() <= stab_tol
}

/// The two sides of the strict-excess inequality
/// `‖y − v‖² − d² ≥ ‖v − y_∞‖² / 2` for `v` in the orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrictExcess {
    /// `‖y − v‖² − d²`.
    pub value: f64,
    /// `‖v − y_∞‖² / 2`.
    pub floor: f64,
}

impl StrictExcess {
    pub fn holds(&self, tol: f64) -> bool {
        self.value >= self.floor - tol
    }
}

pub fn strict_excess(d: f64, y_inf: &Vector, v: &Vector, y: &Vector) -> StrictExcess {
    StrictExcess {
        value: y.dist(v).powi(2) - d * d,
        floor: 0.5 * v.dist(y_inf).powi(2),
    }
}

/// One solved level.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub n: usize,
    /// `ρ(y, 𝔄_n x)` within the level tolerance.
    pub d: f64,
    /// Proven lower bound on `ρ(y, 𝔄_n x)`.
    pub lower: f64,
    /// Near-minimizer `y_n ∈ 𝔄_n x`.
    pub point: Vector,
    pub tol: f64,
}

/// Cauchy certificate for a pair of levels `m > n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchyEntry {
    pub m: usize,
    pub n: usize,
    pub bound: f64,
    /// `‖y_m − y_n‖²` as computed.
    pub observed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// The minimizers converged: `‖y_m − y_N‖² < tol²`, so `y_∞ = y_N` up to
    /// `tol` and `d = ‖y − y_∞‖`.
    Located { d: f64, y_inf: Vector },
    /// `d_N = d_{N+1}` within the stabilization tolerance; `d = d_N`.
    Stabilized { n: usize, d: f64 },
    /// Neither test fired within the budget. No positive lower bound on the
    /// global distance can be certified from finitely many levels.
    Undecided { budget: usize, lower: f64, upper: f64 },
    /// The ball solver failed at `level`; earlier levels are kept.
    SolverFailed { level: usize, lower: f64, upper: f64 },
}

impl Verdict {
    /// Reported global distance, if any.
    pub fn distance(&self) -> Option<f64> {
        match self {
            Verdict::Located { d, .. } | Verdict::Stabilized { d, .. } => Some(*d),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Located { .. } => "Located",
            Verdict::Stabilized { .. } => "Stabilized",
            Verdict::Undecided { .. } => "Undecided",
            Verdict::SolverFailed { .. } => "SolverFailed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceReport {
    pub levels: Vec<Level>,
    /// One entry per consecutive pair `(n + 1, n)` that was examined.
    pub cauchy_bounds: Vec<CauchyEntry>,
    pub verdict: Verdict,
    pub tol: f64,
    pub stab_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocateOptions {
    pub tol: f64,
    pub stab_tol: f64,
    pub budget: usize,
    /// Solve all levels concurrently, then scan. Verdicts are identical to
    /// the sequential mode, which stops solving at the first decision.
    pub parallel: bool,
}

impl LocateOptions {
    pub fn new(budget: usize, tol: f64) -> Self {
        LocateOptions {
            tol,
            stab_tol: STAB_TOL,
            budget,
            parallel: false,
        }
    }
}

/// Solver accuracy at level `n`.
pub fn level_tol(n: usize, tol: f64) -> f64 {
    tol.min(0.5f64.powi(n as i32 + 2))
}

pub fn locate_distance(y: &Vector, subspace: &OperatorSubspace, x: &Vector, budget: usize, tol: f64) -> Result<DistanceReport> {
    locate_distance_with(y, subspace, x, &LocateOptions::new(budget, tol))
}

pub fn locate_distance_with(y: &Vector, subspace: &OperatorSubspace, x: &Vector, opts: &LocateOptions) -> Result<DistanceReport> {
    if opts.budget == 0 {
        return Err(Error::InvalidInput("level budget must be at least 1".into()));
    }
    if !(opts.tol > 0.0) || !(opts.stab_tol > 0.0) {
        return Err(Error::InvalidInput("tolerances must be positive".into()));
    }
    let geometry = orbit(subspace, x, RANK_TOL)?;
    let solve = |n: usize| solve_level(subspace, &geometry, y, n, opts.tol);

    if opts.parallel {
        let solved: Vec<Result<Level>> = (1..=opts.budget).into_par_iter().map(solve).collect();
        let mut scan = Scan::new(y, opts);
        for level in solved {
            if scan.push(level?)? {
                break;
            }
        }
        Ok(scan.finish())
    } else {
        let mut scan = Scan::new(y, opts);
        for n in 1..=opts.budget {
            if scan.push(solve(n)?)? {
                break;
            }
        }
        Ok(scan.finish())
    }
}

fn solve_level(subspace: &OperatorSubspace, geometry: &OrbitGeometry, y: &Vector, n: usize, tol: f64) -> Result<Level> {
    let lt = level_tol(n, tol);
    match ball_distance_in(subspace, geometry, y, n as f64, lt) {
        Ok(DistanceResult { value, lower, point, .. }) => Ok(Level {
            n,
            d: value,
            lower,
            point,
            tol: lt,
        }),
        Err(Error::SolverFailure { lower, upper, .. }) => Err(Error::SolverFailure {
            lower,
            upper,
            iterations: n,
        }),
        Err(e) => Err(e),
    }
}

/// Sequential decision logic shared by both modes.
struct Scan<'a> {
    y: &'a Vector,
    opts: &'a LocateOptions,
    levels: Vec<Level>,
    cauchy: Vec<CauchyEntry>,
    verdict: Option<Verdict>,
}

impl<'a> Scan<'a> {
    fn new(y: &'a Vector, opts: &'a LocateOptions) -> Self {
        Scan {
            y,
            opts,
            levels: Vec::new(),
            cauchy: Vec::new(),
            verdict: None,
        }
    }

    /// Records a level; returns whether a verdict has been reached.
    fn push(&mut self, level: Level) -> Result<bool> {
        self.levels.push(level);
        let m = self.levels.len();
        if m < 2 {
            return Ok(false);
        }
        let (prev, cur) = (&self.levels[m - 2], &self.levels[m - 1]);
        let bound = cauchy_bound(cur.d, prev.d, cur.n, prev.n);
        self.cauchy.push(CauchyEntry {
            m: cur.n,
            n: prev.n,
            bound,
            observed: cur.point.dist(&prev.point).powi(2),
        });
        if bound < self.opts.tol * self.opts.tol {
            self.verdict = Some(Verdict::Located {
                d: self.y.dist(&prev.point),
                y_inf: prev.point.clone(),
            });
        } else if stabilize_check(prev.d, cur.d, self.opts.stab_tol) {
            self.verdict = Some(Verdict::Stabilized { n: prev.n, d: prev.d });
        }
        Ok(self.verdict.is_some())
    }

    fn finish(self) -> DistanceReport {
        let verdict = self.verdict.unwrap_or_else(|| Verdict::Undecided {
            budget: self.opts.budget,
            lower: 0.0,
            upper: self.levels.last().map_or(self.y.norm(), |l| l.d),
        });
        DistanceReport {
            levels: self.levels,
            cauchy_bounds: self.cauchy,
            verdict,
            tol: self.opts.tol,
            stab_tol: self.opts.stab_tol,
        }
    }
}

/// [`locate_distance_with`], but a solver failure ends the scan with a
/// [`Verdict::SolverFailed`] report instead of discarding the solved levels.
pub fn locate_distance_partial(y: &Vector, subspace: &OperatorSubspace, x: &Vector, opts: &LocateOptions) -> Result<DistanceReport> {
    match locate_distance_with(y, subspace, x, opts) {
        Err(Error::SolverFailure { lower, upper, iterations: failed }) => {
            let mut shorter = *opts;
            shorter.budget = failed - 1;
            let mut report = if shorter.budget == 0 {
                DistanceReport {
                    levels: Vec::new(),
                    cauchy_bounds: Vec::new(),
                    verdict: Verdict::Undecided {
                        budget: 0,
                        lower: 0.0,
                        upper: y.norm(),
                    },
                    tol: opts.tol,
                    stab_tol: opts.stab_tol,
                }
            } else {
                locate_distance_with(y, subspace, x, &shorter)?
            };
            if matches!(report.verdict, Verdict::Undecided { .. }) {
                report.verdict = Verdict::SolverFailed { level: failed, lower, upper };
            }
            Ok(report)
        }
        other => other,
    }
}
