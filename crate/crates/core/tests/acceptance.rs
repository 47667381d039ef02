//! Acceptance gate: one line per criterion, nonzero exit on any failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use orbit_locator::demo::{demo_table, diag_subspace, DEFAULT_C_VALUES};
use orbit_locator::linalg::{singular_values, Matrix, Vector};
use orbit_locator::located_sets::{ball_distance, grid_oracle_distance, LinearImageBall, LocatedSet};
use orbit_locator::nested_limit::{cauchy_bound, locate_distance};
use orbit_locator::open_mapping::{greedy_decompose, open_map_radius, Outcome};
use orbit_locator::operator_space::{make_subspace, op_norm, orbit, OperatorSubspace};
use orbit_locator::projection::{build_projection, metric_complement_distance, pipeline_distance};
use orbit_locator::OrbitBall;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-6;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn v(xs: &[f64]) -> Vector {
    Vector::from(xs)
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let data: Vec<Vec<f64>> = (0..rows).map(|_| (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    Matrix::from_rows(&data).unwrap()
}

fn random_vector(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vector {
    Vector::new((0..dim).map(|_| rng.gen_range(-scale..scale)).collect())
}

struct Instance {
    label: String,
    subspace: OperatorSubspace,
    x: Vector,
    y: Vector,
}

/// 25 diagonal-example instances and 25 random-basis instances
/// (dimension ≤ 4, subspace dimension ≤ 3).
fn instances() -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let mut out = Vec::new();
    for i in 0..25 {
        let c = rng.gen_range(-1.0..1.0);
        out.push(Instance {
            label: format!("diag#{i} c={c:.4}"),
            subspace: diag_subspace(),
            x: v(&[1.0, c]),
            y: random_vector(&mut rng, 2, 2.0),
        });
    }
    let mut i = 0;
    while i < 25 {
        let dim = rng.gen_range(2..=4);
        let k = rng.gen_range(1..=3);
        let basis: Vec<Matrix> = (0..k).map(|_| random_matrix(&mut rng, dim, dim)).collect();
        let Ok(subspace) = make_subspace(basis, 1e-9) else { continue };
        out.push(Instance {
            label: format!("random#{i} dim={dim} k={k}"),
            subspace,
            x: random_vector(&mut rng, dim, 1.0),
            y: random_vector(&mut rng, dim, 2.0),
        });
        i += 1;
    }
    out
}

fn criterion_1() -> Check {
    let rows = demo_table(&DEFAULT_C_VALUES, 30, TOL).map_err(|e| e.to_string())?;
    for row in &rows {
        let want = if row.c == 0.0 { 1.0 } else { 0.0 };
        if row.c == 0.0 || [1.0, 0.1, 0.01].contains(&row.c.abs()) {
            ensure((row.d - want).abs() <= 1e-6, || format!("c = {}: d = {} (want {want})", row.c, row.d))?;
        }
    }
    Ok(format!("{} rows; d(c=0) = {}", rows.len(), rows[0].d))
}

fn criterion_2() -> Check {
    let s = diag_subspace();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (a, b) = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let got = op_norm(&s, &[a, b], 1e-12).map_err(|e| e.to_string())?;
        worst = worst.max((got - f64::max(a.abs(), b.abs())).abs());
    }
    ensure(worst <= 1e-9, || format!("max error {worst:e}"))?;
    Ok(format!("max error {worst:e}"))
}

fn criterion_3() -> Check {
    let s = diag_subspace();
    let (x, y) = (v(&[1.0, 0.1]), v(&[0.0, 1.0]));
    let res = pipeline_distance(&y, &s, &x, TOL).map_err(|e| e.to_string())?;
    ensure(res.n == 21, || format!("N = {}", res.n))?;
    let d21 = ball_distance(&y, &s, &x, 21.0, TOL).map_err(|e| e.to_string())?.value;
    let d26 = ball_distance(&y, &s, &x, 26.0, TOL).map_err(|e| e.to_string())?.value;
    let oracle = y.dist(&orbit(&s, &x, 1e-9).unwrap().project(&y));
    ensure((d21 - oracle).abs() <= 1e-6 && oracle.abs() <= 1e-6, || format!("d21 = {d21}, ‖y − Py‖ = {oracle}"))?;
    ensure((d26 - d21).abs() <= 2e-6, || format!("d26 = {d26}, d21 = {d21}"))?;
    Ok(format!("N = 21, d21 = {d21:e}, d26 = {d26:e}"))
}

const BUDGET: usize = 16;

fn criterion_4(all: &[Instance]) -> Check {
    let mut pairs = 0;
    let mut tightest = f64::INFINITY;
    for inst in all {
        let report = locate_distance(&inst.y, &inst.subspace, &inst.x, BUDGET, TOL).map_err(|e| format!("{}: {e}", inst.label))?;
        for (a, ln) in report.levels.iter().enumerate() {
            for lm in &report.levels[a..] {
                let observed = lm.point.dist(&ln.point).powi(2);
                let bound = cauchy_bound(lm.d, ln.d, lm.n, ln.n);
                ensure(observed <= bound + 4.0 * TOL, || {
                    format!("{}: levels ({}, {}): ‖y_m − y_n‖² = {observed} > {bound}", inst.label, lm.n, ln.n)
                })?;
                tightest = tightest.min(bound + 4.0 * TOL - observed);
                pairs += 1;
            }
        }
    }
    Ok(format!("{} instances, {pairs} level pairs, min slack {tightest:e}", all.len()))
}

fn criterion_5(all: &[Instance]) -> Check {
    let mut decided = 0;
    for inst in all {
        let report = locate_distance(&inst.y, &inst.subspace, &inst.x, BUDGET, TOL).map_err(|e| format!("{}: {e}", inst.label))?;
        for w in report.levels.windows(2) {
            ensure(w[1].d <= w[0].d + 2e-6, || format!("{}: d_{} = {} > d_{} = {}", inst.label, w[1].n, w[1].d, w[0].n, w[0].d))?;
        }
        if let Some(d) = report.verdict.distance() {
            let exact = inst.y.dist(&orbit(&inst.subspace, &inst.x, 1e-9).unwrap().project(&inst.y));
            ensure((d - exact).abs() <= 3e-6, || format!("{}: verdict d = {d}, ‖y − Py‖ = {exact}", inst.label))?;
            decided += 1;
        }
    }
    Ok(format!("{decided} of {} verdicts decided, all match ‖y − Py‖", all.len()))
}

fn criterion_6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 30 {
        let dim = rng.gen_range(2..=4);
        let t = random_matrix(&mut rng, dim, dim);
        let sv = singular_values(&t, 1e-12).map_err(|e| e.to_string())?;
        let smin = sv[dim - 1];
        if smin <= 0.0 || sv[0] / smin > 50.0 {
            continue;
        }
        let r = open_map_radius(&t, TOL).map_err(|e| e.to_string())?.r;
        worst = worst.max((r - smin).abs() / smin);
        done += 1;
    }
    ensure(worst <= 0.02, || format!("max relative error {worst:e}"))?;
    Ok(format!("30 matrices, max relative error {worst:e}"))
}

fn criterion_7() -> Check {
    let oracle_tol = 1e-9;
    let s = diag_subspace();
    let bodies: Vec<(Box<dyn LocatedSet>, Vector, f64)> = vec![
        (Box::new(LinearImageBall::unit_ball(2).unwrap()), v(&[0.3, 0.0]), 0.5),
        (Box::new(LinearImageBall::new(Matrix::from_rows(&[vec![2.0, 0.5], vec![-0.3, 1.0]]).unwrap()).unwrap()), v(&[0.4, -0.6]), 0.9),
        (Box::new(OrbitBall::new(&s, &v(&[1.0, 0.5]), 1.0).unwrap()), v(&[0.2, 0.45]), 0.5),
        (Box::new(OrbitBall::new(&s, &v(&[1.0, 0.25]), 1.0).unwrap()), v(&[-0.1, 0.2]), 0.25),
        // points outside C with ρ(z, C) < r/2 at every step: several halvings
        (Box::new(LinearImageBall::unit_ball(2).unwrap()), v(&[1.2, 0.3]), 1.3),
        (Box::new(OrbitBall::new(&s, &v(&[1.0, 0.5]), 1.0).unwrap()), v(&[1.3, -0.7]), 1.5),
    ];
    let mut steps = 0;
    for (body, y, r) in &bodies {
        let dec = greedy_decompose(y, body.as_ref(), *r, oracle_tol).map_err(|e| e.to_string())?;
        let Outcome::Member { xi } = &dec.outcome else {
            return Err(format!("{}: expected Member, got {:?}", body.description(), dec.outcome));
        };
        for st in &dec.steps {
            let partial_err = st.error;
            ensure(partial_err <= 0.5f64.powi(st.i as i32) * r + 2.0 * oracle_tol, || {
                format!("{}: step {} error {partial_err} exceeds 2^-n r", body.description(), st.i)
            })?;
            steps += 1;
        }
        let g = body.gauge(xi, oracle_tol).map_err(|e| e.to_string())?;
        ensure(g <= 2.0 + 1e-6, || format!("{}: gauge(ξ) = {g}", body.description()))?;
    }
    let segment = LinearImageBall::new(Matrix::diag(&[1.0, 0.0])).unwrap();
    let dec = greedy_decompose(&v(&[0.0, 0.3]), &segment, 0.5, oracle_tol).map_err(|e| e.to_string())?;
    match dec.outcome {
        Outcome::Witness { z, dist } => {
            ensure(dist >= 0.29 && z.norm() < 0.5, || format!("witness dist {dist}, ‖z‖ = {}", z.norm()))?;
            Ok(format!("{} member runs ({steps} steps); segment witness dist {dist}", bodies.len()))
        }
        other => Err(format!("segment: expected Witness, got {other:?}")),
    }
}

fn criterion_8(all: &[Instance]) -> Check {
    let mut count = 0;
    let extra = [
        (diag_subspace(), v(&[1.0, 0.0])),
        (diag_subspace(), v(&[0.0, 0.0])),
        (diag_subspace(), v(&[1.0, 0.1])),
    ];
    let cases = all.iter().map(|i| (&i.subspace, &i.x)).chain(extra.iter().map(|(s, x)| (s, x)));
    for (s, x) in cases {
        let cert = build_projection(s, x, TOL).map_err(|e| e.to_string())?;
        let p = &cert.p;
        ensure(p.matmul(p).max_abs_diff(p) <= 1e-10, || format!("P² ≠ P for x = {x:?}"))?;
        ensure(p.transpose().max_abs_diff(p) <= 1e-10, || format!("Pᵀ ≠ P for x = {x:?}"))?;
        for b in s.basis() {
            let bx = b.matvec(x);
            ensure(p.matvec(&bx).dist(&bx) <= 1e-10, || format!("P B x ≠ B x for x = {x:?}"))?;
        }
        for e in &cert.trace {
            if let Some(d) = e.d_pipeline {
                ensure((d - e.d_oracle).abs() <= 3.0 * TOL, || format!("probe {:?}: pipeline {d} vs {}", e.y, e.d_oracle))?;
            }
        }
        count += 1;
    }
    Ok(format!("{count} projectors"))
}

fn criterion_9() -> Check {
    let mut basis = Vec::new();
    for i in 0..2 {
        for j in 0..2 {
            let mut m = Matrix::zeros(3, 3);
            m[(i, j)] = 1.0;
            basis.push(m);
        }
    }
    let ptp = make_subspace(basis, 1e-9).unwrap();
    let x = v(&[0.6, 0.8, 0.3]);
    let d = metric_complement_distance(&ptp, &x, TOL).map_err(|e| e.to_string())?;
    let px = v(&[0.6, 0.8, 0.0]).norm();
    ensure((d - px).abs() <= 1e-6, || format!("PTP: {d} vs ‖Px‖ = {px}"))?;
    let mut worst: f64 = 0.0;
    for c in [1.0, -1.0, 0.5, 0.1, -0.1, 0.01, 2.0 / 3.0] {
        let d = metric_complement_distance(&diag_subspace(), &v(&[1.0, c]), TOL).map_err(|e| e.to_string())?;
        worst = worst.max((d - f64::min(1.0, c.abs())).abs());
    }
    ensure(worst <= 1e-6, || format!("diag: max error {worst:e}"))?;
    Ok(format!("PTP {d} = ‖Px‖; diag max error {worst:e}"))
}

fn criterion_10() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst_ratio: f64 = 0.0;
    let mut done = 0;
    while done < 20 {
        let dim = rng.gen_range(2..=3);
        let k = rng.gen_range(1..=3);
        let basis: Vec<Matrix> = (0..k).map(|_| random_matrix(&mut rng, dim, dim)).collect();
        let Ok(s) = make_subspace(basis, 1e-9) else { continue };
        // a well-conditioned Gram matrix keeps the coefficient box small
        let gram_sv = singular_values(&s.gram(), 1e-12).unwrap();
        if gram_sv[k - 1] < 0.2 * gram_sv[0] {
            continue;
        }
        let x = random_vector(&mut rng, dim, 1.0);
        let y = random_vector(&mut rng, dim, 2.0);
        let n = rng.gen_range(0.5..2.0);
        let step = if k <= 2 { 0.05 } else { 0.1 };
        let solver = ball_distance(&y, &s, &x, n, TOL).map_err(|e| e.to_string())?.value;
        let grid = grid_oracle_distance(&y, &s, &x, n, step).map_err(|e| e.to_string())?;
        let lip = s.basis().iter().map(|b| b.matvec(&x).norm()).fold(0.0, f64::max) * (k as f64).sqrt();
        let allowed = lip * step + 1e-3;
        let diff = (solver - grid).abs();
        ensure(diff <= allowed, || format!("instance {done}: solver {solver}, grid {grid}, allowed {allowed}"))?;
        worst_ratio = worst_ratio.max(diff / allowed);
        done += 1;
    }
    Ok(format!("20 instances, worst |diff| / allowance = {worst_ratio:.3}"))
}

fn main() -> ExitCode {
    let all = instances();
    let criteria: Vec<(&str, Option<Duration>, Box<dyn Fn() -> Check + '_>)> = vec![
        ("1 demo ground truth", Some(Duration::from_secs(10)), Box::new(criterion_1)),
        ("2 norm law", Some(Duration::from_secs(5)), Box::new(criterion_2)),
        ("3 truncation bound", None, Box::new(criterion_3)),
        ("4 Cauchy certificate", Some(Duration::from_secs(60)), Box::new(|| criterion_4(&all))),
        ("5 finite-dimensional oracle", None, Box::new(|| criterion_5(&all))),
        ("6 open mapping radius", Some(Duration::from_secs(60)), Box::new(criterion_6)),
        ("7 greedy decomposition", None, Box::new(criterion_7)),
        ("8 projector algebra", None, Box::new(|| criterion_8(&all))),
        ("9 inner radius identities", None, Box::new(criterion_9)),
        ("10 oracle equivalence", None, Box::new(criterion_10)),
    ];
    let mut failed = 0;
    for (name, limit, run) in &criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(l)) if elapsed > *l => Err(format!("took {elapsed:.2?}, limit {l:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS  criterion {name} [{elapsed:.2?}]: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name} [{elapsed:.2?}]: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
