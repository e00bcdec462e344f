//! Acceptance criteria 1–9, each run at its stated tolerance and time budget.
//!
//! Runs without the libtest harness so each PASS/FAIL line always reaches the
//! console: `cargo test -p metric-scale-cli --test acceptance`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};
use std::process::Command;
use std::time::{Duration, Instant};

use metric_scale::chart::DEFAULT_FD_STEP;
use metric_scale::optimizer::{clustered_problem, max_iterate_deviation};
use metric_scale::{
    calibrate_scale, frechet_objective, geodesic_integrate, joint_descent, riemannian_gd, vector,
    BuiltinManifold, Chart, Manifold, OptimizerConfig, Point, SampledCurve, ScaleFactor, ScaledManifold, Sphere,
    Tangent,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn manifolds() -> Vec<BuiltinManifold> {
    ["euclidean:3", "sphere:2", "spd:2"].iter().map(|s| s.parse().unwrap()).collect()
}

fn lam(l: f64) -> ScaleFactor {
    ScaleFactor::new(l).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn bounded_tangent<M: Manifold>(m: &M, p: &Point, max_norm: f64, r: &mut dyn RngCore) -> Tangent {
    let v = m.random_tangent(p, r);
    let n = m.norm(p, &v).unwrap();
    v.scaled(r.random_range(0.05..=1.0) * max_norm / n)
}

fn interior_points(chart: &Chart, count: usize, r: &mut dyn RngCore) -> Vec<DVector<f64>> {
    (0..count)
        .map(|_| {
            DVector::from_iterator(
                chart.dimension(),
                chart.domain().iter().map(|&(lo, hi)| {
                    let (lo, hi) = (lo.max(-5.0), hi.min(5.0));
                    let w = hi - lo;
                    r.random_range(lo + 0.25 * w..hi - 0.25 * w)
                }),
            )
        })
        .collect()
}

/// Fails with a message when `dev` is not within `tol`.
fn within(what: &str, dev: f64, tol: f64) -> Check {
    if dev <= tol {
        Ok(format!("{what} {dev:.3e} <= {tol:e}"))
    } else {
        Err(format!("{what} {dev:.3e} > {tol:e}"))
    }
}

fn join(parts: Vec<Check>) -> Check {
    let mut ok = vec![];
    for p in parts {
        ok.push(p?);
    }
    Ok(ok.join("; "))
}

fn c1_length_scaling() -> Check {
    let mut worst: f64 = 0.0;
    for (mi, m) in manifolds().iter().enumerate() {
        let mut r = rng(100 + mi as u64);
        for l in [0.25, 1.0, 4.0, 10.0] {
            let s = ScaledManifold::new(m.clone(), lam(l));
            for _ in 0..100 {
                let p = m.random_point(&mut r);
                let v = m.random_tangent(&p, &mut r);
                let q = m.exp(&p, &bounded_tangent(m, &p, 2.0, &mut r)).unwrap();
                let w = bounded_tangent(m, &p, 2.0, &mut r);
                let pts = (0..=6).map(|k| m.exp(&p, &w.scaled(k as f64 / 6.0)).unwrap()).collect();
                let curve = SampledCurve::uniform(pts).unwrap();
                worst = worst
                    .max(rel(s.norm(&p, &v).unwrap(), l.sqrt() * m.norm(&p, &v).unwrap()))
                    .max(rel(s.distance(&p, &q).unwrap(), l.sqrt() * m.distance(&p, &q).unwrap()))
                    .max(rel(s.curve_length(&curve).unwrap(), l.sqrt() * m.curve_length(&curve).unwrap()));
            }
        }
    }
    within("max relative error", worst, 1e-12)
}

fn c2_volume_factor() -> Check {
    let mut worst: f64 = 0.0;
    let mut r = rng(200);
    for chart in Chart::builtins() {
        let points = interior_points(&chart, 20, &mut r);
        for l in [0.25, 1.0, 4.0, 10.0] {
            let scaled = chart.scale_constant(lam(l));
            let want = l.powf(chart.dimension() as f64 / 2.0);
            for x in &points {
                let ratio = scaled.volume_density(x).unwrap() / chart.volume_density(x).unwrap();
                worst = worst.max(rel(ratio, want));
            }
        }
    }
    within("max relative error", worst, 1e-10)
}

fn c3_gradient_law() -> Check {
    let (mut law, mut fd_err): (f64, f64) = (0.0, 0.0);
    for (mi, m) in manifolds().iter().enumerate() {
        let mut r = rng(300 + mi as u64);
        let (rows, cols) = m.descriptor().ambient_shape();
        let a = DMatrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0));
        let f = |x: &DMatrix<f64>| a.component_mul(x).sum() + 0.25 * x.norm_squared();
        let grad_f = |x: &DMatrix<f64>| &a + x * 0.5;
        for _ in 0..50 {
            let p = m.random_point(&mut r);
            let eg = grad_f(p.coords());
            let base = m.riemannian_gradient(&p, &eg).unwrap();
            for l in [0.25, 4.0, 10.0] {
                let scaled = ScaledManifold::new(m.clone(), lam(l)).riemannian_gradient(&p, &eg).unwrap();
                let expected = base.components() / l;
                law = law.max((scaled.components() - &expected).amax() / expected.amax());
            }
            let v = bounded_tangent(m, &p, 1.0, &mut r);
            let h = 1e-5;
            let fwd = m.exp(&p, &v.scaled(h)).unwrap();
            let bwd = m.exp(&p, &v.scaled(-h)).unwrap();
            let fd = (f(fwd.coords()) - f(bwd.coords())) / (2.0 * h);
            let ip = m.inner(&p, &base, &v).unwrap();
            let bound = m.norm(&p, &base).unwrap() * m.norm(&p, &v).unwrap();
            fd_err = fd_err.max((ip - fd).abs() / ip.abs().max(1e-3 * bound));
        }
    }
    join(vec![within("scaled vs base/lambda", law, 1e-12), within("finite-difference", fd_err, 1e-5)])
}

fn c4_connection_invariance() -> Check {
    let mut worst: f64 = 0.0;
    let mut r = rng(400);
    for chart in Chart::builtins() {
        for x in interior_points(&chart, 20, &mut r) {
            let base = chart.christoffel_at(&x, DEFAULT_FD_STEP).unwrap();
            for l in [0.25, 4.0, 10.0] {
                let other = chart.scale_constant(lam(l)).christoffel_at(&x, DEFAULT_FD_STEP).unwrap();
                worst = worst.max(base.max_abs_diff(&other));
            }
        }
    }
    within("max |dGamma|", worst, 1e-6)
}

fn c5_geodesic_invariance() -> Check {
    let mut identical = true;
    let mut log_norm: f64 = 0.0;
    for (mi, m) in manifolds().iter().enumerate() {
        let mut r = rng(500 + mi as u64);
        for l in [0.25, 4.0, 10.0] {
            let s = ScaledManifold::new(m.clone(), lam(l));
            for _ in 0..50 {
                let p = m.random_point(&mut r);
                let v = bounded_tangent(m, &p, 1.5, &mut r);
                let q = m.exp(&p, &v).unwrap();
                identical &= s.exp(&p, &v).unwrap().coords() == q.coords();
                identical &= s.log(&p, &q).unwrap().components() == m.log(&p, &q).unwrap().components();
                let u = m.random_tangent(&p, &mut r);
                identical &=
                    s.transport(&p, &q, &u).unwrap().components() == m.transport(&p, &q, &u).unwrap().components();
                let scaled_norm = s.norm(&p, &s.log(&p, &q).unwrap()).unwrap();
                log_norm = log_norm.max(rel(scaled_norm, l.sqrt() * m.distance(&p, &q).unwrap()));
            }
        }
    }
    let mut geo: f64 = 0.0;
    let cases = [
        (Chart::euclidean(2).unwrap(), [0.5, -1.0], [1.0, 2.0]),
        (Chart::polar(), [1.0, 0.2], [0.3, 0.8]),
        (Chart::sphere(), [1.2, 0.0], [0.5, 0.7]),
        (Chart::sphere(), [FRAC_PI_2, 0.0], [0.0, 1.0]),
    ];
    for (chart, x0, v0) in cases {
        let (x0, v0) = (DVector::from_column_slice(&x0), DVector::from_column_slice(&v0));
        let base = geodesic_integrate(&chart, &x0, &v0, 1.0, 1000).unwrap();
        for l in [0.25, 4.0, 10.0] {
            let other = geodesic_integrate(&chart.scale_constant(lam(l)), &x0, &v0, 1.0, 1000).unwrap();
            geo = geo.max(base.max_deviation(&other));
        }
    }
    let exact = if identical { Ok("exp/log/transport identical".to_string()) } else { Err("wrapper output differs".to_string()) };
    join(vec![exact, within("RK4 deviation", geo, 1e-8), within("log norm relative error", log_norm, 1e-10)])
}

fn c6_optimizer_equivalence() -> Check {
    let mut worst: f64 = 0.0;
    for (mi, spec) in ["sphere:2", "spd:2"].iter().enumerate() {
        let m: BuiltinManifold = spec.parse().unwrap();
        let (points, x0) = clustered_problem(&m, 5, 1.0, &mut rng(600 + mi as u64)).unwrap();
        let objective = frechet_objective(m.clone(), points).unwrap();
        let scaled = ScaledManifold::new(m.clone(), lam(4.0));
        let a = riemannian_gd(&scaled, &objective, &x0, &OptimizerConfig::new(0.1, 200, 0.0).unwrap());
        let b = riemannian_gd(&m, &objective, &x0, &OptimizerConfig::new(0.025, 200, 0.0).unwrap());
        if a.is_failed() || b.is_failed() || a.steps() != 200 || b.steps() != 200 {
            return Err(format!("{spec}: runs did not complete 200 iterations"));
        }
        worst = worst.max(max_iterate_deviation(&m, &a, &b, 200).unwrap());
    }
    let s = Sphere::new(2).unwrap();
    let e1 = s.point(vector(&[1.0, 0.0, 0.0])).unwrap();
    let e2 = s.point(vector(&[0.0, 1.0, 0.0])).unwrap();
    let objective = frechet_objective(s, vec![e1.clone(), e2]).unwrap();
    let trace = riemannian_gd(&s, &objective, &e1, &OptimizerConfig::new(0.5, 100, 1e-10).unwrap());
    let mid = (trace.last().unwrap().coords() - vector(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0])).amax();
    join(vec![within("iterate deviation", worst, 1e-8), within("midpoint error", mid, 1e-8)])
}

fn c7_calibration() -> Check {
    let (mut recovery, mut path): (f64, f64) = (0.0, 0.0);
    for (mi, m) in manifolds().iter().enumerate() {
        for (ci, c) in [0.5, 1.0, 3.0].into_iter().enumerate() {
            let (points, x0) = clustered_problem(m, 6, 1.0, &mut rng(700 + 10 * mi as u64 + ci as u64)).unwrap();
            let n = points.len();
            let targets = DMatrix::from_fn(n, n, |i, j| c * m.distance(&points[i], &points[j]).unwrap());
            recovery = recovery.max(rel(calibrate_scale(m, &points, &targets).unwrap().lambda.get(), c * c));
            let objective = frechet_objective(m.clone(), points.clone()).unwrap();
            let cfg = OptimizerConfig::new(0.1, 200, 1e-10).unwrap();
            let run = joint_descent(m, &points, &targets, &objective, &x0, &cfg).unwrap();
            path = path.max(run.equivalence_deviation);
        }
    }
    join(vec![within("lambda* relative error", recovery, 1e-10), within("joint descent deviation", path, 1e-8)])
}

fn c8_negative_check() -> Check {
    let chart = Chart::euclidean(2).unwrap();
    let bent = chart.scale_pointwise(|x| (2.0 * x[0]).exp());
    let origin = DVector::zeros(2);
    let base = chart.christoffel_at(&origin, DEFAULT_FD_STEP).unwrap();
    let field = bent.christoffel_at(&origin, DEFAULT_FD_STEP).unwrap();
    let gap = base.max_abs_diff(&field);
    // Hand-derived for g = e^{2x¹} I: Γ¹₁₁ = 1, Γ¹₂₂ = −1, Γ²₁₂ = Γ²₂₁ = 1, the rest 0.
    let mut oracle = [[[0.0; 2]; 2]; 2];
    oracle[0][0][0] = 1.0;
    oracle[0][1][1] = -1.0;
    oracle[1][0][1] = 1.0;
    oracle[1][1][0] = 1.0;
    let mut err: f64 = 0.0;
    for (k, plane) in oracle.iter().enumerate() {
        for (i, row) in plane.iter().enumerate() {
            for (j, want) in row.iter().enumerate() {
                err = err.max((field.get(k, i, j) - want).abs());
            }
        }
    }
    let broken = if gap >= 0.5 { Ok(format!("max |dGamma| {gap:.6} >= 0.5")) } else { Err(format!("max |dGamma| {gap:.3e} < 0.5")) };
    join(vec![broken, within("oracle error", err, 1e-6)])
}

fn c9_cli_determinism() -> Check {
    let run = || {
        let out = Command::new(env!("CARGO_BIN_EXE_metric-scale"))
            .args(["--command", "verify", "--seed", "20240917"])
            .env_remove("METRIC_SCALE_OUT_DIR")
            .output()
            .expect("binary runs");
        (out.status.code(), out.stdout)
    };
    let (code_a, a) = run();
    let (code_b, b) = run();
    if a != b {
        return Err("reports differ between runs".into());
    }
    let report: serde_json::Value = serde_json::from_slice(&a).map_err(|e| e.to_string())?;
    let failed = report["summary"]["failed"].as_u64().ok_or("summary.failed missing")?;
    let expected = if failed == 0 { 0 } else { 1 };
    if code_a != Some(expected) || code_b != Some(expected) {
        return Err(format!("exit status {code_a:?} does not match failed = {failed}"));
    }
    if failed != 0 {
        return Err(format!("{failed} verify properties failed"));
    }
    Ok(format!("{} byte-identical reports, exit 0, failed = 0", a.len()))
}

struct Criterion {
    number: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Check,
}

fn main() {
    let secs = Duration::from_secs;
    let criteria = [
        Criterion { number: 1, name: "norm/distance/length scaling", budget: secs(1), run: c1_length_scaling },
        Criterion { number: 2, name: "volume factor", budget: secs(1), run: c2_volume_factor },
        Criterion { number: 3, name: "gradient law", budget: secs(5), run: c3_gradient_law },
        Criterion { number: 4, name: "connection invariance", budget: secs(5), run: c4_connection_invariance },
        Criterion { number: 5, name: "geodesic/exp/log/transport invariance", budget: secs(10), run: c5_geodesic_invariance },
        Criterion { number: 6, name: "optimizer equivalence", budget: secs(5), run: c6_optimizer_equivalence },
        Criterion { number: 7, name: "scale calibration", budget: secs(5), run: c7_calibration },
        Criterion { number: 8, name: "non-constant negative check", budget: secs(1), run: c8_negative_check },
        Criterion { number: 9, name: "CLI determinism", budget: secs(30), run: c9_cli_determinism },
    ];
    let mut failures = vec![];
    for c in &criteria {
        let start = Instant::now();
        let result = (c.run)();
        let elapsed = start.elapsed();
        let verdict = match (&result, elapsed <= c.budget) {
            (Ok(msg), true) => format!("PASS  {msg}"),
            (Ok(msg), false) => format!("FAIL  over time budget; {msg}"),
            (Err(msg), _) => format!("FAIL  {msg}"),
        };
        println!(
            "criterion {} [{}]: {verdict} ({:.3}s, budget {}s)",
            c.number,
            c.name,
            elapsed.as_secs_f64(),
            c.budget.as_secs()
        );
        if !verdict.starts_with("PASS") {
            failures.push(c.number);
        }
    }
    if failures.is_empty() {
        println!("acceptance: all {} criteria passed", criteria.len());
    } else {
        println!("acceptance: failed criteria {failures:?}");
        std::process::exit(1);
    }
}
