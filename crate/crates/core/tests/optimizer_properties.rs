//! Gradient descent under metric scaling.

mod common;

use common::*;
use metric_scale::optimizer::{calibration_loss, clustered_problem, distance_pairs};
use metric_scale::{
    calibrate_scale, equivalence_check, frechet_objective, joint_descent, riemannian_gd, vector, Euclidean,
    Manifold, Objective, OptimizerConfig, ScaleFactor, ScaledManifold, Sphere, StopReason,
};
use nalgebra::DMatrix;

const LAMBDAS: [f64; 3] = [0.25, 4.0, 10.0];

fn lam(x: f64) -> ScaleFactor {
    ScaleFactor::new(x).unwrap()
}

#[test]
fn scaled_runs_track_base_runs_with_divided_step() {
    for (mi, m) in manifolds().into_iter().enumerate() {
        let mut r = rng(10 + mi as u64);
        let (pts, x0) = clustered_problem(&m, 5, 1.0, &mut r).unwrap();
        let obj = frechet_objective(m.clone(), pts).unwrap();
        for &l in &LAMBDAS {
            let dev = equivalence_check(&m, &obj, &x0, 0.1, lam(l), 200).unwrap();
            assert!(dev <= 1e-8, "{} λ={l}: {dev}", m.descriptor());
        }
    }
}

#[test]
fn euclidean_quadratic_equivalence() {
    let e = Euclidean::new(3).unwrap();
    let b = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, -0.2, 0.0, -0.2, 0.5]);
    let b1 = b.clone();
    let obj = Objective::new(
        move |x| Ok(0.5 * (x.coords().transpose() * &b * x.coords())[(0, 0)]),
        move |x| e.riemannian_gradient(x, &(&b1 * x.coords())),
    );
    let x0 = e.point(vector(&[1.0, 2.0, -3.0])).unwrap();
    let dev = equivalence_check(&e, &obj, &x0, 0.5, lam(10.0), 50).unwrap();
    assert!(dev <= 1e-10, "{dev}");
}

#[test]
fn update_steps_and_directions_agree_at_every_iterate() {
    for (mi, m) in manifolds().into_iter().enumerate() {
        let mut r = rng(20 + mi as u64);
        let (pts, x0) = clustered_problem(&m, 4, 1.0, &mut r).unwrap();
        let obj = frechet_objective(m.clone(), pts).unwrap();
        let eta = 0.1;
        for &l in &LAMBDAS {
            let sm = ScaledManifold::new(m.clone(), lam(l));
            let trace = riemannian_gd(&sm, &obj, &x0, &OptimizerConfig::new(eta, 50, 0.0).unwrap());
            for x in &trace.iterates {
                let base = obj.gradient(x).unwrap();
                let scaled = sm.gradient_from_base(x, &base).unwrap();
                let lhs = scaled.scaled(-eta);
                let rhs = base.scaled(-eta / l);
                for (a, b) in lhs.components().iter().zip(rhs.components().iter()) {
                    assert!(rel_err(*a, *b) <= 1e-14);
                }
                let nb = m.norm(x, &base).unwrap();
                if nb > 0.0 {
                    let ns = m.norm(x, &scaled).unwrap();
                    let cos = m.inner(x, &base, &scaled).unwrap() / (nb * ns);
                    assert!((1.0 - cos).abs() <= 1e-12);
                }
            }
        }
    }
}

#[test]
fn frechet_gradient_matches_finite_differences() {
    for (mi, m) in manifolds().into_iter().enumerate() {
        let mut r = rng(30 + mi as u64);
        for _ in 0..10 {
            let (pts, x) = clustered_problem(&m, 4, 1.0, &mut r).unwrap();
            let obj = frechet_objective(m.clone(), pts).unwrap();
            let v = tangent_with_norm_at_most(&m, &x, 1.0, &mut r);
            let h = 1e-5;
            let fd = (obj.value(&m.exp(&x, &v.scaled(h)).unwrap()).unwrap()
                - obj.value(&m.exp(&x, &v.scaled(-h)).unwrap()).unwrap())
                / (2.0 * h);
            let g = obj.gradient(&x).unwrap();
            let ip = m.inner(&x, &g, &v).unwrap();
            let scale = ip.abs().max(1e-3 * m.norm(&x, &g).unwrap() * m.norm(&x, &v).unwrap());
            assert!((ip - fd).abs() <= 1e-5 * scale, "{}: {ip} vs {fd}", m.descriptor());
        }
    }
}

#[test]
fn sphere_two_point_mean() {
    let s = Sphere::new(2).unwrap();
    let e1 = s.point(vector(&[1.0, 0.0, 0.0])).unwrap();
    let e2 = s.point(vector(&[0.0, 1.0, 0.0])).unwrap();
    let obj = frechet_objective(s, vec![e1.clone(), e2]).unwrap();
    let trace = riemannian_gd(&s, &obj, &e1, &OptimizerConfig::new(0.5, 100, 1e-10).unwrap());
    assert_eq!(trace.stop_reason, StopReason::Converged);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!((trace.last().unwrap().coords() - vector(&[h, h, 0.0])).amax() <= 1e-8);
}

#[test]
fn calibration_recovers_uniform_scaling() {
    for (mi, m) in manifolds().into_iter().enumerate() {
        let mut r = rng(40 + mi as u64);
        let pts: Vec<_> = (0..6).map(|_| m.random_point(&mut r)).collect();
        let n = pts.len();
        for c in [0.5, 1.0, 3.0] {
            let t = DMatrix::from_fn(n, n, |i, j| c * m.distance(&pts[i], &pts[j]).unwrap());
            let t = (&t + t.transpose()) * 0.5;
            let cal = calibrate_scale(&m, &pts, &t).unwrap();
            assert!(rel_err(cal.lambda.get(), c * c) <= 1e-10);
            assert!(cal.residual <= 1e-10);
        }
    }
}

#[test]
fn calibrated_scale_is_a_local_minimum() {
    for (mi, m) in manifolds().into_iter().enumerate() {
        let mut r = rng(50 + mi as u64);
        for _ in 0..20 {
            let pts: Vec<_> = (0..5).map(|_| m.random_point(&mut r)).collect();
            let n = pts.len();
            let noise = DMatrix::from_fn(n, n, |_, _| rand::Rng::random_range(&mut r, 0.5..2.0));
            let t = DMatrix::from_fn(n, n, |i, j| {
                let (a, b) = (i.min(j), i.max(j));
                noise[(a, b)] * m.distance(&pts[a], &pts[b]).unwrap()
            });
            let cal = calibrate_scale(&m, &pts, &t).unwrap();
            let pairs = distance_pairs(&m, &pts, &t).unwrap();
            let at = calibration_loss(&pairs, cal.lambda.get());
            assert!(rel_err(at, cal.residual) <= 1e-12);
            for f in [1.0 - 1e-3, 1.0 + 1e-3] {
                assert!(at <= calibration_loss(&pairs, cal.lambda.get() * f));
            }
        }
    }
}

#[test]
fn joint_descent_matches_base_path() {
    for (mi, m) in manifolds().into_iter().enumerate() {
        let mut r = rng(60 + mi as u64);
        let (pts, x0) = clustered_problem(&m, 5, 1.0, &mut r).unwrap();
        let n = pts.len();
        let obj = frechet_objective(m.clone(), pts.clone()).unwrap();
        let cfg = OptimizerConfig::new(0.1, 200, 1e-10).unwrap();
        for c in [1.0, 2.0] {
            let t = DMatrix::from_fn(n, n, |i, j| c * m.distance(&pts[i.min(j)], &pts[i.max(j)]).unwrap());
            let out = joint_descent(&m, &pts, &t, &obj, &x0, &cfg).unwrap();
            assert!(rel_err(out.calibration.lambda.get(), c * c) <= 1e-10);
            assert!(out.equivalence_deviation <= 1e-8, "{}", out.equivalence_deviation);
            if c == 1.0 {
                let plain = riemannian_gd(&m, &obj, &x0, &cfg);
                assert_eq!(plain.iterates, out.trace.iterates);
            }
        }
    }
}

#[test]
fn joint_descent_from_the_optimum_stops_immediately() {
    let s = Sphere::new(2).unwrap();
    let y = s.point(vector(&[0.0, 0.6, 0.8])).unwrap();
    let z = s.point(vector(&[0.0, 1.0, 0.0])).unwrap();
    let obj = frechet_objective(s, vec![y.clone()]).unwrap();
    let t = DMatrix::from_row_slice(2, 2, &[0.0, 5.0, 5.0, 0.0]);
    let out = joint_descent(&s, &[y.clone(), z], &t, &obj, &y, &OptimizerConfig::default()).unwrap();
    assert_eq!(out.trace.iterates.len(), 1);
    assert_eq!(out.trace.stop_reason, StopReason::Converged);
}
