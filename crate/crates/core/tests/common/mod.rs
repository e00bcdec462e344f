#![allow(dead_code)]

use metric_scale::{BuiltinManifold, Manifold, Point, Tangent};
use nalgebra::DMatrix;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn manifolds() -> Vec<BuiltinManifold> {
    ["euclidean:3", "sphere:2", "spd:2"].iter().map(|s| s.parse().unwrap()).collect()
}

/// Random tangent vector at `p` with metric norm uniform in (0, max_norm].
pub fn tangent_with_norm_at_most<M: Manifold>(m: &M, p: &Point, max_norm: f64, rng: &mut dyn RngCore) -> Tangent {
    let v = m.random_tangent(p, rng);
    let n = m.norm(p, &v).unwrap();
    let r: f64 = rng.random_range(0.05..=1.0) * max_norm;
    v.scaled(r / n)
}

/// A smooth test function on the ambient space: value and Euclidean gradient.
pub type ScalarFn = Box<dyn Fn(&DMatrix<f64>) -> f64>;
pub type MatrixFn = Box<dyn Fn(&DMatrix<f64>) -> DMatrix<f64>>;

pub struct AmbientFn {
    pub name: &'static str,
    pub value: ScalarFn,
    pub gradient: MatrixFn,
}

/// Linear `⟨A, X⟩`, quadratic `½ vec(X)ᵀ B vec(X)`, and (SPD only) `ln det X`.
pub fn ambient_family(shape: (usize, usize), spd: bool, rng: &mut dyn RngCore) -> Vec<AmbientFn> {
    use rand_distr::{Distribution, StandardNormal};
    let (r, c) = shape;
    let len = r * c;
    let a = DMatrix::<f64>::from_fn(r, c, |_, _| StandardNormal.sample(rng));
    let b0 = DMatrix::<f64>::from_fn(len, len, |_, _| StandardNormal.sample(rng));
    let b = (&b0 + b0.transpose()) * 0.5;
    let a1 = a.clone();
    let b1 = b.clone();
    let mut fns = vec![
        AmbientFn {
            name: "linear",
            value: Box::new(move |x| a.component_mul(x).sum()),
            gradient: Box::new(move |_| a1.clone()),
        },
        AmbientFn {
            name: "quadratic",
            value: Box::new(move |x| {
                let v = DMatrix::from_column_slice(len, 1, x.as_slice());
                0.5 * (v.transpose() * &b * &v)[(0, 0)]
            }),
            gradient: Box::new(move |x| {
                let v = DMatrix::from_column_slice(len, 1, x.as_slice());
                let g = &b1 * v;
                DMatrix::from_column_slice(r, c, g.as_slice())
            }),
        },
    ];
    if spd {
        fns.push(AmbientFn {
            name: "log-det",
            value: Box::new(|x| x.clone().cholesky().unwrap().determinant().ln()),
            gradient: Box::new(|x| x.clone().try_inverse().unwrap()),
        });
    }
    fns
}

/// Central difference of `f ∘ exp_p(t v)` at `t = 0`.
pub fn directional_derivative<M: Manifold>(m: &M, f: &dyn Fn(&DMatrix<f64>) -> f64, p: &Point, v: &Tangent, h: f64) -> f64 {
    let fwd = m.exp(p, &v.scaled(h)).unwrap();
    let bwd = m.exp(p, &v.scaled(-h)).unwrap();
    (f(fwd.coords()) - f(bwd.coords())) / (2.0 * h)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}
