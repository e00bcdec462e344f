//! The property registry behind `--command verify`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use metric_scale::chart::{spherical_to_ambient, CoordinateCurve, DEFAULT_FD_STEP};
use metric_scale::optimizer::{calibrate_scale, calibration_loss, clustered_problem, distance_pairs, joint_descent};
use metric_scale::{
    equivalence_check, frechet_objective, geodesic_integrate, riemannian_gd, vector, volume_scale_factor,
    BuiltinManifold, Chart, Family, GeometryError, Manifold, ManifoldDescriptor, Objective, OptimizerConfig, Point,
    SampledCurve, ScaleFactor, ScaledManifold, Sphere, StopReason, Tangent,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::report::{Comparison, Environment, PropertyRecord, Sig17, VerificationReport};

type Res<T> = Result<T, GeometryError>;

/// Settings shared by every property run.
#[derive(Debug, Clone)]
pub struct VerifyContext {
    pub seed: u64,
    pub lambda: ScaleFactor,
    pub eta: f64,
    pub manifolds: Vec<BuiltinManifold>,
}

impl VerifyContext {
    /// The three standard manifolds, plus `extra` when it is not one of them.
    pub fn new(seed: u64, lambda: ScaleFactor, eta: f64, extra: Option<ManifoldDescriptor>) -> Self {
        let mut descs: Vec<ManifoldDescriptor> =
            ["euclidean:3", "sphere:2", "spd:2"].iter().map(|s| s.parse().expect("built-in spec")).collect();
        if let Some(d) = extra {
            if !descs.contains(&d) {
                descs.push(d);
            }
        }
        Self { seed, lambda, eta, manifolds: descs.into_iter().map(BuiltinManifold::from_descriptor).collect() }
    }

    fn subject(&self) -> String {
        self.manifolds.iter().map(|m| m.descriptor().to_string()).collect::<Vec<_>>().join(";")
    }

    /// `base` plus the configured λ.
    fn sweep(&self, base: &[f64]) -> Vec<f64> {
        let mut v = base.to_vec();
        if !v.contains(&self.lambda.get()) {
            v.push(self.lambda.get());
        }
        v
    }

    fn variant_sweep(&self) -> Vec<f64> {
        self.sweep(&[0.25, 1.0, 4.0, 10.0])
    }

    fn invariant_sweep(&self) -> Vec<f64> {
        self.sweep(&[0.25, 4.0, 10.0])
    }
}

/// What one property run measured.
#[derive(Debug, Clone, Default)]
struct Outcome {
    deviation: f64,
    cases: usize,
    subject: Option<String>,
    expected_factor: Option<f64>,
    observed_factor: Option<f64>,
}

impl Outcome {
    fn record(&mut self, dev: f64) {
        self.cases += 1;
        // NaN poisons the maximum on purpose.
        if dev.is_nan() || dev > self.deviation {
            self.deviation = dev;
        }
    }

    /// Like [`record`](Self::record), also keeping the worst ratio seen at the configured λ.
    fn record_factor(&mut self, dev: f64, lambda: f64, ctx: &VerifyContext, expected: f64, observed: f64) {
        if lambda == ctx.lambda.get() {
            let prev = self.observed_factor.map(|o| rel(o, expected)).unwrap_or(-1.0);
            if rel(observed, expected) > prev {
                self.observed_factor = Some(observed);
            }
            self.expected_factor = Some(expected);
        }
        self.record(dev);
    }
}

struct Property {
    id: &'static str,
    section: &'static str,
    tolerance: f64,
    comparison: Comparison,
    expected_failure: bool,
    run: fn(&VerifyContext, &mut ChaCha8Rng) -> Res<Outcome>,
}

const fn at_most(
    id: &'static str,
    section: &'static str,
    tolerance: f64,
    run: fn(&VerifyContext, &mut ChaCha8Rng) -> Res<Outcome>,
) -> Property {
    Property { id, section, tolerance, comparison: Comparison::AtMost, expected_failure: false, run }
}

static REGISTRY: &[Property] = &[
    at_most("geometry.exp_log_round_trip", "2.2", 1e-8, geometry_exp_log),
    at_most("geometry.distance_symmetry", "2", 1e-10, geometry_symmetry),
    at_most("geometry.triangle_inequality", "2", 1e-10, geometry_triangle),
    at_most("geometry.transport_isometry", "2.2", 1e-10, geometry_transport),
    at_most("geometry.gradient_identity", "2.3", 1e-5, geometry_gradient),
    at_most("geometry.log_norm_distance", "2.2", 1e-10, geometry_log_norm),
    at_most("scaled.norm_law", "3.1", 1e-12, scaled_norm),
    at_most("scaled.distance_law", "3.2", 1e-12, scaled_distance),
    at_most("scaled.curve_length_law", "3.2", 1e-12, scaled_curve_length),
    at_most("scaled.volume_factor", "3.3", 1e-14, scaled_volume),
    at_most("scaled.gradient_law", "3.4", 1e-12, scaled_gradient),
    at_most("scaled.gradient_direction", "3.4", 1e-12, scaled_gradient_direction),
    at_most("scaled.composition", "3.2", 1e-12, scaled_composition),
    at_most("scaled.unit_identity", "2", 0.0, scaled_unit_identity),
    at_most("scaled.invariance_exact", "4.3", 0.0, scaled_invariance),
    at_most("scaled.log_norm_law", "4.3", 1e-10, scaled_log_norm),
    at_most("chart.connection_invariance", "4.1", 1e-6, chart_connection),
    at_most("chart.geodesic_invariance", "4.2", 1e-8, chart_geodesic),
    at_most("chart.volume_law", "3.3", 1e-10, chart_volume),
    at_most("chart.length_law", "3.2", 1e-10, chart_length),
    Property {
        id: "chart.nonconstant_negative",
        section: "6",
        tolerance: 0.5,
        comparison: Comparison::AtLeast,
        expected_failure: true,
        run: chart_negative,
    },
    at_most("chart.conformal_oracle", "6", 1e-6, chart_conformal_oracle),
    at_most("chart.cross_module_equator", "4.2", 1e-6, chart_equator),
    at_most("optimizer.update_rule", "5.1", 1e-14, optimizer_update_rule),
    at_most("optimizer.trajectory_equivalence", "5.1", 1e-8, optimizer_trajectory),
    at_most("optimizer.gradient_direction", "3.4", 1e-12, optimizer_gradient_direction),
    at_most("optimizer.frechet_gradient", "5.1", 1e-5, optimizer_frechet_gradient),
    at_most("optimizer.sphere_midpoint", "5.1", 1e-8, optimizer_sphere_midpoint),
    at_most("optimizer.calibration_optimality", "5.2", 0.0, optimizer_calibration_optimality),
    at_most("optimizer.calibration_recovery", "5.2", 1e-10, optimizer_calibration_recovery),
    at_most("optimizer.joint_descent_equivalence", "5.2", 1e-8, optimizer_joint_descent),
];

/// Number of properties a complete report must contain.
pub fn registry_size() -> usize {
    REGISTRY.len()
}

pub fn property_ids() -> Vec<&'static str> {
    REGISTRY.iter().map(|p| p.id).collect()
}

/// Seed for one property's stream, derived from the root seed and the property id.
pub fn property_seed(root: u64, id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    h.update(id.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("32-byte digest"))
}

/// Runs every registered property (in parallel) and assembles the report in id order.
pub fn run_verification(ctx: &VerifyContext) -> VerificationReport {
    let mut records: Vec<PropertyRecord> = REGISTRY.par_iter().map(|p| run_property(ctx, p)).collect();
    records.sort_by(|a, b| a.id.cmp(&b.id));
    let environment = Environment {
        seed: ctx.seed,
        lambda: Sig17(ctx.lambda.get()),
        eta: Sig17(ctx.eta),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    VerificationReport::new(environment, records, REGISTRY.len())
}

fn run_property(ctx: &VerifyContext, p: &Property) -> PropertyRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(property_seed(ctx.seed, p.id));
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| (p.run)(ctx, &mut rng)));
    let (outcome, detail) = match result {
        Ok(Ok(o)) => (o, None),
        Ok(Err(e)) => (Outcome::default(), Some(e.to_string())),
        Err(_) => (Outcome::default(), Some("property check panicked".to_string())),
    };
    let failed_to_run = detail.is_some();
    let deviation = if failed_to_run { f64::MAX } else { outcome.deviation };
    let pass = !failed_to_run && outcome.cases > 0 && p.comparison.holds(deviation, p.tolerance);
    let detail = detail.or_else(|| (!failed_to_run && outcome.cases == 0).then(|| "no cases ran".to_string()));
    PropertyRecord {
        id: p.id.to_string(),
        section: p.section.to_string(),
        subject: outcome.subject.unwrap_or_else(|| ctx.subject()),
        lambda: Sig17(ctx.lambda.get()),
        expected_factor: outcome.expected_factor.map(Sig17),
        observed_factor: outcome.observed_factor.map(Sig17),
        max_deviation: Sig17(if deviation.is_finite() { deviation } else { f64::MAX }),
        tolerance: Sig17(p.tolerance),
        comparison: p.comparison,
        expected_failure: p.expected_failure,
        cases: outcome.cases,
        pass,
        detail,
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn scale(l: f64) -> Res<ScaleFactor> {
    ScaleFactor::new(l)
}

fn sub(a: &Tangent, b: &Tangent) -> Res<Tangent> {
    a.add(&b.scaled(-1.0))
}

/// Random tangent at `p` with metric norm uniform in `[0.05, 1]·max_norm`.
fn bounded_tangent<M: Manifold + ?Sized>(m: &M, p: &Point, max_norm: f64, rng: &mut dyn RngCore) -> Res<Tangent> {
    let v = m.random_tangent(p, rng);
    let n = m.norm(p, &v)?;
    let r = rng.random_range(0.05..=1.0) * max_norm;
    Ok(v.scaled(r / n))
}

fn nearby<M: Manifold + ?Sized>(m: &M, p: &Point, radius: f64, rng: &mut dyn RngCore) -> Res<Point> {
    let v = bounded_tangent(m, p, radius, rng)?;
    m.exp(p, &v)
}

type ScalarFn = Box<dyn Fn(&DMatrix<f64>) -> f64 + Send + Sync>;
type MatrixFn = Box<dyn Fn(&DMatrix<f64>) -> DMatrix<f64> + Send + Sync>;

/// Smooth ambient test functions: value and Euclidean gradient.
struct AmbientFn {
    value: ScalarFn,
    gradient: MatrixFn,
}

/// Linear, quadratic, and (for SPD) log-determinant functions with random coefficients.
fn ambient_family(desc: ManifoldDescriptor, rng: &mut dyn RngCore) -> Vec<AmbientFn> {
    let (r, c) = desc.ambient_shape();
    let len = r * c;
    let a = DMatrix::<f64>::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0));
    let b0 = DMatrix::<f64>::from_fn(len, len, |_, _| rng.random_range(-1.0..1.0));
    let b = (&b0 + b0.transpose()) * 0.5;
    let (a1, b1) = (a.clone(), b.clone());
    let mut fns = vec![
        AmbientFn { value: Box::new(move |x| a.component_mul(x).sum()), gradient: Box::new(move |_| a1.clone()) },
        AmbientFn {
            value: Box::new(move |x| {
                let v = DVector::from_column_slice(x.as_slice());
                0.5 * v.dot(&(&b * &v))
            }),
            gradient: Box::new(move |x| {
                let g = &b1 * DVector::from_column_slice(x.as_slice());
                DMatrix::from_column_slice(r, c, g.as_slice())
            }),
        },
    ];
    if desc.family() == Family::Spd {
        fns.push(AmbientFn {
            value: Box::new(|x| x.clone().cholesky().map_or(f64::NAN, |ch| ch.determinant().ln())),
            gradient: Box::new(|x| x.clone().try_inverse().unwrap_or_else(|| x * f64::NAN)),
        });
    }
    fns
}

/// `|a − b|` relative to `max(|a|, 1e-3·bound)`, where `bound` is a Cauchy-Schwarz bound on both.
fn directional_error(a: f64, b: f64, bound: f64) -> f64 {
    let denom = a.abs().max(1e-3 * bound);
    if denom == 0.0 {
        (a - b).abs()
    } else {
        (a - b).abs() / denom
    }
}

fn central_difference<M: Manifold + ?Sized>(m: &M, f: &dyn Fn(&Point) -> Res<f64>, p: &Point, v: &Tangent) -> Res<f64> {
    let h = 1e-5;
    let fwd = m.exp(p, &v.scaled(h))?;
    let bwd = m.exp(p, &v.scaled(-h))?;
    Ok((f(&fwd)? - f(&bwd)?) / (2.0 * h))
}

fn max_entry_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    (a - b).amax()
}

/// `max |a − b| / max |b|` over components.
fn componentwise_rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let diff = max_entry_diff(a, b);
    let size = b.amax();
    if diff == 0.0 {
        0.0
    } else {
        diff / size
    }
}

// ---- geometry ----

fn geometry_exp_log(ctx: &VerifyContext, rng: &mut ChaCha8Rng) -> Res<Outcome> {
    let mut out = Outcome::default();
    for m in &ctx.manifolds {
        for _ in 0..100 {
            let p = m.random_point(rng);
            let v = bounded_tangent(m, &p, 1.0, rng)?;
            let q = m.exp(&p, &v)?;
            let w = m.log(&p, &q)?;
            let back = m.exp(&p, &w)?;
            out.record(m.norm(&p, &sub(&w, &v)?)?.max(m.distance(&back, &q)?));
        }
    }
    Ok(out)
}

fn geometry_symmetry(ctx: &VerifyContext, rng: &mut ChaCha8Rng) -> Res<Outcome> {
    let mut out = Outcome::default();
    for m in &ctx.manifolds {
        for _ in 0..100 {
            let (a, b) = (m.random_point(rng), m.random_point(rng));
            out.record((m.distance(&a, &b)? - m.distance(&b, &a)?).abs());
        }
    }
    Ok(out)
}

fn geometry_triangle(ctx: &VerifyContext, rng: &mut ChaCha8Rng) -> Res<Outcome> {
    let mut out = Outcome::default();
    for m in &ctx.manifolds {
        for _ in 0..100 {
            let (a, b, c) = (m.random_point(rng), m.random_point(rng), m.random_point(rng));
            let excess = m.distance(&a, &c)? - m.distance(&a, &b)? - m.distance(&b, &c)?;
            out.record(excess.max(0.0));
        }
    }
    Ok(out)
}

fn geometry_transport(ctx: &VerifyContext, rng: &mut ChaCha8Rng) -> Res<Outcome> {
    let mut out = Outcome::default();
    for m in &ctx.manifolds {
        for _ in 0..100 {
            let p = m.random_point(rng);
            let q = nearby(m, &p, 1.5, rng)?;
            let v = m.random_tangent(&p, rng);
            let t = m.transport(&p, &q, &v)?;
            out.record((m.norm(&q, &t)? - m.norm(&p, &v)?).abs());
        }
    }
    Ok(out)
}

fn geometry_gradient(ctx: &VerifyContext, rng: &mut ChaCha8Rng) -> Res<Outcome> {
    let mut out = Outcome::default();
    for m in &ctx.manifolds {
        let family = ambient_family(m.descriptor(), rng);
        for _ in 0..50 {
            let p = m.random_point(rng);
            let v = bounded_tangent(m, &p, 1.0, rng)?;
            for f in &family {
                let grad = m.riemannian_gradient(&p, &(f.gradient)(p.coords()))?;
                let ip = m.inner(&p, &grad, &v)?;
                let fd = central_difference(m, &|x: &Point| Ok((f.value)(x.coords())), &p, &v)?;
                let bound = m.norm(&p, &grad)? * m.norm(&p, &v)?;
                out.record(directional_error(ip, fd, bound));
            }
        }
    }
    Ok(out)
}

fn geometry_log_norm(ctx: &VerifyContext, rng: &mut ChaCha8Rng) -> Res<Outcome> {
    let mut out = Outcome::default();
    for m in &ctx.manifolds {
        for _ in 0..100 {
            let p = m.random_point(rng);
            let q = nearby(m, &p, 2.0, rng)?;
            out.record((m.norm(&p, &m.log(&p, &q)?)? - m.distance(&p, &q)?).abs());
        }
    }
    Ok(out)
}

// ---- scaled metric ----

fn scaled_norm(ctx: &VerifyContext, rng: &mut ChaCha8Rng) -> Res<Outcome> {
    let mut out = Outcome::default();
    for m in &ctx.manifolds {
        for l in ctx.variant_sweep() {
            let s = ScaledManifold::new(m.clone(), scale(l)?);
            for _ in 0..100 {
                let p = m.random_point(rng);
                let v = m.random_tangent(&p, rng);
                let (base, scaled) = (m.norm(&p, &v)?, s.norm(&p, &v)?);
                out.record_factor(rel(scaled, l.sqrt() * base), l, ctx, l.sqrt(), scaled / base);
            }
        }
    }
    Ok(out)
}

fn scaled_distance(ctx: &VerifyContext, rng: &mut ChaCha8Rng) -> Res<Outcome> {
    let mut out = Outcome::default();
    for m in &ctx.manifolds {
        for l in ctx.variant_sweep() {
            let s = ScaledManifold::new(m.clone(), scale(l)?);
            for _ in 0..100 {
                let p = m.random_point(rng);
                let q = nearby(m, &p, 2.0, rng)?;
                let (base, scaled) = (m.distance(&p, &q)?, s.distance(&p, &q)?);
                out.record_factor(rel(scaled, l.sqrt() * base), l, ctx, l.sqrt(), scaled / base);
            }
        }
    }
    Ok(out)
}

fn scaled_curve_length(ctx: &VerifyContext, rng: &mut ChaCha8Rng) -> Res<Outcome> {
    let mut out = Outcome::default();
    for m in &ctx.manifolds {
        for l in ctx.variant_sweep() {
            let s = ScaledManifold::new(m.clone(), scale(l)?);
            for _ in 0..100 {
                let p = m.random_point(rng);
                let v = bounded_tangent(m, &p, 2.0, rng)?;
                let points = (0..=8).map(|k| m.exp(&p, &v.scaled(k as f64 / 8.0))).collect::<Res<Vec<_>>>()?;
                let curve = SampledCurve::uniform(points)?;
                let (base, scaled) = (m.curve_length(&curve)?, s.curve_length(&curve)?);
                out.record_factor(rel(scaled, l.sqrt() * base), l, ctx, l.sqrt(), scaled / base);
            }
        }
    }
    Ok(out)
}

fn scaled_volume(ctx: &VerifyContext, _rng: &mut ChaCha8Rng) -> Res<Outcome> {
    let mut out = Outcome { subject: Some("n=1..8".into()), ..Outcome::default() };
    let n_report = ctx.manifolds[0].descriptor().intrinsic_dimension();
    for l in ctx.variant_sweep() {
        for n in 1..=8usize {
            let got = volume_scale_factor(scale(l)?, n)?;
            let want = ((n as f64 / 2.0) * l.ln()).exp();
            let dev = rel(got, want);
            if n == n_report {
                out.record_factor(dev, l, ctx, want, got);
            } else {
                out.record(dev);
            }
        }
    }
    Ok(out)
}

fn scaled_gradient(ctx: &VerifyContext, rng: &mut ChaCha8Rng) -> Res<Outcome> {
    let mut out = Outcome::default();
    for m in &ctx.manifolds {
        let family = ambient_family(m.descriptor(), rng);
        for l in ctx.variant_sweep() {
            let s = ScaledManifold::new(m.clone(), scale(l)?);
            for _ in 0..100 {
                let p = m.random_point(rng);
                for f in &family {
                    let eg = (f.gradient)(p.coords());
                    let base = m.riemannian_gradient(&p, &eg)?;
                    let scaled = s.riemannian_gradient(&p, &eg)?;
                    let expected = base.components() / l;
                    let observed = scaled.components().amax() / base.components().amax();
                    out.record_factor(componentwise_rel(scaled.components(), &expected), l, ctx, 1.0 / l, observed);
                }
            }
        }
    }
    Ok(out)
}

/// Angle between `a` and `b` in the metric of `m`, computed stably near zero.
fn angle<M: Manifold + ?Sized>(m: &M, p: &Point, a: &Tangent, b: &Tangent) -> Res<f64> {
    let ua = a.scaled(1.0 / m.norm(p, a)?);
    let ub = b.scaled(1.0 / m.norm(p, b)?);
    Ok(2.0 * m.norm(p, &sub(&ua, &ub)?)?.atan2(m.norm(p, &ua.add(&ub)?)?))
}

fn scaled_gradient_direction(ctx: &VerifyContext, rng: &mut ChaCha8Rng) -> Res<Outcome> {
    let mut out = Outcome::default();
    for m in &ctx.manifolds {
        let family = ambient_family(m.descriptor(), rng);
        for l in ctx.variant_sweep() {
            let s = ScaledManifold::new(m.clone(), scale(l)?);
            for _ in 0..50 {
                let p = m.random_point(rng);
                for f in &family {
                    let eg = (f.gradient)(p.coords());
                    let base = m.riemannian_gradient(&p, &eg)?;
                    if base.is_zero() {
                        continue;
                    }
                    let scaled = s.riemannian_gradient(&p, &eg)?;
                    let ua = scaled.scaled(1.0 / m.norm(&p, &scaled)?);
                    let ub = base.scaled(1.0 / m.norm(&p, &base)?);
                    out.record(m.norm(&p, &sub(&ua, &ub)?)?);
                }
            }
        }
    }
    Ok(out)
}

fn scaled_composition(ctx: &VerifyContext, rng: &mut ChaCha8Rng) -> Res<Outcome> {
    let mut out = Outcome::default();
    let lambdas = ctx.variant_sweep();
    for m in &ctx.manifolds {
        for &l1 in &lambdas {
            for &l2 in &lambdas {
                let nested = ScaledManifold::new(ScaledManifold::new(m.clone(), scale(l1)?), scale(l2)?);
                let flat = ScaledManifold::new(m.clone(), scale(l1 * l2)?);
                for _ in 0..10 {
                    let p = m.random_point(rng);
                    let q = nearby(m, &p, 2.0, rng)?;
                    let v = m.random_tangent(&p, rng);
                    let g = m.random_tangent(&p, rng);
                    out.record(rel(nested.norm(&p, &v)?, flat.norm(&p, &v)?));
                    out.record(rel(nested.distance(&p, &q)?, flat.distance(&p, &q)?));
                    out.record(componentwise_rel(
                        nested.gradient_from_base(&p, &g)?.components(),
                        flat.gradient_from_base(&p, &g)?.components(),
                    ));
                }
            }
        }
    }
    Ok(out)
}

/// Largest entry difference between the outputs of `a` and `b` on every operation.
fn operation_gap<A: Manifold, B: Manifold>(a: &A, b: &B, m: &BuiltinManifold, rng: &mut ChaCha8Rng) -> Res<f64> {
    let p = m.random_point(rng);
    let q = nearby(m, &p, 1.5, rng)?;
    let v = m.random_tangent(&p, rng);
    let w = m.random_tangent(&p, rng).components() * 1.7;
    let gaps = [
        max_entry_diff(a.exp(&p, &v)?.coords(), b.exp(&p, &v)?.coords()),
        max_entry_diff(a.log(&p, &q)?.components(), b.log(&p, &q)?.components()),
        max_entry_diff(a.transport(&p, &q, &v)?.components(), b.transport(&p, &q, &v)?.components()),
        max_entry_diff(a.project(&p, &w)?.components(), b.project(&p, &w)?.components()),
        max_entry_diff(a.point(q.coords().clone())?.coords(), b.point(q.coords().clone())?.coords()),
        max_entry_diff(
            a.tangent(&p, v.components().clone())?.components(),
            b.tangent(&p, v.components().clone())?.components(),
        ),
    ];
    Ok(gaps.into_iter().fold(0.0, f64::max))
}

fn scaled_invariance(ctx: &VerifyContext, rng: &mut ChaCha8Rng) -> Res<Outcome> {
    let mut out = Outcome::default();
    for m in &ctx.manifolds {
        for l in ctx.variant_sweep() {
            let s = ScaledManifold::new(m.clone(), scale(l)?);
            for _ in 0..50 {
                out.record(operation_gap(&s, m, m, rng)?);
            }
        }
    }
    Ok(out)
}

fn scaled_unit_identity(ctx: &VerifyContext, rng: &mut ChaCha8Rng) -> Res<Outcome> {
    let mut out = Outcome::default();
    for m in &ctx.manifolds {
        let s = ScaledManifold::new(m.clone(), ScaleFactor::ONE);
        for _ in 0..50 {
            let p = m.random_point(rng);
            let q = nearby(m, &p, 1.5, rng)?;
            let v = m.random_tangent(&p, rng);
            let u = m.random_tangent(&p, rng);
            let eg = m.random_tangent(&p, rng).components().clone();
            let gaps = [
                operation_gap(&s, m, m, rng)?,
                (s.inner(&p, &u, &v)? - m.inner(&p, &u, &v)?).abs(),
                (s.norm(&p, &v)? - m.norm(&p, &v)?).abs(),
                (s.distance(&p, &q)? - m.distance(&p, &q)?).abs(),
                max_entry_diff(s.riemannian_gradient(&p, &eg)?.components(), m.riemannian_gradient(&p, &eg)?.components()),
            ];
            out.record(gaps.into_iter().fold(0.0, f64::max));
        }
    }
    Ok(out)
}

fn scaled_log_norm(ctx: &VerifyContext, rng: &mut ChaCha8Rng) -> Res<Outcome> {
    let mut out = Outcome::default();
    for m in &ctx.manifolds {
        for l in ctx.variant_sweep() {
            let s = ScaledManifold::new(m.clone(), scale(l)?);
            for _ in 0..100 {
                let p = m.random_point(rng);
                let q = nearby(m, &p, 2.0, rng)?;
                let scaled = s.norm(&p, &s.log(&p, &q)?)?;
                out.record(rel(scaled, l.sqrt() * m.distance(&p, &q)?));
            }
        }
    }
    Ok(out)
}

// ---- charts ----

fn chart_subject() -> String {
    Chart::builtins().iter().map(|c| c.name().to_string()).collect::<Vec<_>>().join(";")
}

/// Points in the middle half of each coordinate range (clipped to [-5, 5]).
fn interior_points(chart: &Chart, count: usize, rng: &mut dyn RngCore) -> Vec<DVector<f64>> {
    (0..count)
        .map(|_| {
            DVector::from_iterator(
                chart.dimension(),
                chart.domain().iter().map(|&(lo, hi)| {
                    let (lo, hi) = (lo.max(-5.0), hi.min(5.0));
                    let w = hi - lo;
                    rng.random_range(lo + 0.25 * w..hi - 0.25 * w)
                }),
            )
        })
        .collect()
}

fn chart_connection(ctx: &VerifyContext, rng: &mut ChaCha8Rng) -> Res<Outcome> {
    let mut out = Outcome { subject: Some(chart_subject()), ..Outcome::default() };
    for chart in Chart::builtins() {
        let points = interior_points(&chart, 20, rng);
        for l in ctx.invariant_sweep() {
            let scaled = chart.scale_constant(scale(l)?);
            for x in &points {
                let base = chart.christoffel_at(x, DEFAULT_FD_STEP)?;
                out.record(base.max_abs_diff(&scaled.christoffel_at(x, DEFAULT_FD_STEP)?));
            }
        }
    }
    Ok(out)
}

fn geodesic_cases() -> Vec<(Chart, [f64; 2], [f64; 2])> {
    vec![
        (Chart::euclidean(2).expect("n = 2"), [0.5, -1.0], [1.0, 2.0]),
        (Chart::polar(), [1.0, 0.2], [0.3, 0.8]),
        (Chart::polar(), [2.0, 0.0], [1.0, 0.0]),
        (Chart::sphere(), [1.2, 0.0], [0.5, 0.7]),
        (Chart::sphere(), [FRAC_PI_2, 0.0], [0.0, 1.0]),
    ]
}

fn integrate(chart: &Chart, x0: &DVector<f64>, v0: &DVector<f64>) -> Res<metric_scale::GeodesicPath> {
    geodesic_integrate(chart, x0, v0, 1.0, 1000).map_err(|e| e.source)
}

fn chart_geodesic(ctx: &VerifyContext, _rng: &mut ChaCha8Rng) -> Res<Outcome> {
    let mut out = Outcome { subject: Some(chart_subject()), ..Outcome::default() };
    for (chart, x0, v0) in geodesic_cases() {
        let (x0, v0) = (DVector::from_column_slice(&x0), DVector::from_column_slice(&v0));
        let base = integrate(&chart, &x0, &v0)?;
        for l in ctx.invariant_sweep() {
            let other = integrate(&chart.scale_constant(scale(l)?), &x0, &v0)?;
            out.record(base.max_deviation(&other));
        }
    }
    Ok(out)
}

fn chart_volume(ctx: &VerifyContext, rng: &mut ChaCha8Rng) -> Res<Outcome> {
    let mut out = Outcome { subject: Some(chart_subject()), ..Outcome::default() };
    for chart in Chart::builtins() {
        let points = interior_points(&chart, 20, rng);
        let n = chart.dimension();
        for l in ctx.variant_sweep() {
            let scaled = chart.scale_constant(scale(l)?);
            let want = volume_scale_factor(scale(l)?, n)?;
            for x in &points {
                let ratio = scaled.volume_density(x)? / chart.volume_density(x)?;
                out.record_factor(rel(ratio, want), l, ctx, want, ratio);
            }
        }
    }
    Ok(out)
}

fn chart_length(ctx: &VerifyContext, rng: &mut ChaCha8Rng) -> Res<Outcome> {
    let mut out = Outcome { subject: Some(chart_subject()), ..Outcome::default() };
    for chart in Chart::builtins() {
        for _ in 0..5 {
            let a = interior_points(&chart, 1, rng).remove(0);
            let b = interior_points(&chart, 1, rng).remove(0);
            let wobble: f64 = rng.random_range(-0.2..0.2);
            let curve = CoordinateCurve::sample(101, |t| {
                let bend = wobble * (std::f64::consts::PI * t).sin();
                a.lerp(&b, t).add_scalar(bend)
            })?;
            let base = chart.curve_length(&curve)?;
            for l in ctx.variant_sweep() {
                let scaled = chart.scale_constant(scale(l)?).curve_length(&curve)?;
                out.record_factor(rel(scaled, l.sqrt() * base), l, ctx, l.sqrt(), scaled / base);
            }
        }
    }
    Ok(out)
}

fn conformal_chart() -> (Chart, Chart) {
    let chart = Chart::euclidean(2).expect("n = 2");
    let bent = chart.scale_pointwise(|x| (2.0 * x[0]).exp());
    (chart, bent)
}

fn chart_negative(_ctx: &VerifyContext, _rng: &mut ChaCha8Rng) -> Res<Outcome> {
    let (chart, bent) = conformal_chart();
    let origin = DVector::zeros(2);
    let gap = chart.christoffel_at(&origin, DEFAULT_FD_STEP)?.max_abs_diff(&bent.christoffel_at(&origin, DEFAULT_FD_STEP)?);
    let mut out = Outcome { subject: Some("euclidean:2 with factor exp(2x1)".into()), ..Outcome::default() };
    out.record(gap);
    Ok(out)
}

fn chart_conformal_oracle(_ctx: &VerifyContext, rng: &mut ChaCha8Rng) -> Res<Outcome> {
    // g = e^{2x¹} I gives Γᵏᵢⱼ = δᵢᵏ ∂ⱼφ + δⱼᵏ ∂ᵢφ − δᵢⱼ ∂ₖφ with φ = x¹.
    let dphi = [1.0, 0.0];
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let (_, bent) = conformal_chart();
    let mut out = Outcome { subject: Some("euclidean:2 with factor exp(2x1)".into()), ..Outcome::default() };
    let mut points = vec![DVector::zeros(2)];
    points.extend((0..4).map(|_| DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0))));
    for x in &points {
        let field = bent.christoffel_at(x, DEFAULT_FD_STEP)?;
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let want = delta(i, k) * dphi[j] + delta(j, k) * dphi[i] - delta(i, j) * dphi[k];
                    out.record((field.get(k, i, j) - want).abs());
                }
            }
        }
    }
    Ok(out)
}

fn chart_equator(_ctx: &VerifyContext, _rng: &mut ChaCha8Rng) -> Res<Outcome> {
    let chart = Chart::sphere();
    let path = integrate(&chart, &DVector::from_column_slice(&[FRAC_PI_2, 0.0]), &DVector::from_column_slice(&[0.0, 1.0]))?;
    let s = Sphere::new(2)?;
    let p = s.point(vector(&[1.0, 0.0, 0.0]))?;
    let mut out = Outcome { subject: Some("sphere-chart;sphere:2".into()), ..Outcome::default() };
    for (t, x) in path.times.iter().zip(&path.positions) {
        let q = s.exp(&p, &s.tangent(&p, vector(&[0.0, *t, 0.0]))?)?;
        out.record((q.coords() - vector(&spherical_to_ambient(x[0], x[1]))).amax());
    }
    Ok(out)
}

// ---- optimizer ----

fn frechet_problem(m: &BuiltinManifold, rng: &mut dyn RngCore) -> Res<(Vec<Point>, Objective, Point)> {
    let (points, x0) = clustered_problem(m, 5, 1.0, rng)?;
    let objective = frechet_objective(m.clone(), points.clone())?;
    Ok((points, objective, x0))
}

fn optimizer_update_rule(ctx: &VerifyContext, rng: &mut ChaCha8Rng) -> Res<Outcome> {
    let mut out = Outcome::default();
    for m in &ctx.manifolds {
        let (_, objective, x0) = frechet_problem(m, rng)?;
        for l in ctx.invariant_sweep() {
            let s = ScaledManifold::new(m.clone(), scale(l)?);
            let trace = riemannian_gd(&s, &objective, &x0, &OptimizerConfig::new(ctx.eta, 50, 0.0)?);
            for x in &trace.iterates {
                let g = objective.gradient(x)?;
                let scaled_step = s.gradient_from_base(x, &g)?.scaled(-ctx.eta);
                let base_step = g.scaled(-ctx.eta / l);
                out.record(componentwise_rel(scaled_step.components(), base_step.components()));
            }
        }
    }
    Ok(out)
}

fn optimizer_trajectory(ctx: &VerifyContext, rng: &mut ChaCha8Rng) -> Res<Outcome> {
    let mut out = Outcome::default();
    for m in &ctx.manifolds {
        let (_, objective, x0) = frechet_problem(m, rng)?;
        for l in ctx.invariant_sweep() {
            let dev = equivalence_check(m, &objective, &x0, ctx.eta, scale(l)?, 200).map_err(|e| e.source)?;
            out.record(dev);
        }
    }
    Ok(out)
}

fn optimizer_gradient_direction(ctx: &VerifyContext, rng: &mut ChaCha8Rng) -> Res<Outcome> {
    let mut out = Outcome::default();
    for m in &ctx.manifolds {
        let (_, objective, x0) = frechet_problem(m, rng)?;
        for l in ctx.invariant_sweep() {
            let s = ScaledManifold::new(m.clone(), scale(l)?);
            let trace = riemannian_gd(&s, &objective, &x0, &OptimizerConfig::new(ctx.eta, 50, 0.0)?);
            for x in &trace.iterates {
                let g = objective.gradient(x)?;
                if g.is_zero() {
                    continue;
                }
                out.record(angle(m, x, &s.gradient_from_base(x, &g)?, &g)?);
            }
        }
    }
    Ok(out)
}

fn optimizer_frechet_gradient(ctx: &VerifyContext, rng: &mut ChaCha8Rng) -> Res<Outcome> {
    let mut out = Outcome::default();
    for m in &ctx.manifolds {
        let (points, objective, _) = frechet_problem(m, rng)?;
        for _ in 0..50 {
            let x = nearby(m, &points[0], 0.5, rng)?;
            let v = bounded_tangent(m, &x, 1.0, rng)?;
            let g = objective.gradient(&x)?;
            let ip = m.inner(&x, &g, &v)?;
            let fd = central_difference(m, &|y: &Point| objective.value(y), &x, &v)?;
            out.record(directional_error(ip, fd, m.norm(&x, &g)? * m.norm(&x, &v)?));
        }
    }
    Ok(out)
}

fn optimizer_sphere_midpoint(_ctx: &VerifyContext, _rng: &mut ChaCha8Rng) -> Res<Outcome> {
    let s = Sphere::new(2)?;
    let e1 = s.point(vector(&[1.0, 0.0, 0.0]))?;
    let e2 = s.point(vector(&[0.0, 1.0, 0.0]))?;
    let objective = frechet_objective(s, vec![e1.clone(), e2])?;
    let trace = riemannian_gd(&s, &objective, &e1, &OptimizerConfig::new(0.5, 100, 1e-10)?);
    if let StopReason::Failed(e) = trace.stop_reason {
        return Err(e);
    }
    let last = trace.last().expect("a successful run has iterates");
    let mut out = Outcome { subject: Some("sphere:2 {e1,e2}".into()), ..Outcome::default() };
    out.record((last.coords() - vector(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0])).amax());
    Ok(out)
}

fn distance_matrix(m: &BuiltinManifold, points: &[Point]) -> Res<DMatrix<f64>> {
    let n = points.len();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            d[(i, j)] = m.distance(&points[i], &points[j])?;
            d[(j, i)] = d[(i, j)];
        }
    }
    Ok(d)
}

const CALIBRATION_TARGETS: [f64; 3] = [0.5, 1.0, 3.0];

fn optimizer_calibration_optimality(ctx: &VerifyContext, rng: &mut ChaCha8Rng) -> Res<Outcome> {
    let mut out = Outcome::default();
    for m in &ctx.manifolds {
        for c in CALIBRATION_TARGETS {
            for noise in [0.0, 0.1] {
                let (points, _) = clustered_problem(m, 6, 1.0, rng)?;
                let mut targets = distance_matrix(m, &points)? * c;
                for i in 0..points.len() {
                    for j in i + 1..points.len() {
                        targets[(i, j)] *= 1.0 + noise * rng.random_range(-1.0..1.0);
                        targets[(j, i)] = targets[(i, j)];
                    }
                }
                let fit = calibrate_scale(m, &points, &targets)?;
                let pairs = distance_pairs(m, &points, &targets)?;
                let l = fit.lambda.get();
                let at = calibration_loss(&pairs, l);
                let neighbours = calibration_loss(&pairs, l * (1.0 - 1e-3)).min(calibration_loss(&pairs, l * (1.0 + 1e-3)));
                out.record((at - neighbours).max(0.0));
            }
        }
    }
    Ok(out)
}

fn optimizer_calibration_recovery(ctx: &VerifyContext, rng: &mut ChaCha8Rng) -> Res<Outcome> {
    let mut out = Outcome::default();
    for m in &ctx.manifolds {
        for c in CALIBRATION_TARGETS {
            let (points, _) = clustered_problem(m, 6, 1.0, rng)?;
            let targets = distance_matrix(m, &points)? * c;
            let fit = calibrate_scale(m, &points, &targets)?;
            out.record(rel(fit.lambda.get(), c * c).max(fit.residual));
        }
    }
    Ok(out)
}

fn optimizer_joint_descent(ctx: &VerifyContext, rng: &mut ChaCha8Rng) -> Res<Outcome> {
    let mut out = Outcome::default();
    for m in &ctx.manifolds {
        for c in [0.5, 1.0, 2.0, 3.0] {
            let (points, objective, x0) = frechet_problem(m, rng)?;
            let targets = distance_matrix(m, &points)? * c;
            let cfg = OptimizerConfig::new(ctx.eta, 200, 1e-10)?;
            let run = joint_descent(m, &points, &targets, &objective, &x0, &cfg)?;
            out.record(run.equivalence_deviation);
        }
    }
    Ok(out)
}
