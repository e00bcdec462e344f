//! Riemannian gradient descent with exponential-map updates.
//!
//! A run on a [`ScaledManifold`] uses `∇_{λg} f = λ⁻¹ ∇_g f`, so it traces the
//! same iterates as a run on the base manifold with step `η/λ`.
//! [`equivalence_check`] measures exactly that, and [`calibrate_scale`] fits λ
//! to target distances in closed form.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, RngCore};
use thiserror::Error;

use crate::chart::format_f64;
use crate::error::{GeometryError, Result};
use crate::geometry::{Manifold, Point, Tangent};
use crate::scaled::{ScaleFactor, ScaledManifold};

type ValueFn = Arc<dyn Fn(&Point) -> Result<f64> + Send + Sync>;
type GradientFn = Arc<dyn Fn(&Point) -> Result<Tangent> + Send + Sync>;

/// A smooth function with its gradient for the *base* (unscaled) metric.
#[derive(Clone)]
pub struct Objective {
    value_fn: ValueFn,
    gradient_fn: GradientFn,
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Objective { .. }")
    }
}

impl Objective {
    pub fn new<V, G>(value_fn: V, gradient_fn: G) -> Self
    where
        V: Fn(&Point) -> Result<f64> + Send + Sync + 'static,
        G: Fn(&Point) -> Result<Tangent> + Send + Sync + 'static,
    {
        Self { value_fn: Arc::new(value_fn), gradient_fn: Arc::new(gradient_fn) }
    }

    pub fn value(&self, x: &Point) -> Result<f64> {
        (self.value_fn)(x)
    }

    /// `∇_g f(x)` for the base metric.
    pub fn gradient(&self, x: &Point) -> Result<Tangent> {
        (self.gradient_fn)(x)
    }
}

/// `f(x) = (1/2N) Σ d_g(x, yᵢ)²` with gradient `−(1/N) Σ log_x(yᵢ)`.
pub fn frechet_objective<M>(manifold: M, points: Vec<Point>) -> Result<Objective>
where
    M: Manifold + Clone + 'static,
{
    if points.is_empty() {
        return Err(GeometryError::Contract("Fréchet objective needs at least one point".into()));
    }
    let desc = manifold.descriptor();
    if points.iter().any(|p| p.descriptor() != desc) {
        return Err(GeometryError::Contract(format!("all data points must lie on {desc}")));
    }
    let data = Arc::new(points);
    let n = data.len() as f64;
    let (m1, d1) = (manifold.clone(), Arc::clone(&data));
    let value = move |x: &Point| -> Result<f64> {
        let sum: f64 = d1.iter().try_fold(0.0, |acc, y| Ok::<_, GeometryError>(acc + m1.distance(x, y)?.powi(2)))?;
        Ok(sum / (2.0 * n))
    };
    let gradient = move |x: &Point| -> Result<Tangent> {
        let mut acc = DMatrix::zeros(x.coords().nrows(), x.coords().ncols());
        for y in data.iter() {
            acc += manifold.log(x, y)?.components();
        }
        Ok(Tangent::new_unchecked(x.clone(), acc * (-1.0 / n)))
    };
    Ok(Objective::new(value, gradient))
}

/// Step size, iteration cap, and gradient-norm stopping threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    step_size: f64,
    max_iters: usize,
    grad_tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { step_size: 0.1, max_iters: 1000, grad_tol: 1e-10 }
    }
}

impl OptimizerConfig {
    pub fn new(step_size: f64, max_iters: usize, grad_tol: f64) -> Result<Self> {
        if !(step_size.is_finite() && step_size > 0.0) {
            return Err(GeometryError::Contract(format!("step size {step_size} must be > 0")));
        }
        if max_iters == 0 {
            return Err(GeometryError::Contract("max_iters must be at least 1".into()));
        }
        if grad_tol.is_nan() || grad_tol < 0.0 {
            return Err(GeometryError::Contract(format!("grad_tol {grad_tol} must be ≥ 0")));
        }
        Ok(Self { step_size, max_iters, grad_tol })
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    pub fn max_iters(&self) -> usize {
        self.max_iters
    }

    pub fn grad_tol(&self) -> f64 {
        self.grad_tol
    }

    pub fn with_step_size(self, step_size: f64) -> Result<Self> {
        Self::new(step_size, self.max_iters, self.grad_tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    Converged,
    MaxIters,
    /// A step failed; the trace holds every iterate before the failure.
    Failed(GeometryError),
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopReason::Converged => f.write_str("converged"),
            StopReason::MaxIters => f.write_str("max_iters"),
            StopReason::Failed(e) => write!(f, "failed: {e}"),
        }
    }
}

/// Iterates, objective values, and gradient norms (in the run's metric) of one run.
#[derive(Debug, Clone)]
pub struct OptimizerTrace {
    pub iterates: Vec<Point>,
    pub values: Vec<f64>,
    pub grad_norms: Vec<f64>,
    pub stop_reason: StopReason,
}

impl OptimizerTrace {
    pub fn last(&self) -> Option<&Point> {
        self.iterates.last()
    }

    pub fn is_failed(&self) -> bool {
        matches!(self.stop_reason, StopReason::Failed(_))
    }

    /// Number of update steps taken.
    pub fn steps(&self) -> usize {
        self.iterates.len().saturating_sub(1)
    }

    /// CSV with header `iter,f_value,grad_norm,coord_0..coord_{d-1}`.
    pub fn to_csv(&self) -> String {
        let d = self.iterates.first().map_or(0, |p| p.coords().len());
        let mut out = String::from("iter,f_value,grad_norm");
        for i in 0..d {
            out.push_str(&format!(",coord_{i}"));
        }
        out.push('\n');
        for (k, ((x, f), g)) in self.iterates.iter().zip(&self.values).zip(&self.grad_norms).enumerate() {
            out.push_str(&format!("{k},{},{}", format_f64(*f), format_f64(*g)));
            for c in x.flat_coords() {
                out.push(',');
                out.push_str(&format_f64(c));
            }
            out.push('\n');
        }
        out
    }
}

/// Runs `x_{k+1} = exp_{x_k}(−η ∇f(x_k))`, where `∇f` is the gradient for the
/// manifold's own metric (the objective's base gradient rescaled through
/// [`Manifold::gradient_from_base`]).
///
/// Stops when the metric norm of the gradient is `≤ grad_tol` or after
/// `max_iters` steps. A failing evaluation or step ends the run with
/// [`StopReason::Failed`] and keeps the iterates computed so far.
pub fn riemannian_gd<M: Manifold + ?Sized>(
    manifold: &M,
    objective: &Objective,
    x0: &Point,
    config: &OptimizerConfig,
) -> OptimizerTrace {
    let mut trace = OptimizerTrace {
        iterates: Vec::new(),
        values: Vec::new(),
        grad_norms: Vec::new(),
        stop_reason: StopReason::MaxIters,
    };
    let mut x = x0.clone();
    let mut k = 0;
    loop {
        let eval = || -> Result<(f64, Tangent, f64)> {
            let f = objective.value(&x)?;
            let g = manifold.gradient_from_base(&x, &objective.gradient(&x)?)?;
            let gn = manifold.norm(&x, &g)?;
            Ok((f, g, gn))
        };
        let (f, grad, gn) = match eval() {
            Ok(v) => v,
            Err(e) => {
                trace.stop_reason = StopReason::Failed(e);
                return trace;
            }
        };
        trace.iterates.push(x.clone());
        trace.values.push(f);
        trace.grad_norms.push(gn);
        if gn <= config.grad_tol {
            trace.stop_reason = StopReason::Converged;
            return trace;
        }
        if k == config.max_iters {
            trace.stop_reason = StopReason::MaxIters;
            return trace;
        }
        match manifold.exp(&x, &grad.scaled(-config.step_size)) {
            Ok(next) => x = next,
            Err(e) => {
                trace.stop_reason = StopReason::Failed(e);
                return trace;
            }
        }
        k += 1;
    }
}

/// Largest `d_g(aₖ, bₖ)` over `k ≤ iters`; a trace that stopped early is held at its last iterate.
pub fn max_iterate_deviation<M: Manifold + ?Sized>(
    manifold: &M,
    a: &OptimizerTrace,
    b: &OptimizerTrace,
    iters: usize,
) -> Result<f64> {
    let (Some(a_last), Some(b_last)) = (a.last(), b.last()) else {
        return Err(GeometryError::Contract("cannot compare empty traces".into()));
    };
    let mut worst: f64 = 0.0;
    for k in 0..=iters {
        let xa = a.iterates.get(k).unwrap_or(a_last);
        let xb = b.iterates.get(k).unwrap_or(b_last);
        worst = worst.max(manifold.distance(xa, xb)?);
    }
    Ok(worst)
}

/// One arm of an equivalence comparison failed; `partial_deviation` covers the iterates both arms reached.
#[derive(Debug, Clone, Error)]
#[error("equivalence run failed after {compared} comparable iterates (deviation so far {partial_deviation:e}): {source}")]
pub struct EquivalenceError {
    pub compared: usize,
    pub partial_deviation: f64,
    #[source]
    pub source: GeometryError,
}

/// Runs descent on `λ·g` with step `η` and on `g` with step `η/λ` from the same
/// start for `iters` steps, returning the largest base-metric distance between
/// matching iterates.
pub fn equivalence_check<M>(
    manifold: &M,
    objective: &Objective,
    x0: &Point,
    eta: f64,
    lambda: ScaleFactor,
    iters: usize,
) -> Result<f64, EquivalenceError>
where
    M: Manifold + Clone,
{
    let wrap = |source| EquivalenceError { compared: 0, partial_deviation: 0.0, source };
    // grad_tol = 0: both arms run the full iteration count unless a gradient is exactly zero.
    let scaled_cfg = OptimizerConfig::new(eta, iters.max(1), 0.0).map_err(wrap)?;
    let base_cfg = scaled_cfg.with_step_size(eta / lambda.get()).map_err(wrap)?;
    let scaled = ScaledManifold::new(manifold.clone(), lambda);
    let scaled_run = riemannian_gd(&scaled, objective, x0, &scaled_cfg);
    let base_run = riemannian_gd(manifold, objective, x0, &base_cfg);
    compare_runs(manifold, &scaled_run, &base_run, iters)
}

fn compare_runs<M: Manifold + ?Sized>(
    manifold: &M,
    a: &OptimizerTrace,
    b: &OptimizerTrace,
    iters: usize,
) -> Result<f64, EquivalenceError> {
    let failure = [a, b].iter().find_map(|t| match &t.stop_reason {
        StopReason::Failed(e) => Some(e.clone()),
        _ => None,
    });
    if let Some(source) = failure {
        let compared = a.iterates.len().min(b.iterates.len());
        let partial_deviation = if compared == 0 {
            f64::NAN
        } else {
            max_iterate_deviation(manifold, a, b, compared - 1).unwrap_or(f64::NAN)
        };
        return Err(EquivalenceError { compared, partial_deviation, source });
    }
    max_iterate_deviation(manifold, a, b, iters).map_err(|source| EquivalenceError {
        compared: 0,
        partial_deviation: f64::NAN,
        source,
    })
}

/// Least-squares fit of a metric scale to target pairwise distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub lambda: ScaleFactor,
    /// `Σ_{i<j} (√λ dᵢⱼ − tᵢⱼ)²` at the fitted λ.
    pub residual: f64,
}

/// `L(λ) = Σ_{i<j} (√λ · d_g(yᵢ, yⱼ) − tᵢⱼ)²`.
pub fn calibration_loss(base_distances: &[(f64, f64)], lambda: f64) -> f64 {
    let s = lambda.sqrt();
    base_distances.iter().map(|&(d, t)| (s * d - t).powi(2)).sum()
}

/// Pairs `(d_g(yᵢ, yⱼ), tᵢⱼ)` for `i < j`, after validating the target matrix.
pub fn distance_pairs<M: Manifold + ?Sized>(
    manifold: &M,
    points: &[Point],
    targets: &DMatrix<f64>,
) -> Result<Vec<(f64, f64)>> {
    let n = points.len();
    if n < 2 {
        return Err(GeometryError::Contract("calibration needs at least 2 points".into()));
    }
    if targets.shape() != (n, n) {
        return Err(GeometryError::Contract(format!(
            "target matrix is {:?}, expected ({n}, {n})",
            targets.shape()
        )));
    }
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let t = targets[(i, j)];
            if !(t.is_finite() && t >= 0.0) || (t - targets[(j, i)]).abs() > 1e-12 * t.max(1.0) {
                return Err(GeometryError::Contract(format!(
                    "targets must be symmetric, finite and nonnegative (entry ({i}, {j}))"
                )));
            }
            pairs.push((manifold.distance(&points[i], &points[j])?, t));
        }
    }
    Ok(pairs)
}

/// Closed-form minimizer `√λ* = Σ tᵢⱼ dᵢⱼ / Σ dᵢⱼ²` of [`calibration_loss`].
pub fn calibrate_scale<M: Manifold + ?Sized>(
    manifold: &M,
    points: &[Point],
    targets: &DMatrix<f64>,
) -> Result<Calibration> {
    let pairs = distance_pairs(manifold, points, targets)?;
    let dd: f64 = pairs.iter().map(|(d, _)| d * d).sum();
    if dd <= 0.0 {
        return Err(GeometryError::Degenerate(
            "all base distances are zero; the scale is unidentifiable".into(),
        ));
    }
    let td: f64 = pairs.iter().map(|(d, t)| d * t).sum();
    if td <= 0.0 {
        return Err(GeometryError::Degenerate(
            "targets are uncorrelated with base distances; the best scale is 0".into(),
        ));
    }
    let root = td / dd;
    let lambda = ScaleFactor::new(root * root)?;
    Ok(Calibration { lambda, residual: calibration_loss(&pairs, lambda.get()) })
}

/// Outcome of calibrating λ and then descending on the calibrated metric.
#[derive(Debug, Clone)]
pub struct JointDescent {
    pub trace: OptimizerTrace,
    pub calibration: Calibration,
    /// Largest distance between the scaled run and the base run with step `η/λ*`.
    pub equivalence_deviation: f64,
}

/// Fits λ* with [`calibrate_scale`], runs descent on `λ*·g`, and compares the
/// path against the base-metric run with step `η/λ*`.
pub fn joint_descent<M>(
    manifold: &M,
    base_points: &[Point],
    targets: &DMatrix<f64>,
    objective: &Objective,
    x0: &Point,
    config: &OptimizerConfig,
) -> Result<JointDescent>
where
    M: Manifold + Clone,
{
    let calibration = calibrate_scale(manifold, base_points, targets)?;
    let scaled = ScaledManifold::new(manifold.clone(), calibration.lambda);
    let trace = riemannian_gd(&scaled, objective, x0, config);
    if let StopReason::Failed(e) = &trace.stop_reason {
        return Err(e.clone());
    }
    let base_cfg = config.with_step_size(config.step_size() / calibration.lambda.get())?;
    // Same fixed iteration count on both arms.
    let fixed = OptimizerConfig::new(base_cfg.step_size(), trace.steps().max(1), 0.0)?;
    let base_run = riemannian_gd(manifold, objective, x0, &fixed);
    let equivalence_deviation =
        compare_runs(manifold, &trace, &base_run, trace.steps()).map_err(|e| e.source)?;
    Ok(JointDescent { trace, calibration, equivalence_deviation })
}

/// `count` points within geodesic distance `radius` of a random center, plus a
/// start point drawn the same way. Keeping the cloud inside a small ball keeps
/// every log map defined along the descent.
pub fn clustered_problem<M: Manifold + ?Sized>(
    manifold: &M,
    count: usize,
    radius: f64,
    rng: &mut dyn RngCore,
) -> Result<(Vec<Point>, Point)> {
    if count == 0 {
        return Err(GeometryError::Contract("need at least one point".into()));
    }
    let center = manifold.random_point(rng);
    let draw = |rng: &mut dyn RngCore| -> Result<Point> {
        let v = manifold.random_tangent(&center, rng);
        let n = manifold.norm(&center, &v)?;
        let r = radius * rng.random_range(0.0..=1.0f64);
        if n == 0.0 {
            return Ok(center.clone());
        }
        manifold.exp(&center, &v.scaled(r / n))
    };
    let points = (0..count).map(|_| draw(rng)).collect::<Result<Vec<_>>>()?;
    let x0 = draw(rng)?;
    Ok((points, x0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{vector, Euclidean, Sphere};
    use approx::assert_relative_eq;

    fn half_sq_norm(e: Euclidean) -> Objective {
        let e2 = e;
        Objective::new(
            |x| Ok(0.5 * x.coords().norm_squared()),
            move |x| e2.riemannian_gradient(x, x.coords()),
        )
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig::new(0.0, 10, 0.0).is_err());
        assert!(OptimizerConfig::new(0.1, 0, 0.0).is_err());
        assert!(OptimizerConfig::new(0.1, 10, -1.0).is_err());
        assert!(OptimizerConfig::new(0.1, 10, f64::NAN).is_err());
        let d = OptimizerConfig::default();
        assert_eq!((d.max_iters(), d.grad_tol()), (1000, 1e-10));
    }

    #[test]
    fn stationary_start_converges_immediately() {
        let e = Euclidean::new(2).unwrap();
        let x0 = e.point(vector(&[0.0, 0.0])).unwrap();
        let trace = riemannian_gd(&e, &half_sq_norm(e), &x0, &OptimizerConfig::default());
        assert_eq!(trace.iterates.len(), 1);
        assert_eq!(trace.stop_reason, StopReason::Converged);
    }

    #[test]
    fn unit_step_solves_quadratic() {
        let e = Euclidean::new(2).unwrap();
        let x0 = e.point(vector(&[4.0, 2.0])).unwrap();
        let cfg = OptimizerConfig::new(1.0, 10, 1e-10).unwrap();
        let trace = riemannian_gd(&e, &half_sq_norm(e), &x0, &cfg);
        assert_eq!(trace.steps(), 1);
        assert_eq!(trace.iterates[1].coords(), &vector(&[0.0, 0.0]));
        assert_eq!(trace.stop_reason, StopReason::Converged);
        assert_eq!(trace.values.len(), trace.grad_norms.len());
    }

    #[test]
    fn sphere_midpoint_of_two_basis_vectors() {
        let s = Sphere::new(2).unwrap();
        let e1 = s.point(vector(&[1.0, 0.0, 0.0])).unwrap();
        let e2 = s.point(vector(&[0.0, 1.0, 0.0])).unwrap();
        let obj = frechet_objective(s, vec![e1.clone(), e2]).unwrap();
        let cfg = OptimizerConfig::new(0.5, 100, 1e-10).unwrap();
        let trace = riemannian_gd(&s, &obj, &e1, &cfg);
        assert_eq!(trace.stop_reason, StopReason::Converged);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(trace.last().unwrap().coords(), &vector(&[h, h, 0.0]), epsilon = 1e-8);
    }

    #[test]
    fn euclidean_frechet_mean_is_arithmetic_mean() {
        let e = Euclidean::new(2).unwrap();
        let pts: Vec<_> = [[0.0, 0.0], [2.0, 0.0], [1.0, 3.0]]
            .iter()
            .map(|x| e.point(vector(x)).unwrap())
            .collect();
        let obj = frechet_objective(e, pts).unwrap();
        let x0 = e.point(vector(&[5.0, 5.0])).unwrap();
        let trace = riemannian_gd(&e, &obj, &x0, &OptimizerConfig::new(1.0, 10, 1e-12).unwrap());
        assert_relative_eq!(trace.last().unwrap().coords(), &vector(&[1.0, 1.0]), epsilon = 1e-14);
    }

    #[test]
    fn single_point_objective() {
        let s = Sphere::new(2).unwrap();
        let y = s.point(vector(&[0.0, 0.6, 0.8])).unwrap();
        let obj = frechet_objective(s, vec![y.clone()]).unwrap();
        assert_eq!(obj.value(&y).unwrap(), 0.0);
        assert!(obj.gradient(&y).unwrap().is_zero());
        assert!(frechet_objective(s, vec![]).is_err());
    }

    #[test]
    fn antipodal_data_fails_the_run() {
        let s = Sphere::new(2).unwrap();
        let e1 = s.point(vector(&[1.0, 0.0, 0.0])).unwrap();
        let m1 = s.point(vector(&[-1.0, 0.0, 0.0])).unwrap();
        let obj = frechet_objective(s, vec![m1]).unwrap();
        let trace = riemannian_gd(&s, &obj, &e1, &OptimizerConfig::default());
        assert!(trace.is_failed());
        assert!(trace.iterates.is_empty());
    }

    #[test]
    fn unit_scale_equivalence_is_exact() {
        let s = Sphere::new(2).unwrap();
        let e1 = s.point(vector(&[1.0, 0.0, 0.0])).unwrap();
        let q = s.point(vector(&[0.0, 0.6, 0.8])).unwrap();
        let obj = frechet_objective(s, vec![e1.clone(), q]).unwrap();
        let dev = equivalence_check(&s, &obj, &e1, 0.3, ScaleFactor::ONE, 50).unwrap();
        assert_eq!(dev, 0.0);
    }

    #[test]
    fn euclidean_quadratic_equivalence() {
        let e = Euclidean::new(3).unwrap();
        let x0 = e.point(vector(&[1.0, -2.0, 0.5])).unwrap();
        let dev = equivalence_check(&e, &half_sq_norm(e), &x0, 0.5, ScaleFactor::new(10.0).unwrap(), 50).unwrap();
        assert!(dev <= 1e-10, "{dev}");
    }

    #[test]
    fn calibration_examples() {
        let e = Euclidean::new(1).unwrap();
        let pts = vec![e.point(vector(&[0.0])).unwrap(), e.point(vector(&[2.0])).unwrap()];
        let t = DMatrix::from_row_slice(2, 2, &[0.0, 4.0, 4.0, 0.0]);
        let c = calibrate_scale(&e, &pts, &t).unwrap();
        assert_relative_eq!(c.lambda.get(), 4.0, max_relative = 1e-15);
        assert_eq!(c.residual, 0.0);

        let same = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 2.0, 0.0]);
        let c = calibrate_scale(&e, &pts, &same).unwrap();
        assert_eq!(c.lambda.get(), 1.0);
    }

    #[test]
    fn calibration_rejects_degenerate_inputs() {
        let e = Euclidean::new(1).unwrap();
        let p = e.point(vector(&[1.0])).unwrap();
        let t = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let err = calibrate_scale(&e, &[p.clone(), p.clone()], &t).unwrap_err();
        assert!(matches!(err, GeometryError::Degenerate(_)));
        assert!(calibrate_scale(&e, std::slice::from_ref(&p), &DMatrix::zeros(1, 1)).is_err());
        let q = e.point(vector(&[2.0])).unwrap();
        let asym = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(calibrate_scale(&e, &[p.clone(), q.clone()], &asym).is_err());
        let zero = DMatrix::zeros(2, 2);
        assert!(matches!(calibrate_scale(&e, &[p, q], &zero), Err(GeometryError::Degenerate(_))));
    }

    #[test]
    fn trace_csv_header() {
        let e = Euclidean::new(2).unwrap();
        let x0 = e.point(vector(&[4.0, 2.0])).unwrap();
        let trace = riemannian_gd(&e, &half_sq_norm(e), &x0, &OptimizerConfig::new(1.0, 5, 1e-10).unwrap());
        let csv = trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "iter,f_value,grad_norm,coord_0,coord_1");
        assert!(lines.next().unwrap().starts_with("0,1.0000000000000000e1,"));
    }
}
