//! Coordinate charts: metric matrices, finite-difference Christoffel symbols,
//! geodesic integration, volume densities, and chart rescaling.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::error::{GeometryError, Result};
use crate::linalg::relative_asymmetry;
use crate::scaled::ScaleFactor;

/// Central-difference step used when none is given.
pub const DEFAULT_FD_STEP: f64 = 1e-5;
/// RK4 steps per unit of integration time used when none is given.
pub const DEFAULT_STEPS_PER_UNIT: usize = 1000;

const METRIC_SYMMETRY_TOL: f64 = 1e-12;

/// Coordinate-to-metric map `x ↦ (g_ij(x))`.
pub type MetricFn = Arc<dyn Fn(&DVector<f64>) -> Result<DMatrix<f64>> + Send + Sync>;

/// An axis-aligned coordinate box with a metric.
#[derive(Clone)]
pub struct Chart {
    name: String,
    domain: Vec<(f64, f64)>,
    metric_fn: MetricFn,
}

impl fmt::Debug for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Chart")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

impl Chart {
    pub fn new(name: impl Into<String>, domain: Vec<(f64, f64)>, metric_fn: MetricFn) -> Result<Self> {
        if domain.is_empty() {
            return Err(GeometryError::InvalidChart("chart dimension must be at least 1".into()));
        }
        if domain.iter().any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi)) {
            return Err(GeometryError::InvalidChart("domain bounds must be finite with lo < hi".into()));
        }
        Ok(Self { name: name.into(), domain, metric_fn })
    }

    /// Flat ℝⁿ in Cartesian coordinates on `[-1000, 1000]ⁿ`.
    pub fn euclidean(n: usize) -> Result<Self> {
        Self::new(
            format!("euclidean:{n}"),
            vec![(-1000.0, 1000.0); n],
            Arc::new(move |_| Ok(DMatrix::identity(n, n))),
        )
    }

    /// Polar coordinates `(r, θ)` on the plane, `g = diag(1, r²)`, with r ∈ [0.1, 10].
    pub fn polar() -> Self {
        let two_pi = 2.0 * std::f64::consts::PI;
        Self::new(
            "polar",
            vec![(0.1, 10.0), (-two_pi, two_pi)],
            Arc::new(|x| {
                let r = x[0];
                Ok(DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, r * r])))
            }),
        )
        .expect("valid built-in chart")
    }

    /// Spherical coordinates `(θ, φ)` on the unit sphere, `g = diag(1, sin²θ)`,
    /// with θ ∈ [0.1, π − 0.1] away from the poles.
    pub fn sphere() -> Self {
        let pi = std::f64::consts::PI;
        Self::new(
            "sphere-chart",
            vec![(0.1, pi - 0.1), (-2.0 * pi, 2.0 * pi)],
            Arc::new(|x| {
                let s = x[0].sin();
                Ok(DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, s * s])))
            }),
        )
        .expect("valid built-in chart")
    }

    /// The charts every verification sweep runs over.
    pub fn builtins() -> Vec<Chart> {
        vec![Self::euclidean(2).expect("n = 2"), Self::polar(), Self::sphere()]
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.domain.len()
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        x.len() == self.dimension()
            && x.iter().zip(&self.domain).all(|(&xi, &(lo, hi))| xi >= lo && xi <= hi)
    }

    /// True when the box `x ± margin` lies inside the domain.
    pub fn contains_with_margin(&self, x: &DVector<f64>, margin: f64) -> bool {
        x.len() == self.dimension()
            && x
                .iter()
                .zip(&self.domain)
                .all(|(&xi, &(lo, hi))| xi - margin >= lo && xi + margin <= hi)
    }

    fn ensure_inside(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dimension() {
            return Err(GeometryError::Contract(format!(
                "coordinate vector has length {}, chart {} has dimension {}",
                x.len(),
                self.name,
                self.dimension()
            )));
        }
        if !self.contains(x) {
            return Err(GeometryError::Domain(format!(
                "coordinates {:?} lie outside chart {}",
                x.as_slice(),
                self.name
            )));
        }
        Ok(())
    }

    /// `(g_ij(x))`, checked to be symmetric positive definite.
    pub fn metric_at(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.ensure_inside(x)?;
        let g = (self.metric_fn)(x)?;
        let n = self.dimension();
        if g.shape() != (n, n) {
            return Err(GeometryError::InvalidChart(format!(
                "metric has shape {:?}, expected ({n}, {n})",
                g.shape()
            )));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::InvalidChart("metric has non-finite entries".into()));
        }
        if relative_asymmetry(&g) > METRIC_SYMMETRY_TOL {
            return Err(GeometryError::InvalidChart("metric is not symmetric".into()));
        }
        if g.clone().cholesky().is_none() {
            return Err(GeometryError::InvalidChart(format!(
                "metric is not positive definite at {:?}",
                x.as_slice()
            )));
        }
        Ok(g)
    }

    /// Christoffel symbols of the Levi-Civita connection,
    /// `Γᵏᵢⱼ = ½ gᵏˡ (∂ᵢ gⱼₗ + ∂ⱼ gᵢₗ − ∂ₗ gᵢⱼ)`, with metric derivatives taken by
    /// central differences of width `fd_step`.
    pub fn christoffel_at(&self, x: &DVector<f64>, fd_step: f64) -> Result<ChristoffelField> {
        if !(fd_step.is_finite() && fd_step > 0.0) {
            return Err(GeometryError::Contract(format!("finite-difference step {fd_step} must be > 0")));
        }
        self.ensure_inside(x)?;
        if !self.contains_with_margin(x, fd_step) {
            return Err(GeometryError::Domain(format!(
                "{:?} is closer than {fd_step} to the boundary of chart {}",
                x.as_slice(),
                self.name
            )));
        }
        let n = self.dimension();
        let g = self.metric_at(x)?;
        let g_inv = g
            .cholesky()
            .map(|c| c.inverse())
            .ok_or_else(|| GeometryError::Numerical("metric is singular".into()))?;

        // dg[l] = ∂ₗ g
        let mut dg = Vec::with_capacity(n);
        for l in 0..n {
            let mut fwd = x.clone();
            let mut bwd = x.clone();
            fwd[l] += fd_step;
            bwd[l] -= fd_step;
            dg.push((self.metric_at(&fwd)? - self.metric_at(&bwd)?) / (2.0 * fd_step));
        }

        let mut symbols = vec![0.0; n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for l in 0..n {
                        acc += g_inv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                    }
                    symbols[(k * n + i) * n + j] = 0.5 * acc;
                }
            }
        }
        if symbols.iter().any(|s| !s.is_finite()) {
            return Err(GeometryError::Numerical("non-finite Christoffel symbol".into()));
        }
        Ok(ChristoffelField { point: x.clone(), dimension: n, symbols })
    }

    /// `√det(g_ij(x))`.
    pub fn volume_density(&self, x: &DVector<f64>) -> Result<f64> {
        let g = self.metric_at(x)?;
        let chol = g.cholesky().ok_or_else(|| GeometryError::Numerical("metric is singular".into()))?;
        // √det(LLᵀ) = Π Lᵢᵢ
        Ok(chol.l_dirty().diagonal().iter().product())
    }

    /// Chart with metric `λ g` on the same domain.
    pub fn scale_constant(&self, lambda: ScaleFactor) -> Chart {
        let inner = Arc::clone(&self.metric_fn);
        let l = lambda.get();
        Chart {
            name: format!("{}*{}", self.name, l),
            domain: self.domain.clone(),
            metric_fn: Arc::new(move |x| Ok(inner(x)? * l)),
        }
    }

    /// Chart with metric `λ(x) g(x)`. Evaluating where `λ(x) ≤ 0` is an invalid-chart error.
    pub fn scale_pointwise<F>(&self, lambda_fn: F) -> Chart
    where
        F: Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
    {
        let inner = Arc::clone(&self.metric_fn);
        Chart {
            name: format!("{}*lambda(x)", self.name),
            domain: self.domain.clone(),
            metric_fn: Arc::new(move |x| {
                let l = lambda_fn(x);
                if !(l.is_finite() && l > 0.0) {
                    return Err(GeometryError::InvalidChart(format!(
                        "pointwise scale {l} at {:?} is not positive",
                        x.as_slice()
                    )));
                }
                Ok(inner(x)? * l)
            }),
        }
    }

    /// Length of a sampled coordinate curve: trapezoidal quadrature of
    /// `√(ẋᵀ g(x) ẋ)`, with velocities from second-order finite differences.
    pub fn curve_length(&self, curve: &CoordinateCurve) -> Result<f64> {
        let velocities = curve.velocities();
        let mut speeds = Vec::with_capacity(curve.len());
        for (x, v) in curve.points.iter().zip(&velocities) {
            let g = self.metric_at(x)?;
            let q = (v.transpose() * &g * v)[(0, 0)];
            speeds.push(q.max(0.0).sqrt());
        }
        Ok(curve
            .params
            .windows(2)
            .zip(speeds.windows(2))
            .map(|(t, s)| 0.5 * (s[0] + s[1]) * (t[1] - t[0]))
            .sum())
    }
}

impl FromStr for Chart {
    type Err = GeometryError;

    /// Accepts `euclidean:<n>`, `polar`, and `sphere-chart`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "polar" => Ok(Self::polar()),
            "sphere-chart" => Ok(Self::sphere()),
            _ => {
                let n = s
                    .strip_prefix("euclidean:")
                    .ok_or_else(|| GeometryError::Parse(format!("unknown chart {s:?}")))?;
                let n: usize = n
                    .trim()
                    .parse()
                    .map_err(|_| GeometryError::Parse(format!("bad chart dimension in {s:?}")))?;
                if n == 0 || n > 64 {
                    return Err(GeometryError::Parse(format!("chart dimension {n} out of range 1..=64")));
                }
                Self::euclidean(n)
            }
        }
    }
}

/// Ambient point `(sin θ cos φ, sin θ sin φ, cos θ)` for spherical coordinates.
pub fn spherical_to_ambient(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

/// Christoffel symbols `Γᵏᵢⱼ` at one coordinate point.
#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelField {
    point: DVector<f64>,
    dimension: usize,
    symbols: Vec<f64>,
}

impl ChristoffelField {
    pub fn point(&self) -> &DVector<f64> {
        &self.point
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// `Γᵏᵢⱼ` (zero-based indices).
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        let n = self.dimension;
        self.symbols[(k * n + i) * n + j]
    }

    /// Largest `|Γᵏᵢⱼ − Γᵏⱼᵢ|`.
    pub fn lower_index_asymmetry(&self) -> f64 {
        let n = self.dimension;
        let mut worst: f64 = 0.0;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max((self.get(k, i, j) - self.get(k, j, i)).abs());
                }
            }
        }
        worst
    }

    /// Largest absolute entry difference from `other`.
    pub fn max_abs_diff(&self, other: &ChristoffelField) -> f64 {
        assert_eq!(self.dimension, other.dimension, "fields of different dimension");
        self.symbols
            .iter()
            .zip(&other.symbols)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.symbols.iter().map(|s| s.abs()).fold(0.0, f64::max)
    }

    /// Geodesic acceleration `−Γᵏᵢⱼ vⁱ vʲ`.
    pub fn acceleration(&self, v: &DVector<f64>) -> DVector<f64> {
        let n = self.dimension;
        DVector::from_fn(n, |k, _| {
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    acc += self.get(k, i, j) * v[i] * v[j];
                }
            }
            -acc
        })
    }
}

/// Samples of a curve in chart coordinates at strictly increasing parameters.
#[derive(Debug, Clone)]
pub struct CoordinateCurve {
    points: Vec<DVector<f64>>,
    params: Vec<f64>,
}

impl CoordinateCurve {
    pub fn new(points: Vec<DVector<f64>>, params: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(GeometryError::Contract("a coordinate curve needs at least 2 samples".into()));
        }
        if points.len() != params.len() {
            return Err(GeometryError::Contract("points and parameters differ in length".into()));
        }
        if params.iter().any(|t| !t.is_finite()) || params.windows(2).any(|w| w[1] <= w[0]) {
            return Err(GeometryError::Contract("curve parameters must be strictly increasing".into()));
        }
        let n = points[0].len();
        if points.iter().any(|p| p.len() != n) {
            return Err(GeometryError::Contract("samples have mixed dimensions".into()));
        }
        Ok(Self { points, params })
    }

    /// Samples `f(t)` at `count` uniform parameters in `[0, 1]`.
    pub fn sample(count: usize, f: impl Fn(f64) -> DVector<f64>) -> Result<Self> {
        let denom = count.saturating_sub(1).max(1) as f64;
        let params: Vec<f64> = (0..count).map(|i| i as f64 / denom).collect();
        let points = params.iter().map(|&t| f(t)).collect();
        Self::new(points, params)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Second-order finite-difference derivative with respect to the parameter
    /// (first order when only two samples exist).
    fn velocities(&self) -> Vec<DVector<f64>> {
        let x = &self.points;
        let t = &self.params;
        let n = x.len();
        if n == 2 {
            let v = (&x[1] - &x[0]) / (t[1] - t[0]);
            return vec![v.clone(), v];
        }
        let mut out = Vec::with_capacity(n);
        {
            let (h1, h2) = (t[1] - t[0], t[2] - t[1]);
            let a = -(2.0 * h1 + h2) / (h1 * (h1 + h2));
            let b = (h1 + h2) / (h1 * h2);
            let c = -h1 / (h2 * (h1 + h2));
            out.push(&x[0] * a + &x[1] * b + &x[2] * c);
        }
        for i in 1..n - 1 {
            let (hs, hd) = (t[i] - t[i - 1], t[i + 1] - t[i]);
            let v = (&x[i + 1] * (hs * hs) + &x[i] * (hd * hd - hs * hs) - &x[i - 1] * (hd * hd))
                / (hs * hd * (hd + hs));
            out.push(v);
        }
        {
            let (h1, h2) = (t[n - 2] - t[n - 3], t[n - 1] - t[n - 2]);
            let a = h2 / (h1 * (h1 + h2));
            let b = -(h2 + h1) / (h1 * h2);
            let c = (2.0 * h2 + h1) / (h2 * (h1 + h2));
            out.push(&x[n - 3] * a + &x[n - 2] * b + &x[n - 1] * c);
        }
        out
    }
}

/// Nodes of an integrated geodesic.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicPath {
    pub times: Vec<f64>,
    pub positions: Vec<DVector<f64>>,
    pub velocities: Vec<DVector<f64>>,
}

impl GeodesicPath {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.positions.first().map_or(0, |x| x.len())
    }

    /// Largest coordinate difference between positions at matching nodes.
    pub fn max_deviation(&self, other: &GeodesicPath) -> f64 {
        self.positions
            .iter()
            .zip(&other.positions)
            .map(|(a, b)| (a - b).amax())
            .fold(0.0, f64::max)
    }

    /// Largest relative change of the metric speed `‖ẋ‖_g` along the path.
    pub fn speed_drift(&self, chart: &Chart) -> Result<f64> {
        let speed = |x: &DVector<f64>, v: &DVector<f64>| -> Result<f64> {
            let g = chart.metric_at(x)?;
            Ok((v.transpose() * g * v)[(0, 0)].max(0.0).sqrt())
        };
        let s0 = speed(&self.positions[0], &self.velocities[0])?;
        let mut worst: f64 = 0.0;
        for (x, v) in self.positions.iter().zip(&self.velocities) {
            let s = speed(x, v)?;
            worst = worst.max(if s0 > 0.0 { (s - s0).abs() / s0 } else { s });
        }
        Ok(worst)
    }

    /// Largest residual `|(ẋₖ₊₁ − ẋₖ₋₁)/(tₖ₊₁ − tₖ₋₁) + Γ(xₖ)(ẋₖ, ẋₖ)|` over interior nodes.
    pub fn geodesic_residual(&self, chart: &Chart) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for k in 1..self.len().saturating_sub(1) {
            let dt = self.times[k + 1] - self.times[k - 1];
            let accel = (&self.velocities[k + 1] - &self.velocities[k - 1]) / dt;
            let forcing = chart.christoffel_at(&self.positions[k], DEFAULT_FD_STEP)?.acceleration(&self.velocities[k]);
            worst = worst.max((accel - forcing).amax());
        }
        Ok(worst)
    }

    /// CSV with header `t,x1..xn,xdot1..xdotn`; values written with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let n = self.dimension();
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.extend((1..=n).map(|i| format!("xdot{i}")));
        let mut out = header.join(",");
        out.push('\n');
        for ((t, x), v) in self.times.iter().zip(&self.positions).zip(&self.velocities) {
            let row: Vec<String> = std::iter::once(*t)
                .chain(x.iter().copied())
                .chain(v.iter().copied())
                .map(format_f64)
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// `x` in scientific notation with 17 significant digits.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Integration stopped before `t_end`; `partial` holds every node computed so far.
#[derive(Debug, Clone, Error)]
#[error("geodesic integration stopped at t = {t}: {source}", t = partial.times.last().copied().unwrap_or(0.0))]
pub struct GeodesicExit {
    pub partial: GeodesicPath,
    #[source]
    pub source: GeometryError,
}

/// Integrates `ẍᵏ + Γᵏᵢⱼ ẋⁱ ẋʲ = 0` with `steps` fixed classical RK4 steps over `[0, t_end]`.
pub fn geodesic_integrate(
    chart: &Chart,
    x0: &DVector<f64>,
    v0: &DVector<f64>,
    t_end: f64,
    steps: usize,
) -> Result<GeodesicPath, GeodesicExit> {
    let empty = GeodesicPath { times: vec![], positions: vec![], velocities: vec![] };
    let fail = |partial: GeodesicPath, source| GeodesicExit { partial, source };
    if steps == 0 || !(t_end.is_finite() && t_end > 0.0) {
        return Err(fail(empty, GeometryError::Contract("need steps ≥ 1 and a finite t_end > 0".into())));
    }
    if v0.len() != chart.dimension() || v0.iter().any(|v| !v.is_finite()) {
        return Err(fail(empty, GeometryError::Contract("initial velocity has the wrong shape".into())));
    }
    if let Err(e) = chart.metric_at(x0) {
        return Err(fail(empty, e));
    }

    let h = t_end / steps as f64;
    let accel = |x: &DVector<f64>, v: &DVector<f64>| -> Result<DVector<f64>> {
        Ok(chart.christoffel_at(x, DEFAULT_FD_STEP)?.acceleration(v))
    };

    let mut path = GeodesicPath {
        times: Vec::with_capacity(steps + 1),
        positions: Vec::with_capacity(steps + 1),
        velocities: Vec::with_capacity(steps + 1),
    };
    path.times.push(0.0);
    path.positions.push(x0.clone());
    path.velocities.push(v0.clone());

    let (mut x, mut v) = (x0.clone(), v0.clone());
    for k in 1..=steps {
        let stage = || -> Result<(DVector<f64>, DVector<f64>)> {
            let k1x = v.clone();
            let k1v = accel(&x, &v)?;
            let x2 = &x + &k1x * (h / 2.0);
            let k2x = &v + &k1v * (h / 2.0);
            let k2v = accel(&x2, &k2x)?;
            let x3 = &x + &k2x * (h / 2.0);
            let k3x = &v + &k2v * (h / 2.0);
            let k3v = accel(&x3, &k3x)?;
            let x4 = &x + &k3x * h;
            let k4x = &v + &k3v * h;
            let k4v = accel(&x4, &k4x)?;
            let nx = &x + (k1x + &k2x * 2.0 + &k3x * 2.0 + &k4x) * (h / 6.0);
            let nv = &v + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
            chart.metric_at(&nx)?;
            Ok((nx, nv))
        };
        match stage() {
            Ok((nx, nv)) => {
                x = nx;
                v = nv;
                path.times.push(k as f64 * h);
                path.positions.push(x.clone());
                path.velocities.push(v.clone());
            }
            Err(e) => return Err(fail(path, e)),
        }
    }
    Ok(path)
}
