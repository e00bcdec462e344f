//! Constant rescaling `g̃ = λ g` of a manifold's metric.
//!
//! Measurements (inner products, norms, distances, curve lengths, gradients)
//! pick up powers of λ. Everything determined by the Levi-Civita connection
//! (exp, log, parallel transport) and the tangent projection is forwarded to
//! the base manifold untouched, so those results are the base results.

use std::fmt;

use nalgebra::DMatrix;
use rand::RngCore;

use crate::error::{GeometryError, Result};
use crate::geometry::{Manifold, ManifoldDescriptor, Point, SampledCurve, Tangent};

/// A finite, strictly positive metric scale λ.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ScaleFactor(f64);

impl ScaleFactor {
    pub const ONE: ScaleFactor = ScaleFactor(1.0);

    pub fn new(lambda: f64) -> Result<Self> {
        if lambda.is_finite() && lambda > 0.0 {
            Ok(Self(lambda))
        } else {
            Err(GeometryError::InvalidScale(lambda))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// `√λ`, the factor applied to norms, lengths and distances.
    pub fn length_factor(self) -> f64 {
        self.0.sqrt()
    }

    /// `1/λ`, the factor applied to gradients.
    pub fn gradient_factor(self) -> f64 {
        1.0 / self.0
    }

    /// Product `λ₁λ₂`.
    pub fn compose(self, other: ScaleFactor) -> Result<ScaleFactor> {
        ScaleFactor::new(self.0 * other.0)
    }
}

impl fmt::Display for ScaleFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Density factor `λ^{n/2}` relating `dvol_{λg}` to `dvol_g` on an n-manifold.
pub fn volume_scale_factor(lambda: ScaleFactor, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(GeometryError::Contract("dimension must be at least 1".into()));
    }
    Ok(lambda.get().powf(n as f64 / 2.0))
}

/// A manifold whose metric is λ times the metric of `base`.
#[derive(Debug, Clone)]
pub struct ScaledManifold<M> {
    base: M,
    scale: ScaleFactor,
}

impl<M: Manifold> ScaledManifold<M> {
    pub fn new(base: M, scale: ScaleFactor) -> Self {
        Self { base, scale }
    }

    pub fn base(&self) -> &M {
        &self.base
    }

    pub fn scale(&self) -> ScaleFactor {
        self.scale
    }

    /// Same base manifold under a different scale.
    pub fn with_scale(&self, scale: ScaleFactor) -> Self
    where
        M: Clone,
    {
        Self { base: self.base.clone(), scale }
    }

    pub fn into_base(self) -> M {
        self.base
    }
}

impl<M: Manifold> Manifold for ScaledManifold<M> {
    fn descriptor(&self) -> ManifoldDescriptor {
        self.base.descriptor()
    }

    fn point(&self, coords: DMatrix<f64>) -> Result<Point> {
        self.base.point(coords)
    }

    fn tangent(&self, base: &Point, components: DMatrix<f64>) -> Result<Tangent> {
        self.base.tangent(base, components)
    }

    fn inner(&self, p: &Point, u: &Tangent, v: &Tangent) -> Result<f64> {
        Ok(self.scale.get() * self.base.inner(p, u, v)?)
    }

    fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        Ok(self.scale.length_factor() * self.base.distance(p, q)?)
    }

    fn exp(&self, p: &Point, v: &Tangent) -> Result<Point> {
        self.base.exp(p, v)
    }

    fn log(&self, p: &Point, q: &Point) -> Result<Tangent> {
        self.base.log(p, q)
    }

    fn transport(&self, p: &Point, q: &Point, v: &Tangent) -> Result<Tangent> {
        self.base.transport(p, q, v)
    }

    fn project(&self, p: &Point, w: &DMatrix<f64>) -> Result<Tangent> {
        self.base.project(p, w)
    }

    fn riemannian_gradient(&self, p: &Point, ambient_gradient: &DMatrix<f64>) -> Result<Tangent> {
        Ok(self
            .base
            .riemannian_gradient(p, ambient_gradient)?
            .scaled(self.scale.gradient_factor()))
    }

    fn gradient_from_base(&self, p: &Point, base_gradient: &Tangent) -> Result<Tangent> {
        Ok(self
            .base
            .gradient_from_base(p, base_gradient)?
            .scaled(self.scale.gradient_factor()))
    }

    fn metric_scale(&self) -> f64 {
        self.scale.get() * self.base.metric_scale()
    }

    fn curve_length(&self, curve: &SampledCurve) -> Result<f64> {
        Ok(self.scale.length_factor() * self.base.curve_length(curve)?)
    }

    fn random_point(&self, rng: &mut dyn RngCore) -> Point {
        self.base.random_point(rng)
    }

    fn random_tangent(&self, p: &Point, rng: &mut dyn RngCore) -> Tangent {
        self.base.random_tangent(p, rng)
    }
}
