//! Concrete Riemannian manifolds in ambient coordinates.
//!
//! Points and tangent vectors are stored as dense matrices: column vectors for
//! [`Euclidean`] and [`Sphere`], square symmetric matrices for [`Spd`]. Every
//! manifold implements [`Manifold`], the capability set shared with
//! [`crate::ScaledManifold`].

mod euclidean;
mod sphere;
mod spd;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::RngCore;

use crate::error::{GeometryError, Result};

pub use euclidean::Euclidean;
pub use spd::Spd;
pub use sphere::Sphere;

/// Tolerance for base-point equality between a tangent vector and the point it is used at.
pub(crate) const BASE_MATCH_TOL: f64 = 1e-12;
/// Largest correction a renormalization step may apply before it counts as drift.
pub(crate) const RENORMALIZATION_LIMIT: f64 = 1e-9;

/// Builds a column vector from a slice.
pub fn vector(xs: &[f64]) -> DMatrix<f64> {
    DMatrix::from_column_slice(xs.len(), 1, xs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Euclidean,
    Sphere,
    Spd,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Euclidean => "euclidean",
            Family::Sphere => "sphere",
            Family::Spd => "spd",
        }
    }
}

/// Manifold family plus intrinsic dimension.
///
/// The textual form is `family:k`, where `k` is the intrinsic dimension for
/// `euclidean` and `sphere` and the matrix side for `spd` (so `spd:2` is the
/// three-dimensional manifold of 2×2 SPD matrices).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ManifoldDescriptor {
    family: Family,
    intrinsic_dimension: usize,
}

impl ManifoldDescriptor {
    pub fn euclidean(n: usize) -> Result<Self> {
        Self::checked(Family::Euclidean, n)
    }

    pub fn sphere(n: usize) -> Result<Self> {
        Self::checked(Family::Sphere, n)
    }

    /// SPD matrices of side `m`; intrinsic dimension m(m+1)/2.
    pub fn spd(m: usize) -> Result<Self> {
        let n = m
            .checked_add(1)
            .and_then(|m1| m.checked_mul(m1))
            .map(|x| x / 2)
            .ok_or_else(|| GeometryError::Contract(format!("SPD side {m} overflows")))?;
        Self::checked(Family::Spd, n)
    }

    fn checked(family: Family, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(GeometryError::Contract(
                "intrinsic dimension must be at least 1".into(),
            ));
        }
        Ok(Self { family, intrinsic_dimension: n })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn intrinsic_dimension(&self) -> usize {
        self.intrinsic_dimension
    }

    /// Shape `(rows, cols)` of the ambient representation.
    pub fn ambient_shape(&self) -> (usize, usize) {
        match self.family {
            Family::Euclidean => (self.intrinsic_dimension, 1),
            Family::Sphere => (self.intrinsic_dimension + 1, 1),
            Family::Spd => {
                let m = self.matrix_side();
                (m, m)
            }
        }
    }

    /// Number of ambient coordinates (rows × cols).
    pub fn ambient_len(&self) -> usize {
        let (r, c) = self.ambient_shape();
        r * c
    }

    fn matrix_side(&self) -> usize {
        // n = m(m+1)/2  =>  m = (sqrt(8n+1) - 1) / 2
        let n = self.intrinsic_dimension;
        let mut m = (((8 * n + 1) as f64).sqrt() as usize).saturating_sub(1) / 2;
        while m * (m + 1) / 2 < n {
            m += 1;
        }
        m
    }
}

impl fmt::Display for ManifoldDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.family {
            Family::Spd => self.matrix_side(),
            _ => self.intrinsic_dimension,
        };
        write!(f, "{}:{}", self.family.as_str(), k)
    }
}

impl FromStr for ManifoldDescriptor {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self> {
        let (family, dim) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| GeometryError::Parse(format!("expected family:dim, got {s:?}")))?;
        let k: usize = dim
            .trim()
            .parse()
            .map_err(|_| GeometryError::Parse(format!("bad dimension {dim:?} in {s:?}")))?;
        // Keep ambient sizes sane; the matrix-valued code is dense.
        if k > 4096 {
            return Err(GeometryError::Parse(format!("dimension {k} too large")));
        }
        let desc = match family.trim().to_ascii_lowercase().as_str() {
            "euclidean" | "r" => Self::euclidean(k),
            "sphere" | "s" => Self::sphere(k),
            "spd" => Self::spd(k),
            other => return Err(GeometryError::Parse(format!("unknown manifold family {other:?}"))),
        };
        desc.map_err(|e| GeometryError::Parse(e.to_string()))
    }
}

/// A point on a manifold, in ambient coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    descriptor: ManifoldDescriptor,
    coords: DMatrix<f64>,
}

impl Point {
    pub(crate) fn new_unchecked(descriptor: ManifoldDescriptor, coords: DMatrix<f64>) -> Self {
        Self { descriptor, coords }
    }

    pub fn descriptor(&self) -> ManifoldDescriptor {
        self.descriptor
    }

    pub fn coords(&self) -> &DMatrix<f64> {
        &self.coords
    }

    /// Ambient coordinates flattened row-major.
    pub fn flat_coords(&self) -> Vec<f64> {
        self.coords.transpose().iter().copied().collect()
    }
}

/// A tangent vector together with its base point.
#[derive(Debug, Clone, PartialEq)]
pub struct Tangent {
    base: Point,
    components: DMatrix<f64>,
}

impl Tangent {
    pub(crate) fn new_unchecked(base: Point, components: DMatrix<f64>) -> Self {
        Self { base, components }
    }

    pub fn zero(base: &Point) -> Self {
        let (r, c) = base.coords.shape();
        Self { base: base.clone(), components: DMatrix::zeros(r, c) }
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn components(&self) -> &DMatrix<f64> {
        &self.components
    }

    /// `c · self`, same base point.
    pub fn scaled(&self, c: f64) -> Self {
        Self { base: self.base.clone(), components: &self.components * c }
    }

    /// Componentwise sum; both vectors must share a base point.
    pub fn add(&self, other: &Tangent) -> Result<Self> {
        ensure_same_base(&self.base, other)?;
        Ok(Self { base: self.base.clone(), components: &self.components + &other.components })
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|&x| x == 0.0)
    }
}

/// Ordered samples of a curve on one manifold.
#[derive(Debug, Clone)]
pub struct SampledCurve {
    points: Vec<Point>,
    params: Vec<f64>,
}

impl SampledCurve {
    /// Samples at parameters `params`, which must be strictly increasing in `[0, 1]`.
    pub fn new(points: Vec<Point>, params: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(GeometryError::Contract(format!(
                "a sampled curve needs at least 2 samples, got {}",
                points.len()
            )));
        }
        if points.len() != params.len() {
            return Err(GeometryError::Contract("points and parameters differ in length".into()));
        }
        if params.iter().any(|t| !(0.0..=1.0).contains(t))
            || params.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(GeometryError::Contract(
                "curve parameters must be strictly increasing in [0, 1]".into(),
            ));
        }
        let desc = points[0].descriptor;
        if points.iter().any(|p| p.descriptor != desc) {
            return Err(GeometryError::Contract("curve samples lie on different manifolds".into()));
        }
        Ok(Self { points, params })
    }

    /// Uniform parameters `i / (N − 1)`.
    pub fn uniform(points: Vec<Point>) -> Result<Self> {
        let n = points.len();
        let denom = n.saturating_sub(1).max(1) as f64;
        let params = (0..n).map(|i| i as f64 / denom).collect();
        Self::new(points, params)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }
}

/// The capability set every manifold exposes.
///
/// All methods are pure. Implementations validate their inputs and report
/// contract violations as [`GeometryError::Contract`].
pub trait Manifold: Send + Sync {
    fn descriptor(&self) -> ManifoldDescriptor;

    /// Validates ambient coordinates and wraps them as a point.
    fn point(&self, coords: DMatrix<f64>) -> Result<Point>;

    /// Validates components as a tangent vector at `base`.
    fn tangent(&self, base: &Point, components: DMatrix<f64>) -> Result<Tangent>;

    fn inner(&self, p: &Point, u: &Tangent, v: &Tangent) -> Result<f64>;

    fn norm(&self, p: &Point, v: &Tangent) -> Result<f64> {
        Ok(self.inner(p, v, v)?.max(0.0).sqrt())
    }

    fn distance(&self, p: &Point, q: &Point) -> Result<f64>;

    fn exp(&self, p: &Point, v: &Tangent) -> Result<Point>;

    fn log(&self, p: &Point, q: &Point) -> Result<Tangent>;

    /// Parallel transport of `v` from `p` to `q` along the minimizing geodesic.
    fn transport(&self, p: &Point, q: &Point, v: &Tangent) -> Result<Tangent>;

    /// Orthogonal projection of an ambient vector onto `T_p M`.
    fn project(&self, p: &Point, w: &DMatrix<f64>) -> Result<Tangent>;

    /// Converts a Euclidean (ambient) gradient into the Riemannian gradient for this metric.
    fn riemannian_gradient(&self, p: &Point, ambient_gradient: &DMatrix<f64>) -> Result<Tangent>;

    /// Converts the gradient taken with respect to the unscaled base metric into
    /// the gradient for this metric. Identity for unscaled manifolds.
    fn gradient_from_base(&self, p: &Point, base_gradient: &Tangent) -> Result<Tangent> {
        ensure_same_base(p, base_gradient)?;
        Ok(base_gradient.clone())
    }

    /// Total constant factor applied to the base metric (1 for unscaled manifolds).
    fn metric_scale(&self) -> f64 {
        1.0
    }

    /// Sum of geodesic distances between consecutive samples.
    fn curve_length(&self, curve: &SampledCurve) -> Result<f64> {
        curve
            .points()
            .windows(2)
            .try_fold(0.0, |acc, w| Ok(acc + self.distance(&w[0], &w[1])?))
    }

    fn random_point(&self, rng: &mut dyn RngCore) -> Point;

    /// Projection of a standard Gaussian ambient draw onto `T_p M`.
    fn random_tangent(&self, p: &Point, rng: &mut dyn RngCore) -> Tangent;
}

pub(crate) fn ensure_same_base(p: &Point, v: &Tangent) -> Result<()> {
    if p.descriptor != v.base.descriptor || p.coords.shape() != v.base.coords.shape() {
        return Err(GeometryError::Contract(format!(
            "tangent vector lives on {} but the point is on {}",
            v.base.descriptor, p.descriptor
        )));
    }
    let scale = p.coords.norm().max(1.0);
    let diff = (&p.coords - &v.base.coords).amax();
    if diff > BASE_MATCH_TOL * scale {
        return Err(GeometryError::Contract(format!(
            "tangent vector is based at a different point (offset {diff:e})"
        )));
    }
    Ok(())
}

pub(crate) fn ensure_shape(desc: ManifoldDescriptor, m: &DMatrix<f64>, what: &str) -> Result<()> {
    let expected = desc.ambient_shape();
    if m.shape() != expected {
        return Err(GeometryError::Contract(format!(
            "{what} has shape {:?}, expected {:?} for {desc}",
            m.shape(),
            expected
        )));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(GeometryError::Contract(format!("{what} has non-finite entries")));
    }
    Ok(())
}

pub(crate) fn ensure_on(desc: ManifoldDescriptor, p: &Point) -> Result<()> {
    if p.descriptor != desc {
        return Err(GeometryError::Contract(format!(
            "point belongs to {} but the manifold is {desc}",
            p.descriptor
        )));
    }
    Ok(())
}

/// One of the built-in manifolds, selectable at run time.
#[derive(Debug, Clone)]
pub enum BuiltinManifold {
    Euclidean(Euclidean),
    Sphere(Sphere),
    Spd(Spd),
}

impl BuiltinManifold {
    pub fn from_descriptor(desc: ManifoldDescriptor) -> Self {
        match desc.family() {
            Family::Euclidean => Self::Euclidean(Euclidean::new(desc.intrinsic_dimension()).expect("n ≥ 1")),
            Family::Sphere => Self::Sphere(Sphere::new(desc.intrinsic_dimension()).expect("n ≥ 1")),
            Family::Spd => Self::Spd(Spd::new(desc.matrix_side()).expect("m ≥ 1")),
        }
    }
}

impl FromStr for BuiltinManifold {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self> {
        s.parse().map(Self::from_descriptor)
    }
}

macro_rules! dispatch {
    ($self:ident, $m:ident => $e:expr) => {
        match $self {
            BuiltinManifold::Euclidean($m) => $e,
            BuiltinManifold::Sphere($m) => $e,
            BuiltinManifold::Spd($m) => $e,
        }
    };
}

impl Manifold for BuiltinManifold {
    fn descriptor(&self) -> ManifoldDescriptor {
        dispatch!(self, m => m.descriptor())
    }
    fn point(&self, coords: DMatrix<f64>) -> Result<Point> {
        dispatch!(self, m => m.point(coords))
    }
    fn tangent(&self, base: &Point, components: DMatrix<f64>) -> Result<Tangent> {
        dispatch!(self, m => m.tangent(base, components))
    }
    fn inner(&self, p: &Point, u: &Tangent, v: &Tangent) -> Result<f64> {
        dispatch!(self, m => m.inner(p, u, v))
    }
    fn norm(&self, p: &Point, v: &Tangent) -> Result<f64> {
        dispatch!(self, m => m.norm(p, v))
    }
    fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        dispatch!(self, m => m.distance(p, q))
    }
    fn exp(&self, p: &Point, v: &Tangent) -> Result<Point> {
        dispatch!(self, m => m.exp(p, v))
    }
    fn log(&self, p: &Point, q: &Point) -> Result<Tangent> {
        dispatch!(self, m => m.log(p, q))
    }
    fn transport(&self, p: &Point, q: &Point, v: &Tangent) -> Result<Tangent> {
        dispatch!(self, m => m.transport(p, q, v))
    }
    fn project(&self, p: &Point, w: &DMatrix<f64>) -> Result<Tangent> {
        dispatch!(self, m => m.project(p, w))
    }
    fn riemannian_gradient(&self, p: &Point, g: &DMatrix<f64>) -> Result<Tangent> {
        dispatch!(self, m => m.riemannian_gradient(p, g))
    }
    fn random_point(&self, rng: &mut dyn RngCore) -> Point {
        dispatch!(self, m => m.random_point(rng))
    }
    fn random_tangent(&self, p: &Point, rng: &mut dyn RngCore) -> Tangent {
        dispatch!(self, m => m.random_tangent(p, rng))
    }
}

/// Standard Gaussian matrix of the given shape.
pub(crate) fn gaussian(rows: usize, cols: usize, rng: &mut dyn RngCore) -> DMatrix<f64> {
    use rand_distr::{Distribution, StandardNormal};
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}
