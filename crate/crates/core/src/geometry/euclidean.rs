use nalgebra::DMatrix;
use rand::RngCore;

use super::{ensure_on, ensure_same_base, ensure_shape, gaussian, Manifold, ManifoldDescriptor, Point, Tangent};
use crate::error::Result;

/// Flat space ℝⁿ with the dot product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Euclidean {
    desc: ManifoldDescriptor,
}

impl Euclidean {
    pub fn new(n: usize) -> Result<Self> {
        Ok(Self { desc: ManifoldDescriptor::euclidean(n)? })
    }

    fn check(&self, p: &Point) -> Result<()> {
        ensure_on(self.desc, p)
    }

    fn check_tangent(&self, p: &Point, v: &Tangent) -> Result<()> {
        self.check(p)?;
        ensure_same_base(p, v)
    }
}

impl Manifold for Euclidean {
    fn descriptor(&self) -> ManifoldDescriptor {
        self.desc
    }

    fn point(&self, coords: DMatrix<f64>) -> Result<Point> {
        ensure_shape(self.desc, &coords, "point")?;
        Ok(Point::new_unchecked(self.desc, coords))
    }

    fn tangent(&self, base: &Point, components: DMatrix<f64>) -> Result<Tangent> {
        self.check(base)?;
        ensure_shape(self.desc, &components, "tangent vector")?;
        Ok(Tangent::new_unchecked(base.clone(), components))
    }

    fn inner(&self, p: &Point, u: &Tangent, v: &Tangent) -> Result<f64> {
        self.check_tangent(p, u)?;
        self.check_tangent(p, v)?;
        Ok(u.components().dot(v.components()))
    }

    fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        self.check(p)?;
        self.check(q)?;
        Ok((q.coords() - p.coords()).norm())
    }

    fn exp(&self, p: &Point, v: &Tangent) -> Result<Point> {
        self.check_tangent(p, v)?;
        Ok(Point::new_unchecked(self.desc, p.coords() + v.components()))
    }

    fn log(&self, p: &Point, q: &Point) -> Result<Tangent> {
        self.check(p)?;
        self.check(q)?;
        Ok(Tangent::new_unchecked(p.clone(), q.coords() - p.coords()))
    }

    fn transport(&self, p: &Point, q: &Point, v: &Tangent) -> Result<Tangent> {
        self.check_tangent(p, v)?;
        self.check(q)?;
        Ok(Tangent::new_unchecked(q.clone(), v.components().clone()))
    }

    fn project(&self, p: &Point, w: &DMatrix<f64>) -> Result<Tangent> {
        self.check(p)?;
        ensure_shape(self.desc, w, "ambient vector")?;
        Ok(Tangent::new_unchecked(p.clone(), w.clone()))
    }

    fn riemannian_gradient(&self, p: &Point, ambient_gradient: &DMatrix<f64>) -> Result<Tangent> {
        self.project(p, ambient_gradient)
    }

    fn random_point(&self, rng: &mut dyn RngCore) -> Point {
        let (r, c) = self.desc.ambient_shape();
        Point::new_unchecked(self.desc, gaussian(r, c, rng))
    }

    fn random_tangent(&self, p: &Point, rng: &mut dyn RngCore) -> Tangent {
        let (r, c) = self.desc.ambient_shape();
        Tangent::new_unchecked(p.clone(), gaussian(r, c, rng))
    }
}
