use nalgebra::DMatrix;
use rand::RngCore;

use super::{
    ensure_on, ensure_same_base, ensure_shape, gaussian, Manifold, ManifoldDescriptor, Point, Tangent,
    RENORMALIZATION_LIMIT,
};
use crate::error::{GeometryError, Result};

const UNIT_NORM_TOL: f64 = 1e-12;
const TANGENCY_TOL: f64 = 1e-10;
/// `⟨p, q⟩` at or below `−1 + ANTIPODE_MARGIN` has no well-defined logarithm.
const ANTIPODE_MARGIN: f64 = 1e-9;

/// Unit sphere Sⁿ ⊂ ℝⁿ⁺¹ with the round metric induced by the embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sphere {
    desc: ManifoldDescriptor,
}

impl Sphere {
    pub fn new(n: usize) -> Result<Self> {
        Ok(Self { desc: ManifoldDescriptor::sphere(n)? })
    }

    fn check(&self, p: &Point) -> Result<()> {
        ensure_on(self.desc, p)
    }

    fn check_tangent(&self, p: &Point, v: &Tangent) -> Result<()> {
        self.check(p)?;
        ensure_same_base(p, v)
    }

    /// `⟨p, q⟩`, principal angle, and the unit direction from `p` towards `q`.
    fn angle_and_direction(&self, p: &Point, q: &Point) -> (f64, f64, Option<DMatrix<f64>>) {
        let c = p.coords().dot(q.coords());
        let u = q.coords() - p.coords() * c;
        let nu = u.norm();
        let theta = nu.atan2(c);
        let dir = (nu > 0.0).then(|| u / nu);
        (c, theta, dir)
    }

    fn renormalize(&self, x: DMatrix<f64>) -> Result<Point> {
        let nx = x.norm();
        if !nx.is_finite() || (nx - 1.0).abs() > RENORMALIZATION_LIMIT {
            return Err(GeometryError::Consistency(format!(
                "sphere result drifted off the unit sphere (norm {nx})"
            )));
        }
        Ok(Point::new_unchecked(self.desc, x / nx))
    }
}

impl Manifold for Sphere {
    fn descriptor(&self) -> ManifoldDescriptor {
        self.desc
    }

    fn point(&self, coords: DMatrix<f64>) -> Result<Point> {
        ensure_shape(self.desc, &coords, "point")?;
        let n = coords.norm();
        if (n - 1.0).abs() > UNIT_NORM_TOL {
            return Err(GeometryError::Contract(format!("point has norm {n}, expected 1")));
        }
        Ok(Point::new_unchecked(self.desc, coords))
    }

    fn tangent(&self, base: &Point, components: DMatrix<f64>) -> Result<Tangent> {
        self.check(base)?;
        ensure_shape(self.desc, &components, "tangent vector")?;
        let radial = base.coords().dot(&components);
        if radial.abs() > TANGENCY_TOL * components.norm().max(1.0) {
            return Err(GeometryError::Contract(format!(
                "vector is not tangent to the sphere (⟨p, v⟩ = {radial:e})"
            )));
        }
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
        if p.coords() == q.coords() {
            return Ok(0.0);
        }
        Ok(self.angle_and_direction(p, q).1)
    }

    fn exp(&self, p: &Point, v: &Tangent) -> Result<Point> {
        self.check_tangent(p, v)?;
        let theta = v.components().norm();
        if theta == 0.0 {
            return Ok(p.clone());
        }
        let x = p.coords() * theta.cos() + v.components() * (theta.sin() / theta);
        self.renormalize(x)
    }

    fn log(&self, p: &Point, q: &Point) -> Result<Tangent> {
        self.check(p)?;
        self.check(q)?;
        if p.coords() == q.coords() {
            return Ok(Tangent::zero(p));
        }
        let (c, theta, dir) = self.angle_and_direction(p, q);
        if c <= -1.0 + ANTIPODE_MARGIN {
            return Err(GeometryError::Domain(
                "logarithm undefined for (nearly) antipodal points".into(),
            ));
        }
        Ok(match dir {
            Some(e) => Tangent::new_unchecked(p.clone(), e * theta),
            None => Tangent::zero(p),
        })
    }

    fn transport(&self, p: &Point, q: &Point, v: &Tangent) -> Result<Tangent> {
        self.check_tangent(p, v)?;
        let u = self.log(p, q)?;
        let theta = u.components().norm();
        if theta == 0.0 {
            return Ok(Tangent::new_unchecked(q.clone(), v.components().clone()));
        }
        let e = u.components() / theta;
        let a = e.dot(v.components());
        let out = v.components() + &e * ((theta.cos() - 1.0) * a) - p.coords() * (theta.sin() * a);
        Ok(Tangent::new_unchecked(q.clone(), out))
    }

    fn project(&self, p: &Point, w: &DMatrix<f64>) -> Result<Tangent> {
        self.check(p)?;
        ensure_shape(self.desc, w, "ambient vector")?;
        let radial = p.coords().dot(w);
        Ok(Tangent::new_unchecked(p.clone(), w - p.coords() * radial))
    }

    fn riemannian_gradient(&self, p: &Point, ambient_gradient: &DMatrix<f64>) -> Result<Tangent> {
        self.project(p, ambient_gradient)
    }

    fn random_point(&self, rng: &mut dyn RngCore) -> Point {
        let (r, c) = self.desc.ambient_shape();
        loop {
            let g = gaussian(r, c, rng);
            let n = g.norm();
            if n > 1e-6 {
                return Point::new_unchecked(self.desc, g / n);
            }
        }
    }

    fn random_tangent(&self, p: &Point, rng: &mut dyn RngCore) -> Tangent {
        let (r, c) = self.desc.ambient_shape();
        let g = gaussian(r, c, rng);
        self.project(p, &g).expect("point belongs to this sphere")
    }
}
