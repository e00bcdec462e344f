use nalgebra::DMatrix;
use rand::{Rng, RngCore};

use super::{
    ensure_on, ensure_same_base, ensure_shape, gaussian, Manifold, ManifoldDescriptor, Point, Tangent,
    RENORMALIZATION_LIMIT,
};
use crate::error::{GeometryError, Result};
use crate::linalg::{
    min_eigenvalue, relative_asymmetry, spd_inv_sqrt, spd_inverse, spd_log, spd_sqrt, sym_exp, symmetrize,
};

const SYMMETRY_TOL: f64 = 1e-12;

/// Symmetric positive-definite `m × m` matrices with the affine-invariant metric
/// `⟨U, V⟩_P = tr(P⁻¹ U P⁻¹ V)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Spd {
    desc: ManifoldDescriptor,
    side: usize,
}

/// `P^{1/2}` and `P^{-1/2}` for a base point.
struct Whitening {
    sqrt: DMatrix<f64>,
    inv_sqrt: DMatrix<f64>,
}

impl Whitening {
    fn of(p: &Point) -> Result<Self> {
        Ok(Self { sqrt: spd_sqrt(p.coords())?, inv_sqrt: spd_inv_sqrt(p.coords())? })
    }

    /// `P^{-1/2} A P^{-1/2}`
    fn whiten(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        symmetrize(&(&self.inv_sqrt * a * &self.inv_sqrt))
    }

    /// `P^{1/2} A P^{1/2}`
    fn color(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        &self.sqrt * a * &self.sqrt
    }
}

impl Spd {
    /// SPD matrices of side `m`.
    pub fn new(m: usize) -> Result<Self> {
        Ok(Self { desc: ManifoldDescriptor::spd(m)?, side: m })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    fn check(&self, p: &Point) -> Result<()> {
        ensure_on(self.desc, p)
    }

    fn check_tangent(&self, p: &Point, v: &Tangent) -> Result<()> {
        self.check(p)?;
        ensure_same_base(p, v)
    }

    /// Re-symmetrizes an operation result, rejecting drift beyond the renormalization limit.
    fn resymmetrize(&self, x: DMatrix<f64>) -> Result<DMatrix<f64>> {
        let asym = relative_asymmetry(&x);
        if !asym.is_finite() || asym > RENORMALIZATION_LIMIT {
            return Err(GeometryError::Consistency(format!(
                "SPD result lost symmetry (relative asymmetry {asym:e})"
            )));
        }
        Ok(symmetrize(&x))
    }
}

impl Manifold for Spd {
    fn descriptor(&self) -> ManifoldDescriptor {
        self.desc
    }

    fn point(&self, coords: DMatrix<f64>) -> Result<Point> {
        ensure_shape(self.desc, &coords, "point")?;
        let asym = relative_asymmetry(&coords);
        if asym > SYMMETRY_TOL {
            return Err(GeometryError::Contract(format!("matrix is not symmetric ({asym:e})")));
        }
        let lo = min_eigenvalue(&coords);
        if lo.is_nan() || lo <= 0.0 {
            return Err(GeometryError::Domain(format!(
                "matrix is not positive definite (min eigenvalue {lo:e})"
            )));
        }
        Ok(Point::new_unchecked(self.desc, coords))
    }

    fn tangent(&self, base: &Point, components: DMatrix<f64>) -> Result<Tangent> {
        self.check(base)?;
        ensure_shape(self.desc, &components, "tangent vector")?;
        let asym = relative_asymmetry(&components);
        if asym > SYMMETRY_TOL {
            return Err(GeometryError::Contract(format!(
                "tangent matrix is not symmetric ({asym:e})"
            )));
        }
        Ok(Tangent::new_unchecked(base.clone(), components))
    }

    fn inner(&self, p: &Point, u: &Tangent, v: &Tangent) -> Result<f64> {
        self.check_tangent(p, u)?;
        self.check_tangent(p, v)?;
        let pinv = spd_inverse(p.coords())?;
        let a = &pinv * u.components();
        let b = &pinv * v.components();
        // tr(AB) = Σ_ij A_ij B_ji
        Ok(a.component_mul(&b.transpose()).sum())
    }

    fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        self.check(p)?;
        self.check(q)?;
        if p.coords() == q.coords() {
            return Ok(0.0);
        }
        let w = Whitening::of(p)?;
        Ok(spd_log(&w.whiten(q.coords()))?.norm())
    }

    fn exp(&self, p: &Point, v: &Tangent) -> Result<Point> {
        self.check_tangent(p, v)?;
        if v.is_zero() {
            return Ok(p.clone());
        }
        let w = Whitening::of(p)?;
        let x = self.resymmetrize(w.color(&sym_exp(&w.whiten(v.components()))?))?;
        if x.clone().cholesky().is_none() {
            return Err(GeometryError::Numerical(
                "exponential map left the SPD cone (underflow)".into(),
            ));
        }
        Ok(Point::new_unchecked(self.desc, x))
    }

    fn log(&self, p: &Point, q: &Point) -> Result<Tangent> {
        self.check(p)?;
        self.check(q)?;
        if p.coords() == q.coords() {
            return Ok(Tangent::zero(p));
        }
        let w = Whitening::of(p)?;
        let v = self.resymmetrize(w.color(&spd_log(&w.whiten(q.coords()))?))?;
        Ok(Tangent::new_unchecked(p.clone(), v))
    }

    fn transport(&self, p: &Point, q: &Point, v: &Tangent) -> Result<Tangent> {
        self.check_tangent(p, v)?;
        self.check(q)?;
        if p.coords() == q.coords() {
            return Ok(Tangent::new_unchecked(q.clone(), v.components().clone()));
        }
        // E = (Q P⁻¹)^{1/2} = P^{1/2} (P^{-1/2} Q P^{-1/2})^{1/2} P^{-1/2}
        let w = Whitening::of(p)?;
        let mid = spd_sqrt(&w.whiten(q.coords()))?;
        let e = &w.sqrt * mid * &w.inv_sqrt;
        let out = self.resymmetrize(&e * v.components() * e.transpose())?;
        Ok(Tangent::new_unchecked(q.clone(), out))
    }

    fn project(&self, p: &Point, w: &DMatrix<f64>) -> Result<Tangent> {
        self.check(p)?;
        ensure_shape(self.desc, w, "ambient matrix")?;
        Ok(Tangent::new_unchecked(p.clone(), symmetrize(w)))
    }

    fn riemannian_gradient(&self, p: &Point, ambient_gradient: &DMatrix<f64>) -> Result<Tangent> {
        self.check(p)?;
        ensure_shape(self.desc, ambient_gradient, "ambient gradient")?;
        let g = p.coords() * symmetrize(ambient_gradient) * p.coords();
        Ok(Tangent::new_unchecked(p.clone(), symmetrize(&g)))
    }

    fn random_point(&self, rng: &mut dyn RngCore) -> Point {
        let m = self.side;
        let mut a = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let x: f64 = rng.random_range(-1.0..=1.0);
                a[(i, j)] = x;
                a[(j, i)] = x;
            }
        }
        let p = sym_exp(&a).expect("finite symmetric input");
        Point::new_unchecked(self.desc, p)
    }

    fn random_tangent(&self, p: &Point, rng: &mut dyn RngCore) -> Tangent {
        let g = gaussian(self.side, self.side, rng);
        Tangent::new_unchecked(p.clone(), symmetrize(&g))
    }
}
