//! Riemannian computation under constant metric scaling `g̃ = λg`.
//!
//! - [`geometry`]: Euclidean space, the unit sphere, and SPD matrices with the
//!   affine-invariant metric, all behind the [`Manifold`] trait.
//! - [`scaled`]: [`ScaledManifold`], which rescales measurements and forwards
//!   geodesic machinery to the base manifold.
//! - [`chart`]: coordinate charts with finite-difference Christoffel symbols
//!   and RK4 geodesics, used to check the connection numerically.
//! - [`optimizer`]: gradient descent with exponential-map updates, Fréchet
//!   means, and closed-form scale calibration.

pub mod chart;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod optimizer;
pub mod scaled;

pub use chart::{geodesic_integrate, Chart, ChristoffelField, CoordinateCurve, GeodesicPath};
pub use error::{GeometryError, Result};
pub use geometry::{
    vector, BuiltinManifold, Euclidean, Family, Manifold, ManifoldDescriptor, Point, SampledCurve, Spd, Sphere,
    Tangent,
};
pub use optimizer::{
    calibrate_scale, equivalence_check, frechet_objective, joint_descent, riemannian_gd, Objective,
    OptimizerConfig, OptimizerTrace, StopReason,
};
pub use scaled::{volume_scale_factor, ScaleFactor, ScaledManifold};
