//! Scalar abstraction for the numerical core.

use nalgebra::RealField;
use num_complex::Complex;

/// Real field usable by the operator, subspace, device and dynamics layers.
///
/// Implemented for `f32` and `f64`. Fixed tolerances quoted in double
/// precision are widened for narrower types through [`Real::tol`].
pub trait Real: RealField + Copy + Default + num_traits::ToPrimitive + num_traits::FromPrimitive {
    /// Machine epsilon of the type, as `f64`.
    const EPSILON: f64;

    fn of(x: f64) -> Self;

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `base` if representable at this precision, otherwise a few thousand ulps.
    fn tol(base: f64) -> Self {
        Self::of(base.max(Self::EPSILON * 4096.0))
    }

    fn cx(re: f64, im: f64) -> Complex<Self> {
        Complex::new(Self::of(re), Self::of(im))
    }
}

impl Real for f32 {
    const EPSILON: f64 = f32::EPSILON as f64;
    fn of(x: f64) -> Self {
        x as f32
    }
}

impl Real for f64 {
    const EPSILON: f64 = f64::EPSILON;
    fn of(x: f64) -> Self {
        x
    }
}

/// `norm`, `arg` and `exp` for complex numbers over any [`Real`].
pub trait ComplexOps<T> {
    fn norm(&self) -> T;
    fn arg(&self) -> T;
    fn exp(&self) -> Self;
}

impl<T: Real> ComplexOps<T> for Complex<T> {
    fn norm(&self) -> T {
        self.re.hypot(self.im)
    }

    fn arg(&self) -> T {
        self.im.atan2(self.re)
    }

    fn exp(&self) -> Self {
        let r = self.re.exp();
        Complex::new(r * self.im.cos(), r * self.im.sin())
    }
}

/// Wrap an angle to `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut y = x.rem_euclid(TAU);
    if y > PI {
        y -= TAU;
    }
    y
}

/// Distance between two angles on the circle of circumference `2 pi`.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}
