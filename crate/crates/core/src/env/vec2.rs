use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Planar vector: `x` points from the thrower toward the catcher, `z` up.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2<T> {
    pub x: T,
    pub z: T,
}

impl<T: Scalar> Vec2<T> {
    pub fn new(x: T, z: T) -> Self {
        Vec2 { x, z }
    }

    pub fn zero() -> Self {
        Vec2::new(T::zero(), T::zero())
    }

    pub fn from_f64(v: [f64; 2]) -> Self {
        Vec2::new(T::lit(v[0]), T::lit(v[1]))
    }

    pub fn norm_sq(self) -> T {
        self.x * self.x + self.z * self.z
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.z)
    }

    pub fn dist(self, other: Self) -> T {
        (self - other).norm()
    }

    pub fn scale(self, c: T) -> Self {
        Vec2::new(self.x * c, self.z * c)
    }

    pub fn hadamard(self, other: Self) -> Self {
        Vec2::new(self.x * other.x, self.z * other.z)
    }

    pub fn clamp_each(self, limit: T) -> Self {
        Vec2::new(self.x.max(-limit).min(limit), self.z.max(-limit).min(limit))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.z.is_finite()
    }
}

impl<T: Scalar> Add for Vec2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Vec2::new(self.x + o.x, self.z + o.z)
    }
}

impl<T: Scalar> AddAssign for Vec2<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Scalar> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Vec2::new(self.x - o.x, self.z - o.z)
    }
}

impl<T: Scalar> Neg for Vec2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Vec2::new(-self.x, -self.z)
    }
}

impl<T: Scalar> Mul<T> for Vec2<T> {
    type Output = Self;
    fn mul(self, c: T) -> Self {
        self.scale(c)
    }
}
