//! Scalar abstraction and small fixed-size linear algebra.
//!
//! Pointwise physics is generic over [`Real`] and also runs on exact rational
//! types where no transcendental function is involved. Meshing and the FE
//! solver work in `f64`.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, Num};
use serde::{Deserialize, Serialize};

/// Floating point scalar accepted by the transcendental parts of the crate.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// One half in any numeric ring with a multiplicative inverse of two.
#[inline]
pub(crate) fn half<T: Num>() -> T {
    T::one() / (T::one() + T::one())
}

/// A 2-vector. Serializes as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(from = "[T; 2]")]
#[serde(bound(deserialize = "T: Deserialize<'de>"))]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T> Vec2<T> {
    pub const fn new(x: T, y: T) -> Self {
        Self { x, y }
    }
}

impl<T> From<[T; 2]> for Vec2<T> {
    fn from([x, y]: [T; 2]) -> Self {
        Self { x, y }
    }
}

impl<T: Serialize> Serialize for Vec2<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        (&self.x, &self.y).serialize(s)
    }
}

impl<T> From<Vec2<T>> for [T; 2] {
    fn from(v: Vec2<T>) -> Self {
        [v.x, v.y]
    }
}

impl<T: Num + Copy> Vec2<T> {
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    /// z-component of the planar cross product.
    pub fn cross(self, other: Self) -> T {
        self.x * other.y - self.y * other.x
    }

    pub fn scale(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }

    /// Rotation by +90 degrees.
    pub fn perp(self) -> Self {
        Self::new(T::zero() - self.y, self.x)
    }

    /// Outer product `self ⊗ other`.
    pub fn outer(self, other: Self) -> [[T; 2]; 2] {
        [
            [self.x * other.x, self.x * other.y],
            [self.y * other.x, self.y * other.y],
        ]
    }
}

impl<T: Float> Vec2<T> {
    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Self) -> T {
        (self - other).norm()
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        Self::new(self.x / n, self.y / n)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl<T: Num + Copy> Add for Vec2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Num + Copy> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Num + Copy> Mul<T> for Vec2<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        self.scale(s)
    }
}

impl<T: Num + Copy> Neg for Vec2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(T::zero() - self.x, T::zero() - self.y)
    }
}

impl<T: Num + Copy> AddAssign for Vec2<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Num + Copy> SubAssign for Vec2<T> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Num + Copy> std::iter::Sum for Vec2<T> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |a, b| a + b)
    }
}

/// A 2×2 tensor stored row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tensor2<T> {
    pub m: [[T; 2]; 2],
}

impl<T: Num + Copy> Tensor2<T> {
    pub fn zero() -> Self {
        Self { m: [[T::zero(); 2]; 2] }
    }

    pub fn identity() -> Self {
        Self {
            m: [[T::one(), T::zero()], [T::zero(), T::one()]],
        }
    }

    pub fn from_rows(m: [[T; 2]; 2]) -> Self {
        Self { m }
    }

    pub fn trace(&self) -> T {
        self.m[0][0] + self.m[1][1]
    }

    pub fn transpose(&self) -> Self {
        Self {
            m: [[self.m[0][0], self.m[1][0]], [self.m[0][1], self.m[1][1]]],
        }
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = *self;
        for row in out.m.iter_mut() {
            for v in row.iter_mut() {
                *v = *v * s;
            }
        }
        out
    }

    /// Tensor-vector product `T·n`.
    pub fn apply(&self, n: Vec2<T>) -> Vec2<T> {
        Vec2::new(
            self.m[0][0] * n.x + self.m[0][1] * n.y,
            self.m[1][0] * n.x + self.m[1][1] * n.y,
        )
    }
}

impl<T: Num + Copy> Add for Tensor2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut out = self;
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] = self.m[i][j] + o.m[i][j];
            }
        }
        out
    }
}

impl<T: Num + Copy> Sub for Tensor2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let mut out = self;
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] = self.m[i][j] - o.m[i][j];
            }
        }
        out
    }
}

impl<T: Num + Copy> From<[[T; 2]; 2]> for Tensor2<T> {
    fn from(m: [[T; 2]; 2]) -> Self {
        Self { m }
    }
}
