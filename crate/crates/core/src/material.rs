//! Constitutive law of a hexagonal quasi-crystal in anti-plane shear.
//!
//! The phonon strain `u` and phason strain `w` are both planar vectors. With
//! the hexagonal symmetry the 4×4 elastic matrix collapses to three moduli:
//!
//! ```text
//! sigma = C u + R w
//! rho   = R u + K w
//! f     = ½ (C |u|² + K |w|² + 2R u·w)
//! ```
//!
//! The law is admissible when the block matrix is positive definite, i.e.
//! `C > 0`, `K > 0` and `C K > R²`.

use std::fmt::Debug;

use num_traits::Num;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{half, Vec2};

/// The three moduli of the hexagonal quasi-crystal Hooke's law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialConstants<T> {
    /// Phonon modulus.
    #[serde(rename = "C")]
    pub c: T,
    /// Phason modulus.
    #[serde(rename = "K")]
    pub k: T,
    /// Phonon-phason coupling.
    #[serde(rename = "R")]
    pub r: T,
}

/// Phonon and phason stress vectors at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressPair<T> {
    pub sigma: Vec2<T>,
    pub rho: Vec2<T>,
}

impl<T: Num + Copy> MaterialConstants<T> {
    pub const fn new(c: T, k: T, r: T) -> Self {
        Self { c, k, r }
    }

    /// `C K − R²`, the determinant of the 2×2 modulus matrix.
    pub fn determinant(&self) -> T {
        self.c * self.k - self.r * self.r
    }

    /// Quadratic form `C a² + K b² + 2R a b` of a pair of Burgers moduli.
    pub fn burgers_form(&self, a: T, b: T) -> T {
        let two = T::one() + T::one();
        self.c * a * a + self.k * b * b + two * self.r * a * b
    }

    /// Bilinear form `C a₁a₂ + K b₁b₂ + R a₁b₂ + R a₂b₁` between two
    /// dislocations' Burgers moduli.
    pub fn burgers_cross(&self, a1: T, b1: T, a2: T, b2: T) -> T {
        self.c * a1 * a2 + self.k * b1 * b2 + self.r * a1 * b2 + self.r * a2 * b1
    }

    /// Exchange the roles of phonon and phason moduli.
    pub fn swapped(&self) -> Self {
        Self::new(self.k, self.c, self.r)
    }
}

impl<T: Num + Copy + PartialOrd + Debug> MaterialConstants<T> {
    /// Check `C > 0`, `K > 0` and `C K > R²` with exact comparisons.
    pub fn validate(&self) -> Result<()> {
        let zero = T::zero();
        if !(self.c > zero) {
            return Err(Error::NotPositiveDefinite {
                violated: format!("C > 0 (C = {:?})", self.c),
            });
        }
        if !(self.k > zero) {
            return Err(Error::NotPositiveDefinite {
                violated: format!("K > 0 (K = {:?})", self.k),
            });
        }
        let det = self.determinant();
        if !(det > zero) {
            return Err(Error::NotPositiveDefinite {
                violated: format!("C*K > R^2 (C*K - R^2 = {det:?})"),
            });
        }
        Ok(())
    }
}

/// Free-function form of [`MaterialConstants::validate`].
pub fn validate<T: Num + Copy + PartialOrd + Debug>(m: &MaterialConstants<T>) -> Result<()> {
    m.validate()
}

/// Generalized Hooke's law.
pub fn hooke<T: Num + Copy>(m: &MaterialConstants<T>, u: Vec2<T>, w: Vec2<T>) -> StressPair<T> {
    StressPair {
        sigma: u * m.c + w * m.r,
        rho: u * m.r + w * m.k,
    }
}

/// Free energy density `½(C|u|² + K|w|² + 2R u·w)`.
pub fn energy_density<T: Num + Copy>(m: &MaterialConstants<T>, u: Vec2<T>, w: Vec2<T>) -> T {
    let two = T::one() + T::one();
    half::<T>() * (m.c * u.norm_sq() + m.k * w.norm_sq() + two * m.r * u.dot(w))
}
