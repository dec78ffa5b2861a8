//! Screw dislocations in a hexagonal quasi-crystal under anti-plane shear.
//!
//! The pointwise physics in [`material`], [`fields`] and [`forces`] is generic
//! over the scalar type. Meshing, the finite-element solver and the energy
//! integrals work in `f64`; the aliases below name the `f64` instances.

pub mod config;
pub mod energy;
pub mod error;
pub mod experiment;
pub mod fields;
pub mod forces;
pub mod geometry;
pub mod material;
pub mod mesh;
pub mod quadrature;
pub mod scalar;
pub mod solver;

pub use error::{Error, ErrorClass, Result};
pub use geometry::{Disc, Domain, Outer, Point};
pub use mesh::{Mesh, Tag};
pub use quadrature::QuadratureSpec;
pub use scalar::{Real, Tensor2, Vec2};

pub type Material = material::MaterialConstants<f64>;
pub type Dislocation = fields::Dislocation<f64>;
