//! Frequency functions, boundary straightening and critical-set estimation
//! for harmonic functions that vanish on part of a graph boundary.
//!
//! Points are stored as `Vec3` in every dimension. The vertical (graph)
//! coordinate is always index 2; planar points live in the `x`/`z` plane
//! with the middle component held at zero.

pub mod config;
pub mod conformal2d;
pub mod critical;
pub mod error;
pub mod experiments;
pub mod frequency;
pub mod geometry;
pub mod harmonic;
pub mod quadrature;
pub mod report;
pub mod space;
pub mod straighten;
pub mod suite;

pub use error::{Error, Result};
pub use space::{point2, point3, Mat3, Vec2, Vec3};
