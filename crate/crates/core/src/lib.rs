//! Collision-avoidance model for rigid bodies immersed in a fluid.
//!
//! - [`mesh`]: simplicial meshes with named boundary markers
//! - [`fmm`]: fast marching distance fields with narrow-band truncation
//! - [`bodies`]: rigid bodies and the Newton–Euler update
//! - [`collision`]: detection of interacting pairs and repulsive forces
//! - [`dynamics`]: time stepping with a proxy hydrodynamic model

pub mod bodies;
pub mod collision;
pub mod dynamics;
pub mod fmm;
pub mod mesh;

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
