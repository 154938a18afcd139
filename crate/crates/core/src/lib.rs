//! Space–time Trefftz discontinuous Galerkin solver for the one-dimensional
//! Maxwell system
//!
//! ```text
//! dE/dx + d(mu H)/dt = 0,    dH/dx + d(eps E)/dt = J
//! ```
//!
//! on Cartesian space–time meshes made of time slabs. Each slab is solved
//! in turn (`A f_j = R f_{j-1} + b_j`), with upwind coupling in time and
//! centred-plus-penalty fluxes in space.

pub mod analysis;
pub mod assembly;
pub mod basis;
pub mod data;
pub mod error;
pub mod mesh;
pub mod quadrature;
pub mod reference;
pub mod solver;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
