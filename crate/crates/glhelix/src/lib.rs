//! Numerical pipeline for helical multi-vortex solutions of the
//! Ginzburg-Landau equation `Δu + (1-|u|²)u = 0` in ℝ³.
//!
//! Screw symmetry reduces the 3D problem to a planar one. The library builds
//! the product ansatz from the radial degree-one vortex profile, measures its
//! error in weighted norms, solves the projected linear and nonlinear
//! problems on symmetric 2D grids, and solves the reduced scalar equation
//! that selects the vortex half-distance.

pub mod cli;
pub mod error;
pub mod field;
pub mod filaments;
pub mod io;
pub mod modes;
pub mod norms;
pub mod ops;
pub mod profile;
pub mod reduction;
pub mod solver;
pub mod util;

pub use error::{GlError, Result};
pub use field::{ComplexField, FieldKind, Grid2D, Vortex, VortexConfiguration};
pub use profile::VortexProfile;
