//! Water-wave potentials over variable bathymetry: forward solves, the
//! Dirichlet-to-Neumann operator, bathymetry stability certificates and
//! reconstruction of the bottom from surface data.

pub mod certificate;
pub mod elliptic;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod inversion;
pub mod io;
pub mod waves;

pub use error::{Error, Result};
pub use grid::{Grid1D, ScalarField};
