//! Truncated geometry, basis functions, collocation transforms and norms.

mod basis;
pub mod grid;
mod state;

pub use basis::{
    build_basis, default_nodes, min_nodes, BasisDescription, BasisSet, Field, ModeIndex,
    ModeRecord,
};
pub use grid::{gauss_legendre, Factor, Family, Grid, Quadrature};
pub use state::{CollocationGrid, SpectralState};
pub(crate) use state::{dot, norm_s_sq};
