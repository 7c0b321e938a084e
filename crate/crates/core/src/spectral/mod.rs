//! Discrete fields on a Fourier × Chebyshev grid: transforms, derivatives,
//! quadrature, Sobolev norms, the divergence-free projection and the
//! snapshot file format.

mod field;
mod grid;
pub mod norms;
pub mod projection;
pub mod snapshot;

pub use field::{diff, wall_max, Axis, Field, WallParity};
pub use grid::{Grid, GridSummary, Mode};
pub use norms::{sobolev_norm, sobolev_norm_spectral, sobolev_norm_vec};
pub use projection::{divergence, project_divfree, Projector};
