//! Numerical laboratory for the capillary Rayleigh–Taylor problem in the
//! incompressible Navier–Stokes–Korteweg model.
//!
//! The crate is organised bottom-up:
//!
//! - [`profiles`]: equilibrium densities `rho_bar(x3)` and their admissibility conditions,
//! - [`threshold`]: the capillarity threshold `kappa_C` as a generalized eigenvalue problem,
//! - [`spectral`]: Fourier × Chebyshev grids, norms and the divergence-free projection,
//! - [`solver`]: IMEX time integration of the perturbation system,
//! - [`diagnostics`]: energy functionals, monitors and rate fits,
//! - [`config`]: TOML run configuration shared with the command-line tool.

pub mod chebyshev;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod jet;
pub mod profiles;
pub mod solver;
pub mod spectral;
pub mod threshold;

pub use error::{Error, Result};
pub use geometry::DomainGeometry;
pub use profiles::{make_profile, validate_profile, DensityProfile, ProfileSpec};
pub use solver::{Model, NSKState, PhysicsParams, Scheme, Stepper};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/profiles.md")]
    mod profiles {}
    #[doc = include_str!("../../../book/src/threshold.md")]
    mod threshold {}
    #[doc = include_str!("../../../book/src/spectral.md")]
    mod spectral {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    mod diagnostics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/acceptance.md")]
    mod acceptance {}
}
