//! Spectral Galerkin simulator and large-deviation engine for the stochastic
//! 3D primitive equations of the ocean on the box (0,1)² × (−1,0).
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral`] — truncated trigonometric basis, Gauss–Legendre collocation,
//!   inner products and fractional norms.
//! * [`dynamics`] — the operators A, B, G, the vertical velocity Φ(v), the
//!   barotropic pressure projection and the barotropic/baroclinic split.
//! * [`forcing`] — noise channels ψ, Wiener increments and deterministic
//!   controls h ∈ T_M.
//! * [`integrators`] — IMEX time stepping of the skeleton, deterministic and
//!   small-noise systems plus the auxiliary linear process Z_ε.
//! * [`ldp`] — rate-function minimisation with exact discrete adjoints, crude
//!   Monte Carlo for terminal events and the convergence experiments.
//!
//! All state is a flat coefficient vector over an orthonormal basis, so the
//! L² inner product is the coefficient dot product.

pub mod dynamics;
pub mod error;
pub mod forcing;
pub mod integrators;
pub mod ldp;
pub mod presets;
pub mod probes;
pub mod spectral;

pub use dynamics::{Dynamics, Physics};
pub use error::{Error, Result};
pub use forcing::{Channel, ControlPath, Growth, NoiseModel, NoiseSpec};
pub use integrators::{IntegratorConfig, Trajectory};
pub use ldp::{ActionResult, EventSpec, OptimizerSettings, SkeletonProblem};
pub use spectral::{build_basis, BasisSet, Field, ModeIndex, SpectralState};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
