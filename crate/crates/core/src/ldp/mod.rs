//! Large-deviation layer: terminal events, exact discrete adjoints of the
//! skeleton stepper, minimum-action search, crude Monte Carlo and the
//! convergence experiments.

mod adjoint;
mod event;
mod experiments;
mod montecarlo;
mod optimize;

pub use adjoint::{GradientEvaluation, SkeletonProblem};
pub use event::EventSpec;
pub use experiments::{
    level_set_scan, loglog_slope, small_noise_scaling, weak_convergence_experiment, z_vanishing,
    ConvergenceReport, ConvergenceRow, ScalingPoint, ScalingReport, ScanReport,
};
pub use montecarlo::{mc_rare_event, McEstimate};
pub use optimize::{minimize_action, minimize_action_from, ActionResult, OptimizerSettings};
