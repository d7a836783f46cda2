//! Extended Kalman filter over `(x, y, heading)` driven by odometry and
//! corrected by edge-map registration.

mod ekf;
mod localizer;

pub use ekf::{predict, update, PoseBelief, Rejection};
pub use localizer::{
    read_diagnostics, run_localization, write_diagnostics, DiagnosticRow, FilterConfig, Localizer,
    StepOutcome, StepReport,
};
