//! Differential-drive robot simulation with PID and fuzzy gain-scheduled
//! PID control, automated tuning, and fuzzy color classification.

pub mod color;
pub mod control;
pub mod error;
pub mod fuzzy;
pub mod kinematics;
pub mod plant;
pub mod sim;
pub mod tuning;

pub use error::{Error, Result};
