use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),

    #[error("sliding constraint degree {c_f} exceeds workspace DOF {dof}")]
    ConstraintExceedsDof { dof: u32, c_f: u32 },

    #[error("no rule fired")]
    NoRuleFired,

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown setpoint {0}")]
    UnknownSetpoint(String),

    #[error("pwm {0} outside [-255, 255]")]
    PwmOutOfRange(i32),

    #[error("trace too short: {0} samples")]
    TraceTooShort(usize),

    #[error("no ultimate gain found up to kp = {kp_max}")]
    NoUltimateGain { kp_max: f64 },

    #[error("rule label {label} unused on channel {channel}")]
    UnusedRuleLabel { channel: String, label: String },

    #[error("distance {0} cm outside [2, 8]")]
    DistanceOutOfRange(f64),

    #[error("unrecognized color")]
    UnrecognizedColor,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveStep(dt))
    }
}
