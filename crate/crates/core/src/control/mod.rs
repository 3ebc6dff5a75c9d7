//! Feedback control: the PID law, fuzzy gain scheduling, decoupled
//! steering/forward wheel commands and the setpoint autopilot.

pub mod autopilot;
pub mod fuzzy_pid;
pub mod pid;

pub use autopilot::{Autopilot, AutopilotConfig, Phase, Setpoint, SetpointId, SetpointTable};
pub use fuzzy_pid::{FuzzyPidController, GainDeltas, GainScales, GainScheduler};
pub use pid::{pwm_saturate, PidController, PidGains, PWM_MAX};

use crate::error::Result;
use crate::kinematics::{ChassisGeometry, WheelSpeeds};

/// Wheel speeds for turning in place at yaw rate `w_target`.
pub fn steering_command(w_target: f64, g: &ChassisGeometry) -> WheelSpeeds {
    let v = w_target * g.track() / 2.0;
    WheelSpeeds { v_l: -v, v_r: v }
}

/// Wheel speeds for driving straight at `v_target`.
pub fn forward_command(v_target: f64) -> WheelSpeeds {
    WheelSpeeds {
        v_l: v_target,
        v_r: v_target,
    }
}

/// Either a plain PID or a fuzzy-scheduled one.
#[derive(Debug, Clone, PartialEq)]
pub enum Regulator {
    Pid(PidController),
    Fuzzy(FuzzyPidController),
}

impl Regulator {
    pub fn update(&mut self, error: f64, dt: f64) -> Result<f64> {
        match self {
            Regulator::Pid(c) => c.update(error, dt),
            Regulator::Fuzzy(c) => c.update(error, dt).map(|(u, _)| u),
        }
    }

    /// Gains used by the most recent update.
    pub fn gains(&self) -> PidGains {
        match self {
            Regulator::Pid(c) => c.gains(),
            Regulator::Fuzzy(c) => c.effective_gains(),
        }
    }

    pub fn reset(&mut self) {
        match self {
            Regulator::Pid(c) => c.reset(),
            Regulator::Fuzzy(c) => c.reset(),
        }
    }
}
