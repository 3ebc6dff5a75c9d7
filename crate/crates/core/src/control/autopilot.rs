//! Setpoint autopilot: rotate in place toward the setpoint, then drive
//! straight to it, aborting when the two encoders disagree.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use crate::control::{pwm_saturate, PidGains, Regulator};
use crate::error::{Error, Result};
use crate::kinematics::{normalize_angle, ChassisGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SetpointId {
    LeftFront,
    Left,
    LeftBack,
    Front,
    Back,
    RightFront,
    Right,
    RightBack,
}

impl SetpointId {
    pub const ALL: [SetpointId; 8] = [
        SetpointId::LeftFront,
        SetpointId::Left,
        SetpointId::LeftBack,
        SetpointId::Front,
        SetpointId::Back,
        SetpointId::RightFront,
        SetpointId::Right,
        SetpointId::RightBack,
    ];

    pub fn code(self) -> &'static str {
        match self {
            SetpointId::LeftFront => "O_LF",
            SetpointId::Left => "O_L",
            SetpointId::LeftBack => "O_LB",
            SetpointId::Front => "O_F",
            SetpointId::Back => "O_B",
            SetpointId::RightFront => "O_RF",
            SetpointId::Right => "O_R",
            SetpointId::RightBack => "O_RB",
        }
    }

    /// Heading of the setpoint relative to the current facing, CCW positive.
    pub fn nominal_heading(self) -> f64 {
        match self {
            SetpointId::Front => 0.0,
            SetpointId::LeftFront => FRAC_PI_4,
            SetpointId::Left => FRAC_PI_2,
            SetpointId::LeftBack => 3.0 * FRAC_PI_4,
            SetpointId::Back => PI,
            SetpointId::RightBack => -3.0 * FRAC_PI_4,
            SetpointId::Right => -FRAC_PI_2,
            SetpointId::RightFront => -FRAC_PI_4,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for SetpointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for SetpointId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        SetpointId::ALL
            .into_iter()
            .find(|id| id.code().eq_ignore_ascii_case(t) || id.code()[2..].eq_ignore_ascii_case(t))
            .ok_or_else(|| Error::UnknownSetpoint(t.to_string()))
    }
}

/// Stored distance (encoder counts) and heading of one setpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setpoint {
    pub counts: i64,
    pub heading: f64,
}

impl Setpoint {
    pub fn new(counts: i64, heading: f64) -> Result<Self> {
        if counts <= 0 {
            return Err(Error::InvalidArgument(format!(
                "setpoint counts must be > 0, got {counts}"
            )));
        }
        if !heading.is_finite() {
            return Err(Error::InvalidArgument("setpoint heading must be finite".into()));
        }
        Ok(Self {
            counts,
            heading: normalize_angle(heading),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SetpointTable {
    entries: [Option<Setpoint>; 8],
}

impl SetpointTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// All eight setpoints at their nominal headings; diagonal ones sit
    /// √2 times further than the axis-aligned ones.
    pub fn compass(axis_counts: i64) -> Result<Self> {
        let mut t = Self::new();
        for id in SetpointId::ALL {
            let diagonal = id.nominal_heading().abs() % FRAC_PI_2 != 0.0;
            let counts = if diagonal {
                (axis_counts as f64 * std::f64::consts::SQRT_2).round() as i64
            } else {
                axis_counts
            };
            t.insert(id, Setpoint::new(counts, id.nominal_heading())?);
        }
        Ok(t)
    }

    pub fn insert(&mut self, id: SetpointId, sp: Setpoint) {
        self.entries[id.index()] = Some(sp);
    }

    pub fn get(&self, id: SetpointId) -> Result<Setpoint> {
        self.entries[id.index()].ok_or_else(|| Error::UnknownSetpoint(id.code().to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (SetpointId, Setpoint)> + '_ {
        SetpointId::ALL
            .into_iter()
            .filter_map(|id| self.entries[id.index()].map(|sp| (id, sp)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Idle,
    Rotating,
    Translating,
    Disconnected,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Idle => "idle",
            Phase::Rotating => "rotating",
            Phase::Translating => "translating",
            Phase::Disconnected => "disconnected",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutopilotConfig {
    /// Largest tolerated encoder disagreement, in counts.
    pub watchdog_limit: i64,
    /// Completion band around a count target.
    pub tolerance: i64,
    /// Consecutive in-band periods required before a phase completes.
    pub settle_periods: u32,
    /// Wheel-encoder counts per radian of in-place rotation.
    pub counts_per_radian: f64,
}

impl AutopilotConfig {
    pub fn new(geometry: &ChassisGeometry, counts_per_rev: u32) -> Self {
        let counts_per_wheel_radian = counts_per_rev as f64 / (2.0 * PI);
        Self {
            watchdog_limit: 50,
            tolerance: 5,
            settle_periods: 3,
            counts_per_radian: geometry.pivot_offset() / geometry.wheel_radius() * counts_per_wheel_radian,
        }
    }

    pub fn rotation_counts(&self, heading: f64) -> i64 {
        (heading * self.counts_per_radian).round() as i64
    }
}

/// Autopilot state machine. `Disconnected` persists until [`Autopilot::reset`].
#[derive(Debug, Clone, PartialEq)]
pub struct Autopilot {
    config: AutopilotConfig,
    steering: Regulator,
    forward: Regulator,
    phase: Phase,
    target: Option<SetpointId>,
    rotation_target: i64,
    distance_target: i64,
    start: (i64, i64),
    progress: (i64, i64),
    settled: u32,
    last_gains: PidGains,
}

impl Autopilot {
    pub fn new(config: AutopilotConfig, steering: Regulator, forward: Regulator) -> Self {
        Self {
            config,
            steering,
            forward,
            phase: Phase::Idle,
            target: None,
            rotation_target: 0,
            distance_target: 0,
            start: (0, 0),
            progress: (0, 0),
            settled: 0,
            last_gains: PidGains::default(),
        }
    }

    pub fn config(&self) -> &AutopilotConfig {
        &self.config
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn target(&self) -> Option<SetpointId> {
        self.target
    }

    /// Count targets of the current leg: (rotation on the right wheel, distance).
    pub fn targets(&self) -> (i64, i64) {
        (self.rotation_target, self.distance_target)
    }

    /// Per-wheel encoder progress since the current phase started.
    pub fn progress(&self) -> (i64, i64) {
        self.progress
    }

    /// Gains used by the most recent control update.
    pub fn last_gains(&self) -> PidGains {
        self.last_gains
    }

    /// Clears a disconnect and any active leg.
    pub fn reset(&mut self) {
        self.phase = Phase::Idle;
        self.target = None;
        self.settled = 0;
        self.progress = (0, 0);
        self.steering.reset();
        self.forward.reset();
    }

    /// Starts a leg toward `target`. Only valid while idle.
    pub fn engage(&mut self, target: SetpointId, table: &SetpointTable, enc_l: i64, enc_r: i64) -> Result<()> {
        match self.phase {
            Phase::Idle => {}
            p => {
                return Err(Error::InvalidArgument(format!(
                    "cannot engage {target} while {}",
                    p.name()
                )))
            }
        }
        let sp = table.get(target)?;
        self.target = Some(target);
        self.rotation_target = self.config.rotation_counts(sp.heading);
        self.distance_target = sp.counts;
        self.steering.reset();
        self.forward.reset();
        self.begin_phase(
            if self.rotation_target == 0 {
                Phase::Translating
            } else {
                Phase::Rotating
            },
            enc_l,
            enc_r,
        );
        Ok(())
    }

    fn begin_phase(&mut self, phase: Phase, enc_l: i64, enc_r: i64) {
        self.phase = phase;
        self.start = (enc_l, enc_r);
        self.progress = (0, 0);
        self.settled = 0;
    }

    fn disconnect(&mut self) -> (i32, i32) {
        self.phase = Phase::Disconnected;
        (0, 0)
    }

    fn settle(&mut self, error: i64) -> bool {
        if error.abs() <= self.config.tolerance {
            self.settled += 1;
        } else {
            self.settled = 0;
        }
        self.settled >= self.config.settle_periods
    }

    /// One control period: returns the (left, right) PWM commands.
    pub fn step(&mut self, enc_l: i64, enc_r: i64, dt: f64) -> Result<(i32, i32)> {
        crate::error::check_dt(dt)?;
        self.progress = (enc_l - self.start.0, enc_r - self.start.1);
        let (pl, pr) = self.progress;
        match self.phase {
            Phase::Idle | Phase::Disconnected => Ok((0, 0)),
            Phase::Rotating => {
                // In a pure spin the two wheels turn equal and opposite.
                if (pl + pr).abs() > self.config.watchdog_limit {
                    return Ok(self.disconnect());
                }
                let err = self.rotation_target - pr;
                if self.settle(err) {
                    self.begin_phase(Phase::Translating, enc_l, enc_r);
                    return self.step(enc_l, enc_r, dt);
                }
                let p = pwm_saturate(self.steering.update(err as f64, dt)?);
                self.last_gains = self.steering.gains();
                Ok((-p, p))
            }
            Phase::Translating => {
                if (pl - pr).abs() > self.config.watchdog_limit {
                    return Ok(self.disconnect());
                }
                let err = self.distance_target - pl;
                if self.settle(err) {
                    self.phase = Phase::Idle;
                    return Ok((0, 0));
                }
                let p = pwm_saturate(self.forward.update(err as f64, dt)?);
                self.last_gains = self.forward.gains();
                Ok((p, p))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{PidController, PidGains};

    fn pilot() -> Autopilot {
        let g = ChassisGeometry::reference();
        let reg = |kp| Regulator::Pid(PidController::pwm(PidGains::new(kp, 0.0, 0.0).unwrap()));
        Autopilot::new(AutopilotConfig::new(&g, 360), reg(2.0), reg(1.0))
    }

    #[test]
    fn front_target_skips_rotation() {
        let table = SetpointTable::compass(1000).unwrap();
        let mut a = pilot();
        a.engage(SetpointId::Front, &table, 0, 0).unwrap();
        assert_eq!(a.phase(), Phase::Translating);
        let (l, r) = a.step(0, 0, 0.01).unwrap();
        assert_eq!((l, r), (255, 255));
    }

    #[test]
    fn left_target_rotates_first() {
        let table = SetpointTable::compass(1000).unwrap();
        let mut a = pilot();
        a.engage(SetpointId::Left, &table, 10, 20).unwrap();
        assert_eq!(a.phase(), Phase::Rotating);
        // quarter turn: (0.1 / 0.03) * (360 / 2π) * π/2 = 300 counts
        assert_eq!(a.targets().0, 300);
        let (l, r) = a.step(10, 20, 0.01).unwrap();
        assert!(l < 0 && r > 0 && l == -r);
    }

    #[test]
    fn encoder_discrepancy_disconnects() {
        let table = SetpointTable::compass(1000).unwrap();
        let mut a = pilot();
        a.engage(SetpointId::Front, &table, 0, 0).unwrap();
        a.step(0, 0, 0.01).unwrap();
        assert_eq!(a.step(100, 50, 0.01).unwrap(), (255, 255));
        assert_eq!(a.step(200, 149, 0.01).unwrap(), (0, 0));
        assert_eq!(a.phase(), Phase::Disconnected);
        assert_eq!(a.step(200, 200, 0.01).unwrap(), (0, 0));
        assert!(a.engage(SetpointId::Front, &table, 0, 0).is_err());
        a.reset();
        assert_eq!(a.phase(), Phase::Idle);
    }

    #[test]
    fn rotation_watchdog_uses_sum() {
        let table = SetpointTable::compass(1000).unwrap();
        let mut a = pilot();
        a.engage(SetpointId::Right, &table, 0, 0).unwrap();
        a.step(-40, 40, 0.01).unwrap();
        assert_eq!(a.phase(), Phase::Rotating);
        a.step(30, 30, 0.01).unwrap();
        assert_eq!(a.phase(), Phase::Disconnected);
    }

    #[test]
    fn reaching_both_targets_goes_idle() {
        let table = SetpointTable::compass(1000).unwrap();
        let mut a = pilot();
        a.engage(SetpointId::Left, &table, 0, 0).unwrap();
        for _ in 0..3 {
            a.step(-298, 298, 0.01).unwrap();
        }
        assert_eq!(a.phase(), Phase::Translating);
        for _ in 0..2 {
            a.step(-298 + 997, 298 + 996, 0.01).unwrap();
        }
        assert_eq!(a.phase(), Phase::Translating);
        assert_eq!(a.step(-298 + 997, 298 + 996, 0.01).unwrap(), (0, 0));
        assert_eq!(a.phase(), Phase::Idle);
        assert_eq!(a.step(0, 0, 0.01).unwrap(), (0, 0));
    }

    #[test]
    fn unknown_setpoint_rejected() {
        let mut table = SetpointTable::new();
        table.insert(SetpointId::Front, Setpoint::new(100, 0.0).unwrap());
        let mut a = pilot();
        assert_eq!(
            a.engage(SetpointId::Back, &table, 0, 0),
            Err(Error::UnknownSetpoint("O_B".into()))
        );
        assert!("O_XX".parse::<SetpointId>().is_err());
        assert_eq!("o_rb".parse::<SetpointId>().unwrap(), SetpointId::RightBack);
        assert_eq!("LF".parse::<SetpointId>().unwrap(), SetpointId::LeftFront);
    }

    #[test]
    fn compass_table() {
        let t = SetpointTable::compass(1000).unwrap();
        assert_eq!(t.get(SetpointId::Front).unwrap().counts, 1000);
        assert_eq!(t.get(SetpointId::LeftFront).unwrap().counts, 1414);
        assert_eq!(t.get(SetpointId::Back).unwrap().heading, PI);
        assert!(Setpoint::new(0, 0.0).is_err());
    }
}
