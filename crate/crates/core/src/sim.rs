//! Closed-loop driver shared by missions and tuning runs: the controller
//! samples the encoders once per control period and its command reaches the
//! motors a fixed number of periods later.

use std::collections::VecDeque;

use crate::control::{Autopilot, AutopilotConfig, Phase, PidGains, Regulator, SetpointId, SetpointTable};
use crate::error::{Error, Result};
use crate::kinematics::{normalize_angle, Pose};
use crate::plant::{Plant, PlantConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    /// Plant integration step, s.
    pub dt_plant: f64,
    /// Plant steps per control period.
    pub control_every: u32,
    /// Control periods between computing a command and applying it.
    pub latency: u32,
}

impl Default for Timing {
    fn default() -> Self {
        Self {
            dt_plant: 1e-3,
            control_every: 10,
            latency: 2,
        }
    }
}

impl Timing {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_plant > 0.0 && self.dt_plant <= 1e-3) {
            return Err(Error::InvalidArgument(format!(
                "dt_plant must be in (0, 0.001], got {}",
                self.dt_plant
            )));
        }
        if self.control_every == 0 {
            return Err(Error::InvalidArgument(
                "control period must be at least one plant step".into(),
            ));
        }
        Ok(())
    }

    pub fn dt_control(&self) -> f64 {
        self.dt_plant * self.control_every as f64
    }

    /// Number of whole control periods in `duration` seconds.
    pub fn periods(&self, duration: f64) -> usize {
        (duration / self.dt_control()).round().max(0.0) as usize
    }
}

/// Fixed-length delay line between controller and motors.
#[derive(Debug, Clone, PartialEq)]
pub struct Actuator {
    queue: VecDeque<(i32, i32)>,
}

impl Actuator {
    pub fn new(latency: u32) -> Self {
        Self {
            queue: std::iter::repeat_n((0, 0), latency as usize).collect(),
        }
    }

    /// Queues a command and returns the one due now.
    pub fn push(&mut self, cmd: (i32, i32)) -> (i32, i32) {
        self.queue.push_back(cmd);
        self.queue.pop_front().expect("queue holds the new command")
    }
}

/// Runs the plant for one control period under a constant command.
pub fn advance_period(plant: &mut Plant, timing: &Timing, pwm: (i32, i32)) -> Result<()> {
    for _ in 0..timing.control_every {
        plant.step(pwm.0, pwm.1, timing.dt_plant)?;
    }
    Ok(())
}

/// One row per control period, sampled at the start of the period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub time: f64,
    pub pose: Pose,
    pub v_c: f64,
    pub w: f64,
    pub v_l: f64,
    pub v_r: f64,
    pub enc_l: i64,
    pub enc_r: i64,
    /// Commands applied to the motors during this period.
    pub pwm_l: i32,
    pub pwm_r: i32,
    pub gains: PidGains,
    pub phase: Phase,
    pub slope: f64,
}

impl TraceRow {
    pub const HEADER: [&'static str; 18] = [
        "time", "x", "y", "theta", "v_c", "w", "v_l", "v_r", "enc_l", "enc_r", "pwm_l", "pwm_r", "kp", "ki", "kd",
        "state", "slope", "leg",
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mission {
    pub plant: PlantConfig,
    pub timing: Timing,
    pub autopilot: AutopilotConfig,
    pub steering: Regulator,
    pub forward: Regulator,
    pub table: SetpointTable,
    pub legs: Vec<SetpointId>,
    /// Simulated time limit, s.
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Completed { time: f64 },
    Disconnected { time: f64, leg: usize },
    TimedOut { leg: usize },
}

impl Outcome {
    pub fn is_completed(&self) -> bool {
        matches!(self, Outcome::Completed { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionResult {
    pub rows: Vec<TraceRow>,
    /// Index into `Mission::legs` of the leg active in each row.
    pub row_legs: Vec<usize>,
    pub outcome: Outcome,
    pub final_pose: Pose,
    /// Pose the legs would reach if every count target were met exactly.
    pub expected_pose: Pose,
}

impl MissionResult {
    pub fn position_error(&self) -> f64 {
        (self.final_pose.x - self.expected_pose.x).hypot(self.final_pose.y - self.expected_pose.y)
    }

    pub fn heading_error(&self) -> f64 {
        normalize_angle(self.final_pose.theta - self.expected_pose.theta).abs()
    }
}

impl Mission {
    pub fn expected_pose(&self) -> Result<Pose> {
        let metres_per_count =
            std::f64::consts::TAU * self.plant.geometry.wheel_radius() / self.plant.counts_per_rev as f64;
        let mut p = Pose::default();
        for &id in &self.legs {
            let sp = self.table.get(id)?;
            let theta = normalize_angle(p.theta + sp.heading);
            let d = sp.counts as f64 * metres_per_count;
            p = Pose::new(p.x + d * theta.cos(), p.y + d * theta.sin(), theta);
        }
        Ok(p)
    }

    pub fn run(&self) -> Result<MissionResult> {
        self.timing.validate()?;
        if self.legs.is_empty() {
            return Err(Error::InvalidArgument("mission has no legs".into()));
        }
        for &id in &self.legs {
            self.table.get(id)?;
        }
        let expected_pose = self.expected_pose()?;
        let mut plant = Plant::new(self.plant.clone())?;
        let mut pilot = Autopilot::new(self.autopilot.clone(), self.steering.clone(), self.forward.clone());
        let mut act = Actuator::new(self.timing.latency);
        let dt = self.timing.dt_control();
        let g = self.plant.geometry;

        let mut rows = Vec::new();
        let mut row_legs = Vec::new();
        let mut leg = 0;
        let mut outcome = None;
        let (l0, r0) = plant.state().encoders();
        pilot.engage(self.legs[0], &self.table, l0, r0)?;

        for _ in 0..self.timing.periods(self.duration) {
            let st = plant.state().clone();
            let (enc_l, enc_r) = st.encoders();
            if pilot.phase() == Phase::Idle {
                leg += 1;
                if leg == self.legs.len() {
                    outcome = Some(Outcome::Completed { time: st.time });
                    leg -= 1;
                    break;
                }
                pilot.engage(self.legs[leg], &self.table, enc_l, enc_r)?;
            }
            let cmd = pilot.step(enc_l, enc_r, dt)?;
            let applied = act.push(cmd);
            let ws = st.wheel_speeds(&g);
            let tw = st.twist(&g);
            rows.push(TraceRow {
                time: st.time,
                pose: st.pose,
                v_c: tw.v_c,
                w: tw.w,
                v_l: ws.v_l,
                v_r: ws.v_r,
                enc_l,
                enc_r,
                pwm_l: applied.0,
                pwm_r: applied.1,
                gains: pilot.last_gains(),
                phase: pilot.phase(),
                slope: self.plant.terrain.slope_at(st.distance),
            });
            row_legs.push(leg);
            if pilot.phase() == Phase::Disconnected {
                outcome = Some(Outcome::Disconnected { time: st.time, leg });
                break;
            }
            advance_period(&mut plant, &self.timing, applied)?;
        }
        Ok(MissionResult {
            rows,
            row_legs,
            outcome: outcome.unwrap_or(Outcome::TimedOut { leg }),
            final_pose: plant.state().pose,
            expected_pose,
        })
    }
}
