//! Scenario file parser.
//!
//! Grammar, one item per line:
//!
//! ```text
//! # comment, also allowed after a value
//! [section]
//! key = value
//! ```
//!
//! Sections and their keys:
//!
//! | section        | keys |
//! |----------------|------|
//! | `[plant]`      | `preset` (`alex-ref`), `r_a`, `k_t`, `k_e`, `j`, `b`, `v_max`, `gear_ratio`, `mass`, `counts_per_rev`, `rolling_resistance`, `load_split`, `encoder_noise`, `load_noise`, `seed` |
//! | `[chassis]`    | `track`, `wheel_radius` |
//! | `[terrain]`    | `knot = s, slope` (repeated, `s` in metres of travel, slope in radians) |
//! | `[timing]`     | `dt_plant`, `control_every`, `latency` |
//! | `[controller]` | `type` (`pid` or `fuzzy-pid`), `kp`, `ki`, `kd`, `steer_kp`, `steer_ki`, `steer_kd`, `scale_kp`, `scale_ki`, `scale_kd`, `k_e`, `k_ec` |
//! | `[autopilot]`  | `watchdog_limit`, `tolerance`, `settle_periods` |
//! | `[setpoints]`  | `compass = counts`, or `<id> = counts, heading_deg` per setpoint (`O_F`, `O_LF`, ...) |
//! | `[mission]`    | `legs = O_L, O_F, ...`, `duration` |
//! | `[tune]`       | `axis` (`forward` or `steering`), `setpoint`, `duration`, `zn_kind`, `kp_start`, `kp_factor`, `kp_max`, `ki_start`, `ki_max`, `kd_start`, `kd_max`, `sse_fraction`, `skip_ki` |
//!
//! Keys other than `knot` and per-setpoint entries may appear once.

use std::collections::HashSet;
use std::str::FromStr;

use diffbot::control::{
    AutopilotConfig, FuzzyPidController, GainScales, GainScheduler, PidController, PidGains, Regulator, Setpoint,
    SetpointId, SetpointTable, PWM_MAX,
};
use diffbot::kinematics::ChassisGeometry;
use diffbot::plant::{PlantConfig, TerrainProfile};
use diffbot::sim::{Mission, Timing};
use diffbot::tuning::{Axis, NewMethodConfig, StepScenario, ZnKind};
use diffbot::{Error, Result};

/// Forward-loop gains produced by the new method on the reference step.
pub const DEFAULT_FORWARD: PidGains = PidGains {
    kp: 0.8559654235839844,
    ki: 0.1024,
    kd: 0.0,
};

/// Steering-loop gains produced by the new method with the ki step skipped.
pub const DEFAULT_STEERING: PidGains = PidGains {
    kp: 0.8559654235839844,
    ki: 0.0,
    kd: 0.004,
};

pub const DEFAULT_SCALES: GainScales = GainScales {
    kp: 0.2,
    ki: 10.0,
    kd: 0.01,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerKind {
    Pid,
    FuzzyPid,
}

impl FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pid" => Ok(ControllerKind::Pid),
            "fuzzy-pid" => Ok(ControllerKind::FuzzyPid),
            _ => Err(Error::InvalidArgument(format!("unknown controller type {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig {
    pub kind: ControllerKind,
    pub forward: PidGains,
    pub steering: PidGains,
    pub scales: GainScales,
    pub k_e: f64,
    pub k_ec: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            kind: ControllerKind::Pid,
            forward: DEFAULT_FORWARD,
            steering: DEFAULT_STEERING,
            scales: DEFAULT_SCALES,
            k_e: 0.01,
            k_ec: 0.001,
        }
    }
}

impl ControllerConfig {
    pub fn regulator(&self, base: PidGains) -> Regulator {
        match self.kind {
            ControllerKind::Pid => Regulator::Pid(PidController::pwm(base)),
            ControllerKind::FuzzyPid => Regulator::Fuzzy(FuzzyPidController::new(
                base,
                self.scales,
                GainScheduler::standard(self.k_e, self.k_ec),
                PWM_MAX as f64,
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneConfig {
    pub axis: Axis,
    pub setpoint: f64,
    pub duration: f64,
    pub zn_kind: ZnKind,
    pub method: NewMethodConfig,
}

impl Default for TuneConfig {
    fn default() -> Self {
        let r = StepScenario::reference();
        Self {
            axis: r.axis,
            setpoint: r.setpoint,
            duration: r.duration,
            zn_kind: ZnKind::Pid,
            method: NewMethodConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub plant: PlantConfig,
    pub timing: Timing,
    pub controller: ControllerConfig,
    pub watchdog_limit: Option<i64>,
    pub tolerance: Option<i64>,
    pub settle_periods: Option<u32>,
    pub table: SetpointTable,
    pub legs: Vec<SetpointId>,
    pub duration: f64,
    pub tune: TuneConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            plant: PlantConfig {
                rolling_resistance: diffbot::tuning::REFERENCE_ROLLING_RESISTANCE,
                ..PlantConfig::reference()
            },
            timing: Timing::default(),
            controller: ControllerConfig::default(),
            watchdog_limit: None,
            tolerance: None,
            settle_periods: None,
            table: SetpointTable::compass(1000).expect("positive counts"),
            legs: Vec::new(),
            duration: 20.0,
            tune: TuneConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn autopilot(&self) -> AutopilotConfig {
        let mut a = AutopilotConfig::new(&self.plant.geometry, self.plant.counts_per_rev);
        if let Some(v) = self.watchdog_limit {
            a.watchdog_limit = v;
        }
        if let Some(v) = self.tolerance {
            a.tolerance = v;
        }
        if let Some(v) = self.settle_periods {
            a.settle_periods = v;
        }
        a
    }

    pub fn mission(&self) -> Result<Mission> {
        if self.legs.is_empty() {
            return Err(Error::InvalidArgument("[mission] legs is required".into()));
        }
        Ok(Mission {
            plant: self.plant.clone(),
            timing: self.timing,
            autopilot: self.autopilot(),
            steering: self.controller.regulator(self.controller.steering),
            forward: self.controller.regulator(self.controller.forward),
            table: self.table.clone(),
            legs: self.legs.clone(),
            duration: self.duration,
        })
    }

    pub fn step_scenario(&self) -> StepScenario {
        StepScenario {
            plant: self.plant.clone(),
            timing: self.timing,
            axis: self.tune.axis,
            setpoint: self.tune.setpoint,
            duration: self.tune.duration,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.validate()?;
        self.timing.validate()?;
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "duration must be > 0, got {}",
                self.duration
            )));
        }
        for &id in &self.legs {
            self.table.get(id)?;
        }
        self.step_scenario().validate()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut p = Parser::default();
        let mut knots = Vec::new();
        let mut chassis = (None, None);
        // Last line of each section, for errors found once it is complete.
        let (mut chassis_line, mut terrain_line) = (0, 0);
        let mut explicit: Vec<(SetpointId, Setpoint)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            p.line = line;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim();
                if !SECTIONS.contains(&name) {
                    return Err(p.err(format!("unknown section [{name}]")));
                }
                if !p.sections.insert(name.to_string()) {
                    return Err(p.err(format!("section [{name}] repeated")));
                }
                p.section = name.to_string();
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(p.err(format!("expected `key = value`, found {content:?}")));
            };
            let (key, value) = (key.trim(), value.trim());
            if p.section.is_empty() {
                return Err(p.err(format!("key {key:?} outside any section")));
            }
            if key != "knot" && !p.keys.insert(format!("{}.{key}", p.section)) {
                return Err(p.err(format!("key {key:?} repeated in [{}]", p.section)));
            }
            let section = p.section.clone();
            match (section.as_str(), key) {
                ("plant", "preset") => {
                    if value != "alex-ref" {
                        return Err(p.err(format!("unknown plant preset {value:?}")));
                    }
                }
                ("plant", "r_a") => cfg.plant.motor.r_a = p.num(value)?,
                ("plant", "k_t") => cfg.plant.motor.k_t = p.num(value)?,
                ("plant", "k_e") => cfg.plant.motor.k_e = p.num(value)?,
                ("plant", "j") => cfg.plant.motor.j = p.num(value)?,
                ("plant", "b") => cfg.plant.motor.b = p.num(value)?,
                ("plant", "v_max") => cfg.plant.motor.v_max = p.num(value)?,
                ("plant", "gear_ratio") => cfg.plant.motor.gear_ratio = p.num(value)?,
                ("plant", "mass") => cfg.plant.mass = p.num(value)?,
                ("plant", "counts_per_rev") => cfg.plant.counts_per_rev = p.int(value)?,
                ("plant", "rolling_resistance") => cfg.plant.rolling_resistance = p.num(value)?,
                ("plant", "load_split") => cfg.plant.load_split = p.num(value)?,
                ("plant", "encoder_noise") => cfg.plant.noise.encoder_sigma = p.num(value)?,
                ("plant", "load_noise") => cfg.plant.noise.load_sigma = p.num(value)?,
                ("plant", "seed") => cfg.plant.seed = p.int(value)?,
                ("chassis", "track") => {
                    chassis.0 = Some(p.num(value)?);
                    chassis_line = line;
                }
                ("chassis", "wheel_radius") => {
                    chassis.1 = Some(p.num(value)?);
                    chassis_line = line;
                }
                ("terrain", "knot") => {
                    let v = p.list(value, 2)?;
                    knots.push((v[0], v[1]));
                    terrain_line = line;
                }
                ("timing", "dt_plant") => cfg.timing.dt_plant = p.num(value)?,
                ("timing", "control_every") => cfg.timing.control_every = p.int(value)?,
                ("timing", "latency") => cfg.timing.latency = p.int(value)?,
                ("controller", "type") => cfg.controller.kind = p.parsed(value)?,
                ("controller", "kp") => cfg.controller.forward.kp = p.gain(value)?,
                ("controller", "ki") => cfg.controller.forward.ki = p.gain(value)?,
                ("controller", "kd") => cfg.controller.forward.kd = p.gain(value)?,
                ("controller", "steer_kp") => cfg.controller.steering.kp = p.gain(value)?,
                ("controller", "steer_ki") => cfg.controller.steering.ki = p.gain(value)?,
                ("controller", "steer_kd") => cfg.controller.steering.kd = p.gain(value)?,
                ("controller", "scale_kp") => cfg.controller.scales.kp = p.gain(value)?,
                ("controller", "scale_ki") => cfg.controller.scales.ki = p.gain(value)?,
                ("controller", "scale_kd") => cfg.controller.scales.kd = p.gain(value)?,
                ("controller", "k_e") => cfg.controller.k_e = p.gain(value)?,
                ("controller", "k_ec") => cfg.controller.k_ec = p.gain(value)?,
                ("autopilot", "watchdog_limit") => cfg.watchdog_limit = Some(p.int(value)?),
                ("autopilot", "tolerance") => cfg.tolerance = Some(p.int(value)?),
                ("autopilot", "settle_periods") => cfg.settle_periods = Some(p.int(value)?),
                ("setpoints", "compass") => {
                    let n: i64 = p.int(value)?;
                    cfg.table = SetpointTable::compass(n).map_err(|e| p.err(e.to_string()))?;
                }
                ("setpoints", id) => {
                    let id: SetpointId = p.parsed(id)?;
                    let v = p.list(value, 2)?;
                    if v[0].fract() != 0.0 {
                        return Err(p.err(format!("setpoint counts must be whole, got {}", v[0])));
                    }
                    let sp = Setpoint::new(v[0] as i64, v[1].to_radians()).map_err(|e| p.err(e.to_string()))?;
                    explicit.push((id, sp));
                }
                ("mission", "legs") => {
                    cfg.legs = value.split(',').map(|s| p.parsed(s.trim())).collect::<Result<_>>()?;
                }
                ("mission", "duration") => cfg.duration = p.num(value)?,
                ("tune", "axis") => {
                    cfg.tune.axis = match value {
                        "forward" => Axis::Forward,
                        "steering" => Axis::Steering,
                        _ => return Err(p.err(format!("unknown axis {value:?}"))),
                    }
                }
                ("tune", "setpoint") => cfg.tune.setpoint = p.num(value)?,
                ("tune", "duration") => cfg.tune.duration = p.num(value)?,
                ("tune", "zn_kind") => cfg.tune.zn_kind = p.parsed(value)?,
                ("tune", "kp_start") => cfg.tune.method.kp_start = p.num(value)?,
                ("tune", "kp_factor") => cfg.tune.method.kp_factor = p.num(value)?,
                ("tune", "kp_max") => cfg.tune.method.kp_max = p.num(value)?,
                ("tune", "ki_start") => cfg.tune.method.ki_start = p.num(value)?,
                ("tune", "ki_max") => cfg.tune.method.ki_max = p.num(value)?,
                ("tune", "kd_start") => cfg.tune.method.kd_start = p.num(value)?,
                ("tune", "kd_max") => cfg.tune.method.kd_max = p.num(value)?,
                ("tune", "sse_fraction") => cfg.tune.method.sse_fraction = p.num(value)?,
                ("tune", "skip_ki") => cfg.tune.method.skip_ki = p.parsed(value)?,
                (s, k) => return Err(p.err(format!("unknown key {k:?} in [{s}]"))),
            }
        }

        if chassis != (None, None) {
            let g = cfg.plant.geometry;
            cfg.plant.geometry =
                ChassisGeometry::new(chassis.0.unwrap_or(g.track()), chassis.1.unwrap_or(g.wheel_radius())).map_err(
                    |e| Error::Parse {
                        line: chassis_line,
                        msg: e.to_string(),
                    },
                )?;
        }
        if !knots.is_empty() {
            cfg.plant.terrain = TerrainProfile::new(knots).map_err(|e| Error::Parse {
                line: terrain_line,
                msg: e.to_string(),
            })?;
        }
        for (id, sp) in explicit {
            cfg.table.insert(id, sp);
        }
        Ok(cfg)
    }
}

const SECTIONS: [&str; 9] = [
    "plant",
    "chassis",
    "terrain",
    "timing",
    "controller",
    "autopilot",
    "setpoints",
    "mission",
    "tune",
];

#[derive(Default)]
struct Parser {
    line: usize,
    section: String,
    sections: HashSet<String>,
    keys: HashSet<String>,
}

impl Parser {
    fn err(&self, msg: String) -> Error {
        Error::Parse { line: self.line, msg }
    }

    fn parsed<T: FromStr>(&self, v: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        v.parse().map_err(|e| self.err(format!("{v:?}: {e}")))
    }

    fn num(&self, v: &str) -> Result<f64> {
        let x: f64 = self.parsed(v)?;
        if !x.is_finite() {
            return Err(self.err(format!("{v:?} is not finite")));
        }
        Ok(x)
    }

    fn gain(&self, v: &str) -> Result<f64> {
        let x = self.num(v)?;
        if x < 0.0 {
            return Err(self.err(format!("{v:?} must be >= 0")));
        }
        Ok(x)
    }

    fn int<T: FromStr>(&self, v: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.parsed(v)
    }

    fn list(&self, v: &str, n: usize) -> Result<Vec<f64>> {
        let items: Vec<f64> = v.split(',').map(|s| self.num(s.trim())).collect::<Result<_>>()?;
        if items.len() != n {
            return Err(self.err(format!("expected {n} comma-separated numbers, found {}", items.len())));
        }
        Ok(items)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_defaults() {
        assert_eq!(ScenarioConfig::parse("").unwrap(), ScenarioConfig::default());
    }

    #[test]
    fn full_file() {
        let text = "\
# hill run
[plant]
preset = alex-ref
load_split = 0.52   # trailing comment
seed = 7
[terrain]
knot = 0.3, 0
knot = 0.4, 0.15
[controller]
type = fuzzy-pid
kp = 1.5
[setpoints]
compass = 2000
O_F = 1500, 0
[mission]
legs = O_F, o_l
duration = 12
[tune]
axis = steering
skip_ki = true
";
        let c = ScenarioConfig::parse(text).unwrap();
        assert_eq!(c.plant.load_split, 0.52);
        assert_eq!(c.plant.seed, 7);
        assert_eq!(c.plant.terrain.knots(), &[(0.3, 0.0), (0.4, 0.15)]);
        assert_eq!(c.controller.kind, ControllerKind::FuzzyPid);
        assert_eq!(c.controller.forward.kp, 1.5);
        assert_eq!(c.table.get(SetpointId::Front).unwrap().counts, 1500);
        assert_eq!(c.table.get(SetpointId::Left).unwrap().counts, 2000);
        assert_eq!(c.legs, vec![SetpointId::Front, SetpointId::Left]);
        assert_eq!(c.duration, 12.0);
        assert_eq!(c.tune.axis, Axis::Steering);
        assert!(c.tune.method.skip_ki);
        c.validate().unwrap();
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("[plant]\nmass = heavy\n", 2),
            ("[plant]\n\n[wheels]\n", 3),
            ("mass = 2\n", 1),
            ("[plant]\nmass = 2\nmass = 3\n", 3),
            ("[controller]\nkp = -1\n", 2),
            ("[terrain]\nknot = 1\n", 2),
            ("[mission]\nlegs = O_F, O_X\n", 2),
            ("[plant]\nnonsense\n", 2),
            ("[plant]\nfoo = 1\n", 2),
        ];
        for (text, line) in cases {
            match ScenarioConfig::parse(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn bad_terrain_rejected() {
        let err = ScenarioConfig::parse("[terrain]\nknot = 1, 0\nknot = 0.5, 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn mission_needs_legs() {
        assert!(ScenarioConfig::default().mission().is_err());
    }
}
