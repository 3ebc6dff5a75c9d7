//! Simulated robot: two PMDC motors, quantized encoders and a terrain
//! profile that loads the wheels on slopes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::control::PWM_MAX;
use crate::error::{check_dt, Error, Result};
use crate::kinematics::{forward_kinematics, integrate_pose, BodyTwist, ChassisGeometry, Pose, WheelSpeeds};

pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorParams {
    pub r_a: f64,
    pub k_t: f64,
    pub k_e: f64,
    pub j: f64,
    pub b: f64,
    pub v_max: f64,
    pub gear_ratio: f64,
}

/// Result of one mechanical step of a motor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorStep {
    pub omega: f64,
    pub current: f64,
    pub torque: f64,
}

impl MotorParams {
    pub fn new(r_a: f64, k_t: f64, k_e: f64, j: f64, b: f64, v_max: f64, gear_ratio: f64) -> Result<Self> {
        let p = Self {
            r_a,
            k_t,
            k_e,
            j,
            b,
            v_max,
            gear_ratio,
        };
        p.validate()?;
        Ok(p)
    }

    /// Desk-scale reference motor, gear ratio folded into `k_t`/`k_e`.
    pub fn alex_ref() -> Self {
        Self {
            r_a: 2.0,
            k_t: 0.05,
            k_e: 0.05,
            j: 1e-4,
            b: 1e-4,
            v_max: 6.0,
            gear_ratio: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("r_a", self.r_a),
            ("k_t", self.k_t),
            ("k_e", self.k_e),
            ("j", self.j),
            ("b", self.b),
            ("v_max", self.v_max),
            ("gear_ratio", self.gear_ratio),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("motor {name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn pwm_to_voltage(&self, pwm: i32) -> Result<f64> {
        if pwm.abs() > PWM_MAX {
            return Err(Error::PwmOutOfRange(pwm));
        }
        Ok(pwm as f64 / PWM_MAX as f64 * self.v_max)
    }

    pub fn current(&self, volts: f64, omega: f64) -> f64 {
        (volts - self.k_e * omega) / self.r_a
    }

    /// Speed-torque line at fixed voltage.
    pub fn torque(&self, volts: f64, omega: f64) -> f64 {
        self.k_t * self.current(volts, omega)
    }

    pub fn no_load_speed(&self, volts: f64) -> f64 {
        self.k_t * volts / (self.r_a * self.b + self.k_t * self.k_e)
    }

    pub fn stall_torque(&self, volts: f64) -> f64 {
        self.k_t * volts / self.r_a
    }

    /// Mechanical time constant of the unloaded motor including back-EMF damping.
    pub fn time_constant(&self) -> f64 {
        self.j / (self.b + self.k_t * self.k_e / self.r_a)
    }

    /// Quasi-static electrical model plus one explicit Euler step of the rotor.
    pub fn step(&self, volts: f64, omega: f64, t_load: f64, dt: f64) -> Result<MotorStep> {
        check_dt(dt)?;
        let current = self.current(volts, omega);
        let torque = self.k_t * current;
        let omega = omega + dt * (torque - t_load - self.b * omega) / self.j;
        Ok(MotorStep { omega, current, torque })
    }

    /// As [`MotorParams::step`] with an additional Coulomb friction torque of
    /// magnitude `t_coulomb`. A stopped rotor stays stopped while the net
    /// drive is within the friction level, and a moving rotor never reverses
    /// within a step because of friction.
    pub fn step_with_friction(
        &self,
        volts: f64,
        omega: f64,
        t_load: f64,
        t_coulomb: f64,
        dt: f64,
    ) -> Result<MotorStep> {
        if t_coulomb == 0.0 {
            return self.step(volts, omega, t_load, dt);
        }
        check_dt(dt)?;
        let current = self.current(volts, omega);
        let torque = self.k_t * current;
        let drive = torque - t_load - self.b * omega;
        let omega = if omega == 0.0 {
            if drive.abs() <= t_coulomb {
                0.0
            } else {
                dt * (drive - t_coulomb.copysign(drive)) / self.j
            }
        } else {
            let next = omega + dt * (drive - t_coulomb.copysign(omega)) / self.j;
            let opposing = drive.signum() != omega.signum() || drive.abs() <= t_coulomb;
            if next.signum() != omega.signum() && opposing {
                0.0
            } else {
                next
            }
        };
        Ok(MotorStep { omega, current, torque })
    }
}

/// Mechanical power `T·ω`. Reported in traces only.
pub fn mechanical_power(torque: f64, omega: f64) -> f64 {
    torque * omega
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderModel {
    counts_per_rev: u32,
    angle: f64,
}

impl EncoderModel {
    pub fn new(counts_per_rev: u32) -> Result<Self> {
        if counts_per_rev == 0 {
            return Err(Error::InvalidArgument("encoder counts_per_rev must be > 0".into()));
        }
        Ok(Self {
            counts_per_rev,
            angle: 0.0,
        })
    }

    pub fn counts_per_rev(&self) -> u32 {
        self.counts_per_rev
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn set_angle(&mut self, angle: f64) {
        self.angle = angle;
    }

    pub fn advance(&mut self, d_angle: f64) {
        self.angle += d_angle;
    }

    pub fn read(&self) -> i64 {
        (self.angle / std::f64::consts::TAU * self.counts_per_rev as f64).floor() as i64
    }
}

/// Slope angle as a piecewise-linear function of distance travelled.
/// Zero before the first knot and after the last one.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TerrainProfile {
    knots: Vec<(f64, f64)>,
}

impl TerrainProfile {
    pub fn flat() -> Self {
        Self::default()
    }

    /// `knots` are `(distance m, slope rad)` with strictly increasing distance.
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        for (i, &(s, a)) in knots.iter().enumerate() {
            if !s.is_finite() || !a.is_finite() {
                return Err(Error::InvalidArgument(format!("terrain knot {i} is not finite")));
            }
            if a.abs() >= std::f64::consts::FRAC_PI_2 {
                return Err(Error::InvalidArgument(format!(
                    "terrain slope {a} at knot {i} must be within (-pi/2, pi/2)"
                )));
            }
            if i > 0 && s <= knots[i - 1].0 {
                return Err(Error::InvalidArgument(format!(
                    "terrain knot {i} distance must increase"
                )));
            }
        }
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn is_flat(&self) -> bool {
        self.knots.iter().all(|&(_, a)| a == 0.0)
    }

    pub fn slope_at(&self, s: f64) -> f64 {
        let k = &self.knots;
        let (Some(first), Some(last)) = (k.first(), k.last()) else {
            return 0.0;
        };
        if s < first.0 || s > last.0 {
            return 0.0;
        }
        let i = k.partition_point(|&(x, _)| x <= s);
        if i == k.len() {
            return last.1;
        }
        let (s0, a0) = k[i - 1];
        let (s1, a1) = k[i];
        a0 + (a1 - a0) * (s - s0) / (s1 - s0)
    }
}

/// Gravity torque on each wheel when the load is shared equally.
pub fn slope_load_torque(terrain: &TerrainProfile, s: f64, mass: f64, g: &ChassisGeometry) -> f64 {
    mass * GRAVITY * terrain.slope_at(s).sin() * g.wheel_radius() / 2.0
}

/// Optional multiplicative noise, each factor drawn as `1 + sigma·N(0,1)`
/// independently per wheel and plant step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantNoise {
    pub encoder_sigma: f64,
    pub load_sigma: f64,
}

impl PlantNoise {
    pub fn is_off(&self) -> bool {
        self.encoder_sigma == 0.0 && self.load_sigma == 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantConfig {
    pub motor: MotorParams,
    pub geometry: ChassisGeometry,
    pub terrain: TerrainProfile,
    /// Robot mass in kg.
    pub mass: f64,
    pub counts_per_rev: u32,
    /// Rolling-resistance coefficient; friction force `c_rr·m·g` is shared
    /// between the wheels like the slope load.
    pub rolling_resistance: f64,
    /// Fraction of the robot's longitudinal load carried by the left wheel.
    pub load_split: f64,
    pub noise: PlantNoise,
    pub seed: u64,
}

impl PlantConfig {
    /// Reference robot on flat ground with no rolling resistance or noise.
    pub fn reference() -> Self {
        Self {
            motor: MotorParams::alex_ref(),
            geometry: ChassisGeometry::reference(),
            terrain: TerrainProfile::flat(),
            mass: 2.0,
            counts_per_rev: 360,
            rolling_resistance: 0.0,
            load_split: 0.5,
            noise: PlantNoise::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.motor.validate()?;
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::InvalidArgument(format!("mass must be > 0, got {}", self.mass)));
        }
        if self.counts_per_rev == 0 {
            return Err(Error::InvalidArgument("counts_per_rev must be > 0".into()));
        }
        if !(self.rolling_resistance >= 0.0 && self.rolling_resistance.is_finite()) {
            return Err(Error::InvalidArgument("rolling_resistance must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.load_split) {
            return Err(Error::InvalidArgument(format!(
                "load_split must be in [0, 1], got {}",
                self.load_split
            )));
        }
        for s in [self.noise.encoder_sigma, self.noise.load_sigma] {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::InvalidArgument("noise sigma must be >= 0".into()));
            }
        }
        Ok(())
    }

    /// Per-wheel Coulomb rolling-resistance torque magnitudes (left, right).
    pub fn rolling_torques(&self) -> (f64, f64) {
        let total = self.rolling_resistance * self.mass * GRAVITY * self.geometry.wheel_radius();
        (total * self.load_split, total * (1.0 - self.load_split))
    }

    /// Per-wheel slope torques (left, right) at distance `s`.
    pub fn slope_torques(&self, s: f64) -> (f64, f64) {
        let total = 2.0 * slope_load_torque(&self.terrain, s, self.mass, &self.geometry);
        (total * self.load_split, total * (1.0 - self.load_split))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub pose: Pose,
    /// Wheel angular velocities (left, right), rad/s.
    pub omega_l: f64,
    pub omega_r: f64,
    pub enc_l: EncoderModel,
    pub enc_r: EncoderModel,
    /// Signed path length travelled by the chassis centre, m.
    pub distance: f64,
    pub time: f64,
    /// Motor torques of the last step (left, right).
    pub torque_l: f64,
    pub torque_r: f64,
}

impl SimState {
    pub fn at_rest(counts_per_rev: u32) -> Result<Self> {
        Ok(Self {
            pose: Pose::default(),
            omega_l: 0.0,
            omega_r: 0.0,
            enc_l: EncoderModel::new(counts_per_rev)?,
            enc_r: EncoderModel::new(counts_per_rev)?,
            distance: 0.0,
            time: 0.0,
            torque_l: 0.0,
            torque_r: 0.0,
        })
    }

    pub fn encoders(&self) -> (i64, i64) {
        (self.enc_l.read(), self.enc_r.read())
    }

    pub fn wheel_speeds(&self, g: &ChassisGeometry) -> WheelSpeeds {
        WheelSpeeds {
            v_l: self.omega_l * g.wheel_radius(),
            v_r: self.omega_r * g.wheel_radius(),
        }
    }

    pub fn twist(&self, g: &ChassisGeometry) -> BodyTwist {
        forward_kinematics(self.wheel_speeds(g), g)
    }

    /// Rotational kinetic energy of the two wheel drives.
    pub fn kinetic_energy(&self, m: &MotorParams) -> f64 {
        0.5 * m.j * (self.omega_l * self.omega_l + self.omega_r * self.omega_r)
    }
}

/// Owns a robot's state and its noise source.
#[derive(Debug, Clone)]
pub struct Plant {
    cfg: PlantConfig,
    state: SimState,
    rng: ChaCha8Rng,
}

impl Plant {
    pub fn new(cfg: PlantConfig) -> Result<Self> {
        cfg.validate()?;
        let state = SimState::at_rest(cfg.counts_per_rev)?;
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Ok(Self { cfg, state, rng })
    }

    pub fn config(&self) -> &PlantConfig {
        &self.cfg
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    fn noise_factor(&mut self, sigma: f64) -> f64 {
        if sigma == 0.0 {
            return 1.0;
        }
        let n: f64 = Normal::new(0.0, 1.0).expect("unit normal").sample(&mut self.rng);
        1.0 + sigma * n
    }

    /// Advances the robot by `dt` under constant PWM commands.
    pub fn step(&mut self, pwm_l: i32, pwm_r: i32, dt: f64) -> Result<&SimState> {
        check_dt(dt)?;
        let m = self.cfg.motor;
        let v_l = m.pwm_to_voltage(pwm_l)?;
        let v_r = m.pwm_to_voltage(pwm_r)?;
        let (mut load_l, mut load_r) = self.cfg.slope_torques(self.state.distance);
        if !self.cfg.terrain.is_flat() {
            load_l *= self.noise_factor(self.cfg.noise.load_sigma);
            load_r *= self.noise_factor(self.cfg.noise.load_sigma);
        }
        let (fr_l, fr_r) = self.cfg.rolling_torques();
        let gr = m.gear_ratio;

        let s = &self.state;
        let left = m.step_with_friction(v_l, s.omega_l * gr, load_l / gr, fr_l / gr, dt)?;
        let right = m.step_with_friction(v_r, s.omega_r * gr, load_r / gr, fr_r / gr, dt)?;
        let omega_l = left.omega / gr;
        let omega_r = right.omega / gr;

        let el = self.noise_factor(self.cfg.noise.encoder_sigma);
        let er = self.noise_factor(self.cfg.noise.encoder_sigma);

        let g = self.cfg.geometry;
        let st = &mut self.state;
        st.omega_l = omega_l;
        st.omega_r = omega_r;
        st.torque_l = left.torque * gr;
        st.torque_r = right.torque * gr;
        st.enc_l.advance(omega_l * dt * el);
        st.enc_r.advance(omega_r * dt * er);
        let twist = st.twist(&g);
        st.pose = integrate_pose(st.pose, twist, dt);
        st.distance += twist.v_c * dt;
        st.time += dt;
        Ok(&self.state)
    }
}

/// One step of a noiseless plant from an explicit state.
pub fn sim_step(state: &SimState, pwm_l: i32, pwm_r: i32, cfg: &PlantConfig, dt: f64) -> Result<SimState> {
    let mut p = Plant {
        cfg: PlantConfig {
            noise: PlantNoise::default(),
            ..cfg.clone()
        },
        state: state.clone(),
        rng: ChaCha8Rng::seed_from_u64(0),
    };
    p.step(pwm_l, pwm_r, dt)?;
    Ok(p.state)
}
