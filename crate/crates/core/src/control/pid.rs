use crate::error::{check_dt, Error, Result};

/// Largest PWM magnitude accepted by the motor drivers.
pub const PWM_MAX: i32 = 255;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl PidGains {
    pub fn new(kp: f64, ki: f64, kd: f64) -> Result<Self> {
        for (name, g) in [("kp", kp), ("ki", ki), ("kd", kd)] {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and >= 0, got {g}"
                )));
            }
        }
        Ok(Self { kp, ki, kd })
    }
}

/// Discrete PID with rectangular integration, backward-difference
/// derivative and clamped integral and output.
#[derive(Debug, Clone, PartialEq)]
pub struct PidController {
    gains: PidGains,
    integral: f64,
    prev_error: f64,
    output_limit: f64,
    integral_limit: Option<f64>,
    first_step: bool,
}

impl PidController {
    /// Controller bounded to `±output_limit`. The integral limit defaults to
    /// `output_limit / ki` evaluated with the gains in force at each update.
    pub fn new(gains: PidGains, output_limit: f64) -> Self {
        Self {
            gains,
            integral: 0.0,
            prev_error: 0.0,
            output_limit: output_limit.abs(),
            integral_limit: None,
            first_step: true,
        }
    }

    /// Bounded to the PWM range.
    pub fn pwm(gains: PidGains) -> Self {
        Self::new(gains, PWM_MAX as f64)
    }

    pub fn with_integral_limit(mut self, limit: f64) -> Self {
        self.integral_limit = Some(limit.abs());
        self
    }

    pub fn gains(&self) -> PidGains {
        self.gains
    }

    pub fn set_gains(&mut self, gains: PidGains) {
        self.gains = gains;
    }

    pub fn integral(&self) -> f64 {
        self.integral
    }

    pub fn output_limit(&self) -> f64 {
        self.output_limit
    }

    pub fn integral_limit(&self) -> f64 {
        match self.integral_limit {
            Some(l) => l,
            None if self.gains.ki > 0.0 => self.output_limit / self.gains.ki,
            None => f64::INFINITY,
        }
    }

    pub fn reset(&mut self) {
        self.integral = 0.0;
        self.prev_error = 0.0;
        self.first_step = true;
    }

    pub fn update(&mut self, error: f64, dt: f64) -> Result<f64> {
        check_dt(dt)?;
        let lim = self.integral_limit();
        self.integral = (self.integral + error * dt).clamp(-lim, lim);
        let derivative = if self.first_step {
            0.0
        } else {
            (error - self.prev_error) / dt
        };
        self.prev_error = error;
        self.first_step = false;
        let g = self.gains;
        let u = g.kp * error + g.ki * self.integral + g.kd * derivative;
        Ok(u.clamp(-self.output_limit, self.output_limit))
    }
}

/// Clamps to `[-255, 255]` and rounds half away from zero.
pub fn pwm_saturate(u: f64) -> i32 {
    if u.is_nan() {
        return 0;
    }
    u.clamp(-(PWM_MAX as f64), PWM_MAX as f64).round() as i32
}
