//! Planar kinematics of a two-wheel differential-drive robot.
//!
//! Frames: the global (inertial) frame `I` and the robot frame `R`, whose
//! origin is the spin center `O_c` midway between the wheel pivots, with
//! `X_R` pointing forward and `Y_R` to the left. Angles are radians.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

/// Below this yaw rate a motion is treated as a straight line.
pub const STRAIGHT_EPS: f64 = 1e-9;

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Robot location in the global frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }
}

/// Velocity triple `(ẋ, ẏ, θ̇)`. Used for both global- and body-frame values.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WorldVelocity {
    pub dx: f64,
    pub dy: f64,
    pub dtheta: f64,
}

impl WorldVelocity {
    pub fn new(dx: f64, dy: f64, dtheta: f64) -> Self {
        Self { dx, dy, dtheta }
    }

    fn as_array(&self) -> [f64; 3] {
        [self.dx, self.dy, self.dtheta]
    }

    fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

/// Spin-center velocity: forward speed along `X_R` and yaw rate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyTwist {
    pub v_c: f64,
    pub w: f64,
}

impl BodyTwist {
    pub fn new(v_c: f64, w: f64) -> Self {
        Self { v_c, w }
    }
}

/// Signed rim speeds of the left and right driving wheels (m/s).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WheelSpeeds {
    pub v_l: f64,
    pub v_r: f64,
}

impl WheelSpeeds {
    pub fn new(v_l: f64, v_r: f64) -> Self {
        Self { v_l, v_r }
    }
}

/// Wheel track and wheel radius. The pivot offset `l` is always half the track.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChassisGeometry {
    d_w: f64,
    r_w: f64,
}

impl ChassisGeometry {
    pub fn new(d_w: f64, r_w: f64) -> Result<Self> {
        if !(d_w > 0.0 && d_w.is_finite()) {
            return Err(Error::InvalidArgument(format!("wheel track must be > 0, got {d_w}")));
        }
        if !(r_w > 0.0 && r_w.is_finite()) {
            return Err(Error::InvalidArgument(format!("wheel radius must be > 0, got {r_w}")));
        }
        Ok(Self { d_w, r_w })
    }

    /// Reference chassis: 0.2 m track, 0.03 m wheels.
    pub fn reference() -> Self {
        Self { d_w: 0.2, r_w: 0.03 }
    }

    pub fn track(&self) -> f64 {
        self.d_w
    }

    pub fn wheel_radius(&self) -> f64 {
        self.r_w
    }

    pub fn pivot_offset(&self) -> f64 {
        self.d_w / 2.0
    }
}

/// Mounting constants of one active wheel: angle of `O_C O_W` from `X_R`
/// (`alpha`), wheel-plane angle (`beta`) and pivot offset `l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WheelMount {
    pub alpha: f64,
    pub beta: f64,
    pub l: f64,
}

impl WheelMount {
    pub fn left(l: f64) -> Self {
        Self {
            alpha: -FRAC_PI_2,
            beta: PI,
            l,
        }
    }

    pub fn right(l: f64) -> Self {
        Self {
            alpha: FRAC_PI_2,
            beta: 0.0,
            l,
        }
    }
}

/// Rotation taking global-frame velocities into the robot frame.
pub fn rotation(theta: f64) -> [[f64; 3]; 3] {
    let (s, c) = theta.sin_cos();
    [[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]]
}

fn mat_vec(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
    }
    out
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `R(θ) · ξ̇_I`: expresses a global velocity in the robot frame.
pub fn world_to_body(theta: f64, v: WorldVelocity) -> WorldVelocity {
    WorldVelocity::from_array(mat_vec(&rotation(theta), v.as_array()))
}

/// `R(θ)ᵀ · ξ̇_R`: the inverse of [`world_to_body`].
pub fn body_to_world(theta: f64, v: WorldVelocity) -> WorldVelocity {
    let r = rotation(theta);
    let mut rt = [[0.0; 3]; 3];
    for (i, row) in r.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            rt[j][i] = *x;
        }
    }
    WorldVelocity::from_array(mat_vec(&rt, v.as_array()))
}

pub fn forward_kinematics(ws: WheelSpeeds, g: &ChassisGeometry) -> BodyTwist {
    BodyTwist {
        v_c: (ws.v_r + ws.v_l) / 2.0,
        w: (ws.v_r - ws.v_l) / g.d_w,
    }
}

pub fn inverse_kinematics(t: BodyTwist, g: &ChassisGeometry) -> WheelSpeeds {
    let half = g.d_w / 2.0;
    WheelSpeeds {
        v_l: t.v_c - half * t.w,
        v_r: t.v_c + half * t.w,
    }
}

pub fn wheel_rim_speed(omega_w: f64, r_w: f64) -> f64 {
    r_w * omega_w
}

/// Velocity normal to the wheel plane; zero when the wheel does not slide.
pub fn sliding_constraint_residual(m: &WheelMount, theta: f64, v: WorldVelocity) -> f64 {
    let ab = m.alpha + m.beta;
    let row = [ab.cos(), ab.sin(), m.l * m.beta.sin()];
    dot(row, world_to_body(theta, v).as_array())
}

/// In-plane rolling speed of a wheel, `[sin(α+β), −cos(α+β), −l·cos β] · R(θ) · ξ̇_I`.
///
/// With the mount constants above this evaluates to `ẋ_R + l·θ̇` for the left
/// mount and `ẋ_R − l·θ̇` for the right one, i.e. the rim speeds of
/// [`inverse_kinematics`] with the wheel labels exchanged.
pub fn rolling_constraint_speed(m: &WheelMount, theta: f64, v: WorldVelocity) -> f64 {
    let ab = m.alpha + m.beta;
    let row = [ab.sin(), -ab.cos(), -m.l * m.beta.cos()];
    dot(row, world_to_body(theta, v).as_array())
}

/// Differential degrees of freedom left after `c_f` sliding constraints.
pub fn ddof(dof_workspace: u32, c_f: u32) -> Result<u32> {
    dof_workspace.checked_sub(c_f).ok_or(Error::ConstraintExceedsDof {
        dof: dof_workspace,
        c_f,
    })
}

/// Distance from the spin center to the instantaneous center of rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IcrRadius {
    Straight,
    Radius(f64),
}

pub fn icr_radius(ws: WheelSpeeds, g: &ChassisGeometry) -> IcrRadius {
    let t = forward_kinematics(ws, g);
    if t.w.abs() < STRAIGHT_EPS {
        IcrRadius::Straight
    } else {
        IcrRadius::Radius(t.v_c / t.w)
    }
}

/// Advances a pose by a constant twist over `dt`, following the exact arc.
pub fn integrate_pose(p: Pose, t: BodyTwist, dt: f64) -> Pose {
    let dth = t.w * dt;
    let (x, y) = if dth.abs() >= STRAIGHT_EPS {
        let r = t.v_c / t.w;
        (
            p.x + r * ((p.theta + dth).sin() - p.theta.sin()),
            p.y + r * (p.theta.cos() - (p.theta + dth).cos()),
        )
    } else {
        let (s, c) = p.theta.sin_cos();
        (p.x + t.v_c * dt * c, p.y + t.v_c * dt * s)
    };
    Pose {
        x,
        y,
        theta: normalize_angle(p.theta + dth),
    }
}
