//! Dynamic single-track (bicycle) vehicle model.
//!
//! State is the planar pose `(x, y, theta)` plus lateral body velocity `v_y`
//! and yaw rate `r`. Longitudinal speed is an input, so straight-line motion
//! never depends on the tyre or mass parameters; only turning does.
//!
//! Per step (explicit Euler, inputs held):
//!
//! ```text
//! vx'     = max(velocity, 0.1)
//! alpha_f = atan((v_y + l_f r) / vx') - delta_f
//! alpha_r = atan((v_y - l_r r) / vx')
//! F_i     = clamp(-cAlpha_i alpha_i, +-mu m g / 2)
//! m (v_y' + velocity r) = F_f + F_r
//! I_z r'                = l_f F_f - l_r F_r
//! x' = velocity cos(theta) - v_y sin(theta)
//! y' = velocity sin(theta) + v_y cos(theta)
//! theta' = r
//! ```
//!
//! Below 0.1 m/s the lateral states relax to zero with a 0.2 s time constant
//! instead.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::simunit::{Attachments, Parameters, PortKind, SimUnit, UnitDescription};

pub const UNIT_TYPE: &str = "vehicle";

const MIN_SLIP_SPEED: f64 = 0.1;
const STANDSTILL_TIME_CONSTANT: f64 = 0.2;

pub mod input {
    pub const VELOCITY: usize = 0;
    pub const DELTA_F: usize = 1;
}

pub mod output {
    pub const X: usize = 0;
    pub const Y: usize = 1;
    pub const THETA: usize = 2;
    pub const V_Y: usize = 3;
    pub const YAW_RATE: usize = 4;
    pub const FORCE_FRONT: usize = 5;
    pub const FORCE_REAR: usize = 6;
}

pub fn description() -> UnitDescription {
    UnitDescription::new(UNIT_TYPE)
        .input("velocity", PortKind::Real)
        .input("delta_f", PortKind::Real)
        .output("x", PortKind::Real)
        .output("y", PortKind::Real)
        .output("theta", PortKind::Real)
        .output("v_y", PortKind::Real)
        .output("yaw_rate", PortKind::Real)
        .output("force_front", PortKind::Real)
        .output("force_rear", PortKind::Real)
        .parameter("m_robot", Some(1000.0))
        .parameter("cAlphaF", Some(38000.0))
        .parameter("cAlphaR", None)
        .parameter("mu", Some(0.3))
        .parameter("l_f", Some(0.6))
        .parameter("l_r", Some(0.6))
        .parameter("I_z", None)
        .parameter("g", Some(9.81))
        .parameter("x0", Some(0.0))
        .parameter("y0", Some(0.0))
        .parameter("theta0", Some(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VehicleParams {
    pub m_robot: f64,
    pub c_alpha_f: f64,
    pub c_alpha_r: f64,
    pub mu: f64,
    pub l_f: f64,
    pub l_r: f64,
    pub i_z: f64,
    pub g: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self::new(1000.0, 38000.0, 0.3)
    }
}

impl VehicleParams {
    /// The three calibrated parameters; the rest take their defaults.
    pub fn new(m_robot: f64, c_alpha_f: f64, mu: f64) -> Self {
        let (l_f, l_r) = (0.6, 0.6);
        Self {
            m_robot,
            c_alpha_f,
            c_alpha_r: c_alpha_f,
            mu,
            l_f,
            l_r,
            i_z: m_robot * l_f * l_r,
            g: 9.81,
        }
    }

    pub fn from_parameters(p: &Parameters) -> Result<Self> {
        let m_robot = p.value("m_robot");
        let c_alpha_f = p.value("cAlphaF");
        let l_f = p.value("l_f");
        let l_r = p.value("l_r");
        let params = Self {
            m_robot,
            c_alpha_f,
            c_alpha_r: p.get("cAlphaR").unwrap_or(c_alpha_f),
            mu: p.value("mu"),
            l_f,
            l_r,
            i_z: p.get("I_z").unwrap_or(m_robot * l_f * l_r),
            g: p.value("g"),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("m_robot", self.m_robot),
            ("cAlphaF", self.c_alpha_f),
            ("cAlphaR", self.c_alpha_r),
            ("mu", self.mu),
            ("l_f", self.l_f),
            ("l_r", self.l_r),
            ("I_z", self.i_z),
            ("g", self.g),
        ];
        for (name, value) in named {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: name.into(),
                    reason: format!("{value} must be positive"),
                });
            }
        }
        if self.mu > 2.0 {
            return Err(Error::InvalidParameter {
                name: "mu".into(),
                reason: format!("{} outside (0, 2]", self.mu),
            });
        }
        Ok(())
    }

    /// Per-axle lateral force limit.
    pub fn force_limit(&self) -> f64 {
        self.mu * self.m_robot * self.g / 2.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v_y: f64,
    pub r: f64,
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let mut wrapped = theta.rem_euclid(2.0 * PI);
    if wrapped > PI {
        wrapped -= 2.0 * PI;
    }
    wrapped
}

#[derive(Clone, Debug)]
pub struct Vehicle {
    params: VehicleParams,
    state: VehicleState,
    velocity: f64,
    delta_f: f64,
    forces: (f64, f64),
}

impl Vehicle {
    pub fn new(params: VehicleParams, initial: VehicleState) -> Self {
        Self {
            params,
            state: initial,
            velocity: 0.0,
            delta_f: 0.0,
            forces: (0.0, 0.0),
        }
    }

    pub fn state(&self) -> VehicleState {
        self.state
    }

    pub fn params(&self) -> &VehicleParams {
        &self.params
    }

    fn lateral_forces(&self) -> (f64, f64) {
        let p = &self.params;
        let s = &self.state;
        let vx = self.velocity.max(MIN_SLIP_SPEED);
        let alpha_f = ((s.v_y + p.l_f * s.r) / vx).atan() - self.delta_f;
        let alpha_r = ((s.v_y - p.l_r * s.r) / vx).atan();
        let limit = p.force_limit();
        (
            (-p.c_alpha_f * alpha_f).clamp(-limit, limit),
            (-p.c_alpha_r * alpha_r).clamp(-limit, limit),
        )
    }

    pub fn step(&mut self, h: f64) {
        let p = self.params;
        let s = self.state;
        let v = self.velocity;

        let (v_y_dot, r_dot) = if v < MIN_SLIP_SPEED {
            self.forces = (0.0, 0.0);
            (-s.v_y / STANDSTILL_TIME_CONSTANT, -s.r / STANDSTILL_TIME_CONSTANT)
        } else {
            let (f_front, f_rear) = self.lateral_forces();
            debug_assert!(f_front.abs() <= p.force_limit() && f_rear.abs() <= p.force_limit());
            self.forces = (f_front, f_rear);
            (
                (f_front + f_rear) / p.m_robot - v * s.r,
                (p.l_f * f_front - p.l_r * f_rear) / p.i_z,
            )
        };

        let (sin, cos) = s.theta.sin_cos();
        let x_dot = v * cos - s.v_y * sin;
        let y_dot = v * sin + s.v_y * cos;

        self.state = VehicleState {
            x: s.x + h * x_dot,
            y: s.y + h * y_dot,
            theta: wrap_angle(s.theta + h * s.r),
            v_y: s.v_y + h * v_y_dot,
            r: s.r + h * r_dot,
        };
    }
}

impl SimUnit for Vehicle {
    fn set_input(&mut self, input: usize, value: f64) {
        match input {
            input::VELOCITY => self.velocity = value,
            input::DELTA_F => self.delta_f = value,
            _ => unreachable!("vehicle has two inputs"),
        }
    }

    fn do_step(&mut self, _time: f64, h: f64) -> Result<()> {
        self.step(h);
        Ok(())
    }

    fn output(&self, output: usize) -> f64 {
        match output {
            output::X => self.state.x,
            output::Y => self.state.y,
            output::THETA => self.state.theta,
            output::V_Y => self.state.v_y,
            output::YAW_RATE => self.state.r,
            output::FORCE_FRONT => self.forces.0,
            output::FORCE_REAR => self.forces.1,
            _ => unreachable!("vehicle output index"),
        }
    }
}

pub fn factory(p: &Parameters, _: &Attachments) -> Result<Box<dyn SimUnit>> {
    let params = VehicleParams::from_parameters(p)?;
    let initial = VehicleState {
        x: p.value("x0"),
        y: p.value("y0"),
        theta: wrap_angle(p.value("theta0")),
        v_y: 0.0,
        r: 0.0,
    };
    Ok(Box::new(Vehicle::new(params, initial)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn drive(params: VehicleParams, inputs: impl Fn(usize) -> (f64, f64), steps: usize, h: f64) -> Vec<VehicleState> {
        let mut v = Vehicle::new(params, VehicleState::default());
        let mut out = vec![v.state()];
        for k in 0..steps {
            let (vel, delta) = inputs(k);
            v.set_input(input::VELOCITY, vel);
            v.set_input(input::DELTA_F, delta);
            v.step(h);
            out.push(v.state());
        }
        out
    }

    #[test]
    fn straight_line() {
        let states = drive(VehicleParams::default(), |_| (2.0, 0.0), 500, 0.01);
        let last = states.last().unwrap();
        assert!((last.x - 10.0).abs() < 1e-9, "{}", last.x);
        assert_eq!(last.y, 0.0);
        assert_eq!(last.theta, 0.0);
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert!((wrap_angle(7.0) - (7.0 - 2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(VehicleParams::new(1000.0, 38000.0, 2.5).validate().is_err());
        assert!(VehicleParams::new(0.0, 38000.0, 0.5).validate().is_err());
        assert!(VehicleParams::new(1000.0, -1.0, 0.5).validate().is_err());
        assert!(VehicleParams::new(1000.0, 20000.0, 2.0).validate().is_ok());
    }

    #[test]
    fn standstill_relaxes_lateral_state() {
        let mut v = Vehicle::new(
            VehicleParams::default(),
            VehicleState {
                v_y: 1.0,
                r: 0.5,
                ..Default::default()
            },
        );
        for _ in 0..200 {
            v.step(0.01);
        }
        assert!(v.state().v_y.abs() < 1e-3);
        assert!(v.state().r.abs() < 1e-3);
    }

    #[test]
    fn constant_turn_closes_a_circle() {
        // fine-step self reference: radius from the h/64 run
        let radius = |h: f64| {
            let steps = (30.0 / h).round() as usize;
            let states = drive(VehicleParams::default(), |_| (1.0, 0.2), steps, h);
            // steady turn: radius = speed / yaw rate
            1.0 / states.last().unwrap().r
        };
        let coarse = radius(0.01);
        let fine = radius(0.01 / 64.0);
        assert!(((coarse - fine) / fine).abs() < 0.10, "{coarse} vs {fine}");
        // roughly the kinematic radius L / tan(delta)
        assert!(fine > 4.0 && fine < 8.0, "{fine}");
    }

    #[test]
    fn forces_respect_friction_limit() {
        let params = VehicleParams::new(1000.0, 38000.0, 0.3);
        let mut v = Vehicle::new(params, VehicleState::default());
        let mut saturated = false;
        for k in 0..2000 {
            v.set_input(input::VELOCITY, 5.0);
            v.set_input(input::DELTA_F, 0.5 * ((k as f64) * 0.01).sin());
            v.step(0.01);
            let limit = params.force_limit();
            assert!(v.output(output::FORCE_FRONT).abs() <= limit);
            assert!(v.output(output::FORCE_REAR).abs() <= limit);
            saturated |= v.output(output::FORCE_FRONT).abs() == limit;
        }
        assert!(saturated, "scenario should reach the friction limit");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn mirror_symmetry(
            amplitude in 0.0..0.6f64,
            speed in 0.0..6.0f64,
            mass in 500.0..3000.0f64,
            mu in 0.1..1.0f64,
        ) {
            let params = VehicleParams::new(mass, 30000.0, mu);
            let steer = |k: usize| amplitude * ((k as f64) * 0.013).sin();
            let left = drive(params, |k| (speed, steer(k)), 800, 0.01);
            let right = drive(params, |k| (speed, -steer(k)), 800, 0.01);
            for (l, r) in left.iter().zip(&right) {
                prop_assert_eq!(l.x, r.x);
                prop_assert_eq!(l.y, -r.y);
                prop_assert_eq!(l.theta, -r.theta);
            }
        }

        #[test]
        fn straight_line_ignores_parameters(
            mass in 500.0..3000.0f64,
            c_alpha in 10000.0..50000.0f64,
            mu in 0.1..2.0f64,
            speed in 0.0..5.0f64,
        ) {
            let reference = drive(VehicleParams::default(), |k| (speed * (k % 7) as f64 / 6.0, 0.0), 300, 0.01);
            let other = drive(VehicleParams::new(mass, c_alpha, mu), |k| (speed * (k % 7) as f64 / 6.0, 0.0), 300, 0.01);
            for (a, b) in reference.iter().zip(&other) {
                prop_assert_eq!(a.x.to_bits(), b.x.to_bits());
                prop_assert_eq!(a.y.to_bits(), b.y.to_bits());
            }
        }
    }
}
