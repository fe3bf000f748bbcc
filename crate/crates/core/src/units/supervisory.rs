//! Supervisory braking controller: overrides the commanded speed with a
//! constant-deceleration stop when a detected obstacle lies within braking
//! distance `v^2 / (2 decel)` plus a margin.

use crate::error::{Error, Result};
use crate::simunit::{Attachments, Parameters, PortKind, SimUnit, UnitDescription};

pub const UNIT_TYPE: &str = "supervisory";

pub fn description() -> UnitDescription {
    UnitDescription::new(UNIT_TYPE)
        .input("velocity_cmd", PortKind::Real)
        .input("obstacle_detected", PortKind::Boolean)
        .input("obstacle_distance", PortKind::Real)
        .output("velocity", PortKind::Real)
        .output("stop_engaged", PortKind::Boolean)
        .parameter("decel", Some(3.0))
        .parameter("margin", Some(0.2))
}

pub fn braking_distance(speed: f64, decel: f64) -> f64 {
    speed * speed / (2.0 * decel)
}

#[derive(Clone, Debug)]
pub struct Supervisor {
    decel: f64,
    margin: f64,
    velocity_cmd: f64,
    detected: bool,
    distance: f64,
    velocity: f64,
    engaged: bool,
}

impl Supervisor {
    pub fn new(decel: f64, margin: f64) -> Result<Self> {
        if !(decel > 0.0 && decel.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "decel".into(),
                reason: format!("{decel} must be positive"),
            });
        }
        if !(margin >= 0.0 && margin.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "margin".into(),
                reason: format!("{margin} must be non-negative"),
            });
        }
        Ok(Self {
            decel,
            margin,
            velocity_cmd: 0.0,
            detected: false,
            distance: -1.0,
            velocity: 0.0,
            engaged: false,
        })
    }

    pub fn engaged(&self) -> bool {
        self.engaged
    }

    pub fn velocity(&self) -> f64 {
        self.velocity
    }

    fn threat(&self) -> bool {
        self.detected
            && self.distance >= 0.0
            && self.distance <= braking_distance(self.velocity_cmd, self.decel) + self.margin
    }

    pub fn step(&mut self, h: f64) {
        let threat = self.threat();
        if !self.engaged && threat {
            self.engaged = true;
        } else if self.engaged && self.velocity == 0.0 && !threat {
            self.engaged = false;
        }

        self.velocity = if self.engaged {
            (self.velocity - self.decel * h).max(0.0)
        } else {
            self.velocity_cmd
        };
    }
}

impl SimUnit for Supervisor {
    fn set_input(&mut self, input: usize, value: f64) {
        match input {
            0 => self.velocity_cmd = value,
            1 => self.detected = value != 0.0,
            2 => self.distance = value,
            _ => unreachable!("supervisory input index"),
        }
    }

    fn do_step(&mut self, _time: f64, h: f64) -> Result<()> {
        self.step(h);
        Ok(())
    }

    fn output(&self, output: usize) -> f64 {
        match output {
            0 => self.velocity,
            1 => f64::from(u8::from(self.engaged)),
            _ => unreachable!("supervisory output index"),
        }
    }
}

pub fn factory(p: &Parameters, _: &Attachments) -> Result<Box<dyn SimUnit>> {
    Ok(Box::new(Supervisor::new(p.value("decel"), p.value("margin"))?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn braking_distance_arithmetic() {
        assert_eq!(braking_distance(2.0, 2.0), 1.0);
        assert_eq!(braking_distance(0.0, 3.0), 0.0);
        assert_eq!(braking_distance(3.0, 3.0), 1.5);
    }

    #[test]
    fn passes_command_through_without_threat() {
        let mut s = Supervisor::new(3.0, 0.2).unwrap();
        s.set_input(0, 2.0);
        s.set_input(1, 1.0);
        s.set_input(2, 5.0);
        s.step(0.01);
        assert_eq!(s.velocity(), 2.0);
        assert!(!s.engaged());
    }

    #[test]
    fn standing_vehicle_never_engages_on_distant_obstacles() {
        let mut s = Supervisor::new(3.0, 0.2).unwrap();
        s.set_input(0, 0.0);
        s.set_input(1, 1.0);
        s.set_input(2, 0.5);
        s.step(0.01);
        assert!(!s.engaged());
    }

    #[test]
    fn engages_and_ramps_down_monotonically() {
        let mut s = Supervisor::new(2.0, 0.0).unwrap();
        s.set_input(0, 2.0);
        s.step(0.01);
        assert_eq!(s.velocity(), 2.0);
        s.set_input(1, 1.0);
        s.set_input(2, 0.9);
        let mut last = s.velocity();
        let mut steps = 0;
        loop {
            s.step(0.01);
            assert!(s.engaged());
            assert!(s.velocity() <= last);
            last = s.velocity();
            steps += 1;
            if last == 0.0 {
                break;
            }
        }
        assert!((100..=101).contains(&steps), "{steps}");
        // obstacle still inside d_b + margin for the commanded speed: stays latched
        s.step(0.01);
        assert!(s.engaged());
        // obstacle gone: releases
        s.set_input(1, 0.0);
        s.set_input(2, -1.0);
        s.step(0.01);
        assert!(!s.engaged());
        assert_eq!(s.velocity(), 2.0);
    }

    #[test]
    fn invalid_parameters() {
        assert!(Supervisor::new(0.0, 0.2).is_err());
        assert!(Supervisor::new(3.0, -0.1).is_err());
    }
}
