//! Obstacle environment: reports the vehicle's clearance to the nearest
//! occupied map cell.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::simunit::{Attachments, Parameters, PortKind, SimUnit, UnitDescription};
use crate::units::GridMap;

pub const UNIT_TYPE: &str = "environment";

pub fn description() -> UnitDescription {
    UnitDescription::new(UNIT_TYPE)
        .input("x", PortKind::Real)
        .input("y", PortKind::Real)
        .output("gap", PortKind::Real)
        .output("collision", PortKind::Boolean)
}

#[derive(Clone, Debug)]
pub struct Environment {
    map: Arc<GridMap>,
    position: [f64; 2],
    gap: f64,
}

impl Environment {
    pub fn new(map: Arc<GridMap>) -> Self {
        let mut env = Self {
            map,
            position: [0.0; 2],
            gap: 0.0,
        };
        env.update();
        env
    }

    fn update(&mut self) {
        // -1 when the map holds no obstacle at all
        self.gap = self.map.clearance(self.position[0], self.position[1]).unwrap_or(-1.0);
    }
}

impl SimUnit for Environment {
    fn set_input(&mut self, input: usize, value: f64) {
        self.position[input] = value;
    }

    fn do_step(&mut self, _time: f64, _h: f64) -> Result<()> {
        self.update();
        Ok(())
    }

    fn output(&self, output: usize) -> f64 {
        match output {
            0 => self.gap,
            1 => f64::from(u8::from(self.gap == 0.0)),
            _ => unreachable!("environment output index"),
        }
    }
}

pub fn factory(_: &Parameters, a: &Attachments) -> Result<Box<dyn SimUnit>> {
    let map = a.map.clone().ok_or(Error::MissingAttachment {
        unit_type: UNIT_TYPE.into(),
        what: "map",
    })?;
    Ok(Box::new(Environment::new(map)))
}
