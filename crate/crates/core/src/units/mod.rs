//! Built-in simulation units.

pub mod environment;
mod gridmap;
pub mod pure_pursuit;
pub mod replay;
pub mod sensor;
pub mod supervisory;
pub mod vehicle;

pub use gridmap::GridMap;
pub use pure_pursuit::{Path, PurePursuit};
pub use replay::Replay;
pub use sensor::{RangeSensor, SensorParams};
pub use supervisory::Supervisor;
pub use vehicle::{Vehicle, VehicleParams, VehicleState};

use crate::simunit::Registry;

pub(crate) fn register_builtins(registry: &mut Registry) {
    let builtins = [
        (vehicle::description(), vehicle::factory as crate::simunit::FactoryFn),
        (pure_pursuit::description(), pure_pursuit::factory),
        (replay::description(), replay::factory),
        (sensor::description(), sensor::factory),
        (supervisory::description(), supervisory::factory),
        (environment::description(), environment::factory),
    ];
    for (description, factory) in builtins {
        registry
            .register(description, factory)
            .expect("built-in unit descriptions are valid");
    }
}
