//! Replays recorded steering inputs (`velocity`, `delta_f`) with a
//! zero-order hold.

use crate::error::{Error, Result};
use crate::simunit::{Attachments, Parameters, PortKind, SimUnit, UnitDescription};
use crate::traces::TimedTrace;

pub const UNIT_TYPE: &str = "replay";
pub const CHANNELS: [&str; 2] = ["velocity", "delta_f"];

pub fn description() -> UnitDescription {
    UnitDescription::new(UNIT_TYPE)
        .output("velocity", PortKind::Real)
        .output("delta_f", PortKind::Real)
}

#[derive(Clone, Debug)]
pub struct Replay {
    trace: TimedTrace,
    row: usize,
}

impl Replay {
    pub fn new(trace: TimedTrace) -> Result<Self> {
        if trace.channels() != CHANNELS {
            return Err(Error::parse(
                "replay trace",
                format!(
                    "channel mismatch: expected [velocity,delta_f], found [{}]",
                    trace.channels().join(",")
                ),
            ));
        }
        if trace.is_empty() {
            return Err(Error::EmptyTrace("replay trace".into()));
        }
        let mut replay = Self { trace, row: 0 };
        replay.seek(0.0);
        Ok(replay)
    }

    /// Selects the last row with time <= `t` (the first row before it
    /// starts). A tolerance absorbs clock rounding so a row stamped 2.0 is
    /// active at t = 1.9999999999999998.
    pub fn seek(&mut self, t: f64) {
        let eps = 1e-9 * t.abs().max(1.0);
        let after = self.trace.times().partition_point(|&rt| rt <= t + eps);
        self.row = after.saturating_sub(1);
    }

    pub fn values(&self) -> &[f64] {
        self.trace.row(self.row)
    }
}

impl SimUnit for Replay {
    fn set_input(&mut self, _input: usize, _value: f64) {
        unreachable!("replay has no inputs")
    }

    fn do_step(&mut self, time: f64, h: f64) -> Result<()> {
        self.seek(time + h);
        Ok(())
    }

    fn output(&self, output: usize) -> f64 {
        self.values()[output]
    }
}

pub fn factory(_: &Parameters, a: &Attachments) -> Result<Box<dyn SimUnit>> {
    let trace = a.trace.clone().ok_or(Error::MissingAttachment {
        unit_type: UNIT_TYPE.into(),
        what: "trace",
    })?;
    Ok(Box::new(Replay::new(trace)?))
}
