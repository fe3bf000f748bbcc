//! The simulation-unit contract: port metadata, the [`SimUnit`] trait every
//! model implements, the [`Registry`] that maps unit type names to
//! factories, and [`UnitInstance`], the checked handle the master drives.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::traces::TimedTrace;
use crate::units::GridMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Input,
    Output,
    Parameter,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Input => "input",
            Direction::Output => "output",
            Direction::Parameter => "parameter",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Boolean ports carry `0.0` / `1.0`; any non-zero input reads as true.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortKind {
    Real,
    Boolean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PortDescriptor {
    pub name: String,
    pub direction: Direction,
    pub kind: PortKind,
}

/// Black-box interface metadata of a unit type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitDescription {
    pub unit_type: String,
    pub ports: Vec<PortDescriptor>,
    /// Parameters without an entry here are optional; the unit derives
    /// their value from the others when absent.
    pub default_parameters: BTreeMap<String, f64>,
}

impl UnitDescription {
    pub fn new(unit_type: impl Into<String>) -> Self {
        Self {
            unit_type: unit_type.into(),
            ports: Vec::new(),
            default_parameters: BTreeMap::new(),
        }
    }

    pub fn input(mut self, name: &str, kind: PortKind) -> Self {
        self.push(name, Direction::Input, kind);
        self
    }

    pub fn output(mut self, name: &str, kind: PortKind) -> Self {
        self.push(name, Direction::Output, kind);
        self
    }

    pub fn parameter(mut self, name: &str, default: Option<f64>) -> Self {
        self.push(name, Direction::Parameter, PortKind::Real);
        if let Some(value) = default {
            self.default_parameters.insert(name.to_string(), value);
        }
        self
    }

    fn push(&mut self, name: &str, direction: Direction, kind: PortKind) {
        self.ports.push(PortDescriptor {
            name: name.to_string(),
            direction,
            kind,
        });
    }

    pub fn port(&self, name: &str) -> Option<&PortDescriptor> {
        self.ports.iter().find(|p| p.name == name)
    }

    pub fn ports_with(&self, direction: Direction) -> impl Iterator<Item = &PortDescriptor> {
        self.ports.iter().filter(move |p| p.direction == direction)
    }

    /// Position of `name` among the ports of the given direction.
    pub fn index_of(&self, name: &str, direction: Direction) -> Option<usize> {
        self.ports_with(direction).position(|p| p.name == name)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        for (i, port) in self.ports.iter().enumerate() {
            if self.ports[..i].iter().any(|p| p.name == port.name) {
                problems.push(format!("{}: duplicate port name `{}`", self.unit_type, port.name));
            }
        }
        for key in self.default_parameters.keys() {
            match self.port(key) {
                Some(p) if p.direction == Direction::Parameter => {}
                _ => problems.push(format!(
                    "{}: default for `{key}` does not name a parameter port",
                    self.unit_type
                )),
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems))
        }
    }
}

/// Resolved parameter values handed to a unit factory: the unit's defaults
/// overridden by whatever the caller supplied.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Parameters {
    values: BTreeMap<String, f64>,
}

impl Parameters {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    /// Value of a parameter that has a registered default.
    pub fn value(&self, name: &str) -> f64 {
        self.values
            .get(name)
            .copied()
            .unwrap_or_else(|| panic!("parameter `{name}` has no default"))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// Non-scalar configuration some units need: a waypoint path, a replay
/// trace, an occupancy map.
#[derive(Clone, Debug, Default)]
pub struct Attachments {
    pub path: Option<Vec<[f64; 2]>>,
    pub trace: Option<TimedTrace>,
    pub map: Option<Arc<GridMap>>,
}

/// A model behind the uniform stepping interface.
///
/// Indices refer to the position of a port among the inputs (or outputs) of
/// the unit's [`UnitDescription`]. Argument checking happens in
/// [`UnitInstance`]; implementations can assume valid indices and finite
/// values.
pub trait SimUnit: Send {
    fn set_input(&mut self, input: usize, value: f64);

    /// Advances the unit from `time` to `time + h` holding the latched
    /// inputs constant.
    fn do_step(&mut self, time: f64, h: f64) -> Result<()>;

    fn output(&self, output: usize) -> f64;
}

/// Plain-function factory, the form the built-in units use.
pub type FactoryFn = fn(&Parameters, &Attachments) -> Result<Box<dyn SimUnit>>;

pub type UnitFactory = Arc<dyn Fn(&Parameters, &Attachments) -> Result<Box<dyn SimUnit>> + Send + Sync>;

#[derive(Clone)]
struct RegistryEntry {
    description: Arc<UnitDescription>,
    factory: UnitFactory,
}

/// Unit types available for instantiation, keyed by type name.
#[derive(Clone, Default)]
pub struct Registry {
    entries: BTreeMap<String, RegistryEntry>,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("unit_types", &self.entries.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl Registry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Registry holding every unit shipped with the crate.
    pub fn with_builtins() -> Self {
        let mut registry = Self::empty();
        crate::units::register_builtins(&mut registry);
        registry
    }

    pub fn register<F>(&mut self, description: UnitDescription, factory: F) -> Result<()>
    where
        F: Fn(&Parameters, &Attachments) -> Result<Box<dyn SimUnit>> + Send + Sync + 'static,
    {
        description.validate()?;
        self.entries.insert(
            description.unit_type.clone(),
            RegistryEntry {
                description: Arc::new(description),
                factory: Arc::new(factory),
            },
        );
        Ok(())
    }

    pub fn describe(&self, unit_type: &str) -> Option<&UnitDescription> {
        self.entries.get(unit_type).map(|e| e.description.as_ref())
    }

    pub fn unit_types(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn instantiate(&self, unit_type: &str, parameters: &BTreeMap<String, f64>) -> Result<UnitInstance> {
        self.instantiate_with(unit_type, parameters, &Attachments::default())
    }

    pub fn instantiate_with(
        &self,
        unit_type: &str,
        parameters: &BTreeMap<String, f64>,
        attachments: &Attachments,
    ) -> Result<UnitInstance> {
        let entry = self
            .entries
            .get(unit_type)
            .ok_or_else(|| Error::UnknownUnitType(unit_type.to_string()))?;
        let description = &entry.description;

        let mut values = description.default_parameters.clone();
        for (name, &value) in parameters {
            match description.port(name) {
                Some(p) if p.direction == Direction::Parameter => {}
                _ => {
                    return Err(Error::UnknownParameter {
                        unit_type: unit_type.to_string(),
                        name: name.clone(),
                    })
                }
            }
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    name: name.clone(),
                    value,
                });
            }
            values.insert(name.clone(), value);
        }

        let unit = (entry.factory)(&Parameters { values }, attachments)?;
        Ok(UnitInstance {
            description: Arc::clone(description),
            unit,
            clock: Clock::default(),
        })
    }
}

/// Simulation clock. Time is `base + steps * h` so that many equal steps do
/// not accumulate rounding error; `base` only moves when the step size
/// changes.
#[derive(Clone, Copy, Debug, Default)]
struct Clock {
    base: f64,
    steps: u64,
    h: f64,
}

impl Clock {
    fn now(&self) -> f64 {
        self.base + self.steps as f64 * self.h
    }

    fn advance(&mut self, h: f64) {
        if h != self.h {
            self.base = self.now();
            self.steps = 0;
            self.h = h;
        }
        self.steps += 1;
    }
}

/// A live unit with contract checking and time bookkeeping.
pub struct UnitInstance {
    description: Arc<UnitDescription>,
    unit: Box<dyn SimUnit>,
    clock: Clock,
}

impl fmt::Debug for UnitInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UnitInstance")
            .field("unit_type", &self.description.unit_type)
            .field("time", &self.current_time())
            .finish()
    }
}

impl UnitInstance {
    pub fn description(&self) -> &UnitDescription {
        &self.description
    }

    pub fn current_time(&self) -> f64 {
        self.clock.now()
    }

    fn resolve(&self, port: &str, expected: Direction) -> Result<usize> {
        let descriptor = self.description.port(port).ok_or_else(|| Error::UnknownPort {
            unit_type: self.description.unit_type.clone(),
            port: port.to_string(),
        })?;
        if descriptor.direction != expected {
            return Err(Error::WrongDirection {
                port: port.to_string(),
                expected: expected.as_str(),
                actual: descriptor.direction.as_str(),
            });
        }
        Ok(self.description.index_of(port, expected).expect("port was just found"))
    }

    pub fn input_index(&self, port: &str) -> Result<usize> {
        self.resolve(port, Direction::Input)
    }

    pub fn output_index(&self, port: &str) -> Result<usize> {
        self.resolve(port, Direction::Output)
    }

    pub fn set_input(&mut self, port: &str, value: f64) -> Result<()> {
        let index = self.input_index(port)?;
        if !value.is_finite() {
            return Err(Error::NonFinite {
                name: port.to_string(),
                value,
            });
        }
        self.unit.set_input(index, value);
        Ok(())
    }

    pub fn do_step(&mut self, h: f64) -> Result<()> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidStep(h));
        }
        self.unit.do_step(self.clock.now(), h)?;
        self.clock.advance(h);
        Ok(())
    }

    pub fn get_output(&self, port: &str) -> Result<f64> {
        let index = self.output_index(port)?;
        Ok(self.unit.output(index))
    }

    /// Unchecked-name fast path used by the master once wiring is resolved.
    pub(crate) fn set_input_at(&mut self, index: usize, value: f64) -> Result<()> {
        if !value.is_finite() {
            let name = self
                .description
                .ports_with(Direction::Input)
                .nth(index)
                .map(|p| p.name.clone())
                .unwrap_or_default();
            return Err(Error::NonFinite { name, value });
        }
        self.unit.set_input(index, value);
        Ok(())
    }

    pub(crate) fn output_at(&self, index: usize) -> f64 {
        self.unit.output(index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn instantiate_vehicle_with_overrides() {
        let registry = Registry::with_builtins();
        let v = registry
            .instantiate(
                "vehicle",
                &params(&[("m_robot", 1000.0), ("cAlphaF", 38000.0), ("mu", 0.3)]),
            )
            .unwrap();
        assert_eq!(v.current_time(), 0.0);
        assert_eq!(v.get_output("x").unwrap(), 0.0);
        assert_eq!(v.get_output("theta").unwrap(), 0.0);
    }

    #[test]
    fn instantiate_with_defaults_and_rejects_unknowns() {
        let registry = Registry::with_builtins();
        assert!(registry.instantiate("vehicle", &BTreeMap::new()).is_ok());
        assert!(matches!(
            registry.instantiate("vehicle", &params(&[("bogus", 1.0)])),
            Err(Error::UnknownParameter { .. })
        ));
        assert!(matches!(
            registry.instantiate("no_such_unit", &BTreeMap::new()),
            Err(Error::UnknownUnitType(_))
        ));
        assert!(matches!(
            registry.instantiate("vehicle", &params(&[("mu", f64::NAN)])),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn set_input_checks_direction_and_finiteness() {
        let registry = Registry::with_builtins();
        let mut v = registry.instantiate("vehicle", &BTreeMap::new()).unwrap();
        v.set_input("delta_f", 0.0).unwrap();
        v.set_input("velocity", 2.0).unwrap();
        assert!(matches!(v.set_input("x", 1.0), Err(Error::WrongDirection { .. })));
        assert!(matches!(v.set_input("m_robot", 1.0), Err(Error::WrongDirection { .. })));
        assert!(matches!(v.set_input("zz", 1.0), Err(Error::UnknownPort { .. })));
        assert!(matches!(
            v.set_input("velocity", f64::INFINITY),
            Err(Error::NonFinite { .. })
        ));
        assert!(matches!(v.get_output("velocity"), Err(Error::WrongDirection { .. })));
    }

    #[test]
    fn clock_bookkeeping() {
        let registry = Registry::with_builtins();
        let mut v = registry.instantiate("vehicle", &BTreeMap::new()).unwrap();
        v.do_step(0.01).unwrap();
        v.do_step(0.01).unwrap();
        assert!((v.current_time() - 0.02).abs() < 1e-12);
        assert!(matches!(v.do_step(-0.1), Err(Error::InvalidStep(_))));
        assert!(matches!(v.do_step(0.0), Err(Error::InvalidStep(_))));
        assert!(matches!(v.do_step(f64::NAN), Err(Error::InvalidStep(_))));

        let mut v = registry.instantiate("vehicle", &BTreeMap::new()).unwrap();
        let n = 100_000;
        for _ in 0..n {
            v.do_step(0.001).unwrap();
        }
        let expected = n as f64 * 0.001;
        assert!((v.current_time() - expected).abs() <= 1e-9 * expected);
    }

    #[test]
    fn zero_velocity_is_a_fixed_point() {
        let registry = Registry::with_builtins();
        let mut v = registry.instantiate("vehicle", &BTreeMap::new()).unwrap();
        v.set_input("velocity", 0.0).unwrap();
        v.do_step(1.0).unwrap();
        assert_eq!(v.get_output("x").unwrap(), 0.0);
        assert_eq!(v.get_output("y").unwrap(), 0.0);
    }

    #[test]
    fn get_output_is_pure() {
        let registry = Registry::with_builtins();
        let mut v = registry.instantiate("vehicle", &BTreeMap::new()).unwrap();
        v.set_input("velocity", 1.5).unwrap();
        v.set_input("delta_f", 0.1).unwrap();
        v.do_step(0.1).unwrap();
        let first: Vec<f64> = ["x", "y", "theta"].iter().map(|p| v.get_output(p).unwrap()).collect();
        for _ in 0..5 {
            let again: Vec<f64> = ["x", "y", "theta"].iter().map(|p| v.get_output(p).unwrap()).collect();
            assert_eq!(first, again);
        }
    }

    #[test]
    fn description_rejects_duplicates_and_stray_defaults() {
        let dup = UnitDescription::new("d")
            .input("a", PortKind::Real)
            .output("a", PortKind::Real);
        assert!(dup.validate().is_err());

        let mut stray = UnitDescription::new("s").input("a", PortKind::Real);
        stray.default_parameters.insert("a".into(), 1.0);
        assert!(stray.validate().is_err());
    }
}
