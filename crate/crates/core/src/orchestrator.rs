//! Fixed-step Jacobi co-simulation master.
//!
//! Each macro step reads every connected source output, latches the values
//! onto their sinks, then steps every instance by `h`. A unit therefore sees
//! its peers' outputs from the start of the step (one-step-delayed coupling),
//! which makes the result independent of instance ordering.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simunit::{Attachments, Direction, Registry, UnitInstance};
use crate::traces::{read_trace_csv, write_trace_csv, TimedTrace};
use crate::units::{replay, GridMap};

pub const DEFAULT_STEP_SIZE: f64 = 0.01;
pub const MAX_STEPS: f64 = 1e8;

/// `{instance}.{port}`. The instance part may itself contain dots; the port
/// is everything after the last one, so `{Robotti}.RobottiInstance.cAlphaF`
/// names port `cAlphaF` of instance `{Robotti}.RobottiInstance`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PortRef {
    pub instance: String,
    pub port: String,
}

impl PortRef {
    pub fn new(instance: impl Into<String>, port: impl Into<String>) -> Self {
        Self {
            instance: instance.into(),
            port: port.into(),
        }
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.instance, self.port)
    }
}

impl FromStr for PortRef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().rsplit_once('.') {
            Some((instance, port)) if !instance.is_empty() && !port.is_empty() => Ok(PortRef::new(instance, port)),
            _ => Err(Error::parse(
                "port reference",
                format!("`{s}` is not of the form instance.port"),
            )),
        }
    }
}

impl Serialize for PortRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PortRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Connection {
    #[serde(rename = "from")]
    pub source: PortRef,
    #[serde(rename = "to")]
    pub sink: PortRef,
}

impl Connection {
    pub fn new(source: PortRef, sink: PortRef) -> Self {
        Self { source, sink }
    }
}

/// One unit instance of a multi-model.
#[derive(Clone, Debug, Default)]
pub struct InstanceSpec {
    pub unit_type: String,
    pub parameters: BTreeMap<String, f64>,
    /// Initial values latched on inputs; unconnected inputs keep them for the
    /// whole run.
    pub inputs: BTreeMap<String, f64>,
    pub attachments: Attachments,
}

impl InstanceSpec {
    pub fn new(unit_type: impl Into<String>) -> Self {
        Self {
            unit_type: unit_type.into(),
            ..Default::default()
        }
    }

    pub fn parameter(mut self, name: &str, value: f64) -> Self {
        self.parameters.insert(name.to_string(), value);
        self
    }

    pub fn input(mut self, name: &str, value: f64) -> Self {
        self.inputs.insert(name.to_string(), value);
        self
    }
}

#[derive(Clone, Debug)]
pub struct MultiModelConfig {
    pub instances: BTreeMap<String, InstanceSpec>,
    pub connections: Vec<Connection>,
    pub outputs: Vec<PortRef>,
    pub step_size: f64,
    pub duration: f64,
}

impl MultiModelConfig {
    pub fn new(step_size: f64, duration: f64) -> Self {
        Self {
            instances: BTreeMap::new(),
            connections: Vec::new(),
            outputs: Vec::new(),
            step_size,
            duration,
        }
    }

    pub fn instance(mut self, name: &str, spec: InstanceSpec) -> Self {
        self.instances.insert(name.to_string(), spec);
        self
    }

    /// Adds a connection; panics on malformed port references, so intended
    /// for literals.
    pub fn connect(mut self, from: &str, to: &str) -> Self {
        self.connections.push(Connection::new(
            from.parse().expect("valid port reference"),
            to.parse().expect("valid port reference"),
        ));
        self
    }

    pub fn record(mut self, port: &str) -> Self {
        self.outputs.push(port.parse().expect("valid port reference"));
        self
    }

    /// Reads a multi-model document; relative attachment paths resolve
    /// against the document's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        MultiModelDocument::read(path.as_ref())?.into_config()
    }
}

/// On-disk form of a multi-model (JSON).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiModelDocument {
    pub instances: BTreeMap<String, InstanceDocument>,
    #[serde(default)]
    pub connections: Vec<Connection>,
    #[serde(default)]
    pub outputs: Vec<PortRef>,
    #[serde(default)]
    pub step_size: Option<f64>,
    #[serde(default)]
    pub duration: Option<f64>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDocument {
    #[serde(rename = "type")]
    pub unit_type: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub inputs: BTreeMap<String, f64>,
    /// Waypoints for path followers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<[f64; 2]>>,
    /// CSV trace file for replay units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    /// Grid map file for sensors and environments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<PathBuf>,
}

impl MultiModelDocument {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut doc: Self =
            serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        doc.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(doc)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Loads attachments. A missing duration falls back to the end time of
    /// the replayed trace(s).
    pub fn into_config(self) -> Result<MultiModelConfig> {
        let mut maps: BTreeMap<PathBuf, Arc<GridMap>> = BTreeMap::new();
        let mut instances = BTreeMap::new();
        let mut replay_end: Option<f64> = None;
        for (name, doc) in &self.instances {
            let mut attachments = Attachments {
                path: doc.path.clone(),
                ..Default::default()
            };
            if let Some(trace) = &doc.trace {
                let path = self.resolve(trace);
                let expected: Option<&[&str]> = (doc.unit_type == replay::UNIT_TYPE).then_some(&replay::CHANNELS[..]);
                let trace = read_trace_csv(&path, expected)?;
                if doc.unit_type == replay::UNIT_TYPE {
                    let end = trace.last_time().unwrap_or(0.0);
                    replay_end = Some(replay_end.map_or(end, |e: f64| e.max(end)));
                }
                attachments.trace = Some(trace);
            }
            if let Some(map) = &doc.map {
                let path = self.resolve(map);
                let loaded = match maps.get(&path) {
                    Some(m) => Arc::clone(m),
                    None => {
                        let m = Arc::new(GridMap::read(&path)?);
                        maps.insert(path, Arc::clone(&m));
                        m
                    }
                };
                attachments.map = Some(loaded);
            }
            instances.insert(
                name.clone(),
                InstanceSpec {
                    unit_type: doc.unit_type.clone(),
                    parameters: doc.parameters.clone(),
                    inputs: doc.inputs.clone(),
                    attachments,
                },
            );
        }
        let duration = match (self.duration, replay_end) {
            (Some(d), _) => d,
            (None, Some(end)) => end,
            (None, None) => {
                return Err(Error::InvalidConfig(vec![
                    "no `duration` given and no replay trace to infer it from".into(),
                ]))
            }
        };
        Ok(MultiModelConfig {
            instances,
            connections: self.connections,
            outputs: self.outputs,
            step_size: self.step_size.unwrap_or(DEFAULT_STEP_SIZE),
            duration,
        })
    }
}

/// Number of macro steps for a run: `ceil(duration / step_size)`, where a
/// quotient within rounding noise of an integer counts as that integer.
pub fn step_count(duration: f64, step_size: f64) -> u64 {
    let q = duration / step_size;
    let nearest = q.round();
    if (q - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as u64
    } else {
        q.ceil() as u64
    }
}

/// Lists every violation of the multi-model invariants; empty means valid.
pub fn validate_config(config: &MultiModelConfig, registry: &Registry) -> Vec<String> {
    let mut diagnostics = Vec::new();

    if !(config.step_size > 0.0 && config.step_size.is_finite()) {
        diagnostics.push(format!("step_size {} must be positive and finite", config.step_size));
    }
    if !(config.duration >= 0.0 && config.duration.is_finite()) {
        diagnostics.push(format!("duration {} must be non-negative and finite", config.duration));
    }
    if diagnostics.is_empty() && config.duration / config.step_size > MAX_STEPS {
        diagnostics.push(format!(
            "duration/step_size = {} exceeds the limit of {MAX_STEPS} steps",
            config.duration / config.step_size
        ));
    }

    for (name, spec) in &config.instances {
        let Some(description) = registry.describe(&spec.unit_type) else {
            diagnostics.push(format!(
                "instance `{name}`: unregistered unit type `{}`",
                spec.unit_type
            ));
            continue;
        };
        let mut ports_ok = true;
        for (key, value) in &spec.parameters {
            match description.port(key) {
                Some(p) if p.direction == Direction::Parameter => {}
                _ => {
                    ports_ok = false;
                    diagnostics.push(format!("{name}.{key}: unknown parameter"));
                }
            }
            if !value.is_finite() {
                ports_ok = false;
                diagnostics.push(format!("{name}.{key}: non-finite value {value}"));
            }
        }
        for (key, value) in &spec.inputs {
            match description.port(key) {
                Some(p) if p.direction == Direction::Input => {}
                _ => {
                    ports_ok = false;
                    diagnostics.push(format!("{name}.{key}: initial value for a non-input port"));
                }
            }
            if !value.is_finite() {
                ports_ok = false;
                diagnostics.push(format!("{name}.{key}: non-finite value {value}"));
            }
        }
        if ports_ok {
            // catches parameter ranges and missing attachments
            if let Err(e) = registry.instantiate_with(&spec.unit_type, &spec.parameters, &spec.attachments) {
                diagnostics.push(format!("instance `{name}`: {e}"));
            }
        }
    }

    let port_direction = |r: &PortRef| {
        config
            .instances
            .get(&r.instance)
            .and_then(|spec| registry.describe(&spec.unit_type))
            .map(|d| d.port(&r.port).map(|p| (p.direction, p.kind)))
    };

    let mut sinks: HashSet<&PortRef> = HashSet::new();
    for c in &config.connections {
        let mut endpoints_ok = true;
        for (end, expected) in [(&c.source, Direction::Output), (&c.sink, Direction::Input)] {
            match port_direction(end) {
                None => {
                    endpoints_ok = false;
                    if !config.instances.contains_key(&end.instance) {
                        diagnostics.push(format!("{end}: unknown instance `{}`", end.instance));
                    }
                }
                Some(None) => {
                    endpoints_ok = false;
                    diagnostics.push(format!("{end}: unknown port"));
                }
                Some(Some((direction, _))) if direction != expected => {
                    endpoints_ok = false;
                    diagnostics.push(format!(
                        "{end}: is an {direction} port, connection needs an {}",
                        expected.as_str()
                    ));
                }
                Some(Some(_)) => {}
            }
        }
        if endpoints_ok {
            let (_, source_kind) = port_direction(&c.source).flatten().expect("checked");
            let (_, sink_kind) = port_direction(&c.sink).flatten().expect("checked");
            if source_kind != sink_kind {
                diagnostics.push(format!(
                    "{} -> {}: port kinds differ ({source_kind:?} vs {sink_kind:?})",
                    c.source, c.sink
                ));
            }
        }
        if c.source.instance == c.sink.instance {
            diagnostics.push(format!(
                "{} -> {}: source and sink belong to the same instance",
                c.source, c.sink
            ));
        }
        if !sinks.insert(&c.sink) {
            diagnostics.push(format!(
                "{}: fan-in, input has more than one incoming connection",
                c.sink
            ));
        }
    }

    for r in &config.outputs {
        match port_direction(r) {
            None => diagnostics.push(format!("{r}: recorded output names unknown instance `{}`", r.instance)),
            Some(None) => diagnostics.push(format!("{r}: recorded output names an unknown port")),
            Some(Some((Direction::Output, _))) => {}
            Some(Some((direction, _))) => {
                diagnostics.push(format!("{r}: recorded port is an {direction} port, not an output"))
            }
        }
    }

    diagnostics
}

struct Wire {
    source: (usize, usize),
    sink: (usize, usize),
}

/// Runs the multi-model and returns the recorded outputs at
/// `t = 0, h, ..., N h`.
pub fn run_cosim(config: &MultiModelConfig, registry: &Registry) -> Result<TimedTrace> {
    let diagnostics = validate_config(config, registry);
    if !diagnostics.is_empty() {
        return Err(Error::InvalidConfig(diagnostics));
    }

    let names: Vec<&String> = config.instances.keys().collect();
    let index_of = |name: &str| names.iter().position(|n| *n == name).expect("validated");

    let mut units: Vec<UnitInstance> = Vec::with_capacity(names.len());
    for (name, spec) in &config.instances {
        let mut unit = registry.instantiate_with(&spec.unit_type, &spec.parameters, &spec.attachments)?;
        for (port, value) in &spec.inputs {
            unit.set_input(port, *value).map_err(|e| Error::UnitStep {
                instance: name.clone(),
                time: 0.0,
                source: Box::new(e),
            })?;
        }
        units.push(unit);
    }

    let wires: Vec<Wire> = config
        .connections
        .iter()
        .map(|c| {
            let src = index_of(&c.source.instance);
            let dst = index_of(&c.sink.instance);
            Ok(Wire {
                source: (src, units[src].output_index(&c.source.port)?),
                sink: (dst, units[dst].input_index(&c.sink.port)?),
            })
        })
        .collect::<Result<_>>()?;
    let recorded: Vec<(usize, usize)> = config
        .outputs
        .iter()
        .map(|r| {
            let i = index_of(&r.instance);
            Ok((i, units[i].output_index(&r.port)?))
        })
        .collect::<Result<_>>()?;

    let h = config.step_size;
    let steps = step_count(config.duration, h);
    let mut trace = TimedTrace::new(config.outputs.iter().map(ToString::to_string));
    let mut row = vec![0.0; recorded.len()];
    let mut exchanged = vec![0.0; wires.len()];

    let mut record = |trace: &mut TimedTrace, units: &[UnitInstance], t: f64| -> Result<()> {
        for (slot, &(i, o)) in row.iter_mut().zip(&recorded) {
            *slot = units[i].output_at(o);
        }
        trace.push(t, &row).map_err(|e| Error::UnitStep {
            instance: "recorder".into(),
            time: t,
            source: Box::new(e),
        })
    };

    record(&mut trace, &units, 0.0)?;
    for k in 0..steps {
        let t = k as f64 * h;
        for (value, wire) in exchanged.iter_mut().zip(&wires) {
            *value = units[wire.source.0].output_at(wire.source.1);
        }
        for (value, wire) in exchanged.iter().zip(&wires) {
            units[wire.sink.0]
                .set_input_at(wire.sink.1, *value)
                .map_err(|e| Error::UnitStep {
                    instance: names[wire.sink.0].clone(),
                    time: t,
                    source: Box::new(e),
                })?;
        }
        for (name, unit) in names.iter().zip(units.iter_mut()) {
            unit.do_step(h).map_err(|e| Error::UnitStep {
                instance: (*name).clone(),
                time: t,
                source: Box::new(e),
            })?;
        }
        record(&mut trace, &units, (k + 1) as f64 * h)?;
    }
    Ok(trace)
}

pub fn write_results_csv(trace: &TimedTrace, path: impl AsRef<Path>) -> Result<()> {
    write_trace_csv(trace, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simunit::{Parameters, PortKind, SimUnit, UnitDescription};

    fn straight_vehicle(duration: f64, step: f64) -> MultiModelConfig {
        MultiModelConfig::new(step, duration)
            .instance(
                "veh",
                InstanceSpec::new("vehicle")
                    .input("velocity", 1.0)
                    .input("delta_f", 0.0),
            )
            .record("veh.x")
            .record("veh.y")
    }

    #[test]
    fn port_ref_parsing() {
        let r: PortRef = "{Robotti}.RobottiInstance.cAlphaF".parse().unwrap();
        assert_eq!(r.instance, "{Robotti}.RobottiInstance");
        assert_eq!(r.port, "cAlphaF");
        assert_eq!(r.to_string(), "{Robotti}.RobottiInstance.cAlphaF");
        assert!("nodot".parse::<PortRef>().is_err());
        assert!(".x".parse::<PortRef>().is_err());
        assert!("a.".parse::<PortRef>().is_err());
    }

    #[test]
    fn step_count_law() {
        assert_eq!(step_count(1.0, 0.1), 10);
        assert_eq!(step_count(5.0, 0.01), 500);
        assert_eq!(step_count(1.05, 0.1), 11);
        assert_eq!(step_count(0.0, 0.1), 0);
        assert_eq!(step_count(20.0, 0.01), 2000);
    }

    #[test]
    fn row_count_and_times() {
        let trace = run_cosim(&straight_vehicle(1.0, 0.1), &Registry::with_builtins()).unwrap();
        assert_eq!(trace.len(), 11);
        assert_eq!(trace.time(0), 0.0);
        assert!((trace.time(10) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn straight_line_run() {
        let trace = run_cosim(&straight_vehicle(5.0, 0.01), &Registry::with_builtins()).unwrap();
        let last = trace.row(trace.len() - 1);
        assert!((last[0] - 5.0).abs() < 1e-6);
        assert_eq!(last[1], 0.0);
    }

    #[test]
    fn validation_diagnostics() {
        let registry = Registry::with_builtins();
        let ok = straight_vehicle(1.0, 0.1);
        assert!(validate_config(&ok, &registry).is_empty());

        let bad = ok
            .clone()
            .instance("rep", InstanceSpec::new("vehicle"))
            .connect("rep.x", "veh.zz");
        let d = validate_config(&bad, &registry);
        assert_eq!(d.len(), 1, "{d:?}");
        assert!(d[0].contains("veh.zz"));

        let fan_in = ok
            .clone()
            .instance("a", InstanceSpec::new("vehicle"))
            .instance("b", InstanceSpec::new("vehicle"))
            .connect("a.x", "veh.velocity")
            .connect("b.x", "veh.velocity");
        let d = validate_config(&fan_in, &registry);
        assert_eq!(d.len(), 1, "{d:?}");
        assert!(d[0].contains("fan-in"));

        let wrong_dir = ok
            .clone()
            .instance("a", InstanceSpec::new("vehicle"))
            .connect("a.velocity", "veh.delta_f");
        let d = validate_config(&wrong_dir, &registry);
        assert!(d.iter().any(|m| m.contains("a.velocity")), "{d:?}");

        let mut bad_step = ok.clone();
        bad_step.step_size = 0.0;
        assert!(!validate_config(&bad_step, &registry).is_empty());

        let missing = ok.clone().instance("pp", InstanceSpec::new("pure_pursuit"));
        let d = validate_config(&missing, &registry);
        assert!(d.iter().any(|m| m.contains("path")), "{d:?}");

        let unknown = ok.instance("u", InstanceSpec::new("warp_drive"));
        let d = validate_config(&unknown, &registry);
        assert!(d.iter().any(|m| m.contains("warp_drive")), "{d:?}");
    }

    /// Outputs its own clock time.
    struct Clock(f64);
    impl SimUnit for Clock {
        fn set_input(&mut self, _: usize, _: f64) {}
        fn do_step(&mut self, time: f64, h: f64) -> Result<()> {
            self.0 = time + h;
            Ok(())
        }
        fn output(&self, _: usize) -> f64 {
            self.0
        }
    }

    /// Echoes the input latched for the last step.
    struct Echo {
        latched: f64,
        out: f64,
    }
    impl SimUnit for Echo {
        fn set_input(&mut self, _: usize, v: f64) {
            self.latched = v;
        }
        fn do_step(&mut self, _: f64, _: f64) -> Result<()> {
            self.out = self.latched;
            Ok(())
        }
        fn output(&self, _: usize) -> f64 {
            self.out
        }
    }

    fn probe_registry() -> Registry {
        let mut r = Registry::empty();
        r.register(
            UnitDescription::new("clock").output("t", PortKind::Real),
            |_: &Parameters, _: &Attachments| Ok(Box::new(Clock(0.0)) as Box<dyn SimUnit>),
        )
        .unwrap();
        r.register(
            UnitDescription::new("echo")
                .input("u", PortKind::Real)
                .output("y", PortKind::Real),
            |_: &Parameters, _: &Attachments| Ok(Box::new(Echo { latched: 0.0, out: 0.0 }) as Box<dyn SimUnit>),
        )
        .unwrap();
        r
    }

    #[test]
    fn jacobi_exchange_delays_by_one_step() {
        // instance names chosen so the echo sorts before and after the clock
        for echo_name in ["a_echo", "z_echo"] {
            let config = MultiModelConfig::new(0.1, 1.0)
                .instance("m_clock", InstanceSpec::new("clock"))
                .instance(echo_name, InstanceSpec::new("echo"))
                .connect("m_clock.t", &format!("{echo_name}.u"))
                .record("m_clock.t")
                .record(&format!("{echo_name}.y"));
            let trace = run_cosim(&config, &probe_registry()).unwrap();
            for k in 1..trace.len() {
                assert_eq!(trace.row(k)[1], trace.row(k - 1)[0], "row {k}");
            }
        }
    }

    #[test]
    fn deterministic_runs() {
        let registry = Registry::with_builtins();
        let config = MultiModelConfig::new(0.01, 3.0).instance(
            "veh",
            InstanceSpec::new("vehicle")
                .input("velocity", 2.0)
                .input("delta_f", 0.3),
        );
        let config = config.record("veh.x").record("veh.y").record("veh.theta");
        let a = run_cosim(&config, &registry).unwrap();
        let b = run_cosim(&config, &registry).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a, b);
    }

    #[test]
    fn unit_failure_names_instance_and_time() {
        struct Fails;
        impl SimUnit for Fails {
            fn set_input(&mut self, _: usize, _: f64) {}
            fn do_step(&mut self, time: f64, _: f64) -> Result<()> {
                if time >= 0.25 {
                    Err(Error::InvalidStep(-1.0))
                } else {
                    Ok(())
                }
            }
            fn output(&self, _: usize) -> f64 {
                0.0
            }
        }
        let mut r = Registry::empty();
        r.register(
            UnitDescription::new("fails").output("y", PortKind::Real),
            |_: &Parameters, _: &Attachments| Ok(Box::new(Fails) as Box<dyn SimUnit>),
        )
        .unwrap();
        let config = MultiModelConfig::new(0.1, 1.0).instance("boom", InstanceSpec::new("fails"));
        match run_cosim(&config, &r) {
            Err(Error::UnitStep { instance, time, .. }) => {
                assert_eq!(instance, "boom");
                assert!((time - 0.3).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn document_round_trip_and_defaults() {
        let text = r#"{
            "instances": {
                "veh": {"type": "vehicle", "parameters": {"mu": 0.5}, "inputs": {"velocity": 1.0}}
            },
            "outputs": ["veh.x"],
            "duration": 2.0
        }"#;
        let doc: MultiModelDocument = serde_json::from_str(text).unwrap();
        let config = doc.into_config().unwrap();
        assert_eq!(config.step_size, DEFAULT_STEP_SIZE);
        assert_eq!(config.duration, 2.0);
        assert_eq!(config.instances["veh"].parameters["mu"], 0.5);

        let no_duration: MultiModelDocument =
            serde_json::from_str(r#"{"instances": {"veh": {"type": "vehicle"}}}"#).unwrap();
        assert!(no_duration.into_config().is_err());

        let unknown_key = serde_json::from_str::<MultiModelDocument>(r#"{"instances": {}, "bogus": 1}"#);
        assert!(unknown_key.is_err());
    }
}
