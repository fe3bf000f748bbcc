//! Closed-loop safety scenarios: the harvester multi-model driven towards an
//! obstacle under degraded sensing, judged on the closest approach.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::orchestrator::{run_cosim, InstanceSpec, MultiModelConfig, MultiModelDocument, PortRef};
use crate::safety::EvidenceVerdict;
use crate::simunit::Registry;
use crate::traces::{write_trace_csv, TimedTrace};
use crate::units::{environment, pure_pursuit, sensor, supervisory, vehicle, GridMap};

pub const CRITERION: &str = "min_gap > threshold, and speed 0 at the end if a stop is engaged";

#[derive(Clone, Debug)]
pub struct SafetyScenario {
    pub id: String,
    pub speed: f64,
    /// Sensor parameter overrides (e.g. `max_range` for fog).
    pub sensor: BTreeMap<String, f64>,
    pub supervisor: BTreeMap<String, f64>,
    pub map: Arc<GridMap>,
    pub path: Vec<[f64; 2]>,
    pub duration: f64,
    pub step_size: f64,
    pub gap_threshold: f64,
}

#[derive(Clone, Debug)]
pub struct SafetySuite {
    /// Multi-model to use instead of the built-in harvester topology.
    pub model: Option<MultiModelConfig>,
    pub scenarios: Vec<SafetyScenario>,
}

/// Vehicle, path-following controller, range sensor, supervisory braking
/// and an obstacle environment.
pub fn harvester_model() -> MultiModelConfig {
    MultiModelConfig::new(0.01, 0.0)
        .instance("vehicle", InstanceSpec::new(vehicle::UNIT_TYPE))
        .instance("controller", InstanceSpec::new(pure_pursuit::UNIT_TYPE))
        .instance("sensor", InstanceSpec::new(sensor::UNIT_TYPE))
        .instance("supervisor", InstanceSpec::new(supervisory::UNIT_TYPE))
        .instance("environment", InstanceSpec::new(environment::UNIT_TYPE))
        .connect("vehicle.x", "controller.x")
        .connect("vehicle.y", "controller.y")
        .connect("vehicle.theta", "controller.theta")
        .connect("vehicle.x", "sensor.x")
        .connect("vehicle.y", "sensor.y")
        .connect("vehicle.theta", "sensor.theta")
        .connect("vehicle.x", "environment.x")
        .connect("vehicle.y", "environment.y")
        .connect("controller.velocity", "supervisor.velocity_cmd")
        .connect("controller.delta_f", "vehicle.delta_f")
        .connect("sensor.obstacle_detected", "supervisor.obstacle_detected")
        .connect("sensor.obstacle_distance", "supervisor.obstacle_distance")
        .connect("supervisor.velocity", "vehicle.velocity")
}

fn single_of_type(model: &MultiModelConfig, unit_type: &str) -> Result<String> {
    let found: Vec<&String> = model
        .instances
        .iter()
        .filter(|(_, s)| s.unit_type == unit_type)
        .map(|(n, _)| n)
        .collect();
    match found.as_slice() {
        [one] => Ok((*one).clone()),
        _ => Err(Error::InvalidConfig(vec![format!(
            "safety model needs exactly one `{unit_type}` instance, found {}",
            found.len()
        )])),
    }
}

/// The scenario's multi-model, with the positions, supervisor speed and
/// stop flag recorded (in that order).
pub fn configure_scenario(base: &MultiModelConfig, scenario: &SafetyScenario) -> Result<MultiModelConfig> {
    let mut model = base.clone();
    model.step_size = scenario.step_size;
    model.duration = scenario.duration;
    let vehicle = single_of_type(&model, vehicle::UNIT_TYPE)?;
    let supervisor = single_of_type(&model, supervisory::UNIT_TYPE)?;
    for spec in model.instances.values_mut() {
        match spec.unit_type.as_str() {
            t if t == pure_pursuit::UNIT_TYPE => {
                spec.parameters.insert("cruise_speed".into(), scenario.speed);
                spec.attachments.path = Some(scenario.path.clone());
            }
            t if t == sensor::UNIT_TYPE => {
                spec.parameters.extend(scenario.sensor.clone());
                spec.attachments.map = Some(Arc::clone(&scenario.map));
            }
            t if t == environment::UNIT_TYPE => {
                spec.attachments.map = Some(Arc::clone(&scenario.map));
            }
            t if t == supervisory::UNIT_TYPE => {
                spec.parameters.extend(scenario.supervisor.clone());
            }
            _ => {}
        }
    }
    model.outputs = vec![
        PortRef::new(vehicle.clone(), "x"),
        PortRef::new(vehicle, "y"),
        PortRef::new(supervisor.clone(), "velocity"),
        PortRef::new(supervisor, "stop_engaged"),
    ];
    Ok(model)
}

/// Judges a finished run recorded by [`configure_scenario`].
pub fn judge(scenario: &SafetyScenario, trace: &TimedTrace) -> EvidenceVerdict {
    let mut min_gap = f64::INFINITY;
    for (_, row) in trace.rows() {
        let gap = scenario.map.clearance(row[0], row[1]).unwrap_or(f64::INFINITY);
        min_gap = min_gap.min(gap);
    }
    let last = trace.row(trace.len() - 1);
    let (final_speed, engaged) = (last[2], last[3] != 0.0);
    let stopped = !engaged || final_speed == 0.0;
    let passed = min_gap > scenario.gap_threshold && stopped;
    EvidenceVerdict {
        run_id: scenario.id.clone(),
        passed,
        criterion: CRITERION.into(),
        measured: Some(min_gap),
        threshold: scenario.gap_threshold,
        final_speed: Some(final_speed),
        stop_engaged: Some(engaged),
        reason: (!stopped).then(|| "stop engaged but vehicle still moving at the end".to_string()),
    }
}

fn run_one(
    base: &MultiModelConfig,
    registry: &Registry,
    scenario: &SafetyScenario,
    evidence_dir: Option<&Path>,
) -> Result<EvidenceVerdict> {
    let outcome = configure_scenario(base, scenario).and_then(|m| run_cosim(&m, registry));
    let (verdict, trace) = match outcome {
        Ok(trace) => (judge(scenario, &trace), Some(trace)),
        Err(e) => (
            EvidenceVerdict {
                run_id: scenario.id.clone(),
                passed: false,
                criterion: CRITERION.into(),
                measured: None,
                threshold: scenario.gap_threshold,
                final_speed: None,
                stop_engaged: None,
                reason: Some(e.to_string()),
            },
            None,
        ),
    };
    if let Some(root) = evidence_dir {
        let dir = root.join(&scenario.id);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        if let Some(trace) = &trace {
            write_trace_csv(trace, dir.join("results.csv"))?;
        }
        verdict.write(dir.join("verdict.json"))?;
    }
    Ok(verdict)
}

/// Runs every scenario (in parallel, results in suite order). Simulation
/// failures become failed verdicts; only I/O problems abort.
pub fn run_safety_suite(
    suite: &SafetySuite,
    registry: &Registry,
    evidence_dir: Option<&Path>,
    workers: usize,
) -> Result<Vec<EvidenceVerdict>> {
    let mut ids = HashSet::new();
    for s in &suite.scenarios {
        if !ids.insert(s.id.as_str()) {
            return Err(Error::InvalidConfig(vec![format!(
                "duplicate safety run id `{}`",
                s.id
            )]));
        }
    }
    let base = suite.model.clone().unwrap_or_else(harvester_model);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(vec![format!("cannot start workers: {e}")]))?;
    pool.install(|| {
        suite
            .scenarios
            .par_iter()
            .map(|s| run_one(&base, registry, s, evidence_dir))
            .collect()
    })
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridDocument {
    width: usize,
    height: usize,
    resolution: f64,
    origin: [f64; 2],
}

/// Fields shared by the suite defaults and individual scenarios.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Common {
    #[serde(default)]
    map: Option<PathBuf>,
    #[serde(default)]
    grid: Option<GridDocument>,
    #[serde(default)]
    obstacles: Option<Vec<[[f64; 2]; 2]>>,
    #[serde(default)]
    path: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    duration: Option<f64>,
    #[serde(default)]
    step_size: Option<f64>,
    #[serde(default)]
    gap_threshold: Option<f64>,
    #[serde(default)]
    sensor: BTreeMap<String, f64>,
    #[serde(default)]
    supervisor: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Deserialize)]
struct ScenarioDocument {
    id: String,
    speed: f64,
    #[serde(flatten)]
    common: Common,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixDocument {
    /// Hazard name → sensor overrides.
    hazards: BTreeMap<String, BTreeMap<String, f64>>,
    speeds: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
struct SuiteDocument {
    #[serde(default)]
    model: Option<PathBuf>,
    #[serde(default)]
    matrix: Option<MatrixDocument>,
    #[serde(default)]
    scenarios: Vec<ScenarioDocument>,
    #[serde(flatten)]
    common: Common,
}

pub const DEFAULT_DURATION: f64 = 20.0;
pub const DEFAULT_PATH_END: f64 = 30.0;

/// `1` → `1`, `1.5` → `1.5`.
fn speed_tag(speed: f64) -> String {
    format!("{speed}")
}

struct Resolver<'a> {
    base_dir: &'a Path,
    maps: BTreeMap<PathBuf, Arc<GridMap>>,
}

impl Resolver<'_> {
    fn map(&mut self, common: &Common, fallback: &Common) -> Result<Arc<GridMap>> {
        if let Some(p) = common
            .map
            .as_ref()
            .or(if common.grid.is_some() || common.obstacles.is_some() {
                None
            } else {
                fallback.map.as_ref()
            })
        {
            let path = if p.is_absolute() {
                p.clone()
            } else {
                self.base_dir.join(p)
            };
            if let Some(m) = self.maps.get(&path) {
                return Ok(Arc::clone(m));
            }
            let m = Arc::new(GridMap::read(&path)?);
            self.maps.insert(path, Arc::clone(&m));
            return Ok(m);
        }
        let grid = common
            .grid
            .as_ref()
            .or(fallback.grid.as_ref())
            .cloned()
            .unwrap_or(GridDocument {
                width: 500,
                height: 100,
                resolution: 0.1,
                origin: [-10.0, -5.0],
            });
        let mut map = GridMap::empty(grid.width, grid.height, grid.resolution, grid.origin)?;
        for [min, max] in common
            .obstacles
            .as_ref()
            .or(fallback.obstacles.as_ref())
            .into_iter()
            .flatten()
        {
            map.fill_box(*min, *max);
        }
        Ok(Arc::new(map))
    }
}

impl SafetySuite {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::from_json(&text, base).map_err(|e| match e {
            Error::Parse { message, .. } => Error::parse(path.display().to_string(), message),
            other => other,
        })
    }

    /// Expands the hazard × speed matrix (ids `<hazard>_v<speed>`) followed
    /// by the explicit scenarios.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let doc: SuiteDocument = serde_json::from_str(text).map_err(|e| Error::parse("safety suite", e.to_string()))?;
        let mut resolver = Resolver {
            base_dir,
            maps: BTreeMap::new(),
        };

        let model = match &doc.model {
            Some(p) => {
                let p = if p.is_absolute() { p.clone() } else { base_dir.join(p) };
                let mut mm = MultiModelDocument::read(&p)?;
                mm.duration.get_or_insert(0.0);
                Some(mm.into_config()?)
            }
            None => None,
        };

        let mut raw: Vec<ScenarioDocument> = Vec::new();
        if let Some(matrix) = &doc.matrix {
            for (hazard, sensor) in &matrix.hazards {
                for &speed in &matrix.speeds {
                    let common = Common {
                        sensor: sensor.clone(),
                        ..Default::default()
                    };
                    raw.push(ScenarioDocument {
                        id: format!("{hazard}_v{}", speed_tag(speed)),
                        speed,
                        common,
                    });
                }
            }
        }
        raw.extend(doc.scenarios.iter().cloned());
        if raw.is_empty() {
            return Err(Error::parse("safety suite", "no `scenarios` and no `matrix`"));
        }

        let d = &doc.common;
        let mut scenarios = Vec::with_capacity(raw.len());
        for s in raw {
            let c = &s.common;
            let map = resolver.map(c, d)?;
            if map.occupied_count() == 0 {
                return Err(Error::InvalidConfig(vec![format!("{}: map has no obstacle", s.id)]));
            }
            let mut sensor = d.sensor.clone();
            sensor.extend(c.sensor.clone());
            let mut supervisor = d.supervisor.clone();
            supervisor.extend(c.supervisor.clone());
            let scenario = SafetyScenario {
                speed: s.speed,
                sensor,
                supervisor,
                map,
                path: c
                    .path
                    .clone()
                    .or_else(|| d.path.clone())
                    .unwrap_or_else(|| vec![[0.0, 0.0], [DEFAULT_PATH_END, 0.0]]),
                duration: c.duration.or(d.duration).unwrap_or(DEFAULT_DURATION),
                step_size: c
                    .step_size
                    .or(d.step_size)
                    .unwrap_or(crate::orchestrator::DEFAULT_STEP_SIZE),
                gap_threshold: c.gap_threshold.or(d.gap_threshold).unwrap_or(0.0),
                id: s.id,
            };
            if !(scenario.speed >= 0.0 && scenario.speed.is_finite()) {
                return Err(Error::InvalidConfig(vec![format!(
                    "{}: speed {} must be non-negative",
                    scenario.id, scenario.speed
                )]));
            }
            if scenario.id.is_empty() || scenario.id.contains(['/', '\\']) || scenario.id.starts_with('.') {
                return Err(Error::InvalidConfig(vec![format!(
                    "run id `{}` is not usable as a directory name",
                    scenario.id
                )]));
            }
            scenarios.push(scenario);
        }
        Ok(Self { model, scenarios })
    }
}
