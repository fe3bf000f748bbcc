//! Design-space exploration: the cross-track objective, exhaustive parameter
//! sweeps, cross-scenario minimisation and Pareto ranking.

mod config;
mod results;

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::orchestrator::{run_cosim, InstanceSpec, MultiModelConfig, MultiModelDocument, PortRef};
use crate::simunit::Registry;
use crate::traces::{align_channels, position_channels, read_trace_csv, AlignedPair, TimedTrace};
use crate::units::{replay, vehicle};

pub use config::{parse_dse_config, read_dse_config, DseConfig, ScenarioSource, EXHAUSTIVE};
pub use results::{
    dse_results_csv, parse_dse_results, read_dse_results, write_dse_results, write_objectives, Objectives,
};

/// Ordered parameter names with their candidate values.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterSpace {
    entries: Vec<(String, Vec<f64>)>,
}

impl ParameterSpace {
    pub fn new(entries: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let mut names = HashSet::new();
        for (name, values) in &entries {
            let invalid = |reason: String| Error::InvalidParameter {
                name: name.clone(),
                reason,
            };
            if !names.insert(name.as_str()) {
                return Err(invalid("listed twice".into()));
            }
            if values.is_empty() {
                return Err(invalid("empty candidate list".into()));
            }
            for (i, v) in values.iter().enumerate() {
                if !v.is_finite() {
                    return Err(invalid(format!("non-finite candidate {v}")));
                }
                if values[..i].contains(v) {
                    return Err(invalid(format!("duplicate candidate {v}")));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn values(&self, index: usize) -> &[f64] {
        &self.entries[index].1
    }

    pub fn grid_size(&self) -> usize {
        self.entries.iter().map(|(_, v)| v.len()).product()
    }
}

/// Parameter name → value, in the space's key order.
pub type ParameterAssignment = Vec<(String, f64)>;

pub fn format_assignment(assignment: &[(String, f64)]) -> String {
    let body: Vec<String> = assignment.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("[{}]", body.join(", "))
}

/// Full cartesian product; the last key varies fastest.
pub fn expand_grid(space: &ParameterSpace) -> Vec<ParameterAssignment> {
    let total = space.grid_size();
    let mut grid = Vec::with_capacity(total);
    let mut digits = vec![0usize; space.len()];
    for _ in 0..total {
        grid.push(
            space
                .entries
                .iter()
                .zip(&digits)
                .map(|((name, values), &d)| (name.clone(), values[d]))
                .collect(),
        );
        for (k, (_, values)) in space.entries.iter().enumerate().rev() {
            digits[k] += 1;
            if digits[k] < values.len() {
                break;
            }
            digits[k] = 0;
        }
    }
    grid
}

#[derive(Clone, Debug, PartialEq)]
pub struct DseResultRow {
    pub scenario: String,
    pub assignment: ParameterAssignment,
    pub mean_error: f64,
    pub max_error: f64,
}

/// Mean and maximum Euclidean distance between paired positions.
pub fn cross_track_error(pair: &AlignedPair) -> Result<(f64, f64)> {
    if pair.is_empty() {
        return Err(Error::EmptyTrace("aligned positions".into()));
    }
    let mut sum = 0.0;
    let mut max = 0.0f64;
    for [xr, yr, xs, ys] in &pair.pairs {
        let d = ((xs - xr).powi(2) + (ys - yr).powi(2)).sqrt();
        sum += d;
        max = max.max(d);
    }
    Ok((sum / pair.len() as f64, max))
}

/// Assignment bits, for exact lookups.
fn assignment_key(assignment: &[(String, f64)]) -> Vec<(&str, u64)> {
    assignment.iter().map(|(k, v)| (k.as_str(), v.to_bits())).collect()
}

/// Assignment minimising the summed `mean_error` over all scenarios, with
/// that sum. Assignments are tried in order of first appearance, which for
/// sweep output is grid order; the first of equal totals wins.
pub fn optimize(rows: &[DseResultRow]) -> Result<(ParameterAssignment, f64)> {
    if rows.is_empty() {
        return Err(Error::IncompleteGrid("no result rows".into()));
    }
    let mut scenarios: Vec<&str> = Vec::new();
    let mut scenario_index: HashMap<&str, usize> = HashMap::new();
    let mut assignments: Vec<&ParameterAssignment> = Vec::new();
    let mut assignment_index: HashMap<Vec<(&str, u64)>, usize> = HashMap::new();
    let mut cells: Vec<(usize, usize, f64)> = Vec::with_capacity(rows.len());
    for row in rows {
        let s = *scenario_index.entry(&row.scenario).or_insert_with(|| {
            scenarios.push(&row.scenario);
            scenarios.len() - 1
        });
        let a = *assignment_index
            .entry(assignment_key(&row.assignment))
            .or_insert_with(|| {
                assignments.push(&row.assignment);
                assignments.len() - 1
            });
        cells.push((s, a, row.mean_error));
    }

    let mut table: Vec<Option<f64>> = vec![None; scenarios.len() * assignments.len()];
    for (s, a, mean) in cells {
        let slot = &mut table[a * scenarios.len() + s];
        if slot.is_some() {
            return Err(Error::IncompleteGrid(format!(
                "scenario `{}` lists {} more than once",
                scenarios[s],
                format_assignment(assignments[a])
            )));
        }
        *slot = Some(mean);
    }

    let mut best: Option<(usize, f64)> = None;
    for a in 0..assignments.len() {
        let mut total = 0.0;
        for s in 0..scenarios.len() {
            total += table[a * scenarios.len() + s].ok_or_else(|| {
                Error::IncompleteGrid(format!(
                    "scenario `{}` has no row for {}",
                    scenarios[s],
                    format_assignment(assignments[a])
                ))
            })?;
        }
        if best.is_none_or(|(_, b)| total < b) {
            best = Some((a, total));
        }
    }
    let (a, total) = best.expect("at least one assignment");
    Ok((assignments[a].clone(), total))
}

/// Indices of the points not strictly dominated in both coordinates
/// (minimisation), ordered by first coordinate, then second, then index.
pub fn pareto_front(points: &[(f64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        points[i]
            .0
            .total_cmp(&points[j].0)
            .then(points[i].1.total_cmp(&points[j].1))
            .then(i.cmp(&j))
    });
    let mut front = Vec::new();
    // lowest second coordinate among points with a strictly smaller first
    let mut best_before = f64::INFINITY;
    let mut start = 0;
    while start < order.len() {
        let first = points[order[start]].0;
        let mut end = start;
        while end < order.len() && points[order[end]].0 == first {
            end += 1;
        }
        let group_min = points[order[start]].1;
        for &i in &order[start..end] {
            let second = points[i].1;
            if second == group_min && second < best_before {
                front.push(i);
            }
        }
        best_before = best_before.min(group_min);
        start = end;
    }
    front
}

/// Rows on the (mean_error, max_error) Pareto front, ascending by mean.
pub fn pareto_rank(rows: &[DseResultRow]) -> Vec<DseResultRow> {
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.mean_error, r.max_error)).collect();
    pareto_front(&points).into_iter().map(|i| rows[i].clone()).collect()
}

pub const AGGREGATE_SCENARIO: &str = "*";

/// One row per assignment (first-appearance order): summed mean error and
/// the largest max error across scenarios.
pub fn aggregate_by_assignment(rows: &[DseResultRow]) -> Vec<DseResultRow> {
    let mut index: HashMap<Vec<(&str, u64)>, usize> = HashMap::new();
    let mut out: Vec<DseResultRow> = Vec::new();
    for row in rows {
        match index.get(&assignment_key(&row.assignment)) {
            Some(&i) => {
                out[i].mean_error += row.mean_error;
                out[i].max_error = out[i].max_error.max(row.max_error);
            }
            None => {
                index.insert(assignment_key(&row.assignment), out.len());
                out.push(DseResultRow {
                    scenario: AGGREGATE_SCENARIO.into(),
                    ..row.clone()
                });
            }
        }
    }
    out
}

/// A scenario with its traces loaded.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub inputs: TimedTrace,
    pub reference: TimedTrace,
}

/// Everything a sweep needs, in memory.
#[derive(Clone, Debug)]
pub struct DseStudy {
    pub model: MultiModelConfig,
    pub space: ParameterSpace,
    pub scenarios: Vec<Scenario>,
    pub position_outputs: [PortRef; 2],
    pub replay_instance: String,
}

#[derive(Clone, Debug, Default)]
pub struct SweepOptions {
    pub workers: usize,
    /// When set, each run writes `results.csv` and `objectives.json` under
    /// `<runs_dir>/<scenario>/<grid index>/`.
    pub runs_dir: Option<PathBuf>,
}

impl SweepOptions {
    pub fn workers(workers: usize) -> Self {
        Self {
            workers,
            runs_dir: None,
        }
    }
}

/// Replayed steering driving a single vehicle, the calibration topology.
pub fn calibration_model(vehicle_instance: &str, step_size: f64) -> MultiModelConfig {
    MultiModelConfig::new(step_size, 0.0)
        .instance("steering", InstanceSpec::new(replay::UNIT_TYPE))
        .instance(vehicle_instance, InstanceSpec::new(vehicle::UNIT_TYPE))
        .connect("steering.velocity", &format!("{vehicle_instance}.velocity"))
        .connect("steering.delta_f", &format!("{vehicle_instance}.delta_f"))
}

impl DseStudy {
    /// The multi-model for one run: assignment applied as parameter
    /// overrides, `inputs` replayed, positions recorded.
    pub fn configure(
        &self,
        inputs: &TimedTrace,
        duration: f64,
        assignment: &[(String, f64)],
    ) -> Result<MultiModelConfig> {
        let mut model = self.model.clone();
        model.duration = duration;
        model.outputs = self.position_outputs.to_vec();
        let replay = model.instances.get_mut(&self.replay_instance).ok_or_else(|| {
            Error::InvalidConfig(vec![format!(
                "replay instance `{}` is not part of the multi-model",
                self.replay_instance
            )])
        })?;
        replay.attachments.trace = Some(inputs.clone());
        for (name, value) in assignment {
            let port: PortRef = name.parse()?;
            let spec = model.instances.get_mut(&port.instance).ok_or_else(|| {
                Error::InvalidConfig(vec![format!(
                    "{name}: parameter of unknown instance `{}`",
                    port.instance
                )])
            })?;
            spec.parameters.insert(port.port, *value);
        }
        Ok(model)
    }

    pub fn simulate(
        &self,
        registry: &Registry,
        inputs: &TimedTrace,
        duration: f64,
        assignment: &[(String, f64)],
    ) -> Result<TimedTrace> {
        run_cosim(&self.configure(inputs, duration, assignment)?, registry)
    }

    fn run_one(
        &self,
        registry: &Registry,
        scenario: &Scenario,
        index: usize,
        assignment: &[(String, f64)],
        runs_dir: Option<&Path>,
    ) -> Result<DseResultRow> {
        let duration = [&scenario.inputs, &scenario.reference]
            .iter()
            .filter_map(|t| t.last_time())
            .fold(0.0, f64::max);
        let simulated = self.simulate(registry, &scenario.inputs, duration, assignment)?;
        let reference_xy = position_channels(&scenario.reference)?;
        let pair = align_channels(&scenario.reference, reference_xy, &simulated, [0, 1])?;
        let (mean_error, max_error) = cross_track_error(&pair)?;
        if let Some(dir) = runs_dir {
            let dir = dir.join(&scenario.name).join(format!("{index:04}"));
            crate::traces::write_trace_csv(&simulated, dir.join("results.csv"))?;
            write_objectives(
                &Objectives {
                    cross_track_mean: mean_error,
                    cross_track_max: max_error,
                },
                dir.join("objectives.json"),
            )?;
        }
        Ok(DseResultRow {
            scenario: scenario.name.clone(),
            assignment: assignment.to_vec(),
            mean_error,
            max_error,
        })
    }

    /// Every (scenario, assignment) pair, scenario-major and in grid order
    /// whatever the worker count.
    pub fn run_sweep(&self, registry: &Registry, options: &SweepOptions) -> Result<Vec<DseResultRow>> {
        let grid = expand_grid(&self.space);
        let jobs: Vec<(usize, usize)> = (0..self.scenarios.len())
            .flat_map(|s| (0..grid.len()).map(move |a| (s, a)))
            .collect();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.workers.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(vec![format!("cannot start workers: {e}")]))?;
        let runs_dir = options.runs_dir.as_deref();
        let results: Vec<Result<DseResultRow>> = pool.install(|| {
            jobs.par_iter()
                .map(|&(s, a)| {
                    let scenario = &self.scenarios[s];
                    self.run_one(registry, scenario, a, &grid[a], runs_dir)
                        .map_err(|e| Error::SweepRun {
                            scenario: scenario.name.clone(),
                            assignment: format_assignment(&grid[a]),
                            source: Box::new(e),
                        })
                })
                .collect()
        });
        results.into_iter().collect()
    }
}

/// Loads the multi-model and scenario traces a configuration refers to.
pub fn load_study(config: &DseConfig) -> Result<DseStudy> {
    let mm_path = config
        .multi_model
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig(vec!["DSE configuration names no `multiModel`".into()]))?;
    let mut doc = MultiModelDocument::read(mm_path)?;
    // duration comes from each scenario's traces
    doc.duration.get_or_insert(0.0);
    if let Some(h) = config.step_size {
        doc.step_size = Some(h);
    }
    let replay_instance = match &config.replay_instance {
        Some(name) => name.clone(),
        None => {
            let replays: Vec<&String> = doc
                .instances
                .iter()
                .filter(|(_, i)| i.unit_type == replay::UNIT_TYPE)
                .map(|(n, _)| n)
                .collect();
            match replays.as_slice() {
                [one] => (*one).clone(),
                _ => {
                    return Err(Error::InvalidConfig(vec![format!(
                        "{}: expected exactly one replay instance, found {}; set `replayInstance`",
                        mm_path.display(),
                        replays.len()
                    )]))
                }
            }
        }
    };
    if let Some(instance) = doc.instances.get_mut(&replay_instance) {
        // replaced per scenario
        instance.trace = None;
    }
    let model = doc.into_config()?;

    let scenarios = config
        .scenarios
        .iter()
        .map(|s| {
            Ok(Scenario {
                name: s.name.clone(),
                inputs: read_trace_csv(&s.inputs, Some(&replay::CHANNELS[..]))?,
                reference: read_trace_csv(&s.reference, None)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(DseStudy {
        model,
        space: config.parameters.clone(),
        scenarios,
        position_outputs: config.position_outputs.clone(),
        replay_instance,
    })
}

/// Reads every referenced file, then sweeps.
pub fn run_sweep(config: &DseConfig, registry: &Registry, options: &SweepOptions) -> Result<Vec<DseResultRow>> {
    load_study(config)?.run_sweep(registry, options)
}

/// Creates the parent directory of `path` if needed.
pub(crate) fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => fs::create_dir_all(p).map_err(|e| Error::io(p, e)),
        _ => Ok(()),
    }
}
