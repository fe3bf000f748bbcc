//! Command-line front end. Exit codes: 0 success, 2 usage or configuration
//! error, 3 simulation failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::dse::{self, DseResultRow, SweepOptions};
use crate::error::{Error, Result};
use crate::orchestrator::{run_cosim, validate_config, write_results_csv, MultiModelDocument};
use crate::safety::{self, AnnotatedGsn, FaultTree, GsnGraph, SafetySuite};
use crate::simunit::Registry;
use crate::traces::{generate_scenario, write_trace_csv, ScenarioKind, ScenarioSpec};
use crate::units::replay;

#[derive(Debug, Parser)]
#[command(
    name = "cosim-dse",
    version,
    about = "Co-simulation, design-space exploration and safety evidence"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one co-simulation and write its results CSV.
    Cosim(CosimArgs),
    /// Parameter sweeps and their analysis.
    #[command(subcommand)]
    Dse(DseCommand),
    /// Generate a synthetic steering-input trace.
    ScenarioGen(ScenarioGenArgs),
    /// Run a closed-loop safety suite and write evidence.
    SafetyRun(SafetyRunArgs),
    /// Link a GSN argument to evidence and render it as DOT.
    Gsn(GsnArgs),
    /// Evaluate a fault tree.
    Ft(FtArgs),
}

#[derive(Debug, Args)]
struct CosimArgs {
    /// Multi-model configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Steering inputs replayed by the multi-model's replay instance.
    #[arg(long)]
    scenario_inputs: Option<PathBuf>,
    /// Replay instance to feed when several exist.
    #[arg(long)]
    replay_instance: Option<String>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    duration: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum DseCommand {
    /// Exhaustive sweep over every scenario and parameter assignment.
    Sweep(SweepArgs),
    /// Assignment minimising the summed mean error across scenarios.
    Optimize(OptimizeArgs),
    /// Pareto front over (mean, max) cross-track error.
    Rank(RankArgs),
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Also keep every run's results.csv and objectives.json here.
    #[arg(long)]
    runs_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    /// Also write the result here.
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Args)]
struct RankArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    /// Also write the result here.
    out: Option<PathBuf>,
    /// Rank assignments by summed mean and worst max error over scenarios.
    #[arg(long, conflicts_with = "scenario")]
    aggregate: bool,
    /// Rank only this scenario's rows.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Args)]
struct ScenarioGenArgs {
    #[arg(long, value_parser = parse_kind)]
    kind: ScenarioKind,
    #[arg(long)]
    name: String,
    #[arg(long)]
    duration: f64,
    #[arg(long)]
    base_speed: f64,
    #[arg(long, default_value_t = 0.0)]
    amplitude: f64,
    #[arg(long, default_value_t = 0.01)]
    sample_period: f64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_kind(s: &str) -> std::result::Result<ScenarioKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Args)]
struct SafetyRunArgs {
    #[arg(long)]
    suite: PathBuf,
    #[arg(long)]
    evidence_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug, Args)]
struct GsnArgs {
    #[arg(long)]
    gsn: PathBuf,
    /// Directory of `<run_id>/verdict.json` files.
    #[arg(long)]
    evidence_dir: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FtArgs {
    #[arg(long)]
    tree: PathBuf,
    /// `id=0|1,...` or a JSON file mapping ids to booleans.
    #[arg(long)]
    events: Option<String>,
    /// Also list the minimal cut sets.
    #[arg(long)]
    cut_sets: bool,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    let registry = Registry::with_builtins();
    match command {
        Command::Cosim(a) => cosim(&registry, a),
        Command::Dse(DseCommand::Sweep(a)) => sweep(&registry, a),
        Command::Dse(DseCommand::Optimize(a)) => optimize(a),
        Command::Dse(DseCommand::Rank(a)) => rank(a),
        Command::ScenarioGen(a) => scenario_gen(a),
        Command::SafetyRun(a) => safety_run(&registry, a),
        Command::Gsn(a) => gsn(a),
        Command::Ft(a) => ft(a),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn cosim(registry: &Registry, a: CosimArgs) -> Result<()> {
    let mut doc = MultiModelDocument::read(&a.config)?;
    if let Some(inputs) = &a.scenario_inputs {
        let target = match &a.replay_instance {
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
                            "--scenario-inputs needs exactly one replay instance, found {}; use --replay-instance",
                            replays.len()
                        )]))
                    }
                }
            }
        };
        let instance = doc
            .instances
            .get_mut(&target)
            .ok_or_else(|| Error::InvalidConfig(vec![format!("no instance `{target}` in {}", a.config.display())]))?;
        // resolved against the working directory, not the config
        instance.trace = Some(std::path::absolute(inputs).map_err(|e| Error::io(inputs, e))?);
    }
    if a.duration.is_some() {
        doc.duration = a.duration;
    }
    let mut config = doc.into_config()?;
    if let Some(h) = a.step {
        config.step_size = h;
    }
    let diagnostics = validate_config(&config, registry);
    if !diagnostics.is_empty() {
        return Err(Error::InvalidConfig(diagnostics));
    }
    let started = Instant::now();
    let trace = run_cosim(&config, registry)?;
    write_results_csv(&trace, &a.out)?;
    println!(
        "rows: {} written to {} in {:.3} s",
        trace.len(),
        a.out.display(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

fn sweep(registry: &Registry, a: SweepArgs) -> Result<()> {
    if a.jobs == 0 {
        return Err(Error::InvalidConfig(vec!["--jobs must be at least 1".into()]));
    }
    let config = dse::read_dse_config(&a.config)?;
    for w in &config.warnings {
        eprintln!("warning: {w}");
    }
    let started = Instant::now();
    let rows = dse::run_sweep(
        &config,
        registry,
        &SweepOptions {
            workers: a.jobs,
            runs_dir: a.runs_dir,
        },
    )?;
    dse::write_dse_results(&rows, &a.out)?;
    println!(
        "rows: {} ({} scenarios x {} assignments) written to {} in {:.3} s",
        rows.len(),
        config.scenarios.len(),
        config.parameters.grid_size(),
        a.out.display(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

fn assignment_object(assignment: &[(String, f64)]) -> Map<String, Value> {
    assignment.iter().map(|(k, v)| (k.clone(), json!(v))).collect()
}

fn optimize(a: OptimizeArgs) -> Result<()> {
    let rows = dse::read_dse_results(&a.results)?;
    let (best, total) = dse::optimize(&rows)?;
    let mut doc = Map::new();
    doc.insert("parameters".into(), Value::Object(assignment_object(&best)));
    doc.insert("total_mean_cross_track_error".into(), json!(total));
    let doc = Value::Object(doc);
    let mut text = serde_json::to_string_pretty(&doc).expect("json value");
    text.push('\n');
    if let Some(out) = &a.out {
        write_text(out, &text)?;
    }
    match a.format {
        Format::Json => println!("{}", serde_json::to_string(&doc).expect("json value")),
        Format::Text => {
            println!("best assignment: {}", dse::format_assignment(&best));
            println!("total mean cross-track error: {total}");
        }
    }
    Ok(())
}

fn rank(a: RankArgs) -> Result<()> {
    let rows = dse::read_dse_results(&a.results)?;
    let selected: Vec<DseResultRow> = if a.aggregate {
        dse::aggregate_by_assignment(&rows)
    } else if let Some(s) = &a.scenario {
        let only: Vec<DseResultRow> = rows.into_iter().filter(|r| &r.scenario == s).collect();
        if only.is_empty() {
            return Err(Error::InvalidConfig(vec![format!("no rows for scenario `{s}`")]));
        }
        only
    } else {
        rows
    };
    if selected.is_empty() {
        return Err(Error::InvalidConfig(vec![format!(
            "{} has no rows",
            a.results.display()
        )]));
    }
    let front = dse::pareto_rank(&selected);
    if let Some(out) = &a.out {
        dse::write_dse_results(&front, out)?;
    }
    match a.format {
        Format::Json => {
            let items: Vec<Value> = front
                .iter()
                .map(|r| {
                    json!({
                        "scenario": r.scenario,
                        "parameters": Value::Object(assignment_object(&r.assignment)),
                        "mean_cross_track_error": r.mean_error,
                        "max_cross_track_error": r.max_error,
                    })
                })
                .collect();
            println!(
                "{}",
                serde_json::to_string(&json!({ "front": items })).expect("json value")
            );
        }
        Format::Text => {
            println!("pareto front: {} of {} rows", front.len(), selected.len());
            for r in &front {
                println!(
                    "  {} {} mean={} max={}",
                    r.scenario,
                    dse::format_assignment(&r.assignment),
                    r.mean_error,
                    r.max_error
                );
            }
        }
    }
    Ok(())
}

fn scenario_gen(a: ScenarioGenArgs) -> Result<()> {
    let spec = ScenarioSpec {
        name: a.name,
        kind: a.kind,
        duration: a.duration,
        base_speed: a.base_speed,
        amplitude: a.amplitude,
        sample_period: a.sample_period,
    };
    let trace = generate_scenario(&spec)?;
    write_trace_csv(&trace, &a.out)?;
    println!(
        "scenario {}: {} rows written to {}",
        spec.name,
        trace.len(),
        a.out.display()
    );
    Ok(())
}

fn safety_run(registry: &Registry, a: SafetyRunArgs) -> Result<()> {
    if a.jobs == 0 {
        return Err(Error::InvalidConfig(vec!["--jobs must be at least 1".into()]));
    }
    let suite = SafetySuite::read(&a.suite)?;
    let verdicts = safety::run_safety_suite(&suite, registry, Some(&a.evidence_dir), a.jobs)?;
    let passed = verdicts.iter().filter(|v| v.passed).count();
    for v in &verdicts {
        let gap = v.measured.map_or_else(|| "n/a".to_string(), |g| format!("{g:.4}"));
        let mut line = format!("{} {}  min_gap={gap}", if v.passed { "PASS" } else { "FAIL" }, v.run_id);
        if let Some(reason) = &v.reason {
            line.push_str(&format!("  ({reason})"));
        }
        println!("{line}");
    }
    println!(
        "{passed}/{} runs passed; evidence in {}",
        verdicts.len(),
        a.evidence_dir.display()
    );
    Ok(())
}

fn gsn(a: GsnArgs) -> Result<()> {
    let graph = GsnGraph::read(&a.gsn)?;
    let Some(dir) = &a.evidence_dir else {
        // structure only
        write_text(&a.out, &safety::render_gsn_dot(&AnnotatedGsn::unannotated(graph)))?;
        println!("no evidence linked");
        return Ok(());
    };
    let annotated = safety::link_evidence(&graph, &safety::read_evidence_dir(dir)?)?;
    write_text(&a.out, &safety::render_gsn_dot(&annotated))?;
    println!("{}", root_status(&annotated));
    Ok(())
}

fn root_status(annotated: &AnnotatedGsn) -> String {
    annotated
        .overall()
        .map_or_else(|| "undeveloped".to_string(), |s| s.to_string())
}

fn ft(a: FtArgs) -> Result<()> {
    let tree = FaultTree::read(&a.tree)?;
    if let Some(events) = &a.events {
        let states = if Path::new(events).is_file() {
            let text = fs::read_to_string(events).map_err(|e| Error::io(events, e))?;
            serde_json::from_str(&text).map_err(|e| Error::parse(events.clone(), e.to_string()))?
        } else {
            safety::parse_event_states(events)?
        };
        let top = safety::evaluate_fault_tree(&tree, &states)?;
        println!("TOP: {top}");
    } else if !a.cut_sets {
        return Err(Error::InvalidConfig(vec!["give --events and/or --cut-sets".into()]));
    }
    if a.cut_sets {
        for set in safety::minimal_cut_sets(&tree)? {
            println!("CUT: {{{}}}", set.join(", "));
        }
    }
    Ok(())
}
