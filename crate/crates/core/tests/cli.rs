use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cosim-dse"))
}

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("spawn cosim-dse")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const STRAIGHT: &str = r#"{
  "instances": {"veh": {"type": "vehicle", "inputs": {"velocity": 2.0}}},
  "outputs": ["veh.x", "veh.y"],
  "step_size": 0.01,
  "duration": 5.0
}"#;

#[test]
fn cosim_writes_one_row_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("mm.json");
    fs::write(&config, STRAIGHT).unwrap();
    let out = dir.path().join("results.csv");
    let o = run(bin().args(["cosim", "--config"]).arg(&config).arg("--out").arg(&out));
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "time,veh.x,veh.y");
    assert_eq!(lines.len(), 1 + 501);
    let last: Vec<f64> = lines[501].split(',').map(|v| v.parse().unwrap()).collect();
    assert!((last[0] - 5.0).abs() < 1e-9);
    assert!((last[1] - 10.0).abs() < 1e-9);
}

#[test]
fn missing_config_is_exit_2_naming_the_path() {
    let o = run(bin().args(["cosim", "--config", "/nonexistent/mm.json", "--out", "/tmp/never.csv"]));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/nonexistent/mm.json"), "{}", stderr(&o));
}

#[test]
fn bad_connection_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("mm.json");
    fs::write(
        &config,
        r#"{"instances": {"veh": {"type": "vehicle"}},
            "connections": [{"from": "veh.zz", "to": "veh.velocity"}],
            "duration": 1.0}"#,
    )
    .unwrap();
    let o = run(bin()
        .args(["cosim", "--config"])
        .arg(&config)
        .args(["--out", "/tmp/never.csv"]));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("veh.zz"), "{}", stderr(&o));
}

#[test]
fn usage_errors_are_exit_2() {
    assert_eq!(run(bin().arg("frobnicate")).status.code(), Some(2));
    assert_eq!(run(bin().args(["dse", "optimize"])).status.code(), Some(2));
    assert_eq!(run(bin().arg("--help")).status.code(), Some(0));
}

#[test]
fn scenario_gen_speed_step_plateaus() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("speed_step.csv");
    let o = run(bin()
        .args([
            "scenario-gen",
            "--kind",
            "speed_step",
            "--name",
            "s",
            "--duration",
            "8",
            "--base-speed",
            "2",
        ])
        .args(["--sample-period", "1", "--out"])
        .arg(&out));
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let v: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(v, [0.5, 0.5, 1.0, 1.0, 1.5, 1.5, 2.0, 2.0, 2.0]);
}

#[test]
fn rank_and_optimize_on_a_small_table() {
    let dir = tempfile::tempdir().unwrap();
    let results = dir.path().join("dse_results.csv");
    fs::write(
        &results,
        "scenario,a,mean_cross_track_error,max_cross_track_error\n\
         s1,1,0.5,1.0\ns1,2,0.4,2.0\ns1,3,0.6,3.0\n\
         s2,1,0.5,1.0\ns2,2,0.4,2.0\ns2,3,0.1,0.2\n",
    )
    .unwrap();
    let o = run(bin()
        .args(["dse", "optimize", "--format", "json", "--results"])
        .arg(&results));
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(doc["parameters"]["a"], 3.0);
    assert!((doc["total_mean_cross_track_error"].as_f64().unwrap() - 0.7).abs() < 1e-12);

    let front = dir.path().join("front.csv");
    let o = run(bin()
        .args(["dse", "rank", "--scenario", "s2", "--results"])
        .arg(&results)
        .arg("--out")
        .arg(&front));
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&front).unwrap();
    assert_eq!(text.lines().count(), 2, "{text}");
    assert!(text.lines().nth(1).unwrap().starts_with("s2,3,"));
}

#[test]
fn fault_tree_top_event() {
    let tree = data("safety/fault_tree.json");
    let o = run(bin()
        .arg("ft")
        .arg("--tree")
        .arg(&tree)
        .args(["--events", "fog=1,rain=0", "--cut-sets"]));
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("TOP: true"), "{out}");
    assert!(out.contains("CUT: {fog}") && out.contains("CUT: {rain}"), "{out}");

    let o = run(bin()
        .arg("ft")
        .arg("--tree")
        .arg(&tree)
        .args(["--events", "fog=0,rain=0"]));
    assert!(stdout(&o).contains("TOP: false"));

    let o = run(bin().arg("ft").arg("--tree").arg(&tree).args(["--events", "fog=0"]));
    assert_eq!(o.status.code(), Some(2), "unassigned basic event");
}

#[test]
fn safety_run_then_gsn() {
    let dir = tempfile::tempdir().unwrap();
    let evidence = dir.path().join("evidence");
    let o = run(bin()
        .arg("safety-run")
        .arg("--suite")
        .arg(data("safety/suite.json"))
        .arg("--evidence-dir")
        .arg(&evidence)
        .args(["--jobs", "4"]));
    assert!(o.status.success(), "{}", stderr(&o));
    let runs: Vec<_> = fs::read_dir(&evidence).unwrap().collect();
    assert_eq!(runs.len(), 9);
    for speed in [2, 3] {
        let v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(evidence.join(format!("fog_v{speed}/verdict.json"))).unwrap())
                .unwrap();
        assert_eq!(v["passed"], true, "{v}");
    }
    assert!(stdout(&o).contains("PASS fog_v2"));

    let dot = dir.path().join("gsn.dot");
    let o = run(bin()
        .arg("gsn")
        .arg("--gsn")
        .arg(data("safety/gsn.json"))
        .arg("--evidence-dir")
        .arg(&evidence)
        .arg("--out")
        .arg(&dot));
    assert!(o.status.success(), "{}", stderr(&o));
    // inaccurate-sensor runs fail, so the argument is not supported
    assert_eq!(stdout(&o).trim(), "unsupported");
    let text = fs::read_to_string(&dot).unwrap();
    assert!(text.starts_with("// GSN safety argument"));
    assert!(text.contains("\"Sn3\" [shape=circle"));

    // without evidence only the structure is rendered
    let o = run(bin()
        .arg("gsn")
        .arg("--gsn")
        .arg(data("safety/gsn.json"))
        .arg("--out")
        .arg(&dot));
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "no evidence linked");
    assert!(!fs::read_to_string(&dot).unwrap().contains("style=\"dashed\""));

    // a solution citing a run that is not in the evidence directory
    fs::remove_dir_all(evidence.join("fog_v1")).unwrap();
    let o = run(bin()
        .arg("gsn")
        .arg("--gsn")
        .arg(data("safety/gsn.json"))
        .arg("--evidence-dir")
        .arg(&evidence)
        .arg("--out")
        .arg(&dot));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("fog_v1"), "{}", stderr(&o));
}

#[test]
fn sweep_is_identical_for_any_job_count() {
    let dir = tempfile::tempdir().unwrap();
    let study = dir.path();
    for (name, kind, amp) in [("sin1", "sin", "0.4"), ("speed_step1", "speed_step", "0")] {
        fs::create_dir_all(study.join("steering_inputs")).unwrap();
        fs::create_dir_all(study.join("gps_position")).unwrap();
        let inputs = study.join(format!("steering_inputs/{name}.csv"));
        let o = run(bin()
            .args([
                "scenario-gen",
                "--kind",
                kind,
                "--name",
                name,
                "--duration",
                "6",
                "--base-speed",
                "3",
            ])
            .args(["--amplitude", amp, "--sample-period", "0.1", "--out"])
            .arg(&inputs));
        assert!(o.status.success(), "{}", stderr(&o));
        let o = run(bin()
            .arg("cosim")
            .arg("--config")
            .arg(data("calibration/truth_multimodel.json"))
            .arg("--scenario-inputs")
            .arg(&inputs)
            .arg("--out")
            .arg(study.join(format!("gps_position/{name}.csv"))));
        assert!(o.status.success(), "{}", stderr(&o));
    }
    fs::copy(data("calibration/multimodel.json"), study.join("multimodel.json")).unwrap();
    fs::write(
        study.join("dse.json"),
        r#"{"algorithm": "exhaustive",
            "parameters": {"{Robotti}.RobottiInstance.cAlphaF": [20k, 29k],
                           "{Robotti}.RobottiInstance.mu": [0.3, 0.5],
                           "{Robotti}.RobottiInstance.m_robot": [1k, 2k]},
            "multiModel": "multimodel.json",
            "scenarios": ["sin1", "speed_step1"]}"#,
    )
    .unwrap();
    let mut outputs = Vec::new();
    for jobs in ["1", "3", "8"] {
        let out = study.join(format!("results_{jobs}.csv"));
        let o = run(bin()
            .arg("dse")
            .arg("sweep")
            .arg("--config")
            .arg(study.join("dse.json"))
            .arg("--out")
            .arg(&out)
            .args(["--jobs", jobs]));
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push(fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 8);

    let o = run(bin()
        .args(["dse", "optimize", "--results"])
        .arg(study.join("results_1.csv")));
    let out = stdout(&o);
    assert!(
        out.contains("cAlphaF=29000") && out.contains("mu=0.5") && out.contains("m_robot=2000"),
        "{out}"
    );
}

#[test]
fn non_finite_replay_input_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("inputs.csv"), "time,velocity,delta_f\n0,1,0\n1,1,NaN\n").unwrap();
    let config = dir.path().join("mm.json");
    fs::write(
        &config,
        r#"{"instances": {"steering": {"type": "replay", "trace": "inputs.csv"},
                          "veh": {"type": "vehicle"}},
            "connections": [{"from": "steering.velocity", "to": "veh.velocity"},
                            {"from": "steering.delta_f", "to": "veh.delta_f"}],
            "outputs": ["veh.x"], "duration": 2.0}"#,
    )
    .unwrap();
    let o = run(bin()
        .arg("cosim")
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("r.csv")));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("inputs.csv:3"), "{}", stderr(&o));
}
