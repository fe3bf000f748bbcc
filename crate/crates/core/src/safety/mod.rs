//! Safety-case support: fault trees, GSN arguments linked to simulation
//! evidence, and the closed-loop scenario suite producing that evidence.

pub mod fault_tree;
pub mod gsn;
pub mod suite;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use fault_tree::{evaluate_fault_tree, minimal_cut_sets, parse_event_states, FaultEvent, FaultTree, Gate};
pub use gsn::{link_evidence, render_gsn_dot, AnnotatedGsn, GsnGraph, GsnNode, NodeKind, Status};
pub use suite::{harvester_model, run_safety_suite, SafetyScenario, SafetySuite};

/// Outcome of one safety run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvidenceVerdict {
    pub run_id: String,
    pub passed: bool,
    pub criterion: String,
    /// Minimum vehicle-obstacle gap in metres; absent when the run failed.
    pub measured: Option<f64>,
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_speed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_engaged: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl EvidenceVerdict {
    pub fn measured(run_id: &str, passed: bool, measured: f64, threshold: f64) -> Self {
        Self {
            run_id: run_id.into(),
            passed,
            criterion: suite::CRITERION.into(),
            measured: Some(measured),
            threshold,
            final_speed: None,
            stop_engaged: None,
            reason: None,
        }
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self).expect("verdict serializes");
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))
    }
}

/// Reads every `<dir>/<run_id>/verdict.json`, sorted by run id.
pub fn read_evidence_dir(dir: impl AsRef<Path>) -> Result<Vec<EvidenceVerdict>> {
    let dir = dir.as_ref();
    let mut verdicts = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let file = entry.path().join("verdict.json");
        if file.is_file() {
            verdicts.push(EvidenceVerdict::read(&file)?);
        }
    }
    verdicts.sort_by(|a, b| a.run_id.cmp(&b.run_id));
    Ok(verdicts)
}
