//! DSE configuration documents.
//!
//! The reader accepts the historical hand-written form: numbers with a `k`
//! suffix (`20k`), unclosed objects at end of input, and the scenario list
//! given as one comma-separated string. The keys it needs are looked up
//! anywhere in the document, since in that form `parameters` and `scenarios`
//! can end up nested inside `objectiveDefinitions`.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::dse::ParameterSpace;
use crate::error::{Error, Result};
use crate::orchestrator::PortRef;

pub const EXHAUSTIVE: &str = "exhaustive";

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSource {
    pub name: String,
    /// Replayed steering inputs (`time,velocity,delta_f`).
    pub inputs: PathBuf,
    /// Recorded reference positions.
    pub reference: PathBuf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DseConfig {
    pub algorithm: String,
    pub parameters: ParameterSpace,
    pub scenarios: Vec<ScenarioSource>,
    pub multi_model: Option<PathBuf>,
    pub position_outputs: [PortRef; 2],
    pub replay_instance: Option<String>,
    pub step_size: Option<f64>,
    /// Keys that were read but have no effect.
    pub warnings: Vec<String>,
}

impl DseConfig {
    pub fn scenario_names(&self) -> impl Iterator<Item = &str> {
        self.scenarios.iter().map(|s| s.name.as_str())
    }
}

pub fn read_dse_config(path: impl AsRef<Path>) -> Result<DseConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_dse_config(&text, &path.display().to_string(), &base)
}

pub fn parse_dse_config(text: &str, origin: &str, base_dir: &Path) -> Result<DseConfig> {
    let normalized = normalize_document(text);
    let doc: Value =
        serde_json::from_str(&normalized).map_err(|e| Error::parse(origin, format!("malformed document: {e}")))?;
    let err = |msg: String| Error::parse(origin, msg);

    let algorithm = match find_key(&doc, "algorithm") {
        Some(Value::Object(a)) => a
            .get("type")
            .and_then(Value::as_str)
            .ok_or_else(|| err("`algorithm` has no string `type`".into()))?
            .to_string(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(err("`algorithm` must be an object or string".into())),
        None => EXHAUSTIVE.to_string(),
    };
    if algorithm != EXHAUSTIVE {
        return Err(Error::UnsupportedAlgorithm(algorithm));
    }

    let parameters = match find_key(&doc, "parameters") {
        Some(Value::Object(p)) => parse_space(p).map_err(err)?,
        Some(_) => return Err(err("`parameters` must be an object of value lists".into())),
        None => return Err(err("missing `parameters`".into())),
    };

    let names = match find_key(&doc, "scenarios") {
        Some(v) => scenario_names(v).map_err(err)?,
        None => return Err(err("missing `scenarios`".into())),
    };
    if names.is_empty() {
        return Err(err("`scenarios` is empty".into()));
    }
    let mut seen = HashSet::new();
    for n in &names {
        if !seen.insert(n.as_str()) {
            return Err(err(format!("duplicate scenario `{n}`")));
        }
    }

    let resolve = |p: &str| {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base_dir.join(p)
        }
    };
    let string_key = |key: &str| -> Result<Option<String>> {
        match find_key(&doc, key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(err(format!("`{key}` must be a string"))),
        }
    };

    let scenario_dir = string_key("scenarioDir")?.unwrap_or_else(|| ".".into());
    let mut explicit: BTreeMap<String, (Option<String>, Option<String>)> = BTreeMap::new();
    if let Some(files) = find_key(&doc, "scenarioFiles") {
        let files = files
            .as_object()
            .ok_or_else(|| err("`scenarioFiles` must be an object".into()))?;
        for (name, entry) in files {
            if !seen.contains(name.as_str()) {
                return Err(err(format!("`scenarioFiles` names undeclared scenario `{name}`")));
            }
            let field = |k: &str| entry.get(k).and_then(Value::as_str).map(str::to_string);
            explicit.insert(name.clone(), (field("inputs"), field("reference")));
        }
    }
    let scenarios = names
        .into_iter()
        .map(|name| {
            let (inputs, reference) = explicit.remove(&name).unwrap_or_default();
            let inputs = inputs.unwrap_or_else(|| format!("{scenario_dir}/steering_inputs/{name}.csv"));
            let reference = reference.unwrap_or_else(|| format!("{scenario_dir}/gps_position/{name}.csv"));
            ScenarioSource {
                inputs: resolve(&inputs),
                reference: resolve(&reference),
                name,
            }
        })
        .collect();

    let position_outputs = match find_key(&doc, "positionOutputs") {
        Some(Value::Array(items)) if items.len() == 2 => {
            let mut refs = items.iter().map(|v| {
                v.as_str()
                    .ok_or_else(|| err("`positionOutputs` entries must be strings".into()))?
                    .parse::<PortRef>()
            });
            [refs.next().expect("two")?, refs.next().expect("two")?]
        }
        Some(_) => return Err(err("`positionOutputs` must list exactly two ports".into())),
        None => {
            // the vehicle whose parameters are explored
            let instance = parameters
                .names()
                .next()
                .and_then(|n| n.parse::<PortRef>().ok())
                .map(|r| r.instance)
                .unwrap_or_else(|| "vehicle".into());
            [PortRef::new(instance.clone(), "x"), PortRef::new(instance, "y")]
        }
    };

    let step_size = match find_key(&doc, "stepSize") {
        None => None,
        Some(v) => Some(
            v.as_f64()
                .filter(|h| *h > 0.0 && h.is_finite())
                .ok_or_else(|| err("`stepSize` must be a positive number".into()))?,
        ),
    };

    let mut warnings = Vec::new();
    if find_key(&doc, "externalScripts").is_some() {
        warnings.push("`externalScripts` ignored: the built-in cross-track objective is used".to_string());
    }
    if let Some(c) = find_key(&doc, "parameterConstraints") {
        let empty = c.as_array().is_some_and(Vec::is_empty);
        warnings.push(if empty {
            "`parameterConstraints` ignored".to_string()
        } else {
            "`parameterConstraints` ignored: constraints are not supported, the full grid is explored".to_string()
        });
    }
    if normalized.len() != text.len() || normalized != text {
        warnings.push("document was normalized (k-suffixed numbers or unclosed brackets)".into());
    }

    Ok(DseConfig {
        algorithm,
        parameters,
        scenarios,
        multi_model: string_key("multiModel")?.map(|p| resolve(&p)),
        position_outputs,
        replay_instance: string_key("replayInstance")?,
        step_size,
        warnings,
    })
}

fn parse_space(object: &Map<String, Value>) -> Result<ParameterSpace, String> {
    let mut entries = Vec::with_capacity(object.len());
    for (name, values) in object {
        let list = values
            .as_array()
            .ok_or_else(|| format!("parameter `{name}` must be a list of numbers"))?;
        let values = list
            .iter()
            .map(|v| {
                v.as_f64()
                    .ok_or_else(|| format!("parameter `{name}`: `{v}` is not a number"))
            })
            .collect::<Result<Vec<f64>, String>>()?;
        entries.push((name.clone(), values));
    }
    ParameterSpace::new(entries).map_err(|e| e.to_string())
}

/// Accepts `["a", "b"]` as well as `["a, b"]` and `"a, b"`.
fn scenario_names(value: &Value) -> Result<Vec<String>, String> {
    let split = |s: &str| -> Vec<String> {
        s.split(',')
            .map(str::trim)
            .filter(|n| !n.is_empty())
            .map(str::to_string)
            .collect()
    };
    match value {
        Value::String(s) => Ok(split(s)),
        Value::Array(items) => {
            let mut names = Vec::new();
            for item in items {
                let s = item
                    .as_str()
                    .ok_or_else(|| format!("scenario entry `{item}` is not a string"))?;
                names.extend(split(s));
            }
            Ok(names)
        }
        _ => Err("`scenarios` must be a list of names".into()),
    }
}

/// Depth-first search in document order.
fn find_key<'a>(value: &'a Value, key: &str) -> Option<&'a Value> {
    match value {
        Value::Object(map) => {
            if let Some(v) = map.get(key) {
                return Some(v);
            }
            map.values().find_map(|v| find_key(v, key))
        }
        Value::Array(items) => items.iter().find_map(|v| find_key(v, key)),
        _ => None,
    }
}

/// Expands `k`-suffixed numbers and closes brackets left open at the end.
pub(crate) fn normalize_document(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len() + 8);
    let mut open: Vec<char> = Vec::new();
    let mut in_string = false;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if in_string {
            out.push(c);
            match c {
                '\\' if i + 1 < chars.len() => {
                    out.push(chars[i + 1]);
                    i += 1;
                }
                '"' => in_string = false,
                _ => {}
            }
            i += 1;
            continue;
        }
        match c {
            '"' => {
                in_string = true;
                out.push(c);
            }
            '{' => {
                open.push('}');
                out.push(c);
            }
            '[' => {
                open.push(']');
                out.push(c);
            }
            '}' | ']' => {
                if open.last() == Some(&c) {
                    open.pop();
                }
                out.push(c);
            }
            '-' | '0'..='9' => {
                let start = i;
                while i + 1 < chars.len() && matches!(chars[i + 1], '0'..='9' | '.' | 'e' | 'E' | '+' | '-') {
                    i += 1;
                }
                let token: String = chars[start..=i].iter().collect();
                let has_k = i + 1 < chars.len()
                    && matches!(chars[i + 1], 'k' | 'K')
                    && !chars.get(i + 2).is_some_and(|c| c.is_alphanumeric() || *c == '_');
                match token.parse::<f64>() {
                    Ok(v) if has_k => {
                        out.push_str(&format!("{}", v * 1000.0));
                        i += 1;
                    }
                    _ => out.push_str(&token),
                }
            }
            _ => out.push(c),
        }
        i += 1;
    }
    // drop a trailing comma before appending closers
    if !open.is_empty() {
        let trimmed = out.trim_end().trim_end_matches(',').len();
        out.truncate(trimmed);
        while let Some(closer) = open.pop() {
            out.push(closer);
        }
        out.push('\n');
    }
    out
}
