//! AND/OR fault trees: evaluation and minimal cut sets.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_CUT_SET_BASICS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gate {
    And,
    Or,
    Basic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultEvent {
    pub id: String,
    #[serde(default)]
    pub label: String,
    pub gate: Gate,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<String>,
    /// Free-text risk annotation (severity, likelihood) for hazards.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub risk: Option<String>,
}

impl FaultEvent {
    pub fn basic(id: &str) -> Self {
        Self {
            id: id.into(),
            label: String::new(),
            gate: Gate::Basic,
            children: Vec::new(),
            risk: None,
        }
    }

    pub fn gate(id: &str, gate: Gate, children: &[&str]) -> Self {
        Self {
            id: id.into(),
            label: String::new(),
            gate,
            children: children.iter().map(|c| c.to_string()).collect(),
            risk: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FaultTreeDocument {
    top: String,
    events: Vec<FaultEvent>,
}

/// Validated fault tree. Events may be shared between gates (a DAG), but
/// cycles are rejected.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FaultTree {
    top: String,
    events: Vec<FaultEvent>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl FaultTree {
    pub fn new(top: impl Into<String>, events: Vec<FaultEvent>) -> Result<Self> {
        let top = top.into();
        let mut index = HashMap::with_capacity(events.len());
        for (i, e) in events.iter().enumerate() {
            if index.insert(e.id.clone(), i).is_some() {
                return Err(Error::FaultTree(format!("duplicate event id `{}`", e.id)));
            }
        }
        if !index.contains_key(&top) {
            return Err(Error::FaultTree(format!("top event `{top}` is not defined")));
        }
        for e in &events {
            match e.gate {
                Gate::Basic if !e.children.is_empty() => {
                    return Err(Error::FaultTree(format!("basic event `{}` has children", e.id)))
                }
                Gate::And | Gate::Or if e.children.is_empty() => {
                    return Err(Error::FaultTree(format!("gate `{}` has no children", e.id)))
                }
                _ => {}
            }
            for c in &e.children {
                if !index.contains_key(c) {
                    return Err(Error::FaultTree(format!("`{}` references unknown event `{c}`", e.id)));
                }
            }
        }
        let tree = Self { top, events, index };
        tree.check_acyclic()?;
        Ok(tree)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: FaultTreeDocument =
            serde_json::from_str(text).map_err(|e| Error::parse("fault tree", e.to_string()))?;
        Self::new(doc.top, doc.events)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::parse(path.display().to_string(), message),
            other => other,
        })
    }

    pub fn top(&self) -> &str {
        &self.top
    }

    pub fn events(&self) -> &[FaultEvent] {
        &self.events
    }

    pub fn event(&self, id: &str) -> Option<&FaultEvent> {
        self.index.get(id).map(|&i| &self.events[i])
    }

    /// Basic events reachable from the top, in definition order.
    pub fn basic_events(&self) -> Vec<&str> {
        let mut reachable = vec![false; self.events.len()];
        let mut stack = vec![self.index[&self.top]];
        while let Some(i) = stack.pop() {
            if std::mem::replace(&mut reachable[i], true) {
                continue;
            }
            stack.extend(self.events[i].children.iter().map(|c| self.index[c]));
        }
        self.events
            .iter()
            .zip(&reachable)
            .filter(|(e, &r)| r && e.gate == Gate::Basic)
            .map(|(e, _)| e.id.as_str())
            .collect()
    }

    fn check_acyclic(&self) -> Result<()> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut mark = vec![0u8; self.events.len()];
        for root in 0..self.events.len() {
            if mark[root] != 0 {
                continue;
            }
            let mut stack = vec![(root, 0usize)];
            mark[root] = 1;
            while let Some(&mut (node, ref mut next)) = stack.last_mut() {
                let children = &self.events[node].children;
                if *next < children.len() {
                    let child = self.index[&children[*next]];
                    *next += 1;
                    match mark[child] {
                        0 => {
                            mark[child] = 1;
                            stack.push((child, 0));
                        }
                        1 => return Err(Error::FaultTree(format!("cycle through `{}`", self.events[child].id))),
                        _ => {}
                    }
                } else {
                    mark[node] = 2;
                    stack.pop();
                }
            }
        }
        Ok(())
    }
}

/// Evaluates the top event; every reachable basic event must be assigned.
pub fn evaluate_fault_tree(tree: &FaultTree, basic_states: &BTreeMap<String, bool>) -> Result<bool> {
    fn eval(tree: &FaultTree, i: usize, states: &BTreeMap<String, bool>, memo: &mut [Option<bool>]) -> Result<bool> {
        if let Some(v) = memo[i] {
            return Ok(v);
        }
        let e = &tree.events[i];
        let value = match e.gate {
            Gate::Basic => *states
                .get(&e.id)
                .ok_or_else(|| Error::FaultTree(format!("basic event `{}` is unassigned", e.id)))?,
            Gate::And => {
                let mut all = true;
                for c in &e.children {
                    all &= eval(tree, tree.index[c], states, memo)?;
                }
                all
            }
            Gate::Or => {
                let mut any = false;
                for c in &e.children {
                    any |= eval(tree, tree.index[c], states, memo)?;
                }
                any
            }
        };
        memo[i] = Some(value);
        Ok(value)
    }
    for id in basic_states.keys() {
        match tree.event(id) {
            Some(e) if e.gate == Gate::Basic => {}
            Some(_) => return Err(Error::FaultTree(format!("`{id}` is a gate, not a basic event"))),
            None => return Err(Error::FaultTree(format!("unknown basic event `{id}`"))),
        }
    }
    let mut memo = vec![None; tree.events.len()];
    eval(tree, tree.index[&tree.top], basic_states, &mut memo)
}

/// Removes duplicates and supersets; result sorted by size, then bits.
fn minimise(mut sets: Vec<u32>) -> Vec<u32> {
    sets.sort_by_key(|s| (s.count_ones(), *s));
    sets.dedup();
    let mut kept: Vec<u32> = Vec::with_capacity(sets.len());
    for s in sets {
        if !kept.iter().any(|k| k & s == *k) {
            kept.push(s);
        }
    }
    kept
}

/// Minimal sets of basic events whose joint occurrence forces the top
/// event. Sets are ordered by size, then by the definition order of their
/// members; members follow definition order.
pub fn minimal_cut_sets(tree: &FaultTree) -> Result<Vec<Vec<String>>> {
    let basics = tree.basic_events();
    if basics.len() > MAX_CUT_SET_BASICS {
        return Err(Error::FaultTree(format!(
            "{} basic events exceed the cut-set limit of {MAX_CUT_SET_BASICS}",
            basics.len()
        )));
    }
    let bit: HashMap<&str, u32> = basics.iter().enumerate().map(|(i, id)| (*id, 1u32 << i)).collect();

    fn cuts(tree: &FaultTree, i: usize, bit: &HashMap<&str, u32>, memo: &mut [Option<Vec<u32>>]) -> Vec<u32> {
        if let Some(c) = &memo[i] {
            return c.clone();
        }
        let e = &tree.events[i];
        let result = match e.gate {
            Gate::Basic => vec![bit[e.id.as_str()]],
            Gate::Or => {
                let mut all = Vec::new();
                for c in &e.children {
                    all.extend(cuts(tree, tree.index[c], bit, memo));
                }
                minimise(all)
            }
            Gate::And => {
                let mut acc = vec![0u32];
                for c in &e.children {
                    let child = cuts(tree, tree.index[c], bit, memo);
                    let product = acc.iter().flat_map(|a| child.iter().map(move |b| a | b)).collect();
                    acc = minimise(product);
                }
                acc
            }
        };
        memo[i] = Some(result.clone());
        result
    }

    let mut memo = vec![None; tree.events.len()];
    let sets = cuts(tree, tree.index[&tree.top], &bit, &mut memo);
    let mut named: Vec<(u32, Vec<usize>)> = sets
        .into_iter()
        .map(|s| (s, (0..basics.len()).filter(|i| s >> i & 1 == 1).collect()))
        .collect();
    named.sort_by(|a, b| a.0.count_ones().cmp(&b.0.count_ones()).then(a.1.cmp(&b.1)));
    Ok(named
        .into_iter()
        .map(|(_, members)| members.into_iter().map(|i| basics[i].to_string()).collect())
        .collect())
}

/// Parses `fog=1,rain=0` (also `true`/`false`).
pub fn parse_event_states(text: &str) -> Result<BTreeMap<String, bool>> {
    let mut states = BTreeMap::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (id, value) = item
            .split_once('=')
            .ok_or_else(|| Error::parse("events", format!("`{item}` is not id=value")))?;
        let value = match value.trim() {
            "1" | "true" | "TRUE" | "True" => true,
            "0" | "false" | "FALSE" | "False" => false,
            other => return Err(Error::parse("events", format!("`{other}` is not a boolean"))),
        };
        states.insert(id.trim().to_string(), value);
    }
    Ok(states)
}
