//! Goal Structuring Notation arguments linked to simulation evidence.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::safety::EvidenceVerdict;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Goal,
    Strategy,
    Solution,
    Context,
    AwayGoal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GsnNode {
    pub id: String,
    pub kind: NodeKind,
    #[serde(default)]
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub evidence_refs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub module_ref: Option<String>,
    /// Away goals only: the claim is established in its own module.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub asserted: bool,
}

impl GsnNode {
    pub fn new(id: &str, kind: NodeKind, text: &str) -> Self {
        Self {
            id: id.into(),
            kind,
            text: text.into(),
            children: Vec::new(),
            evidence_refs: Vec::new(),
            module_ref: None,
            asserted: false,
        }
    }

    pub fn children(mut self, children: &[&str]) -> Self {
        self.children = children.iter().map(|c| c.to_string()).collect();
        self
    }

    pub fn evidence(mut self, refs: &[&str]) -> Self {
        self.evidence_refs = refs.iter().map(|c| c.to_string()).collect();
        self
    }
}

/// Ordered by strength: the status of a goal is the weakest of its
/// children's.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Unsupported,
    Undeveloped,
    Supported,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Unsupported => "unsupported",
            Status::Undeveloped => "undeveloped",
            Status::Supported => "supported",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GsnGraph {
    pub nodes: Vec<GsnNode>,
}

impl GsnGraph {
    pub fn new(nodes: Vec<GsnNode>) -> Result<Self> {
        let graph = Self { nodes };
        graph.validate()?;
        Ok(graph)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let graph: Self = serde_json::from_str(text).map_err(|e| Error::parse("gsn", e.to_string()))?;
        graph.validate()?;
        Ok(graph)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::parse(path.display().to_string(), message),
            other => other,
        })
    }

    fn index(&self) -> HashMap<&str, usize> {
        self.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let index = self.index();
        if index.len() != self.nodes.len() {
            let mut seen = std::collections::HashSet::new();
            let dup = self
                .nodes
                .iter()
                .find(|n| !seen.insert(&n.id))
                .expect("duplicate exists");
            return Err(Error::Gsn(format!("duplicate node id `{}`", dup.id)));
        }
        for n in &self.nodes {
            let may_have_children = matches!(n.kind, NodeKind::Goal | NodeKind::Strategy);
            if !n.children.is_empty() && !may_have_children {
                return Err(Error::Gsn(format!("{:?} `{}` cannot have children", n.kind, n.id)));
            }
            if !n.evidence_refs.is_empty() && n.kind != NodeKind::Solution {
                return Err(Error::Gsn(format!("only solutions carry evidence (`{}`)", n.id)));
            }
            if n.module_ref.is_some() && n.kind != NodeKind::AwayGoal {
                return Err(Error::Gsn(format!("only away goals reference modules (`{}`)", n.id)));
            }
            if n.asserted && n.kind != NodeKind::AwayGoal {
                return Err(Error::Gsn(format!("only away goals can be asserted (`{}`)", n.id)));
            }
            for c in &n.children {
                if !index.contains_key(c.as_str()) {
                    return Err(Error::Gsn(format!("`{}` references unknown node `{c}`", n.id)));
                }
            }
        }
        // Kahn's algorithm
        let mut indegree = vec![0usize; self.nodes.len()];
        for n in &self.nodes {
            for c in &n.children {
                indegree[index[c.as_str()]] += 1;
            }
        }
        let mut ready: Vec<usize> = (0..self.nodes.len()).filter(|&i| indegree[i] == 0).collect();
        let mut visited = 0;
        while let Some(i) = ready.pop() {
            visited += 1;
            for c in &self.nodes[i].children {
                let j = index[c.as_str()];
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    ready.push(j);
                }
            }
        }
        if visited != self.nodes.len() {
            return Err(Error::Gsn("argument graph contains a cycle".into()));
        }
        Ok(())
    }

    /// Nodes that are nobody's child, in input order.
    pub fn roots(&self) -> Vec<usize> {
        let mut is_child = vec![false; self.nodes.len()];
        let index = self.index();
        for n in &self.nodes {
            for c in &n.children {
                is_child[index[c.as_str()]] = true;
            }
        }
        (0..self.nodes.len()).filter(|&i| !is_child[i]).collect()
    }
}

/// A graph with a status for every node; context nodes have none.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnotatedGsn {
    pub graph: GsnGraph,
    pub status: Vec<Option<Status>>,
}

impl AnnotatedGsn {
    pub fn unannotated(graph: GsnGraph) -> Self {
        let status = vec![None; graph.nodes.len()];
        Self { graph, status }
    }

    pub fn status_of(&self, id: &str) -> Option<Status> {
        self.graph
            .nodes
            .iter()
            .position(|n| n.id == id)
            .and_then(|i| self.status[i])
    }

    /// Weakest status among the root claims.
    pub fn overall(&self) -> Option<Status> {
        self.graph.roots().into_iter().filter_map(|i| self.status[i]).min()
    }
}

/// Maps an evidence reference to a verdict run id: either the id itself or
/// a path inside `<evidence>/<run_id>/`.
fn run_id_of<'a>(reference: &'a str, known: &HashMap<&str, &EvidenceVerdict>) -> Option<&'a str> {
    if known.contains_key(reference) {
        return Some(reference);
    }
    let path = Path::new(reference);
    let last = path.file_name()?.to_str()?;
    if known.contains_key(last) {
        return Some(last);
    }
    let parent = path.parent()?.file_name()?.to_str()?;
    known.contains_key(parent).then_some(parent)
}

pub fn link_evidence(graph: &GsnGraph, verdicts: &[EvidenceVerdict]) -> Result<AnnotatedGsn> {
    graph.validate()?;
    let known: HashMap<&str, &EvidenceVerdict> = verdicts.iter().map(|v| (v.run_id.as_str(), v)).collect();
    let index = graph.index();

    fn status(
        graph: &GsnGraph,
        i: usize,
        index: &HashMap<&str, usize>,
        known: &HashMap<&str, &EvidenceVerdict>,
        memo: &mut Vec<Option<Option<Status>>>,
    ) -> Result<Option<Status>> {
        if let Some(s) = memo[i] {
            return Ok(s);
        }
        let node = &graph.nodes[i];
        let s = match node.kind {
            NodeKind::Context => None,
            NodeKind::AwayGoal => Some(if node.asserted {
                Status::Supported
            } else {
                Status::Undeveloped
            }),
            NodeKind::Solution => {
                if node.evidence_refs.is_empty() {
                    Some(Status::Undeveloped)
                } else {
                    let mut all_pass = true;
                    for r in &node.evidence_refs {
                        let id = run_id_of(r, known).ok_or_else(|| {
                            Error::Gsn(format!("solution `{}`: evidence `{r}` matches no run", node.id))
                        })?;
                        all_pass &= known[id].passed;
                    }
                    Some(if all_pass {
                        Status::Supported
                    } else {
                        Status::Unsupported
                    })
                }
            }
            NodeKind::Goal | NodeKind::Strategy => {
                let mut weakest: Option<Status> = None;
                for c in &node.children {
                    if let Some(cs) = status(graph, index[c.as_str()], index, known, memo)? {
                        weakest = Some(weakest.map_or(cs, |w| w.min(cs)));
                    }
                }
                Some(weakest.unwrap_or(Status::Undeveloped))
            }
        };
        memo[i] = Some(s);
        Ok(s)
    }

    let mut memo = vec![None; graph.nodes.len()];
    let statuses = (0..graph.nodes.len())
        .map(|i| status(graph, i, &index, &known, &mut memo))
        .collect::<Result<Vec<_>>>()?;
    Ok(AnnotatedGsn {
        graph: graph.clone(),
        status: statuses,
    })
}

pub const DOT_PREAMBLE: &str = "// GSN safety argument\n// shapes: goal=box strategy=parallelogram solution=circle away_goal=box[module] context=rounded\n// styles: unsupported=dashed undeveloped=grey\n";

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => {}
            c => out.push(c),
        }
    }
    out
}

/// Deterministic Graphviz rendering; nodes and edges follow input order.
pub fn render_gsn_dot(annotated: &AnnotatedGsn) -> String {
    let graph = &annotated.graph;
    let mut out = String::from(DOT_PREAMBLE);
    if graph.nodes.is_empty() {
        out.push_str("digraph gsn {}\n");
        return out;
    }
    out.push_str("digraph gsn {\n  rankdir=TB;\n  node [fontname=\"Helvetica\"];\n");
    for (node, status) in graph.nodes.iter().zip(&annotated.status) {
        let (shape, mut styles) = match node.kind {
            NodeKind::Goal | NodeKind::AwayGoal => ("box", vec![]),
            NodeKind::Strategy => ("parallelogram", vec![]),
            NodeKind::Solution => ("circle", vec![]),
            NodeKind::Context => ("box", vec!["rounded"]),
        };
        let mut label = node.id.clone();
        if !node.text.is_empty() {
            label.push('\n');
            label.push_str(&node.text);
        }
        if node.kind == NodeKind::AwayGoal {
            label.push_str(&format!("\n[{}]", node.module_ref.as_deref().unwrap_or("module")));
        }
        let mut attrs = format!("shape={shape}, label=\"{}\"", escape(&label));
        match status {
            Some(Status::Unsupported) => styles.push("dashed"),
            Some(Status::Undeveloped) => {
                attrs.push_str(", color=grey, fontcolor=grey");
            }
            _ => {}
        }
        if !styles.is_empty() {
            let _ = write!(attrs, ", style=\"{}\"", styles.join(","));
        }
        let _ = writeln!(out, "  \"{}\" [{attrs}];", escape(&node.id));
    }
    let kinds: HashMap<&str, NodeKind> = graph.nodes.iter().map(|n| (n.id.as_str(), n.kind)).collect();
    for node in &graph.nodes {
        for c in &node.children {
            let arrow = if kinds[c.as_str()] == NodeKind::Context {
                " [arrowhead=empty]"
            } else {
                ""
            };
            let _ = writeln!(out, "  \"{}\" -> \"{}\"{arrow};", escape(&node.id), escape(c));
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn verdict(id: &str, passed: bool) -> EvidenceVerdict {
        EvidenceVerdict::measured(id, passed, 1.0, 0.0)
    }

    fn harvester_argument() -> GsnGraph {
        GsnGraph::new(vec![
            GsnNode::new("G1", NodeKind::Goal, "Harvester stops before obstacles").children(&["C1", "S1", "G0"]),
            GsnNode::new("C1", NodeKind::Context, "Open field operation"),
            GsnNode::new("S1", NodeKind::Strategy, "Argue over weather hazards").children(&["G2", "G3"]),
            GsnNode::new("G2", NodeKind::Goal, "Safe stop in dense fog").children(&["Sn1"]),
            GsnNode::new("G3", NodeKind::Goal, "Safe stop in heavy rain").children(&["Sn2"]),
            GsnNode::new("Sn1", NodeKind::Solution, "Fog runs").evidence(&["fog_v1", "evidence/fog_v2/verdict.json"]),
            GsnNode::new("Sn2", NodeKind::Solution, "Rain runs").evidence(&["rain_v1"]),
            GsnNode {
                module_ref: Some("ModelValidation".into()),
                ..GsnNode::new("G0", NodeKind::AwayGoal, "Model validated")
            },
        ])
        .unwrap()
    }

    fn all_pass() -> Vec<EvidenceVerdict> {
        vec![
            verdict("fog_v1", true),
            verdict("fog_v2", true),
            verdict("rain_v1", true),
        ]
    }

    #[test]
    fn away_goal_caps_root_at_undeveloped() {
        let a = link_evidence(&harvester_argument(), &all_pass()).unwrap();
        assert_eq!(a.status_of("S1"), Some(Status::Supported));
        assert_eq!(a.status_of("G0"), Some(Status::Undeveloped));
        assert_eq!(a.status_of("G1"), Some(Status::Undeveloped));
        assert_eq!(a.status_of("C1"), None);
    }

    #[test]
    fn asserted_away_goal_and_all_passing() {
        let mut g = harvester_argument();
        g.nodes.last_mut().unwrap().asserted = true;
        let a = link_evidence(&g, &all_pass()).unwrap();
        assert_eq!(a.overall(), Some(Status::Supported));
    }

    #[test]
    fn failed_verdict_propagates_up_one_branch() {
        let mut g = harvester_argument();
        g.nodes.last_mut().unwrap().asserted = true;
        let mut verdicts = all_pass();
        verdicts[1].passed = false;
        let a = link_evidence(&g, &verdicts).unwrap();
        assert_eq!(a.status_of("G2"), Some(Status::Unsupported));
        assert_eq!(a.status_of("G1"), Some(Status::Unsupported));
        assert_eq!(a.status_of("G3"), Some(Status::Supported));
    }

    #[test]
    fn dangling_evidence_is_an_error() {
        let verdicts = vec![verdict("fog_v1", true), verdict("rain_v1", true)];
        assert!(link_evidence(&harvester_argument(), &verdicts).is_err());
    }

    #[test]
    fn structural_errors() {
        let cyc = GsnGraph::new(vec![
            GsnNode::new("a", NodeKind::Goal, "").children(&["b"]),
            GsnNode::new("b", NodeKind::Strategy, "").children(&["a"]),
        ]);
        assert!(cyc.is_err());
        let leaf = GsnGraph::new(vec![
            GsnNode::new("s", NodeKind::Solution, "").children(&["g"]),
            GsnNode::new("g", NodeKind::Goal, ""),
        ]);
        assert!(leaf.is_err());
        assert!(GsnGraph::new(vec![GsnNode::new("a", NodeKind::Goal, "").children(&["x"])]).is_err());
        assert!(GsnGraph::new(vec![
            GsnNode::new("a", NodeKind::Goal, ""),
            GsnNode::new("a", NodeKind::Goal, "")
        ])
        .is_err());
    }

    #[test]
    fn empty_graph_dot() {
        let dot = render_gsn_dot(&AnnotatedGsn::unannotated(GsnGraph::new(vec![]).unwrap()));
        assert_eq!(dot, format!("{DOT_PREAMBLE}digraph gsn {{}}\n"));
    }

    #[test]
    fn chain_matches_golden_file() {
        let g = GsnGraph::new(vec![
            GsnNode::new("G1", NodeKind::Goal, "System stops safely").children(&["S1"]),
            GsnNode::new("S1", NodeKind::Strategy, "Argue over \"fog\" runs").children(&["Sn1"]),
            GsnNode::new("Sn1", NodeKind::Solution, "Fog run").evidence(&["fog_v1"]),
        ])
        .unwrap();
        let a = link_evidence(&g, &[verdict("fog_v1", false)]).unwrap();
        let dot = render_gsn_dot(&a);
        assert_eq!(dot, include_str!("../../tests/golden/chain.dot"));
        assert_eq!(dot, render_gsn_dot(&a));
    }

    proptest! {
        #[test]
        fn propagation_is_monotone(passes in prop::collection::vec(any::<bool>(), 3), flip in 0usize..3) {
            let g = harvester_argument();
            let ids = ["fog_v1", "fog_v2", "rain_v1"];
            let make = |p: &[bool]| ids.iter().zip(p).map(|(id, &ok)| verdict(id, ok)).collect::<Vec<_>>();
            let before = link_evidence(&g, &make(&passes)).unwrap();
            let mut flipped = passes.clone();
            flipped[flip] = true;
            let after = link_evidence(&g, &make(&flipped)).unwrap();
            for (b, a) in before.status.iter().zip(&after.status) {
                prop_assert!(a >= b);
            }
        }
    }
}
