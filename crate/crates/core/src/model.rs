//! Knowledge-base domain types.
//!
//! A [`KnowledgeBase`] bundles named diagnostic flowcharts ([`TreeGraph`]),
//! a catalog of [`FailureMode`]s with qualitative costs, named constants and
//! free-form metadata. It is validated once by [`KnowledgeBase::build`] and
//! is immutable afterwards.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Source text of the bundled knowledge base.
pub const DEFAULT_KB_SOURCE: &str = include_str!("../kb/default.itkb");

/// Ordinal severity used by every cost dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SeverityLevel {
    Low,
    Medium,
    High,
}

impl SeverityLevel {
    pub const ALL: [SeverityLevel; 3] = [SeverityLevel::Low, SeverityLevel::Medium, SeverityLevel::High];

    pub fn as_str(self) -> &'static str {
        match self {
            SeverityLevel::Low => "Low",
            SeverityLevel::Medium => "Medium",
            SeverityLevel::High => "High",
        }
    }
}

impl fmt::Display for SeverityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {kind} `{token}`")]
pub struct UnknownToken {
    pub kind: &'static str,
    pub token: String,
}

impl FromStr for SeverityLevel {
    type Err = UnknownToken;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Low" => Ok(SeverityLevel::Low),
            "Medium" => Ok(SeverityLevel::Medium),
            "High" => Ok(SeverityLevel::High),
            _ => Err(UnknownToken { kind: "severity level", token: s.to_string() }),
        }
    }
}

/// Qualitative cost of a failure mode along the three assessment axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CostVector {
    pub operational_impact: SeverityLevel,
    pub time_cost: SeverityLevel,
    pub disturbance_risk: SeverityLevel,
}

impl CostVector {
    pub fn new(operational_impact: SeverityLevel, time_cost: SeverityLevel, disturbance_risk: SeverityLevel) -> Self {
        Self { operational_impact, time_cost, disturbance_risk }
    }

    /// Highest level over all three dimensions.
    pub fn worst(&self) -> SeverityLevel {
        self.operational_impact.max(self.time_cost).max(self.disturbance_risk)
    }
}

/// Subsystem a failure mode belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Area {
    Vacuum,
    Electronics,
    Optics,
    Imaging,
}

impl Area {
    pub const ALL: [Area; 4] = [Area::Vacuum, Area::Electronics, Area::Optics, Area::Imaging];

    pub fn as_str(self) -> &'static str {
        match self {
            Area::Vacuum => "Vacuum",
            Area::Electronics => "Electronics",
            Area::Optics => "Optics",
            Area::Imaging => "Imaging",
        }
    }
}

impl fmt::Display for Area {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Area {
    type Err = UnknownToken;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Area::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownToken { kind: "area", token: s.to_string() })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureMode {
    pub id: String,
    pub area: Area,
    pub name: String,
    pub cost: CostVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Start,
    Action,
    Decision,
    Jump,
    Return,
    Finding,
    Finish,
    Note,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Start => "start",
            NodeKind::Action => "action",
            NodeKind::Decision => "decision",
            NodeKind::Jump => "jump",
            NodeKind::Return => "return",
            NodeKind::Finding => "finding",
            NodeKind::Finish => "finish",
            NodeKind::Note => "note",
        }
    }

    /// Kinds that end a walk through a tree.
    pub fn is_terminal(self) -> bool {
        matches!(self, NodeKind::Finish | NodeKind::Return | NodeKind::Finding)
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub target: String,
}

impl Edge {
    pub fn unlabeled(target: impl Into<String>) -> Self {
        Self { label: None, target: target.into() }
    }

    pub fn labeled(label: impl Into<String>, target: impl Into<String>) -> Self {
        Self { label: Some(label.into()), target: target.into() }
    }
}

/// Cross-tree transfer: enter `tree` at its start, come back to `resume`
/// (a node of the jumping tree) when that tree returns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JumpTarget {
    pub tree: String,
    pub resume: String,
}

/// Id every tree uses for its start node.
pub const START_NODE_ID: &str = "start";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<Edge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump: Option<JumpTarget>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_mode: Option<String>,
    /// Deliberately incomplete node (dead-end decision or action).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub open: bool,
    /// Annotation shown alongside the prompt.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
}

impl Node {
    fn bare(id: impl Into<String>, kind: NodeKind, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            kind,
            text: text.into(),
            edges: Vec::new(),
            jump: None,
            failure_mode: None,
            open: false,
            context: None,
        }
    }

    pub fn start(text: impl Into<String>, target: impl Into<String>) -> Self {
        let mut n = Self::bare(START_NODE_ID, NodeKind::Start, text);
        n.edges.push(Edge::unlabeled(target));
        n
    }

    pub fn action(id: impl Into<String>, text: impl Into<String>, target: impl Into<String>) -> Self {
        let mut n = Self::bare(id, NodeKind::Action, text);
        n.edges.push(Edge::unlabeled(target));
        n
    }

    pub fn note(id: impl Into<String>, text: impl Into<String>, target: impl Into<String>) -> Self {
        let mut n = Self::bare(id, NodeKind::Note, text);
        n.edges.push(Edge::unlabeled(target));
        n
    }

    /// Action with no continuation, flagged open.
    pub fn open_action(id: impl Into<String>, text: impl Into<String>) -> Self {
        let mut n = Self::bare(id, NodeKind::Action, text);
        n.open = true;
        n
    }

    pub fn decision<L, T>(id: impl Into<String>, text: impl Into<String>, branches: impl IntoIterator<Item = (L, T)>) -> Self
    where
        L: Into<String>,
        T: Into<String>,
    {
        let mut n = Self::bare(id, NodeKind::Decision, text);
        n.edges = branches.into_iter().map(|(l, t)| Edge::labeled(l, t)).collect();
        n
    }

    pub fn jump(
        id: impl Into<String>,
        text: impl Into<String>,
        tree: impl Into<String>,
        resume: impl Into<String>,
    ) -> Self {
        let mut n = Self::bare(id, NodeKind::Jump, text);
        n.jump = Some(JumpTarget { tree: tree.into(), resume: resume.into() });
        n
    }

    pub fn ret(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self::bare(id, NodeKind::Return, text)
    }

    pub fn finding(id: impl Into<String>, text: impl Into<String>, mode: Option<&str>) -> Self {
        let mut n = Self::bare(id, NodeKind::Finding, text);
        n.failure_mode = mode.map(str::to_string);
        n
    }

    pub fn finish(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self::bare(id, NodeKind::Finish, text)
    }

    pub fn with_open(mut self, open: bool) -> Self {
        self.open = open;
        self
    }

    pub fn with_context(mut self, context: impl Into<String>) -> Self {
        self.context = Some(context.into());
        self
    }

    /// Target of the first outgoing edge.
    pub fn successor(&self) -> Option<&str> {
        self.edges.first().map(|e| e.target.as_str())
    }

    /// Branch labels in declaration order (decisions only).
    pub fn branch_labels(&self) -> Vec<&str> {
        self.edges.iter().filter_map(|e| e.label.as_deref()).collect()
    }

    pub fn edge_for_label(&self, label: &str) -> Option<&Edge> {
        self.edges.iter().find(|e| e.label.as_deref() == Some(label))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TreeGraph {
    pub id: String,
    pub title: String,
    /// Tree meant to be entered directly rather than through a jump.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub entry: bool,
    nodes: Vec<Node>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl PartialEq for TreeGraph {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.title == other.title && self.entry == other.entry && self.nodes == other.nodes
    }
}

impl TreeGraph {
    pub fn new(id: impl Into<String>, title: impl Into<String>, nodes: Vec<Node>) -> Self {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            index.entry(n.id.clone()).or_insert(i);
        }
        Self { id: id.into(), title: title.into(), entry: false, nodes, index }
    }

    pub fn with_entry(mut self, entry: bool) -> Self {
        self.entry = entry;
        self
    }

    /// Nodes in declaration order.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn into_nodes(self) -> Vec<Node> {
        self.nodes
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn start(&self) -> Option<&Node> {
        self.nodes.iter().find(|n| n.kind == NodeKind::Start)
    }

    /// First node with the given display text.
    pub fn node_by_text(&self, text: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.text == text)
    }
}

/// Raw, unvalidated contents of a knowledge base.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KbParts {
    pub name: String,
    pub version: String,
    pub trees: Vec<TreeGraph>,
    pub catalog: Vec<FailureMode>,
    pub constants: BTreeMap<String, ConstantValue>,
    pub meta: BTreeMap<String, String>,
}

/// Named scalar with an optional unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantValue {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

impl ConstantValue {
    pub fn new(value: f64, unit: Option<&str>) -> Self {
        Self { value, unit: unit.map(str::to_string) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KbError {
    #[error("duplicate tree id `{tree}`")]
    DuplicateTree { tree: String },
    #[error("duplicate node id `{node}` in tree `{tree}`")]
    DuplicateNode { tree: String, node: String },
    #[error("duplicate failure mode id `{id}`")]
    DuplicateFailureMode { id: String },
    #[error("tree `{tree}` must have exactly one start node, found {count}")]
    StartCount { tree: String, count: usize },
    #[error("node `{tree}.{node}`: {reason}")]
    InvalidShape { tree: String, node: String, reason: String },
    #[error("duplicate branch label \"{label}\" on decision `{tree}.{node}`")]
    DuplicateBranchLabel { tree: String, node: String, label: String },
    #[error("unresolved edge target `{target}` from `{tree}.{node}`")]
    UnresolvedEdgeTarget { tree: String, node: String, index: usize, target: String },
    #[error("jump node `{tree}.{node}` has no jump target")]
    MissingJumpTarget { tree: String, node: String },
    #[error("unresolved jump target tree `{target_tree}` from `{tree}.{node}`")]
    UnresolvedJumpTarget { tree: String, node: String, target_tree: String },
    #[error("unresolved resume node `{resume}` for jump `{tree}.{node}`")]
    UnresolvedResumeNode { tree: String, node: String, resume: String },
    #[error("finding `{tree}.{node}` references unknown failure mode `{mode}`")]
    UnresolvedFailureMode { tree: String, node: String, mode: String },
    #[error("invalid identifier `{ident}` ({what})")]
    InvalidIdentifier { what: &'static str, ident: String },
    #[error("constant `{name}` must be finite")]
    NonFiniteConstant { name: String },
    #[error("no failure mode named \"{name}\" in area {area}")]
    FailureModeNotFound { area: Area, name: String },
}

impl KbError {
    /// Tree and node the error is located at, when it has one.
    pub fn location(&self) -> Option<(&str, &str)> {
        use KbError::*;
        match self {
            DuplicateNode { tree, node }
            | InvalidShape { tree, node, .. }
            | DuplicateBranchLabel { tree, node, .. }
            | UnresolvedEdgeTarget { tree, node, .. }
            | MissingJumpTarget { tree, node }
            | UnresolvedJumpTarget { tree, node, .. }
            | UnresolvedResumeNode { tree, node, .. }
            | UnresolvedFailureMode { tree, node, .. } => Some((tree, node)),
            _ => None,
        }
    }
}

/// Validated, immutable knowledge base.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeBase {
    name: String,
    version: String,
    trees: Vec<TreeGraph>,
    tree_index: HashMap<String, usize>,
    catalog: Vec<FailureMode>,
    constants: BTreeMap<String, ConstantValue>,
    meta: BTreeMap<String, String>,
}

impl KnowledgeBase {
    /// Validates `parts` against every structural invariant.
    pub fn build(parts: KbParts) -> Result<Self, Vec<KbError>> {
        let errors = validate(&parts);
        if errors.is_empty() {
            Ok(Self::assemble_unchecked(parts))
        } else {
            Err(errors)
        }
    }

    /// Assembles a knowledge base without validation.
    ///
    /// Meant for tooling that inspects drafts (the linter's mutation
    /// tests, editors); sessions must only run on built KBs.
    pub fn assemble_unchecked(parts: KbParts) -> Self {
        let mut tree_index = HashMap::with_capacity(parts.trees.len());
        for (i, t) in parts.trees.iter().enumerate() {
            tree_index.entry(t.id.clone()).or_insert(i);
        }
        Self {
            name: parts.name,
            version: parts.version,
            trees: parts.trees,
            tree_index,
            catalog: parts.catalog,
            constants: parts.constants,
            meta: parts.meta,
        }
    }

    pub fn to_parts(&self) -> KbParts {
        KbParts {
            name: self.name.clone(),
            version: self.version.clone(),
            trees: self.trees.clone(),
            catalog: self.catalog.clone(),
            constants: self.constants.clone(),
            meta: self.meta.clone(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    /// Trees in declaration order.
    pub fn trees(&self) -> &[TreeGraph] {
        &self.trees
    }

    pub fn tree(&self, id: &str) -> Option<&TreeGraph> {
        self.tree_index.get(id).map(|&i| &self.trees[i])
    }

    pub fn node(&self, tree: &str, node: &str) -> Option<&Node> {
        self.tree(tree)?.node(node)
    }

    pub fn catalog(&self) -> &[FailureMode] {
        &self.catalog
    }

    pub fn failure_mode(&self, id: &str) -> Option<&FailureMode> {
        self.catalog.iter().find(|m| m.id == id)
    }

    pub fn lookup_failure_mode(&self, area: Area, name: &str) -> Result<&FailureMode, KbError> {
        self.catalog
            .iter()
            .find(|m| m.area == area && m.name == name)
            .ok_or_else(|| KbError::FailureModeNotFound { area, name: name.to_string() })
    }

    pub fn constants(&self) -> &BTreeMap<String, ConstantValue> {
        &self.constants
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.get(name).map(|c| c.value)
    }

    pub fn meta(&self) -> &BTreeMap<String, String> {
        &self.meta
    }
}

/// Returns the bundled knowledge base.
pub fn default_knowledge_base() -> KnowledgeBase {
    match crate::dsl::parse(DEFAULT_KB_SOURCE) {
        Ok(parsed) => parsed.kb,
        Err(diags) => panic!("bundled knowledge base is invalid: {diags:?}"),
    }
}

/// `[A-Za-z_][A-Za-z0-9_]*`, the identifier syntax of the text format.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub(crate) fn validate(parts: &KbParts) -> Vec<KbError> {
    let mut errors = Vec::new();

    let ident = |what: &'static str, s: &str, errors: &mut Vec<KbError>| {
        if !is_identifier(s) {
            errors.push(KbError::InvalidIdentifier { what, ident: s.to_string() });
        }
    };
    for t in &parts.trees {
        ident("tree id", &t.id, &mut errors);
        for n in t.nodes() {
            ident("node id", &n.id, &mut errors);
        }
    }
    for m in &parts.catalog {
        ident("failure mode id", &m.id, &mut errors);
    }
    for (name, c) in &parts.constants {
        ident("constant name", name, &mut errors);
        if !c.value.is_finite() {
            errors.push(KbError::NonFiniteConstant { name: name.clone() });
        }
    }
    for key in parts.meta.keys() {
        ident("meta key", key, &mut errors);
    }

    let mut mode_ids = HashSet::new();
    for m in &parts.catalog {
        if !mode_ids.insert(m.id.as_str()) {
            errors.push(KbError::DuplicateFailureMode { id: m.id.clone() });
        }
    }

    let mut tree_ids: HashMap<&str, &TreeGraph> = HashMap::new();
    for t in &parts.trees {
        if tree_ids.insert(t.id.as_str(), t).is_some() {
            errors.push(KbError::DuplicateTree { tree: t.id.clone() });
        }
    }

    for tree in &parts.trees {
        let mut seen = HashSet::new();
        for n in tree.nodes() {
            if !seen.insert(n.id.as_str()) {
                errors.push(KbError::DuplicateNode { tree: tree.id.clone(), node: n.id.clone() });
            }
        }
        let starts = tree.nodes().iter().filter(|n| n.kind == NodeKind::Start).count();
        if starts != 1 {
            errors.push(KbError::StartCount { tree: tree.id.clone(), count: starts });
        }

        for n in tree.nodes() {
            check_shape(tree, n, &mut errors);
            for (index, e) in n.edges.iter().enumerate() {
                if !tree.contains(&e.target) {
                    errors.push(KbError::UnresolvedEdgeTarget {
                        tree: tree.id.clone(),
                        node: n.id.clone(),
                        index,
                        target: e.target.clone(),
                    });
                }
            }
            if let Some(j) = &n.jump {
                if !tree_ids.contains_key(j.tree.as_str()) {
                    errors.push(KbError::UnresolvedJumpTarget {
                        tree: tree.id.clone(),
                        node: n.id.clone(),
                        target_tree: j.tree.clone(),
                    });
                }
                if !tree.contains(&j.resume) {
                    errors.push(KbError::UnresolvedResumeNode {
                        tree: tree.id.clone(),
                        node: n.id.clone(),
                        resume: j.resume.clone(),
                    });
                }
            }
            if let Some(mode) = &n.failure_mode {
                if !mode_ids.contains(mode.as_str()) {
                    errors.push(KbError::UnresolvedFailureMode {
                        tree: tree.id.clone(),
                        node: n.id.clone(),
                        mode: mode.clone(),
                    });
                }
            }
        }
    }
    errors
}

fn check_shape(tree: &TreeGraph, n: &Node, errors: &mut Vec<KbError>) {
    let mut bad = |reason: String| {
        errors.push(KbError::InvalidShape { tree: tree.id.clone(), node: n.id.clone(), reason });
    };
    let labeled = n.edges.iter().filter(|e| e.label.is_some()).count();

    match n.kind {
        NodeKind::Start | NodeKind::Action | NodeKind::Note => {
            let open_ok = n.kind != NodeKind::Start && n.open;
            if open_ok {
                if !n.edges.is_empty() {
                    bad(format!("open {} node must have no outgoing edges", n.kind));
                }
            } else if n.edges.len() != 1 || labeled != 0 {
                bad(format!("{} node must have exactly one unlabeled outgoing edge", n.kind));
            }
            if n.kind == NodeKind::Start && n.open {
                bad("start node cannot be open".into());
            }
        }
        NodeKind::Decision => {
            let min = if n.open { 1 } else { 2 };
            if n.edges.len() < min {
                bad(format!("decision node needs at least {min} labeled branches, found {}", n.edges.len()));
            }
            if n.edges.iter().any(|e| e.label.as_deref().map_or(true, str::is_empty)) {
                bad("decision branches must carry non-empty labels".into());
            }
            let mut labels = HashSet::new();
            for l in n.edges.iter().filter_map(|e| e.label.as_deref()) {
                if !labels.insert(l) {
                    errors.push(KbError::DuplicateBranchLabel {
                        tree: tree.id.clone(),
                        node: n.id.clone(),
                        label: l.to_string(),
                    });
                }
            }
        }
        NodeKind::Jump => {
            if !n.edges.is_empty() {
                bad("jump node must have no local outgoing edges".into());
            }
            if n.jump.is_none() {
                errors.push(KbError::MissingJumpTarget { tree: tree.id.clone(), node: n.id.clone() });
            }
        }
        NodeKind::Finish | NodeKind::Return | NodeKind::Finding => {
            if !n.edges.is_empty() {
                bad(format!("{} node must have no outgoing edges", n.kind));
            }
        }
    }

    let mut bad = |reason: &str| {
        errors.push(KbError::InvalidShape { tree: tree.id.clone(), node: n.id.clone(), reason: reason.to_string() });
    };
    if n.jump.is_some() && n.kind != NodeKind::Jump {
        bad("only jump nodes may carry a jump target");
    }
    if n.failure_mode.is_some() && n.kind != NodeKind::Finding {
        bad("only finding nodes may reference a failure mode");
    }
    if n.open && !matches!(n.kind, NodeKind::Decision | NodeKind::Action | NodeKind::Note) {
        bad("only decision, action and note nodes may be open");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_tree(id: &str) -> TreeGraph {
        TreeGraph::new(id, "T", vec![Node::start("Start", "f"), Node::finish("f", "Finish")])
    }

    fn parts(trees: Vec<TreeGraph>) -> KbParts {
        KbParts { name: "t".into(), version: "1".into(), trees, ..Default::default() }
    }

    #[test]
    fn minimal_kb_builds() {
        let kb = KnowledgeBase::build(parts(vec![minimal_tree("a")])).unwrap();
        assert_eq!(kb.trees().len(), 1);
        assert!(kb.catalog().is_empty());
    }

    #[test]
    fn duplicate_tree_id_rejected() {
        let errs = KnowledgeBase::build(parts(vec![minimal_tree("main"), minimal_tree("main")])).unwrap_err();
        assert_eq!(errs, vec![KbError::DuplicateTree { tree: "main".into() }]);
        assert!(errs[0].to_string().contains("duplicate tree id"));
    }

    #[test]
    fn dangling_jump_rejected() {
        let t = TreeGraph::new(
            "main",
            "M",
            vec![Node::start("Start", "j"), Node::jump("j", "Go", "vac", "j")],
        );
        let errs = KnowledgeBase::build(parts(vec![t])).unwrap_err();
        assert!(matches!(&errs[0], KbError::UnresolvedJumpTarget { target_tree, .. } if target_tree == "vac"));
        assert!(errs[0].to_string().contains("unresolved jump target"));
    }

    #[test]
    fn duplicate_node_rejected() {
        let t = TreeGraph::new(
            "a",
            "A",
            vec![Node::start("S", "f"), Node::finish("f", "F"), Node::finish("f", "G")],
        );
        let errs = KnowledgeBase::build(parts(vec![t])).unwrap_err();
        assert!(errs.contains(&KbError::DuplicateNode { tree: "a".into(), node: "f".into() }));
    }

    #[test]
    fn shape_rules() {
        let cases = vec![
            Node::decision("d", "one branch", [("Yes", "f")]),
            Node::decision("d", "dup", [("Yes", "f"), ("Yes", "f")]),
            Node::ret("d", "ret").with_context("x"),
        ];
        let mut rejected = 0;
        for (i, bad) in cases.into_iter().enumerate() {
            let mut bad = bad;
            if i == 2 {
                bad.edges.push(Edge::unlabeled("f"));
            }
            let t = TreeGraph::new("a", "A", vec![Node::start("S", "d"), bad, Node::finish("f", "F")]);
            if KnowledgeBase::build(parts(vec![t])).is_err() {
                rejected += 1;
            }
        }
        assert_eq!(rejected, 3);

        let open = Node::decision("d", "open", [("Yes", "f")]).with_open(true);
        let t = TreeGraph::new("a", "A", vec![Node::start("S", "d"), open, Node::finish("f", "F")]);
        assert!(KnowledgeBase::build(parts(vec![t])).is_ok());
    }

    #[test]
    fn severity_parsing_is_strict() {
        assert_eq!("High".parse::<SeverityLevel>().unwrap(), SeverityLevel::High);
        assert!("high".parse::<SeverityLevel>().is_err());
        assert!("Critical".parse::<SeverityLevel>().is_err());
        assert!(SeverityLevel::Low < SeverityLevel::Medium && SeverityLevel::Medium < SeverityLevel::High);
    }

    #[test]
    fn lookup_failure_modes_in_default_kb() {
        let kb = default_knowledge_base();
        let leak = kb.lookup_failure_mode(Area::Vacuum, "Leak (gasket/valve)").unwrap();
        use SeverityLevel::*;
        assert_eq!(leak.cost, CostVector::new(High, High, High));
        let shield = kb.lookup_failure_mode(Area::Imaging, "Light leak / poor shielding").unwrap();
        assert_eq!(shield.cost, CostVector::new(Low, Low, Low));
        assert!(matches!(
            kb.lookup_failure_mode(Area::Optics, "nonexistent"),
            Err(KbError::FailureModeNotFound { .. })
        ));
    }

    #[test]
    fn default_kb_shape() {
        let kb = default_knowledge_base();
        let ids: Vec<_> = kb.trees().iter().map(|t| t.id.as_str()).collect();
        assert_eq!(ids, ["main", "vacuum", "electronics", "optics", "ablation", "imaging"]);
        let signal = kb.node("main", "signal").unwrap();
        assert_eq!(signal.kind, NodeKind::Decision);
        assert_eq!(signal.edge_for_label("Yes").unwrap().target, "tune");
        assert_eq!(signal.edge_for_label("No").unwrap().target, "troubleshoot");
        let vac = kb.tree("vacuum").unwrap();
        let bake = vac.node_by_text("Bake 12-24h").unwrap();
        assert_eq!(bake.kind, NodeKind::Action);
        assert_eq!(kb.constant("uhv_pressure_upper_bound_pa"), Some(1e-6));
        assert_eq!(kb.constant("target_sn_ratio"), Some(30.0));
        assert_eq!(kb.catalog().len(), 11);
    }
}
