//! Graph-level checks over a knowledge base.
//!
//! | rule | severity | what |
//! |------|----------|------|
//! | R1 | error | edge target missing from the tree |
//! | R2 | error / warning | decision with < 2 distinct labels; any `open` node warns |
//! | R3 | error | node unreachable from `start` |
//! | R4 | error | node that can never reach a terminal |
//! | R5 | error | jump tree or resume node missing |
//! | R6 | error | repeated branch label |
//! | R7 | error | finding names an unknown failure mode |
//! | R8 | warning | tree no jump leads to (except `main` and `entry` trees) |

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::dsl::Severity;
use crate::model::{KnowledgeBase, Node, NodeKind, TreeGraph, START_NODE_ID};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Rule {
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    R7,
    R8,
}

impl Rule {
    pub const ALL: [Rule; 8] = [Rule::R1, Rule::R2, Rule::R3, Rule::R4, Rule::R5, Rule::R6, Rule::R7, Rule::R8];
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LintDiagnostic {
    pub rule: Rule,
    pub severity: Severity,
    pub tree: String,
    pub node: Option<String>,
    pub message: String,
}

impl fmt::Display for LintDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.severity, self.rule, self.tree)?;
        if let Some(node) = &self.node {
            write!(f, ".{node}")?;
        }
        write!(f, ": {}", self.message)
    }
}

pub fn has_errors(diags: &[LintDiagnostic]) -> bool {
    diags.iter().any(|d| d.severity == Severity::Error)
}

/// Runs every rule; the result is sorted by (tree, node, rule) with
/// tree-level diagnostics first within a tree.
pub fn lint(kb: &KnowledgeBase) -> Vec<LintDiagnostic> {
    let mut out = Vec::new();
    let jumped_to: HashSet<&str> = kb
        .trees()
        .iter()
        .flat_map(|t| t.nodes())
        .filter_map(|n| n.jump.as_ref().map(|j| j.tree.as_str()))
        .collect();

    for tree in kb.trees() {
        let mut push = |rule: Rule, severity: Severity, node: Option<&str>, message: String| {
            out.push(LintDiagnostic { rule, severity, tree: tree.id.clone(), node: node.map(str::to_string), message });
        };

        for n in tree.nodes() {
            for e in &n.edges {
                if !tree.contains(&e.target) {
                    push(Rule::R1, Severity::Error, Some(&n.id), format!("edge to unknown node `{}`", e.target));
                }
            }
            check_branches(n, &mut push);
            check_jump(kb, tree, n, &mut push);
            if n.kind == NodeKind::Finding {
                if let Some(mode) = &n.failure_mode {
                    if kb.failure_mode(mode).is_none() {
                        push(Rule::R7, Severity::Error, Some(&n.id), format!("unknown failure mode `{mode}`"));
                    }
                }
            }
        }

        let reachable = forward_reachable(tree);
        for n in tree.nodes() {
            if !reachable.contains(n.id.as_str()) {
                push(Rule::R3, Severity::Error, Some(&n.id), "unreachable from start".into());
            }
        }

        let exits = reaches_terminal(tree);
        for n in tree.nodes() {
            if !exits.contains(n.id.as_str()) {
                push(Rule::R4, Severity::Error, Some(&n.id), "no terminal node is reachable".into());
            }
        }

        if tree.id != "main" && !tree.entry && !jumped_to.contains(tree.id.as_str()) {
            push(Rule::R8, Severity::Warning, None, "tree is not the target of any jump".into());
        }
    }

    out.sort_by(|a, b| (&a.tree, &a.node, a.rule).cmp(&(&b.tree, &b.node, b.rule)));
    out
}

fn check_branches(n: &Node, push: &mut impl FnMut(Rule, Severity, Option<&str>, String)) {
    if n.kind == NodeKind::Decision {
        let mut seen = HashSet::new();
        for label in n.edges.iter().filter_map(|e| e.label.as_deref()) {
            if !seen.insert(label) {
                push(Rule::R6, Severity::Error, Some(&n.id), format!("duplicate branch label \"{label}\""));
            }
        }
        let distinct = seen.iter().filter(|l| !l.is_empty()).count();
        if distinct < 2 && !n.open {
            push(Rule::R2, Severity::Error, Some(&n.id), format!("decision has {distinct} distinct labeled branch(es)"));
        }
    }
    if n.open {
        push(Rule::R2, Severity::Warning, Some(&n.id), format!("open {} \"{}\" is incomplete", n.kind, n.text));
    }
}

fn check_jump(kb: &KnowledgeBase, tree: &TreeGraph, n: &Node, push: &mut impl FnMut(Rule, Severity, Option<&str>, String)) {
    if n.kind != NodeKind::Jump {
        return;
    }
    match &n.jump {
        None => push(Rule::R5, Severity::Error, Some(&n.id), "jump without target".into()),
        Some(j) => {
            if kb.tree(&j.tree).is_none() {
                push(Rule::R5, Severity::Error, Some(&n.id), format!("jump to unknown tree `{}`", j.tree));
            }
            if !tree.contains(&j.resume) {
                push(Rule::R5, Severity::Error, Some(&n.id), format!("resume node `{}` not in tree", j.resume));
            }
        }
    }
}

fn forward_reachable(tree: &TreeGraph) -> HashSet<&str> {
    let mut seen = HashSet::new();
    let mut queue: VecDeque<&str> = VecDeque::new();
    if tree.contains(START_NODE_ID) {
        queue.push_back(START_NODE_ID);
    }
    while let Some(id) = queue.pop_front() {
        let Some(n) = tree.node(id) else { continue };
        if !seen.insert(n.id.as_str()) {
            continue;
        }
        queue.extend(n.edges.iter().map(|e| e.target.as_str()));
    }
    seen
}

/// Nodes from which some exit is reachable. Jumps and open nodes count as
/// exits alongside finish/return/finding.
fn reaches_terminal(tree: &TreeGraph) -> HashSet<&str> {
    let mut preds: HashMap<&str, BTreeSet<&str>> = HashMap::new();
    for n in tree.nodes() {
        for e in &n.edges {
            preds.entry(e.target.as_str()).or_default().insert(n.id.as_str());
        }
    }
    let mut seen = HashSet::new();
    let mut queue: VecDeque<&str> = tree
        .nodes()
        .iter()
        .filter(|n| n.kind.is_terminal() || n.kind == NodeKind::Jump || n.open)
        .map(|n| n.id.as_str())
        .collect();
    while let Some(id) = queue.pop_front() {
        if !seen.insert(id) {
            continue;
        }
        if let Some(ps) = preds.get(id) {
            queue.extend(ps.iter().copied());
        }
    }
    seen
}
