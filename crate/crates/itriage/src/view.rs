//! JSON projections of sessions served to clients.

use itriage_core::fmea::{describe_severity, intervention_text, rank_branches, Dimension, SeverityDescriptor, Weights};
use itriage_core::session::{EventKind, Prompt, Session, SessionStatus};
use itriage_core::{Area, CostVector, NodeKind};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiSessionView {
    pub id: String,
    pub status: SessionStatus,
    pub tree: String,
    pub node: String,
    pub prompt: Option<Prompt>,
    pub breadcrumb: Vec<Crumb>,
    pub stack_depth: usize,
    pub hints: Option<Vec<Hint>>,
    pub finding: Option<FindingCard>,
    pub can_abort: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Crumb {
    pub tree: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hint {
    pub label: String,
    pub score: Option<f64>,
    /// Exact rational score, e.g. `"7"` or `"15/2"`.
    pub exact: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FindingCard {
    pub tree: String,
    pub node: String,
    pub text: String,
    pub failure_mode: Option<ModeCard>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeCard {
    pub id: String,
    pub name: String,
    pub area: Area,
    pub cost: CostVector,
    pub descriptors: Vec<SeverityDescriptor>,
    /// Intervention for the worst level across the three dimensions.
    pub intervention: &'static str,
}

pub fn project(s: &Session, weights: &Weights) -> ApiSessionView {
    let kb = s.kb();
    let (tree, node) = s.cursor();
    let active = s.status().is_active();
    let prompt = if active { s.current_prompt().ok() } else { None };
    let hints = match &prompt {
        Some(p) if p.kind == NodeKind::Decision => rank_branches(kb, tree, node, weights).ok().map(|ranked| {
            ranked
                .into_iter()
                .map(|b| Hint { score: b.score_f64(), exact: b.score.map(|r| r.to_string()), label: b.label })
                .collect()
        }),
        _ => None,
    };
    let breadcrumb = s
        .visited()
        .iter()
        .filter_map(|(t, n)| kb.node(t, n).map(|node| Crumb { tree: t.clone(), text: node.text.clone() }))
        .collect();
    let finding = s.events().iter().rev().find_map(|e| match &e.kind {
        EventKind::FindingRecorded { tree, node, mode } => Some(finding_card(s, tree, node, mode.as_deref())),
        _ => None,
    });
    ApiSessionView {
        id: s.id().to_string(),
        status: s.status(),
        tree: tree.to_string(),
        node: node.to_string(),
        prompt,
        breadcrumb,
        stack_depth: s.stack().len(),
        hints,
        finding,
        can_abort: active,
    }
}

fn finding_card(s: &Session, tree: &str, node: &str, mode: Option<&str>) -> FindingCard {
    let kb = s.kb();
    let failure_mode = mode.and_then(|m| kb.failure_mode(m)).map(|m| ModeCard {
        id: m.id.clone(),
        name: m.name.clone(),
        area: m.area,
        cost: m.cost,
        descriptors: Dimension::ALL.iter().map(|d| describe_severity(*d, d.of(&m.cost))).collect(),
        intervention: intervention_text(m.cost.worst()),
    });
    FindingCard {
        tree: tree.to_string(),
        node: node.to_string(),
        text: kb.node(tree, node).map(|n| n.text.clone()).unwrap_or_default(),
        failure_mode,
    }
}
