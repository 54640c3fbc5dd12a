use std::fmt::Write;

use super::parser::TOP_LEVEL_KEYWORDS;
use crate::model::{is_identifier, KnowledgeBase, Node, NodeKind};

/// Renders `kb` in canonical `.itkb` form.
///
/// Output is a pure function of the KB: metadata and constants in key
/// order, then the catalog and trees in declaration order.
pub fn serialize(kb: &KnowledgeBase) -> String {
    let mut out = String::new();
    writeln!(out, "kb {} version {}", quote(kb.name()), quote(kb.version())).unwrap();

    if !kb.meta().is_empty() {
        out.push('\n');
        for (key, value) in kb.meta() {
            writeln!(out, "meta {key} {}", quote(value)).unwrap();
        }
    }

    if !kb.constants().is_empty() {
        out.push('\n');
        for (name, c) in kb.constants() {
            write!(out, "constant {name} = {:?}", c.value).unwrap();
            if let Some(unit) = &c.unit {
                if is_identifier(unit) && !TOP_LEVEL_KEYWORDS.contains(&unit.as_str()) {
                    write!(out, " {unit}").unwrap();
                } else {
                    write!(out, " {}", quote(unit)).unwrap();
                }
            }
            out.push('\n');
        }
    }

    if !kb.catalog().is_empty() {
        out.push('\n');
        for m in kb.catalog() {
            write!(
                out,
                "failure_mode {} area {} name {} impact {} time {} disturbance {}",
                m.id,
                m.area,
                quote(&m.name),
                m.cost.operational_impact,
                m.cost.time_cost,
                m.cost.disturbance_risk
            )
            .unwrap();
            if let Some(notes) = &m.notes {
                write!(out, " notes {}", quote(notes)).unwrap();
            }
            out.push('\n');
        }
    }

    for tree in kb.trees() {
        out.push('\n');
        write!(out, "tree {} title {}", tree.id, quote(&tree.title)).unwrap();
        if tree.entry {
            out.push_str(" entry");
        }
        out.push_str(" {\n");
        for node in tree.nodes() {
            write_node(&mut out, node);
        }
        out.push_str("}\n");
    }
    out
}

fn write_node(out: &mut String, n: &Node) {
    out.push_str("  ");
    match n.kind {
        NodeKind::Start => {
            write!(out, "start {} -> {}", quote(&n.text), n.successor().unwrap_or_default()).unwrap();
        }
        NodeKind::Action | NodeKind::Note => {
            write!(out, "{} {} {}", n.kind, n.id, quote(&n.text)).unwrap();
            match n.successor() {
                Some(target) if !n.open => write!(out, " -> {target}").unwrap(),
                _ => out.push_str(" open"),
            }
        }
        NodeKind::Decision => {
            write!(out, "decision {} {}", n.id, quote(&n.text)).unwrap();
            if n.open {
                out.push_str(" open");
            }
            out.push_str(" {\n");
            for e in &n.edges {
                writeln!(out, "    {} -> {}", quote(e.label.as_deref().unwrap_or_default()), e.target).unwrap();
            }
            out.push_str("  }");
        }
        NodeKind::Jump => {
            let (tree, resume) = n.jump.as_ref().map(|j| (j.tree.as_str(), j.resume.as_str())).unwrap_or_default();
            write!(out, "jump {} {} to {tree} resume {resume}", n.id, quote(&n.text)).unwrap();
        }
        NodeKind::Return => write!(out, "return {} {}", n.id, quote(&n.text)).unwrap(),
        NodeKind::Finding => {
            write!(out, "finding {} {}", n.id, quote(&n.text)).unwrap();
            if let Some(mode) = &n.failure_mode {
                write!(out, " mode {mode}").unwrap();
            }
        }
        NodeKind::Finish => write!(out, "finish {} {}", n.id, quote(&n.text)).unwrap(),
    }
    if let Some(ctx) = &n.context {
        write!(out, " context {}", quote(ctx)).unwrap();
    }
    out.push('\n');
}

fn quote(s: &str) -> String {
    let mut q = String::with_capacity(s.len() + 2);
    q.push('"');
    for c in s.chars() {
        match c {
            '"' => q.push_str("\\\""),
            '\\' => q.push_str("\\\\"),
            '\n' => q.push_str("\\n"),
            c => q.push(c),
        }
    }
    q.push('"');
    q
}
