//! Graphviz DOT rendering of a single tree.

use std::fmt::Write;

use crate::model::{NodeKind, TreeGraph};

#[derive(Debug, Clone)]
pub struct DotOptions {
    /// Graphviz `rankdir` (TB, LR, ...).
    pub rankdir: String,
    /// Attach context notes as node tooltips.
    pub tooltips: bool,
}

impl Default for DotOptions {
    fn default() -> Self {
        Self { rankdir: "TB".to_string(), tooltips: true }
    }
}

/// Renders one tree as a `digraph`, one node statement per node and one
/// edge statement per edge. Jump targets appear as a dashed node's
/// `xlabel`, never as extra edges.
pub fn export_flowchart(tree: &TreeGraph, options: &DotOptions) -> String {
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(&tree.id)).unwrap();
    writeln!(out, "  graph [label={}, labelloc=t, rankdir={}];", quote(&tree.title), quote(&options.rankdir)).unwrap();
    writeln!(out, "  node [fontname=\"Helvetica\"];").unwrap();

    for n in tree.nodes() {
        let mut attrs = vec![format!("label={}", quote(&n.text))];
        let shape = match n.kind {
            NodeKind::Decision => "diamond",
            NodeKind::Start | NodeKind::Finish => "ellipse",
            _ => "box",
        };
        attrs.push(format!("shape={shape}"));
        match n.kind {
            NodeKind::Jump => {
                attrs.push("style=\"rounded,dashed\"".into());
                if let Some(j) = &n.jump {
                    attrs.push(format!("xlabel={}", quote(&format!("{} / resume {}", j.tree, j.resume))));
                }
            }
            NodeKind::Return => attrs.push("style=\"rounded,bold\"".into()),
            NodeKind::Finding => attrs.push("peripheries=2".into()),
            NodeKind::Finish => attrs.push("style=filled, fillcolor=\"#ccccff\"".into()),
            _ => {}
        }
        if n.open {
            attrs.push("color=\"#b22222\"".into());
        }
        if options.tooltips {
            if let Some(ctx) = &n.context {
                attrs.push(format!("tooltip={}", quote(ctx)));
            }
        }
        writeln!(out, "  {} [{}];", quote(&n.id), attrs.join(", ")).unwrap();
    }

    for n in tree.nodes() {
        for e in &n.edges {
            write!(out, "  {} -> {}", quote(&n.id), quote(&e.target)).unwrap();
            if let Some(label) = &e.label {
                write!(out, " [label={}]", quote(label)).unwrap();
            }
            out.push_str(";\n");
        }
    }
    out.push_str("}\n");
    out
}

fn quote(s: &str) -> String {
    let mut q = String::with_capacity(s.len() + 2);
    q.push('"');
    for c in s.chars() {
        match c {
            '"' => q.push_str("\\\""),
            '\\' => q.push_str("\\\\"),
            '\n' => q.push_str("\\n"),
            '\r' => {}
            c => q.push(c),
        }
    }
    q.push('"');
    q
}
