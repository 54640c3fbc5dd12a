//! Single-defect mutations of the bundled knowledge base, one per lint rule.

#![allow(dead_code)]

use itriage_core::lint::Rule;
use itriage_core::{default_knowledge_base, Edge, JumpTarget, KbParts, KnowledgeBase, Node};

fn edit_tree(parts: &mut KbParts, tree: &str, f: impl FnOnce(&mut Vec<Node>)) {
    let t = parts.trees.iter_mut().find(|t| t.id == tree).expect("tree");
    let mut nodes = t.clone().into_nodes();
    f(&mut nodes);
    *t = itriage_core::TreeGraph::new(t.id.clone(), t.title.clone(), nodes).with_entry(t.entry);
}

fn node<'a>(nodes: &'a mut [Node], id: &str) -> &'a mut Node {
    nodes.iter_mut().find(|n| n.id == id).expect("node")
}

pub fn seeded_defect(rule: Rule) -> KnowledgeBase {
    let mut parts = default_knowledge_base().to_parts();
    match rule {
        Rule::R1 => edit_tree(&mut parts, "main", |ns| node(ns, "check_signal").edges = vec![Edge::unlabeled("nowhere")]),
        Rule::R2 => edit_tree(&mut parts, "main", |ns| node(ns, "signal").edges.truncate(1)),
        Rule::R3 => edit_tree(&mut parts, "main", |ns| ns.push(Node::action("orphan", "Orphan", "finish"))),
        Rule::R4 => edit_tree(&mut parts, "main", |ns| {
            node(ns, "fluorescence").edges = vec![Edge::labeled("Yes", "tune"), Edge::labeled("No", "tune")];
            ns.retain(|n| n.id != "finish");
        }),
        Rule::R5 => edit_tree(&mut parts, "main", |ns| {
            node(ns, "vac_tree").jump = Some(JumpTarget { tree: "vacum".into(), resume: "potential".into() })
        }),
        Rule::R6 => edit_tree(&mut parts, "main", |ns| node(ns, "signal").edges[1].label = Some("Yes".into())),
        Rule::R7 => edit_tree(&mut parts, "vacuum", |ns| node(ns, "leakage").failure_mode = Some("leek".into())),
        Rule::R8 => {
            let t = parts.trees.iter_mut().find(|t| t.id == "imaging").expect("imaging");
            *t = t.clone().with_entry(false);
        }
    }
    KnowledgeBase::assemble_unchecked(parts)
}
