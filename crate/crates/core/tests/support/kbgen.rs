//! Random valid knowledge bases for property tests.
//!
//! Every tree is grown from its start node so each node has a path to a
//! leaf of terminal kind; extra decision branches may point back at any
//! existing node. The result passes `KnowledgeBase::build` and lints
//! without errors.

#![allow(dead_code)]

use std::collections::BTreeMap;

use itriage_core::{
    Area, ConstantValue, CostVector, Edge, FailureMode, JumpTarget, KbParts, KnowledgeBase, Node, NodeKind,
    SeverityLevel, TreeGraph,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PIECES: &[&str] = &[
    "a", "Z", " ", "\"", "\\", "\n", "\\n", "->", "{", "}", "#", "=", "é", "→", "µ", "'", "tree", "open", "\t", "0.5",
    "Yes", "日本", "\u{1F9EA}",
];

pub fn adversarial(rng: &mut ChaCha8Rng, min_len: usize) -> String {
    let n = rng.gen_range(min_len..min_len + 6);
    (0..n).map(|_| *PIECES.choose(rng).unwrap()).collect()
}

fn level(rng: &mut ChaCha8Rng) -> SeverityLevel {
    *SeverityLevel::ALL.choose(rng).unwrap()
}

fn constant_value(rng: &mut ChaCha8Rng) -> f64 {
    match rng.gen_range(0..5) {
        0 => rng.gen_range(-1e3..1e3),
        1 => rng.gen::<f64>() * 10f64.powi(rng.gen_range(-300..300)),
        2 => -(rng.gen_range(0..1000) as f64),
        3 => f64::MIN_POSITIVE / 4.0,
        _ => rng.gen_range(0..100) as f64,
    }
}

struct Builder<'a> {
    rng: &'a mut ChaCha8Rng,
    nodes: Vec<Node>,
    budget: usize,
    tree_ids: &'a [String],
    modes: &'a [String],
}

impl Builder<'_> {
    fn fresh_id(&self) -> String {
        format!("n{}", self.nodes.len())
    }

    /// Creates a node and its subtree; returns its id.
    fn grow(&mut self) -> String {
        let id = self.fresh_id();
        self.nodes.push(Node::finish(id.clone(), "placeholder"));
        let slot = self.nodes.len() - 1;
        let can_grow = self.budget > 0;
        if can_grow {
            self.budget -= 1;
        }
        let choice = if can_grow { self.rng.gen_range(0..10) } else { 6 + self.rng.gen_range(0..4) };
        let text = adversarial(self.rng, 0);
        let mut node = match choice {
            0 | 1 => {
                let next = self.grow();
                Node::action(id.clone(), text, next)
            }
            2 => {
                if self.rng.gen_bool(0.3) {
                    Node::open_action(id.clone(), text)
                } else {
                    let next = self.grow();
                    Node::note(id.clone(), text, next)
                }
            }
            3..=5 => {
                let open = self.rng.gen_bool(0.15);
                let k = if open { self.rng.gen_range(1..3) } else { self.rng.gen_range(2..5) };
                let mut labels: Vec<String> = Vec::new();
                while labels.len() < k {
                    let l = adversarial(self.rng, 1);
                    if !labels.contains(&l) {
                        labels.push(l);
                    }
                }
                let mut edges = Vec::new();
                for (i, label) in labels.into_iter().enumerate() {
                    let target = if i == 0 || self.rng.gen_bool(0.5) {
                        self.grow()
                    } else {
                        let j = self.rng.gen_range(0..self.nodes.len());
                        self.nodes[j].id.clone()
                    };
                    edges.push(Edge::labeled(label, target));
                }
                let mut d = Node::decision(id.clone(), text, Vec::<(String, String)>::new()).with_open(open);
                d.edges = edges;
                d
            }
            6 => Node::finish(id.clone(), text),
            7 => Node::ret(id.clone(), text),
            8 => {
                let tree = self.tree_ids.choose(self.rng).unwrap().clone();
                Node::jump(id.clone(), text, tree, "start")
            }
            _ => {
                let mode = if self.rng.gen_bool(0.6) { self.modes.choose(self.rng).cloned() } else { None };
                Node::finding(id.clone(), text, mode.as_deref())
            }
        };
        if self.rng.gen_bool(0.2) {
            node = node.with_context(adversarial(self.rng, 0));
        }
        self.nodes[slot] = node;
        id
    }
}

pub fn random_parts(seed: u64) -> KbParts {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tree_count = rng.gen_range(1..4);
    let tree_ids: Vec<String> =
        (0..tree_count).map(|i| if i == 0 { "main".to_string() } else { format!("t{i}_{}", rng.gen_range(0..100)) }).collect();

    let mode_count = rng.gen_range(0..5);
    let catalog: Vec<FailureMode> = (0..mode_count)
        .map(|i| FailureMode {
            id: format!("m{i}"),
            area: *Area::ALL.choose(&mut rng).unwrap(),
            name: adversarial(&mut rng, 1),
            cost: CostVector::new(level(&mut rng), level(&mut rng), level(&mut rng)),
            notes: if rng.gen_bool(0.3) { Some(adversarial(&mut rng, 0)) } else { None },
        })
        .collect();
    let modes: Vec<String> = catalog.iter().map(|m| m.id.clone()).collect();

    let mut trees = Vec::new();
    for id in &tree_ids {
        let budget = rng.gen_range(1..10);
        let title = adversarial(&mut rng, 0);
        let entry = rng.gen_bool(0.3);
        let mut b = Builder { rng: &mut rng, nodes: Vec::new(), budget, tree_ids: &tree_ids, modes: &modes };
        b.nodes.push(Node::start("Start", "n1"));
        let first = b.grow();
        let mut nodes = b.nodes;
        nodes[0] = Node::start(adversarial(&mut rng, 0), first);
        let ids: Vec<String> = nodes.iter().map(|n| n.id.clone()).collect();
        for n in nodes.iter_mut().filter(|n| n.kind == NodeKind::Jump) {
            let resume = ids.choose(&mut rng).unwrap().clone();
            let tree = n.jump.as_ref().unwrap().tree.clone();
            n.jump = Some(JumpTarget { tree, resume });
        }
        trees.push(TreeGraph::new(id.clone(), title, nodes).with_entry(entry));
    }

    let mut constants = BTreeMap::new();
    for i in 0..rng.gen_range(0..4) {
        let unit = match rng.gen_range(0..3) {
            0 => None,
            1 => Some("Pa".to_string()),
            _ => Some(adversarial(&mut rng, 1)),
        };
        constants.insert(format!("c{i}"), ConstantValue { value: constant_value(&mut rng), unit });
    }
    let mut meta = BTreeMap::new();
    for i in 0..rng.gen_range(0..3) {
        meta.insert(format!("k{i}"), adversarial(&mut rng, 0));
    }

    KbParts {
        name: adversarial(&mut rng, 0),
        version: adversarial(&mut rng, 0),
        trees,
        catalog,
        constants,
        meta,
    }
}

pub fn random_kb(seed: u64) -> KnowledgeBase {
    let parts = random_parts(seed);
    match KnowledgeBase::build(parts) {
        Ok(kb) => kb,
        Err(errs) => panic!("generator produced an invalid KB (seed {seed}): {errs:?}"),
    }
}
