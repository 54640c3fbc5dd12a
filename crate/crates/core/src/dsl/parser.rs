use std::collections::{HashMap, HashSet};

use super::lexer::{tokenize, Tok, Token};
use super::{ParseDiagnostic, ParsedKb, Position, Severity, SourceSpans};
use crate::model::{
    Area, ConstantValue, CostVector, Edge, FailureMode, KbError, KbParts, KnowledgeBase, Node, NodeKind,
    SeverityLevel, TreeGraph, START_NODE_ID, validate,
};

pub(crate) const TOP_LEVEL_KEYWORDS: [&str; 4] = ["tree", "failure_mode", "constant", "meta"];
const NODE_KEYWORDS: [&str; 8] = ["start", "action", "note", "decision", "jump", "return", "finding", "finish"];

const MAX_DIAGNOSTICS: usize = 100;

/// Parses `.itkb` text into a validated knowledge base.
///
/// Either every construct is well formed and the result satisfies all
/// knowledge-base invariants, or only diagnostics are returned.
pub fn parse(text: &str) -> Result<ParsedKb, Vec<ParseDiagnostic>> {
    let draft = parse_draft(text)?;
    if draft.problems.is_empty() {
        return Ok(ParsedKb { kb: draft.kb, spans: draft.spans });
    }
    Err(draft.problems.into_iter().map(|(_, d)| d).collect())
}

/// Syntactically valid text that may still break knowledge-base
/// invariants. `kb` is assembled without validation.
#[derive(Debug, Clone)]
pub struct Draft {
    pub kb: KnowledgeBase,
    pub spans: SourceSpans,
    /// Validation failures, each placed at the offending token.
    pub problems: Vec<(KbError, ParseDiagnostic)>,
}

/// Like [`parse`] but only syntax errors are fatal.
pub fn parse_draft(text: &str) -> Result<Draft, Vec<ParseDiagnostic>> {
    let lines: Vec<&str> = text.lines().collect();
    let (tokens, lex_errors) = tokenize(text);
    let mut p = Parser {
        tokens,
        pos: 0,
        lines: &lines,
        diags: Vec::new(),
        spans: SourceSpans::default(),
        refs: RefSpans::default(),
    };
    for e in lex_errors {
        p.diag_at(e.pos, e.message);
    }
    let parts = p.file();

    if p.diags.iter().any(|d| d.severity == Severity::Error) {
        p.diags.truncate(MAX_DIAGNOSTICS);
        p.diags.sort_by_key(|d| (d.line, d.column));
        return Err(p.diags);
    }
    let mut problems: Vec<_> = validate(&parts)
        .into_iter()
        .map(|e| {
            let pos = p.refs.locate(&e, &p.spans);
            let d = p.make_diag(pos, e.to_string());
            (e, d)
        })
        .collect();
    problems.sort_by_key(|(_, d)| (d.line, d.column));
    Ok(Draft { kb: KnowledgeBase::assemble_unchecked(parts), spans: p.spans, problems })
}

/// Token positions of cross-references, used to place validation errors.
#[derive(Default)]
struct RefSpans {
    edge_targets: HashMap<(String, String, usize), Position>,
    jump_trees: HashMap<(String, String), Position>,
    jump_resumes: HashMap<(String, String), Position>,
    modes: HashMap<(String, String), Position>,
    trees: HashMap<String, Position>,
    failure_modes: HashMap<String, Position>,
    constants: HashMap<String, Position>,
    meta: HashMap<String, Position>,
    header: Option<Position>,
}

impl RefSpans {
    fn locate(&self, e: &KbError, spans: &SourceSpans) -> Position {
        let key = |t: &str, n: &str| (t.to_string(), n.to_string());
        let found = match e {
            KbError::UnresolvedEdgeTarget { tree, node, index, .. } => {
                self.edge_targets.get(&(tree.clone(), node.clone(), *index)).copied()
            }
            KbError::UnresolvedJumpTarget { tree, node, .. } => self.jump_trees.get(&key(tree, node)).copied(),
            KbError::UnresolvedResumeNode { tree, node, .. } => self.jump_resumes.get(&key(tree, node)).copied(),
            KbError::UnresolvedFailureMode { tree, node, .. } => self.modes.get(&key(tree, node)).copied(),
            KbError::StartCount { tree, .. } | KbError::DuplicateTree { tree } => self.trees.get(tree).copied(),
            KbError::DuplicateFailureMode { id } => self.failure_modes.get(id).copied(),
            KbError::NonFiniteConstant { name } => self.constants.get(name).copied(),
            KbError::InvalidIdentifier { ident, .. } => self
                .trees
                .get(ident)
                .or_else(|| self.failure_modes.get(ident))
                .or_else(|| self.constants.get(ident))
                .or_else(|| self.meta.get(ident))
                .copied(),
            _ => None,
        };
        found
            .or_else(|| e.location().and_then(|(t, n)| spans.node(t, n)))
            .or(self.header)
            .unwrap_or(Position { line: 1, column: 1 })
    }
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    lines: &'a [&'a str],
    diags: Vec<ParseDiagnostic>,
    spans: SourceSpans,
    refs: RefSpans,
}

/// Marker for a diagnostic already recorded; callers resynchronise.
struct Failed;

type PResult<T> = Result<T, Failed>;

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if !matches!(t.tok, Tok::Eof) {
            self.pos += 1;
        }
        t
    }

    fn make_diag(&self, pos: Position, message: String) -> ParseDiagnostic {
        let snippet = self.lines.get(pos.line.saturating_sub(1)).map(|l| l.to_string()).unwrap_or_default();
        ParseDiagnostic { severity: Severity::Error, line: pos.line, column: pos.column, message, snippet }
    }

    fn diag_at(&mut self, pos: Position, message: String) {
        if self.diags.len() < MAX_DIAGNOSTICS {
            let d = self.make_diag(pos, message);
            self.diags.push(d);
        }
    }

    fn fail<T>(&mut self, expected: &str) -> PResult<T> {
        let t = self.peek().clone();
        self.diag_at(t.pos, format!("expected {expected}, found {}", t.tok.describe()));
        Err(Failed)
    }

    fn is_ident(&self, word: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == word)
    }

    fn keyword(&mut self, word: &str) -> PResult<Position> {
        if self.is_ident(word) {
            Ok(self.advance().pos)
        } else {
            self.fail(&format!("`{word}`"))
        }
    }

    fn eat_keyword(&mut self, word: &str) -> bool {
        if self.is_ident(word) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Position)> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                Ok((s, self.advance().pos))
            }
            _ => self.fail(what),
        }
    }

    fn string(&mut self, what: &str) -> PResult<(String, Position)> {
        match &self.peek().tok {
            Tok::Str(s) => {
                let s = s.clone();
                Ok((s, self.advance().pos))
            }
            _ => self.fail(what),
        }
    }

    fn expect(&mut self, tok: Tok) -> PResult<Position> {
        if self.peek().tok == tok {
            Ok(self.advance().pos)
        } else {
            self.fail(&tok.describe())
        }
    }

    fn at_top_level_keyword(&self) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if TOP_LEVEL_KEYWORDS.contains(&s.as_str()))
    }

    fn at_node_keyword(&self) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if NODE_KEYWORDS.contains(&s.as_str()))
    }

    fn recover_top_level(&mut self) {
        while !matches!(self.peek().tok, Tok::Eof) && !self.at_top_level_keyword() {
            self.advance();
        }
    }

    /// Skips to the next node keyword, closing brace or top-level keyword.
    fn recover_in_tree(&mut self) {
        loop {
            match &self.peek().tok {
                Tok::Eof | Tok::RBrace => return,
                _ if self.at_node_keyword() || self.at_top_level_keyword() => return,
                _ => {
                    self.advance();
                }
            }
        }
    }

    fn file(&mut self) -> KbParts {
        let mut parts = KbParts::default();
        if self.header(&mut parts).is_err() {
            self.recover_top_level();
        }
        let mut seen_trees: HashSet<String> = HashSet::new();
        let mut seen_modes: HashSet<String> = HashSet::new();

        loop {
            let result = match &self.peek().tok {
                Tok::Eof => break,
                Tok::Ident(s) if s == "tree" => self.tree().map(|t| {
                    if !seen_trees.insert(t.id.clone()) {
                        let pos = self.refs.trees[&t.id];
                        self.diag_at(pos, format!("duplicate tree id `{}`", t.id));
                    }
                    parts.trees.push(t);
                }),
                Tok::Ident(s) if s == "failure_mode" => self.failure_mode().map(|(m, pos)| {
                    if !seen_modes.insert(m.id.clone()) {
                        self.diag_at(pos, format!("duplicate failure mode id `{}`", m.id));
                    }
                    parts.catalog.push(m);
                }),
                Tok::Ident(s) if s == "constant" => self.constant().map(|(name, value, pos)| {
                    if parts.constants.insert(name.clone(), value).is_some() {
                        self.diag_at(pos, format!("duplicate constant `{name}`"));
                    }
                }),
                Tok::Ident(s) if s == "meta" => self.meta().map(|(key, value, pos)| {
                    if parts.meta.insert(key.clone(), value).is_some() {
                        self.diag_at(pos, format!("duplicate meta key `{key}`"));
                    }
                }),
                _ => self.fail("`tree`, `failure_mode`, `constant` or `meta`"),
            };
            if result.is_err() {
                // Always make progress past the offending token.
                if !self.at_top_level_keyword() {
                    self.advance();
                }
                self.recover_top_level();
            }
        }
        parts
    }

    fn header(&mut self, parts: &mut KbParts) -> PResult<()> {
        let pos = self.keyword("kb")?;
        self.refs.header = Some(pos);
        parts.name = self.string("knowledge-base name string")?.0;
        self.keyword("version")?;
        parts.version = self.string("version string")?.0;
        Ok(())
    }

    fn failure_mode(&mut self) -> PResult<(FailureMode, Position)> {
        self.keyword("failure_mode")?;
        let (id, pos) = self.ident("failure mode id")?;
        self.refs.failure_modes.entry(id.clone()).or_insert(pos);
        self.keyword("area")?;
        let area = self.parse_token::<Area>("area (Vacuum, Electronics, Optics, Imaging)")?;
        self.keyword("name")?;
        let (name, _) = self.string("failure mode name string")?;
        self.keyword("impact")?;
        let impact = self.parse_token::<SeverityLevel>("severity level (Low, Medium, High)")?;
        self.keyword("time")?;
        let time = self.parse_token::<SeverityLevel>("severity level (Low, Medium, High)")?;
        self.keyword("disturbance")?;
        let disturbance = self.parse_token::<SeverityLevel>("severity level (Low, Medium, High)")?;
        let notes = if self.eat_keyword("notes") { Some(self.string("notes string")?.0) } else { None };
        let cost = CostVector::new(impact, time, disturbance);
        Ok((FailureMode { id, area, name, cost, notes }, pos))
    }

    fn parse_token<T: std::str::FromStr>(&mut self, what: &str) -> PResult<T> {
        match &self.peek().tok {
            Tok::Ident(s) => match s.parse::<T>() {
                Ok(v) => {
                    self.advance();
                    Ok(v)
                }
                Err(_) => {
                    let t = self.peek().clone();
                    self.diag_at(t.pos, format!("expected {what}, found {}", t.tok.describe()));
                    Err(Failed)
                }
            },
            _ => self.fail(what),
        }
    }

    fn constant(&mut self) -> PResult<(String, ConstantValue, Position)> {
        self.keyword("constant")?;
        let (name, pos) = self.ident("constant name")?;
        self.refs.constants.entry(name.clone()).or_insert(pos);
        self.expect(Tok::Equals)?;
        let value = match self.peek().tok {
            Tok::Number(v) => {
                self.advance();
                v
            }
            _ => return self.fail("number"),
        };
        let unit = match &self.peek().tok {
            Tok::Ident(s) if !TOP_LEVEL_KEYWORDS.contains(&s.as_str()) => Some(self.ident("unit")?.0),
            Tok::Str(_) => Some(self.string("unit")?.0),
            _ => None,
        };
        Ok((name, ConstantValue { value, unit }, pos))
    }

    fn meta(&mut self) -> PResult<(String, String, Position)> {
        self.keyword("meta")?;
        let (key, pos) = self.ident("meta key")?;
        self.refs.meta.entry(key.clone()).or_insert(pos);
        let (value, _) = self.string("meta value string")?;
        Ok((key, value, pos))
    }

    fn tree(&mut self) -> PResult<TreeGraph> {
        self.keyword("tree")?;
        let (id, pos) = self.ident("tree id")?;
        // Later declarations win so duplicate diagnostics point at them.
        self.refs.trees.insert(id.clone(), pos);
        self.keyword("title")?;
        let (title, _) = self.string("tree title string")?;
        let entry = self.eat_keyword("entry");
        self.expect(Tok::LBrace)?;

        let mut nodes: Vec<Node> = Vec::new();
        let mut seen = HashSet::new();
        loop {
            match &self.peek().tok {
                Tok::RBrace => {
                    self.advance();
                    break;
                }
                Tok::Eof => return self.fail("`}` closing the tree"),
                _ => {}
            }
            if self.at_top_level_keyword() {
                return self.fail("`}` closing the tree");
            }
            match self.node(&id) {
                Ok((node, header)) => {
                    if !seen.insert(node.id.clone()) {
                        self.diag_at(header, format!("duplicate node id `{}` in tree `{id}`", node.id));
                    } else {
                        self.spans.insert(&id, &node.id, header);
                    }
                    nodes.push(node);
                }
                Err(Failed) => {
                    if !self.at_node_keyword() && !matches!(self.peek().tok, Tok::RBrace | Tok::Eof) {
                        self.advance();
                    }
                    self.recover_in_tree();
                }
            }
        }
        Ok(TreeGraph::new(id, title, nodes).with_entry(entry))
    }

    fn target(&mut self, tree: &str, node: &str, index: usize) -> PResult<String> {
        let (target, pos) = self.ident("target node id")?;
        self.refs.edge_targets.insert((tree.to_string(), node.to_string(), index), pos);
        Ok(target)
    }

    fn node(&mut self, tree: &str) -> PResult<(Node, Position)> {
        let (kw, header) = self.ident("node keyword")?;
        let mut node = match kw.as_str() {
            "start" => {
                let text = match &self.peek().tok {
                    Tok::Str(_) => self.string("start text")?.0,
                    _ => "Start".to_string(),
                };
                self.expect(Tok::Arrow)?;
                let target = self.target(tree, START_NODE_ID, 0)?;
                Node::start(text, target)
            }
            "action" | "note" => {
                let (id, _) = self.ident("node id")?;
                let (text, _) = self.string("node text string")?;
                if self.eat_keyword("open") {
                    let mut n = Node::open_action(id, text);
                    if kw == "note" {
                        n.kind = NodeKind::Note;
                    }
                    n
                } else {
                    self.expect(Tok::Arrow)?;
                    let target = self.target(tree, &id, 0)?;
                    if kw == "note" {
                        Node::note(id, text, target)
                    } else {
                        Node::action(id, text, target)
                    }
                }
            }
            "decision" => {
                let (id, _) = self.ident("node id")?;
                let (text, _) = self.string("node text string")?;
                let open = self.eat_keyword("open");
                self.expect(Tok::LBrace)?;
                let mut edges = Vec::new();
                let mut labels = HashSet::new();
                while !matches!(self.peek().tok, Tok::RBrace) {
                    let (label, lpos) = self.string("branch label string or `}`")?;
                    if label.is_empty() {
                        self.diag_at(lpos, "branch labels must be non-empty".into());
                    } else if !labels.insert(label.clone()) {
                        self.diag_at(lpos, format!("duplicate branch label \"{label}\" on decision `{id}`"));
                    }
                    self.expect(Tok::Arrow)?;
                    let target = self.target(tree, &id, edges.len())?;
                    edges.push(Edge::labeled(label, target));
                }
                let close = self.advance().pos;
                if edges.is_empty() {
                    self.diag_at(close, format!("decision `{id}` needs at least one branch"));
                }
                let mut n = Node::decision(id, text, Vec::<(String, String)>::new()).with_open(open);
                n.edges = edges;
                n
            }
            "jump" => {
                let (id, _) = self.ident("node id")?;
                let (text, _) = self.string("node text string")?;
                self.keyword("to")?;
                let (target_tree, tpos) = self.ident("target tree id")?;
                self.keyword("resume")?;
                let (resume, rpos) = self.ident("resume node id")?;
                self.refs.jump_trees.insert((tree.to_string(), id.clone()), tpos);
                self.refs.jump_resumes.insert((tree.to_string(), id.clone()), rpos);
                Node::jump(id, text, target_tree, resume)
            }
            "return" => {
                let (id, _) = self.ident("node id")?;
                let (text, _) = self.string("node text string")?;
                Node::ret(id, text)
            }
            "finding" => {
                let (id, _) = self.ident("node id")?;
                let (text, _) = self.string("node text string")?;
                let mode = if self.eat_keyword("mode") {
                    let (mode, mpos) = self.ident("failure mode id")?;
                    self.refs.modes.insert((tree.to_string(), id.clone()), mpos);
                    Some(mode)
                } else {
                    None
                };
                Node::finding(id, text, mode.as_deref())
            }
            "finish" => {
                let (id, _) = self.ident("node id")?;
                let text = match &self.peek().tok {
                    Tok::Str(_) => self.string("finish text")?.0,
                    _ => "Finish".to_string(),
                };
                Node::finish(id, text)
            }
            other => {
                self.diag_at(
                    header,
                    format!(
                        "expected node keyword ({}), found `{other}`",
                        NODE_KEYWORDS.join(", ")
                    ),
                );
                return Err(Failed);
            }
        };
        if self.eat_keyword("context") {
            node.context = Some(self.string("context string")?.0);
        }
        Ok((node, header))
    }
}
