//! Event-sourced walks through a knowledge base.
//!
//! A [`Session`] owns a cursor, a jump stack and an append-only event log.
//! [`replay`] rebuilds the same state from the log alone.

use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{KnowledgeBase, NodeKind, START_NODE_ID};

pub const DEFAULT_MAX_STEPS: usize = 10_000;
pub const LOG_EXTENSION: &str = "itlog";

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Test clock: returns a settable instant, optionally advancing by a
/// fixed tick after every read.
#[derive(Debug)]
pub struct ManualClock {
    now: Mutex<DateTime<Utc>>,
    tick: Duration,
}

impl ManualClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        Self { now: Mutex::new(start), tick: Duration::zero() }
    }

    pub fn ticking(start: DateTime<Utc>, tick: Duration) -> Self {
        Self { now: Mutex::new(start), tick }
    }

    pub fn advance(&self, by: Duration) {
        *self.now.lock().unwrap() += by;
    }

    pub fn set(&self, at: DateTime<Utc>) {
        *self.now.lock().unwrap() = at;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> DateTime<Utc> {
        let mut now = self.now.lock().unwrap();
        let t = *now;
        *now += self.tick;
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Active,
    FinishedOk,
    FinishedFinding,
    Aborted,
}

impl SessionStatus {
    pub fn is_active(self) -> bool {
        self == SessionStatus::Active
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SessionStatus::Active => "active",
            SessionStatus::FinishedOk => "finished_ok",
            SessionStatus::FinishedFinding => "finished_finding",
            SessionStatus::Aborted => "aborted",
        }
    }
}

impl fmt::Display for SessionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Input {
    Acknowledge,
    Answer(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Started { session: String, tree: String, max_steps: usize },
    Prompted { tree: String, node: String },
    Answered { label: String },
    Acknowledged,
    Jumped { tree: String, node: String },
    Returned { tree: String, node: String },
    FindingRecorded { tree: String, node: String, mode: Option<String> },
    Finished { status: SessionStatus },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub seq: u64,
    pub ts: DateTime<Utc>,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub tree: String,
    pub resume: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Prompt {
    pub kind: NodeKind,
    pub text: String,
    pub answers: Vec<String>,
    pub context_note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("unknown tree `{0}`")]
    UnknownTree(String),
    #[error("tree `{0}` has no start node")]
    NoStart(String),
    #[error("node `{tree}.{node}` does not resolve")]
    Unresolved { tree: String, node: String },
    #[error("\"{label}\" is not an answer here (expected one of {answers:?})")]
    InvalidAnswer { label: String, answers: Vec<String> },
    #[error("this prompt needs an answer")]
    AnswerRequired,
    #[error("this prompt takes an acknowledgement, not an answer")]
    AcknowledgeRequired,
    #[error("`{tree}.{node}` is open and has no continuation; abort the session")]
    DeadEnd { tree: String, node: String },
    #[error("session already {0}")]
    NotActive(SessionStatus),
    #[error("step limit of {0} exceeded, session aborted")]
    MaxStepsExceeded(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("event log is empty")]
    Empty,
    #[error("event log does not begin with a `started` event")]
    MissingStart,
    #[error("event {seq}: {reason}")]
    Inconsistent { seq: u64, reason: String },
}

pub struct Session {
    id: String,
    kb: Arc<KnowledgeBase>,
    tree: String,
    node: String,
    stack: Vec<Frame>,
    events: Vec<SessionEvent>,
    visited: Vec<(String, String)>,
    status: SessionStatus,
    steps: usize,
    max_steps: usize,
    clock: Arc<dyn Clock>,
}

impl fmt::Debug for Session {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Session")
            .field("id", &self.id)
            .field("cursor", &(&self.tree, &self.node))
            .field("stack", &self.stack)
            .field("status", &self.status)
            .field("steps", &self.steps)
            .field("events", &self.events.len())
            .finish()
    }
}

pub fn new_session_id() -> String {
    format!("{:032x}", rand::random::<u128>())
}

impl Session {
    pub fn start(kb: Arc<KnowledgeBase>, tree: &str, clock: Arc<dyn Clock>) -> Result<Self, SessionError> {
        Self::start_with(kb, tree, clock, new_session_id(), DEFAULT_MAX_STEPS)
    }

    pub fn start_with(
        kb: Arc<KnowledgeBase>,
        tree: &str,
        clock: Arc<dyn Clock>,
        id: String,
        max_steps: usize,
    ) -> Result<Self, SessionError> {
        let t = kb.tree(tree).ok_or_else(|| SessionError::UnknownTree(tree.to_string()))?;
        if t.start().is_none() {
            return Err(SessionError::NoStart(tree.to_string()));
        }
        let mut s = Session {
            id: id.clone(),
            kb,
            tree: tree.to_string(),
            node: START_NODE_ID.to_string(),
            stack: Vec::new(),
            events: Vec::new(),
            visited: Vec::new(),
            status: SessionStatus::Active,
            steps: 0,
            max_steps,
            clock,
        };
        s.emit(EventKind::Started { session: id, tree: tree.to_string(), max_steps });
        s.arrive(tree.to_string(), START_NODE_ID.to_string())?;
        Ok(s)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Replaces the clock used to stamp later events, e.g. after [`replay`].
    pub fn set_clock(&mut self, clock: Arc<dyn Clock>) {
        self.clock = clock;
    }

    pub fn kb(&self) -> &Arc<KnowledgeBase> {
        &self.kb
    }

    pub fn cursor(&self) -> (&str, &str) {
        (&self.tree, &self.node)
    }

    pub fn stack(&self) -> &[Frame] {
        &self.stack
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    /// Every node the walk has landed on, in order, excluding start nodes.
    pub fn visited(&self) -> &[(String, String)] {
        &self.visited
    }

    pub fn visited_texts(&self) -> Vec<&str> {
        self.visited
            .iter()
            .filter_map(|(t, n)| self.kb.node(t, n))
            .map(|n| n.text.as_str())
            .collect()
    }

    pub fn current_prompt(&self) -> Result<Prompt, SessionError> {
        if !self.status.is_active() {
            return Err(SessionError::NotActive(self.status));
        }
        let n = self.current_node()?;
        Ok(Prompt {
            kind: n.kind,
            text: n.text.clone(),
            answers: if n.kind == NodeKind::Decision {
                n.branch_labels().into_iter().map(str::to_string).collect()
            } else {
                Vec::new()
            },
            context_note: n.context.clone(),
        })
    }

    pub fn advance(&mut self, input: Input) -> Result<(), SessionError> {
        if !self.status.is_active() {
            return Err(SessionError::NotActive(self.status));
        }
        let n = self.current_node()?.clone();
        match (n.kind, input) {
            (NodeKind::Decision, Input::Answer(label)) => {
                let Some(edge) = n.edge_for_label(&label) else {
                    let answers = n.branch_labels().into_iter().map(str::to_string).collect();
                    return Err(SessionError::InvalidAnswer { label, answers });
                };
                let target = edge.target.clone();
                self.emit(EventKind::Answered { label });
                self.arrive(self.tree.clone(), target)
            }
            (NodeKind::Decision, Input::Acknowledge) => Err(SessionError::AnswerRequired),
            (_, Input::Answer(_)) => Err(SessionError::AcknowledgeRequired),
            (NodeKind::Jump, Input::Acknowledge) => {
                let Some(j) = &n.jump else {
                    return Err(SessionError::Unresolved { tree: self.tree.clone(), node: n.id.clone() });
                };
                let target = self.kb.tree(&j.tree).and_then(|t| t.start().map(|s| (t, s)));
                let Some((_, start)) = target else {
                    return Err(SessionError::Unresolved { tree: j.tree.clone(), node: START_NODE_ID.into() });
                };
                let landing = start.successor().unwrap_or(START_NODE_ID).to_string();
                self.emit(EventKind::Acknowledged);
                self.stack.push(Frame { tree: self.tree.clone(), resume: j.resume.clone() });
                self.emit(EventKind::Jumped { tree: j.tree.clone(), node: landing });
                self.arrive(j.tree.clone(), START_NODE_ID.to_string())
            }
            (_, Input::Acknowledge) => match n.successor() {
                Some(next) => {
                    let next = next.to_string();
                    self.emit(EventKind::Acknowledged);
                    self.arrive(self.tree.clone(), next)
                }
                None => Err(SessionError::DeadEnd { tree: self.tree.clone(), node: n.id.clone() }),
            },
        }
    }

    pub fn abort(&mut self) -> Result<(), SessionError> {
        if !self.status.is_active() {
            return Err(SessionError::NotActive(self.status));
        }
        self.finish(SessionStatus::Aborted);
        Ok(())
    }

    fn current_node(&self) -> Result<&crate::model::Node, SessionError> {
        self.kb
            .node(&self.tree, &self.node)
            .ok_or_else(|| SessionError::Unresolved { tree: self.tree.clone(), node: self.node.clone() })
    }

    fn emit(&mut self, kind: EventKind) {
        let seq = self.events.len() as u64;
        self.events.push(SessionEvent { seq, ts: self.clock.now(), kind });
    }

    fn finish(&mut self, status: SessionStatus) {
        self.status = status;
        self.emit(EventKind::Finished { status });
    }

    /// Moves the cursor onto `node`, passing through start and return
    /// nodes until something needs input or the walk ends.
    fn arrive(&mut self, mut tree: String, mut node: String) -> Result<(), SessionError> {
        loop {
            self.steps += 1;
            self.tree.clone_from(&tree);
            self.node.clone_from(&node);
            if self.steps > self.max_steps {
                self.finish(SessionStatus::Aborted);
                return Err(SessionError::MaxStepsExceeded(self.max_steps));
            }
            let n = self
                .kb
                .node(&tree, &node)
                .ok_or_else(|| SessionError::Unresolved { tree: tree.clone(), node: node.clone() })?;
            if n.kind != NodeKind::Start {
                self.visited.push((tree.clone(), node.clone()));
            }
            match n.kind {
                NodeKind::Start => {
                    node = n
                        .successor()
                        .ok_or_else(|| SessionError::Unresolved { tree: tree.clone(), node: node.clone() })?
                        .to_string();
                }
                NodeKind::Action | NodeKind::Note | NodeKind::Decision | NodeKind::Jump => {
                    self.emit(EventKind::Prompted { tree, node });
                    return Ok(());
                }
                NodeKind::Finish => {
                    self.finish(SessionStatus::FinishedOk);
                    return Ok(());
                }
                NodeKind::Finding => {
                    let mode = n.failure_mode.clone();
                    self.emit(EventKind::FindingRecorded { tree, node, mode });
                    self.finish(SessionStatus::FinishedFinding);
                    return Ok(());
                }
                NodeKind::Return => match self.stack.pop() {
                    Some(frame) => {
                        self.emit(EventKind::Returned { tree: frame.tree.clone(), node: frame.resume.clone() });
                        tree = frame.tree;
                        node = frame.resume;
                    }
                    None => {
                        self.finish(SessionStatus::FinishedOk);
                        return Ok(());
                    }
                },
            }
        }
    }
}

/// Rebuilds a session by re-executing the inputs recorded in `events` and
/// checking that every derived event matches the log.
pub fn replay(kb: Arc<KnowledgeBase>, events: &[SessionEvent]) -> Result<Session, ReplayError> {
    let first = events.first().ok_or(ReplayError::Empty)?;
    let EventKind::Started { session, tree, max_steps } = &first.kind else {
        return Err(ReplayError::MissingStart);
    };
    for (i, e) in events.iter().enumerate() {
        if e.seq != i as u64 {
            return Err(ReplayError::Inconsistent { seq: e.seq, reason: format!("expected sequence number {i}") });
        }
    }
    let clock: Arc<dyn Clock> = Arc::new(ManualClock::new(first.ts));
    let mut s = Session::start_with(kb, tree, clock, session.clone(), *max_steps)
        .map_err(|e| ReplayError::Inconsistent { seq: 0, reason: e.to_string() })?;
    let mut done = compare(&s, events, 0)?;

    while done < events.len() {
        let ev = &events[done];
        let result = match &ev.kind {
            EventKind::Answered { label } => s.advance(Input::Answer(label.clone())),
            EventKind::Acknowledged => s.advance(Input::Acknowledge),
            EventKind::Finished { status: SessionStatus::Aborted } => s.abort(),
            other => {
                return Err(ReplayError::Inconsistent { seq: ev.seq, reason: format!("unexpected {} event", kind_name(other)) })
            }
        };
        match result {
            Ok(()) | Err(SessionError::MaxStepsExceeded(_)) => {}
            Err(e) => return Err(ReplayError::Inconsistent { seq: ev.seq, reason: e.to_string() }),
        }
        done = compare(&s, events, done)?;
    }
    s.events = events.to_vec();
    Ok(s)
}

fn compare(s: &Session, events: &[SessionEvent], from: usize) -> Result<usize, ReplayError> {
    let produced = s.events();
    for i in from..produced.len() {
        match events.get(i) {
            Some(e) if e.kind == produced[i].kind => {}
            Some(e) => {
                return Err(ReplayError::Inconsistent {
                    seq: e.seq,
                    reason: format!("log has {:?}, knowledge base yields {:?}", e.kind, produced[i].kind),
                })
            }
            None => {
                return Err(ReplayError::Inconsistent {
                    seq: i as u64,
                    reason: format!("log ends before {:?}", produced[i].kind),
                })
            }
        }
    }
    Ok(produced.len())
}

fn kind_name(kind: &EventKind) -> &'static str {
    match kind {
        EventKind::Started { .. } => "started",
        EventKind::Prompted { .. } => "prompted",
        EventKind::Answered { .. } => "answered",
        EventKind::Acknowledged => "acknowledged",
        EventKind::Jumped { .. } => "jumped",
        EventKind::Returned { .. } => "returned",
        EventKind::FindingRecorded { .. } => "finding_recorded",
        EventKind::Finished { .. } => "finished",
    }
}

/// Appends events as JSON lines.
pub fn append_events(path: &Path, events: &[SessionEvent]) -> std::io::Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    let mut buf = String::new();
    for e in events {
        buf.push_str(&serde_json::to_string(e).map_err(std::io::Error::other)?);
        buf.push('\n');
    }
    f.write_all(buf.as_bytes())?;
    f.sync_data()
}

pub fn read_events(path: &Path) -> std::io::Result<Vec<SessionEvent>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let e = serde_json::from_str(&line).map_err(|err| {
            std::io::Error::new(std::io::ErrorKind::InvalidData, format!("line {}: {err}", i + 1))
        })?;
        out.push(e);
    }
    Ok(out)
}
