//! Severity scoring, branch ranking, fault records and risk priority.

use std::collections::{HashSet, VecDeque};
use std::fmt::{self, Write as _};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Area, CostVector, KnowledgeBase, NodeKind, SeverityLevel};
use crate::session::{EventKind, Session, SessionStatus};

/// Mode id recorded when a session ends without a linked finding.
pub const UNRESOLVED: &str = "unresolved";
pub const FAULTLOG_FILE: &str = "faultlog.itrec";

/// Below this many resolved records every mode sits in occurrence bucket 1.
pub const MIN_RESOLVED_FOR_BANDING: usize = 10;

pub fn ordinal(level: SeverityLevel) -> u32 {
    match level {
        SeverityLevel::Low => 1,
        SeverityLevel::Medium => 2,
        SeverityLevel::High => 3,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    TimeCost,
    OperationalImpact,
    DisturbanceRisk,
}

impl Dimension {
    pub const ALL: [Dimension; 3] = [Dimension::TimeCost, Dimension::OperationalImpact, Dimension::DisturbanceRisk];

    /// Row heading used in the severity effect table.
    pub fn label(self) -> &'static str {
        match self {
            Dimension::TimeCost => "Time Cost",
            Dimension::OperationalImpact => "Operational Impact",
            Dimension::DisturbanceRisk => "Misalignment Risk",
        }
    }

    pub fn of(self, cost: &CostVector) -> SeverityLevel {
        match self {
            Dimension::TimeCost => cost.time_cost,
            Dimension::OperationalImpact => cost.operational_impact,
            Dimension::DisturbanceRisk => cost.disturbance_risk,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SeverityDescriptor {
    pub dimension: Dimension,
    pub level: SeverityLevel,
    pub effect_text: &'static str,
    pub definition_text: &'static str,
    pub intervention_text: &'static str,
}

pub fn effect_text(dimension: Dimension, level: SeverityLevel) -> &'static str {
    use SeverityLevel::*;
    match (dimension, level) {
        (Dimension::TimeCost, Low) => "Hours",
        (Dimension::TimeCost, Medium) => "Days",
        (Dimension::TimeCost, High) => "Weeks",
        (Dimension::OperationalImpact, Low) => "Motion is introduced",
        (Dimension::OperationalImpact, Medium) => "Trapped for few minutes",
        (Dimension::OperationalImpact, High) => "Ion loss",
        (Dimension::DisturbanceRisk, Low) => "Unlikely to happen",
        (Dimension::DisturbanceRisk, Medium) => "Could happen",
        (Dimension::DisturbanceRisk, High) => "Mostlikely will happen",
    }
}

pub fn definition_text(level: SeverityLevel) -> &'static str {
    match level {
        SeverityLevel::Low => "Minor performance loss or cosmetic fault",
        SeverityLevel::Medium => "Degrades fidelity or reliability of trapping",
        SeverityLevel::High => "Prevents trapping or damages hardware",
    }
}

pub fn intervention_text(level: SeverityLevel) -> &'static str {
    match level {
        SeverityLevel::Low => "Simple recalibration or adjustment",
        SeverityLevel::Medium => "Re-alignment or moderate component replacement",
        SeverityLevel::High => "Extensive intervention (e.g. disassembly, replacing hardware)",
    }
}

pub fn describe_severity(dimension: Dimension, level: SeverityLevel) -> SeverityDescriptor {
    SeverityDescriptor {
        dimension,
        level,
        effect_text: effect_text(dimension, level),
        definition_text: definition_text(level),
        intervention_text: intervention_text(level),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FmeaError {
    #[error("weight for {0} is negative")]
    NegativeWeight(&'static str),
    #[error("weight for {0} is not finite")]
    NonFiniteWeight(&'static str),
    #[error("unknown tree `{0}`")]
    UnknownTree(String),
    #[error("unknown node `{tree}.{node}`")]
    UnknownNode { tree: String, node: String },
    #[error("`{tree}.{node}` is not a decision")]
    NotADecision { tree: String, node: String },
    #[error("unknown failure mode `{0}`")]
    UnknownMode(String),
    #[error("fault log: {0}")]
    Io(String),
}

/// Non-negative rational weights for (impact, time, disturbance).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Weights {
    impact: BigRational,
    time: BigRational,
    disturbance: BigRational,
}

impl Default for Weights {
    fn default() -> Self {
        let one = BigRational::from_integer(BigInt::from(1));
        Self { impact: one.clone(), time: one.clone(), disturbance: one }
    }
}

impl Weights {
    pub fn new(impact: BigRational, time: BigRational, disturbance: BigRational) -> Result<Self, FmeaError> {
        for (name, w) in [("impact", &impact), ("time", &time), ("disturbance", &disturbance)] {
            if w.is_negative() {
                return Err(FmeaError::NegativeWeight(name));
            }
        }
        Ok(Self { impact, time, disturbance })
    }

    pub fn from_integers(impact: i64, time: i64, disturbance: i64) -> Result<Self, FmeaError> {
        let r = |v: i64| BigRational::from_integer(BigInt::from(v));
        Self::new(r(impact), r(time), r(disturbance))
    }

    /// Exact conversion of finite floats.
    pub fn from_f64(impact: f64, time: f64, disturbance: f64) -> Result<Self, FmeaError> {
        let r = |name, v: f64| BigRational::from_float(v).ok_or(FmeaError::NonFiniteWeight(name));
        Self::new(r("impact", impact)?, r("time", time)?, r("disturbance", disturbance)?)
    }

    pub fn scaled(&self, factor: &BigRational) -> Result<Self, FmeaError> {
        Self::new(&self.impact * factor, &self.time * factor, &self.disturbance * factor)
    }

    pub fn components(&self) -> [&BigRational; 3] {
        [&self.impact, &self.time, &self.disturbance]
    }
}

pub fn weighted_cost(cost: &CostVector, w: &Weights) -> BigRational {
    let term = |weight: &BigRational, level| weight * BigInt::from(ordinal(level));
    term(&w.impact, cost.operational_impact) + term(&w.time, cost.time_cost) + term(&w.disturbance, cost.disturbance_risk)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedBranch {
    pub label: String,
    pub target: String,
    /// Highest weighted cost among linked findings behind the branch.
    pub score: Option<BigRational>,
}

impl RankedBranch {
    pub fn score_f64(&self) -> Option<f64> {
        self.score.as_ref().and_then(|s| s.to_f64())
    }
}

/// Orders the branches of a decision by the cost of the findings they lead
/// to, cheapest first. Nested decisions are followed; jumps are not.
/// Branches without a linked finding go last; ties keep declaration order.
pub fn rank_branches(kb: &KnowledgeBase, tree: &str, node: &str, weights: &Weights) -> Result<Vec<RankedBranch>, FmeaError> {
    let t = kb.tree(tree).ok_or_else(|| FmeaError::UnknownTree(tree.to_string()))?;
    let n = t.node(node).ok_or_else(|| FmeaError::UnknownNode { tree: tree.into(), node: node.into() })?;
    if n.kind != NodeKind::Decision {
        return Err(FmeaError::NotADecision { tree: tree.into(), node: node.into() });
    }
    let mut ranked: Vec<RankedBranch> = n
        .edges
        .iter()
        .map(|e| {
            let score = linked_modes(kb, tree, node, &e.target)
                .into_iter()
                .map(|cost| weighted_cost(&cost, weights))
                .max();
            RankedBranch { label: e.label.clone().unwrap_or_default(), target: e.target.clone(), score }
        })
        .collect();
    ranked.sort_by(|a, b| match (&a.score, &b.score) {
        (Some(x), Some(y)) => x.cmp(y),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    Ok(ranked)
}

fn linked_modes(kb: &KnowledgeBase, tree: &str, origin: &str, from: &str) -> Vec<CostVector> {
    let Some(t) = kb.tree(tree) else { return Vec::new() };
    let mut seen: HashSet<&str> = HashSet::from([origin]);
    let mut queue = VecDeque::from([from]);
    let mut out = Vec::new();
    while let Some(id) = queue.pop_front() {
        if !seen.insert(id) {
            continue;
        }
        let Some(n) = t.node(id) else { continue };
        if n.kind == NodeKind::Finding {
            if let Some(m) = n.failure_mode.as_deref().and_then(|m| kb.failure_mode(m)) {
                out.push(m.cost);
            }
        }
        queue.extend(n.edges.iter().map(|e| e.target.as_str()));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultRecord {
    pub session: String,
    pub ts: DateTime<Utc>,
    pub mode: String,
    pub area: Option<Area>,
    pub duration_s: f64,
    #[serde(default)]
    pub notes: String,
}

impl FaultRecord {
    /// Record for a session that ended in a finding or was aborted.
    /// Sessions still running or finished without a fault yield `None`.
    pub fn from_session(session: &Session, notes: impl Into<String>) -> Option<FaultRecord> {
        let events = session.events();
        let (first, last) = (events.first()?, events.last()?);
        let mode = match session.status() {
            SessionStatus::FinishedFinding => events
                .iter()
                .rev()
                .find_map(|e| match &e.kind {
                    EventKind::FindingRecorded { mode, .. } => Some(mode.clone()),
                    _ => None,
                })
                .flatten()
                .unwrap_or_else(|| UNRESOLVED.to_string()),
            SessionStatus::Aborted => UNRESOLVED.to_string(),
            SessionStatus::Active | SessionStatus::FinishedOk => return None,
        };
        let area = session.kb().failure_mode(&mode).map(|m| m.area);
        let duration_s = (last.ts - first.ts).num_milliseconds() as f64 / 1000.0;
        Some(FaultRecord { session: session.id().to_string(), ts: last.ts, mode, area, duration_s, notes: notes.into() })
    }

    pub fn is_resolved(&self) -> bool {
        self.mode != UNRESOLVED
    }
}

/// Append-only collection of fault records, optionally mirrored to a
/// JSON-lines file.
#[derive(Debug, Default)]
pub struct RecordStore {
    records: Vec<FaultRecord>,
    path: Option<PathBuf>,
}

impl RecordStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads `path` if it exists; later ingests append to it.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, FmeaError> {
        let path = path.into();
        let mut records = Vec::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path).map_err(|e| FmeaError::Io(e.to_string()))?);
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(|e| FmeaError::Io(e.to_string()))?;
                if line.trim().is_empty() {
                    continue;
                }
                let r = serde_json::from_str(&line).map_err(|e| FmeaError::Io(format!("line {}: {e}", i + 1)))?;
                records.push(r);
            }
        }
        Ok(Self { records, path: Some(path) })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn records(&self) -> &[FaultRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Adds `record` unless one with the same session and timestamp is
    /// already stored. Returns whether the store grew. The area is filled
    /// in from the catalog.
    pub fn ingest(&mut self, kb: &KnowledgeBase, mut record: FaultRecord) -> Result<bool, FmeaError> {
        if record.is_resolved() {
            let mode = kb.failure_mode(&record.mode).ok_or_else(|| FmeaError::UnknownMode(record.mode.clone()))?;
            record.area = Some(mode.area);
        }
        if self.records.iter().any(|r| r.session == record.session && r.ts == record.ts) {
            return Ok(false);
        }
        if let Some(path) = &self.path {
            let line = serde_json::to_string(&record).map_err(|e| FmeaError::Io(e.to_string()))?;
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| FmeaError::Io(e.to_string()))?;
            writeln!(f, "{line}").map_err(|e| FmeaError::Io(e.to_string()))?;
        }
        self.records.push(record);
        Ok(true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Occurrence {
    pub count: usize,
    pub fraction: f64,
    pub bucket: u32,
}

pub fn occurrence(store: &RecordStore, mode: &str) -> Occurrence {
    let resolved = store.records().iter().filter(|r| r.is_resolved()).count();
    let count = store.records().iter().filter(|r| r.mode == mode).count();
    let fraction = if resolved == 0 { 0.0 } else { count as f64 / resolved as f64 };
    let bucket = if resolved < MIN_RESOLVED_FOR_BANDING || fraction < 0.05 {
        1
    } else if fraction <= 0.25 {
        2
    } else {
        3
    };
    Occurrence { count, fraction, bucket }
}

/// impact × occurrence bucket × disturbance, each on the 1..=3 scale.
pub fn risk_priority(kb: &KnowledgeBase, store: &RecordStore, mode: &str) -> Result<u32, FmeaError> {
    let m = kb.failure_mode(mode).ok_or_else(|| FmeaError::UnknownMode(mode.to_string()))?;
    Ok(rpn(&m.cost, occurrence(store, mode).bucket))
}

pub fn rpn(cost: &CostVector, bucket: u32) -> u32 {
    ordinal(cost.operational_impact) * bucket * ordinal(cost.disturbance_risk)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub area: Area,
    pub mode: String,
    pub name: String,
    pub impact: SeverityLevel,
    pub time: SeverityLevel,
    pub disturbance: SeverityLevel,
    pub count: usize,
    pub fraction: f64,
    pub bucket: u32,
    pub rpn: u32,
}

/// One row per catalog entry, grouped by area in catalog order.
pub fn report(kb: &KnowledgeBase, store: &RecordStore) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    for area in Area::ALL {
        for m in kb.catalog().iter().filter(|m| m.area == area) {
            let occ = occurrence(store, &m.id);
            rows.push(ReportRow {
                area,
                mode: m.id.clone(),
                name: m.name.clone(),
                impact: m.cost.operational_impact,
                time: m.cost.time_cost,
                disturbance: m.cost.disturbance_risk,
                count: occ.count,
                fraction: occ.fraction,
                bucket: occ.bucket,
                rpn: rpn(&m.cost, occ.bucket),
            });
        }
    }
    rows
}

const HEADER: [&str; 9] = ["area", "failure mode", "impact", "time", "disturbance", "count", "fraction", "bucket", "rpn"];

fn cells(r: &ReportRow) -> [String; 9] {
    [
        r.area.to_string(),
        r.name.clone(),
        r.impact.to_string(),
        r.time.to_string(),
        r.disturbance.to_string(),
        r.count.to_string(),
        format!("{:.3}", r.fraction),
        r.bucket.to_string(),
        r.rpn.to_string(),
    ]
}

pub fn render_text(rows: &[ReportRow]) -> String {
    let body: Vec<[String; 9]> = rows.iter().map(cells).collect();
    let mut widths = HEADER.map(str::len);
    for row in &body {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cols: &[&str]| {
        let parts: Vec<String> = cols.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
        writeln!(out, "{}", parts.join("  ").trim_end()).unwrap();
    };
    line(&HEADER);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    line(&rule.iter().map(String::as_str).collect::<Vec<_>>());
    for row in &body {
        line(&row.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}

pub fn render_csv(rows: &[ReportRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["area", "mode", "name", "impact", "time", "disturbance", "count", "fraction", "bucket", "rpn"])
        .unwrap();
    for r in rows {
        let c = cells(r);
        w.write_record([&c[0], &r.mode, &c[1], &c[2], &c[3], &c[4], &c[5], &c[6], &c[7], &c[8]]).unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

impl fmt::Display for Occurrence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({:.3}, bucket {})", self.count, self.fraction, self.bucket)
    }
}
