//! The `.itkb` knowledge-base text format.
//!
//! ```text
//! kb "demo" version "1"
//! failure_mode leak area Vacuum name "Leak" impact High time High disturbance High
//! tree main title "Main" {
//!   start -> check
//!   action check "Check pressure" -> ok
//!   decision ok "Pressure fine?" {
//!     "Yes" -> done
//!     "No" -> leak
//!   }
//!   finding leak "Leakage" mode leak
//!   finish done
//! }
//! ```
//!
//! Strings accept the escapes `\"`, `\\` and `\n`; `#` starts a line
//! comment. [`serialize`] emits a canonical form that [`parse`] reads back
//! to an equal [`KnowledgeBase`](crate::KnowledgeBase).

mod dot;
mod lexer;
mod parser;
mod writer;

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::model::KnowledgeBase;

pub use dot::{export_flowchart, DotOptions};
pub use parser::{parse, parse_draft, Draft};
pub use writer::serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// 1-based line/column position in source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseDiagnostic {
    pub severity: Severity,
    pub line: usize,
    pub column: usize,
    pub message: String,
    /// The source line holding the offending token.
    pub snippet: String,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}: {}", self.line, self.column, self.severity, self.message)?;
        if !self.snippet.is_empty() {
            write!(f, "\n    {}", self.snippet.trim_end())?;
        }
        Ok(())
    }
}

/// Where each parsed node header starts, keyed by (tree id, node id).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SourceSpans {
    nodes: HashMap<(String, String), Position>,
}

impl SourceSpans {
    pub fn node(&self, tree: &str, node: &str) -> Option<Position> {
        self.nodes.get(&(tree.to_string(), node.to_string())).copied()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub(crate) fn insert(&mut self, tree: &str, node: &str, pos: Position) {
        self.nodes.insert((tree.to_string(), node.to_string()), pos);
    }
}

/// Successful parse: a validated KB plus node provenance.
#[derive(Debug, Clone)]
pub struct ParsedKb {
    pub kb: KnowledgeBase,
    pub spans: SourceSpans,
}
