//! Locating and loading the knowledge base.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use itriage_core::dsl::{parse, parse_draft, Draft, ParseDiagnostic};
use itriage_core::model::DEFAULT_KB_SOURCE;
use itriage_core::{default_knowledge_base, KnowledgeBase};
use thiserror::Error;

pub const KB_ENV: &str = "ITRIAGE_KB";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KbSource {
    Path(PathBuf),
    Bundled,
}

impl fmt::Display for KbSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KbSource::Path(p) => write!(f, "{}", p.display()),
            KbSource::Bundled => f.write_str("<bundled>"),
        }
    }
}

/// `--kb` wins over the environment, which wins over the bundled KB.
pub fn resolve(flag: Option<&Path>, env: Option<OsString>) -> KbSource {
    match (flag, env) {
        (Some(p), _) => KbSource::Path(p.to_path_buf()),
        (None, Some(e)) if !e.is_empty() => KbSource::Path(PathBuf::from(e)),
        _ => KbSource::Bundled,
    }
}

pub fn resolve_from_env(flag: Option<&Path>) -> KbSource {
    resolve(flag, std::env::var_os(KB_ENV))
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {}", render(.diagnostics))]
    Parse { path: PathBuf, diagnostics: Vec<ParseDiagnostic> },
}

fn render(diags: &[ParseDiagnostic]) -> String {
    let lines: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
    format!("{} problem(s)\n{}", diags.len(), lines.join("\n"))
}

pub fn load(source: &KbSource) -> Result<KnowledgeBase, LoadError> {
    match source {
        KbSource::Path(p) => load_file(p),
        KbSource::Bundled => Ok(default_knowledge_base()),
    }
}

pub fn load_file(path: &Path) -> Result<KnowledgeBase, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.into(), source })?;
    parse(&text)
        .map(|p| p.kb)
        .map_err(|diagnostics| LoadError::Parse { path: path.into(), diagnostics })
}

/// Loads without validating references, for the linter.
pub fn load_draft(source: &KbSource) -> Result<Draft, LoadError> {
    let (path, text) = match source {
        KbSource::Path(p) => {
            (p.clone(), std::fs::read_to_string(p).map_err(|source| LoadError::Io { path: p.clone(), source })?)
        }
        KbSource::Bundled => (PathBuf::from("<bundled>"), DEFAULT_KB_SOURCE.to_string()),
    };
    parse_draft(&text).map_err(|diagnostics| LoadError::Parse { path, diagnostics })
}
