//! The `itriage` command line.

use std::io::{self, BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use itriage_core::dsl::{export_flowchart, serialize, DotOptions, ParseDiagnostic, Severity, SourceSpans};
use itriage_core::fmea::{self, describe_severity, intervention_text, Dimension, FaultRecord, RecordStore, FAULTLOG_FILE};
use itriage_core::lint::{has_errors, lint, LintDiagnostic};
use itriage_core::potential::{sample_grid, AxisPair, PotentialParams};
use itriage_core::session::{append_events, read_events, replay, Input, Session, SessionError, SystemClock, LOG_EXTENSION};
use itriage_core::{KbError, KnowledgeBase, NodeKind};

use crate::kbload::{self, KbSource};
use crate::service::{self, parse_triple, AppState};

#[derive(Debug, Parser)]
#[command(name = "itriage", version, about = "Guided troubleshooting for trapped-ion apparatus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Walk a troubleshooting tree in the terminal.
    Run(RunArgs),
    /// Check a knowledge base; exits 1 when errors are found.
    Lint {
        /// Defaults to $ITRIAGE_KB, then the bundled KB.
        file: Option<PathBuf>,
    },
    /// Print one tree as a Graphviz digraph.
    ExportDot {
        file: PathBuf,
        tree: String,
        #[arg(long, default_value = "TB")]
        rankdir: String,
        #[arg(long)]
        no_tooltips: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Failure-mode table with occurrence statistics from a fault log.
    FmeaReport {
        kb: PathBuf,
        faultlog: PathBuf,
        #[arg(long)]
        csv: bool,
    },
    /// Rebuild a session from its event log and print where it stands.
    Replay { kb: PathBuf, eventlog: PathBuf },
    /// Sample the trap potential on a plane and print CSV.
    PotentialGrid(GridArgs),
    /// Print the resolved knowledge base in canonical form.
    DumpKb {
        #[arg(long)]
        kb: Option<PathBuf>,
    },
    /// Start the HTTP service.
    Serve {
        #[arg(long)]
        kb: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        /// Session logs and the fault log live here.
        #[arg(long, default_value = "itriage-data")]
        data_dir: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub kb: Option<PathBuf>,
    #[arg(long, default_value = "main")]
    pub tree: String,
    /// One decision answer per line; other prompts are acknowledged.
    #[arg(long)]
    pub answers: Option<PathBuf>,
    /// Write the session event log here.
    #[arg(long)]
    pub log_dir: Option<PathBuf>,
    #[arg(long, default_value = FAULTLOG_FILE)]
    pub faultlog: PathBuf,
    #[arg(long)]
    pub no_faultlog: bool,
    #[arg(long, default_value = "")]
    pub notes: String,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub u_dc: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub u_rf: f64,
    #[arg(long)]
    pub omega_rf: f64,
    /// DC coefficients a,b,c
    #[arg(long, allow_hyphen_values = true)]
    pub dc: String,
    /// RF coefficients a',b',c'
    #[arg(long, allow_hyphen_values = true)]
    pub rf: String,
    #[arg(long, default_value = "xy")]
    pub axes: String,
    #[arg(long, allow_hyphen_values = true)]
    pub u_min: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub u_max: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub v_min: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub v_max: f64,
    #[arg(long, default_value_t = 51)]
    pub nu: usize,
    #[arg(long, default_value_t = 51)]
    pub nv: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t: f64,
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn load(source: &KbSource) -> Result<KnowledgeBase, String> {
    kbload::load(source).map_err(|e| e.to_string())
}

pub fn execute(cli: Cli) -> Result<ExitCode, String> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Run(args) => {
            let kb = Arc::new(load(&kbload::resolve_from_env(args.kb.as_deref()))?);
            let source = match &args.answers {
                Some(p) => AnswerSource::from_file(p)?,
                None => AnswerSource::Interactive(Box::new(io::stdin().lock())),
            };
            run(kb, &args, source, &mut out)
        }
        Command::Lint { file } => {
            let draft = kbload::load_draft(&kbload::resolve_from_env(file.as_deref())).map_err(|e| e.to_string())?;
            let diags = lint(&draft.kb);
            let extra: Vec<_> = draft.problems.iter().filter(|(e, _)| !lint_covers(e)).map(|(_, d)| d).collect();
            write_lint(&diags, &draft.spans, &extra, &mut out).map_err(|e| e.to_string())?;
            Ok(if has_errors(&diags) || !extra.is_empty() { ExitCode::from(1) } else { ExitCode::SUCCESS })
        }
        Command::ExportDot { file, tree, rankdir, no_tooltips, output } => {
            let kb = kbload::load_file(&file).map_err(|e| e.to_string())?;
            let t = kb.tree(&tree).ok_or_else(|| format!("no tree `{tree}` in {}", file.display()))?;
            let dot = export_flowchart(t, &DotOptions { rankdir, tooltips: !no_tooltips });
            match output {
                Some(p) => std::fs::write(&p, dot).map_err(|e| format!("{}: {e}", p.display()))?,
                None => out.write_all(dot.as_bytes()).map_err(|e| e.to_string())?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::FmeaReport { kb, faultlog, csv } => {
            let kb = kbload::load_file(&kb).map_err(|e| e.to_string())?;
            let store = RecordStore::open(&faultlog).map_err(|e| e.to_string())?;
            let rows = fmea::report(&kb, &store);
            let text = if csv { fmea::render_csv(&rows) } else { fmea::render_text(&rows) };
            out.write_all(text.as_bytes()).map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Replay { kb, eventlog } => {
            let kb = Arc::new(kbload::load_file(&kb).map_err(|e| e.to_string())?);
            let events = read_events(&eventlog).map_err(|e| format!("{}: {e}", eventlog.display()))?;
            let s = replay(kb, &events).map_err(|e| format!("{}: {e}", eventlog.display()))?;
            write_summary(&s, &mut out).map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::PotentialGrid(g) => {
            let p = PotentialParams { u_dc: g.u_dc, u_rf: g.u_rf, omega_rf: g.omega_rf, dc: parse_triple(&g.dc)?, rf: parse_triple(&g.rf)? };
            let axes: AxisPair = g.axes.parse().map_err(|e: itriage_core::potential::PotentialError| e.to_string())?;
            let grid = sample_grid(&p, axes, [(g.u_min, g.u_max), (g.v_min, g.v_max)], [g.nu, g.nv], g.t)
                .map_err(|e| e.to_string())?;
            out.write_all(grid.to_csv().as_bytes()).map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::DumpKb { kb } => {
            let kb = load(&kbload::resolve_from_env(kb.as_deref()))?;
            out.write_all(serialize(&kb).as_bytes()).map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve { kb, bind, data_dir } => {
            let source = kbload::resolve_from_env(kb.as_deref());
            let kb = load(&source)?;
            let diags = lint(&kb);
            for d in &diags {
                eprintln!("{d}");
            }
            if has_errors(&diags) {
                return Err(format!("{source} has lint errors"));
            }
            let state = AppState::new(kb, Arc::new(SystemClock), Some(data_dir)).map_err(|e| e.to_string())?;
            eprintln!("knowledge base {source}, {} session(s) recovered", state.session_count());
            let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
            rt.block_on(service::serve(Arc::new(state), bind)).map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Validation failures the lint rules already report.
fn lint_covers(e: &KbError) -> bool {
    matches!(
        e,
        KbError::UnresolvedEdgeTarget { .. }
            | KbError::MissingJumpTarget { .. }
            | KbError::UnresolvedJumpTarget { .. }
            | KbError::UnresolvedResumeNode { .. }
            | KbError::DuplicateBranchLabel { .. }
            | KbError::UnresolvedFailureMode { .. }
    )
}

pub fn write_lint(
    diags: &[LintDiagnostic],
    spans: &SourceSpans,
    extra: &[&ParseDiagnostic],
    out: &mut impl Write,
) -> io::Result<()> {
    for d in diags {
        match d.node.as_deref().and_then(|n| spans.node(&d.tree, n)) {
            Some(pos) => writeln!(out, "{d} (line {})", pos.line)?,
            None => writeln!(out, "{d}")?,
        }
    }
    for d in extra {
        writeln!(out, "{d}")?;
    }
    let errors = diags.iter().filter(|d| d.severity == Severity::Error).count() + extra.len();
    writeln!(out, "{errors} error(s), {} warning(s)", diags.len() + extra.len() - errors)
}

fn write_summary(s: &Session, out: &mut impl Write) -> io::Result<()> {
    let (tree, node) = s.cursor();
    writeln!(out, "session {}", s.id())?;
    writeln!(out, "status: {}", s.status())?;
    writeln!(out, "cursor: {tree}.{node}")?;
    writeln!(out, "stack depth: {}", s.stack().len())?;
    writeln!(out, "events: {}", s.events().len())?;
    for text in s.visited_texts() {
        writeln!(out, "  > {}", text.replace('\n', " "))?;
    }
    Ok(())
}

pub enum AnswerSource {
    /// Decision answers in order; other prompts are acknowledged.
    Scripted(std::vec::IntoIter<String>),
    Interactive(Box<dyn BufRead>),
}

impl AnswerSource {
    /// Blank lines and `#` comments are skipped.
    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(Self::scripted(&text))
    }

    pub fn scripted(text: &str) -> Self {
        let answers: Vec<String> =
            text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(String::from).collect();
        AnswerSource::Scripted(answers.into_iter())
    }
}

enum Step {
    Give(Input),
    Abort(String),
}

fn next_input(source: &mut AnswerSource, kind: NodeKind, answers: &[String], out: &mut impl Write) -> io::Result<Step> {
    match source {
        AnswerSource::Scripted(it) => {
            if kind != NodeKind::Decision {
                return Ok(Step::Give(Input::Acknowledge));
            }
            Ok(match it.next() {
                Some(a) => {
                    writeln!(out, "> {a}")?;
                    Step::Give(Input::Answer(a))
                }
                None => Step::Abort("answers file ran out".into()),
            })
        }
        AnswerSource::Interactive(input) => loop {
            if kind == NodeKind::Decision {
                let opts: Vec<String> = answers.iter().enumerate().map(|(i, a)| format!("[{}] {a}", i + 1)).collect();
                write!(out, "  {}  (or `abort`) > ", opts.join("  "))?;
            } else {
                write!(out, "  (Enter to continue, `abort` to stop) > ")?;
            }
            out.flush()?;
            let mut line = String::new();
            if input.read_line(&mut line)? == 0 {
                return Ok(Step::Abort("end of input".into()));
            }
            let line = line.trim();
            if line.eq_ignore_ascii_case("abort") {
                return Ok(Step::Abort("aborted by user".into()));
            }
            if kind != NodeKind::Decision {
                return Ok(Step::Give(Input::Acknowledge));
            }
            let picked = match line.parse::<usize>() {
                Ok(i) if (1..=answers.len()).contains(&i) => Some(answers[i - 1].clone()),
                _ => answers.iter().find(|a| a.eq_ignore_ascii_case(line)).cloned(),
            };
            match picked {
                Some(a) => return Ok(Step::Give(Input::Answer(a))),
                None => writeln!(out, "  not an answer here: {line}")?,
            }
        },
    }
}

/// Drives one session to completion, then writes the event log and the
/// fault record.
pub fn run(kb: Arc<KnowledgeBase>, args: &RunArgs, mut source: AnswerSource, out: &mut impl Write) -> Result<ExitCode, String> {
    let io_err = |e: io::Error| e.to_string();
    let mut s = Session::start(kb.clone(), &args.tree, Arc::new(SystemClock)).map_err(|e| e.to_string())?;
    let mut code = ExitCode::SUCCESS;
    while s.status().is_active() {
        let p = s.current_prompt().map_err(|e| e.to_string())?;
        writeln!(out, "[{}] {}", p.kind, p.text).map_err(io_err)?;
        if let Some(note) = &p.context_note {
            writeln!(out, "  note: {}", note.replace('\n', "\n        ")).map_err(io_err)?;
        }
        let result = match next_input(&mut source, p.kind, &p.answers, out).map_err(io_err)? {
            Step::Give(input) => s.advance(input),
            Step::Abort(why) => {
                writeln!(out, "aborting: {why}").map_err(io_err)?;
                if matches!(source, AnswerSource::Scripted(_)) {
                    code = ExitCode::from(1);
                }
                s.abort()
            }
        };
        match result {
            Ok(()) => {}
            Err(e @ SessionError::DeadEnd { .. }) => {
                writeln!(out, "{e}").map_err(io_err)?;
                s.abort().map_err(|e| e.to_string())?;
            }
            Err(e @ SessionError::InvalidAnswer { .. }) => {
                writeln!(out, "{e}").map_err(io_err)?;
                s.abort().map_err(|e| e.to_string())?;
                code = ExitCode::from(1);
            }
            Err(e @ SessionError::MaxStepsExceeded(_)) => writeln!(out, "{e}").map_err(io_err)?,
            Err(e) => return Err(e.to_string()),
        }
    }
    writeln!(out, "status: {}", s.status()).map_err(io_err)?;
    write_finding(&s, out).map_err(io_err)?;

    if let Some(dir) = &args.log_dir {
        std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        let path = dir.join(format!("{}.{LOG_EXTENSION}", s.id()));
        append_events(&path, s.events()).map_err(|e| format!("{}: {e}", path.display()))?;
        writeln!(out, "event log: {}", path.display()).map_err(io_err)?;
    }
    if !args.no_faultlog {
        if let Some(rec) = FaultRecord::from_session(&s, args.notes.clone()) {
            let mut store = RecordStore::open(&args.faultlog).map_err(|e| e.to_string())?;
            store.ingest(&kb, rec).map_err(|e| e.to_string())?;
            writeln!(out, "fault record appended to {}", args.faultlog.display()).map_err(io_err)?;
        }
    }
    Ok(code)
}

fn write_finding(s: &Session, out: &mut impl Write) -> io::Result<()> {
    let found = s.events().iter().rev().find_map(|e| match &e.kind {
        itriage_core::session::EventKind::FindingRecorded { tree, node, mode } => Some((tree, node, mode)),
        _ => None,
    });
    let Some((tree, node, mode)) = found else { return Ok(()) };
    let kb = s.kb();
    let text = kb.node(tree, node).map(|n| n.text.as_str()).unwrap_or(node);
    writeln!(out, "finding: {text}")?;
    let Some(m) = mode.as_deref().and_then(|m| kb.failure_mode(m)) else {
        return writeln!(out, "failure mode: (not in catalog)");
    };
    writeln!(out, "failure mode: {} [{}]", m.name, m.area)?;
    for d in Dimension::ALL {
        let sev = describe_severity(d, d.of(&m.cost));
        writeln!(out, "  {}: {} ({})", d.label(), sev.level, sev.effect_text)?;
    }
    writeln!(out, "intervention: {}", intervention_text(m.cost.worst()))
}
