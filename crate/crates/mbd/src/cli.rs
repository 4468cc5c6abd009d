//! The `mbd` command line.
//!
//! Exit codes: 0 on success, 1 on a domain failure (invalid model,
//! inconsistent evidence, no probe to advise), 2 on usage or IO errors.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mbd_core::propagation::{forward_predict_with, PredictOptions};
use mbd_core::simulator::{inject, run_session, Family, FaultError, SessionError};
use mbd_core::validate::validate;
use mbd_core::{assess, Observation, PropagationError, Status, SystemModel, TimedComponent, Value, ValueDomain};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::document::{parse_faults, parse_observations, DocumentError, FaultDocError, ModelDocument};
use crate::options::{config, ModeOpt, RuleOpt, StrategyOpt};
use crate::report::{prediction_rows, FocusReport, ProbeReport, TranscriptDoc, ValidationDoc};
use crate::service::{serve, AppState};
use crate::sweep::{summarize, sweep, write_csv, SweepConfig};

#[derive(Debug, Parser)]
#[command(name = "mbd", version, about = "Model-based diagnosis by forward causal propagation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a model document and list its loops.
    Validate {
        #[arg(long)]
        model: PathBuf,
    },
    /// Predict every output with its dependency sets.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        observations: Option<PathBuf>,
    },
    /// Focus on likely-broken components given measurements.
    Diagnose {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        observations: PathBuf,
        #[command(flatten)]
        diagnosis: DiagnosisArgs,
    },
    /// Recommend the next measurement.
    ProbeAdvise {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        observations: PathBuf,
        #[command(flatten)]
        diagnosis: DiagnosisArgs,
    },
    /// Run a closed-loop session against injected faults, or a seeded sweep
    /// over generated circuits.
    Simulate(SimulateArgs),
    /// Start the HTTP session service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Model to preload; its id is printed on standard error.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Directory for per-session journals; existing journals are replayed.
        #[arg(long)]
        journal: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, Args)]
pub struct DiagnosisArgs {
    #[arg(long, value_enum, default_value_t = RuleOpt::R2)]
    pub rule: RuleOpt,
    #[arg(long, value_enum, default_value_t = ModeOpt::Nonint)]
    pub mode: ModeOpt,
    #[arg(long, value_enum, default_value_t = StrategyOpt::Entropy)]
    pub strategy: StrategyOpt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyOpt {
    Chain,
    Tree,
    Dag,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, required_unless_present = "family", conflicts_with = "family")]
    pub model: Option<PathBuf>,
    #[arg(long, requires = "model")]
    pub faults: Option<PathBuf>,
    /// Source values; other entries are ignored and sources not listed are
    /// drawn from `--seed`.
    #[arg(long, requires = "model")]
    pub observations: Option<PathBuf>,
    #[arg(long, requires = "model")]
    pub allow_source_faults: bool,
    #[arg(long, value_enum)]
    pub family: Option<FamilyOpt>,
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    /// Faults injected per generated run.
    #[arg(long, default_value_t = 1)]
    pub fault_count: usize,
    #[command(flatten)]
    pub diagnosis: DiagnosisArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Transcript (single session) or CSV (sweep) destination; standard out if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Document { path: PathBuf, source: DocumentError },
    #[error("{path}: {source}")]
    Faults { path: PathBuf, source: FaultDocError },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error(transparent)]
    Fault(#[from] FaultError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("{0}")]
    Domain(String),
    #[error("writing output: {0}")]
    Output(io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Output(_) | CliError::Csv(_) => 2,
            CliError::Document { source: DocumentError::Json(_), .. } => 2,
            CliError::Faults { source: FaultDocError::Json(_), .. } => 2,
            _ => 1,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn load_document(path: &Path) -> Result<ModelDocument, CliError> {
    ModelDocument::parse(&read(path)?).map_err(|source| CliError::Document { path: path.to_path_buf(), source })
}

fn load_model(path: &Path) -> Result<SystemModel, CliError> {
    let model = load_document(path)?
        .to_model()
        .map_err(|source| CliError::Document { path: path.to_path_buf(), source })?;
    let report = validate(&model);
    if !report.is_valid() {
        let msgs: Vec<String> = report.violations.iter().map(ToString::to_string).collect();
        return Err(CliError::InvalidModel(msgs.join("; ")));
    }
    Ok(model)
}

fn load_observations(path: &Path) -> Result<Vec<Observation>, CliError> {
    parse_observations(&read(path)?).map_err(|source| CliError::Document { path: path.to_path_buf(), source })
}

fn emit_json<T: serde::Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    writeln!(out, "{text}").map_err(CliError::Output)
}

fn emit_to(path: Option<&Path>, out: &mut dyn Write, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|source| CliError::Io { path: p.to_path_buf(), source }),
        None => out.write_all(bytes).map_err(CliError::Output),
    }
}

/// Values for every source at every step: listed ones first, the rest drawn
/// from `seed`.
fn source_values(model: &SystemModel, listed: &[Observation], seed: u64) -> Vec<Observation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let is_source = |o: &&Observation| model.ix(o.component.as_str()).is_some_and(|c| model.component(c).is_source());
    let mut out: Vec<Observation> = listed.iter().filter(is_source).cloned().collect();
    for c in model.sources() {
        for t in 0..model.time_horizon {
            let id = model.id(c).as_str();
            if listed.iter().any(|o| o.component.as_str() == id && o.time == t) {
                continue;
            }
            let value = match &model.component(c).domain {
                ValueDomain::Boolean => Value::Bool(rng.random_bool(0.5)),
                ValueDomain::Integer => Value::Int(rng.random_range(0..10)),
                ValueDomain::Enum(symbols) => Value::Sym(symbols[rng.random_range(0..symbols.len())].clone()),
                ValueDomain::Real { .. } => Value::Real(rng.random_range(0.0..10.0)),
            };
            out.push(Observation::new(id, t, value));
        }
    }
    out
}

fn simulate(args: &SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let diagnosis = config(args.diagnosis.rule, args.diagnosis.mode, args.diagnosis.strategy);
    if let Some(family) = args.family {
        let family = match family {
            FamilyOpt::Chain => Family::Chain,
            FamilyOpt::Tree => Family::Tree { k: args.k },
            FamilyOpt::Dag => Family::Dag { k: args.k },
        };
        let config =
            SweepConfig { family, n: args.n, faults: args.fault_count, runs: args.runs, first_seed: args.seed, diagnosis };
        let rows = sweep(&config)?;
        let mut csv = Vec::new();
        write_csv(&mut csv, &rows)?;
        emit_to(args.out.as_deref(), out, &csv)?;
        let s = summarize(&rows);
        let _ = writeln!(
            err,
            "{} runs, {} correct, mean probes {:.2}, mean rule time {:.1} us",
            s.runs, s.correct, s.mean_probes, s.mean_rule_micros
        );
        return Ok(());
    }
    let model_path = args.model.as_deref().expect("clap requires --model without --family");
    let model = load_model(model_path)?;
    let faults = match &args.faults {
        Some(p) => parse_faults(&read(p)?).map_err(|source| CliError::Faults { path: p.clone(), source })?,
        None => Vec::new(),
    };
    let listed = match &args.observations {
        Some(p) => load_observations(p)?,
        None => Vec::new(),
    };
    let faulty = inject(&model, &faults, args.allow_source_faults)?;
    let inputs = source_values(&model, &listed, args.seed);
    let sinks: Vec<_> =
        model.sinks().flat_map(|c| (0..model.time_horizon).map(move |t| TimedComponent::new(c, t))).collect();
    let initial = faulty.observe(&inputs, sinks)?;
    let transcript = run_session(&faulty, &diagnosis, &initial)?;
    let doc = TranscriptDoc::new(&model, &transcript);
    let mut text = serde_json::to_string_pretty(&doc).expect("transcript serializes");
    text.push('\n');
    emit_to(args.out.as_deref(), out, text.as_bytes())
}

fn serve_command(
    host: &str,
    port: u16,
    model: Option<&Path>,
    journal: Option<&Path>,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let state = match journal {
        Some(dir) if dir.exists() => AppState::recover(dir).map_err(|e| CliError::Domain(e.to_string()))?,
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
            AppState::with_journal(dir)
        }
        None => AppState::new(),
    };
    if let Some(path) = model {
        let doc = load_document(path)?;
        let id = state.add_model(doc).map_err(|e| CliError::Domain(e.to_string()))?;
        let _ = writeln!(err, "loaded {} as {id}", path.display());
    }
    let runtime = tokio::runtime::Runtime::new().map_err(CliError::Output)?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port)).await.map_err(CliError::Output)?;
        let addr = listener.local_addr().map_err(CliError::Output)?;
        let _ = writeln!(err, "listening on http://{addr}");
        serve(listener, Arc::new(state)).await.map_err(CliError::Output)
    })
}

pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { model } => {
            let doc = load_document(&model)?;
            let m = doc.to_model().map_err(|source| CliError::Document { path: model.clone(), source })?;
            let report = validate(&m);
            emit_json(out, &ValidationDoc::from(&report))?;
            if !report.is_valid() {
                return Err(CliError::InvalidModel(format!("{} violation(s)", report.violations.len())));
            }
            Ok(())
        }
        Command::Predict { model, observations } => {
            let m = load_model(&model)?;
            let obs = match observations {
                Some(p) => load_observations(&p)?,
                None => Vec::new(),
            };
            let options = PredictOptions { allow_missing_sources: true, ..PredictOptions::default() };
            let state = forward_predict_with(&m, &obs, options)?;
            emit_json(out, &prediction_rows(&m, &state))
        }
        Command::Diagnose { model, observations, diagnosis } => {
            let m = load_model(&model)?;
            let obs = load_observations(&observations)?;
            let a = assess(&m, &obs, &config(diagnosis.rule, diagnosis.mode, diagnosis.strategy))?;
            emit_json(out, &FocusReport::new(&m, &a, diagnosis.rule.into(), diagnosis.mode.into()))?;
            if a.status == Status::Inconsistent {
                return Err(CliError::Domain("the evidence is inconsistent under this rule".into()));
            }
            Ok(())
        }
        Command::ProbeAdvise { model, observations, diagnosis } => {
            let m = load_model(&model)?;
            let obs = load_observations(&observations)?;
            let a = assess(&m, &obs, &config(diagnosis.rule, diagnosis.mode, diagnosis.strategy))?;
            match &a.advice {
                Some(advice) => emit_json(out, &ProbeReport::new(&m, advice)),
                None => Err(CliError::Domain(format!("no probe to advise (status {})", crate::report::status_name(&a.status)))),
            }
        }
        Command::Simulate(args) => simulate(&args, out, err),
        Command::Serve { port, host, model, journal } => {
            serve_command(&host, port, model.as_deref(), journal.as_deref(), err)
        }
    }
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let stdout = io::stdout();
    let stderr = io::stderr();
    match execute(cli, &mut stdout.lock(), &mut stderr.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(io::stderr(), "error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
