//! Command-line harness around the `coil-lab` library.
//!
//! Four subcommands:
//!
//! - `run`    — play one logger game from a JSON experiment config; writes the
//!   per-round CSV and prints a JSON run summary to stdout.
//! - `gadget` — generate a constructive instance (the two-branch cover MDP or
//!   the bimatrix-game embedding) as a set of JSON files.
//! - `check`  — run one named self-check suite and report PASS/FAIL per check.
//! - `params` — print the published parameter schedules for a learner.
//!
//! Exit codes: 0 on success, 1 on runtime failure (including a failed check
//! suite), 2 on configuration or usage failure.  `COIL_LAB_THREADS` caps the
//! parallelism of the perturbed-leader inner loop and the gadget searches.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use coil_lab::gadgets::{make_cover_mdp, map_f};
use coil_lab::imitation::make_feedback;
use coil_lab::online::{hedge_default_eta, mftpl_default_params, mftpl_eg_default_params};
use coil_lab::runtime::{resolve, run_logger};
use coil_lab::suites::{run_suite, suite_names};
use coil_lab::{
    ClassSpec, DetPolicy, Error, ExperimentConfig, FeedbackKind, GameSpec, LayeredMdp,
    PolicyClass, PolicyView,
};

/// Tabular laboratory for classification-based online imitation learning.
#[derive(Parser)]
#[command(name = "coil-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Play one logger game described by a JSON experiment config.
    Run(RunArgs),
    /// Generate a constructive instance as JSON files.
    Gadget {
        #[command(subcommand)]
        kind: GadgetCmd,
    },
    /// Run one named self-check suite.
    Check(CheckArgs),
    /// Print the published parameter schedule for a learner.
    Params(ParamsArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Per-round CSV path; overrides the config's `out` (default: the config
    /// path with a `.csv` extension).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GadgetCmd {
    /// The two-branch instance on which every committed proper learner pays
    /// static regret at least N(H-2)/(2H).
    Cover {
        /// Horizon (at least 2; the lower bound has force from 3 up).
        #[arg(long)]
        h: usize,
        /// Output directory for the instance files.
        #[arg(long)]
        out: PathBuf,
    },
    /// The embedding of a positively normalized bimatrix game into a
    /// three-layer tree MDP whose exact losses are (1/3)·C·u.
    Reduce {
        /// Game file: {"m": …, "V": [[…]], "W": [[…]]}, entries in [0, 1].
        #[arg(long)]
        game: PathBuf,
        /// Output directory for the instance files.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct CheckArgs {
    /// Suite name (see `--suite help` for the list).
    #[arg(long)]
    suite: String,
    /// Seed for the suite's sampled checks.
    #[arg(long)]
    seed: u64,
    /// Print the full machine-readable report instead of PASS/FAIL lines.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Hedge,
    Mftpl,
    #[value(name = "mftpl_eg")]
    MftplEg,
    #[value(name = "ftl_proper")]
    FtlProper,
}

#[derive(Args)]
struct ParamsArgs {
    /// Learner whose schedule to print.
    #[arg(long, value_enum)]
    algo: Algo,
    /// Round count N.
    #[arg(long)]
    n: usize,
    /// Committee size B.
    #[arg(long)]
    b: usize,
    /// State count S (mftpl / mftpl_eg only).
    #[arg(long)]
    s: Option<usize>,
    /// Action count A (mftpl / mftpl_eg only).
    #[arg(long)]
    a: Option<usize>,
    /// Separator size X (mftpl / mftpl_eg only).
    #[arg(long)]
    x: Option<usize>,
    /// Recoverability scale mu (mftpl / mftpl_eg only).
    #[arg(long)]
    mu: Option<f64>,
    /// Horizon H (mftpl_eg only).
    #[arg(long)]
    h: Option<usize>,
    /// Failure probability budget.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
}

/// A command failure split by who caused it: bad input (exit 2) or a failure
/// while executing a well-formed request (exit 1).
enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Runtime(m) => m,
        }
    }
}

fn usage(err: impl std::fmt::Display) -> Failure {
    Failure::Usage(err.to_string())
}

fn runtime_err(err: impl std::fmt::Display) -> Failure {
    Failure::Runtime(err.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(f) = apply_thread_bound() {
        eprintln!("error: {}", f.message());
        return ExitCode::from(f.code());
    }
    let result = match cli.cmd {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Gadget { kind } => cmd_gadget(kind),
        Cmd::Check(args) => cmd_check(args),
        Cmd::Params(args) => cmd_params(args),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

/// Applies `COIL_LAB_THREADS` to the global worker pool before any parallel
/// code runs.  Unset means all cores.
fn apply_thread_bound() -> Result<(), Failure> {
    match std::env::var("COIL_LAB_THREADS") {
        Err(_) => Ok(()),
        Ok(raw) => {
            let n: usize = raw
                .trim()
                .parse()
                .ok()
                .filter(|&n| n >= 1)
                .ok_or_else(|| usage(format!("COIL_LAB_THREADS must be a positive integer, got `{raw}`")))?;
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(runtime_err)?;
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

/// Summary of one finished run, printed to stdout as JSON.
#[derive(Serialize)]
struct RunSummary {
    /// The config that was actually played (flag overrides applied).
    config: ExperimentConfig,
    rounds: usize,
    #[serde(rename = "SReg")]
    static_regret: f64,
    #[serde(rename = "DReg")]
    dynamic_regret: f64,
    #[serde(rename = "LReg")]
    linear_regret: f64,
    annotations: u64,
    oracle_calls: u64,
    csv_path: String,
    wall_clock_seconds: f64,
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, Failure> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| usage(format!("cannot read config `{}`: {e}", args.config.display())))?;
    let mut config = ExperimentConfig::from_json_str(&text)
        .map_err(|e| usage(format!("config `{}`: {e}", args.config.display())))?;
    if let Some(seed) = args.seed {
        config.seed = Some(seed);
    }
    let csv_path = args
        .out
        .or_else(|| config.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| args.config.with_extension("csv"));
    config.out = Some(csv_path.display().to_string());

    // Everything up to here (including materializing the instance) is config
    // validation; failures are the caller's to fix.
    let resolved = resolve(&config).map_err(usage)?;

    let started = Instant::now();
    let ledger = run_logger(&resolved).map_err(runtime_err)?;
    write_text(&csv_path, &ledger.to_csv_string())?;

    let summary = RunSummary {
        rounds: ledger.len(),
        static_regret: ledger.static_regret(),
        dynamic_regret: ledger.dynamic_regret(),
        linear_regret: ledger.linear_regret(),
        annotations: ledger.total_annotations(),
        oracle_calls: ledger.total_oracle_calls(),
        csv_path: csv_path.display().to_string(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        config,
    };
    println!("{}", serde_json::to_string_pretty(&summary).map_err(runtime_err)?);
    Ok(ExitCode::SUCCESS)
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| runtime_err(format!("cannot create `{}`: {e}", parent.display())))?;
        }
    }
    fs::write(path, text).map_err(|e| runtime_err(format!("cannot write `{}`: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// gadget
// ---------------------------------------------------------------------------

/// What `gadget` writes: four JSON files whose contents drop straight into an
/// experiment config (`mdp.inline.spec`, `expert`, `class`, `feedback`).
#[derive(Serialize)]
struct GadgetManifest {
    out_dir: String,
    files: Vec<String>,
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    class_size: usize,
}

fn cmd_gadget(kind: GadgetCmd) -> Result<ExitCode, Failure> {
    let (out_dir, mdp, expert, class, feedback) = match kind {
        GadgetCmd::Cover { h, out } => {
            let gadget = make_cover_mdp(h).map_err(usage)?;
            if let Some(note) = &gadget.note {
                eprintln!("note: {note}");
            }
            (out, gadget.mdp, gadget.expert, gadget.class, FeedbackKind::ZeroOne { mu: Some(1.0) })
        }
        GadgetCmd::Reduce { game, out } => {
            let text = fs::read_to_string(&game)
                .map_err(|e| usage(format!("cannot read game `{}`: {e}", game.display())))?;
            let spec =
                GameSpec::from_json_str(&text).map_err(|e| usage(format!("game `{}`: {e}", game.display())))?;
            let game = spec.build().map_err(usage)?;
            let instance = map_f(&game).map_err(runtime_err)?;
            let kind = instance.feedback.kind();
            (out, instance.mdp, instance.expert, instance.class, kind)
        }
    };
    let manifest = emit_instance(&out_dir, &mdp, &expert, &class, feedback)?;
    println!("{}", serde_json::to_string_pretty(&manifest).map_err(runtime_err)?);
    Ok(ExitCode::SUCCESS)
}

/// Validates an instance end to end (spec round-trip, policy/committee
/// compatibility, feedback sandwich) and only then writes the four files.
fn emit_instance(
    out_dir: &Path,
    mdp: &LayeredMdp,
    expert: &DetPolicy,
    class: &PolicyClass,
    feedback: FeedbackKind,
) -> Result<GadgetManifest, Failure> {
    let spec = mdp.to_spec();
    let spec_json = spec.to_json_string();
    let rebuilt = coil_lab::MdpSpec::from_json_str(&spec_json)
        .map_err(runtime_err)?
        .build()
        .map_err(runtime_err)?;
    if rebuilt.num_states() != mdp.num_states() || rebuilt.horizon() != mdp.horizon() {
        return Err(runtime_err("instance spec does not round-trip"));
    }
    if !expert.compatible_with(mdp.num_states(), mdp.num_actions()) {
        return Err(runtime_err("generated expert does not fit the instance"));
    }
    if class.num_states() != mdp.num_states() || class.num_actions() != mdp.num_actions() {
        return Err(runtime_err("generated committee does not fit the instance"));
    }
    // The feedback constructor checks the advantage/disagreement sandwich
    // exhaustively; an instance that fails it must never reach disk.
    make_feedback(mdp, expert, feedback).map_err(runtime_err)?;

    fs::create_dir_all(out_dir)
        .map_err(|e| runtime_err(format!("cannot create `{}`: {e}", out_dir.display())))?;
    let files = [
        ("mdp.json", spec_json),
        ("expert.json", serde_json::to_string_pretty(expert.actions()).map_err(runtime_err)?),
        ("class.json", ClassSpec::from_class(class).to_json_string()),
        ("feedback.json", serde_json::to_string_pretty(&feedback).map_err(runtime_err)?),
    ];
    let mut names = Vec::new();
    for (name, body) in files {
        write_text(&out_dir.join(name), &(body + "\n"))?;
        names.push(name.to_string());
    }
    Ok(GadgetManifest {
        out_dir: out_dir.display().to_string(),
        files: names,
        num_states: mdp.num_states(),
        num_actions: mdp.num_actions(),
        horizon: mdp.horizon(),
        class_size: class.size(),
    })
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

fn cmd_check(args: CheckArgs) -> Result<ExitCode, Failure> {
    let report = run_suite(&args.suite, args.seed).map_err(|e| match e {
        Error::UnknownSuite(_) => {
            usage(format!("{e}; available: {}", suite_names().join(" ")))
        }
        other => runtime_err(other),
    })?;
    if args.json {
        println!("{}", report.to_json_string());
    } else {
        print!("{}", report.render_text());
    }
    Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

// ---------------------------------------------------------------------------
// params
// ---------------------------------------------------------------------------

/// Printed schedule; `eta`/`T`/`K` carry exactly the values `resolve` would
/// fill into a config that leaves them out.
#[derive(Serialize)]
struct Schedule {
    algo: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    eta: Option<f64>,
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    t: Option<usize>,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    horizon_ok: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'static str>,
}

fn require(flag: &str, value: Option<usize>) -> Result<usize, Failure> {
    value.ok_or_else(|| usage(format!("this learner's schedule needs --{flag}")))
}

fn cmd_params(args: ParamsArgs) -> Result<ExitCode, Failure> {
    let schedule = match args.algo {
        Algo::Hedge => Schedule {
            algo: "hedge",
            eta: Some(hedge_default_eta(args.n, args.b).map_err(usage)?),
            t: None,
            k: None,
            horizon_ok: None,
            note: None,
        },
        Algo::Mftpl => {
            let (s, a, x) = (require("s", args.s)?, require("a", args.a)?, require("x", args.x)?);
            let mu = args.mu.ok_or_else(|| usage("this learner's schedule needs --mu"))?;
            let p = mftpl_default_params(args.n, s, a, args.b, x, mu, args.delta).map_err(usage)?;
            Schedule {
                algo: "mftpl",
                eta: Some(p.eta),
                t: Some(p.t),
                k: Some(p.k),
                horizon_ok: None,
                note: None,
            }
        }
        Algo::MftplEg => {
            let (s, a, x) = (require("s", args.s)?, require("a", args.a)?, require("x", args.x)?);
            let h = require("h", args.h)?;
            let mu = args.mu.ok_or_else(|| usage("this learner's schedule needs --mu"))?;
            let p = mftpl_eg_default_params(args.n, s, a, args.b, x, mu, h, args.delta).map_err(usage)?;
            Schedule {
                algo: "mftpl_eg",
                eta: Some(p.eta),
                t: Some(p.t),
                k: Some(p.k),
                horizon_ok: Some(p.horizon_ok),
                note: None,
            }
        }
        Algo::FtlProper => Schedule {
            algo: "ftl_proper",
            eta: None,
            t: None,
            k: None,
            horizon_ok: None,
            note: Some("committed play has no tunable parameters"),
        },
    };
    println!("{}", serde_json::to_string_pretty(&schedule).map_err(runtime_err)?);
    Ok(ExitCode::SUCCESS)
}
