use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use ssync_core::analysis::{
    classify_meeting_pairs, detect_travel_vector, enumerate_travel_vectors, meeting_sequence,
    slope_classes, ModBase, PairKind, Slope,
};
use ssync_core::harness::{
    analyze_confinement, confinement_text, default_checkpoints, outcome_histogram, run_corpus,
    ConfinementOptions, CorpusParams, EntryOptions, HarnessError, Warmup,
};
use ssync_core::{builtin, parse_automaton, run, Automaton, ScheduleKind, Trace};
use thiserror::Error;

#[derive(Parser)]
#[command(
    name = "ssync",
    version,
    about = "Finite-automaton agents on the infinite grid"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an automaton and write its trace.
    Run(RunArgs),
    /// Analyze a trace file.
    Analyze(AnalyzeArgs),
    /// Run a seeded corpus of random automata and check it.
    Corpus(CorpusArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Built-in name (stay1, east1, zig2) or automaton file.
    #[arg(long)]
    automaton: String,
    #[arg(long, default_value = "adversarial")]
    scheduler: ScheduleKind,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    horizon: u64,
    /// Trace output file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Automaton the trace was produced by (built-in name or file).
    #[arg(long)]
    automaton: String,
    /// Slope as p/q, an integer, or `vertical`.
    #[arg(long)]
    slope: Option<Slope>,
    /// Modulus `x,y` in normalized coordinates.
    #[arg(long, value_parser = parse_base)]
    base: Option<(i64, i64)>,
    /// Comma-separated, strictly increasing times for band widths.
    #[arg(long, value_delimiter = ',')]
    checkpoints: Vec<u64>,
    /// Ignore travel pairs before this time instead of the default warm-up.
    #[arg(long)]
    warmup: Option<u64>,
    /// Report output file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CorpusArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 4)]
    max_states: usize,
    #[arg(long, default_value_t = 3)]
    agents: usize,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    horizon: u64,
    /// Directory for per-entry automata and reports plus `summary.txt`.
    #[arg(long)]
    report_dir: Option<PathBuf>,
    /// Skip classifying every configuration of every trace.
    #[arg(long)]
    no_solo_check: bool,
}

fn parse_base(s: &str) -> Result<(i64, i64), String> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| format!("bad base `{s}` (expected x,y)"))?;
    let num = |v: &str| {
        v.trim()
            .parse::<i64>()
            .map_err(|e| format!("bad base `{s}`: {e}"))
    };
    Ok((num(x)?, num(y)?))
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Inconsistent(String),
    #[error("{0} hard violation(s)")]
    Violations(usize),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Violations(_) => 1,
            CliError::Input(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Inconsistent(_) => 4,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_automaton(spec: &str) -> Result<Automaton, CliError> {
    if let Some(a) = builtin(spec) {
        return Ok(a);
    }
    let text = read(Path::new(spec))?;
    parse_automaton(&text).map_err(|e| CliError::Input(format!("{spec}: {e}")))
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let a = Arc::new(load_automaton(&args.automaton)?);
    let tr = run(args.scheduler, a, args.horizon).map_err(|e| CliError::Input(e.to_string()))?;
    if let Some(out) = &args.out {
        write(out, &tr.to_text())?;
    }
    let mut counts = [0usize; 3];
    for r in tr.records() {
        counts[r.case.code() as usize - 1] += 1;
    }
    println!("scheduler {}", args.scheduler);
    println!("steps {}", tr.time());
    println!(
        "subschedules type1 {} type2 {} type3 {}",
        counts[0], counts[1], counts[2]
    );
    if let Some(t) = tr.escape_from {
        println!("escape_from {t}");
    }
    println!("explored {}", tr.explored().len());
    Ok(())
}

fn analysis_report(tr: &Trace, args: &AnalyzeArgs) -> Result<String, CliError> {
    let a = tr.automaton();
    let mut s = String::new();
    let _ = writeln!(s, "steps {}", tr.time());
    let _ = writeln!(s, "agents {}", tr.last().num_agents());
    let _ = writeln!(s, "explored {}", tr.explored().len());
    match tr.escape_from {
        Some(t) => {
            let _ = writeln!(s, "escape_from {t}");
        }
        None => s.push_str("escape_from none\n"),
    }
    s.push_str("travel_vectors\n");
    for q in a.states() {
        match detect_travel_vector(a, q) {
            Some(tv) => {
                let _ = writeln!(s, "  {} {tv}", a.label(q));
            }
            None => {
                let _ = writeln!(s, "  {} none", a.label(q));
            }
        }
    }
    s.push_str("slope_classes\n");
    for (slope, tvs) in slope_classes(&enumerate_travel_vectors(a)) {
        let vs: Vec<String> = tvs
            .iter()
            .map(|tv| format!("({},{})", tv.dx, tv.dy))
            .collect();
        let _ = writeln!(s, "  {slope}: {}", vs.join(" "));
    }
    let pairs = classify_meeting_pairs(&meeting_sequence(tr));
    let travel: Vec<_> = pairs.iter().filter(|p| p.is_travel()).collect();
    let _ = writeln!(
        s,
        "meeting_pairs plain {} travel {}",
        pairs.len() - travel.len(),
        travel.len()
    );
    for p in travel {
        if let PairKind::Travel {
            traveling,
            source,
            destination,
        } = p.kind
        {
            let _ = writeln!(
                s,
                "  {} {} traveling {traveling} source {source} destination {destination}",
                p.t, p.u
            );
        }
    }
    let base = args
        .base
        .map(|(x, y)| ModBase::new(x, y))
        .transpose()
        .map_err(|e| CliError::Inconsistent(e.to_string()))?;
    let opts = ConfinementOptions {
        slope: args.slope,
        base,
        warmup: args.warmup.map_or(Warmup::FirstSpread, Warmup::From),
    };
    let checkpoints = if args.checkpoints.is_empty() {
        default_checkpoints(tr.time().max(1))
    } else {
        args.checkpoints.clone()
    };
    let conf = analyze_confinement(tr, &checkpoints, &opts).map_err(|e| match e {
        HarnessError::Analysis(e) => CliError::Inconsistent(e.to_string()),
        other => CliError::Input(other.to_string()),
    })?;
    s.push_str(&confinement_text(&conf));
    Ok(s)
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let a = Arc::new(load_automaton(&args.automaton)?);
    let text = read(&args.trace)?;
    let tr = Trace::parse(&text, a)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.trace.display())))?;
    let report = analysis_report(&tr, &args)?;
    match &args.out {
        Some(out) => write(out, &report)?,
        None => print!("{report}"),
    }
    Ok(())
}

fn cmd_corpus(args: CorpusArgs) -> Result<(), CliError> {
    let params = CorpusParams {
        seed: args.seed,
        count: args.count,
        max_states: args.max_states,
        n_agents: args.agents,
    };
    params
        .validate()
        .map_err(|e| CliError::Input(e.to_string()))?;
    let mut opts = EntryOptions::new(args.horizon);
    opts.check_solo = !args.no_solo_check;
    let report = run_corpus(&params, &opts).map_err(|e| CliError::Input(e.to_string()))?;
    let summary = report.summary_text();
    if let Some(dir) = &args.report_dir {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.clone(),
            source,
        })?;
        for (i, e) in report.entries.iter().enumerate() {
            let text = match e {
                Ok(e) => {
                    write(
                        &dir.join(format!("entry_{i:04}.aut")),
                        &e.automaton.to_text(),
                    )?;
                    e.text()
                }
                Err(err) => format!("entry {i}\nerror {err}\n"),
            };
            write(&dir.join(format!("entry_{i:04}.report")), &text)?;
        }
        write(&dir.join("summary.txt"), &summary)?;
    }
    print!("{summary}");
    for (k, v) in outcome_histogram(&report) {
        println!("outcome {k} {v}");
    }
    match report.hard_violations() {
        0 => Ok(()),
        n => Err(CliError::Violations(n)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Corpus(a) => cmd_corpus(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
