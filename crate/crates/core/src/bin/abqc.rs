use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use abqc_core::bounds::{self, DiscardBound};
use abqc_core::harness::{run_montecarlo, ExperimentConfig};
use abqc_core::verify;
use abqc_core::{Error, Verdict};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "abqc", version, about = "Simulator for arbitrated delegation of graph-state computation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Minimal parameters and budget terms for each n.
    Params {
        /// Inclusive range such as `1..5`.
        #[arg(long, value_parser = parse_range)]
        n_range: RangeInclusive<u64>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Soundness budget at the minimal parameters.
    Bounds {
        #[arg(long, value_parser = parse_range)]
        n_range: RangeInclusive<u64>,
        /// Use `2 ln2 k^n n^5` for the discard count.
        #[arg(long)]
        text_form_m: bool,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Executes one protocol run and writes its transcript.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `master_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Transcript path; stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Runs many seeded trials and prints a summary.
    Montecarlo {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// JSON-lines transcript path; overrides the config.
        #[arg(long)]
        transcripts: Option<PathBuf>,
        /// Summary path; overrides the config. The summary always goes to stdout too.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Numerical verification suites.
    Verify {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(verify::SUITES))]
        suite: Option<String>,
    },
}

fn parse_range(s: &str) -> Result<RangeInclusive<u64>, String> {
    let (a, b) = s
        .split_once("..=")
        .or_else(|| s.split_once(".."))
        .ok_or_else(|| format!("expected A..B, got '{s}'"))?;
    let a: u64 = a.trim().parse().map_err(|e| format!("bad start: {e}"))?;
    let b: u64 = b.trim().parse().map_err(|e| format!("bad end: {e}"))?;
    if a == 0 || a > b {
        return Err(format!("need 1 <= A <= B, got {a}..{b}"));
    }
    Ok(a..=b)
}

/// Error paired with its exit code.
struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(EXIT_FAILURE, e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure(EXIT_FAILURE, e.to_string())
    }
}

fn config_error(e: Error) -> Failure {
    Failure(EXIT_CONFIG, format!("config error: {e}"))
}

fn load_config(path: &PathBuf, seed: Option<u64>, trials: Option<u64>) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::from_file(path).map_err(config_error)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    if let Some(t) = trials {
        cfg.trials = t;
    }
    cfg.validate().map_err(config_error)?;
    Ok(cfg)
}

fn open_output(path: Option<&PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

#[derive(Serialize)]
struct ParamsRow {
    n: u64,
    min_k: u64,
    min_m: u64,
    min_m_text_form: f64,
    max_deviation_term: f64,
    definetti_term: f64,
    total: f64,
    threshold: f64,
}

fn params_row(n: u64) -> Result<ParamsRow, Failure> {
    let k = bounds::min_k(n)?;
    let m = bounds::min_m(n, k)?;
    let b = bounds::budget(n, k, m)?;
    Ok(ParamsRow {
        n,
        min_k: k,
        min_m: m,
        min_m_text_form: bounds::min_m_text_form(n, k),
        max_deviation_term: b.max_deviation_term,
        definetti_term: b.definetti_term,
        total: b.total,
        threshold: b.threshold,
    })
}

fn print_rows<T: Serialize>(rows: &[T], header: &[&str], cells: impl Fn(&T) -> Vec<String>, format: Format) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    match format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(rows).map_err(Error::from)?)?,
        Format::Csv => {
            writeln!(out, "{}", header.join(","))?;
            for r in rows {
                writeln!(out, "{}", cells(r).join(","))?;
            }
        }
        Format::Table => {
            let table: Vec<Vec<String>> = rows.iter().map(&cells).collect();
            let widths: Vec<usize> = (0..header.len())
                .map(|i| table.iter().map(|r| r[i].len()).chain([header[i].len()]).max().unwrap_or(0))
                .collect();
            let line = |cols: Vec<String>| {
                cols.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect::<Vec<_>>().join("  ")
            };
            writeln!(out, "{}", line(header.iter().map(|s| s.to_string()).collect()))?;
            for r in table {
                writeln!(out, "{}", line(r))?;
            }
        }
    }
    Ok(())
}

fn cmd_params(range: RangeInclusive<u64>, format: Format) -> Result<u8, Failure> {
    let rows = range.map(params_row).collect::<Result<Vec<_>, _>>()?;
    let header = ["n", "min_k", "min_m", "min_m_text_form", "max_deviation_term", "definetti_term", "total", "threshold"];
    print_rows(
        &rows,
        &header,
        |r| {
            vec![
                r.n.to_string(),
                r.min_k.to_string(),
                r.min_m.to_string(),
                format!("{:e}", r.min_m_text_form),
                format!("{:.6e}", r.max_deviation_term),
                format!("{:.6e}", r.definetti_term),
                format!("{:.6e}", r.total),
                format!("{:.6e}", r.threshold),
            ]
        },
        format,
    )?;
    Ok(0)
}

fn cmd_bounds(range: RangeInclusive<u64>, text_form: bool, format: Format) -> Result<u8, Failure> {
    let form = if text_form { DiscardBound::TextForm } else { DiscardBound::Derived };
    let rows = range
        .map(|n| {
            let k = bounds::min_k(n)?;
            let m = bounds::min_m_with(form, n, k)?;
            bounds::budget_real(n, k, m)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let header = ["n", "k", "m", "max_deviation_term", "definetti_term", "total", "threshold", "satisfied"];
    print_rows(
        &rows,
        &header,
        |b| {
            vec![
                b.n.to_string(),
                b.k.to_string(),
                format!("{}", b.m),
                format!("{:e}", b.max_deviation_term),
                format!("{:e}", b.definetti_term),
                format!("{:e}", b.total),
                format!("{:e}", b.threshold),
                b.satisfied.to_string(),
            ]
        },
        format,
    )?;
    Ok(0)
}

fn verdict_exit(v: Verdict) -> u8 {
    match v {
        Verdict::Accepted => 0,
        Verdict::BobCheating => 10,
        Verdict::AliceCheating => 11,
        Verdict::Rejected => 12,
    }
}

fn cmd_run(config: PathBuf, seed: Option<u64>, output: Option<PathBuf>) -> Result<u8, Failure> {
    let cfg = load_config(&config, seed, Some(1))?;
    let transcript = cfg.run_trial(0)?;
    let mut out = open_output(output.as_ref().or(cfg.output.transcripts.as_ref()))?;
    writeln!(out, "{}", transcript.to_json()?)?;
    out.flush()?;
    Ok(verdict_exit(transcript.verdict))
}

fn cmd_montecarlo(
    config: PathBuf,
    trials: Option<u64>,
    jobs: Option<usize>,
    seed: Option<u64>,
    transcripts: Option<PathBuf>,
    summary_path: Option<PathBuf>,
) -> Result<u8, Failure> {
    let cfg = load_config(&config, seed, trials)?;
    let mut lines = match transcripts.as_ref().or(cfg.output.transcripts.as_ref()) {
        Some(p) => Some(BufWriter::new(File::create(p)?)),
        None => None,
    };
    let summary = run_montecarlo(&cfg, jobs, lines.as_mut().map(|w| w as &mut dyn Write))?;
    let json = serde_json::to_string_pretty(&summary).map_err(Error::from)?;
    if let Some(p) = summary_path.as_ref().or(cfg.output.summary.as_ref()) {
        std::fs::write(p, format!("{json}\n"))?;
    }
    println!("{json}");
    Ok(0)
}

fn cmd_verify(suite: Option<String>) -> Result<u8, Failure> {
    let names: Vec<&str> = match &suite {
        Some(s) => vec![s.as_str()],
        None => verify::SUITES.to_vec(),
    };
    let mut ok = true;
    for name in names {
        let r = verify::run_suite(name)?;
        println!(
            "{} {:<22} checks={:<6} max_deviation={:.3e} tolerance={:.1e}",
            if r.passed { "PASS" } else { "FAIL" },
            r.suite,
            r.checks,
            r.max_deviation,
            r.tolerance
        );
        ok &= r.passed;
    }
    Ok(if ok { 0 } else { EXIT_FAILURE })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Params { n_range, format } => cmd_params(n_range, format),
        Command::Bounds { n_range, text_form_m, format } => cmd_bounds(n_range, text_form_m, format),
        Command::Run { config, seed, output } => cmd_run(config, seed, output),
        Command::Montecarlo { config, trials, jobs, seed, transcripts, summary } => {
            cmd_montecarlo(config, trials, jobs, seed, transcripts, summary)
        }
        Command::Verify { suite } => cmd_verify(suite),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("abqc: {msg}");
            ExitCode::from(code)
        }
    }
}
