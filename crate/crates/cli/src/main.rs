//! `qm`: command-line front end for wave-front set estimation.
//!
//! Exit codes: 0 success, 1 internal error, 2 configuration error,
//! 3 ground-truth or theorem-check mismatch. `QM_THREADS` caps the number of
//! worker threads.

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use qmwf::config::{run, RunConfig, RunSummary};
use qmwf::operator::{apply_operator, apply_operator_periodic, inclusion_check, OperatorSpec};
use qmwf::parametrix::{self, default_scale_r, parametrix_report};
use qmwf::scanner::{write_heatmap, ProbeRecord, ProbeSet, ScanParams};
use qmwf::{corpus, Execution, GridSignal};

/// Largest identity residual accepted by `qm parametrix`.
const RESIDUAL_TOL: f64 = 1e-6;

#[derive(Parser)]
#[command(
    name = "qm",
    version,
    about = "Gevrey wave-front set estimation for sampled signals"
)]
struct Cli {
    /// Evaluate probes one after another instead of in parallel.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan the signal described by a TOML run configuration.
    Analyze {
        config: PathBuf,
        /// Output directory, overriding `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the canonical form of the configuration and exit.
        #[arg(long)]
        print_config: bool,
    },
    /// Reference signals with known verdicts.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
    /// Check singular(P(D)u) ⊂ singular(u) ⊂ complement of Reg(s,P,u) ∪ Char(P).
    Propagate {
        /// Coefficients `a_0,...,a_m` of `P(D) = Σ a_k D^k`, `D = -i d/dx`.
        #[arg(long, allow_hyphen_values = true)]
        operator: String,
        /// Signal CSV with columns `x,re,im`.
        #[arg(long)]
        signal: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        /// Probe centers; defaults to -2,0,2.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        centers: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Write `P(D)u` here as `x,re,im`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build truncated parametrices and emit the residual report as CSV.
    Parametrix {
        #[arg(long, allow_hyphen_values = true)]
        operator: String,
        #[arg(long = "N")]
        n: u32,
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            default_value = "4,8,16,32"
        )]
        xi_sweep: Vec<f64>,
        /// Window dilation `r`; defaults to `max(2, 1.1 · 4h/e)`.
        #[arg(long)]
        scale_r: Option<f64>,
        /// Signal paired against the remainders; sets the grid.
        #[arg(long)]
        signal: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert a results JSON into heatmap CSV rows.
    Plotdata {
        result: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum CorpusAction {
    /// Names and descriptions.
    List,
    /// Scan an entry with its standard probes and compare with the expected verdicts.
    Run {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        s: Option<f64>,
    },
}

/// A check ran to completion but did not hold.
#[derive(Debug)]
struct Mismatch(String);

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Mismatch {}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Mismatch>().is_some() {
        return 3;
    }
    match e.downcast_ref::<qmwf::Error>() {
        Some(qmwf::Error::Config(_) | qmwf::Error::Parse(_) | qmwf::Error::InvalidSignal(_)) => 2,
        _ => 1,
    }
}

fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("QM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        qmwf::Error::Config(format!(
            "QM_THREADS: expected a positive integer, got '{raw}'"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the thread pool")
}

fn read_signal(path: &Path) -> Result<GridSignal> {
    let f = File::open(path)
        .map_err(|e| qmwf::Error::Config(format!("--signal {}: {e}", path.display())))?;
    Ok(GridSignal::read_csv(
        BufReader::new(f),
        path.display().to_string(),
    )?)
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn finish_run(summary: &RunSummary) -> Result<()> {
    print_json(summary)?;
    if summary.pass() {
        Ok(())
    } else {
        Err(Mismatch(format!(
            "{}: verdicts disagree with the expected ones",
            summary.signal
        ))
        .into())
    }
}

fn analyze(config: &Path, out: Option<PathBuf>, print_config: bool, exec: Execution) -> Result<()> {
    let mut cfg = RunConfig::load(config)?;
    if print_config {
        print!("{}", cfg.to_toml()?);
        return Ok(());
    }
    if out.is_some() {
        cfg.output.dir = out;
    }
    let outcome = run(&cfg, exec)?;
    for p in &outcome.written {
        eprintln!("wrote {}", p.display());
    }
    finish_run(&outcome.summary)
}

fn corpus_cmd(action: CorpusAction, exec: Execution) -> Result<()> {
    match action {
        CorpusAction::List => {
            let mut out = io::stdout().lock();
            for e in corpus::entries() {
                writeln!(out, "{:<20} {}", e.name, e.description)?;
            }
            Ok(())
        }
        CorpusAction::Run { name, out, s } => {
            let mut cfg = RunConfig::for_corpus(&name)?;
            if let Some(s) = s {
                cfg.classifier.s = s;
            }
            cfg.output.dir = out;
            let outcome = run(&cfg, exec)?;
            finish_run(&outcome.summary)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn propagate(
    operator: &str,
    signal: &Path,
    s: f64,
    centers: Option<Vec<f64>>,
    radius: f64,
    out: Option<PathBuf>,
    exec: Execution,
) -> Result<()> {
    let p: OperatorSpec = operator.parse()?;
    let u = read_signal(signal)?;
    let std = ProbeSet::standard();
    let probes = ProbeSet::new(centers.unwrap_or(std.centers), std.directions, radius)?;
    let params = ScanParams {
        execution: exec,
        ..ScanParams::default()
    }
    .with_s(s);
    params.validate()?;
    if let Some(path) = out {
        let image = match apply_operator(&p, &u) {
            Err(qmwf::Error::Resolution(why)) => {
                eprintln!("qm: {why}; writing the periodized image");
                apply_operator_periodic(&p, &u)?
            }
            other => other?,
        };
        image.write_csv(
            File::create(&path).with_context(|| format!("creating {}", path.display()))?,
        )?;
        eprintln!("wrote {}", path.display());
    }
    let report = inclusion_check(&u, &p, &probes, &params)?;
    print_json(&report)?;
    if report.pass {
        Ok(())
    } else {
        Err(Mismatch(format!(
            "inclusions violated: {} image, {} Reg",
            report.image_violations.len(),
            report.reg_violations.len()
        ))
        .into())
    }
}

#[allow(clippy::too_many_arguments)]
fn parametrix_cmd(
    operator: &str,
    n: u32,
    xi_sweep: &[f64],
    scale_r: Option<f64>,
    signal: Option<PathBuf>,
    s: f64,
    out: Option<PathBuf>,
) -> Result<()> {
    let p: OperatorSpec = operator.parse()?;
    let u = signal.as_deref().map(read_signal).transpose()?;
    let grid = u.as_ref().map_or_else(parametrix::default_grid, |u| u.grid);
    let r = scale_r.unwrap_or_else(|| default_scale_r(&p));
    let report = parametrix_report(&p, n, xi_sweep, r, &grid, u.as_ref(), s)?;
    match &out {
        Some(path) => {
            report.write_csv(
                File::create(path).with_context(|| format!("creating {}", path.display()))?,
            )?;
            eprintln!("wrote {}", path.display());
        }
        None => report.write_csv(io::stdout().lock())?,
    }
    eprintln!(
        "N={} m={} r={} max identity residual {:.3e}, remainder slope {:.3} (target <= {:.1})",
        report.n,
        report.order_m,
        report.scale_r,
        report.max_identity_residual,
        report.fitted_slope,
        -report.decay_order() + 0.3
    );
    let slope_ok = report.rows.len() < 2 || report.slope_ok();
    if report.max_identity_residual <= RESIDUAL_TOL && slope_ok {
        Ok(())
    } else {
        Err(Mismatch("parametrix residual or remainder decay out of tolerance".into()).into())
    }
}

fn plotdata(result: &Path, out: &Path) -> Result<()> {
    let f = File::open(result)
        .map_err(|e| qmwf::Error::Config(format!("{}: {e}", result.display())))?;
    let entries: Vec<ProbeRecord> = serde_json::from_reader(BufReader::new(f))
        .map_err(|e| qmwf::Error::Parse(format!("{}: {e}", result.display())))?;
    write_heatmap(
        &entries,
        File::create(out).with_context(|| format!("creating {}", out.display()))?,
    )?;
    eprintln!("wrote {} rows to {}", entries.len(), out.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    init_threads()?;
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match cli.command {
        Command::Analyze {
            config,
            out,
            print_config,
        } => analyze(&config, out, print_config, exec),
        Command::Corpus { action } => corpus_cmd(action, exec),
        Command::Propagate {
            operator,
            signal,
            s,
            centers,
            radius,
            out,
        } => propagate(&operator, &signal, s, centers, radius, out, exec),
        Command::Parametrix {
            operator,
            n,
            xi_sweep,
            scale_r,
            signal,
            s,
            out,
        } => parametrix_cmd(&operator, n, &xi_sweep, scale_r, signal, s, out),
        Command::Plotdata { result, out } => plotdata(&result, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qm: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
