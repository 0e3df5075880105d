use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use repeaterlab_cli::commands::{self, Outcome};
use repeaterlab_cli::config::{self, Case};
use repeaterlab_cli::CliError;

#[derive(Parser, Debug)]
#[command(name = "repeaterlab", version, about = "Fidelity and rate analysis for encoded quantum repeaters")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Parameter file (key = value, optional [case] sections).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override a config key for every case, e.g. --set k=1.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Seed for the random sampling commands.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Monte Carlo trial count.
    #[arg(long, global = true)]
    trials: Option<u64>,

    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    emit_config: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rate and final fidelity over the configured grid.
    RateSweep {
        /// Companion whitespace-separated data file for gnuplot.
        #[arg(long)]
        gnuplot: Option<PathBuf>,
    },
    /// Final fidelity for each initial fidelity (or qubus strength).
    Fidelity,
    /// Initial fidelity and rate reaching the target final fidelity.
    OperatingPoint,
    /// Check the closed forms against the density-matrix and enumeration oracles.
    OracleVerify,
    /// Qubus phase tables, feasibility and homodyne error.
    QubusCheck,
    /// Monte Carlo rate estimates.
    Montecarlo,
}

fn load(cli: &Cli) -> Result<Vec<Case>, CliError> {
    let text = match &cli.config {
        Some(path) => {
            std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?
        }
        None => String::new(),
    };
    let mut overrides = cli.overrides.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    if let Some(trials) = cli.trials {
        overrides.push(format!("trials={trials}"));
    }
    config::parse_config(&text, &overrides)
}

fn init_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("REPEATERLAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("REPEATERLAB_THREADS={value:?} is not a count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::io(p.display().to_string(), e))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    init_threads()?;
    let cases = load(cli)?;
    let mut out = open_out(&cli.out)?;
    let stderr = io::stderr();
    let mut diag = stderr.lock();
    if cli.emit_config {
        out.write_all(config::emit_config(&cases).as_bytes())
            .map_err(|e| CliError::io("output", e))?;
        out.flush().map_err(|e| CliError::io("output", e))?;
        return Ok(Outcome::default());
    }
    let outcome = match &cli.command {
        Command::RateSweep { gnuplot } => {
            let mut plot = match gnuplot {
                Some(p) => Some(BufWriter::new(
                    File::create(p).map_err(|e| CliError::io(p.display().to_string(), e))?,
                )),
                None => None,
            };
            commands::rate_sweep(
                &cases,
                &mut out,
                &mut diag,
                plot.as_mut().map(|w| w as &mut dyn Write),
            )?
        }
        Command::Fidelity => commands::fidelity(&cases, &mut out, &mut diag)?,
        Command::OperatingPoint => {
            let cases = cli.config.as_ref().map(|_| cases.as_slice());
            commands::operating_point(cases, &mut out, &mut diag)?
        }
        Command::OracleVerify => each_case(&cases, |c| commands::oracle_verify(c, &mut out))?,
        Command::QubusCheck => each_case(&cases, |c| commands::qubus_check(c, &mut out))?,
        Command::Montecarlo => commands::montecarlo(&cases, &mut out, &mut diag)?,
    };
    out.flush().map_err(|e| CliError::io("output", e))?;
    if outcome.failed_rows > 0 {
        writeln!(diag, "{} row(s) failed", outcome.failed_rows).ok();
    }
    Ok(outcome)
}

fn each_case(
    cases: &[Case],
    mut f: impl FnMut(&Case) -> Result<Outcome, CliError>,
) -> Result<Outcome, CliError> {
    let mut total = Outcome::default();
    for c in cases {
        total.failed_rows += f(c)?.failed_rows;
    }
    Ok(total)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(o) if o.failed_rows == 0 => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
