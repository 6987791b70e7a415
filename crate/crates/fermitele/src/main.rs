use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fermitele::measurement::EntanglementMeasure;
use fermitele::protocols::{run_h2_protocol, run_nv_protocol, run_qdot_protocol};
use fermitele::scenario::{execute_scenario, parse_scenario, sweep_inequality, Report};
use fermitele::C64;

/// Fock-space teleportation scenarios on a handful of spin-orbitals.
#[derive(Parser)]
#[command(name = "fermitele", version, disable_help_subcommand = true)]
struct Cli {
    /// Master seed for every randomized step.
    #[arg(long, global = true, env = "FERMITELE_SEED", default_value_t = 0)]
    seed: u64,

    /// Report format written to stdout (or --out).
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    report: Format,

    /// Write the report to a file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Measure {
    Entropy,
    Geometric,
}

/// A complex number given as `RE` or `RE,IM`.
#[derive(Clone, Copy)]
struct Complex(C64);

impl FromStr for Complex {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let (re, im) = match text.split_once(',') {
            Some((re, im)) => (re, im),
            None => (text, "0"),
        };
        let parse = |t: &str| {
            t.trim().parse::<f64>().map_err(|_| format!("`{t}` is not a number"))
        };
        Ok(Complex(C64::new(parse(re)?, parse(im)?)))
    }
}

#[derive(Args)]
struct Qubit {
    /// First qubit coefficient.
    #[arg(long, default_value = "0.6")]
    a: Complex,

    /// Second qubit coefficient.
    #[arg(long, default_value = "0.8")]
    b: Complex,
}

#[derive(Clone, Copy, ValueEnum)]
enum Protocol {
    /// Two-site molecular teleportation.
    H2,
    /// NV-center hole teleportation.
    Nv0,
    /// Triple-quantum-dot teleportation.
    Qdots,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario file and report its assertions.
    Run { file: PathBuf },

    /// Run one of the built-in teleportation protocols.
    Builtin {
        #[arg(value_enum)]
        name: Protocol,

        #[command(flatten)]
        qubit: Qubit,

        /// Qubit coefficients under the quantum-dot naming.
        #[arg(long, conflicts_with = "a")]
        alpha: Option<Complex>,

        #[arg(long, conflicts_with = "b")]
        beta: Option<Complex>,

        /// Interaction scale; the quantum-dot tunneling step runs for t = π/U.
        #[arg(long = "U", default_value_t = 1.0)]
        u: f64,
    },

    /// Randomized check that occupation measurement cannot increase the
    /// average particle entanglement.
    SweepInequality {
        #[arg(long)]
        orbitals: usize,

        #[arg(long)]
        electrons: usize,

        #[arg(long, default_value_t = 200)]
        samples: usize,

        #[arg(long, value_enum, default_value_t = Measure::Entropy)]
        measure: Measure,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let report = match build_report(&cli) {
        Ok(report) => report,
        Err(Failure::Usage(message)) => {
            eprintln!("error: {message}");
            return ExitCode::from(2);
        }
        Err(Failure::Run(message)) => {
            eprintln!("error: {message}");
            return ExitCode::from(1);
        }
    };

    let rendered = match cli.report {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    if let Some(path) = &cli.out {
        if let Err(e) = fs::write(path, &rendered) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(2);
        }
    } else {
        print!("{rendered}");
    }
    eprintln!("completed in {} ms", started.elapsed().as_millis());

    if report.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

enum Failure {
    /// Bad invocation or unreadable input: exit code 2.
    Usage(String),
    /// The computation itself failed: exit code 1.
    Run(String),
}

fn build_report(cli: &Cli) -> Result<Report, Failure> {
    match &cli.command {
        Command::Run { file } => {
            let text = fs::read_to_string(file)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", file.display())))?;
            let scenario =
                parse_scenario(&text).map_err(|e| Failure::Usage(e.to_string()))?;
            let run = execute_scenario(&scenario, cli.seed)
                .map_err(|e| Failure::Run(e.to_string()))?;
            Ok(Report::from_run(&run))
        }
        Command::Builtin { name, qubit, alpha, beta, u } => {
            let a = alpha.unwrap_or(qubit.a).0;
            let b = beta.unwrap_or(qubit.b).0;
            match name {
                Protocol::H2 => run_h2_protocol(a, b),
                Protocol::Nv0 => run_nv_protocol(a, b),
                Protocol::Qdots => run_qdot_protocol(a, b, *u),
            }
            .map(|p| Report::from_protocol(&p, cli.seed))
            .map_err(|e| Failure::Run(e.to_string()))
        }
        Command::SweepInequality { orbitals, electrons, samples, measure } => {
            let measure = match measure {
                Measure::Entropy => EntanglementMeasure::Entropy,
                Measure::Geometric => EntanglementMeasure::Geometric,
            };
            let sweep = sweep_inequality(*orbitals, *electrons, *samples, measure, cli.seed)
                .map_err(|e| Failure::Run(e.to_string()))?;
            Ok(Report::from_sweep("sweep_inequality", &sweep, cli.seed))
        }
    }
}
