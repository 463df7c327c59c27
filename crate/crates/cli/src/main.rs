use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use harmcrit::config::{prepare_dir, Experiment, ExperimentConfig, FieldKind, SCHEMA};
use harmcrit::experiments::run_experiment;
use harmcrit::suite::{verify_all, Status, SuiteOptions};
use harmcrit::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_CERTIFICATE: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

#[derive(Parser)]
#[command(name = "harmcrit", version, about = "Frequency, straightening and critical-set experiments for harmonic functions on graph domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a TOML config, or a builtin experiment by name.
    Run {
        config: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        plot: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "quad-tol")]
        quad_tol: Option<f64>,
        /// Simon fixture parameter.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Run the acceptance suite on the builtin fixtures.
    VerifyAll {
        #[arg(long, default_value = "verify-out")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "quad-tol")]
        quad_tol: Option<f64>,
        /// Comma-separated criterion numbers, e.g. `1,5,10`.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<u8>>,
        /// Comma-separated fixture names; an empty string selects none.
        #[arg(long)]
        fixtures: Option<String>,
    },
    /// Print the documented config schema.
    Schema,
}

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        Error::Certificate { .. } => EXIT_CERTIFICATE,
        _ => EXIT_NUMERIC,
    }
}

fn load(config: &str) -> Result<ExperimentConfig, Error> {
    let path = PathBuf::from(config);
    if path.exists() {
        return ExperimentConfig::load(&path);
    }
    match Experiment::from_name(config) {
        Some(e) => Ok(ExperimentConfig::builtin(e)),
        None => Err(Error::Config(format!("`{config}` is neither a config file nor a builtin experiment"))),
    }
}

fn run(config: &str, out: Option<PathBuf>, plot: bool, seed: Option<u64>, quad_tol: Option<f64>, epsilon: Option<f64>) -> u8 {
    let mut cfg = match load(config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_CONFIG;
        }
    };
    if let Some(d) = out {
        cfg.output.dir = d;
    }
    cfg.output.plot |= plot;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = quad_tol {
        cfg.quad.tol = t;
    }
    if let Some(e) = epsilon {
        if cfg.field.kind != FieldKind::Simon {
            eprintln!("config error: --epsilon only applies to field.kind = simon");
            return EXIT_CONFIG;
        }
        cfg.field.epsilon = e;
    }
    if let Err(e) = cfg.validate() {
        eprintln!("{e}");
        return EXIT_CONFIG;
    }
    let dir = match cfg.prepare_output() {
        Ok(d) => d,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_CONFIG;
        }
    };
    println!("experiment {} (seed {}) -> {}", cfg.experiment.name(), cfg.seed, dir.display());
    match run_experiment(&cfg, &dir) {
        Ok(rep) => {
            for c in &rep.checks {
                println!("  {:<4} {:<24} {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            for f in &rep.files {
                println!("  wrote {}", f.display());
            }
            if rep.passed() {
                println!("SUMMARY: PASS");
                0
            } else {
                println!("SUMMARY: FAIL");
                EXIT_CERTIFICATE
            }
        }
        Err(e) => {
            eprintln!("error in {}: {e}", cfg.experiment.name());
            exit_for(&e.source)
        }
    }
}

fn verify(out: PathBuf, seed: u64, quad_tol: Option<f64>, only: Option<Vec<u8>>, fixtures: Option<String>) -> u8 {
    if let Err(e) = prepare_dir(&out) {
        eprintln!("{e}");
        return EXIT_CONFIG;
    }
    let mut opts = SuiteOptions { seed, only, ..Default::default() };
    if let Some(t) = quad_tol {
        opts.quad.tol = t;
    }
    opts.fixtures = fixtures.map(|s| s.split(',').map(str::trim).filter(|n| !n.is_empty()).map(String::from).collect());
    let rep = verify_all(&opts);
    for l in rep.lines() {
        println!("{l}");
    }
    if let Err(e) = rep.write(&out) {
        eprintln!("error writing suite tables: {e}");
        return EXIT_NUMERIC;
    }
    let count = |s: Status| rep.results.iter().filter(|r| r.status == s).count();
    println!(
        "SUMMARY: {} ({} pass, {} warn, {} fail, {} noop) -> {}",
        if rep.passed() { "PASS" } else { "FAIL" },
        count(Status::Pass),
        count(Status::Warn),
        count(Status::Fail),
        count(Status::Noop),
        out.display()
    );
    if rep.passed() {
        0
    } else {
        EXIT_CERTIFICATE
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, out, plot, seed, quad_tol, epsilon } => run(&config, out, plot, seed, quad_tol, epsilon),
        Command::VerifyAll { out, seed, quad_tol, only, fixtures } => verify(out, seed, quad_tol, only, fixtures),
        Command::Schema => {
            print!("{SCHEMA}");
            0
        }
    };
    ExitCode::from(code)
}
