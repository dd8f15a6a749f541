//! `stefan`: derive constants, validate initial data, and run closed-loop scenarios.
//!
//! Exit codes: 0 success, 1 configuration error, 2 validity breach.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stefan_core::harness::{
    compare_scenarios, emit_outputs, prepare, reference_trio, render_table, sweep, ComparisonRow,
    ScenarioConfig, ScenarioResult, OUTPUT_ROOT_ENV,
};
use stefan_core::{params, Error, Execution};

#[derive(Parser)]
#[command(name = "stefan", version, about = "Event-triggered boundary control of the one-phase Stefan problem")]
struct Cli {
    /// Run scenario fan-out and quadratures on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print every derived constant with its formula.
    Derive { config: Option<PathBuf> },
    /// Check the initial data; exits 1 if any condition fails.
    Validate { config: Option<PathBuf> },
    /// Run one scenario (the reference experiment if no config is given).
    Run {
        config: Option<PathBuf>,
        /// Output directory (default: $STEFAN_OUTPUT_ROOT/<name>, then the config, then out/<name>).
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Also write a plotting script.
        #[arg(long)]
        plot: bool,
    },
    /// Run several scenarios side by side. One config expands to the
    /// event-triggered / sampled-data / continuous trio; none uses the reference.
    Compare {
        configs: Vec<PathBuf>,
        /// Output root; each scenario goes to <root>/<name>.
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        plot: bool,
    },
    /// Run one config per value of a numeric key.
    Sweep {
        config: PathBuf,
        /// Dotted key, e.g. controller.gain.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true, allow_negative_numbers = true)]
        values: Vec<f64>,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        plot: bool,
    },
}

enum Failure {
    Config(Error),
    Breach(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_breach() {
            Failure::Breach(e.to_string())
        } else {
            Failure::Config(e)
        }
    }
}

type CliResult = Result<(), Failure>;

fn load(path: Option<&Path>) -> Result<ScenarioConfig, Error> {
    match path {
        Some(p) => ScenarioConfig::load(p),
        None => Ok(ScenarioConfig::default()),
    }
}

/// Output root for multi-scenario verbs.
fn output_root(out: Option<PathBuf>) -> PathBuf {
    out.or_else(|| std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn write(result: &ScenarioResult, dir: &Path, plot: bool) -> Result<(), Error> {
    let files = emit_outputs(result, dir, plot)?;
    println!("{}: {} files in {}", result.summary.name, files.len(), dir.display());
    Ok(())
}

fn breach_of(result: &ScenarioResult) -> Option<String> {
    result
        .summary
        .breach
        .as_ref()
        .map(|b| format!("{}: {}", result.summary.name, b.message))
}

fn derive(config: Option<PathBuf>, exec: Execution) -> CliResult {
    let cfg = load(config.as_deref())?;
    let prepared = prepare(&cfg, exec)?;
    print!(
        "{}",
        params::derivation_report(&prepared.phys, &cfg.controller, &cfg.trigger, &prepared.derived)
    );
    Ok(())
}

fn validate(config: Option<PathBuf>) -> CliResult {
    let cfg = load(config.as_deref())?;
    let phys = params::derive_physical(&cfg.physical)?;
    cfg.initial.check(&phys)?;
    let report = params::validate_initial_data(&cfg.initial, &cfg.controller, &phys);
    print!("{}", report.render());
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Config(Error::Rejected("initial data fails the conditions above".into())))
    }
}

fn run(config: Option<PathBuf>, out: Option<PathBuf>, plot: bool, exec: Execution) -> CliResult {
    let cfg = load(config.as_deref())?;
    let result = stefan_core::harness::run_scenario_with(&cfg, exec)?;
    let dir = out.unwrap_or_else(|| cfg.output_dir());
    write(&result, &dir, plot || cfg.output.plot_script)?;
    print!("{}", render_table(&[ComparisonRow::from_result(&result)]));
    match breach_of(&result) {
        Some(msg) => Err(Failure::Breach(msg)),
        None => Ok(()),
    }
}

fn compare(configs: Vec<PathBuf>, out: Option<PathBuf>, plot: bool, exec: Execution) -> CliResult {
    let list = match configs.as_slice() {
        [] => reference_trio(&ScenarioConfig::default()),
        [one] => reference_trio(&ScenarioConfig::load(one)?),
        many => many.iter().map(|p| ScenarioConfig::load(p)).collect::<Result<_, _>>()?,
    };
    let results = compare_scenarios(&list, exec)?;
    let root = output_root(out);
    for r in &results {
        write(r, &root.join(&r.config.scenario.name), plot || r.config.output.plot_script)?;
    }
    let table = render_table(&results.iter().map(ComparisonRow::from_result).collect::<Vec<_>>());
    let path = root.join("comparison.txt");
    std::fs::write(&path, &table).map_err(|source| Error::Io { path, source })?;
    print!("{table}");
    let breaches: Vec<String> = results.iter().filter_map(breach_of).collect();
    if breaches.is_empty() {
        Ok(())
    } else {
        Err(Failure::Breach(breaches.join("; ")))
    }
}

fn run_sweep(config: PathBuf, param: String, values: Vec<f64>, out: Option<PathBuf>, plot: bool, exec: Execution) -> CliResult {
    let base = ScenarioConfig::load(&config)?;
    let runs = sweep(&base, &param, &values, exec)?;
    let root = output_root(out);
    let mut rows = Vec::new();
    let mut breaches = Vec::new();
    for (cfg, res) in &runs {
        match res {
            Ok(r) => {
                write(r, &root.join(&cfg.scenario.name), plot || cfg.output.plot_script)?;
                rows.push(ComparisonRow::from_result(r));
                breaches.extend(breach_of(r));
            }
            // a rejected or inconsistent point is part of the sweep's answer
            Err(e) => eprintln!("{}: {e}", cfg.scenario.name),
        }
    }
    let table = render_table(&rows);
    let path = root.join("sweep.txt");
    std::fs::write(&path, &table).map_err(|source| Error::Io { path, source })?;
    print!("{table}");
    if breaches.is_empty() {
        Ok(())
    } else {
        Err(Failure::Breach(breaches.join("; ")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential { Execution::Sequential } else { Execution::default() };
    let outcome = match cli.command {
        Command::Derive { config } => derive(config, exec),
        Command::Validate { config } => validate(config),
        Command::Run { config, out, plot } => run(config, out, plot, exec),
        Command::Compare { configs, out, plot } => compare(configs, out, plot, exec),
        Command::Sweep {
            config,
            param,
            values,
            out,
            plot,
        } => run_sweep(config, param, values, out, plot, exec),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Breach(msg)) => {
            eprintln!("breach: {msg}");
            ExitCode::from(2)
        }
    }
}
