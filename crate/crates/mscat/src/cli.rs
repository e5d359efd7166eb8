//! Command-line front end.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{self, ConfigFile, Method, ScenarioConfig};
use crate::error::CliError;
use crate::experiment::{self, Setup};
use crate::output;

#[derive(Debug, Parser)]
#[command(name = "mscat", version, about = "Multiple-scattering iteration experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a scenario with the configured methods and write CSV histories.
    Run(RunArgs),
    /// Print the closed-form and fitted two-step rate as JSON.
    Rate(Select),
    /// Check convexity, disjointness and no-occlusion; print the predicted rate.
    Validate(Select),
}

#[derive(Debug, Args)]
pub struct Select {
    /// Config file; without it `--scenario` names a bundled scenario.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub scenario: Option<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub select: Select,
    /// Restrict to these methods (repeatable); defaults to the config list.
    #[arg(long = "method", value_enum)]
    pub methods: Vec<Method>,
    /// Output directory; defaults to the config `output` or `out/<scenario>`.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Write zero wall-clock columns so reruns are byte-identical.
    #[arg(long)]
    pub deterministic: bool,
    /// Also dump phase fields and Kirchhoff beams up to this depth.
    #[arg(long, value_name = "DEPTH")]
    pub debug_dump: Option<usize>,
    #[arg(long)]
    pub quiet: bool,
}

impl Select {
    pub fn resolve(&self) -> Result<ScenarioConfig, CliError> {
        match (&self.config, &self.scenario) {
            (Some(path), name) => Ok(ConfigFile::load(path)?.select(name.as_deref())?.clone()),
            (None, Some(name)) => config::bundled(name),
            (None, None) => Err(CliError::Config("give --config <path> or --scenario <bundled name>".into())),
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("mscat: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Run(args) => run(args),
        Command::Rate(sel) => {
            let report = experiment::rate_report(&sel.resolve()?)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            Ok(())
        }
        Command::Validate(sel) => {
            let report = experiment::validate(&sel.resolve()?);
            println!("scenario: {}", report.scenario);
            println!("convex: {:?}", report.convex);
            println!("disjoint: {}", report.disjoint);
            match report.no_occlusion {
                Some(b) => println!("no_occlusion: {b}"),
                None => println!("no_occlusion: not checked"),
            }
            if let Some(p) = &report.prediction {
                println!("distance: {:.12}", p.distance);
                println!("r2: {:.12} {:+.12}i", p.r2[0], p.r2[1]);
                println!("r2_modulus: {:.12}", p.r2_modulus);
                println!("predicted_reflections: {:.2}", p.predicted_reflections);
            }
            if report.is_clean() {
                println!("violations: none");
            } else {
                for v in &report.violations {
                    println!("violation: {v}");
                }
            }
            Ok(())
        }
    }
}

fn run(args: &RunArgs) -> Result<(), CliError> {
    let cfg = args.select.resolve()?;
    let methods = if args.methods.is_empty() { cfg.methods.clone() } else { args.methods.clone() };
    if methods.contains(&Method::KrylovKirchhoff) && cfg.obstacles.len() != 2 {
        return Err(CliError::Config("krylov_kirchhoff needs exactly two obstacles".into()));
    }
    let dir = args
        .output
        .clone()
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let log = |msg: String| {
        if !args.quiet {
            eprintln!("[{}] {msg}", cfg.name);
        }
    };
    let setup = Setup::new(&cfg)?;
    log(format!(
        "nodes {:?}: assembly {:.2} s, reference solve {:.2} s",
        setup.problem.node_counts(),
        setup.assembly_seconds,
        setup.reference_seconds
    ));
    let histories = experiment::run_methods(&setup, &methods, |h| {
        let last = h.rows.last().map_or(f64::NAN, |r| r.log10_error);
        log(format!("{}: {} rows, final log10 error {last:.2}, {:.2} s", h.label, h.rows.len(), h.seconds));
    })?;
    for h in &histories {
        output::write_history(&dir, h, args.deterministic)?;
    }
    output::write_metadata(&dir, &cfg, &setup, &histories, args.deterministic)?;
    if let Some(depth) = args.debug_dump {
        output::write_debug_dump(&dir, &setup, depth)?;
    }
    log(format!("wrote {}", dir.display()));
    Ok(())
}
