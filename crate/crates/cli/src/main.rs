//! `nonscatter` command-line driver.

mod commands;
mod config;
mod error;
mod recipes;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use commands::Command;
use error::CliError;
use report::RunReport;

#[derive(Parser)]
#[command(name = "nonscatter", version, about = "Non-scattering media and nodal/Neumann domain experiments")]
struct Cli {
    /// Run directory (default `runs/<name>`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    group: Group,
}

#[derive(Args)]
struct ConfigArg {
    /// JSON configuration file.
    config: PathBuf,
}

#[derive(Subcommand)]
enum Group {
    /// Evaluate closed-form Helmholtz fields.
    #[command(subcommand)]
    Field(FieldCmd),
    /// Nodal sets: sign certificates, curve tracing, critical points.
    #[command(subcommand)]
    Nodal(NodalCmd),
    /// Gradient flow: stationary points, orbits, Neumann domains.
    #[command(subcommand)]
    Flow(FlowCmd),
    /// Cavity and interior transmission eigenpairs.
    #[command(subcommand)]
    Spectra(SpectraCmd),
    /// Anisotropic media.
    #[command(subcommand)]
    Media(MediaCmd),
    /// Scattering solves and refinement studies.
    #[command(subcommand)]
    Scatter(ScatterCmd),
    /// Built-in reproduction recipes.
    #[command(subcommand)]
    Recipe(RecipeCmd),
}

#[derive(Subcommand)]
enum FieldCmd {
    Eval(ConfigArg),
    Grid(ConfigArg),
}

#[derive(Subcommand)]
enum NodalCmd {
    Certify(ConfigArg),
    Trace(ConfigArg),
    Critical(ConfigArg),
}

#[derive(Subcommand)]
enum FlowCmd {
    Stationary(ConfigArg),
    Trace(ConfigArg),
    Domain(ConfigArg),
}

#[derive(Subcommand)]
enum SpectraCmd {
    Cavity(ConfigArg),
    Itep(ConfigArg),
    Sector(ConfigArg),
}

#[derive(Subcommand)]
enum MediaCmd {
    Build(ConfigArg),
    Check(ConfigArg),
    /// Verify the built-in explicit examples.
    Examples,
}

#[derive(Subcommand)]
enum ScatterCmd {
    Solve(ConfigArg),
    Study(ConfigArg),
}

#[derive(Subcommand)]
enum RecipeCmd {
    /// Run a recipe by name.
    Run { name: String },
    /// List recipes and what they reproduce.
    List,
}

enum Job {
    Config(Command, PathBuf),
    Examples,
    Recipe(String),
}

fn job(group: Group) -> Result<Job, ExitCode> {
    use Command as C;
    let cfg = |c: C, a: ConfigArg| Ok(Job::Config(c, a.config));
    match group {
        Group::Field(FieldCmd::Eval(a)) => cfg(C::FieldEval, a),
        Group::Field(FieldCmd::Grid(a)) => cfg(C::FieldGrid, a),
        Group::Nodal(NodalCmd::Certify(a)) => cfg(C::NodalCertify, a),
        Group::Nodal(NodalCmd::Trace(a)) => cfg(C::NodalTrace, a),
        Group::Nodal(NodalCmd::Critical(a)) => cfg(C::NodalCritical, a),
        Group::Flow(FlowCmd::Stationary(a)) => cfg(C::FlowStationary, a),
        Group::Flow(FlowCmd::Trace(a)) => cfg(C::FlowTrace, a),
        Group::Flow(FlowCmd::Domain(a)) => cfg(C::FlowDomain, a),
        Group::Spectra(SpectraCmd::Cavity(a)) => cfg(C::SpectraCavity, a),
        Group::Spectra(SpectraCmd::Itep(a)) => cfg(C::SpectraItep, a),
        Group::Spectra(SpectraCmd::Sector(a)) => cfg(C::SpectraSector, a),
        Group::Media(MediaCmd::Build(a)) => cfg(C::MediaBuild, a),
        Group::Media(MediaCmd::Check(a)) => cfg(C::MediaCheck, a),
        Group::Media(MediaCmd::Examples) => Ok(Job::Examples),
        Group::Scatter(ScatterCmd::Solve(a)) => cfg(C::ScatterSolve, a),
        Group::Scatter(ScatterCmd::Study(a)) => cfg(C::ScatterStudy, a),
        Group::Recipe(RecipeCmd::Run { name }) => Ok(Job::Recipe(name)),
        Group::Recipe(RecipeCmd::List) => {
            for r in recipes::all() {
                println!("{:<18} {}", r.name, r.anchor);
            }
            Err(ExitCode::SUCCESS)
        }
    }
}

fn execute(job: Job, out: Option<PathBuf>) -> Result<(RunReport, PathBuf), CliError> {
    let dir = |name: &str| out.clone().unwrap_or_else(|| Path::new("runs").join(name));
    match job {
        Job::Config(cmd, path) => {
            let d = dir(cmd.names().0);
            Ok((commands::run_command(cmd, &path, &d)?, d))
        }
        Job::Examples => {
            let d = dir("media-examples");
            Ok((commands::media_examples(&d), d))
        }
        Job::Recipe(name) => {
            let r = recipes::find(&name).ok_or_else(|| CliError::ConfigInvalid {
                path: "recipe".into(),
                schema: error::SCHEMA_PATH.into(),
                message: format!("unknown recipe `{name}`; see `nonscatter recipe list`"),
            })?;
            let d = dir(r.name);
            Ok((r.run(&d), d))
        }
    }
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(path.parent().unwrap_or(Path::new("."))).map_err(|e| CliError::io(path, e))?;
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let job = match job(cli.group) {
        Ok(j) => j,
        Err(code) => return code,
    };
    let start = Instant::now();
    let (report, dir) = match execute(job, cli.out) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let seconds = start.elapsed().as_secs_f64();
    let json = report.to_json();
    let timing = serde_json::json!({ "recipe": report.recipe, "seconds": seconds });
    let written = write(&dir.join("report.json"), &json)
        .and_then(|_| write(&dir.join("timing.json"), &format!("{}\n", serde_json::to_string_pretty(&timing).unwrap_or_default())));
    print!("{json}");
    eprintln!("{}: {:?} in {seconds:.2} s, report in {}", report.recipe, report.status, dir.display());
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(3);
    }
    ExitCode::from(report.exit_code() as u8)
}
