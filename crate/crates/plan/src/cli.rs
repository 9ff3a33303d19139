//! `plan` command line: coverage, optimize, calibrate, validate, serve.
//!
//! Exit status is 0 on success, 1 on an operational error (unreadable or
//! invalid input, refused run) and 2 when the result is semantically
//! infeasible (a receiver below its minimum bitrate, an empty front).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use apgrid::scenario::{parse_decision, parse_scenario, serialize_decision, serialize_scenario, ScenarioFile};
use apgrid::ScenarioError;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::api::{router, AppState};
use crate::artifacts::{self, front_table, receiver_table, RunError, Solver};
use crate::store::StoreError;

#[derive(Debug, Parser)]
#[command(name = "plan", version, about = "Grid-based access point placement workbench")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coverage map and receiver table of one placement.
    Coverage(CoverageArgs),
    /// Cost versus weighted-coverage front of placements.
    Optimize(OptimizeArgs),
    /// Fit obstacle losses to measurements and insert unexplained absorbers.
    Calibrate(CalibrateArgs),
    /// Parse and validate a scenario file.
    Validate { scenario: PathBuf },
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    pub scenario: PathBuf,
    /// Placement decision file; without it the empty placement is used.
    #[arg(long, conflicts_with = "existing")]
    pub decision: Option<PathBuf>,
    /// Use the equipment already installed at the sites.
    #[arg(long)]
    pub existing: bool,
    /// Output directory [default: `<scenario stem>-coverage`].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    pub scenario: PathBuf,
    #[arg(long, value_enum, default_value_t = Solver::Vps)]
    pub solver: Solver,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory [default: `<scenario stem>-optimize`].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    pub scenario: PathBuf,
    /// Output directory [default: `<scenario stem>-calibrate`].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: String,
    #[arg(long, default_value = "plan-data")]
    pub data_dir: PathBuf,
    /// Concurrent runs [default: number of CPUs].
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Scenario { path: PathBuf, source: ScenarioError },
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("server: {0}")]
    Server(std::io::Error),
}

/// Outcome of a command that completed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    Infeasible,
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Infeasible) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

pub fn run(command: Command) -> Result<Outcome, CliError> {
    match command {
        Command::Coverage(a) => coverage(a),
        Command::Optimize(a) => optimize(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Validate { scenario } => {
            let file = load_scenario(&scenario)?;
            let s = &file.scheme;
            println!(
                "{}: valid ({}x{} cells, {} sites, {} equipment types, {} receivers, {} obstacles)",
                scenario.display(),
                s.width_cells,
                s.height_cells,
                s.sites.len(),
                s.equipment.len(),
                s.receivers.len(),
                s.obstacles.len()
            );
            Ok(Outcome::Ok)
        }
        Command::Serve(a) => serve(a),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("artifacts serialize");
    text.push('\n');
    write(path, text)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioFile<f64>, CliError> {
    parse_scenario(&read(path)?).map_err(|source| CliError::Scenario { path: path.to_owned(), source })
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "scenario".to_owned(), |s| s.to_string_lossy().into_owned())
}

fn out_dir(out: Option<PathBuf>, scenario: &Path, command: &str) -> Result<PathBuf, CliError> {
    let dir = out.unwrap_or_else(|| PathBuf::from(format!("{}-{command}", stem(scenario))));
    std::fs::create_dir_all(&dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
    Ok(dir)
}

fn coverage(a: CoverageArgs) -> Result<Outcome, CliError> {
    let file = load_scenario(&a.scenario)?;
    let decision = match (&a.decision, a.existing) {
        (Some(p), _) => parse_decision(&read(p)?).map_err(|source| CliError::Scenario { path: p.clone(), source })?,
        (None, true) => file.scheme.existing_decision(),
        (None, false) => apgrid::PlacementDecision::new(),
    };
    let artifact = artifacts::coverage(&file.scheme, &decision).map_err(RunError::from)?;
    let dir = out_dir(a.out, &a.scenario, "coverage")?;
    let table = receiver_table(&artifact.receivers);
    write_json(&dir.join("coverage.json"), &artifact)?;
    write(&dir.join("receivers.tsv"), &table)?;
    print!("{table}");
    Ok(if artifact.feasible { Outcome::Ok } else { Outcome::Infeasible })
}

fn optimize(a: OptimizeArgs) -> Result<Outcome, CliError> {
    let file = load_scenario(&a.scenario)?;
    let front = artifacts::optimize(&file.scheme, a.solver, a.seed, None).map_err(RunError::from)?;
    let dir = out_dir(a.out, &a.scenario, "optimize")?;
    let table = front_table(&front);
    write_json(&dir.join("front.json"), &front)?;
    write(&dir.join("front.tsv"), &table)?;
    let decisions = dir.join("decisions");
    std::fs::create_dir_all(&decisions).map_err(|source| CliError::Io { path: decisions.clone(), source })?;
    for (i, p) in front.points.iter().enumerate() {
        write(&decisions.join(format!("point-{i:02}.json")), serialize_decision(&p.decision))?;
    }
    print!("{table}");
    Ok(if front.points.is_empty() { Outcome::Infeasible } else { Outcome::Ok })
}

fn calibrate(a: CalibrateArgs) -> Result<Outcome, CliError> {
    let file = load_scenario(&a.scenario)?;
    let request = artifacts::RunRequest::Calibrate { config: None };
    let artifacts::RunOutput::Calibrate(out) = artifacts::execute(&file, &request)? else {
        unreachable!("calibrate request yields a calibrate result")
    };
    let dir = out_dir(a.out, &a.scenario, "calibrate")?;
    write_json(&dir.join("calibration.json"), &out.calibration)?;
    write(&dir.join(format!("{}.calibrated.json", stem(&a.scenario))), serialize_scenario(&out.scenario))?;
    let c = &out.calibration;
    println!("residual before\t{:.4}", c.residual_before_db);
    println!("residual after\t{:.4}", c.residual_after_db);
    for (id, loss) in &c.fitted_losses {
        println!("fitted\t{id}\t{loss}");
    }
    for o in &c.inserted_obstacles {
        println!("inserted\t{}\t{} cells\t{}", o.id, o.cells.len(), o.loss_per_cell_db);
    }
    Ok(Outcome::Ok)
}

fn serve(a: ServeArgs) -> Result<Outcome, CliError> {
    let workers = a.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let state = AppState::open(&a.data_dir, workers)?;
    let runtime = tokio::runtime::Runtime::new().map_err(CliError::Server)?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&a.addr).await.map_err(CliError::Server)?;
        let local = listener.local_addr().map_err(CliError::Server)?;
        eprintln!("listening on http://{local} (data in {}, {workers} workers)", a.data_dir.display());
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(CliError::Server)
    })?;
    Ok(Outcome::Ok)
}
