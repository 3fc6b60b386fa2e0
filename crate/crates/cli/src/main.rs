//! `curvslip`: run the workbench stages from a TOML configuration.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use curvslip_core::workbench::{export_plots, Stage, StageReport, Table, Workbench, WorkbenchConfig};
use curvslip_core::Error;

#[derive(Parser, Debug)]
#[command(name = "curvslip", version, about = "Stokes flow over curved periodic porous beds")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Workbench configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Artifact directory.
    #[arg(long, global = true, default_value = "artifacts")]
    out: PathBuf,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Double the number of pore layers in the boundary-layer strip.
    #[arg(long, global = true)]
    deep_strip: bool,

    /// Halve every mesh size.
    #[arg(long, global = true)]
    fine: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Check the transformed identities and the metric.
    VerifyTransform,
    /// Permeability from the cell problems.
    Cell,
    /// Flat-interface flow, stress jumps and boundary layers.
    Bl,
    /// Effective slip flow and Darcy pressure for every ε of the sweep.
    Effective,
    /// Microscale simulations compared with the effective model.
    Dns,
    /// Like `dns`, then print the fitted rates.
    Sweep,
    /// Every stage.
    Pipeline,
    /// Plot data from an existing artifact directory.
    ExportPlots,
}

impl Command {
    fn last_stage(self) -> Option<Stage> {
        match self {
            Command::VerifyTransform => Some(Stage::Transform),
            Command::Cell => Some(Stage::Cell),
            Command::Bl => Some(Stage::BoundaryLayer),
            Command::Effective => Some(Stage::Darcy),
            Command::Dns | Command::Sweep | Command::Pipeline => Some(Stage::Dns),
            Command::ExportPlots => None,
        }
    }
}

fn load_config(cli: &Cli) -> anyhow::Result<WorkbenchConfig> {
    let Some(path) = &cli.config else {
        bail!(Error::Config("--config <path> is required".into()));
    };
    let mut cfg = WorkbenchConfig::load(path)?;
    if cli.fine {
        cfg = cfg.refined();
    }
    if cli.deep_strip {
        cfg = cfg.deepened();
    }
    Ok(cfg)
}

fn print_reports(reports: &[StageReport]) {
    for r in reports {
        let state = if r.cached { "cached" } else { "ran" };
        println!("{:<16} {:<7} {:>9.2} s", r.stage.name(), state, r.seconds);
    }
}

fn print_table(path: &Path, labeled: bool) -> anyhow::Result<()> {
    let t = if labeled { Table::read_labeled(path)? } else { Table::read(path)? };
    let head: Vec<&str> = t.label_header.iter().chain(&t.header).map(String::as_str).collect();
    println!("{}", head.join("  "));
    for (k, row) in t.rows.iter().enumerate() {
        let mut cells: Vec<String> = t.labels.get(k).cloned().into_iter().collect();
        cells.extend(row.iter().map(|v| format!("{v:.4e}")));
        println!("{}", cells.join("  "));
    }
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring the worker pool")?;
    }
    let Some(last) = cli.command.last_stage() else {
        for p in export_plots(&cli.out)? {
            println!("{}", p.display());
        }
        return Ok(());
    };
    let cfg = load_config(cli)?;
    let wb = Workbench::new(cfg, &cli.out)?;
    let reports = wb.run_through(last)?;
    print_reports(&reports);
    match cli.command {
        Command::VerifyTransform => print_table(&wb.path("transform/identities.csv"), true)?,
        Command::Sweep => print_table(&wb.path("dns/rates.csv"), true)?,
        _ => {}
    }
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(e) if e.is_validation() => 2,
        Some(e) if e.is_numerical_quality() => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
