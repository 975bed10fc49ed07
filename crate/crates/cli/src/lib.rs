//! Command-line front end for `hencky-core`.

pub mod commands;
pub mod config;
pub mod table;
pub mod verify;

use clap::{Parser, Subcommand};
use commands::{CliError, Output, RunOptions};
use config::RunConfig;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "hencky", version, about = "Cell-problem homogenization experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration (built-in defaults if omitted).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Seed (overrides `solver.seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Also write `(x, y)` series under `<out>/plot/`.
    #[arg(long, global = true)]
    pub plot_data: bool,
    /// Fill the `seconds` column.
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, Subcommand, PartialEq, Eq)]
pub enum Command {
    /// Cell values per strain and period.
    Homogenize,
    /// Vanishing-hardening sweep.
    Sweep,
    /// Recession values along rays.
    Recession,
    /// Dual cell problem at given stresses.
    Dual,
    /// Property suite.
    Verify,
    /// Discrete Helmholtz decomposition of test fields.
    Decompose,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Homogenize => "homogenize",
            Command::Sweep => "sweep",
            Command::Recession => "recession",
            Command::Dual => "dual",
            Command::Verify => "verify",
            Command::Decompose => "decompose",
        }
    }
}

pub fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(|e| CliError::Config(e.0))?,
        None => RunConfig::default_config(),
    };
    if let Some(s) = cli.seed {
        cfg.solver.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    if cli.jobs == 0 {
        return Err(CliError::Config("flag `--jobs`: must be at least 1".into()));
    }
    Ok(cfg)
}

fn write_output(dir: &Path, out: &Output, plot: bool) -> Result<Vec<PathBuf>, CliError> {
    let io = |e: std::io::Error| CliError::Failure(format!("writing {}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut written = vec![];
    for (name, table) in &out.tables {
        let path = dir.join(format!("{name}.csv"));
        table.save(&path).map_err(|e| CliError::Failure(format!("writing {}: {e}", path.display())))?;
        written.push(path);
    }
    if plot {
        let pdir = dir.join("plot");
        std::fs::create_dir_all(&pdir).map_err(io)?;
        for s in &out.series {
            let path = pdir.join(format!("{}.dat", s.name));
            let mut f = std::fs::File::create(&path).map_err(io)?;
            writeln!(f, "# x y").map_err(io)?;
            for (x, y) in &s.points {
                writeln!(f, "{x:.16e} {y:.16e}").map_err(io)?;
            }
            written.push(path);
        }
    }
    Ok(written)
}

/// Runs a parsed command line; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let cfg = load_config(cli)?;
    let opts = RunOptions { jobs: cli.jobs, timing: cli.timing };
    if cli.command == Command::Verify {
        let report = verify::run_suite(&cfg, &opts)?;
        let text = report.render();
        print!("{text}");
        std::fs::create_dir_all(&cfg.output_dir)
            .and_then(|_| std::fs::write(cfg.output_dir.join("verify.txt"), &text))
            .map_err(|e| CliError::Failure(format!("writing report: {e}")))?;
        if cli.plot_data {
            write_output(&cfg.output_dir, &Output::default(), true)?;
        }
        return Ok(if report.passed() { 0 } else { 1 });
    }
    let out = match cli.command {
        Command::Homogenize => commands::homogenize(&cfg, &opts)?,
        Command::Sweep => commands::sweep(&cfg, &opts)?,
        Command::Recession => commands::recession(&cfg, &opts)?,
        Command::Dual => commands::dual(&cfg, &opts)?,
        Command::Decompose => commands::decompose(&cfg, &opts)?,
        Command::Verify => unreachable!(),
    };
    for p in write_output(&cfg.output_dir, &out, cli.plot_data)? {
        println!("wrote {}", p.display());
    }
    Ok(0)
}
