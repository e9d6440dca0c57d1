use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use nlrd_core::gns::{estimate_cstar, SeedFamily};
use nlrd_core::RadialGrid;
use nlrd_harness::manifest::ArtifactWriter;
use nlrd_harness::{execute, load_scenario, output, presets, sweep, Axis, ExecOptions, Scenario, Status};

#[derive(Parser)]
#[command(name = "nlrd", version, about = "Radial nonlocal reaction-diffusion runs")]
struct Cli {
    /// Output directory (default: [output].dir of the scenario, else runs/<name>)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Seed family for the C* optimizer: gaussian, tent, poly or all
    #[arg(long, global = true, default_value = "all")]
    seed_profile: String,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario file or a preset name
    Run { config: String },
    /// Run the scenario once per value of one parameter
    Sweep {
        config: String,
        #[arg(long)]
        axis: Axis,
        /// Comma-separated values
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<String>,
    },
    /// Estimate the sharp GNS constant C* in dimension n
    Cstar {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2.5)]
        radius: f64,
        #[arg(long, default_value_t = 1001)]
        count: usize,
    },
    /// List shipped presets, or print one as a scenario file
    Presets { name: Option<String> },
}

fn seeds(profile: &str) -> anyhow::Result<Vec<SeedFamily>> {
    if profile == "all" {
        return Ok(SeedFamily::ALL.to_vec());
    }
    match SeedFamily::parse(profile) {
        Some(s) => Ok(vec![s]),
        None => bail!("unknown seed profile {profile:?}; expected gaussian, tent, poly or all"),
    }
}

fn scenario(config: &str) -> anyhow::Result<Scenario> {
    let path = Path::new(config);
    if !path.exists() {
        if let Some(p) = presets::find(config) {
            return Ok(Scenario::from_toml(p.text, &format!("preset {}", p.name))?);
        }
    }
    Ok(load_scenario(path)?)
}

fn out_dir(cli: &Option<PathBuf>, s: &Scenario) -> PathBuf {
    cli.clone()
        .or_else(|| s.output.dir.clone())
        .unwrap_or_else(|| Path::new("runs").join(&s.name))
}

fn run(cli: Cli) -> anyhow::Result<Status> {
    let opts = ExecOptions {
        seeds: seeds(&cli.seed_profile)?,
        ..ExecOptions::default()
    };
    match cli.cmd {
        Cmd::Run { config } => {
            let s = scenario(&config)?;
            let dir = out_dir(&cli.out, &s);
            let m = execute(&s, &dir, &opts).with_context(|| format!("running {}", s.name))?;
            println!("{}: {} ({}) in {}", s.name, m.status.label(), m.outcome, dir.display());
            for v in &m.violations {
                println!("  violated: {v}");
            }
            Ok(m.status)
        }
        Cmd::Sweep { config, axis, values } => {
            let s = scenario(&config)?;
            let dir = out_dir(&cli.out, &s);
            let rep = sweep(&s, axis, &values, &dir, cli.workers, &opts)?;
            for p in &rep.points {
                match &p.result {
                    Ok(m) => println!("{axis} = {}: {} ({})", p.value, m.status.label(), m.outcome),
                    Err(e) => println!("{axis} = {}: error: {e}", p.value),
                }
            }
            println!("summary in {}", dir.join(nlrd_harness::sweep::SUMMARY_FILE).display());
            Ok(Status::Ok)
        }
        Cmd::Cstar { n, radius, count } => {
            let grid = Arc::new(RadialGrid::new(n, radius, count)?);
            let est = estimate_cstar(grid, &opts.gns_settings())?;
            println!("n          {n}");
            println!("alpha      {:.6}", est.alpha);
            println!("C*         {:.8}", est.cstar);
            println!("1/S_n      {:.8}", est.upper_bound);
            println!("m0_crit    {:.6}", est.m0_crit);
            println!("seed       {}", est.best_seed.name());
            println!("iterations {} (converged: {})", est.iterations, est.converged);
            if let Some(dir) = &cli.out {
                let mut w = ArtifactWriter::new(dir)?;
                w.write("cstar.json", &output::cstar_json(&est)?)?;
                w.write("profile.txt", &output::snapshot(&est.profile, 0.0)?)?;
            }
            Ok(Status::Ok)
        }
        Cmd::Presets { name: None } => {
            for p in presets::PRESETS {
                println!("{:<26} {}", p.name, p.summary);
            }
            Ok(Status::Ok)
        }
        Cmd::Presets { name: Some(name) } => match presets::find(&name) {
            Some(p) => {
                print!("{}", p.text);
                Ok(Status::Ok)
            }
            None => bail!("unknown preset {name:?}"),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(Status::Error.exit_code() as u8)
        }
    }
}
