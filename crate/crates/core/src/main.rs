use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use ising_battery::runner::{self, RunConfig};
use ising_battery::Error;

/// Charging simulations of a transverse-field Ising chain battery.
#[derive(Debug, Parser)]
#[command(name = "ising-battery", version)]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Master seed (overrides `noise.seed`).
    #[arg(long)]
    seed: Option<u64>,

    /// Noise sweep, e.g. `xi=0,0.01,0.1,1`.
    #[arg(long, conflicts_with = "validate")]
    sweep: Option<String>,

    /// Compare against the exact chain and a trajectory ensemble.
    #[arg(long)]
    validate: bool,
}

const LOG_ENV: &str = "ISING_BATTERY_LOG";

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. } | Error::ConfigParse(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn execute(cli: &Cli) -> ising_battery::Result<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.output.dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        config.noise.get_or_insert_with(Default::default).seed = seed;
    }

    if cli.validate {
        let report = runner::validate(&config)?;
        let path = runner::write_validation(&config, &report)?;
        if let Some(o) = &report.chain_oracle {
            println!(
                "chain oracle N={}: max deviation {:.3e} ({})",
                o.n_sites,
                o.max_deviation,
                if o.pass { "pass" } else { "FAIL" }
            );
        }
        if let Some(t) = &report.trajectory_check {
            println!(
                "trajectory mean vs averaged (M={}, xi={}): max deviation {:.3e}, ratio {:.2} ({})",
                t.trajectories,
                t.xi,
                t.max_deviation,
                t.max_ratio,
                if t.pass { "pass" } else { "FAIL" }
            );
        }
        println!("report: {}", path.display());
        return Ok(());
    }

    if let Some(spec) = &cli.sweep {
        let xi = runner::parse_sweep(spec)?;
        let rows = runner::run_sweep(&config, &xi)?;
        for r in rows {
            println!(
                "xi={} dE*={:.6e} ergotropy*={:.6e}",
                r.xi, r.star.de, r.star.ergotropy
            );
        }
        println!(
            "summary: {}",
            config.output.dir.join("summary.csv").display()
        );
        return Ok(());
    }

    let report = runner::run(&config)?;
    println!(
        "t*={} dE*={:.6e} ergotropy*={:.6e}",
        report.star.t_star, report.star.de, report.star.ergotropy
    );
    println!("output: {}", report.out_dir.display());
    Ok(())
}
