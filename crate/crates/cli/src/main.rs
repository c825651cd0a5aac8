use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;
use shifttest_cli::commands::{cmd_bound, cmd_choose_m, cmd_test, load_scm};
use shifttest_cli::{ExperimentName, ExperimentSpec};

/// Hypothesis tests about a shifted distribution from observed data.
#[derive(Debug, Parser)]
#[command(name = "shifttest", version)]
struct Cli {
    /// Master seed; overrides the one in a config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for experiments; SHIFTTEST_THREADS takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Replications per grid point.
    #[arg(long, global = true)]
    replications: Option<usize>,
    /// Use the sample sizes and sweeps of the original study.
    #[arg(long, global = true)]
    paper_scale: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one test from a JSON config and print the result as JSON.
    Test {
        config: PathBuf,
        /// Data CSV; defaults to the config's `data` field.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run a simulation study and write rejection rates as CSV.
    Experiment {
        name: ExperimentName,
        /// Replace a grid axis, e.g. `--set n=500,1000`.
        #[arg(long = "set", value_parser = parse_axis)]
        set: Vec<(String, Vec<f64>)>,
    },
    /// Finite-sample level bound, or the largest admissible resample size.
    Bound {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: Option<usize>,
        /// Second moment of the normalized weights.
        #[arg(long)]
        k: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha_phi: f64,
        #[arg(long)]
        alpha_psi: Option<f64>,
    },
    /// Suggest resample sizes for a JSON config.
    ChooseM {
        config: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Simulate a data set from a bundled model or an SCM JSON file.
    Simulate {
        /// linear_ci, mixture_ci, verma_gaussian, verma_nonlinear, ipw_chain or a path.
        model: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
        #[arg(long, default_value_t = 1)]
        tau: u32,
    },
}

fn parse_axis(s: &str) -> Result<(String, Vec<f64>), String> {
    let (name, values) = s
        .split_once('=')
        .ok_or_else(|| format!("expected axis=v1,v2,..., got `{s}`"))?;
    let values = values
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((name.trim().to_string(), values))
}

fn threads(flag: Option<usize>) -> Result<usize> {
    if let Ok(v) = std::env::var("SHIFTTEST_THREADS") {
        return v
            .trim()
            .parse()
            .with_context(|| format!("SHIFTTEST_THREADS must be a count, got `{v}`"));
    }
    Ok(flag.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())))
}

fn output(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json(out: Option<&Path>, value: &impl serde::Serialize) -> Result<()> {
    let mut w = output(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Test { config, data } => {
            let result = cmd_test(&config, data.as_deref(), cli.seed)?;
            write_json(out, &result)
        }
        Command::Experiment { name, set } => {
            let mut spec = ExperimentSpec::new(name).with_seed(cli.seed.unwrap_or(0));
            spec.paper_scale = cli.paper_scale;
            spec.replications = cli.replications;
            spec.grid = set;
            let report = spec.run(threads(cli.threads)?)?;
            report.write_csv(output(out)?)?;
            let meta = json!({
                "experiment": name.as_str(),
                "seed": spec.seed,
                "paper_scale": spec.paper_scale,
                "replications": report.rows.first().map(|r| r.replications),
                "grid_overrides": spec.grid,
                "model": report.metadata,
            });
            match out {
                Some(p) => {
                    let mut side = p.as_os_str().to_owned();
                    side.push(".json");
                    write_json(Some(Path::new(&side)), &meta)
                }
                None => {
                    eprintln!("{meta}");
                    Ok(())
                }
            }
        }
        Command::Bound {
            n,
            m,
            k,
            alpha_phi,
            alpha_psi,
        } => write_json(out, &cmd_bound(n, m, k, alpha_phi, alpha_psi)?),
        Command::ChooseM { config, data } => write_json(out, &cmd_choose_m(&config, data.as_deref(), cli.seed)?),
        Command::Simulate { model, n, theta, tau } => {
            let scm = load_scm(&model, theta, tau)?;
            let stream = shifttest::RandomStream::new(cli.seed.unwrap_or(0), 0);
            let data = scm.simulate(n, stream)?;
            data.write_csv(output(out)?)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
