use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use bml_core::harness::{fixture, fixture_names, fixture_source, render, ExperimentConfig, Format, Mode};
use bml_core::{Error, Result};
use clap::{Args, Parser, Subcommand};

/// Channel-selection simulator for opportunistic spectrum access.
#[derive(Parser)]
#[command(name = "bml", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact finite-horizon optimum for a prior.
    OptimalDp {
        #[command(flatten)]
        common: Common,
        /// Write the optimal policy tree as JSON.
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// Single-user Monte-Carlo loss.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Several users sharing channels through random backoff.
    Multiuser {
        #[command(flatten)]
        common: Common,
    },
    /// Grid over horizons or user counts, with fitted growth rates.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `T=1000,10000` or `K=2,4,8`; may be repeated.
        #[arg(long)]
        grid: Vec<String>,
    },
    /// List bundled fixtures, or print one.
    Fixtures {
        name: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long, conflicts_with = "fixture", required_unless_present = "fixture")]
    config: Option<PathBuf>,
    /// Name of a bundled fixture instead of a config file.
    #[arg(long)]
    fixture: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
    format: String,
    /// Write per-slot traces of replication 0 to this JSON file.
    #[arg(long)]
    trace: Option<PathBuf>,
}

impl Common {
    fn load(&self, mode: Mode) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.fixture) {
            (Some(path), _) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                ExperimentConfig::from_json(&text)?
            }
            (None, Some(name)) => fixture(name)?,
            (None, None) => return Err(Error::config("config", "pass --config or --fixture")),
        };
        cfg.mode = mode;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.trace |= self.trace.is_some();
        Ok(cfg)
    }
}

fn parse_grid(cfg: &mut ExperimentConfig, specs: &[String]) -> Result<()> {
    for spec in specs {
        let (key, values) = spec
            .split_once('=')
            .ok_or_else(|| Error::config("grid", format!("expected KEY=v1,v2 in `{spec}`")))?;
        let parse = |field: &str| -> Result<Vec<u64>> {
            values
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<u64>()
                        .map_err(|_| Error::config(field, format!("not an integer: `{v}`")))
                })
                .collect()
        };
        match key.trim() {
            "T" | "t" => cfg.t_grid = Some(parse("t_grid")?),
            "K" | "k" => {
                let ks = parse("k_grid")?;
                let ks = ks
                    .into_iter()
                    .map(|k| u32::try_from(k).map_err(|_| Error::config("k_grid", "too many users")))
                    .collect::<Result<Vec<_>>>()?;
                cfg.k_grid = Some(ks);
            }
            other => return Err(Error::config("grid", format!("unknown grid key `{other}`"))),
        }
    }
    cfg.validate()
}

fn write_or_print(path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))
}

fn run(common: &Common, cfg: &ExperimentConfig, policy: Option<&PathBuf>) -> Result<()> {
    let output = bml_core::harness::run_experiment(cfg)?;
    let format: Format = common.format.parse()?;
    let text = render(&output.rows, format)?;
    if let (Some(path), Some(tree)) = (policy, &output.policy) {
        write_or_print(Some(path), &to_json(tree)?)?;
    }
    if let Some(path) = &common.trace {
        write_or_print(Some(path), &to_json(&output.traces)?)?;
    }
    write_or_print(common.out.as_ref(), &text)
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::OptimalDp { common, policy } => {
            let cfg = common.load(Mode::Dp)?;
            run(&common, &cfg, policy.as_ref())
        }
        Command::Simulate { common } => {
            let cfg = common.load(Mode::Simulate)?;
            run(&common, &cfg, None)
        }
        Command::Multiuser { common } => {
            let cfg = common.load(Mode::Multiuser)?;
            run(&common, &cfg, None)
        }
        Command::Sweep { common, grid } => {
            let mut cfg = common.load(Mode::Sweep)?;
            parse_grid(&mut cfg, &grid)?;
            run(&common, &cfg, None)
        }
        Command::Fixtures { name: None } => {
            for n in fixture_names() {
                println!("{n}");
            }
            Ok(())
        }
        Command::Fixtures { name: Some(n) } => {
            let text = fixture_source(&n)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown fixture `{n}`")))?;
            print!("{text}");
            Ok(())
        }
    }
}

fn error_json(e: &Error) -> serde_json::Value {
    let mut obj = serde_json::json!({
        "error": e.kind(),
        "message": e.to_string(),
    });
    if let Error::ConfigInvalid { field, .. } = e {
        obj["field"] = serde_json::Value::String(field.clone());
    }
    obj
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::FAILURE
        }
    }
}
