// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ringcap::cli::{init_threads, run, Command, RunConfig, EXIT_ERROR};
use ringcap::inequalities::CapacityMode;
use ringcap::report::to_json;

#[derive(Parser)]
#[command(
    name = "ringcap",
    version,
    about = "Ring condenser capacities and distortion checks"
)]
struct Cli {
    /// TOML run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Capacity of one condenser.
    Cap(Flags),
    /// Distortion norm of a mapping.
    Distort(Flags),
    /// Ring capacity inequality over a condenser family.
    VerifyRing(Flags),
    /// Set function variation over a box partition.
    Setfunc(Flags),
    /// Capacitary metric axioms and Lipschitz check.
    Metric(Flags),
    /// Acceptance battery.
    Suite(Flags),
}

#[derive(Args, Default)]
struct Flags {
    #[arg(long, allow_negative_numbers = true)]
    p: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    q: Option<f64>,
    /// Grid cells per unit length.
    #[arg(long)]
    res: Option<usize>,
    #[arg(long)]
    map: Option<String>,
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    shape: Option<String>,
    #[arg(long)]
    rings: Option<String>,
    /// numeric | oracle-when-radial
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    points: Option<String>,
    #[arg(long)]
    pairs: Option<String>,
    #[arg(long)]
    partition: Option<usize>,
    #[arg(long)]
    budget: Option<usize>,
    /// Criteria by number or name, comma separated.
    #[arg(long, value_delimiter = ',')]
    criteria: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build(cli: Cli) -> ringcap::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    let (command, f) = match cli.command {
        Cmd::Cap(f) => (Command::Cap, f),
        Cmd::Distort(f) => (Command::Distort, f),
        Cmd::VerifyRing(f) => (Command::VerifyRing, f),
        Cmd::Setfunc(f) => (Command::Setfunc, f),
        Cmd::Metric(f) => (Command::Metric, f),
        Cmd::Suite(f) => (Command::Suite, f),
    };
    cfg.command = command;
    macro_rules! set {
        ($($field:ident),*) => { $( if f.$field.is_some() { cfg.$field = f.$field; } )* };
    }
    set!(p, q, res, map, domain, shape, rings, points, pairs, partition, budget);
    if let Some(m) = f.mode {
        cfg.mode = Some(match m.as_str() {
            "numeric" => CapacityMode::Numeric,
            "oracle-when-radial" => CapacityMode::OracleWhenRadial,
            other => {
                return Err(ringcap::Error::Unknown {
                    kind: "capacity mode",
                    name: other.to_string(),
                })
            }
        });
    }
    if !f.criteria.is_empty() {
        cfg.criteria = f.criteria;
    }
    if let Some(s) = f.seed {
        cfg.seed = s;
    }
    if f.out.is_some() {
        cfg.out_dir = f.out;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    init_threads();
    let outcome = build(Cli::parse()).and_then(|cfg| run(&cfg));
    match outcome {
        Ok(o) => {
            println!("{}", to_json(&o.summary).expect("summary serializes"));
            ExitCode::from(o.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
