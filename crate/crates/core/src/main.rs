use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use metacrystal::scenario::{self, ScenarioKind};
use metacrystal::Error;

#[derive(Parser)]
#[command(name = "metacrystal", version, about = "One-way transport in lattices and self-imaging cavities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dispersion, hopping table and symmetry report for a band.
    Band(Common),
    /// Wave-packet propagation on a lattice.
    Lattice(Common),
    /// Driven-damped round trips of the resonator.
    Cavity(Common),
    /// Disorder ensemble over lattice or cavity runs.
    Ensemble {
        #[command(flatten)]
        common: Common,
        /// Worker threads (defaults to one per core).
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (defaults to the config `output` field, then `out/<name>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(common: &Common, expected: ScenarioKind, workers: Option<usize>) -> Result<PathBuf, Error> {
    let cfg = scenario::parse_config(&common.config)?.with_seed(common.seed);
    if cfg.kind != expected {
        return Err(Error::Schema {
            pointer: "/kind".into(),
            message: format!("expected {}, found {}", expected.as_str(), cfg.kind.as_str()),
        });
    }
    let out = common
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| {
            let stem = common.config.file_stem().map(|s| s.to_string_lossy().into_owned());
            PathBuf::from("out").join(cfg.name.clone().or(stem).unwrap_or_else(|| "run".into()))
        });
    let outcome = scenario::run_scenario(&cfg, &out, workers)?;
    for f in &outcome.files {
        eprintln!("wrote {}", f.display());
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Band(c) => execute(c, ScenarioKind::BandReport, None),
        Command::Lattice(c) => execute(c, ScenarioKind::LatticeRun, None),
        Command::Cavity(c) => execute(c, ScenarioKind::CavityRun, None),
        Command::Ensemble { common, workers } => execute(common, ScenarioKind::EnsembleRun, *workers),
    };
    match result {
        Ok(_) => ExitCode::SUCCESS,
        Err(e @ Error::Schema { .. }) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
