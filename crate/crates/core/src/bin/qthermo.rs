use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qthermo::cli::{describe, parse_scenario, run_scenario, ModeSelection, Output, RunOptions, Scenario};
use qthermo::witness::EntanglementMeasure;
use qthermo::Error;

/// Heat currents, entropy production and non-Markovianity witnesses for two
/// qubits in a common thermal bath.
#[derive(Parser)]
#[command(name = "qthermo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every analysis selected in the scenario's `outputs`.
    Run(Common),
    /// BLP trace-distance witness, for the listed pairs or a random search.
    Blp {
        #[command(flatten)]
        common: Common,
        /// Use the scenario's pairs (the default).
        #[arg(long, conflicts_with = "search")]
        pairs: bool,
        /// Sample Haar-random pairs instead: N of them, or the scenario's
        /// `blp_samples` when N is omitted.
        #[arg(long, value_name = "N", num_args = 0..=1)]
        search: Option<Option<usize>>,
    },
    /// RHP entanglement witness with an ancilla on qubit 1.
    Rhp {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = MeasureArg::Concurrence)]
        measure: MeasureArg,
        /// Report entanglement in units of ln 2.
        #[arg(long)]
        ln2_units: bool,
    },
    /// Gibbs state spectra and its PPT verdict; no time evolution.
    Thermal(Common),
    /// Parse and validate a scenario without running it.
    Validate { config: PathBuf },
}

#[derive(Args)]
struct Common {
    config: PathBuf,
    /// Override the scenario's mode.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Lone,
    Reduced,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureArg {
    Concurrence,
    Ree,
}

fn load(common: &Common) -> Result<Scenario, Error> {
    let mut s = parse_scenario(&common.config)?;
    if let Some(m) = common.mode {
        s.mode = match m {
            ModeArg::Lone => ModeSelection::Lone,
            ModeArg::Reduced => ModeSelection::Reduced,
            ModeArg::Both => ModeSelection::Both,
        };
    }
    Ok(s)
}

fn execute(cli: Cli) -> Result<(), Error> {
    let (scenario, out, opts) = match cli.command {
        Command::Validate { config } => {
            let s = parse_scenario(&config)?;
            println!("ok: {}", describe(&s));
            return Ok(());
        }
        Command::Run(common) => (load(&common)?, common.out, RunOptions::default()),
        Command::Blp { common, search, .. } => {
            let mut s = load(&common)?;
            s.outputs = vec![Output::Blp];
            let opts = RunOptions {
                blp_search: search.map(|n| n.unwrap_or(s.blp_samples)),
                ..RunOptions::default()
            };
            (s, common.out, opts)
        }
        Command::Rhp {
            common,
            measure,
            ln2_units,
        } => {
            let mut s = load(&common)?;
            s.outputs = vec![Output::Rhp];
            let opts = RunOptions {
                rhp_measure: match measure {
                    MeasureArg::Concurrence => EntanglementMeasure::Concurrence,
                    MeasureArg::Ree => EntanglementMeasure::RelEntropy,
                },
                ln2_units,
                ..RunOptions::default()
            };
            (s, common.out, opts)
        }
        Command::Thermal(common) => {
            let mut s = load(&common)?;
            s.outputs = vec![Output::Thermal];
            (s, common.out, RunOptions::default())
        }
    };
    let summary = run_scenario(&scenario, &out, &opts)?;
    for line in &summary.lines {
        println!("{line}");
    }
    for f in &summary.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() {
                3
            } else if matches!(e, Error::Io(_)) {
                1
            } else {
                2
            })
        }
    }
}
