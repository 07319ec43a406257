use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mtj_neuron::characterization::CurrentGrid;
use mtj_neuron::error::{Error, Result};
use mtj_neuron::io::run::{self, PulseDemoSpec};
use mtj_neuron::io::{Checkpoint, DatasetKind, RunConfig};

#[derive(Parser)]
#[command(name = "mtj-neuron", version, about = "Stochastic MTJ neuron simulator")]
struct Cli {
    /// TOML run configuration; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: io.output_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides magnetics.seed and network.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// m(t) under a train of sub-threshold pulses on the 1.5 nm disk.
    PulseDemo(PulseDemoArgs),
    /// Monte Carlo switching-probability table.
    Sweep(SweepArgs),
    /// Barrier calibration report.
    Calibrate(CalibrateArgs),
    /// Train the crossbar network with STDP and homeostasis.
    Train(TrainArgs),
    /// Evaluate a checkpoint with plasticity off.
    Test(TestArgs),
    /// Per-spike energy decomposition of a training run.
    EnergyReport(EnergyArgs),
}

#[derive(Args)]
struct PulseDemoArgs {
    /// Pulse amplitude as a fraction of the single-pulse critical amplitude.
    #[arg(long)]
    fraction: Option<f64>,
    #[arg(long)]
    pulses: Option<usize>,
    /// Pulse width (s).
    #[arg(long)]
    width: Option<f64>,
    /// Gap between pulses (s).
    #[arg(long)]
    gap: Option<f64>,
    #[arg(long)]
    temperature: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    /// Barrier heights in k_B·T.
    #[arg(long, value_delimiter = ',')]
    eb: Option<Vec<f64>>,
    /// Pulse widths (s).
    #[arg(long, value_delimiter = ',')]
    tpw: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    /// Explicit current grid (A) instead of the automatic one.
    #[arg(long, value_delimiter = ',')]
    currents: Option<Vec<f64>>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long, value_delimiter = ',')]
    eb: Option<Vec<f64>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetArg {
    Synth,
    Idx,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long, value_enum)]
    dataset: Option<DatasetArg>,
    /// Images per class (synth) or image cap (idx).
    #[arg(long)]
    images: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Saved `sweep.json` supplying the neuron's switching curve.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Also write every energy event to energy_events.csv.
    #[arg(long)]
    energy_events: bool,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Default: <out>/checkpoint.json.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Default: <out>/neuron_model.json when present.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args)]
struct EnergyArgs {
    /// Default: <out>/stats.json.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Default: <out>/energy_events.csv when present.
    #[arg(long)]
    events: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) | Error::Protocol { .. } | Error::OverlappingPulses { .. } => 2,
        Error::Io { .. }
        | Error::IdxMagic { .. }
        | Error::IdxTruncated { .. }
        | Error::IdxCountMismatch { .. }
        | Error::Json(_)
        | Error::Checkpoint(_)
        | Error::EmptyDataset => 3,
        Error::Numerical(_)
        | Error::NonMonotone { .. }
        | Error::BadSlice(_)
        | Error::NotBracketed { .. }
        | Error::UnreachableBarrier { .. }
        | Error::NoInPlaneAnisotropy { .. } => 4,
    }
}

fn apply_data(cfg: &mut RunConfig, data: &DataArgs) {
    if let Some(d) = data.dataset {
        cfg.io.dataset = match d {
            DatasetArg::Synth => DatasetKind::Synth,
            DatasetArg::Idx => DatasetKind::Idx,
        };
    }
    if let Some(n) = data.images {
        match cfg.io.dataset {
            DatasetKind::Synth => cfg.io.images_per_class = n,
            DatasetKind::Idx => cfg.io.limit = n,
        }
    }
}

fn existing(path: PathBuf) -> Option<PathBuf> {
    path.exists().then_some(path)
}

fn execute(cli: Cli) -> Result<Vec<PathBuf>> {
    let explicit_config = cli.config.is_some();
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let out_of = |cfg: &RunConfig| cli.out.clone().unwrap_or_else(|| cfg.io.output_dir.clone());
    let seed = |cfg: &mut RunConfig| {
        if let Some(s) = cli.seed {
            cfg.magnetics.seed = s;
            cfg.network.seed = s;
        }
    };
    seed(&mut cfg);
    let out = out_of(&cfg);

    match &cli.command {
        Command::PulseDemo(a) => {
            let d = PulseDemoSpec::default();
            let spec = PulseDemoSpec {
                fraction: a.fraction.unwrap_or(d.fraction),
                pulses: a.pulses.unwrap_or(d.pulses),
                width: a.width.unwrap_or(d.width),
                gap: a.gap.unwrap_or(d.gap),
                temperature: a.temperature.unwrap_or(d.temperature),
                ..d
            };
            cfg.validate()?;
            run::run_pulse_demo(&cfg, &spec, &out)
        }
        Command::Sweep(a) => {
            if let Some(eb) = &a.eb {
                cfg.sweep.barrier_targets = eb.clone();
            }
            if let Some(tpw) = &a.tpw {
                cfg.sweep.pulse_widths = tpw.clone();
            }
            if let Some(n) = a.trials {
                cfg.sweep.trials_per_point = n;
            }
            if let Some(c) = &a.currents {
                cfg.sweep.currents = CurrentGrid::Explicit { currents: c.clone() };
            }
            cfg.validate()?;
            run::run_sweep(&cfg, &out)
        }
        Command::Calibrate(a) => {
            if let Some(eb) = &a.eb {
                cfg.sweep.barrier_targets = eb.clone();
            }
            cfg.validate()?;
            run::run_calibrate(&cfg, &out)
        }
        Command::Train(a) => {
            apply_data(&mut cfg, &a.data);
            cfg.io.energy_events |= a.energy_events;
            cfg.validate()?;
            run::run_train(&cfg, a.table.as_deref(), &out)
        }
        Command::Test(a) => {
            let ck_path = a.checkpoint.clone().unwrap_or_else(|| out.join("checkpoint.json"));
            if !explicit_config {
                cfg = Checkpoint::load(&ck_path)?.config;
                seed(&mut cfg);
            }
            apply_data(&mut cfg, &a.data);
            cfg.validate()?;
            let model = a.model.clone().or_else(|| existing(out.join("neuron_model.json")));
            run::run_test(&cfg, &ck_path, model.as_deref(), &out)
        }
        Command::EnergyReport(a) => {
            cfg.validate()?;
            let stats = a.stats.clone().unwrap_or_else(|| out.join("stats.json"));
            let events = a.events.clone().or_else(|| existing(out.join("energy_events.csv")));
            run::run_energy_report(&cfg, &stats, events.as_deref(), &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
