use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mmwave_mc::channel::generate_channel;
use mmwave_mc::estimator::Registry;
use mmwave_mc::harness::{
    build_estimators, rank_distribution, read_csv, run_sweep, run_trial, summarize, sweep_points, write_csv,
    ExperimentConfig,
};
use mmwave_mc::Error;

#[derive(Parser)]
#[command(name = "mmwave-mc", version, about = "Matrix-completion channel estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Ula,
    Uspa,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// JSON experiment config.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in system preset, used when no config file is given.
    #[arg(long, value_enum, default_value = "ula")]
    preset: Preset,
    /// Overrides the estimator list (comma separated).
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<String>>,
    /// Overrides the trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path).map_err(|e| match e {
                Error::Io(io) => Error::Config(format!("{}: {io}", path.display())),
                other => other,
            })?,
            None => match self.preset {
                Preset::Ula => ExperimentConfig::ula(),
                Preset::Uspa => ExperimentConfig::uspa(),
            },
        };
        if let Some(e) = &self.estimators {
            cfg.estimators = e.clone();
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print a config document (the preset, or the loaded file after defaults).
    PrintConfig {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Draw one channel realization and write it as JSON.
    GenChannel {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Channel seed; defaults to the master seed.
        #[arg(long)]
        channel_seed: Option<u64>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run a single trial and print NMSE, rank and flops per estimator.
    Estimate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Sweep point index.
        #[arg(long, default_value_t = 0)]
        point: usize,
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Run the configured sweep and write CSV records.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Also print per-point means to stderr.
        #[arg(long)]
        summary: bool,
    },
    /// Rank histograms (r_sub, GCG-Alt, OMP) from a sweep CSV, as JSON.
    RankHist {
        input: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Config(_) | Error::UnknownEstimator(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::PrintConfig { cfg } => {
            println!("{}", cfg.load()?.to_json()?);
        }
        Command::GenChannel { cfg, channel_seed, out } => {
            let cfg = cfg.load()?;
            let (tx, rx) = cfg.system.geometries()?;
            let r = generate_channel(&cfg.channel.params(), &tx, &rx, channel_seed.unwrap_or(cfg.seed))?;
            let mut w = output(&out)?;
            writeln!(w, "{}", r.to_json()?)?;
            w.flush()?;
        }
        Command::Estimate { cfg, point, trial } => {
            let cfg = cfg.load()?;
            let points = sweep_points(&cfg);
            let p = points
                .get(point)
                .ok_or_else(|| Error::Config(format!("point {point} out of range (have {})", points.len())))?;
            let estimators = build_estimators(&cfg, &Registry::builtin())?;
            let records = run_trial(&cfg, &estimators, p, trial);
            let mut failed = false;
            println!("estimator\tnmse_db\tr_hat\tr_sub\tflops\tstatus");
            for r in &records {
                println!("{}\t{:.3}\t{}\t{}\t{:.4e}\t{}", r.estimator, r.nmse_db, r.r_hat, r.r_sub, r.flops, r.status);
                failed |= !r.is_ok();
            }
            if failed {
                return Ok(ExitCode::from(3));
            }
        }
        Command::Sweep { cfg, out, summary } => {
            let cfg = cfg.load()?;
            let records = run_sweep(&cfg)?;
            write_csv(output(&out)?, &records, &cfg.se.snr_db)?;
            if summary {
                for g in summarize(&records) {
                    let coords: Vec<String> = g.coords.iter().map(|(a, v)| format!("{a}={v}")).collect();
                    eprintln!(
                        "{}\t{}\tnmse_db={:.3}\tr_hat={:.2}\tfailures={}",
                        coords.join(" "),
                        g.estimator,
                        g.mean_nmse_db,
                        g.mean_r_hat,
                        g.failures
                    );
                }
            }
        }
        Command::RankHist { input, out } => {
            let file = File::open(&input).map_err(|e| Error::Config(format!("{}: {e}", input.display())))?;
            let (records, _) = read_csv(file).map_err(|e| Error::Config(e.to_string()))?;
            let dist = rank_distribution(&records)?;
            let mut w = output(&out)?;
            writeln!(w, "{}", serde_json::to_string_pretty(&dist)?)?;
            w.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => fail(&e),
    }
}
