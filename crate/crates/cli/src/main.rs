use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lifeval_core::engine::{
    run_algorithm1, run_algorithm2, second_life_analysis, EolScenarioSet, MarketDay, RegulationPolicy, StageMode,
};
use lifeval_core::io::market::{self, PRICE_HEADER, REG_PRICE_HEADER, SIGNAL_HEADER};
use lifeval_core::io::report::{self, RunManifest, SECOND_LIFE_FILE, SURFACE_FILE};
use lifeval_core::io::Config;
use lifeval_core::{Error, Result, ValueSurface};

#[derive(Parser)]
#[command(name = "lifeval", version, about = "Value battery capacity over its state of health")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a value surface by backward induction.
    Value {
        #[command(subcommand)]
        mode: ValueMode,
    },
    /// Compare a new and an 80% SoH battery across end-of-life scenarios.
    SecondLife {
        #[arg(long, value_enum)]
        mode: Mode,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Re-check the invariants of a surface written to DIR.
    Check {
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum ValueMode {
    /// Optimized daily price arbitrage.
    Arbitrage {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Frequency regulation under the SoC-band policy.
    Regulation {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Arbitrage,
    Regulation,
}

impl From<Mode> for StageMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Arbitrage => StageMode::Arbitrage,
            Mode::Regulation => StageMode::Regulation,
        }
    }
}

#[derive(Args)]
struct DataArgs {
    /// Five-minute energy prices (`timestamp,price_usd_per_mwh`).
    #[arg(long)]
    prices: Option<PathBuf>,
    /// Two-second regulation signal (`timestamp,signal`).
    #[arg(long)]
    signal: Option<PathBuf>,
    /// Hourly regulation prices (`timestamp,regd_price_usd_per_mw`).
    #[arg(long = "reg-prices")]
    reg_prices: Option<PathBuf>,
    /// Generate synthetic market data instead, e.g. `seed=1`.
    #[arg(long, value_name = "seed=<s>", value_parser = parse_seed)]
    synth: Option<u64>,
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the configured horizon.
    #[arg(long)]
    days: Option<usize>,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

fn parse_seed(s: &str) -> std::result::Result<u64, String> {
    let v = s.strip_prefix("seed=").unwrap_or(s);
    v.parse().map_err(|_| format!("expected seed=<integer>, got '{s}'"))
}

struct Market {
    days: Vec<MarketDay>,
    inputs: Vec<PathBuf>,
}

fn load_config(common: &CommonArgs, mode: StageMode, seed: Option<u64>) -> Result<Config> {
    let mut cfg = match &common.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    cfg.run.mode = mode;
    if let Some(d) = common.days {
        cfg.run.horizon_days = d;
    }
    if let Some(s) = seed {
        cfg.run.seed = s;
    }
    cfg.run.validate()?;
    Ok(cfg)
}

fn load_market(data: &DataArgs, cfg: &Config, out: &Path) -> Result<Market> {
    let n = cfg.run.horizon_days;
    let s = cfg.synth;
    let capacity = cfg.run.offered_fraction * cfg.battery.power_mw;
    let mut inputs = Vec::new();
    let days = match cfg.run.mode {
        StageMode::Arbitrage => {
            let series = match (&data.prices, data.synth) {
                (Some(p), None) => {
                    inputs.push(p.clone());
                    market::load_price_csv(p)?
                }
                (None, Some(seed)) => {
                    let series = market::synth_prices(seed, n, s.price_base, s.price_amplitude, s.price_noise_sd)?;
                    let path = out.join("synth_prices.csv");
                    series.write_csv(BufWriter::new(fs::File::create(&path)?), PRICE_HEADER)?;
                    inputs.push(path);
                    series
                }
                _ => return Err(Error::Invalid("give exactly one of --prices or --synth".into())),
            };
            market::price_days(&series)
        }
        StageMode::Regulation => {
            let (signal, prices) = match (&data.signal, &data.reg_prices, data.synth) {
                (Some(sig), Some(pr), None) => {
                    inputs.push(sig.clone());
                    inputs.push(pr.clone());
                    (market::load_signal_csv(sig)?, market::load_reg_price_csv(pr)?)
                }
                (None, None, Some(seed)) => {
                    let sig = market::synth_signal(seed, n)?;
                    let pr = market::synth_reg_prices(seed, n, s.reg_price_base, s.reg_price_amplitude, s.reg_price_noise_sd)?;
                    let sp = out.join("synth_signal.csv");
                    sig.write_csv(BufWriter::new(fs::File::create(&sp)?), SIGNAL_HEADER)?;
                    let pp = out.join("synth_reg_prices.csv");
                    pr.write_csv(BufWriter::new(fs::File::create(&pp)?), REG_PRICE_HEADER)?;
                    inputs.push(sp);
                    inputs.push(pp);
                    (sig, pr)
                }
                _ => return Err(Error::Invalid("give --signal and --reg-prices, or --synth".into())),
            };
            market::regulation_days(&signal, &prices, capacity)?
        }
    };
    Ok(Market { days, inputs })
}

fn value(mode: StageMode, data: &DataArgs, common: &CommonArgs) -> Result<()> {
    let cfg = load_config(common, mode, data.synth)?;
    fs::create_dir_all(&common.out)?;
    let market = load_market(data, &cfg, &common.out)?;
    let manifest = RunManifest::begin(&common.out, &cfg, &market.inputs)?;
    let out = match mode {
        StageMode::Arbitrage => run_algorithm1(&cfg.run, &cfg.battery, &market.days)?,
        StageMode::Regulation => {
            let policy = RegulationPolicy {
                params: cfg.battery,
                config: cfg.run.clone(),
            };
            run_algorithm2(&cfg.run, &cfg.battery, &market.days, &policy)?
        }
    };
    let files = report::write_run(&common.out, &format!("value {mode}"), &cfg, &out)?;
    manifest.finish(&common.out, &files)?;
    eprintln!(
        "{} days x {} samples in {:.1} s; value at 100% SoH on day 1: {:.2} USD",
        out.surface.days(),
        out.surface.grid().len(),
        out.total_seconds,
        out.surface.value(0, 0)
    );
    Ok(())
}

fn second_life(mode: StageMode, data: &DataArgs, common: &CommonArgs) -> Result<()> {
    let cfg = load_config(common, mode, data.synth)?;
    fs::create_dir_all(&common.out)?;
    let market = load_market(data, &cfg, &common.out)?;
    let manifest = RunManifest::begin(&common.out, &cfg, &market.inputs)?;
    let rep = second_life_analysis(&cfg.run, &cfg.battery, &market.days, &EolScenarioSet::default())?;
    let path = common.out.join(SECOND_LIFE_FILE);
    report::write_second_life_csv(BufWriter::new(fs::File::create(&path)?), &rep)?;
    manifest.finish(&common.out, &[path])?;
    Ok(())
}

/// Returns whether the surface is clean.
fn check(dir: &Path) -> Result<bool> {
    let surface = ValueSurface::read_csv(&dir.join(SURFACE_FILE))?;
    // values are written with six decimals
    let found = surface.violations_with(1e-6, 1e-6);
    for v in &found {
        eprintln!("day {}, SoH {:.2}%: {:?}", v.day + 1, v.soh_pct, v.kind);
    }
    if found.is_empty() {
        eprintln!("{}: {} days x {} samples, no violations", dir.display(), surface.days(), surface.grid().len());
    }
    Ok(found.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Value { mode } => match mode {
            ValueMode::Arbitrage { data, common } => value(StageMode::Arbitrage, data, common),
            ValueMode::Regulation { data, common } => value(StageMode::Regulation, data, common),
        },
        Command::SecondLife { mode, data, common } => second_life((*mode).into(), data, common),
        Command::Check { out } => match check(out) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(1),
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
