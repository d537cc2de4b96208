use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dayahead::data::{
    generate_synthetic_dataset, make_forecasts, write_dataset, DatasetPaths, GeneratorConfig,
};
use dayahead::experiment::{config_from_manifest, Experiment, ExperimentConfig, STANDARD_RUNS};
use dayahead::strategy::StrategyKind;
use dayahead::{seeding, Error};

#[derive(Parser)]
#[command(name = "dayahead", version, about = "Day-ahead bidding experiments")]
struct Cli {
    /// Flat TOML experiment config, or a run manifest to replay.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed. Sets the data seed for generate-data and replaces the
    /// seed list for training commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Directory with prices.csv, weather.csv, profile.csv and
    /// (optionally) forecasts.csv, as written by generate-data.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Searchable {
    Timing,
    Opportunistic,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset as CSV files.
    GenerateData {
        #[arg(long)]
        days: Option<usize>,
        /// Generate prices independent of the weather.
        #[arg(long)]
        uncoupled: bool,
    },
    /// Optimize a parametric strategy with CMA-ES.
    Optimize {
        #[arg(long, value_enum)]
        strategy: Searchable,
    },
    /// Train the black-box policy with A2C.
    TrainRl {
        #[arg(long)]
        no_weather: bool,
    },
    /// Test a stored strategy file on every seed.
    Evaluate {
        #[arg(long)]
        params: PathBuf,
    },
    /// Retrain the policy for several battery capacities.
    SweepBattery {
        #[arg(long, value_delimiter = ',')]
        capacities: Option<Vec<f64>>,
    },
    /// Consolidate finished runs into tables and trace files.
    Report {
        #[arg(long, value_delimiter = ',')]
        runs: Option<Vec<String>>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::MissingArtifact(_) => 3,
        Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => 3,
        Error::Io { .. } | Error::Diverged(_) => 1,
        _ => 2,
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(p) if p.extension().is_some_and(|e| e == "json") => config_from_manifest(p)?,
        Some(p) => {
            let mut cfg = ExperimentConfig::load(p)?;
            cfg.resolve_paths(p.parent().unwrap_or(Path::new(".")));
            cfg
        }
        None => ExperimentConfig::default(),
    };
    if let Some(dir) = &cli.data {
        let paths = DatasetPaths::in_dir(dir);
        cfg.data.prices_file = Some(paths.prices);
        cfg.data.weather_file = Some(paths.weather);
        cfg.data.consumption_file = Some(paths.profile);
        cfg.data.forecasts_file = paths.forecasts.is_file().then_some(paths.forecasts);
    }
    if let Some(s) = cli.seed {
        if matches!(cli.command, Command::GenerateData { .. }) {
            cfg.data.data_seed = s;
        } else {
            cfg.run.seeds = vec![s];
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<(), Error> {
    use std::io::Write;
    let text = serde_json::to_string_pretty(v)?;
    // a closed pipe (e.g. `| head`) is not an error
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    Ok(())
}

fn generate(
    cfg: &ExperimentConfig,
    days: Option<usize>,
    uncoupled: bool,
    out: &Path,
) -> Result<(), Error> {
    let d = &cfg.data;
    let days = days.unwrap_or(d.num_days);
    let gen = if uncoupled || !d.weather_coupling {
        GeneratorConfig::uncoupled()
    } else {
        GeneratorConfig::default()
    };
    let ds = generate_synthetic_dataset(d.data_seed, days, &gen)?;
    let ds = make_forecasts(
        &ds,
        &d.forecast_config(),
        seeding::derive(d.data_seed, "forecasts"),
    )?;
    std::fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    write_dataset(&ds, &DatasetPaths::in_dir(out))?;
    let prices: Vec<f64> = ds.records().iter().map(|r| r.price).collect();
    let n = prices.len() as f64;
    let mean = |f: &dyn Fn(&dayahead::data::HourlyRecord) -> f64| {
        ds.records().iter().map(f).sum::<f64>() / n
    };
    print_json(&serde_json::json!({
        "days": ds.num_days(),
        "hours": ds.records().len(),
        "first_date": ds.date(0).to_string(),
        "last_date": ds.date(ds.num_days() - 1).to_string(),
        "price_mean": mean(&|r| r.price),
        "price_min": prices.iter().copied().fold(f64::INFINITY, f64::min),
        "price_max": prices.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        "cloudiness_mean": mean(&|r| f64::from(r.cloudiness)),
        "wind_speed_mean": mean(&|r| r.wind_speed),
        "temperature_mean": mean(&|r| r.temperature),
        "data_hash": ds.content_hash(),
    }))
}

fn run(cli: &Cli) -> Result<(), Error> {
    let mut cfg = load_config(cli)?;
    let out = &cli.out;
    match &cli.command {
        Command::GenerateData { days, uncoupled } => generate(&cfg, *days, *uncoupled, out),
        Command::Optimize { strategy } => {
            let kind = match strategy {
                Searchable::Timing => StrategyKind::Timing,
                Searchable::Opportunistic => StrategyKind::Opportunistic,
            };
            print_json(&Experiment::new(cfg)?.optimize(kind, out)?)
        }
        Command::TrainRl { no_weather } => {
            print_json(&Experiment::new(cfg)?.train_rl(!no_weather, out)?)
        }
        Command::Evaluate { params } => print_json(&Experiment::new(cfg)?.evaluate(params)?),
        Command::SweepBattery { capacities } => {
            if let Some(c) = capacities {
                cfg.run.battery_capacities = c.clone();
                cfg.validate()?;
            }
            print_json(&Experiment::new(cfg)?.sweep_battery(out)?)
        }
        Command::Report { runs } => {
            let runs: Vec<&str> = match runs {
                Some(r) => r.iter().map(String::as_str).collect(),
                None => STANDARD_RUNS.to_vec(),
            };
            print_json(&Experiment::new(cfg)?.report(out, &runs)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
