//! Experiment runs: data preparation, CMA-ES and A2C training per seed,
//! battery sweeps and the consolidated report.

use std::path::{Path, PathBuf};

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::report::{
    read_json, write_json, write_text, BalanceReport, BalanceRow, RunManifest, SeedResult, Traces,
};
use crate::data::{
    generate_synthetic_dataset, load_dataset, load_forecasts, make_forecasts, split_dataset,
    Dataset, GeneratorConfig, SplitSpec,
};
use crate::error::{Error, Result};
use crate::market::{DayResult, EnvConfig, Market};
use crate::nn::PolicyParams;
use crate::optim::{
    a2c_train, battery_sweep, cmaes_optimize, evaluate_strategy, simulate_strategy, A2cConfig,
    SweepRow,
};
use crate::seeding;
use crate::strategy::{
    BiddingStrategy, OpportunisticParams, StrategyKind, StrategyParams, TimingParams,
};

/// Run directory names, in report order.
pub const RUN_TIMING: &str = "timing";
pub const RUN_OPPORTUNISTIC: &str = "opportunistic";
pub const RUN_A2C_WEATHER: &str = "a2c-weather";
pub const RUN_A2C_NO_WEATHER: &str = "a2c-no-weather";
pub const STANDARD_RUNS: [&str; 4] = [
    RUN_TIMING,
    RUN_OPPORTUNISTIC,
    RUN_A2C_WEATHER,
    RUN_A2C_NO_WEATHER,
];

const MANIFEST: &str = "manifest.json";
const STRATEGY_FILE: &str = "strategy.json";
const POLICY_FILE: &str = "policy.json";
const TRAINING_LOG: &str = "training_log.csv";
const CMAES_HISTORY: &str = "cmaes_history.csv";
const SWEEP_DIR: &str = "sweep";

/// CMA-ES start for a parametric strategy: standard normal draws, with the
/// Opportunistic volume offsets shifted down by 2.
pub fn initial_search_point(kind: StrategyKind, seed: u64) -> Result<Vec<f64>> {
    let dim = match kind {
        StrategyKind::Timing => TimingParams::DIM,
        StrategyKind::Opportunistic => OpportunisticParams::DIM,
        StrategyKind::Blackbox => {
            return Err(Error::invalid("the black-box strategy has no search space"))
        }
    };
    let mut rng = seeding::child_rng(seed, "cmaes/init");
    let mut mean: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    if kind == StrategyKind::Opportunistic {
        for i in OpportunisticParams::volume_offset_indices() {
            mean[i] -= 2.0;
        }
    }
    Ok(mean)
}

/// Seed of the consumption noise used for a seed's test simulation.
pub fn test_seed(seed: u64) -> u64 {
    seeding::derive(seed, "test")
}

/// Load the configured files or generate the synthetic dataset, attach
/// forecasts and split it.
pub fn prepare_dataset(config: &ExperimentConfig) -> Result<Dataset> {
    let d = &config.data;
    let forecast_seed = seeding::derive(d.data_seed, "forecasts");
    let ds = if d.uses_files() {
        let (Some(p), Some(w), Some(c)) = (&d.prices_file, &d.weather_file, &d.consumption_file)
        else {
            return Err(Error::invalid("incomplete data file configuration"));
        };
        let mut ds = load_dataset(p, w, c)?;
        match &d.forecasts_file {
            Some(f) => {
                load_forecasts(&mut ds, f)?;
                ds
            }
            None => make_forecasts(&ds, &d.forecast_config(), forecast_seed)?,
        }
    } else {
        let gen = if d.weather_coupling {
            GeneratorConfig::default()
        } else {
            GeneratorConfig::uncoupled()
        };
        let ds = generate_synthetic_dataset(d.data_seed, d.num_days, &gen)?;
        make_forecasts(&ds, &d.forecast_config(), forecast_seed)?
    };
    split_dataset(&ds, &SplitSpec::Default)
}

fn seed_dir(seed: u64) -> String {
    format!("seed-{seed}")
}

/// Prepared dataset plus configuration; every command runs against one.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub dataset: Dataset,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let dataset = prepare_dataset(&config)?;
        Ok(Self { config, dataset })
    }

    fn manifest(&self, run: &str, results: Vec<SeedResult>) -> Result<RunManifest> {
        Ok(RunManifest {
            run: run.to_string(),
            config: serde_json::to_value(self.config.to_table())?,
            seeds: self.config.run.seeds.clone(),
            data_hash: self.dataset.content_hash(),
            test_days: self.dataset.require_splits()?.test,
            results,
        })
    }

    fn market(&self, include_weather: bool) -> Result<Market<'_>> {
        Market::new(&self.dataset, self.config.env.clone(), include_weather)
    }

    /// Market matching a strategy: black-box policies bring their own
    /// observation layout.
    fn market_for(
        &self,
        params: &StrategyParams,
        base: &Path,
    ) -> Result<(Market<'_>, Box<dyn BiddingStrategy>)> {
        match params {
            StrategyParams::Blackbox { policy_file } => {
                let policy = PolicyParams::load(base.join(policy_file))?;
                let env = EnvConfig {
                    price_scale: Some(policy.layout.price_scale),
                    ..self.config.env.clone()
                };
                let market = Market::new(&self.dataset, env, policy.layout.include_weather)?;
                Ok((market, Box::new(policy)))
            }
            _ => Ok((self.market(false)?, params.instantiate(base)?)),
        }
    }

    /// CMA-ES on the training range for each seed, then a test evaluation of
    /// the final mean. Writes `<out>/<kind>/`.
    pub fn optimize(&self, kind: StrategyKind, out: &Path) -> Result<BalanceRow> {
        let run = match kind {
            StrategyKind::Timing => RUN_TIMING,
            StrategyKind::Opportunistic => RUN_OPPORTUNISTIC,
            StrategyKind::Blackbox => {
                return Err(Error::invalid(
                    "the black-box strategy is trained with train-rl",
                ))
            }
        };
        let splits = *self.dataset.require_splits()?;
        let market = self.market(false)?;
        let dir = out.join(run);
        let mut results = Vec::new();
        for &seed in &self.config.run.seeds {
            let mean = initial_search_point(kind, seed)?;
            let objective_seed = seeding::derive(seed, "cmaes/objective");
            let decode = |x: &[f64]| -> Result<StrategyParams> {
                Ok(match kind {
                    StrategyKind::Timing => StrategyParams::Timing {
                        params: TimingParams::from_search(x).to_vec(),
                    },
                    _ => StrategyParams::Opportunistic { params: x.to_vec() },
                })
            };
            let objective = |x: &[f64]| -> f64 {
                let eval = || -> Result<f64> {
                    let s = decode(x)?.instantiate(Path::new("."))?;
                    evaluate_strategy(&market, s.as_ref(), splits.train, objective_seed)
                };
                eval().unwrap_or(f64::NAN)
            };
            let result = cmaes_optimize(
                objective,
                mean,
                &self.config.cmaes,
                seeding::derive(seed, "cmaes"),
            )?;
            let params = decode(&result.mean)?;
            let strategy = params.instantiate(Path::new("."))?;
            let income =
                evaluate_strategy(&market, strategy.as_ref(), splits.test, test_seed(seed))?;
            let sd = dir.join(seed_dir(seed));
            write_text(&sd.join(STRATEGY_FILE), &params.to_json()?)?;
            let mut hist = String::from("generation,best,median,sigma\n");
            for g in &result.history {
                hist.push_str(&format!(
                    "{},{},{},{}\n",
                    g.generation, g.best, g.median, g.sigma
                ));
            }
            write_text(&sd.join(CMAES_HISTORY), &hist)?;
            results.push(SeedResult {
                seed,
                test_income: income,
                strategy_file: format!("{}/{STRATEGY_FILE}", seed_dir(seed)),
                training_log: Some(format!("{}/{CMAES_HISTORY}", seed_dir(seed))),
                best_checkpoint: None,
            });
        }
        let manifest = self.manifest(run, results)?;
        write_json(&dir.join(MANIFEST), &manifest)?;
        Ok(BalanceRow::from_manifest(&manifest))
    }

    fn a2c_config(&self, seed: u64) -> A2cConfig {
        A2cConfig {
            seed,
            ..self.config.a2c.clone()
        }
    }

    /// Train one black-box policy per seed (in parallel) and test the best
    /// validation checkpoint. Writes `<out>/a2c-weather/` or
    /// `<out>/a2c-no-weather/`.
    pub fn train_rl(&self, include_weather: bool, out: &Path) -> Result<BalanceRow> {
        let run = if include_weather {
            RUN_A2C_WEATHER
        } else {
            RUN_A2C_NO_WEATHER
        };
        let dir = out.join(run);
        let runs = self
            .config
            .run
            .seeds
            .par_iter()
            .map(|&seed| {
                a2c_train(
                    &self.dataset,
                    &self.config.env,
                    include_weather,
                    &self.config.policy,
                    &self.a2c_config(seed),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let mut results = Vec::new();
        for tr in &runs {
            let sd = seed_dir(tr.seed);
            let full = dir.join(&sd);
            std::fs::create_dir_all(&full).map_err(|e| Error::io(&full, e))?;
            tr.best_policy.save(dir.join(&sd).join(POLICY_FILE))?;
            tr.write_log(&dir.join(&sd).join(TRAINING_LOG))?;
            let params = StrategyParams::Blackbox {
                policy_file: POLICY_FILE.into(),
            };
            write_text(&dir.join(&sd).join(STRATEGY_FILE), &params.to_json()?)?;
            results.push(SeedResult {
                seed: tr.seed,
                test_income: tr.test_balance,
                strategy_file: format!("{sd}/{STRATEGY_FILE}"),
                training_log: Some(format!("{sd}/{TRAINING_LOG}")),
                best_checkpoint: Some(format!("{sd}/{POLICY_FILE}")),
            });
        }
        let manifest = self.manifest(run, results)?;
        write_json(&dir.join(MANIFEST), &manifest)?;
        Ok(BalanceRow::from_manifest(&manifest))
    }

    /// Test a stored strategy file on every configured seed.
    pub fn evaluate(&self, strategy_file: &Path) -> Result<BalanceRow> {
        let text = std::fs::read_to_string(strategy_file).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                Error::MissingArtifact(strategy_file.display().to_string())
            } else {
                Error::io(strategy_file, e)
            }
        })?;
        let params = StrategyParams::from_json(&text)?;
        let base = strategy_file.parent().unwrap_or(Path::new("."));
        let (market, strategy) = self.market_for(&params, base)?;
        let test = self.dataset.require_splits()?.test;
        let seeds = self.config.run.seeds.clone();
        let incomes = seeds
            .iter()
            .map(|&s| evaluate_strategy(&market, strategy.as_ref(), test, test_seed(s)))
            .collect::<Result<Vec<_>>>()?;
        Ok(BalanceRow::new(params.kind().to_string(), seeds, incomes))
    }

    /// Retrain the black-box policy for every configured battery capacity.
    /// Writes `<out>/sweep/`.
    pub fn sweep_battery(&self, out: &Path) -> Result<Vec<SweepRow>> {
        let rows = battery_sweep(
            &self.dataset,
            &self.config.run.battery_capacities,
            &self.config.env,
            self.config.run.include_weather,
            &self.config.policy,
            &self.config.a2c,
            &self.config.run.seeds,
        )?;
        let dir = out.join(SWEEP_DIR);
        write_json(&dir.join("sweep.json"), &rows)?;
        write_text(&dir.join("sweep.csv"), &BalanceReport::sweep_csv(&rows))?;
        Ok(rows)
    }

    /// Re-simulate every seed of a run over the test range. The recorded
    /// incomes must be reproduced exactly.
    fn replay_run(&self, dir: &Path, manifest: &RunManifest) -> Result<Vec<Vec<DayResult>>> {
        let test = self.dataset.require_splits()?.test;
        manifest
            .results
            .iter()
            .map(|r| {
                let path = dir.join(&r.strategy_file);
                let params: StrategyParams = read_json(&path)?;
                let base = path.parent().unwrap_or(dir);
                let (market, strategy) = self.market_for(&params, base)?;
                let ev = simulate_strategy(&market, strategy.as_ref(), test, test_seed(r.seed))?;
                if ev.total.to_bits() != r.test_income.to_bits() {
                    return Err(Error::invalid(format!(
                        "{} does not reproduce its recorded income ({} vs {})",
                        path.display(),
                        ev.total,
                        r.test_income
                    )));
                }
                Ok(ev.days)
            })
            .collect()
    }

    /// Consolidate the given runs into one report and write trace tables
    /// for the middle of the test range. Every run must exist.
    pub fn report(&self, out: &Path, runs: &[&str]) -> Result<BalanceReport> {
        let missing: Vec<&str> = runs
            .iter()
            .copied()
            .filter(|r| !out.join(r).join(MANIFEST).is_file())
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingArtifact(format!(
                "no results for run(s): {}",
                missing.join(", ")
            )));
        }
        let data_hash = self.dataset.content_hash();
        let test = self.dataset.require_splits()?.test;
        let window = test.middle(self.config.run.report_window_days);
        let mut rows = Vec::new();
        for run in runs {
            let dir = out.join(run);
            let manifest: RunManifest = read_json(&dir.join(MANIFEST))?;
            if manifest.data_hash != data_hash {
                return Err(Error::invalid(format!(
                    "run {run} was produced on different data ({})",
                    manifest.data_hash
                )));
            }
            let absent: Vec<String> = manifest
                .results
                .iter()
                .flat_map(|r| {
                    [
                        Some(&r.strategy_file),
                        r.training_log.as_ref(),
                        r.best_checkpoint.as_ref(),
                    ]
                })
                .flatten()
                .filter(|p| !dir.join(p).is_file())
                .map(|p| format!("{run}/{p}"))
                .collect();
            if !absent.is_empty() {
                return Err(Error::MissingArtifact(absent.join(", ")));
            }
            let replays = self.replay_run(&dir, &manifest)?;
            let row = BalanceRow::from_manifest(&manifest);
            let best = row
                .per_seed
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map_or(0, |(i, _)| i);
            Traces {
                window,
                runs: &replays,
                best,
                battery_capacity: self.config.env.battery_capacity,
            }
            .write(&out.join("report").join(run))?;
            rows.push(row);
        }
        let sweep_file = out.join(SWEEP_DIR).join("sweep.json");
        let battery_sweep = if sweep_file.is_file() {
            Some(read_json(&sweep_file)?)
        } else {
            None
        };
        let report = BalanceReport {
            data_hash,
            test_days: test,
            reference_balance: self.market(false)?.reference_balance(test),
            rows,
            battery_sweep,
        };
        let rdir = out.join("report");
        write_json(&rdir.join("report.json"), &report)?;
        write_text(&rdir.join("balances.csv"), &report.balances_csv())?;
        Ok(report)
    }
}

/// Which runs a full pipeline produces.
pub fn pipeline_runs(config: &ExperimentConfig) -> Vec<&'static str> {
    if config.run.include_weather {
        STANDARD_RUNS.to_vec()
    } else {
        vec![RUN_TIMING, RUN_OPPORTUNISTIC, RUN_A2C_NO_WEATHER]
    }
}

/// Every experiment from one configuration: both CMA-ES strategies, the
/// black-box policy with (when enabled) and without weather, and the report.
pub fn run_pipeline(config: &ExperimentConfig, out: &Path) -> Result<BalanceReport> {
    let exp = Experiment::new(config.clone())?;
    exp.optimize(StrategyKind::Timing, out)?;
    exp.optimize(StrategyKind::Opportunistic, out)?;
    if config.run.include_weather {
        exp.train_rl(true, out)?;
    }
    exp.train_rl(false, out)?;
    let runs = pipeline_runs(config);
    exp.report(out, &runs)
}

/// Rebuild the configuration recorded in a run manifest.
pub fn config_from_manifest(path: &Path) -> Result<ExperimentConfig> {
    let m: RunManifest = read_json(path)?;
    let table: toml::Table = serde_json::from_value(m.config)?;
    ExperimentConfig::from_table(table)
}

pub fn manifest_path(out: &Path, run: &str) -> PathBuf {
    out.join(run).join(MANIFEST)
}
