//! Balance reports, run manifests and plot-ready trace tables.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{DayRange, HOURS};
use crate::error::{Error, Result};
use crate::market::{BidKind, DayResult};
use crate::optim::{mean_std, SweepRow};

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_text(path, &s)
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let s = std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingArtifact(path.display().to_string())
        } else {
            Error::io(path, e)
        }
    })?;
    Ok(serde_json::from_str(&s)?)
}

/// Test income of one seeded run and the artifacts behind it, with paths
/// relative to the run directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub test_income: f64,
    /// Strategy parameters file.
    pub strategy_file: String,
    pub training_log: Option<String>,
    pub best_checkpoint: Option<String>,
}

/// Everything needed to reproduce and audit one run directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run: String,
    /// Flat experiment configuration.
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    /// SHA-256 of the dataset contents.
    pub data_hash: String,
    pub test_days: DayRange,
    pub results: Vec<SeedResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalanceRow {
    pub strategy: String,
    pub mean: f64,
    pub std: f64,
    pub per_seed: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl BalanceRow {
    pub fn new(strategy: impl Into<String>, seeds: Vec<u64>, per_seed: Vec<f64>) -> Self {
        let (mean, std) = mean_std(&per_seed);
        Self {
            strategy: strategy.into(),
            mean,
            std,
            per_seed,
            seeds,
        }
    }

    pub fn from_manifest(m: &RunManifest) -> Self {
        Self::new(
            m.run.clone(),
            m.results.iter().map(|r| r.seed).collect(),
            m.results.iter().map(|r| r.test_income).collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub data_hash: String,
    pub test_days: DayRange,
    pub reference_balance: f64,
    pub rows: Vec<BalanceRow>,
    pub battery_sweep: Option<Vec<SweepRow>>,
}

impl BalanceReport {
    pub fn row(&self, strategy: &str) -> Option<&BalanceRow> {
        self.rows.iter().find(|r| r.strategy == strategy)
    }

    /// `strategy,mean,std,seeds`, with the reference balance as the last
    /// row.
    pub fn balances_csv(&self) -> String {
        let mut s = String::from("strategy,mean,std,seeds\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                r.strategy,
                r.mean,
                r.std,
                r.per_seed.len()
            );
        }
        let _ = writeln!(s, "reference,{},,", self.reference_balance);
        s
    }

    pub fn sweep_csv(rows: &[SweepRow]) -> String {
        let mut s = String::from("battery_capacity,mean,std,seeds\n");
        for r in rows {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                r.battery_capacity,
                r.mean,
                r.std,
                r.per_seed.len()
            );
        }
        s
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Hourly traces over a window of delivery days. `runs` holds one simulated
/// test range per seed; `best` indexes the run with the highest income.
pub struct Traces<'a> {
    pub window: DayRange,
    pub runs: &'a [Vec<DayResult>],
    pub best: usize,
    pub battery_capacity: f64,
}

impl Traces<'_> {
    fn days<'r>(&self, run: &'r [DayResult]) -> impl Iterator<Item = &'r DayResult> {
        let w = self.window;
        run.iter().filter(move |d| w.contains(d.day))
    }

    /// Relative battery charge at the end of each hour: `mean,min,max` over
    /// seeds.
    pub fn battery_csv(&self) -> String {
        let mut s = String::from("day,hour,mean,min,max\n");
        let per_run: Vec<Vec<&DayResult>> =
            self.runs.iter().map(|r| self.days(r).collect()).collect();
        let Some(first) = per_run.first() else {
            return s;
        };
        for (i, day) in first.iter().enumerate() {
            for h in 0..HOURS {
                let levels: Vec<f64> = per_run
                    .iter()
                    .map(|r| r[i].hours[h].battery_after / self.battery_capacity)
                    .collect();
                let mean = levels.iter().sum::<f64>() / levels.len() as f64;
                let min = levels.iter().copied().fold(f64::INFINITY, f64::min);
                let max = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let _ = writeln!(s, "{},{h},{mean},{min},{max}", day.day);
            }
        }
        s
    }

    fn bid_table(&self, header: &str, row: impl Fn(&DayResult, usize) -> String) -> String {
        let mut s = format!("day,hour,{header}\n");
        for d in self.days(&self.runs[self.best]) {
            for h in 0..HOURS {
                let _ = writeln!(s, "{},{h},{}", d.day, row(d, h));
            }
        }
        s
    }

    /// Bid prices of the best run; empty when no bid of that side was
    /// placed in the hour.
    pub fn bid_prices_csv(&self) -> String {
        self.bid_table("buy_price,sell_price", |d, h| {
            let price = |kind| {
                d.executed_bids
                    .iter()
                    .find(|e| e.bid.kind == kind && e.bid.hour as usize == h)
                    .map(|e| e.bid.price)
            };
            format!(
                "{},{}",
                fmt_opt(price(BidKind::Buy)),
                fmt_opt(price(BidKind::Sell))
            )
        })
    }

    /// Bid volumes of the best run with executed amounts and the unscaled
    /// market price.
    pub fn bid_volumes_csv(&self) -> String {
        self.bid_table(
            "buy_volume,sell_volume,buy_executed,sell_executed,market_price",
            |d, h| {
                let vol = |kind| -> f64 {
                    d.executed_bids
                        .iter()
                        .filter(|e| e.bid.kind == kind && e.bid.hour as usize == h)
                        .map(|e| e.bid.volume)
                        .sum()
                };
                let o = &d.hours[h];
                format!(
                    "{},{},{},{},{}",
                    vol(BidKind::Buy),
                    vol(BidKind::Sell),
                    o.buy_exec,
                    o.sell_exec,
                    o.price
                )
            },
        )
    }

    pub fn unscheduled_csv(&self) -> String {
        self.bid_table("unscheduled_buy,unscheduled_sell", |d, h| {
            format!("{},{}", d.hours[h].uns_buy, d.hours[h].uns_sell)
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_text(&dir.join("battery.csv"), &self.battery_csv())?;
        write_text(&dir.join("bid_prices.csv"), &self.bid_prices_csv())?;
        write_text(&dir.join("bid_volumes.csv"), &self.bid_volumes_csv())?;
        write_text(&dir.join("unscheduled.csv"), &self.unscheduled_csv())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_statistics_match_values() {
        let r = BalanceRow::new("x", vec![1, 2, 3], vec![10.0, 20.0, 30.0]);
        assert_eq!(r.mean, 20.0);
        assert!((r.std - 10.0).abs() < 1e-12);
    }

    #[test]
    fn csv_has_reference_row() {
        let rep = BalanceReport {
            data_hash: "h".into(),
            test_days: DayRange::new(0, 1),
            reference_balance: 5.0,
            rows: vec![BalanceRow::new("timing", vec![0], vec![1.0])],
            battery_sweep: None,
        };
        let csv = rep.balances_csv();
        assert!(csv.lines().last().unwrap().starts_with("reference,5"));
        assert_eq!(csv.lines().count(), 3);
    }
}
