//! Hourly market, weather and consumption series.
//!
//! A [`Dataset`] is the recorded trajectory of everything the prosumer cannot
//! influence: clearing prices, actual weather, next-day weather forecasts and
//! the statistical household consumption profile. The simulator only ever
//! reads from it.

mod csvio;
mod forecast;
mod split;
mod synth;

use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use csvio::{load_dataset, load_forecasts, write_dataset, DatasetPaths};
pub use forecast::{
    forecast_noise, make_forecasts, project_oktas, ForecastConfig, Sigmas, WeatherVar,
};
pub use split::{split_dataset, DayRange, SplitSpec, Splits};
pub use synth::{generate_synthetic_dataset, GeneratorConfig, MIN_SYNTHETIC_DAYS};

pub const HOURS: usize = 24;
pub const MAX_OKTAS: u8 = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HourlyRecord {
    pub date: NaiveDate,
    pub hour: u32,
    pub price: f64,
    pub cloudiness: u8,
    pub wind_speed: f64,
    pub temperature: f64,
}

impl HourlyRecord {
    pub fn validate(&self) -> Result<()> {
        if self.hour as usize >= HOURS {
            return Err(Error::invalid(format!("hour {} out of range", self.hour)));
        }
        if self.cloudiness > MAX_OKTAS {
            return Err(Error::invalid(format!(
                "cloudiness {} Oktas on {} hour {} (must be 0..=8)",
                self.cloudiness, self.date, self.hour
            )));
        }
        if !(self.wind_speed >= 0.0) || !self.wind_speed.is_finite() {
            return Err(Error::invalid(format!(
                "wind speed {} on {} hour {}",
                self.wind_speed, self.date, self.hour
            )));
        }
        if !(self.price >= 0.0) || !self.price.is_finite() {
            return Err(Error::invalid(format!(
                "price {} on {} hour {}",
                self.price, self.date, self.hour
            )));
        }
        if !self.temperature.is_finite() {
            return Err(Error::invalid(format!(
                "temperature {} on {} hour {}",
                self.temperature, self.date, self.hour
            )));
        }
        Ok(())
    }
}

/// Weather forecast for one delivery day, issued at 10 am the day before.
///
/// Cloudiness is kept as a real so the unclipped construction can be
/// inspected; after clipping it is always an integer in `0..=8`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DayForecast {
    pub issue_date: NaiveDate,
    pub target_date: NaiveDate,
    pub cloudiness: [f64; HOURS],
    pub wind_speed: [f64; HOURS],
    pub temperature: [f64; HOURS],
}

/// One row of `forecasts.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    pub issue_date: NaiveDate,
    pub target_date: NaiveDate,
    pub target_hour: u32,
    pub cloudiness: f64,
    pub wind_speed: f64,
    pub temperature: f64,
}

/// Average consumption of one household per hour of the day, in MWh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsumptionProfile {
    pub avg_per_household: [f64; HOURS],
}

impl ConsumptionProfile {
    pub fn new(avg_per_household: [f64; HOURS]) -> Result<Self> {
        if let Some(h) = avg_per_household
            .iter()
            .position(|v| !(*v >= 0.0) || !v.is_finite())
        {
            return Err(Error::invalid(format!(
                "profile value at hour {h} must be a nonnegative number"
            )));
        }
        Ok(Self { avg_per_household })
    }

    pub fn max(&self) -> f64 {
        self.avg_per_household.iter().copied().fold(0.0, f64::max)
    }

    pub fn daily_total(&self) -> f64 {
        self.avg_per_household.iter().sum()
    }
}

impl Default for ConsumptionProfile {
    /// A household curve with a small morning bump and a pronounced
    /// evening peak, averaging 0.25 kWh per hour.
    fn default() -> Self {
        let mut v = [0.0; HOURS];
        for (h, slot) in v.iter_mut().enumerate() {
            let x = h as f64;
            let morning = 0.9 * (-((x - 7.5) / 1.5).powi(2)).exp();
            let evening = 2.2 * (-((x - 19.0) / 2.2).powi(2)).exp();
            *slot = 1.0 + morning + evening;
        }
        let mean = v.iter().sum::<f64>() / HOURS as f64;
        for slot in &mut v {
            *slot *= 0.00025 / mean;
        }
        Self {
            avg_per_household: v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    records: Vec<HourlyRecord>,
    /// Indexed by target day; `None` when no forecast was generated for it.
    forecasts: Vec<Option<DayForecast>>,
    profile: ConsumptionProfile,
    splits: Option<Splits>,
}

impl Dataset {
    /// Build a dataset from records, checking domains and that the hours form a
    /// contiguous sequence starting at hour 0 of the first date.
    pub fn new(records: Vec<HourlyRecord>, profile: ConsumptionProfile) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| Error::Schema("dataset has no records".into()))?;
        let start = first.date;
        for (i, rec) in records.iter().enumerate() {
            let day = i / HOURS;
            let hour = (i % HOURS) as u32;
            let date = start + Duration::days(day as i64);
            if rec.date != date || rec.hour != hour {
                return Err(Error::Gap { day, hour, date });
            }
            rec.validate()?;
        }
        if records.len() % HOURS != 0 {
            let i = records.len();
            return Err(Error::Gap {
                day: i / HOURS,
                hour: (i % HOURS) as u32,
                date: start + Duration::days((i / HOURS) as i64),
            });
        }
        let days = records.len() / HOURS;
        Ok(Self {
            records,
            forecasts: vec![None; days],
            profile,
            splits: None,
        })
    }

    pub fn records(&self) -> &[HourlyRecord] {
        &self.records
    }

    pub fn profile(&self) -> &ConsumptionProfile {
        &self.profile
    }

    pub fn num_days(&self) -> usize {
        self.records.len() / HOURS
    }

    pub fn start_date(&self) -> NaiveDate {
        self.records[0].date
    }

    pub fn date(&self, day: usize) -> NaiveDate {
        self.start_date() + Duration::days(day as i64)
    }

    /// 0-based month (January = 0).
    pub fn month0(&self, day: usize) -> usize {
        self.date(day).month0() as usize
    }

    /// 0-based weekday (Monday = 0).
    pub fn weekday0(&self, day: usize) -> usize {
        self.date(day).weekday().num_days_from_monday() as usize
    }

    pub fn record(&self, day: usize, hour: usize) -> &HourlyRecord {
        &self.records[day * HOURS + hour]
    }

    pub fn day_records(&self, day: usize) -> &[HourlyRecord] {
        &self.records[day * HOURS..(day + 1) * HOURS]
    }

    pub fn price(&self, day: usize, hour: usize) -> f64 {
        self.record(day, hour).price
    }

    pub fn day_prices(&self, day: usize) -> [f64; HOURS] {
        std::array::from_fn(|h| self.price(day, h))
    }

    pub fn forecast(&self, target_day: usize) -> Option<&DayForecast> {
        self.forecasts.get(target_day).and_then(Option::as_ref)
    }

    pub fn has_forecasts(&self) -> bool {
        self.forecasts.iter().any(Option::is_some)
    }

    pub fn forecast_records(&self) -> Vec<ForecastRecord> {
        self.forecasts
            .iter()
            .flatten()
            .flat_map(|f| {
                (0..HOURS).map(move |h| ForecastRecord {
                    issue_date: f.issue_date,
                    target_date: f.target_date,
                    target_hour: h as u32,
                    cloudiness: f.cloudiness[h],
                    wind_speed: f.wind_speed[h],
                    temperature: f.temperature[h],
                })
            })
            .collect()
    }

    pub(crate) fn set_forecasts(&mut self, forecasts: Vec<Option<DayForecast>>) {
        debug_assert_eq!(forecasts.len(), self.num_days());
        self.forecasts = forecasts;
    }

    pub fn splits(&self) -> Option<&Splits> {
        self.splits.as_ref()
    }

    pub fn require_splits(&self) -> Result<&Splits> {
        self.splits
            .as_ref()
            .ok_or_else(|| Error::invalid("dataset has no train/validation/test split"))
    }

    pub(crate) fn set_splits(&mut self, splits: Splits) {
        self.splits = Some(splits);
    }

    /// Mean price over a day range.
    pub fn mean_price(&self, range: DayRange) -> f64 {
        let slice = &self.records[range.start * HOURS..range.end * HOURS];
        slice.iter().map(|r| r.price).sum::<f64>() / slice.len().max(1) as f64
    }

    /// SHA-256 over every recorded value, hex encoded. Used to prove that
    /// simulation never touches the replayed data and to pin run manifests.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for r in &self.records {
            h.update(r.date.num_days_from_ce().to_le_bytes());
            h.update(r.hour.to_le_bytes());
            h.update(r.price.to_bits().to_le_bytes());
            h.update([r.cloudiness]);
            h.update(r.wind_speed.to_bits().to_le_bytes());
            h.update(r.temperature.to_bits().to_le_bytes());
        }
        for f in self.forecasts.iter().flatten() {
            for v in f
                .cloudiness
                .iter()
                .chain(&f.wind_speed)
                .chain(&f.temperature)
            {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        for v in &self.profile.avg_per_household {
            h.update(v.to_bits().to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}
