use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{ConsumptionProfile, Dataset, DayForecast, ForecastRecord, HourlyRecord, HOURS};
use crate::error::{Error, Result};

#[derive(Debug, Deserialize, Serialize)]
struct PriceRow {
    date: NaiveDate,
    hour: u32,
    price: f64,
}

#[derive(Debug, Deserialize, Serialize)]
struct WeatherRow {
    date: NaiveDate,
    hour: u32,
    cloudiness: String,
    wind_speed: f64,
    temperature: f64,
}

#[derive(Debug, Deserialize, Serialize)]
struct ProfileRow {
    hour: u32,
    avg_consumption_mwh: f64,
}

/// File locations of the four interchange CSVs inside one directory.
#[derive(Clone, Debug)]
pub struct DatasetPaths {
    pub prices: PathBuf,
    pub weather: PathBuf,
    pub profile: PathBuf,
    pub forecasts: PathBuf,
}

impl DatasetPaths {
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        Self {
            prices: dir.join("prices.csv"),
            weather: dir.join("weather.csv"),
            profile: dir.join("profile.csv"),
            forecasts: dir.join("forecasts.csv"),
        }
    }
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    rdr.deserialize()
        .map(|row| {
            row.map_err(|e| Error::Parse {
                context: path.display().to_string(),
                message: e.to_string(),
            })
        })
        .collect()
}

fn parse_oktas(raw: &str, date: NaiveDate, hour: u32, path: &Path) -> Result<u8> {
    let v: u8 = raw.parse().map_err(|_| Error::Parse {
        context: path.display().to_string(),
        message: format!("cloudiness {raw:?} on {date} hour {hour} is not an integer Okta value"),
    })?;
    if v > super::MAX_OKTAS {
        return Err(Error::invalid(format!(
            "cloudiness {v} on {date} hour {hour} exceeds 8 Oktas"
        )));
    }
    Ok(v)
}

/// Load and validate prices, actual weather and the consumption profile.
/// Forecasts are left empty; attach them with [`load_forecasts`] or generate
/// them with [`super::make_forecasts`].
pub fn load_dataset(
    price_path: impl AsRef<Path>,
    weather_path: impl AsRef<Path>,
    profile_path: impl AsRef<Path>,
) -> Result<Dataset> {
    let (price_path, weather_path, profile_path) = (
        price_path.as_ref(),
        weather_path.as_ref(),
        profile_path.as_ref(),
    );
    let prices: Vec<PriceRow> = read_rows(price_path)?;
    let weather: Vec<WeatherRow> = read_rows(weather_path)?;
    let profile_rows: Vec<ProfileRow> = read_rows(profile_path)?;

    let mut profile = [f64::NAN; HOURS];
    for row in &profile_rows {
        let slot = profile
            .get_mut(row.hour as usize)
            .ok_or_else(|| Error::Schema(format!("profile hour {} out of range", row.hour)))?;
        *slot = row.avg_consumption_mwh;
    }
    if let Some(h) = profile.iter().position(|v| v.is_nan()) {
        return Err(Error::Schema(format!("profile is missing hour {h}")));
    }
    let profile = ConsumptionProfile::new(profile)?;

    if prices.len() != weather.len() {
        return Err(Error::Schema(format!(
            "{} price rows but {} weather rows",
            prices.len(),
            weather.len()
        )));
    }
    let mut records = Vec::with_capacity(prices.len());
    for (p, w) in prices.iter().zip(&weather) {
        if (p.date, p.hour) != (w.date, w.hour) {
            return Err(Error::Schema(format!(
                "price row {} hour {} does not align with weather row {} hour {}",
                p.date, p.hour, w.date, w.hour
            )));
        }
        records.push(HourlyRecord {
            date: p.date,
            hour: p.hour,
            price: p.price,
            cloudiness: parse_oktas(&w.cloudiness, w.date, w.hour, weather_path)?,
            wind_speed: w.wind_speed,
            temperature: w.temperature,
        });
    }
    Dataset::new(records, profile)
}

/// Attach forecasts from a `forecasts.csv` file. Every target day present in
/// the file must be complete; days absent from the file get no forecast.
pub fn load_forecasts(dataset: &mut Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let rows: Vec<ForecastRecord> = read_rows(path)?;
    let mut out: Vec<Option<DayForecast>> = vec![None; dataset.num_days()];
    let mut filled = vec![0u32; dataset.num_days()];
    let start = dataset.start_date();
    for row in rows {
        let day = (row.target_date - start).num_days();
        if day < 0 || day as usize >= dataset.num_days() || row.target_hour as usize >= HOURS {
            return Err(Error::Schema(format!(
                "forecast for {} hour {} lies outside the dataset",
                row.target_date, row.target_hour
            )));
        }
        let day = day as usize;
        let h = row.target_hour as usize;
        let f = out[day].get_or_insert_with(|| DayForecast {
            issue_date: row.issue_date,
            target_date: row.target_date,
            cloudiness: [0.0; HOURS],
            wind_speed: [0.0; HOURS],
            temperature: [0.0; HOURS],
        });
        f.cloudiness[h] = row.cloudiness;
        f.wind_speed[h] = row.wind_speed;
        f.temperature[h] = row.temperature;
        filled[day] |= 1 << h;
    }
    for (day, mask) in filled.iter().enumerate() {
        if out[day].is_some() && *mask != (1 << HOURS) - 1 {
            return Err(Error::Schema(format!(
                "forecast block for {} is incomplete",
                dataset.date(day)
            )));
        }
    }
    dataset.set_forecasts(out);
    Ok(())
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Write the four interchange CSVs. The forecasts file is written even when
/// empty so a directory always has the same shape.
pub fn write_dataset(dataset: &Dataset, paths: &DatasetPaths) -> Result<()> {
    if let Some(parent) = paths.prices.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    write_rows(
        &paths.prices,
        dataset.records().iter().map(|r| PriceRow {
            date: r.date,
            hour: r.hour,
            price: r.price,
        }),
    )?;
    write_rows(
        &paths.weather,
        dataset.records().iter().map(|r| WeatherRow {
            date: r.date,
            hour: r.hour,
            cloudiness: r.cloudiness.to_string(),
            wind_speed: r.wind_speed,
            temperature: r.temperature,
        }),
    )?;
    write_rows(
        &paths.profile,
        dataset
            .profile()
            .avg_per_household
            .iter()
            .enumerate()
            .map(|(h, v)| ProfileRow {
                hour: h as u32,
                avg_consumption_mwh: *v,
            }),
    )?;
    let fc = dataset.forecast_records();
    if fc.is_empty() {
        fs::write(
            &paths.forecasts,
            "issue_date,target_date,target_hour,cloudiness,wind_speed,temperature\n",
        )
        .map_err(|e| Error::io(&paths.forecasts, e))
    } else {
        write_rows(&paths.forecasts, fc)
    }
}
