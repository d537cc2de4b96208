//! Flat experiment configuration.
//!
//! One TOML document with no tables. Keys are the field names of the
//! environment, CMA-ES, A2C, policy and run settings; each key belongs to
//! exactly one section struct.

use std::path::{Path, PathBuf};

use serde::de::{self, DeserializeOwned, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::data::{ForecastConfig, Sigmas};
use crate::error::{Error, Result};
use crate::market::EnvConfig;
use crate::nn::PolicyArch;
use crate::optim::{A2cConfig, CmaesConfig};

/// Where the hourly series come from. With no files set, a synthetic
/// dataset is generated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub prices_file: Option<PathBuf>,
    pub weather_file: Option<PathBuf>,
    pub consumption_file: Option<PathBuf>,
    /// Without it, forecasts are synthesized from the actual weather.
    pub forecasts_file: Option<PathBuf>,
    pub data_seed: u64,
    pub num_days: usize,
    /// Couple synthetic prices to the weather.
    pub weather_coupling: bool,
    pub cloudiness_forecast_sigma: f64,
    pub wind_speed_forecast_sigma: f64,
    pub temperature_forecast_sigma: f64,
    pub forecast_clipping: bool,
}

impl Default for DataConfig {
    fn default() -> Self {
        let sigmas = Sigmas::default();
        Self {
            prices_file: None,
            weather_file: None,
            consumption_file: None,
            forecasts_file: None,
            data_seed: 7,
            num_days: 1461,
            weather_coupling: true,
            cloudiness_forecast_sigma: sigmas.cloudiness,
            wind_speed_forecast_sigma: sigmas.wind_speed,
            temperature_forecast_sigma: sigmas.temperature,
            forecast_clipping: true,
        }
    }
}

impl DataConfig {
    pub fn forecast_config(&self) -> ForecastConfig {
        ForecastConfig {
            sigmas: Sigmas {
                cloudiness: self.cloudiness_forecast_sigma,
                wind_speed: self.wind_speed_forecast_sigma,
                temperature: self.temperature_forecast_sigma,
            },
            clip: self.forecast_clipping,
        }
    }

    pub fn uses_files(&self) -> bool {
        self.prices_file.is_some() || self.weather_file.is_some() || self.consumption_file.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seeds: Vec<u64>,
    pub include_weather: bool,
    pub battery_capacities: Vec<f64>,
    /// Length of the trace window in the middle of the test range.
    pub report_window_days: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seeds: vec![0, 1, 2, 3, 4],
            include_weather: true,
            battery_capacities: vec![1.0, 1.5, 2.0],
            report_window_days: 5,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub env: EnvConfig,
    pub cmaes: CmaesConfig,
    pub a2c: A2cConfig,
    pub policy: PolicyArch,
    pub run: RunConfig,
}

/// Field names of a derived struct, read from its `Deserialize` impl.
fn field_names<T: DeserializeOwned>() -> &'static [&'static str] {
    struct Probe<'a>(&'a mut &'static [&'static str]);

    impl<'de> Deserializer<'de> for Probe<'_> {
        type Error = de::value::Error;

        fn deserialize_any<V: Visitor<'de>>(self, _: V) -> Result<V::Value, Self::Error> {
            Err(de::Error::custom("not a struct"))
        }

        fn deserialize_struct<V: Visitor<'de>>(
            self,
            _: &'static str,
            fields: &'static [&'static str],
            _: V,
        ) -> Result<V::Value, Self::Error> {
            *self.0 = fields;
            Err(de::Error::custom("probe"))
        }

        serde::forward_to_deserialize_any! {
            bool i8 i16 i32 i64 i128 u8 u16 u32 u64 u128 f32 f64 char str string
            bytes byte_buf option unit unit_struct newtype_struct seq tuple
            tuple_struct map enum identifier ignored_any
        }
    }

    let mut out: &'static [&'static str] = &[];
    let _ = T::deserialize(Probe(&mut out));
    out
}

fn parse_err(e: impl std::fmt::Display) -> Error {
    Error::Parse {
        context: "experiment config".into(),
        message: e.to_string(),
    }
}

fn section<T: DeserializeOwned>(table: &mut toml::Table) -> Result<T> {
    let mut sub = toml::Table::new();
    for name in field_names::<T>() {
        if let Some(v) = table.remove(*name) {
            sub.insert((*name).to_string(), v);
        }
    }
    sub.try_into().map_err(parse_err)
}

fn merge<T: Serialize>(out: &mut toml::Table, part: &T) {
    let t = toml::Table::try_from(part).expect("config sections serialize to tables");
    out.extend(t);
}

impl ExperimentConfig {
    pub fn from_table(mut table: toml::Table) -> Result<Self> {
        let cfg = Self {
            data: section(&mut table)?,
            env: section(&mut table)?,
            cmaes: section(&mut table)?,
            a2c: section(&mut table)?,
            policy: section(&mut table)?,
            run: section(&mut table)?,
        };
        if !table.is_empty() {
            let keys: Vec<&str> = table.keys().map(String::as_str).collect();
            return Err(Error::invalid(format!(
                "unknown config keys: {}",
                keys.join(", ")
            )));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        Self::from_table(s.parse::<toml::Table>().map_err(parse_err)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&s)
    }

    pub fn to_table(&self) -> toml::Table {
        let mut t = toml::Table::new();
        merge(&mut t, &self.data);
        merge(&mut t, &self.env);
        merge(&mut t, &self.cmaes);
        merge(&mut t, &self.a2c);
        merge(&mut t, &self.policy);
        merge(&mut t, &self.run);
        t
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.to_table()).expect("flat config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.a2c.validate()?;
        if self.run.seeds.is_empty() {
            return Err(Error::invalid("seeds must not be empty"));
        }
        if !(self.cmaes.initial_sigma > 0.0 && self.cmaes.initial_sigma.is_finite()) {
            return Err(Error::invalid("initial_sigma must be positive"));
        }
        if matches!(self.cmaes.population_size, Some(l) if l < 4) {
            return Err(Error::invalid("population_size must be at least 4"));
        }
        if let Some(c) = self
            .run
            .battery_capacities
            .iter()
            .find(|c| !(c.is_finite() && **c > 0.0))
        {
            return Err(Error::invalid(format!(
                "battery capacity must be positive, got {c}"
            )));
        }
        if self.run.report_window_days == 0 {
            return Err(Error::invalid("report_window_days must be positive"));
        }
        let d = &self.data;
        if d.uses_files()
            && (d.prices_file.is_none() || d.weather_file.is_none() || d.consumption_file.is_none())
        {
            return Err(Error::invalid(
                "prices_file, weather_file and consumption_file must be given together",
            ));
        }
        Ok(())
    }

    /// Resolve relative data paths against `dir`, the directory holding the
    /// config file.
    pub fn resolve_paths(&mut self, dir: &Path) {
        for p in [
            &mut self.data.prices_file,
            &mut self.data.weather_file,
            &mut self.data.consumption_file,
            &mut self.data.forecasts_file,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
    }
}
