use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Wall-clock time of day at which bids for the next day are submitted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TimeOfDay {
    pub hour: u32,
    pub minute: u32,
}

impl fmt::Display for TimeOfDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}", self.hour, self.minute)
    }
}

impl FromStr for TimeOfDay {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("time of day {s:?} is not HH:MM"));
        let (h, m) = s.trim().split_once(':').ok_or_else(bad)?;
        let hour: u32 = h.parse().map_err(|_| bad())?;
        let minute: u32 = m.parse().map_err(|_| bad())?;
        if hour > 23 || minute > 59 {
            return Err(bad());
        }
        Ok(Self { hour, minute })
    }
}

impl Serialize for TimeOfDay {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TimeOfDay {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Prosumer plant and market settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub action_scheduling_time: TimeOfDay,
    /// MWh
    pub battery_capacity: f64,
    pub battery_efficiency: f64,
    /// MWh per hour
    pub maximum_solar_energy_generation: f64,
    pub solar_panel_efficiency: f64,
    /// MWh per hour
    pub maximum_wind_energy_generation: f64,
    /// m/s; turbines stop above this
    pub maximum_wind_speed: f64,
    pub number_of_households: f64,
    /// Standard deviation of the relative consumption noise.
    pub consumption_noise_std: f64,
    pub price_stat_window: usize,
    pub penalty_buy_multiplier: f64,
    pub penalty_sell_multiplier: f64,
    /// Relative battery charge at the start of an episode.
    pub initial_battery_level: f64,
    /// Divisor for prices in observations; `None` means the train-split mean.
    pub price_scale: Option<f64>,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            action_scheduling_time: TimeOfDay {
                hour: 10,
                minute: 30,
            },
            battery_capacity: 2.0,
            battery_efficiency: 0.85,
            maximum_solar_energy_generation: 0.4,
            solar_panel_efficiency: 0.2,
            maximum_wind_energy_generation: 0.05,
            maximum_wind_speed: 11.0,
            number_of_households: 100.0,
            consumption_noise_std: 0.03,
            price_stat_window: 28,
            penalty_buy_multiplier: 2.0,
            penalty_sell_multiplier: 0.5,
            initial_battery_level: 0.5,
            price_scale: None,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("battery_capacity", self.battery_capacity),
            (
                "maximum_solar_energy_generation",
                self.maximum_solar_energy_generation,
            ),
            (
                "maximum_wind_energy_generation",
                self.maximum_wind_energy_generation,
            ),
            ("maximum_wind_speed", self.maximum_wind_speed),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("battery_efficiency", self.battery_efficiency),
            ("solar_panel_efficiency", self.solar_panel_efficiency),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::invalid(format!("{name} must be in (0, 1], got {v}")));
            }
        }
        if !(self.number_of_households >= 0.0) {
            return Err(Error::invalid("number_of_households must be nonnegative"));
        }
        if !(self.consumption_noise_std >= 0.0) {
            return Err(Error::invalid("consumption_noise_std must be nonnegative"));
        }
        if self.price_stat_window == 0 {
            return Err(Error::invalid("price_stat_window must be at least one day"));
        }
        if !(0.0..=1.0).contains(&self.initial_battery_level) {
            return Err(Error::invalid("initial_battery_level must be in [0, 1]"));
        }
        if let Some(s) = self.price_scale {
            if !(s > 0.0) {
                return Err(Error::invalid("price_scale must be positive"));
            }
        }
        Ok(())
    }

    /// Largest energy the plant can produce in one hour: clear-sky solar
    /// plus wind at the cut-off speed.
    pub fn max_hourly_production(&self) -> f64 {
        self.maximum_solar_energy_generation * self.solar_panel_efficiency
            + self.maximum_wind_energy_generation
    }

    /// Number of whole hours of the decision day already delivered when bids
    /// are placed. The hour in progress is treated as not yet delivered.
    pub fn elapsed_hours(&self) -> usize {
        self.action_scheduling_time.hour as usize
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Parse {
            context: "environment config".into(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_plant_peak_output() {
        let c = EnvConfig::default();
        assert!((c.max_hourly_production() - 0.13).abs() < 1e-15);
        assert_eq!(c.elapsed_hours(), 10);
    }

    #[test]
    fn flat_key_value_roundtrip() {
        let mut c = EnvConfig::default();
        c.battery_capacity = 1.5;
        let text = c.to_toml_string();
        assert!(text.contains("battery_capacity = 1.5"));
        assert!(text.contains("action_scheduling_time = \"10:30\""));
        assert_eq!(EnvConfig::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn partial_file_uses_defaults_and_rejects_unknown_keys() {
        let c = EnvConfig::from_toml_str("number_of_households = 50\n").unwrap();
        assert_eq!(c.number_of_households, 50.0);
        assert_eq!(c.battery_capacity, 2.0);
        assert!(EnvConfig::from_toml_str("batery_capacity = 1\n").is_err());
        assert!(EnvConfig::from_toml_str("battery_efficiency = 1.2\n").is_err());
    }
}
