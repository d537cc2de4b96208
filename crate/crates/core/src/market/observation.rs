//! Policy observation vector.
//!
//! Layout, in order:
//!
//! | block | values | scaling |
//! |---|---|---|
//! | prices of the decision day, per hour | 24 | divided by `price_scale` |
//! | expected household consumption, per hour | 24 | divided by the profile peak |
//! | current relative battery charge | 1 | already in `[0, 1]` |
//! | estimated relative charge at midnight | 1 | already in `[0, 1]` |
//! | month one-hot | 12 | |
//! | weekday one-hot, Monday first | 7 | |
//! | next-day cloudiness forecast | 24 | `/ 8` |
//! | next-day wind forecast | 24 | `/ maximum_wind_speed` |
//! | next-day temperature forecast | 24 | `(t + 20) / 60` |
//!
//! The weather blocks are omitted in the no-weather variant.

use serde::{Deserialize, Serialize};

use super::EnvConfig;
use crate::data::{Dataset, HOURS};
use crate::error::{Error, Result};

pub const OBS_LEN_WEATHER: usize = 141;
pub const OBS_LEN_NO_WEATHER: usize = 69;

pub const MONTH_OFFSET: usize = 2 * HOURS + 2;
pub const WEEKDAY_OFFSET: usize = MONTH_OFFSET + 12;
pub const WEATHER_OFFSET: usize = WEEKDAY_OFFSET + 7;

const TEMP_LOW: f64 = -20.0;
const TEMP_SPAN: f64 = 60.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Observation(Vec<f64>);

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Normalization constants baked into a trained policy so it can be run
/// without the training dataset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationLayout {
    pub include_weather: bool,
    pub price_scale: f64,
}

impl ObservationLayout {
    pub fn len(&self) -> usize {
        if self.include_weather {
            OBS_LEN_WEATHER
        } else {
            OBS_LEN_NO_WEATHER
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Observation at the decision time of `day`.
    pub fn build(
        &self,
        data: &Dataset,
        config: &EnvConfig,
        day: usize,
        level: f64,
        est_level: f64,
    ) -> Result<Observation> {
        let mut v = Vec::with_capacity(self.len());
        v.extend(data.day_prices(day).iter().map(|p| p / self.price_scale));
        let profile = data.profile();
        let peak = profile.max();
        v.extend(profile.avg_per_household.iter().map(|e| {
            // n cancels; a zero profile stays zero
            if peak > 0.0 {
                e / peak
            } else {
                0.0
            }
        }));
        v.push(level);
        v.push(est_level);
        let mut month = [0.0; 12];
        month[data.month0(day)] = 1.0;
        v.extend(month);
        let mut weekday = [0.0; 7];
        weekday[data.weekday0(day)] = 1.0;
        v.extend(weekday);
        if self.include_weather {
            let f = data.forecast(day + 1).ok_or_else(|| {
                Error::invalid(format!("no weather forecast for day {}", day + 1))
            })?;
            v.extend(f.cloudiness.iter().map(|c| c / 8.0));
            v.extend(f.wind_speed.iter().map(|w| w / config.maximum_wind_speed));
            v.extend(f.temperature.iter().map(|t| (t - TEMP_LOW) / TEMP_SPAN));
        }
        debug_assert_eq!(v.len(), self.len());
        Ok(Observation(v))
    }
}
