//! Synthetic weather forecasts made by noising the actuals.
//!
//! Forecasts are issued at 10 am on the day before delivery. Index `t = 0` is
//! that issuance hour; every following hour adds an independent Gaussian step
//! with variance `sigma^2 / 24`, so the accumulated deviation after 24 hours
//! has standard deviation `sigma`. Only `t` in `14..=37`, hours 0 to 23 of
//! the delivery day, are kept.

use chrono::Duration;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Dataset, DayForecast, HOURS, MAX_OKTAS};
use crate::error::{Error, Result};
use crate::seeding;

/// Offset of delivery-day hour 0 from the issuance hour.
pub const FIRST_KEPT_STEP: usize = 14;
pub const LAST_KEPT_STEP: usize = FIRST_KEPT_STEP + HOURS - 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeatherVar {
    Cloudiness,
    WindSpeed,
    Temperature,
}

impl WeatherVar {
    pub const ALL: [WeatherVar; 3] = [
        WeatherVar::Cloudiness,
        WeatherVar::WindSpeed,
        WeatherVar::Temperature,
    ];

    fn label(self) -> &'static str {
        match self {
            WeatherVar::Cloudiness => "cloudiness",
            WeatherVar::WindSpeed => "wind_speed",
            WeatherVar::Temperature => "temperature",
        }
    }
}

/// 24-hour forecast accuracy per variable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sigmas {
    pub cloudiness: f64,
    pub wind_speed: f64,
    pub temperature: f64,
}

impl Default for Sigmas {
    fn default() -> Self {
        Self {
            cloudiness: 2.0,
            wind_speed: 1.0,
            temperature: 2.0,
        }
    }
}

impl Sigmas {
    pub fn zero() -> Self {
        Self {
            cloudiness: 0.0,
            wind_speed: 0.0,
            temperature: 0.0,
        }
    }

    pub fn get(&self, var: WeatherVar) -> f64 {
        match var {
            WeatherVar::Cloudiness => self.cloudiness,
            WeatherVar::WindSpeed => self.wind_speed,
            WeatherVar::Temperature => self.temperature,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastConfig {
    pub sigmas: Sigmas,
    /// Clip cloudiness to whole Oktas in `0..=8` and wind to `>= 0`.
    pub clip: bool,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        Self {
            sigmas: Sigmas::default(),
            clip: true,
        }
    }
}

/// The raw noise stream `eps_1..=eps_37` for one (target day, variable).
/// `forecast - actual` at kept step `t` is the running sum up to `t`.
pub fn forecast_noise(seed: u64, target_day: usize, var: WeatherVar, sigma: f64) -> Vec<f64> {
    let stream = seeding::derive_indexed(seed, var.label(), target_day as u64);
    let mut rng = seeding::rng(stream);
    let sd = sigma / (HOURS as f64).sqrt();
    if sd == 0.0 {
        return vec![0.0; LAST_KEPT_STEP];
    }
    let normal = Normal::new(0.0, sd).expect("finite positive sd");
    (0..LAST_KEPT_STEP)
        .map(|_| normal.sample(&mut rng))
        .collect()
}

fn accumulate(eps: &[f64]) -> [f64; HOURS] {
    let mut d = 0.0;
    let mut out = [0.0; HOURS];
    for (i, e) in eps.iter().enumerate() {
        d += e;
        let t = i + 1;
        if t >= FIRST_KEPT_STEP {
            out[t - FIRST_KEPT_STEP] = d;
        }
    }
    out
}

/// Clip to `0..=8` and round to the nearest whole Okta, ties away from zero.
pub fn project_oktas(x: f64) -> f64 {
    x.clamp(0.0, MAX_OKTAS as f64).round()
}

/// Replace the dataset's forecasts with noised copies of the actual weather,
/// one block per delivery day.
pub fn make_forecasts(dataset: &Dataset, config: &ForecastConfig, seed: u64) -> Result<Dataset> {
    for var in WeatherVar::ALL {
        let s = config.sigmas.get(var);
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::invalid(format!(
                "forecast sigma for {} must be nonnegative, got {s}",
                var.label()
            )));
        }
    }
    let forecasts = (0..dataset.num_days())
        .map(|day| {
            let recs = dataset.day_records(day);
            let mut block = DayForecast {
                issue_date: dataset.date(day) - Duration::days(1),
                target_date: dataset.date(day),
                cloudiness: std::array::from_fn(|h| recs[h].cloudiness as f64),
                wind_speed: std::array::from_fn(|h| recs[h].wind_speed),
                temperature: std::array::from_fn(|h| recs[h].temperature),
            };
            for var in WeatherVar::ALL {
                let dev = accumulate(&forecast_noise(seed, day, var, config.sigmas.get(var)));
                let target = match var {
                    WeatherVar::Cloudiness => &mut block.cloudiness,
                    WeatherVar::WindSpeed => &mut block.wind_speed,
                    WeatherVar::Temperature => &mut block.temperature,
                };
                for (x, d) in target.iter_mut().zip(dev) {
                    *x += d;
                }
            }
            if config.clip {
                for c in &mut block.cloudiness {
                    *c = project_oktas(*c);
                }
                for w in &mut block.wind_speed {
                    *w = w.max(0.0);
                }
            }
            Some(block)
        })
        .collect();
    let mut out = dataset.clone();
    out.set_forecasts(forecasts);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures;

    #[test]
    fn zero_sigma_reproduces_actuals() {
        let ds = fixtures::flat(3, 100.0, 5, 3.5);
        let cfg = ForecastConfig {
            sigmas: Sigmas::zero(),
            clip: true,
        };
        let out = make_forecasts(&ds, &cfg, 1).unwrap();
        for day in 0..3 {
            let f = out.forecast(day).unwrap();
            assert!(f.cloudiness.iter().all(|c| *c == 5.0));
            assert!(f.wind_speed.iter().all(|w| *w == 3.5));
            assert!(f.temperature.iter().all(|t| *t == 10.0));
        }
    }

    #[test]
    fn clipped_at_eight_oktas() {
        assert_eq!(project_oktas(8.0 + 2.3), 8.0);
        assert_eq!(project_oktas(-0.7), 0.0);
    }

    #[test]
    fn rounding_ties_go_away_from_zero() {
        assert_eq!(project_oktas(2.5), 3.0);
        assert_eq!(project_oktas(0.5), 1.0);
        assert_eq!(project_oktas(3.49), 3.0);
    }

    #[test]
    fn unclipped_deviation_is_running_noise_sum() {
        let ds = fixtures::flat(4, 100.0, 4, 5.0);
        let cfg = ForecastConfig {
            sigmas: Sigmas::default(),
            clip: false,
        };
        let out = make_forecasts(&ds, &cfg, 99).unwrap();
        for day in 0..4 {
            let eps = forecast_noise(99, day, WeatherVar::Cloudiness, 2.0);
            let f = out.forecast(day).unwrap();
            for h in 0..HOURS {
                let t = FIRST_KEPT_STEP + h;
                let d: f64 = eps[..t].iter().sum();
                assert!((f.cloudiness[h] - 4.0 - d).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn clipped_forecasts_respect_domains() {
        let ds = fixtures::flat(20, 100.0, 8, 0.2);
        let out = make_forecasts(&ds, &ForecastConfig::default(), 3).unwrap();
        for day in 0..20 {
            let f = out.forecast(day).unwrap();
            assert!(f
                .cloudiness
                .iter()
                .all(|c| (0.0..=8.0).contains(c) && c.fract() == 0.0));
            assert!(f.wind_speed.iter().all(|w| *w >= 0.0));
        }
    }

    #[test]
    fn negative_sigma_rejected() {
        let ds = fixtures::flat(1, 100.0, 4, 5.0);
        let mut cfg = ForecastConfig::default();
        cfg.sigmas.wind_speed = -1.0;
        assert!(make_forecasts(&ds, &cfg, 0).is_err());
    }
}
