//! Parameterized synthetic market and weather series.
//!
//! Prices carry a daily double peak (cheap nights, morning and evening
//! highs), a weekday/weekend pattern, a winter-high seasonal swing, a
//! persistent day-level regime and hourly lognormal noise. They are coupled
//! to the weather: wind and clear skies push prices down, temperatures far
//! from comfortable push them up. Weather follows seasonal sinusoids with
//! AR(1) noise.

use std::f64::consts::TAU;

use chrono::{Datelike, Duration, NaiveDate};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{ConsumptionProfile, Dataset, HourlyRecord, HOURS, MAX_OKTAS};
use crate::error::{Error, Result};
use crate::seeding;

/// Two 28-day windows of price history.
pub const MIN_SYNTHETIC_DAYS: usize = 56;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub start_date: NaiveDate,
    /// Mean price level, currency per MWh.
    pub base_price: f64,
    /// Relative height of the evening peak above the daily mean.
    pub evening_peak: f64,
    pub morning_peak: f64,
    /// Relative depth of the night trough.
    pub night_dip: f64,
    pub weekend_discount: f64,
    pub seasonal_amplitude: f64,
    /// AR(1) coefficient and innovation sd of the day-level log-price regime.
    pub regime_persistence: f64,
    pub regime_sd: f64,
    /// Hourly lognormal noise sd.
    pub price_noise_sd: f64,
    /// Log-price sensitivity to wind speed (per 10 m/s above the mean).
    pub wind_coupling: f64,
    /// Log-price sensitivity to clear sky (per fully clear sky).
    pub sun_coupling: f64,
    /// Log-price sensitivity to temperature distance from 15 C (per 10 C).
    pub temperature_coupling: f64,
    pub mean_cloudiness: f64,
    pub mean_wind: f64,
    pub mean_temperature: f64,
    pub temperature_amplitude: f64,
    pub weather_persistence: f64,
    pub profile: ConsumptionProfile,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            start_date: NaiveDate::from_ymd_opt(2016, 1, 1).expect("valid date"),
            base_price: 220.0,
            evening_peak: 0.40,
            morning_peak: 0.22,
            night_dip: 0.30,
            weekend_discount: 0.12,
            seasonal_amplitude: 0.10,
            regime_persistence: 0.85,
            regime_sd: 0.07,
            price_noise_sd: 0.06,
            wind_coupling: 0.35,
            sun_coupling: 0.15,
            temperature_coupling: 0.08,
            mean_cloudiness: 5.0,
            mean_wind: 3.8,
            mean_temperature: 8.5,
            temperature_amplitude: 11.0,
            weather_persistence: 0.96,
            profile: ConsumptionProfile::default(),
        }
    }
}

impl GeneratorConfig {
    /// Same series structure with prices independent of the weather.
    pub fn uncoupled() -> Self {
        Self {
            wind_coupling: 0.0,
            sun_coupling: 0.0,
            temperature_coupling: 0.0,
            ..Self::default()
        }
    }

    fn hour_shape(&self, hour: usize) -> f64 {
        let x = hour as f64;
        let bump = |centre: f64, width: f64| (-((x - centre) / width).powi(2)).exp();
        1.0 + self.morning_peak * bump(8.0, 1.8) + self.evening_peak * bump(19.0, 1.8)
            - self.night_dip * bump(2.0, 2.5)
    }
}

struct Ar1 {
    phi: f64,
    state: f64,
}

impl Ar1 {
    /// Stationary unit-variance AR(1).
    fn step(&mut self, rng: &mut seeding::Rng) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.state = self.phi * self.state + (1.0 - self.phi * self.phi).sqrt() * z;
        self.state
    }
}

/// Generate `num_days` of hourly data. A pure function of `(seed, config)`.
pub fn generate_synthetic_dataset(
    seed: u64,
    num_days: usize,
    config: &GeneratorConfig,
) -> Result<Dataset> {
    if num_days < MIN_SYNTHETIC_DAYS {
        return Err(Error::invalid(format!(
            "at least {MIN_SYNTHETIC_DAYS} days are needed for price warm-up, got {num_days}"
        )));
    }
    let mut wrng = seeding::child_rng(seed, "synthetic/weather");
    let mut prng = seeding::child_rng(seed, "synthetic/price");

    let phi = config.weather_persistence;
    let mut cloud = Ar1 {
        phi,
        state: wrng.random_range(-1.0..1.0),
    };
    let mut wind = Ar1 {
        phi,
        state: wrng.random_range(-1.0..1.0),
    };
    let mut temp = Ar1 {
        phi: 0.985,
        state: wrng.random_range(-1.0..1.0),
    };
    let mut regime = 0.0f64;

    let mut records = Vec::with_capacity(num_days * HOURS);
    for day in 0..num_days {
        let date = config.start_date + Duration::days(day as i64);
        let doy = date.ordinal0() as f64;
        // +1 in mid-January, -1 in mid-July
        let winter = (TAU * (doy - 15.0) / 365.25).cos();
        let weekend = match date.weekday().num_days_from_monday() {
            5 => config.weekend_discount * 0.7,
            6 => config.weekend_discount,
            _ => 0.0,
        };
        let z: f64 = StandardNormal.sample(&mut prng);
        regime = config.regime_persistence * regime + config.regime_sd * z;

        for hour in 0..HOURS {
            let h = hour as f64;
            let c_latent = config.mean_cloudiness + 0.8 * winter + 2.6 * cloud.step(&mut wrng);
            let cloudiness = c_latent.round().clamp(0.0, MAX_OKTAS as f64) as u8;
            let wind_speed =
                (config.mean_wind + 0.7 * winter + 2.4 * wind.step(&mut wrng)).max(0.0);
            let temperature = config.mean_temperature - config.temperature_amplitude * winter
                + 4.0 * (TAU * (h - 9.0) / 24.0).sin()
                + 3.0 * temp.step(&mut wrng);

            let weather = -config.wind_coupling * (wind_speed - config.mean_wind) / 10.0
                - config.sun_coupling * ((MAX_OKTAS - cloudiness) as f64 / 8.0 - 0.4)
                + config.temperature_coupling * ((temperature - 15.0).abs() - 8.0) / 10.0;
            let noise: f64 = StandardNormal.sample(&mut prng);
            let log_price = regime
                + weather
                + config.seasonal_amplitude * winter
                + (1.0 - weekend).ln()
                + config.price_noise_sd * noise;
            let price = config.base_price * config.hour_shape(hour) * log_price.exp();

            records.push(HourlyRecord {
                date,
                hour: hour as u32,
                price: (price * 100.0).round() / 100.0,
                cloudiness,
                wind_speed: (wind_speed * 100.0).round() / 100.0,
                temperature: (temperature * 10.0).round() / 10.0,
            });
        }
    }
    Dataset::new(records, config.profile.clone())
}
