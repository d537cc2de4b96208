//! Hourly consumption and renewable production of the prosumer's plant.

use super::EnvConfig;
use crate::data::MAX_OKTAS;
use crate::error::{Error, Result};

/// Household consumption for one hour: `n * avg * |1 + rho|`, where `rho`
/// is the caller's relative noise draw.
pub fn hourly_consumption(config: &EnvConfig, avg_per_household: f64, rho: f64) -> f64 {
    config.number_of_households * avg_per_household * (1.0 + rho).abs()
}

/// Solar output for a cloudiness in Oktas (0 clear, 8 overcast).
pub fn hourly_solar(config: &EnvConfig, cloudiness: u8) -> Result<f64> {
    if cloudiness > MAX_OKTAS {
        return Err(Error::invalid(format!(
            "cloudiness {cloudiness} is outside 0..=8 Oktas"
        )));
    }
    Ok(solar_unchecked(config, cloudiness as f64))
}

pub(crate) fn solar_unchecked(config: &EnvConfig, cloudiness: f64) -> f64 {
    config.maximum_solar_energy_generation
        * (1.0 - cloudiness / MAX_OKTAS as f64)
        * config.solar_panel_efficiency
}

/// Wind output, linear in speed up to the cut-off and zero above it.
pub fn hourly_wind(config: &EnvConfig, wind_speed: f64) -> f64 {
    if wind_speed <= config.maximum_wind_speed {
        config.maximum_wind_energy_generation * wind_speed / config.maximum_wind_speed
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> EnvConfig {
        EnvConfig::default()
    }

    #[test]
    fn consumption() {
        let c = cfg();
        assert!((hourly_consumption(&c, 0.002, 0.0) - 0.2).abs() < 1e-12);
        assert!((hourly_consumption(&c, 0.002, -2.0) - 0.2).abs() < 1e-12);
        let none = EnvConfig {
            number_of_households: 0.0,
            ..cfg()
        };
        assert_eq!(hourly_consumption(&none, 0.002, 0.3), 0.0);
    }

    #[test]
    fn solar() {
        let c = cfg();
        assert!((hourly_solar(&c, 0).unwrap() - 0.08).abs() < 1e-12);
        assert_eq!(hourly_solar(&c, 8).unwrap(), 0.0);
        assert!((hourly_solar(&c, 4).unwrap() - 0.04).abs() < 1e-12);
        assert!(hourly_solar(&c, 9).is_err());
    }

    #[test]
    fn wind() {
        let c = cfg();
        assert!((hourly_wind(&c, 11.0) - 0.05).abs() < 1e-12);
        assert_eq!(hourly_wind(&c, 12.0), 0.0);
        assert!((hourly_wind(&c, 5.5) - 0.025).abs() < 1e-12);
    }
}
