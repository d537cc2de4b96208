//! Battery-capacity sweep: retrain and test the black-box policy per
//! capacity.

use serde::{Deserialize, Serialize};

use super::a2c::{a2c_train, A2cConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::market::EnvConfig;
use crate::nn::PolicyArch;

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub battery_capacity: f64,
    pub mean: f64,
    pub std: f64,
    pub per_seed: Vec<f64>,
}

/// Train and test one policy per (capacity, seed). Rows come back sorted by
/// capacity.
pub fn battery_sweep(
    dataset: &Dataset,
    capacities: &[f64],
    env_config: &EnvConfig,
    include_weather: bool,
    arch: &PolicyArch,
    a2c: &A2cConfig,
    seeds: &[u64],
) -> Result<Vec<SweepRow>> {
    if seeds.is_empty() {
        return Err(Error::invalid("battery sweep needs at least one seed"));
    }
    if let Some(c) = capacities.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
        return Err(Error::invalid(format!(
            "battery capacity must be positive, got {c}"
        )));
    }
    let mut caps = capacities.to_vec();
    caps.sort_by(f64::total_cmp);
    caps.iter()
        .map(|&cap| {
            let env = EnvConfig {
                battery_capacity: cap,
                ..env_config.clone()
            };
            let per_seed = seeds
                .iter()
                .map(|&seed| {
                    let cfg = A2cConfig {
                        seed,
                        ..a2c.clone()
                    };
                    Ok(a2c_train(dataset, &env, include_weather, arch, &cfg)?.test_balance)
                })
                .collect::<Result<Vec<f64>>>()?;
            let (mean, std) = mean_std(&per_seed);
            Ok(SweepRow {
                battery_capacity: cap,
                mean,
                std,
                per_seed,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value_has_zero_std() {
        assert_eq!(mean_std(&[4.0]), (4.0, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
    }
}
