//! Neural black-box strategy: a 96-coordinate action scales the volume and
//! price anchors of one buy and one sell bid per hour.

use std::f64::consts::PI;

use crate::data::HOURS;
use crate::error::{Error, Result};
use crate::market::{round_volume, Bid};
use crate::nn::{PolicyParams, ACTION_DIM};

pub const ACTION_LIMIT: f64 = 3.0;

/// Rows: buy volume, buy price, sell volume, sell price log-offsets.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionMatrix([[f64; HOURS]; 4]);

impl ActionMatrix {
    pub const BUY_VOLUME: usize = 0;
    pub const BUY_PRICE: usize = 1;
    pub const SELL_VOLUME: usize = 2;
    pub const SELL_PRICE: usize = 3;

    pub fn zeros() -> Self {
        Self([[0.0; HOURS]; 4])
    }

    /// Build from a flat row-major vector, clipping to `[-3, 3]`.
    pub fn from_flat(a: &[f64]) -> Result<Self> {
        if a.len() != ACTION_DIM {
            return Err(Error::Dimension {
                expected: ACTION_DIM,
                actual: a.len(),
            });
        }
        let mut m = [[0.0; HOURS]; 4];
        for (i, v) in a.iter().enumerate() {
            // NaN maps to 0 so a broken network cannot produce NaN bids
            let v = if v.is_nan() { 0.0 } else { *v };
            m[i / HOURS][i % HOURS] = v.clamp(-ACTION_LIMIT, ACTION_LIMIT);
        }
        Ok(Self(m))
    }

    pub fn get(&self, row: usize, hour: usize) -> f64 {
        self.0[row][hour]
    }

    pub fn set(&mut self, row: usize, hour: usize, v: f64) {
        self.0[row][hour] = v.clamp(-ACTION_LIMIT, ACTION_LIMIT);
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.0.iter().flatten().copied().collect()
    }
}

pub fn blackbox_bids(
    action: &ActionMatrix,
    max_volume: f64,
    price_anchors: &[f64; HOURS],
) -> Vec<Bid> {
    let mut bids = Vec::with_capacity(2 * HOURS);
    for (h, anchor) in price_anchors.iter().enumerate() {
        let hour = h as u8;
        bids.push(Bid::buy(
            hour,
            round_volume(max_volume * action.get(ActionMatrix::BUY_VOLUME, h).exp()),
            anchor * action.get(ActionMatrix::BUY_PRICE, h).exp(),
        ));
        bids.push(Bid::sell(
            hour,
            round_volume(max_volume * action.get(ActionMatrix::SELL_VOLUME, h).exp()),
            anchor * action.get(ActionMatrix::SELL_PRICE, h).exp(),
        ));
    }
    bids
}

/// A Gaussian draw from the policy.
#[derive(Clone, Debug)]
pub struct SampledAction {
    /// Clipped action handed to the market.
    pub action: ActionMatrix,
    /// Unclipped sample, the point at which `log_prob` is evaluated.
    pub raw: Vec<f64>,
    pub log_prob: f64,
}

/// Log density of a diagonal Gaussian, in terms of standardized noise.
pub fn gaussian_log_prob(noise: &[f64], log_std: &[f64]) -> f64 {
    noise
        .iter()
        .zip(log_std)
        .map(|(z, s)| -0.5 * z * z - s - 0.5 * (2.0 * PI).ln())
        .sum()
}

/// `mean(obs) + noise * exp(log_std)`, clipped for the market. The log
/// probability is that of the unclipped sample.
pub fn sample_action(policy: &PolicyParams, obs: &[f64], noise: &[f64]) -> Result<SampledAction> {
    if noise.len() != ACTION_DIM {
        return Err(Error::Dimension {
            expected: ACTION_DIM,
            actual: noise.len(),
        });
    }
    let mean = policy.mean_action(obs)?;
    let raw: Vec<f64> = mean
        .iter()
        .zip(noise)
        .zip(&policy.log_std)
        .map(|((m, z), s)| m + z * s.exp())
        .collect();
    Ok(SampledAction {
        action: ActionMatrix::from_flat(&raw)?,
        log_prob: gaussian_log_prob(noise, &policy.log_std),
        raw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{BidKind, ObservationLayout};
    use crate::nn::PolicyArch;

    #[test]
    fn identity_action_uses_anchors() {
        let anchors: [f64; HOURS] = std::array::from_fn(|h| 200.0 + h as f64);
        let bids = blackbox_bids(&ActionMatrix::zeros(), 0.13, &anchors);
        assert_eq!(bids.len(), 48);
        for b in &bids {
            assert_eq!(b.volume, 0.1);
            assert_eq!(b.price, anchors[b.hour as usize]);
        }
    }

    #[test]
    fn extreme_coordinates() {
        let mut a = ActionMatrix::zeros();
        a.set(ActionMatrix::BUY_VOLUME, 4, 3.0);
        a.set(ActionMatrix::SELL_PRICE, 4, -3.0);
        let bids = blackbox_bids(&a, 0.13, &[300.0; HOURS]);
        let buy = bids
            .iter()
            .find(|b| b.hour == 4 && b.kind == BidKind::Buy)
            .unwrap();
        let sell = bids
            .iter()
            .find(|b| b.hour == 4 && b.kind == BidKind::Sell)
            .unwrap();
        assert_eq!(buy.volume, 2.6);
        assert!((sell.price - 300.0 * (-3f64).exp()).abs() < 1e-12);
        assert!((sell.price - 14.936).abs() < 1e-3);
    }

    #[test]
    fn clipping() {
        let mut flat = vec![0.0; 96];
        flat[0] = 7.0;
        flat[95] = -9.0;
        let a = ActionMatrix::from_flat(&flat).unwrap();
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(3, 23), -3.0);
        assert!(ActionMatrix::from_flat(&flat[..10]).is_err());
    }

    fn policy() -> PolicyParams {
        PolicyParams::new(
            ObservationLayout {
                include_weather: false,
                price_scale: 1.0,
            },
            &PolicyArch::default(),
            4,
        )
    }

    #[test]
    fn zero_noise_is_mean_action() {
        let p = policy();
        let obs = vec![0.3; 69];
        let s = sample_action(&p, &obs, &[0.0; 96]).unwrap();
        assert_eq!(s.raw, p.mean_action(&obs).unwrap());
    }

    #[test]
    fn log_prob_at_mean() {
        let p = policy();
        assert!((p.log_std[0].exp() - 0.36788).abs() < 1e-5);
        let s = sample_action(&p, &vec![0.1; 69], &[0.0; 96]).unwrap();
        let expected: f64 = p.log_std.iter().map(|g| -g - 0.5 * (2.0 * PI).ln()).sum();
        assert!((s.log_prob - expected).abs() < 1e-10);
    }

    #[test]
    fn observation_size_checked() {
        assert!(sample_action(&policy(), &[0.0; 141], &[0.0; 96]).is_err());
    }
}
