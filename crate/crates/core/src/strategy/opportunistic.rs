use serde::{Deserialize, Serialize};

use crate::data::HOURS;
use crate::error::{Error, Result};
use crate::market::{round_volume, Bid};

/// Coefficients of the per-hour buy-low/sell-high strategy.
///
/// Layout: four battery-level couplings (buy volume, sell volume, buy price,
/// sell price), then for each hour the log offsets of buy volume, sell
/// volume, buy price and sell price relative to the volume and price
/// anchors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpportunisticParams(Vec<f64>);

impl OpportunisticParams {
    pub const DIM: usize = 4 + 4 * HOURS;

    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() != Self::DIM {
            return Err(Error::Dimension {
                expected: Self::DIM,
                actual: alpha.len(),
            });
        }
        Ok(Self(alpha))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Index of the buy-volume offset for `hour`; sell volume, buy price and
    /// sell price follow it.
    pub fn hour_offset(hour: usize) -> usize {
        4 + 4 * hour
    }

    /// Indices of the per-hour volume offsets, which start lower in the search
    /// so early candidates do not flood the market.
    pub fn volume_offset_indices() -> impl Iterator<Item = usize> {
        (0..HOURS).flat_map(|h| [Self::hour_offset(h), Self::hour_offset(h) + 1])
    }
}

pub fn opportunistic_bids(
    params: &OpportunisticParams,
    est_level: f64,
    max_volume: f64,
    price_anchors: &[f64; HOURS],
) -> Vec<Bid> {
    let a = &params.0;
    let mut bids = Vec::with_capacity(2 * HOURS);
    for (h, anchor) in price_anchors.iter().enumerate() {
        let o = OpportunisticParams::hour_offset(h);
        let hour = h as u8;
        bids.push(Bid::buy(
            hour,
            round_volume(max_volume * (a[o] + a[0] * est_level).exp()),
            anchor * (a[o + 2] + a[2] * est_level).exp(),
        ));
        bids.push(Bid::sell(
            hour,
            round_volume(max_volume * (a[o + 1] + a[1] * est_level).exp()),
            anchor * (a[o + 3] + a[3] * est_level).exp(),
        ));
    }
    bids
}
