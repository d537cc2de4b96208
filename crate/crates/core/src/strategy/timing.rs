use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{round_volume, Bid};

pub const TIMING_BUY_HOURS: [u8; 4] = [0, 1, 2, 3];
pub const TIMING_SELL_HOURS: [u8; 4] = [17, 18, 19, 20];

/// Volume scale and battery-level sensitivity of the fixed-hours strategy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingParams {
    pub alpha1: f64,
    pub alpha2: f64,
}

impl TimingParams {
    pub const DIM: usize = 2;

    pub fn new(alpha1: f64, alpha2: f64) -> Result<Self> {
        if !(alpha1 > 0.0 && alpha2 > 0.0) || !alpha1.is_finite() || !alpha2.is_finite() {
            return Err(Error::invalid(format!(
                "timing coefficients must be positive, got {alpha1}, {alpha2}"
            )));
        }
        Ok(Self { alpha1, alpha2 })
    }

    /// Decode an unconstrained search vector: coefficients are the absolute
    /// values of its coordinates.
    pub fn from_search(x: &[f64]) -> Self {
        Self {
            alpha1: x[0].abs().max(f64::MIN_POSITIVE),
            alpha2: x[1].abs().max(f64::MIN_POSITIVE),
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.alpha1, self.alpha2]
    }
}

/// Four must-execute buys in the cheap night hours and four must-execute
/// sells in the evening peak. A fuller battery buys less and sells more.
pub fn timing_bids(params: &TimingParams, est_level: f64) -> Vec<Bid> {
    let shift = params.alpha2 * est_level;
    let buy = round_volume(((params.alpha1 - shift) / 4.0).max(0.0));
    let sell = round_volume(((params.alpha1 + shift) / 4.0).max(0.0));
    TIMING_BUY_HOURS
        .iter()
        .map(|&h| Bid::buy(h, buy, f64::INFINITY))
        .chain(TIMING_SELL_HOURS.iter().map(|&h| Bid::sell(h, sell, 0.0)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::BidKind;

    fn vols(bids: &[Bid], kind: BidKind) -> Vec<f64> {
        bids.iter()
            .filter(|b| b.kind == kind)
            .map(|b| b.volume)
            .collect()
    }

    #[test]
    fn hand_evaluated() {
        let b = timing_bids(&TimingParams::new(1.0, 0.2).unwrap(), 0.5);
        assert_eq!(b.len(), 8);
        assert_eq!(vols(&b, BidKind::Buy), vec![0.2; 4]);
        assert_eq!(vols(&b, BidKind::Sell), vec![0.3; 4]);
        assert!(b
            .iter()
            .filter(|x| x.kind == BidKind::Buy)
            .all(|x| x.price == f64::INFINITY));
        assert!(b
            .iter()
            .filter(|x| x.kind == BidKind::Sell)
            .all(|x| x.price == 0.0));
        let hours: Vec<u8> = b.iter().map(|x| x.hour).collect();
        assert_eq!(hours, vec![0, 1, 2, 3, 17, 18, 19, 20]);
    }

    #[test]
    fn empty_battery_symmetric() {
        let b = timing_bids(&TimingParams::new(1.6, 7.0).unwrap(), 0.0);
        assert_eq!(vols(&b, BidKind::Buy), vols(&b, BidKind::Sell));
        assert_eq!(vols(&b, BidKind::Buy)[0], 0.4);
    }

    #[test]
    fn negative_buy_volume_clamps_to_no_bid() {
        let b = timing_bids(&TimingParams::new(0.1, 0.8).unwrap(), 1.0);
        assert!(b
            .iter()
            .filter(|x| x.kind == BidKind::Buy)
            .all(|x| x.is_empty()));
    }

    #[test]
    fn rejects_non_positive() {
        assert!(TimingParams::new(0.0, 1.0).is_err());
        assert!(TimingParams::new(1.0, -1.0).is_err());
        assert_eq!(TimingParams::from_search(&[-0.5, 2.0]).alpha1, 0.5);
    }
}
