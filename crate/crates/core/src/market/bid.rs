use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BidKind {
    Buy,
    Sell,
}

/// One day-ahead bid for a single delivery hour.
///
/// `volume` is in MWh and always a nonnegative multiple of 0.1; zero means
/// the slot carries no bid. `price` is per MWh and may be `+inf` for a buy
/// that must execute.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bid {
    pub volume: f64,
    pub price: f64,
    pub kind: BidKind,
    pub hour: u8,
}

impl Bid {
    pub fn buy(hour: u8, volume: f64, price: f64) -> Self {
        Self {
            volume,
            price,
            kind: BidKind::Buy,
            hour,
        }
    }

    pub fn sell(hour: u8, volume: f64, price: f64) -> Self {
        Self {
            volume,
            price,
            kind: BidKind::Sell,
            hour,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.volume <= 0.0
    }
}

/// Round a volume to the market's 0.1 MWh grid, halves away from zero.
/// Negative and non-finite inputs give zero.
pub fn round_volume(v: f64) -> f64 {
    if !(v > 0.0) || !v.is_finite() {
        return 0.0;
    }
    (v * 10.0).round() / 10.0
}

/// Whether a bid executes at the given clearing price: buys when the bid
/// price is not below it, sells when the bid price is not above it. Empty
/// bids never execute.
pub fn clear_bid(bid: &Bid, clearing_price: f64) -> bool {
    if bid.is_empty() {
        return false;
    }
    match bid.kind {
        BidKind::Buy => bid.price >= clearing_price,
        BidKind::Sell => bid.price <= clearing_price,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clearing_rules() {
        assert!(clear_bid(&Bid::buy(0, 1.0, 100.0), 100.0));
        assert!(!clear_bid(&Bid::buy(0, 1.0, 99.99), 100.0));
        assert!(clear_bid(&Bid::sell(0, 1.0, 100.0), 101.0));
        assert!(clear_bid(&Bid::sell(0, 1.0, 100.0), 100.0));
        assert!(!clear_bid(&Bid::sell(0, 1.0, 100.5), 100.0));
    }

    #[test]
    fn sentinel_prices_always_clear() {
        for p in [0.0, 1.0, 250.0, 1e9] {
            assert!(clear_bid(&Bid::buy(3, 0.1, f64::INFINITY), p));
            assert!(clear_bid(&Bid::sell(3, 0.1, 0.0), p));
        }
    }

    #[test]
    fn empty_bids_never_clear() {
        assert!(!clear_bid(&Bid::buy(0, 0.0, f64::INFINITY), 10.0));
        assert!(!clear_bid(&Bid::sell(0, 0.0, 0.0), 10.0));
    }

    #[test]
    fn volume_grid() {
        assert_eq!(round_volume(0.225), 0.2);
        assert_eq!(round_volume(0.275), 0.3);
        assert_eq!(round_volume(0.0499), 0.0);
        assert_eq!(round_volume(0.05), 0.1);
        assert_eq!(round_volume(-0.4), 0.0);
        assert_eq!(round_volume(f64::NAN), 0.0);
        assert_eq!(round_volume(0.13 * 3f64.exp()), 2.6);
    }
}
