use crate::data::{Dataset, HOURS};
use crate::error::{Error, Result};

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Median price at `hour` over the `window` days strictly before `day`.
/// Fewer days are used while the series is still warming up; even counts
/// average the two middle values.
pub fn rolling_hourly_price_stat(
    prices: &[[f64; HOURS]],
    hour: usize,
    day: usize,
    window: usize,
) -> Result<f64> {
    if day == 0 || prices.is_empty() {
        return Err(Error::NoHistory { day });
    }
    let end = day.min(prices.len());
    let start = end.saturating_sub(window);
    let mut vals: Vec<f64> = prices[start..end].iter().map(|p| p[hour]).collect();
    Ok(median(&mut vals))
}

/// Per-hour price anchors for every delivery day of a dataset.
#[derive(Clone, Debug)]
pub struct PriceAnchors {
    by_day: Vec<[f64; HOURS]>,
}

impl PriceAnchors {
    pub fn new(dataset: &Dataset, window: usize) -> Self {
        let prices: Vec<[f64; HOURS]> = (0..dataset.num_days())
            .map(|d| dataset.day_prices(d))
            .collect();
        let mut by_day = vec![[f64::NAN; HOURS]; prices.len()];
        for (day, slot) in by_day.iter_mut().enumerate().skip(1) {
            for (h, v) in slot.iter_mut().enumerate() {
                *v = rolling_hourly_price_stat(&prices, h, day, window)
                    .expect("day > 0 has history");
            }
        }
        Self { by_day }
    }

    /// Anchors for bids delivered on `day`.
    pub fn for_day(&self, day: usize) -> Result<&[f64; HOURS]> {
        if day == 0 {
            return Err(Error::NoHistory { day });
        }
        self.by_day
            .get(day)
            .ok_or_else(|| Error::invalid(format!("day {day} is past the end of the dataset")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(at_noon: &[f64]) -> Vec<[f64; HOURS]> {
        at_noon
            .iter()
            .map(|v| {
                let mut d = [1.0; HOURS];
                d[12] = *v;
                d
            })
            .collect()
    }

    #[test]
    fn constant_series() {
        let p = series(&[300.0; 28]);
        assert_eq!(rolling_hourly_price_stat(&p, 12, 28, 28).unwrap(), 300.0);
    }

    #[test]
    fn warm_up_uses_available_days() {
        let p = series(&[100.0, 300.0, 200.0]);
        assert_eq!(rolling_hourly_price_stat(&p, 12, 3, 28).unwrap(), 200.0);
        assert_eq!(rolling_hourly_price_stat(&p, 12, 2, 28).unwrap(), 200.0);
        let even = series(&[100.0, 200.0]);
        assert_eq!(rolling_hourly_price_stat(&even, 12, 2, 28).unwrap(), 150.0);
    }

    #[test]
    fn window_drops_old_days() {
        let mut v = vec![1000.0; 5];
        v.extend([10.0; 3]);
        let p = series(&v);
        assert_eq!(rolling_hourly_price_stat(&p, 12, 8, 3).unwrap(), 10.0);
    }

    #[test]
    fn no_history_is_an_error() {
        let p = series(&[1.0]);
        assert!(matches!(
            rolling_hourly_price_stat(&p, 12, 0, 28),
            Err(Error::NoHistory { day: 0 })
        ));
    }
}
