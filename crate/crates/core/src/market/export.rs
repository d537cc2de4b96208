use std::path::Path;

use serde::Serialize;

use super::DayResult;
use crate::error::{Error, Result};

#[derive(Serialize)]
struct Row {
    day: usize,
    hour: u8,
    price: f64,
    buy_exec: f64,
    sell_exec: f64,
    uns_buy: f64,
    uns_sell: f64,
    battery_level: f64,
    cash_delta: f64,
}

/// Hourly settlement trace: one CSV row per delivery hour.
pub fn write_day_results<'a>(
    path: impl AsRef<Path>,
    results: impl IntoIterator<Item = &'a DayResult>,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    for r in results {
        for h in &r.hours {
            w.serialize(Row {
                day: r.day,
                hour: h.hour,
                price: h.price,
                buy_exec: h.buy_exec,
                sell_exec: h.sell_exec,
                uns_buy: h.uns_buy,
                uns_sell: h.uns_sell,
                battery_level: h.battery_after,
                cash_delta: h.cash_delta,
            })
            .map_err(|e| Error::csv(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
