//! The market and prosumer simulator.

mod bid;
mod config;
mod env;
mod export;
mod observation;
mod physics;
mod price_stat;

pub use bid::{clear_bid, round_volume, Bid, BidKind};
pub use config::{EnvConfig, TimeOfDay};
pub use env::{
    DayResult, DecisionContext, EnvState, ExecutedBid, HourOutcome, Market, StepOutcome,
};
pub use export::write_day_results;
pub use observation::{
    Observation, ObservationLayout, MONTH_OFFSET, OBS_LEN_NO_WEATHER, OBS_LEN_WEATHER,
    WEATHER_OFFSET, WEEKDAY_OFFSET,
};
pub use physics::{hourly_consumption, hourly_solar, hourly_wind};
pub use price_stat::{rolling_hourly_price_stat, PriceAnchors};
