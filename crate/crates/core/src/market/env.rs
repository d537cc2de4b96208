//! Day-by-day replay simulator.
//!
//! Time advances in decision days. On decision day `d` the prosumer submits
//! bids for every hour of day `d + 1`; [`Market::step_day`] then settles all
//! 24 delivery hours against the recorded prices and weather, moving the
//! battery and the cash account. The only controllable state is the battery;
//! everything else is read from the dataset.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::bid::{clear_bid, Bid, BidKind};
use super::observation::{Observation, ObservationLayout};
use super::physics::{hourly_consumption, hourly_wind, solar_unchecked};
use super::price_stat::PriceAnchors;
use super::EnvConfig;
use crate::data::{Dataset, DayRange, HOURS};
use crate::error::{Error, Result};
use crate::seeding;

/// Everything that flowed through the prosumer in one delivery hour.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HourOutcome {
    pub hour: u8,
    pub price: f64,
    pub production: f64,
    pub consumption: f64,
    /// Executed bid volumes.
    pub buy_exec: f64,
    pub sell_exec: f64,
    /// Energy sent into the battery before losses.
    pub charge_input: f64,
    pub discharge: f64,
    /// Imbalance settled with the operator at penalty prices.
    pub uns_buy: f64,
    pub uns_sell: f64,
    pub battery_after: f64,
    pub cash_delta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExecutedBid {
    pub bid: Bid,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DayResult {
    /// Delivery day index.
    pub day: usize,
    pub reward: f64,
    pub executed_bids: Vec<ExecutedBid>,
    pub hours: Vec<HourOutcome>,
    /// Battery charge at each hour boundary, midnight to midnight.
    pub battery_trace: Vec<f64>,
}

impl DayResult {
    pub fn unscheduled_buys(&self) -> [f64; HOURS] {
        std::array::from_fn(|h| self.hours[h].uns_buy)
    }

    pub fn unscheduled_sells(&self) -> [f64; HOURS] {
        std::array::from_fn(|h| self.hours[h].uns_sell)
    }
}

/// Mutable simulation state, owned by one episode.
#[derive(Clone, Debug)]
pub struct EnvState {
    /// Current decision day.
    pub day: usize,
    /// Battery charge (MWh) at the decision time of `day`.
    pub battery_charge: f64,
    /// Accepted bids being delivered on `day`.
    pub scheduled_bids_today: Vec<Bid>,
    pub cash: f64,
    /// Realized charge at the end of `day`; simulator bookkeeping that
    /// strategies must not read.
    midnight_charge: f64,
    rng: seeding::Rng,
}

impl EnvState {
    pub fn midnight_charge(&self) -> f64 {
        self.midnight_charge
    }
}

pub struct StepOutcome {
    pub result: DayResult,
    /// Observation at the next decision point, `None` once the data runs
    /// out.
    pub observation: Option<Observation>,
}

/// What a strategy sees when placing bids for `delivery_day`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecisionContext {
    pub delivery_day: usize,
    pub est_level: f64,
    pub max_volume: f64,
    pub price_anchors: [f64; HOURS],
}

/// Flows of one hour given the netted energy balance.
#[derive(Clone, Copy, Debug)]
struct Settlement {
    charge_input: f64,
    discharge: f64,
    uns_buy: f64,
    uns_sell: f64,
    after: f64,
}

fn settle(config: &EnvConfig, charge: f64, net: f64) -> Settlement {
    let cap = config.battery_capacity;
    let eff = config.battery_efficiency;
    if net >= 0.0 {
        let room = ((cap - charge) / eff).max(0.0);
        let input = net.min(room);
        Settlement {
            charge_input: input,
            discharge: 0.0,
            uns_buy: 0.0,
            uns_sell: net - input,
            after: (charge + eff * input).min(cap),
        }
    } else {
        let need = -net;
        let out = need.min(charge);
        Settlement {
            charge_input: 0.0,
            discharge: out,
            uns_buy: need - out,
            uns_sell: 0.0,
            after: (charge - out).max(0.0),
        }
    }
}

/// The simulator for one dataset and plant. Cheap to share: all mutable
/// state lives in [`EnvState`].
#[derive(Clone, Debug)]
pub struct Market<'a> {
    data: &'a Dataset,
    config: EnvConfig,
    anchors: PriceAnchors,
    layout: ObservationLayout,
}

impl<'a> Market<'a> {
    pub fn new(data: &'a Dataset, config: EnvConfig, include_weather: bool) -> Result<Self> {
        config.validate()?;
        let price_scale = match config.price_scale {
            Some(s) => s,
            None => {
                let range = data
                    .splits()
                    .map(|s| s.train)
                    .unwrap_or(DayRange::new(0, data.num_days()));
                data.mean_price(range).max(f64::MIN_POSITIVE)
            }
        };
        let anchors = PriceAnchors::new(data, config.price_stat_window);
        let layout = ObservationLayout {
            include_weather,
            price_scale,
        };
        Ok(Self {
            data,
            config,
            anchors,
            layout,
        })
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn layout(&self) -> &ObservationLayout {
        &self.layout
    }

    pub fn observation_len(&self) -> usize {
        self.layout.len()
    }

    fn production(&self, day: usize, hour: usize) -> f64 {
        let r = self.data.record(day, hour);
        solar_unchecked(&self.config, r.cloudiness as f64) + hourly_wind(&self.config, r.wind_speed)
    }

    fn forecast_production(&self, day: usize, hour: usize) -> f64 {
        match self.data.forecast(day) {
            Some(f) => {
                solar_unchecked(&self.config, f.cloudiness[hour])
                    + hourly_wind(&self.config, f.wind_speed[hour])
            }
            // without forecasts the actual weather stands in for a perfect one
            None => self.production(day, hour),
        }
    }

    fn expected_consumption(&self, hour: usize) -> f64 {
        hourly_consumption(
            &self.config,
            self.data.profile().avg_per_household[hour],
            0.0,
        )
    }

    /// Settle every hour of `day` from `start_charge`.
    fn simulate_day(
        &self,
        day: usize,
        bids: &[Bid],
        start_charge: f64,
        rng: &mut seeding::Rng,
    ) -> DayResult {
        let cfg = &self.config;
        let mut charge = start_charge;
        let mut trace = Vec::with_capacity(HOURS + 1);
        trace.push(charge);
        let mut executed = Vec::with_capacity(bids.len());
        let mut hours = Vec::with_capacity(HOURS);
        let mut buy = [0.0; HOURS];
        let mut sell = [0.0; HOURS];
        for bid in bids {
            let h = bid.hour as usize;
            let accepted = clear_bid(bid, self.data.price(day, h));
            if accepted {
                match bid.kind {
                    BidKind::Buy => buy[h] += bid.volume,
                    BidKind::Sell => sell[h] += bid.volume,
                }
            }
            executed.push(ExecutedBid {
                bid: *bid,
                accepted,
            });
        }
        let mut reward = 0.0;
        for h in 0..HOURS {
            let price = self.data.price(day, h);
            let production = self.production(day, h);
            let z: f64 = StandardNormal.sample(rng);
            let rho = cfg.consumption_noise_std * z;
            let consumption =
                hourly_consumption(cfg, self.data.profile().avg_per_household[h], rho);
            let net = production + buy[h] - consumption - sell[h];
            let s = settle(cfg, charge, net);
            let cash_delta = sell[h] * price - buy[h] * price
                + s.uns_sell * cfg.penalty_sell_multiplier * price
                - s.uns_buy * cfg.penalty_buy_multiplier * price;
            reward += cash_delta;
            charge = s.after;
            trace.push(charge);
            hours.push(HourOutcome {
                hour: h as u8,
                price,
                production,
                consumption,
                buy_exec: buy[h],
                sell_exec: sell[h],
                charge_input: s.charge_input,
                discharge: s.discharge,
                uns_buy: s.uns_buy,
                uns_sell: s.uns_sell,
                battery_after: charge,
                cash_delta,
            });
        }
        DayResult {
            day,
            reward,
            executed_bids: executed,
            hours,
            battery_trace: trace,
        }
    }

    fn enter_day(&self, state: &mut EnvState, result: &DayResult) {
        state.day = result.day;
        state.battery_charge = result.battery_trace[self.config.elapsed_hours()];
        state.midnight_charge = result.battery_trace[HOURS];
        state.scheduled_bids_today = result
            .executed_bids
            .iter()
            .filter(|e| e.accepted)
            .map(|e| e.bid)
            .collect();
    }

    fn has_next_decision(&self, day: usize) -> bool {
        day + 1 < self.data.num_days()
            && (!self.layout.include_weather || self.data.forecast(day + 1).is_some())
    }

    /// Start an episode at the decision time of `day`. The battery starts the
    /// day at the configured initial level and the day is run without bids;
    /// its cash does not count.
    pub fn reset(&self, day: usize, seed: u64) -> Result<(EnvState, Observation)> {
        if !self.has_next_decision(day) {
            return Err(Error::invalid(format!(
                "cannot start an episode on day {day}: no following delivery day"
            )));
        }
        let mut rng = seeding::rng(seed);
        let start = self.config.initial_battery_level * self.config.battery_capacity;
        let warm = self.simulate_day(day, &[], start, &mut rng);
        let mut state = EnvState {
            day,
            battery_charge: start,
            scheduled_bids_today: Vec::new(),
            cash: 0.0,
            midnight_charge: start,
            rng,
        };
        self.enter_day(&mut state, &warm);
        let obs = self.build_observation(&state)?;
        Ok((state, obs))
    }

    /// Deliver `bids` on the day after the current decision day. `Ok(None)`
    /// when the dataset has no such day.
    pub fn step_day(&self, state: &mut EnvState, bids: &[Bid]) -> Result<Option<StepOutcome>> {
        let delivery = state.day + 1;
        if delivery >= self.data.num_days() {
            return Ok(None);
        }
        if let Some(b) = bids
            .iter()
            .find(|b| b.hour as usize >= HOURS || b.volume < 0.0)
        {
            return Err(Error::invalid(format!("malformed bid {b:?}")));
        }
        let result = self.simulate_day(delivery, bids, state.midnight_charge, &mut state.rng);
        state.cash += result.reward;
        self.enter_day(state, &result);
        let observation = if self.has_next_decision(delivery) {
            Some(self.build_observation(state)?)
        } else {
            None
        };
        Ok(Some(StepOutcome {
            result,
            observation,
        }))
    }

    /// Projected relative charge at the coming midnight, using today's
    /// accepted bids, forecast production and noise-free consumption.
    pub fn estimate_midnight_level(&self, state: &EnvState) -> f64 {
        let day = state.day;
        let mut buy = [0.0; HOURS];
        let mut sell = [0.0; HOURS];
        for b in &state.scheduled_bids_today {
            match b.kind {
                BidKind::Buy => buy[b.hour as usize] += b.volume,
                BidKind::Sell => sell[b.hour as usize] += b.volume,
            }
        }
        let mut charge = state.battery_charge;
        for h in self.config.elapsed_hours()..HOURS {
            let net =
                self.forecast_production(day, h) + buy[h] - self.expected_consumption(h) - sell[h];
            charge = settle(&self.config, charge, net).after;
        }
        charge / self.config.battery_capacity
    }

    pub fn decision_context(&self, state: &EnvState) -> Result<DecisionContext> {
        Ok(DecisionContext {
            delivery_day: state.day + 1,
            est_level: self.estimate_midnight_level(state),
            max_volume: self.config.max_hourly_production(),
            price_anchors: *self.anchors.for_day(state.day + 1)?,
        })
    }

    pub fn build_observation(&self, state: &EnvState) -> Result<Observation> {
        self.layout.build(
            self.data,
            &self.config,
            state.day,
            state.battery_charge / self.config.battery_capacity,
            self.estimate_midnight_level(state),
        )
    }

    /// Produced minus expected consumed energy valued at each day's mean
    /// price, summed over `days`. The no-skill benchmark.
    pub fn reference_balance(&self, days: DayRange) -> f64 {
        days_iter(days)
            .map(|d| {
                let produced: f64 = (0..HOURS).map(|h| self.production(d, h)).sum();
                let consumed: f64 = (0..HOURS).map(|h| self.expected_consumption(h)).sum();
                let mean = self.data.day_prices(d).iter().sum::<f64>() / HOURS as f64;
                (produced - consumed) * mean
            })
            .sum()
    }
}

fn days_iter(r: DayRange) -> std::ops::Range<usize> {
    r.start..r.end
}
