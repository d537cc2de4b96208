use dayahead::data::{generate_synthetic_dataset, Dataset, GeneratorConfig, HOURS};
use dayahead::market::{
    clear_bid, hourly_consumption, hourly_solar, hourly_wind, round_volume, Bid, BidKind,
    DayResult, EnvConfig, Market,
};
use dayahead::seeding;
use rand::Rng;
use rand_distr::{Distribution, Normal};

const TOL: f64 = 1e-9;

fn dataset(days: usize, seed: u64) -> Dataset {
    generate_synthetic_dataset(seed, days, &GeneratorConfig::default()).unwrap()
}

#[test]
fn clearing_grid_matches_index_order() {
    // prices on an exactly representable grid, so bid >= market iff i >= j
    let grid: Vec<f64> = (0..100).map(|i| -20.0 + 0.5 * i as f64).collect();
    let mut mismatches = 0;
    for (i, &bp) in grid.iter().enumerate() {
        for (j, &mp) in grid.iter().enumerate() {
            if clear_bid(&Bid::buy(0, 0.1, bp), mp) != (i >= j) {
                mismatches += 1;
            }
            if clear_bid(&Bid::sell(0, 0.1, bp), mp) != (i <= j) {
                mismatches += 1;
            }
            if clear_bid(&Bid::buy(0, 0.0, bp), mp) || clear_bid(&Bid::sell(0, 0.0, bp), mp) {
                mismatches += 1;
            }
        }
    }
    assert_eq!(mismatches, 0);
    assert!(clear_bid(&Bid::buy(3, 0.2, f64::INFINITY), 1e6));
}

#[test]
fn plant_formulas_hand_values() {
    let cfg = EnvConfig::default();
    let close = |a: f64, b: f64| assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    close(hourly_solar(&cfg, 0).unwrap(), 0.08);
    close(hourly_solar(&cfg, 4).unwrap(), 0.04);
    close(hourly_solar(&cfg, 8).unwrap(), 0.0);
    assert!(hourly_solar(&cfg, 9).is_err());
    close(hourly_wind(&cfg, 11.0), 0.05);
    close(hourly_wind(&cfg, 12.0), 0.0);
    close(hourly_wind(&cfg, 5.5), 0.025);
    close(hourly_wind(&cfg, 0.0), 0.0);
    close(hourly_consumption(&cfg, 0.002, 0.0), 0.2);
    close(hourly_consumption(&cfg, 0.002, -2.0), 0.2);
    close(hourly_consumption(&cfg, 0.002, 0.1), 0.22);
    let empty = EnvConfig {
        number_of_households: 0.0,
        ..EnvConfig::default()
    };
    close(hourly_consumption(&empty, 0.002, 0.3), 0.0);
}

#[test]
fn volume_grid_rounding() {
    assert_eq!(round_volume(0.0176), 0.0);
    assert_eq!(round_volume(0.05), 0.1);
    assert_eq!(round_volume(0.149), 0.1);
    assert_eq!(round_volume(-0.4), 0.0);
    assert_eq!(round_volume(f64::NAN), 0.0);
}

fn random_bids(rng: &mut impl Rng, anchors: &[f64; HOURS]) -> Vec<Bid> {
    let spread: Normal<f64> = Normal::new(0.0, 0.4).unwrap();
    let mut bids = Vec::new();
    for h in 0..HOURS {
        for kind in [BidKind::Buy, BidKind::Sell] {
            if rng.random_bool(0.4) {
                continue;
            }
            let volume = round_volume(rng.random_range(0.0..0.7));
            let price = if kind == BidKind::Buy && rng.random_bool(0.05) {
                f64::INFINITY
            } else {
                anchors[h] * spread.sample(rng).exp()
            };
            bids.push(Bid {
                volume,
                price,
                kind,
                hour: h as u8,
            });
        }
    }
    bids
}

/// Checks every hourly identity of one settled day against the bids placed.
fn check_day(cfg: &EnvConfig, bids: &[Bid], r: &DayResult) {
    let cap = cfg.battery_capacity;
    let eff = cfg.battery_efficiency;
    assert_eq!(r.hours.len(), HOURS);
    assert_eq!(r.battery_trace.len(), HOURS + 1);
    let mut total = 0.0;
    for (h, o) in r.hours.iter().enumerate() {
        let mut buy = 0.0;
        let mut sell = 0.0;
        for b in bids
            .iter()
            .filter(|b| b.hour as usize == h && b.volume > 0.0)
        {
            match b.kind {
                BidKind::Buy if b.price >= o.price => buy += b.volume,
                BidKind::Sell if b.price <= o.price => sell += b.volume,
                _ => {}
            }
        }
        assert!((o.buy_exec - buy).abs() < TOL);
        assert!((o.sell_exec - sell).abs() < TOL);
        for x in [
            o.production,
            o.consumption,
            o.charge_input,
            o.discharge,
            o.uns_buy,
            o.uns_sell,
        ] {
            assert!(x >= 0.0 && x.is_finite());
        }
        assert!(o.charge_input == 0.0 || o.discharge == 0.0);
        assert!(o.uns_buy == 0.0 || o.uns_sell == 0.0);
        let sources = o.production + o.buy_exec + o.discharge + o.uns_buy;
        let sinks = o.consumption + o.sell_exec + o.charge_input + o.uns_sell;
        assert!(
            (sources - sinks).abs() < TOL,
            "energy off by {}",
            sources - sinks
        );
        let before = r.battery_trace[h];
        assert_eq!(o.battery_after, r.battery_trace[h + 1]);
        let expected = before + eff * o.charge_input - o.discharge;
        assert!((o.battery_after - expected).abs() < TOL);
        assert!(o.battery_after >= 0.0 && o.battery_after <= cap);
        // the battery only spills when full and only runs short when empty
        if o.uns_sell > 0.0 {
            assert!((o.battery_after - cap).abs() < TOL);
        }
        if o.uns_buy > 0.0 {
            assert!(o.battery_after.abs() < TOL);
        }
        let cash = o.price * (o.sell_exec - o.buy_exec) + 0.5 * o.price * o.uns_sell
            - 2.0 * o.price * o.uns_buy;
        assert!((o.cash_delta - cash).abs() < TOL * (1.0 + cash.abs()));
        total += o.cash_delta;
    }
    assert!((r.reward - total).abs() < TOL * (1.0 + total.abs()));
}

#[test]
fn conservation_over_randomized_bidding() {
    let ds = dataset(500, 3);
    let configs = [
        EnvConfig::default(),
        EnvConfig {
            battery_capacity: 0.5,
            initial_battery_level: 1.0,
            ..EnvConfig::default()
        },
        EnvConfig {
            battery_capacity: 1.3,
            battery_efficiency: 1.0,
            initial_battery_level: 0.0,
            consumption_noise_std: 0.3,
            ..EnvConfig::default()
        },
    ];
    let mut rng = seeding::rng(99);
    let mut hours = 0;
    for cfg in configs {
        let market = Market::new(&ds, cfg.clone(), false).unwrap();
        let (mut state, _) = market.reset(30, rng.random()).unwrap();
        let mut midnight = state.midnight_charge();
        let mut cash = 0.0;
        loop {
            let ctx = market.decision_context(&state).unwrap();
            let bids = random_bids(&mut rng, &ctx.price_anchors);
            let Some(out) = market.step_day(&mut state, &bids).unwrap() else {
                break;
            };
            let r = &out.result;
            assert_eq!(r.day, ctx.delivery_day);
            assert_eq!(r.battery_trace[0], midnight);
            check_day(&cfg, &bids, r);
            cash += r.reward;
            assert!((state.cash - cash).abs() < TOL * (1.0 + cash.abs()));
            midnight = r.battery_trace[HOURS];
            hours += HOURS;
            if out.observation.is_none() {
                break;
            }
        }
    }
    assert!(hours >= 10_000, "only {hours} hours simulated");
}

fn replay(market: &Market, seed: u64, days: usize) -> Vec<DayResult> {
    let mut rng = seeding::rng(seed);
    let (mut state, _) = market.reset(40, seed).unwrap();
    let mut out = Vec::new();
    for _ in 0..days {
        let ctx = market.decision_context(&state).unwrap();
        let bids = random_bids(&mut rng, &ctx.price_anchors);
        out.push(market.step_day(&mut state, &bids).unwrap().unwrap().result);
    }
    out
}

#[test]
fn replay_leaves_data_untouched_and_repeats() {
    let ds = dataset(120, 5);
    let hash = ds.content_hash();
    let market = Market::new(&ds, EnvConfig::default(), false).unwrap();
    let a = replay(&market, 8, 60);
    let b = replay(&market, 8, 60);
    assert_eq!(a, b);
    let c = replay(&market, 9, 60);
    assert_ne!(a, c);
    assert_eq!(ds.content_hash(), hash);
    assert_eq!(
        generate_synthetic_dataset(5, 120, &GeneratorConfig::default())
            .unwrap()
            .content_hash(),
        hash
    );
}

#[test]
fn prices_and_weather_do_not_depend_on_actions() {
    let ds = dataset(90, 6);
    let market = Market::new(&ds, EnvConfig::default(), false).unwrap();
    let a = replay(&market, 1, 30);
    let b = replay(&market, 2, 30);
    for (x, y) in a.iter().zip(&b) {
        for (p, q) in x.hours.iter().zip(&y.hours) {
            assert_eq!(p.price, q.price);
            assert_eq!(p.production, q.production);
        }
    }
}

#[test]
fn episode_ends_with_the_data() {
    let ds = dataset(60, 2);
    let market = Market::new(&ds, EnvConfig::default(), false).unwrap();
    assert!(market.reset(59, 0).is_err());
    let (mut state, _) = market.reset(57, 0).unwrap();
    let out = market.step_day(&mut state, &[]).unwrap().unwrap();
    assert_eq!(out.result.day, 58);
    assert!(out.observation.is_some());
    let out = market.step_day(&mut state, &[]).unwrap().unwrap();
    assert!(out.observation.is_none());
    assert!(market.step_day(&mut state, &[]).unwrap().is_none());
}
