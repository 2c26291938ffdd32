//! Shared fixtures for the benchmarks.

use lifeval_core::arbitrage::DailyArbitrageInstance;
use lifeval_core::engine::{MarketDay, RunConfig};
use lifeval_core::io::{price_days, synth_prices, synth_signal};
use lifeval_core::value_function::PwlValue;
use lifeval_core::BatteryParams;

/// Synthetic five-minute price days.
pub fn price_market(days: usize) -> Vec<MarketDay> {
    price_days(&synth_prices(1, days, 30.0, 20.0, 5.0).expect("valid synth parameters"))
}

/// A full-size daily instance with a concave next-day value.
pub fn daily_instance() -> DailyArbitrageInstance {
    let params = BatteryParams::default();
    let prices = synth_prices(2, 1, 30.0, 20.0, 5.0).expect("valid synth parameters").values;
    let knots: Vec<f64> = (0..=20).map(|i| 1.0 - 0.01 * i as f64).collect();
    let values: Vec<f64> = (0..=20).map(|i| 4.0e5 * (20 - i) as f64 - 2.0e3 * ((20 - i) * (20 - i)) as f64).collect();
    RunConfig::default()
        .arbitrage_instance(&params, &prices, 0.97, PwlValue::new(knots, values).expect("valid cuts"))
        .expect("valid instance")
}

/// One day of stored-energy fractions from following a synthetic signal.
pub fn signal_soc_day() -> Vec<f64> {
    let signal = synth_signal(3, 1).expect("valid synth parameters").values;
    let mut e = 0.5;
    let mut soc = vec![e];
    for r in signal {
        e = (e - r / 1800.0).clamp(0.0, 1.0);
        soc.push(e);
    }
    soc
}
