//! File formats, synthetic data and configuration.

pub mod config;
pub mod market;
pub mod report;

pub use config::{Config, SynthParams};
pub use market::{
    load_price_csv, load_reg_price_csv, load_signal_csv, price_days, regulation_days, synth_prices, synth_reg_prices,
    synth_signal, PriceSeries, SignalSeries, TimeSeries,
};
pub use report::{RunManifest, RunSummary};
