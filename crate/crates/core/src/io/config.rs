//! Flat `key=value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are grouped
//! under `battery.`, `engine.` and `market.`; unknown keys are rejected.
//! `engine.annual_discount_rate` is accepted as an alternative to
//! `engine.daily_discount`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::battery::BatteryParams;
use crate::engine::{daily_discount_from_annual, RunConfig, StageMode};
use crate::error::{Error, Result};

/// Parameters of the synthetic market generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub price_base: f64,
    pub price_amplitude: f64,
    pub price_noise_sd: f64,
    pub reg_price_base: f64,
    pub reg_price_amplitude: f64,
    pub reg_price_noise_sd: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            price_base: 30.0,
            price_amplitude: 20.0,
            price_noise_sd: 5.0,
            reg_price_base: 25.0,
            reg_price_amplitude: 10.0,
            reg_price_noise_sd: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    pub battery: BatteryParams,
    pub run: RunConfig,
    pub synth: SynthParams,
}

fn detail(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", k + 1)))?;
            pairs.push((k + 1, key.trim().to_string(), value.trim().to_string()));
        }
        let mut cfg = Config::default();
        let mut seen = BTreeMap::new();
        for (line, key, value) in pairs {
            if let Some(first) = seen.insert(key.clone(), line) {
                return Err(Error::Config(format!("line {line}: '{key}' already set on line {first}")));
            }
            cfg.set(&key, &value)
                .map_err(|e| Error::Config(format!("line {line}: {}", detail(e))))?;
        }
        cfg.run.policy.efficiency = cfg.battery.single_trip_efficiency();
        cfg.battery.validate()?;
        cfg.run.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), detail(e))))
    }

    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let b = &mut self.battery;
        let r = &mut self.run;
        let s = &mut self.synth;
        match key {
            "battery.power_mw" => b.power_mw = parse_num(key, v)?,
            "battery.rated_energy_mwh" => b.rated_energy_mwh = parse_num(key, v)?,
            "battery.round_trip_efficiency" => b.round_trip_efficiency = parse_num(key, v)?,
            "battery.warranty_threshold" => b.warranty_threshold = parse_num(key, v)?,
            "battery.eol_threshold" => b.eol_threshold = parse_num(key, v)?,
            "battery.pack_price_usd_per_kwh" => b.pack_price_usd_per_kwh = parse_num(key, v)?,
            "engine.horizon_days" => r.horizon_days = parse_num(key, v)?,
            "engine.mode" => r.mode = v.parse::<StageMode>()?,
            "engine.daily_discount" => r.discount = parse_num(key, v)?,
            "engine.annual_discount_rate" => r.discount = daily_discount_from_annual(parse_num(key, v)?)?,
            "engine.calendar_fraction" => r.calendar.eol_fraction_at_shelf_end = parse_num(key, v)?,
            "engine.shelf_life_days" => r.calendar.shelf_life_days = parse_num(key, v)?,
            "engine.stress_coefficient" => r.stress.coefficient = parse_num(key, v)?,
            "engine.stress_exponent" => r.stress.exponent = parse_num(key, v)?,
            "engine.cycle_aging" => r.cycle_aging = parse_num(key, v)?,
            "engine.segments" => r.segments = parse_num(key, v)?,
            "engine.soh_step" => r.soh_step = parse_num(key, v)?,
            "engine.resale" => r.resale = parse_num(key, v)?,
            "engine.terminal_resale" => r.terminal_resale = parse_num(key, v)?,
            "engine.initial_soc_fraction" => r.initial_soc_fraction = parse_num(key, v)?,
            "engine.restore_shape" => r.restore_shape = parse_num(key, v)?,
            "engine.seed" => r.seed = parse_num(key, v)?,
            "market.offered_fraction" => r.offered_fraction = parse_num(key, v)?,
            "market.expected_price" => r.policy.expected_price = parse_num(key, v)?,
            "market.expected_signal_energy" => r.policy.expected_signal_energy = parse_num(key, v)?,
            "market.mileage_ratio" => r.policy.mileage_ratio = parse_num(key, v)?,
            "market.synth_price_base" => s.price_base = parse_num(key, v)?,
            "market.synth_price_amplitude" => s.price_amplitude = parse_num(key, v)?,
            "market.synth_price_noise_sd" => s.price_noise_sd = parse_num(key, v)?,
            "market.synth_reg_price_base" => s.reg_price_base = parse_num(key, v)?,
            "market.synth_reg_price_amplitude" => s.reg_price_amplitude = parse_num(key, v)?,
            "market.synth_reg_price_noise_sd" => s.reg_price_noise_sd = parse_num(key, v)?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Every key with its value, in file order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let b = &self.battery;
        let r = &self.run;
        let s = &self.synth;
        vec![
            ("battery.power_mw", b.power_mw.to_string()),
            ("battery.rated_energy_mwh", b.rated_energy_mwh.to_string()),
            ("battery.round_trip_efficiency", b.round_trip_efficiency.to_string()),
            ("battery.warranty_threshold", b.warranty_threshold.to_string()),
            ("battery.eol_threshold", b.eol_threshold.to_string()),
            ("battery.pack_price_usd_per_kwh", b.pack_price_usd_per_kwh.to_string()),
            ("engine.horizon_days", r.horizon_days.to_string()),
            ("engine.mode", r.mode.to_string()),
            ("engine.daily_discount", r.discount.to_string()),
            ("engine.calendar_fraction", r.calendar.eol_fraction_at_shelf_end.to_string()),
            ("engine.shelf_life_days", r.calendar.shelf_life_days.to_string()),
            ("engine.stress_coefficient", r.stress.coefficient.to_string()),
            ("engine.stress_exponent", r.stress.exponent.to_string()),
            ("engine.cycle_aging", r.cycle_aging.to_string()),
            ("engine.segments", r.segments.to_string()),
            ("engine.soh_step", r.soh_step.to_string()),
            ("engine.resale", r.resale.to_string()),
            ("engine.terminal_resale", r.terminal_resale.to_string()),
            ("engine.initial_soc_fraction", r.initial_soc_fraction.to_string()),
            ("engine.restore_shape", r.restore_shape.to_string()),
            ("engine.seed", r.seed.to_string()),
            ("market.offered_fraction", r.offered_fraction.to_string()),
            ("market.expected_price", r.policy.expected_price.to_string()),
            ("market.expected_signal_energy", r.policy.expected_signal_energy.to_string()),
            ("market.mileage_ratio", r.policy.mileage_ratio.to_string()),
            ("market.synth_price_base", s.price_base.to_string()),
            ("market.synth_price_amplitude", s.price_amplitude.to_string()),
            ("market.synth_price_noise_sd", s.price_noise_sd.to_string()),
            ("market.synth_reg_price_base", s.reg_price_base.to_string()),
            ("market.synth_reg_price_amplitude", s.reg_price_amplitude.to_string()),
            ("market.synth_reg_price_noise_sd", s.reg_price_noise_sd.to_string()),
        ]
    }

    /// Config file text that parses back to `self`.
    pub fn to_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn to_map(&self) -> BTreeMap<String, String> {
        self.entries().into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let text: String = map.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
        Self::parse(&text)
    }
}
