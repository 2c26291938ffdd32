//! Market time series: CSV loading and seeded synthetic generators.
//!
//! Synthetic data uses the ChaCha8 generator seeded with
//! `ChaCha8Rng::seed_from_u64`, so a seed gives the same series on every
//! platform.

use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Duration, NaiveDate, NaiveDateTime, Timelike, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::engine::MarketDay;
use crate::error::{Error, Result};
use crate::regulation::RegulationDay;

pub const PRICE_HEADER: &str = "price_usd_per_mwh";
pub const SIGNAL_HEADER: &str = "signal";
pub const REG_PRICE_HEADER: &str = "regd_price_usd_per_mw";

pub const PRICE_STEP_SECONDS: i64 = 300;
pub const SIGNAL_STEP_SECONDS: i64 = 2;
pub const REG_PRICE_STEP_SECONDS: i64 = 3600;

/// Uniformly spaced UTC series starting at midnight.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub start: DateTime<Utc>,
    pub step_seconds: i64,
    pub values: Vec<f64>,
}

/// Energy prices, $/MWh, every five minutes.
pub type PriceSeries = TimeSeries;
/// Normalized regulation instruction every two seconds.
pub type SignalSeries = TimeSeries;

impl TimeSeries {
    pub fn per_day(&self) -> usize {
        (86_400 / self.step_seconds) as usize
    }

    pub fn days(&self) -> usize {
        self.values.len() / self.per_day()
    }

    pub fn day(&self, n: usize) -> &[f64] {
        let k = self.per_day();
        &self.values[n * k..(n + 1) * k]
    }

    pub fn timestamp(&self, k: usize) -> DateTime<Utc> {
        self.start + Duration::seconds(self.step_seconds * k as i64)
    }

    pub fn write_csv<W: Write>(&self, mut w: W, header: &str) -> Result<()> {
        writeln!(w, "timestamp,{header}")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", format_timestamp(self.timestamp(k)), v)?;
        }
        Ok(())
    }

    fn validate_shape(&self) -> Result<()> {
        let t = self.start;
        if t.hour() != 0 || t.minute() != 0 || t.second() != 0 {
            return Err(Error::Invalid(format!(
                "series starts at {}, not at UTC midnight",
                format_timestamp(t)
            )));
        }
        if self.values.is_empty() || self.values.len() % self.per_day() != 0 {
            return Err(Error::Invalid(format!(
                "{} points is not a whole number of {}-point days",
                self.values.len(),
                self.per_day()
            )));
        }
        Ok(())
    }
}

pub fn format_timestamp(t: DateTime<Utc>) -> String {
    t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

/// Accepts RFC 3339 timestamps or naive ones taken as UTC.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|n| n.and_utc())
}

fn load_series(path: &Path, value_header: &str, step_seconds: i64) -> Result<TimeSeries> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "timestamp" || &headers[1] != value_header {
        return Err(parse_err(
            1,
            format!("expected header 'timestamp,{value_header}', found '{}'", headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut start: Option<DateTime<Utc>> = None;
    let mut prev: Option<DateTime<Utc>> = None;
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() != 2 {
            return Err(parse_err(line, format!("expected 2 fields, found {}", rec.len())));
        }
        let t = parse_timestamp(&rec[0]).ok_or_else(|| parse_err(line, format!("bad timestamp '{}'", &rec[0])))?;
        let v: f64 = rec[1]
            .parse()
            .map_err(|_| parse_err(line, format!("bad number '{}'", &rec[1])))?;
        if !v.is_finite() {
            return Err(parse_err(line, format!("non-finite value '{}'", &rec[1])));
        }
        if let Some(p) = prev {
            let gap = (t - p).num_seconds();
            if gap == 0 {
                return Err(parse_err(line, format!("duplicate timestamp {}", format_timestamp(t))));
            }
            if gap < 0 {
                return Err(parse_err(line, format!("timestamp {} goes backwards", format_timestamp(t))));
            }
            if gap > step_seconds && gap % step_seconds == 0 {
                let missing = p + Duration::seconds(step_seconds);
                return Err(parse_err(line, format!("gap: no data at {}", format_timestamp(missing))));
            }
            if gap != step_seconds {
                return Err(parse_err(line, format!("non-uniform step of {gap} s (expected {step_seconds} s)")));
            }
        } else {
            start = Some(t);
        }
        prev = Some(t);
        values.push(v);
    }
    let start = start.ok_or_else(|| parse_err(2, "no data rows".into()))?;
    let series = TimeSeries {
        start,
        step_seconds,
        values,
    };
    series.validate_shape().map_err(|e| parse_err(0, e.to_string()))?;
    Ok(series)
}

/// Five-minute energy prices with header `timestamp,price_usd_per_mwh`.
pub fn load_price_csv(path: &Path) -> Result<PriceSeries> {
    load_series(path, PRICE_HEADER, PRICE_STEP_SECONDS)
}

/// Two-second regulation signal with header `timestamp,signal`.
pub fn load_signal_csv(path: &Path) -> Result<SignalSeries> {
    let s = load_series(path, SIGNAL_HEADER, SIGNAL_STEP_SECONDS)?;
    if let Some(k) = s.values.iter().position(|v| v.abs() > 1.0) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: k + 2,
            msg: format!("signal {} outside [-1, 1]", s.values[k]),
        });
    }
    Ok(s)
}

/// Hourly regulation capacity prices with header `timestamp,regd_price_usd_per_mw`.
pub fn load_reg_price_csv(path: &Path) -> Result<TimeSeries> {
    load_series(path, REG_PRICE_HEADER, REG_PRICE_STEP_SECONDS)
}

fn epoch() -> DateTime<Utc> {
    NaiveDate::from_ymd_opt(2024, 1, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid date")
        .and_utc()
}

/// Diurnal shape in [-1, 1] with its trough at 04:00 and peak at 18:00.
pub fn diurnal_shape(hour: f64) -> f64 {
    use std::f64::consts::PI;
    let h = (hour - 4.0).rem_euclid(24.0);
    if h <= 14.0 {
        -(PI * h / 14.0).cos()
    } else {
        (PI * (h - 14.0) / 10.0).cos()
    }
}

fn diurnal_series(rng: &mut ChaCha8Rng, days: usize, step_seconds: i64, base: f64, amplitude: f64, noise_sd: f64) -> TimeSeries {
    let per_day = (86_400 / step_seconds) as usize;
    let noise = Normal::new(0.0, noise_sd.abs()).expect("finite sd");
    let values = (0..days * per_day)
        .map(|k| {
            let hour = ((k % per_day) as f64) * step_seconds as f64 / 3600.0;
            let eps = if noise_sd == 0.0 { 0.0 } else { noise.sample(rng) };
            base + amplitude * diurnal_shape(hour) + eps
        })
        .collect();
    TimeSeries {
        start: epoch(),
        step_seconds,
        values,
    }
}

/// Five-minute prices: diurnal profile plus Gaussian noise.
pub fn synth_prices(seed: u64, days: usize, base: f64, amplitude: f64, noise_sd: f64) -> Result<PriceSeries> {
    if days == 0 {
        return Err(Error::Invalid("need at least one day".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(diurnal_series(&mut rng, days, PRICE_STEP_SECONDS, base, amplitude, noise_sd))
}

/// Hourly regulation prices, drawn from a separate stream of `seed`.
pub fn synth_reg_prices(seed: u64, days: usize, base: f64, amplitude: f64, noise_sd: f64) -> Result<TimeSeries> {
    if days == 0 {
        return Err(Error::Invalid("need at least one day".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut s = diurnal_series(&mut rng, days, REG_PRICE_STEP_SECONDS, base, amplitude, noise_sd);
    for v in &mut s.values {
        *v = v.max(0.0);
    }
    Ok(s)
}

/// Two-second regulation signal: an Ornstein-Uhlenbeck walk, re-centred to
/// zero mean and rescaled into [-1, 1] hour by hour.
pub fn synth_signal(seed: u64, days: usize) -> Result<SignalSeries> {
    const TAU_SECONDS: f64 = 120.0;
    const SPREAD: f64 = 0.45;
    if days == 0 {
        return Err(Error::Invalid("need at least one day".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let a = (-(SIGNAL_STEP_SECONDS as f64) / TAU_SECONDS).exp();
    let kick = SPREAD * (1.0 - a * a).sqrt();
    let per_hour = (3600 / SIGNAL_STEP_SECONDS) as usize;
    let mut x = 0.0;
    let mut values = Vec::with_capacity(days * 24 * per_hour);
    for _ in 0..days * 24 {
        let mut hour: Vec<f64> = (0..per_hour)
            .map(|_| {
                x = a * x + kick * std_normal.sample(&mut rng);
                x
            })
            .collect();
        let mean = hour.iter().sum::<f64>() / per_hour as f64;
        let peak = hour.iter().map(|v| (v - mean).abs()).fold(1.0, f64::max);
        for v in &mut hour {
            *v = ((*v - mean) / peak).clamp(-1.0, 1.0);
        }
        values.extend(hour);
    }
    Ok(TimeSeries {
        start: epoch(),
        step_seconds: SIGNAL_STEP_SECONDS,
        values,
    })
}

/// Splits a price series into daily market days.
pub fn price_days(series: &PriceSeries) -> Vec<MarketDay> {
    (0..series.days()).map(|n| MarketDay::Prices(series.day(n).to_vec())).collect()
}

/// Pairs signal days with hourly regulation prices.
pub fn regulation_days(signal: &SignalSeries, prices: &TimeSeries, capacity_mw: f64) -> Result<Vec<MarketDay>> {
    if signal.start != prices.start || signal.days() != prices.days() {
        return Err(Error::Invalid(format!(
            "signal covers {} days from {}, prices {} days from {}",
            signal.days(),
            format_timestamp(signal.start),
            prices.days(),
            format_timestamp(prices.start)
        )));
    }
    Ok((0..signal.days())
        .map(|n| {
            MarketDay::Regulation(RegulationDay {
                signal: signal.day(n).to_vec(),
                tick_seconds: signal.step_seconds as f64,
                hourly_prices: prices.day(n).to_vec(),
                capacity_mw,
            })
        })
        .collect())
}
