//! Frequency-regulation daily stage.
//!
//! The battery follows a normalized regulation instruction tick by tick and
//! is paid per hour in proportion to a performance score. Degradation is
//! limited by a state-of-charge band whose width shrinks as the marginal
//! cost of capacity rises.

use serde::{Deserialize, Serialize};

use crate::battery::{soc_change, BatteryParams, DispatchProfile};
use crate::degradation::StressFunction;
use crate::error::{Error, Result};

pub const DEFAULT_TICK_SECONDS: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RegulationDay {
    /// Normalized instruction in [-1, 1], one value per tick.
    pub signal: Vec<f64>,
    pub tick_seconds: f64,
    /// Capacity price per hour, $/MW.
    pub hourly_prices: Vec<f64>,
    /// Regulation capacity offered, MW.
    pub capacity_mw: f64,
}

impl RegulationDay {
    pub fn ticks_per_hour(&self) -> usize {
        (3600.0 / self.tick_seconds).round() as usize
    }

    pub fn validate(&self, params: &BatteryParams) -> Result<()> {
        if !(self.tick_seconds > 0.0) {
            return Err(Error::Invalid("tick length must be positive".into()));
        }
        let per_hour = self.ticks_per_hour();
        if (per_hour as f64 * self.tick_seconds - 3600.0).abs() > 1e-9 {
            return Err(Error::Invalid(format!(
                "tick of {} s does not divide an hour",
                self.tick_seconds
            )));
        }
        if self.signal.len() != per_hour * self.hourly_prices.len() || self.hourly_prices.is_empty() {
            return Err(Error::Invalid(format!(
                "{} signal ticks do not cover {} hours",
                self.signal.len(),
                self.hourly_prices.len()
            )));
        }
        if let Some(k) = self.signal.iter().position(|r| !(r.abs() <= 1.0)) {
            return Err(Error::Invalid(format!("signal value {} at tick {k} outside [-1, 1]", self.signal[k])));
        }
        if self.hourly_prices.iter().any(|p| !p.is_finite()) {
            return Err(Error::Invalid("non-finite regulation price".into()));
        }
        if !(self.capacity_mw >= 0.0 && self.capacity_mw <= params.power_mw) {
            return Err(Error::Invalid(format!(
                "offered capacity {} MW outside [0, {}]",
                self.capacity_mw, params.power_mw
            )));
        }
        Ok(())
    }
}

/// Inputs of the band policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    /// Expected capacity price, $/MW-h.
    pub expected_price: f64,
    /// Expected signal energy, MWh per MW of capacity per hour.
    pub expected_signal_energy: f64,
    pub mileage_ratio: f64,
    /// Single-trip efficiency.
    pub efficiency: f64,
}

impl Default for PolicyParams {
    fn default() -> Self {
        Self {
            expected_price: 25.0,
            expected_signal_energy: 0.35,
            mileage_ratio: 3.0,
            efficiency: BatteryParams::default().single_trip_efficiency(),
        }
    }
}

impl PolicyParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.expected_price,
            self.expected_signal_energy,
            self.mileage_ratio,
            self.efficiency,
        ];
        if all.iter().any(|x| !(*x > 0.0 && x.is_finite())) || self.efficiency > 1.0 {
            return Err(Error::Invalid(format!("policy parameters must be positive: {self:?}")));
        }
        Ok(())
    }

    /// Expected revenue per unit of signal mileage.
    pub fn pi(&self) -> f64 {
        (2.0 / 3.0) * self.expected_price / (self.expected_signal_energy * self.mileage_ratio)
    }
}

/// Allowed SoC swing as a fraction of capacity for marginal degradation
/// cost `marginal_cost` ($/MWh of capacity). Zero cost leaves the swing
/// unconstrained.
pub fn soc_band(policy: &PolicyParams, stress: &StressFunction, marginal_cost: f64) -> Result<f64> {
    policy.validate()?;
    if marginal_cost.is_nan() || marginal_cost < 0.0 {
        return Err(Error::Domain(format!("marginal cost {marginal_cost} must be >= 0")));
    }
    if marginal_cost == 0.0 {
        return Ok(1.0);
    }
    let eta = policy.efficiency;
    let arg = (eta * eta + 1.0) / (eta * marginal_cost) * policy.pi();
    if arg <= 0.0 {
        // the argument underflowed: the band has collapsed
        return Ok(0.0);
    }
    Ok(stress.derivative_inverse(arg)?.clamp(0.0, 1.0))
}

#[derive(Debug, Clone)]
pub struct RegulationOutcome {
    /// Tick-level response and stored energy.
    pub profile: DispatchProfile,
    pub hourly_scores: Vec<f64>,
    /// Capacity payments before degradation, $.
    pub revenue: f64,
}

/// Follows the day's signal inside the SoC band of width `band * capacity`
/// centred on `initial_soc_mwh`.
pub fn simulate_day(
    day: &RegulationDay,
    capacity_mwh: f64,
    initial_soc_mwh: f64,
    band: f64,
    params: &BatteryParams,
) -> Result<RegulationOutcome> {
    day.validate(params)?;
    if !(0.0..=1.0).contains(&band) {
        return Err(Error::Domain(format!("band {band} outside [0, 1]")));
    }
    if !(capacity_mwh > 0.0 && (0.0..=capacity_mwh).contains(&initial_soc_mwh)) {
        return Err(Error::Invalid("initial SoC outside [0, capacity]".into()));
    }
    let eta = params.single_trip_efficiency();
    let dt = day.tick_seconds / 3600.0;
    let lo = (initial_soc_mwh - 0.5 * band * capacity_mwh).max(0.0);
    let hi = (initial_soc_mwh + 0.5 * band * capacity_mwh).min(capacity_mwh);
    let b = day.capacity_mw;

    let mut power = Vec::with_capacity(day.signal.len());
    let mut soc = Vec::with_capacity(day.signal.len() + 1);
    let mut e = initial_soc_mwh;
    soc.push(e);
    for &r in &day.signal {
        let mut p = (r * b).clamp(-params.power_mw, params.power_mw);
        if p > 0.0 {
            p = p.min(((e - lo) * eta / dt).max(0.0));
        } else if p < 0.0 {
            p = p.max(-((hi - e) / (eta * dt)).max(0.0));
        }
        e -= soc_change(p, eta) * dt;
        power.push(p);
        soc.push(e);
    }

    let per_hour = day.ticks_per_hour();
    let mut scores = Vec::with_capacity(day.hourly_prices.len());
    let mut revenue = 0.0;
    for (h, price) in day.hourly_prices.iter().enumerate() {
        let span = h * per_hour..(h + 1) * per_hour;
        let rho = performance_score(&power[span.clone()], &day.signal[span], b)?;
        revenue += rho * price * b;
        scores.push(rho);
    }
    Ok(RegulationOutcome {
        profile: DispatchProfile {
            step_hours: dt,
            capacity_mwh,
            power_mw: power,
            soc_mwh: soc,
        },
        hourly_scores: scores,
        revenue,
    })
}

/// Mean of accuracy, correlation and delay scores of `response` (MW)
/// against `instruction` scaled by `capacity_mw`. Delay is always 1.
pub fn performance_score(response: &[f64], instruction: &[f64], capacity_mw: f64) -> Result<f64> {
    if response.len() != instruction.len() {
        return Err(Error::Invalid(format!(
            "response has {} points, instruction {}",
            response.len(),
            instruction.len()
        )));
    }
    if response.len() < 2 {
        return Err(Error::Invalid("performance score needs at least two points".into()));
    }
    let target: Vec<f64> = instruction.iter().map(|r| r * capacity_mw).collect();
    let scale: f64 = target.iter().map(|x| x.abs()).sum();
    let accuracy = if scale == 0.0 {
        1.0
    } else {
        let err: f64 = response.iter().zip(&target).map(|(p, x)| (p - x).abs()).sum();
        (1.0 - err / scale).max(0.0)
    };
    let correlation = match pearson(response, &target) {
        Some(c) => c.max(0.0),
        None => {
            let flat = |xs: &[f64]| xs.iter().all(|x| *x == xs[0]);
            if flat(response) && flat(&target) {
                1.0
            } else {
                0.0
            }
        }
    };
    Ok(((accuracy + correlation + 1.0) / 3.0).clamp(0.0, 1.0))
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(signal: Vec<f64>, hours: usize) -> RegulationDay {
        RegulationDay {
            signal,
            tick_seconds: 2.0,
            hourly_prices: vec![20.0; hours],
            capacity_mw: 0.5,
        }
    }

    #[test]
    fn band_examples() {
        let stress = StressFunction::default();
        let policy = PolicyParams {
            efficiency: 0.922,
            expected_price: 10.0,
            expected_signal_energy: 2.0 / 3.0,
            mileage_ratio: 1.0,
        };
        assert!((policy.pi() - 10.0).abs() < 1e-12);
        let u = soc_band(&policy, &stress, 6.427e4).unwrap();
        assert!((u - 0.5).abs() < 1e-3, "{u}");

        let eta = 0.922;
        let c_full = (eta * eta + 1.0) / eta * 10.0 / stress.derivative(1.0).unwrap();
        assert!((soc_band(&policy, &stress, c_full).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(soc_band(&policy, &stress, 0.0).unwrap(), 1.0);
        assert!(soc_band(&policy, &stress, 1e300).unwrap() < 1e-100);
        assert!(soc_band(&policy, &stress, -1.0).is_err());
        assert!(soc_band(&policy, &stress, f64::NAN).is_err());
    }

    #[test]
    fn score_examples() {
        let r: Vec<f64> = (0..100).map(|k| (k as f64 * 0.1).sin()).collect();
        let exact: Vec<f64> = r.iter().map(|x| x * 0.5).collect();
        assert!((performance_score(&exact, &r, 0.5).unwrap() - 1.0).abs() < 1e-12);
        let zero = vec![0.0; 100];
        assert!((performance_score(&zero, &r, 0.5).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        let half: Vec<f64> = r.iter().map(|x| x * 0.25).collect();
        assert!((performance_score(&half, &r, 0.5).unwrap() - 2.5 / 3.0).abs() < 1e-12);
        assert!(performance_score(&zero, &zero, 0.5).unwrap() == 1.0);
        assert!(performance_score(&zero[..3], &r[..2], 0.5).is_err());
    }

    #[test]
    fn null_signal_pays_full_price() {
        let d = day(vec![0.0; 43_200], 24);
        let out = simulate_day(&d, 1.0, 0.5, 0.3, &BatteryParams::default()).unwrap();
        assert!(out.hourly_scores.iter().all(|s| *s == 1.0));
        assert!((out.revenue - 24.0 * 20.0 * 0.5).abs() < 1e-9);
        assert!(out.profile.soc_mwh.iter().all(|e| *e == 0.5));
    }

    #[test]
    fn square_wave_tracks_exactly() {
        // +-1 alternating every 10 minutes = 300 ticks
        let sig: Vec<f64> = (0..1800).map(|k| if (k / 300) % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let d = day(sig.clone(), 1);
        let out = simulate_day(&d, 1.0, 0.5, 1.0, &BatteryParams::default()).unwrap();
        for (p, r) in out.profile.power_mw.iter().zip(&sig) {
            assert_eq!(*p, r * 0.5);
        }
        assert!((out.hourly_scores[0] - 1.0).abs() < 1e-12);
        let lowest = out.profile.soc_mwh.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(lowest > 0.0);
    }

    #[test]
    fn zero_band_never_moves() {
        let sig: Vec<f64> = (0..1800).map(|k| (k as f64 / 100.0).sin()).collect();
        let d = day(sig.clone(), 1);
        let out = simulate_day(&d, 1.0, 0.5, 0.0, &BatteryParams::default()).unwrap();
        assert!(out.profile.power_mw.iter().all(|p| *p == 0.0));
        let zero = vec![0.0; 1800];
        let expect = performance_score(&zero, &sig, 0.5).unwrap();
        assert_eq!(out.hourly_scores[0], expect);
    }

    #[test]
    fn rejects_bad_days() {
        let p = BatteryParams::default();
        let mut d = day(vec![0.0; 1800], 1);
        d.signal[5] = 1.5;
        assert!(simulate_day(&d, 1.0, 0.5, 0.5, &p).is_err());
        let d = day(vec![0.0; 1799], 1);
        assert!(simulate_day(&d, 1.0, 0.5, 0.5, &p).is_err());
        let mut d = day(vec![0.0; 1800], 1);
        d.capacity_mw = 0.6;
        assert!(simulate_day(&d, 1.0, 0.5, 0.5, &p).is_err());
    }
}
