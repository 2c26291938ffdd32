use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical and commercial parameters of the battery project.
///
/// Energies are MWh, power is MW, thresholds are fractions of the rated
/// (new) capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryParams {
    pub power_mw: f64,
    pub rated_energy_mwh: f64,
    pub round_trip_efficiency: f64,
    pub warranty_threshold: f64,
    pub eol_threshold: f64,
    pub pack_price_usd_per_kwh: f64,
}

impl Default for BatteryParams {
    fn default() -> Self {
        Self {
            power_mw: 0.5,
            rated_energy_mwh: 1.0,
            round_trip_efficiency: 0.85,
            warranty_threshold: 0.8,
            eol_threshold: 0.8,
            pack_price_usd_per_kwh: 200.0,
        }
    }
}

impl BatteryParams {
    /// One-way efficiency, the square root of the round-trip figure.
    pub fn single_trip_efficiency(&self) -> f64 {
        self.round_trip_efficiency.sqrt()
    }

    pub fn eol_energy_mwh(&self) -> f64 {
        self.eol_threshold * self.rated_energy_mwh
    }

    pub fn validate(&self) -> Result<()> {
        let eta = self.single_trip_efficiency();
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::Invalid(format!(
                "round-trip efficiency must be in (0, 1], got {}",
                self.round_trip_efficiency
            )));
        }
        if !(self.power_mw > 0.0 && self.rated_energy_mwh > 0.0) {
            return Err(Error::Invalid(
                "power and rated energy must be positive".into(),
            ));
        }
        if !(0.0 < self.eol_threshold
            && self.eol_threshold <= self.warranty_threshold
            && self.warranty_threshold <= 1.0)
        {
            return Err(Error::Invalid(format!(
                "thresholds must satisfy 0 < eol ({}) <= warranty ({}) <= 1",
                self.eol_threshold, self.warranty_threshold
            )));
        }
        if !(self.pack_price_usd_per_kwh >= 0.0) {
            return Err(Error::Invalid("pack price must be non-negative".into()));
        }
        Ok(())
    }
}

/// Per-interval power set-points for one operating day and the stored
/// energy they produce.
///
/// `power_mw[t]` is positive when discharging. `soc_mwh` has one more entry
/// than `power_mw`: `soc_mwh[0]` is the level at the start of the day.
#[derive(Debug, Clone, PartialEq)]
pub struct DispatchProfile {
    pub step_hours: f64,
    pub capacity_mwh: f64,
    pub power_mw: Vec<f64>,
    pub soc_mwh: Vec<f64>,
}

impl DispatchProfile {
    /// Integrates `power_mw` from `initial_soc_mwh` with one-way efficiency
    /// `eta`: discharge drains `p / eta * dt`, charge fills `|p| * eta * dt`.
    pub fn from_power(
        power_mw: Vec<f64>,
        step_hours: f64,
        capacity_mwh: f64,
        initial_soc_mwh: f64,
        eta: f64,
    ) -> Self {
        let mut soc = Vec::with_capacity(power_mw.len() + 1);
        let mut e = initial_soc_mwh;
        soc.push(e);
        for &p in &power_mw {
            e -= soc_change(p, eta) * step_hours;
            soc.push(e);
        }
        Self {
            step_hours,
            capacity_mwh,
            power_mw,
            soc_mwh: soc,
        }
    }

    /// Flat profile at `soc_mwh` for `steps` intervals.
    pub fn idle(steps: usize, step_hours: f64, capacity_mwh: f64, soc_mwh: f64) -> Self {
        Self {
            step_hours,
            capacity_mwh,
            power_mw: vec![0.0; steps],
            soc_mwh: vec![soc_mwh; steps + 1],
        }
    }

    pub fn soc_fractions(&self) -> Vec<f64> {
        self.soc_mwh
            .iter()
            .map(|e| (e / self.capacity_mwh).clamp(0.0, 1.0))
            .collect()
    }

    pub fn discharged_mwh(&self) -> f64 {
        self.power_mw
            .iter()
            .filter(|p| **p > 0.0)
            .map(|p| p * self.step_hours)
            .sum()
    }
}

/// Stored-energy drain rate (MW) for terminal power `p` (positive = discharge).
#[inline]
pub fn soc_change(p: f64, eta: f64) -> f64 {
    if p >= 0.0 {
        p / eta
    } else {
        p * eta
    }
}
