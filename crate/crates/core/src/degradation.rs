//! Cycle and calendar aging models.
//!
//! Cycle aging uses a power-law depth stress function applied to cycles
//! extracted by Rainflow counting from the state-of-charge trajectory.
//! Depths are fractions of the capacity in effect for the day. Calendar
//! aging is a constant daily capacity-loss rate.
//!
//! For use inside the daily optimizer the stress function is also exposed
//! as `J` equal-energy segments with increasing marginal loss rates.

use serde::{Deserialize, Serialize};

use crate::battery::DispatchProfile;
use crate::error::{Error, Result};

/// Capacity loss caused by one full cycle of depth `u`: `coefficient * u^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressFunction {
    pub coefficient: f64,
    pub exponent: f64,
}

impl Default for StressFunction {
    fn default() -> Self {
        Self {
            coefficient: 3.14e-4,
            exponent: 2.03,
        }
    }
}

impl StressFunction {
    pub fn new(coefficient: f64, exponent: f64) -> Result<Self> {
        if !(coefficient > 0.0) || !(exponent > 1.0) {
            return Err(Error::Domain(format!(
                "stress function needs coefficient > 0 and exponent > 1, got {coefficient}, {exponent}"
            )));
        }
        Ok(Self {
            coefficient,
            exponent,
        })
    }

    pub fn cycle_stress(&self, depth: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&depth) {
            return Err(Error::Domain(format!("cycle depth {depth} outside [0, 1]")));
        }
        Ok(self.eval(depth))
    }

    #[inline]
    pub(crate) fn eval(&self, depth: f64) -> f64 {
        if depth <= 0.0 {
            0.0
        } else {
            self.coefficient * depth.powf(self.exponent)
        }
    }

    /// Marginal loss per unit depth, `d/du` of the stress function.
    pub fn derivative(&self, depth: f64) -> Result<f64> {
        if !(depth > 0.0 && depth <= 1.0) {
            return Err(Error::Domain(format!("derivative depth {depth} outside (0, 1]")));
        }
        Ok(self.coefficient * self.exponent * depth.powf(self.exponent - 1.0))
    }

    /// Depth at which the derivative equals `marginal`, clamped to `[0, 1]`.
    pub fn derivative_inverse(&self, marginal: f64) -> Result<f64> {
        if !(marginal > 0.0) {
            return Err(Error::Domain(format!(
                "inverse derivative needs a positive argument, got {marginal}"
            )));
        }
        let scale = self.coefficient * self.exponent;
        if marginal >= scale {
            return Ok(1.0);
        }
        let x = (marginal / scale).powf(1.0 / (self.exponent - 1.0));
        Ok(if x.is_finite() { x.clamp(0.0, 1.0) } else { 0.0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cycle {
    pub depth: f64,
    pub weight: f64,
}

/// Rainflow output. Weights are 1.0 for closed cycles and 0.5 for residual
/// half cycles.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CycleSet {
    pub cycles: Vec<Cycle>,
}

impl CycleSet {
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    /// Total absolute SoC travel represented by the cycles.
    pub fn total_swing(&self) -> f64 {
        self.cycles.iter().map(|c| 2.0 * c.weight * c.depth).sum()
    }

    pub fn degradation(&self, stress: &StressFunction) -> f64 {
        self.cycles
            .iter()
            .map(|c| c.weight * stress.eval(c.depth.min(1.0)))
            .sum()
    }
}

/// Reversal points of `series`: strict sign changes of the first
/// difference, plateaus merged, endpoints kept.
pub fn turning_points(series: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(series.len().min(1024));
    for &x in series {
        match out.len() {
            0 => out.push(x),
            1 => {
                if x != out[0] {
                    out.push(x);
                }
            }
            _ => {
                let n = out.len();
                let (a, b) = (out[n - 2], out[n - 1]);
                if x == b {
                    continue;
                }
                if (b - a) * (x - b) > 0.0 {
                    // same direction: extend the current run
                    out[n - 1] = x;
                } else {
                    out.push(x);
                }
            }
        }
    }
    out
}

/// Four-point Rainflow counting on a state-of-charge series (fractions of
/// capacity).
pub fn rainflow(soc_series: &[f64]) -> Result<CycleSet> {
    if soc_series.len() < 2 {
        return Err(Error::Domain(format!(
            "rainflow needs at least two samples, got {}",
            soc_series.len()
        )));
    }
    if let Some(x) = soc_series
        .iter()
        .find(|x| !(**x >= -1e-9 && **x <= 1.0 + 1e-9))
    {
        return Err(Error::Domain(format!("SoC sample {x} outside [0, 1]")));
    }
    Ok(rainflow_unchecked(&turning_points(soc_series)))
}

pub(crate) fn rainflow_unchecked(points: &[f64]) -> CycleSet {
    let mut cycles = Vec::new();
    let mut stack: Vec<f64> = Vec::with_capacity(points.len());
    for &p in points {
        stack.push(p);
        while stack.len() >= 4 {
            let n = stack.len();
            let inner = (stack[n - 2] - stack[n - 3]).abs();
            let before = (stack[n - 3] - stack[n - 4]).abs();
            let after = (stack[n - 1] - stack[n - 2]).abs();
            if inner <= before && inner <= after {
                cycles.push(Cycle {
                    depth: inner,
                    weight: 1.0,
                });
                let last = stack[n - 1];
                stack.truncate(n - 3);
                stack.push(last);
            } else {
                break;
            }
        }
    }
    for w in stack.windows(2) {
        let depth = (w[1] - w[0]).abs();
        if depth > 0.0 {
            cycles.push(Cycle { depth, weight: 0.5 });
        }
    }
    CycleSet { cycles }
}

/// Rainflow cycle aging of one day's dispatch, as a fraction of rated capacity.
pub fn daily_cycle_degradation(profile: &DispatchProfile, stress: &StressFunction) -> Result<f64> {
    Ok(rainflow(&profile.soc_fractions())?.degradation(stress))
}

/// Constant daily calendar aging: a fixed fraction lost over the shelf life.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalendarModel {
    pub eol_fraction_at_shelf_end: f64,
    pub shelf_life_days: f64,
}

impl Default for CalendarModel {
    fn default() -> Self {
        Self {
            eol_fraction_at_shelf_end: 0.2,
            shelf_life_days: 1825.0,
        }
    }
}

impl CalendarModel {
    pub fn daily_rate(&self) -> f64 {
        self.eol_fraction_at_shelf_end / self.shelf_life_days
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eol_fraction_at_shelf_end >= 0.0 && self.shelf_life_days > 0.0) {
            return Err(Error::Domain(format!(
                "calendar model needs fraction >= 0 and shelf life > 0, got {}, {}",
                self.eol_fraction_at_shelf_end, self.shelf_life_days
            )));
        }
        Ok(())
    }
}

pub fn calendar_rate(model: &CalendarModel) -> f64 {
    model.daily_rate()
}

/// Stress function cut into `J` depth segments of equal energy.
///
/// Discharging `x` MWh (measured at the terminals) out of segment `j` costs
/// `slopes[j] * x` of capacity; a full segment discharge therefore costs
/// the stress increment over that segment's depth range.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedStress {
    pub slopes: Vec<f64>,
    pub segment_energy_mwh: f64,
    pub efficiency: f64,
}

impl LinearizedStress {
    pub fn new(stress: &StressFunction, segments: usize, eta: f64, energy_mwh: f64) -> Result<Self> {
        if segments == 0 {
            return Err(Error::Domain("segment count must be at least 1".into()));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::Domain(format!("efficiency {eta} outside (0, 1]")));
        }
        if !(energy_mwh > 0.0) {
            return Err(Error::Domain(format!("energy {energy_mwh} must be positive")));
        }
        let j = segments as f64;
        let slopes = (1..=segments)
            .map(|k| {
                let hi = stress.eval(k as f64 / j);
                let lo = stress.eval((k - 1) as f64 / j);
                j / (eta * energy_mwh) * (hi - lo)
            })
            .collect();
        Ok(Self {
            slopes,
            segment_energy_mwh: energy_mwh / j,
            efficiency: eta,
        })
    }

    /// Zero-cost linearization (degradation disabled).
    pub fn free(segments: usize, eta: f64, energy_mwh: f64) -> Self {
        Self {
            slopes: vec![0.0; segments.max(1)],
            segment_energy_mwh: energy_mwh / segments.max(1) as f64,
            efficiency: eta,
        }
    }

    pub fn segments(&self) -> usize {
        self.slopes.len()
    }

    pub fn capacity_mwh(&self) -> f64 {
        self.segment_energy_mwh * self.slopes.len() as f64
    }

    /// Splits `stored_mwh` across segments, filling the cheapest first.
    pub fn initial_fill(&self, stored_mwh: f64) -> Vec<f64> {
        let mut rest = stored_mwh.max(0.0);
        self.slopes
            .iter()
            .map(|_| {
                let x = rest.min(self.segment_energy_mwh);
                rest -= x;
                x
            })
            .collect()
    }

    /// Least segment-model degradation over all decompositions of the
    /// profile's stored-energy changes: discharges drain the cheapest
    /// non-empty segment, charges fill the cheapest non-full one.
    pub fn profile_degradation(&self, profile: &DispatchProfile) -> f64 {
        let Some(&e0) = profile.soc_mwh.first() else {
            return 0.0;
        };
        let cap = self.segment_energy_mwh;
        let mut fill = self.initial_fill(e0);
        let mut total = 0.0;
        for w in profile.soc_mwh.windows(2) {
            let change = w[1] - w[0];
            if change < 0.0 {
                let mut need = -change;
                for (j, f) in fill.iter_mut().enumerate() {
                    if need <= 0.0 {
                        break;
                    }
                    let take = need.min(*f);
                    *f -= take;
                    need -= take;
                    total += self.slopes[j] * self.efficiency * take;
                }
            } else if change > 0.0 {
                let mut room = change;
                for f in fill.iter_mut() {
                    if room <= 0.0 {
                        break;
                    }
                    let put = room.min(cap - *f);
                    *f += put;
                    room -= put;
                }
            }
        }
        total
    }
}

pub fn linearize_stress(
    stress: &StressFunction,
    segments: usize,
    eta: f64,
    energy_mwh: f64,
) -> Result<LinearizedStress> {
    LinearizedStress::new(stress, segments, eta, energy_mwh)
}
