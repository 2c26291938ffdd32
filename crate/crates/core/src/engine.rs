//! Backward-induction drivers for the capacity value surface.
//!
//! `run_algorithm1` optimizes every (day, capacity) stage against the next
//! day's value. `run_algorithm2` instead asks a policy for the day's
//! operation, prices its aging at the next day's marginal cost of capacity
//! and discounts. Both fill the surface from the last day backwards.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::arbitrage::{solve_daily, solve_with_degradation_price, DailyArbitrageInstance, DEFAULT_SEGMENTS};
pub use crate::battery::BatteryParams;
use crate::degradation::{daily_cycle_degradation, CalendarModel, LinearizedStress, StressFunction};
use crate::error::{Error, Result};
use crate::regulation::{simulate_day, soc_band, PolicyParams, RegulationDay};
use crate::value_function::{upper_concave_envelope, PwlValue, ResaleCurve, SohGrid, ValueSurface};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageMode {
    Arbitrage,
    Regulation,
}

impl std::str::FromStr for StageMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "arbitrage" => Ok(Self::Arbitrage),
            "regulation" => Ok(Self::Regulation),
            other => Err(Error::Config(format!("unknown stage mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for StageMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Arbitrage => "arbitrage",
            Self::Regulation => "regulation",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub horizon_days: usize,
    pub mode: StageMode,
    /// Daily discount factor.
    pub discount: f64,
    pub calendar: CalendarModel,
    pub stress: StressFunction,
    /// When false, cycling causes no aging.
    pub cycle_aging: bool,
    pub segments: usize,
    /// SoH grid spacing as a fraction of rated capacity.
    pub soh_step: f64,
    /// Raise each day's values to the resale curve.
    pub resale: bool,
    /// Start the recursion from the resale value instead of zero.
    pub terminal_resale: bool,
    /// Stored energy at the start of each day as a fraction of capacity.
    pub initial_soc_fraction: f64,
    /// Regulation capacity offered as a fraction of rated power.
    pub offered_fraction: f64,
    pub policy: PolicyParams,
    /// Make policy-based columns monotone and concave after each stage.
    pub restore_shape: bool,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            horizon_days: 30,
            mode: StageMode::Arbitrage,
            discount: daily_discount_from_annual(0.07).expect("valid rate"),
            calendar: CalendarModel::default(),
            stress: StressFunction::default(),
            cycle_aging: true,
            segments: DEFAULT_SEGMENTS,
            soh_step: 0.01,
            resale: false,
            terminal_resale: false,
            initial_soc_fraction: 0.5,
            offered_fraction: 1.0,
            policy: PolicyParams::default(),
            restore_shape: true,
            seed: 1,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon_days == 0 {
            return Err(Error::Config("horizon must be at least one day".into()));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(Error::Config(format!("discount {} outside (0, 1]", self.discount)));
        }
        self.calendar.validate()?;
        StressFunction::new(self.stress.coefficient, self.stress.exponent)?;
        if self.segments == 0 {
            return Err(Error::Config("need at least one segment".into()));
        }
        if !(self.soh_step > 0.0 && self.soh_step < 1.0) {
            return Err(Error::Config(format!("SoH step {} outside (0, 1)", self.soh_step)));
        }
        if !(0.0..=1.0).contains(&self.initial_soc_fraction) {
            return Err(Error::Config("initial SoC fraction outside [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.offered_fraction) {
            return Err(Error::Config("offered fraction outside [0, 1]".into()));
        }
        self.policy.validate()
    }

    pub fn calendar_rate(&self) -> f64 {
        self.calendar.daily_rate()
    }

    fn grid(&self, params: &BatteryParams) -> Result<SohGrid> {
        SohGrid::uniform(params.rated_energy_mwh, params.eol_threshold, self.soh_step)
    }

    fn linearization(&self, params: &BatteryParams, capacity_mwh: f64) -> Result<LinearizedStress> {
        let eta = params.single_trip_efficiency();
        if self.cycle_aging {
            LinearizedStress::new(&self.stress, self.segments, eta, capacity_mwh)
        } else {
            Ok(LinearizedStress::free(self.segments, eta, capacity_mwh))
        }
    }

    /// Arbitrage stage for one day and starting capacity.
    pub fn arbitrage_instance(
        &self,
        params: &BatteryParams,
        prices: &[f64],
        capacity_mwh: f64,
        next_value: PwlValue,
    ) -> Result<DailyArbitrageInstance> {
        if prices.is_empty() {
            return Err(Error::Invalid("empty price day".into()));
        }
        let inst = DailyArbitrageInstance {
            prices: prices.to_vec(),
            step_hours: 24.0 / prices.len() as f64,
            capacity_mwh,
            rated_mwh: params.rated_energy_mwh,
            power_mw: params.power_mw,
            efficiency: params.single_trip_efficiency(),
            initial_soc_mwh: self.initial_soc_fraction * capacity_mwh,
            stress: self.linearization(params, capacity_mwh)?,
            calendar_rate: self.calendar_rate(),
            discount: self.discount,
            next_value,
        };
        inst.validate()?;
        Ok(inst)
    }
}

/// Daily exogenous data handed to a stage.
#[derive(Debug, Clone, PartialEq)]
pub enum MarketDay {
    Prices(Vec<f64>),
    Regulation(RegulationDay),
}

impl MarketDay {
    pub fn prices(&self) -> Result<&[f64]> {
        match self {
            MarketDay::Prices(p) => Ok(p),
            MarketDay::Regulation(_) => Err(Error::Invalid("expected an energy price day".into())),
        }
    }

    pub fn regulation(&self) -> Result<&RegulationDay> {
        match self {
            MarketDay::Regulation(d) => Ok(d),
            MarketDay::Prices(_) => Err(Error::Invalid("expected a regulation day".into())),
        }
    }
}

/// End-of-life scenarios with their probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EolScenarioSet {
    pub thresholds: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Default for EolScenarioSet {
    fn default() -> Self {
        Self::uniform(vec![0.50, 0.55, 0.60, 0.65, 0.70, 0.75])
    }
}

impl EolScenarioSet {
    pub fn uniform(thresholds: Vec<f64>) -> Self {
        let w = 1.0 / thresholds.len().max(1) as f64;
        Self {
            weights: vec![w; thresholds.len()],
            thresholds,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thresholds.is_empty() || self.thresholds.len() != self.weights.len() {
            return Err(Error::Invalid("need one weight per EoL threshold".into()));
        }
        if self.thresholds.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("EoL thresholds must be strictly increasing".into()));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) || (self.weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid("weights must be non-negative and sum to 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub surface: ValueSurface,
    /// Wall time of each day's stage, seconds, indexed by day.
    pub stage_seconds: Vec<f64>,
    pub total_seconds: f64,
    /// Surface cells changed when restoring monotonicity and concavity.
    pub shape_adjustments: usize,
}

pub fn daily_discount_from_annual(rate: f64) -> Result<f64> {
    if !(rate > -1.0) || !rate.is_finite() {
        return Err(Error::Domain(format!("annual rate {rate} must exceed -1")));
    }
    Ok((1.0 + rate).powf(-1.0 / 365.0))
}

fn check_inputs(cfg: &RunConfig, params: &BatteryParams, days: &[MarketDay]) -> Result<()> {
    cfg.validate()?;
    params.validate()?;
    if days.len() < cfg.horizon_days {
        return Err(Error::Invalid(format!(
            "market data covers {} days, horizon is {}",
            days.len(),
            cfg.horizon_days
        )));
    }
    Ok(())
}

fn initial_surface(cfg: &RunConfig, params: &BatteryParams) -> Result<(ValueSurface, ResaleCurve)> {
    let mut surface = ValueSurface::new(cfg.grid(params)?, cfg.horizon_days);
    let curve = ResaleCurve {
        base_price_usd_per_kwh: params.pack_price_usd_per_kwh,
        warranty_threshold: params.warranty_threshold,
    };
    if cfg.terminal_resale {
        surface.apply_resale_overlay(cfg.horizon_days, &curve);
    }
    Ok((surface, curve))
}

/// Optimization-based recursion: each stage value is the daily optimum.
pub fn run_algorithm1(cfg: &RunConfig, params: &BatteryParams, days: &[MarketDay]) -> Result<RunOutput> {
    check_inputs(cfg, params, days)?;
    let start = Instant::now();
    let (mut surface, curve) = initial_surface(cfg, params)?;
    let samples = surface.grid().len();
    let mut stage_seconds = vec![0.0; cfg.horizon_days];
    for n in (0..cfg.horizon_days).rev() {
        let t0 = Instant::now();
        let prices = days[n].prices().map_err(|e| e.at_stage(n + 1, 1))?;
        let next = surface.pwl(n + 1);
        let mut column = vec![0.0; samples];
        for (i, v) in column.iter_mut().enumerate().take(samples - 1) {
            let capacity = surface.grid().energy(i);
            let sol = cfg
                .arbitrage_instance(params, prices, capacity, next.clone())
                .and_then(|inst| solve_daily(&inst))
                .map_err(|e| e.at_stage(n + 1, i + 1))?;
            *v = sol.objective;
        }
        surface.set_column(n, column);
        if cfg.resale {
            surface.apply_resale_overlay(n, &curve);
        }
        stage_seconds[n] = t0.elapsed().as_secs_f64();
    }
    Ok(RunOutput {
        surface,
        stage_seconds,
        total_seconds: start.elapsed().as_secs_f64(),
        shape_adjustments: 0,
    })
}

/// Outcome of one day of operation chosen by a policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyDecision {
    pub revenue: f64,
    pub cycle_degradation: f64,
}

/// Daily operating rule: given the day's market data, the capacity in
/// effect and the marginal cost of capacity ($/MWh), returns revenue and
/// cycle aging.
pub trait DailyPolicy {
    fn decide(&self, day: &MarketDay, capacity_mwh: f64, marginal_cost: f64) -> Result<PolicyDecision>;
}

/// SoC-band regulation rule.
#[derive(Debug, Clone)]
pub struct RegulationPolicy {
    pub params: BatteryParams,
    pub config: RunConfig,
}

impl DailyPolicy for RegulationPolicy {
    fn decide(&self, day: &MarketDay, capacity_mwh: f64, marginal_cost: f64) -> Result<PolicyDecision> {
        let day = day.regulation()?;
        let band = soc_band(&self.config.policy, &self.config.stress, marginal_cost.max(0.0))?;
        let out = simulate_day(
            day,
            capacity_mwh,
            self.config.initial_soc_fraction * capacity_mwh,
            band,
            &self.params,
        )?;
        let cycle = if self.config.cycle_aging {
            daily_cycle_degradation(&out.profile, &self.config.stress)?
        } else {
            0.0
        };
        Ok(PolicyDecision {
            revenue: out.revenue,
            cycle_degradation: cycle,
        })
    }
}

/// Daily arbitrage optimizer with aging priced at the discounted marginal
/// cost of capacity.
#[derive(Debug, Clone)]
pub struct OptimizerPolicy {
    pub params: BatteryParams,
    pub config: RunConfig,
}

impl DailyPolicy for OptimizerPolicy {
    fn decide(&self, day: &MarketDay, capacity_mwh: f64, marginal_cost: f64) -> Result<PolicyDecision> {
        let inst = self.config.arbitrage_instance(
            &self.params,
            day.prices()?,
            capacity_mwh,
            PwlValue::zero(capacity_mwh, 0.0),
        )?;
        let price = self.config.discount * marginal_cost * self.params.rated_energy_mwh;
        let sol = solve_with_degradation_price(&inst, price)?;
        Ok(PolicyDecision {
            revenue: sol.revenue,
            cycle_degradation: sol.cycle_degradation,
        })
    }
}

/// Policy-based recursion. With `restore_shape` each column is afterwards
/// made nonincreasing toward end of life and replaced by its upper concave
/// envelope.
pub fn run_algorithm2(
    cfg: &RunConfig,
    params: &BatteryParams,
    days: &[MarketDay],
    policy: &dyn DailyPolicy,
) -> Result<RunOutput> {
    check_inputs(cfg, params, days)?;
    let start = Instant::now();
    let (mut surface, curve) = initial_surface(cfg, params)?;
    let samples = surface.grid().len();
    let rated = params.rated_energy_mwh;
    let d_cal = cfg.calendar_rate();
    let mut stage_seconds = vec![0.0; cfg.horizon_days];
    let mut adjusted = 0;
    for n in (0..cfg.horizon_days).rev() {
        let t0 = Instant::now();
        let mut column = vec![0.0; samples];
        for (i, v) in column.iter_mut().enumerate().take(samples - 1) {
            let c = surface.marginal_cost(i, n).map_err(|e| e.at_stage(n + 1, i + 1))?;
            let capacity = surface.grid().energy(i);
            let act = policy
                .decide(&days[n], capacity, c)
                .map_err(|e| e.at_stage(n + 1, i + 1))?;
            let aging = act.cycle_degradation + d_cal;
            *v = cfg.discount * (surface.value(i, n + 1) - c * aging * rated) + act.revenue;
        }
        if cfg.restore_shape {
            adjusted += restore_shape(surface.grid().energies(), &mut column);
        }
        surface.set_column(n, column);
        if cfg.resale {
            surface.apply_resale_overlay(n, &curve);
        }
        stage_seconds[n] = t0.elapsed().as_secs_f64();
    }
    Ok(RunOutput {
        surface,
        stage_seconds,
        total_seconds: start.elapsed().as_secs_f64(),
        shape_adjustments: adjusted,
    })
}

/// Smallest nonincreasing-in-index concave majorant of `column` with the
/// last entry pinned at zero. Returns the number of entries changed.
pub fn restore_shape(energies: &[f64], column: &mut [f64]) -> usize {
    let before = column.to_vec();
    if let Some(last) = column.last_mut() {
        *last = 0.0;
    }
    for i in (0..column.len().saturating_sub(1)).rev() {
        column[i] = column[i].max(column[i + 1]);
    }
    let hull = upper_concave_envelope(energies, column);
    column.copy_from_slice(&hull);
    before
        .iter()
        .zip(column.iter())
        .filter(|(a, b)| (*a - *b).abs() > 1e-9 * (1.0 + a.abs()))
        .count()
}

/// Weighted value of a new and an 80% SoH battery across EoL scenarios.
#[derive(Debug, Clone)]
pub struct SecondLifeReport {
    pub scenarios: EolScenarioSet,
    /// Value at 100% SoH per scenario and day.
    pub new_values: Vec<Vec<f64>>,
    /// Value at 80% SoH per scenario and day.
    pub second_values: Vec<Vec<f64>>,
    pub weighted_new: Vec<f64>,
    pub weighted_second: Vec<f64>,
    /// Second-life over new value per day; `None` when both are zero.
    pub ratios: Vec<Option<f64>>,
}

/// Values a new and a second-life battery under each EoL scenario with
/// resale disabled.
pub fn second_life_analysis(
    cfg: &RunConfig,
    params: &BatteryParams,
    days: &[MarketDay],
    scenarios: &EolScenarioSet,
) -> Result<SecondLifeReport> {
    scenarios.validate()?;
    let mut cfg = cfg.clone();
    cfg.resale = false;
    cfg.terminal_resale = false;
    let n_days = cfg.horizon_days;
    let mut new_values = Vec::new();
    let mut second_values = Vec::new();
    for &thr in &scenarios.thresholds {
        let p = BatteryParams {
            eol_threshold: thr,
            ..*params
        };
        let out = match cfg.mode {
            StageMode::Arbitrage => run_algorithm1(&cfg, &p, days)?,
            StageMode::Regulation => {
                let policy = RegulationPolicy {
                    params: p,
                    config: cfg.clone(),
                };
                run_algorithm2(&cfg, &p, days, &policy)?
            }
        };
        let s = &out.surface;
        let i80 = s
            .grid()
            .index_of_soh(0.8)
            .ok_or_else(|| Error::Invalid(format!("grid for EoL {thr} has no 80% SoH sample")))?;
        new_values.push((0..n_days).map(|n| s.value(0, n)).collect::<Vec<_>>());
        second_values.push((0..n_days).map(|n| s.value(i80, n)).collect::<Vec<_>>());
    }
    let weigh = |vals: &[Vec<f64>]| -> Vec<f64> {
        (0..n_days)
            .map(|n| vals.iter().zip(&scenarios.weights).map(|(v, w)| w * v[n]).sum())
            .collect()
    };
    let weighted_new = weigh(&new_values);
    let weighted_second = weigh(&second_values);
    let ratios = weighted_new
        .iter()
        .zip(&weighted_second)
        .map(|(a, b)| if *a > 0.0 { Some(b / a) } else { None })
        .collect();
    Ok(SecondLifeReport {
        scenarios: scenarios.clone(),
        new_values,
        second_values,
        weighted_new,
        weighted_second,
        ratios,
    })
}
