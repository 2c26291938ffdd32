//! Daily price-arbitrage stage with degradation-aware future value.
//!
//! For one starting capacity the stage maximizes energy revenue plus the
//! discounted next-day value of the capacity left after cycle and calendar
//! aging. Cycle aging uses the segment linearization of the stress
//! function, and the next-day value is concave piecewise linear.
//!
//! The solve works on the degradation price. For a fixed price per unit of
//! cycle aging the remaining problem is a min-cost flow over a
//! time-expanded network: one storage chain per segment, a charge hub and a
//! discharge hub per interval carrying the power limits, and a terminal
//! node enforcing the end-of-day energy floor. The outer search walks the
//! pieces of the next-day value; on a piece the degradation price equals
//! the discounted piece slope, and when the optimal aging jumps across a
//! knot the two bracketing flows are blended to land exactly on it.

use serde::Serialize;

use crate::battery::{BatteryParams, DispatchProfile};
use crate::degradation::{LinearizedStress, StressFunction};
use crate::error::{Error, Result};
use crate::flow::FlowNetwork;
use crate::value_function::PwlValue;

/// Number of depth segments used for the stress linearization.
pub const DEFAULT_SEGMENTS: usize = 10;

#[derive(Debug, Clone)]
pub struct DailyArbitrageInstance {
    /// Energy price per interval, $/MWh. Negative prices forbid discharge.
    pub prices: Vec<f64>,
    pub step_hours: f64,
    /// Usable capacity for the day, MWh.
    pub capacity_mwh: f64,
    /// Rated (new) capacity, MWh; degradation fractions are relative to it.
    pub rated_mwh: f64,
    pub power_mw: f64,
    /// Single-trip efficiency.
    pub efficiency: f64,
    pub initial_soc_mwh: f64,
    pub stress: LinearizedStress,
    pub calendar_rate: f64,
    pub discount: f64,
    /// Value of the remaining capacity at the start of the next day.
    pub next_value: PwlValue,
}

impl DailyArbitrageInstance {
    /// Instance with the default conventions: day starts half full, `J`
    /// segments over this day's capacity.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        prices: Vec<f64>,
        capacity_mwh: f64,
        params: &BatteryParams,
        stress: &StressFunction,
        segments: usize,
        calendar_rate: f64,
        discount: f64,
        next_value: PwlValue,
    ) -> Result<Self> {
        if prices.is_empty() {
            return Err(Error::Invalid("empty price series".into()));
        }
        let eta = params.single_trip_efficiency();
        let inst = Self {
            step_hours: 24.0 / prices.len() as f64,
            prices,
            capacity_mwh,
            rated_mwh: params.rated_energy_mwh,
            power_mw: params.power_mw,
            efficiency: eta,
            initial_soc_mwh: 0.5 * capacity_mwh,
            stress: LinearizedStress::new(stress, segments, eta, capacity_mwh)?,
            calendar_rate,
            discount,
            next_value,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn intervals(&self) -> usize {
        self.prices.len()
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.prices.len();
        if t == 0 {
            return Err(Error::Invalid("empty price series".into()));
        }
        if ((t as f64) * self.step_hours - 24.0).abs() > 1e-9 {
            return Err(Error::Invalid(format!(
                "{t} intervals of {} h do not cover 24 h",
                self.step_hours
            )));
        }
        if self.prices.iter().any(|p| !p.is_finite()) {
            return Err(Error::Invalid("non-finite price".into()));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(Error::Invalid(format!("discount {} outside (0, 1]", self.discount)));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::Invalid(format!("efficiency {} outside (0, 1]", self.efficiency)));
        }
        if !(self.capacity_mwh > 0.0 && self.power_mw >= 0.0 && self.rated_mwh > 0.0) {
            return Err(Error::Invalid("capacity and rated energy must be positive".into()));
        }
        if (self.stress.capacity_mwh() - self.capacity_mwh).abs() > 1e-9 * self.capacity_mwh {
            return Err(Error::Invalid(
                "segment energies do not add up to the day's capacity".into(),
            ));
        }
        if !(0.0..=self.capacity_mwh).contains(&self.initial_soc_mwh) {
            return Err(Error::Invalid("initial SoC outside [0, capacity]".into()));
        }
        if self.calendar_rate < 0.0 {
            return Err(Error::Invalid("negative calendar rate".into()));
        }
        if !self.next_value.is_concave(1e-6) {
            return Err(Error::Invalid("next-day value is not concave".into()));
        }
        Ok(())
    }

    /// Capacity at the start of the next day after `cycle` aging.
    pub fn end_capacity(&self, cycle: f64) -> f64 {
        self.capacity_mwh - (cycle + self.calendar_rate) * self.rated_mwh
    }

    fn future_value(&self, cycle: f64) -> f64 {
        self.discount * self.next_value.eval_extended(self.end_capacity(cycle))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DailySolution {
    /// Net power per interval, MW (positive = discharge).
    pub dispatch: Vec<f64>,
    /// Per-interval, per-segment discharge power, MW.
    pub discharge: Vec<Vec<f64>>,
    /// Per-interval, per-segment charge power, MW.
    pub charge: Vec<Vec<f64>>,
    /// Segment energy at the end of each interval, MWh.
    pub segment_soc: Vec<Vec<f64>>,
    /// Stored energy, `soc[0]` at the start of the day, MWh.
    pub soc: Vec<f64>,
    pub objective: f64,
    pub revenue: f64,
    pub cycle_degradation: f64,
    pub end_capacity: f64,
    /// Price per unit of cycle aging at which the dispatch is optimal.
    pub degradation_price: f64,
}

impl DailySolution {
    pub fn profile(&self, inst: &DailyArbitrageInstance) -> DispatchProfile {
        DispatchProfile {
            step_hours: inst.step_hours,
            capacity_mwh: inst.capacity_mwh,
            power_mw: self.dispatch.clone(),
            soc_mwh: self.soc.clone(),
        }
    }

    /// Builds a solution from net dispatch, assigning discharges to the
    /// cheapest non-empty segment and charges to the cheapest non-full one.
    pub fn from_dispatch(inst: &DailyArbitrageInstance, dispatch: Vec<f64>) -> Self {
        let eta = inst.efficiency;
        let m = inst.step_hours;
        let jn = inst.stress.segments();
        let cap = inst.stress.segment_energy_mwh;
        let mut fill = inst.stress.initial_fill(inst.initial_soc_mwh);
        let mut out = Plan::empty(inst.intervals(), jn);
        for (t, &p) in dispatch.iter().enumerate() {
            if p > 0.0 {
                let mut need = p * m / eta;
                for j in 0..jn {
                    let take = need.min(fill[j]);
                    fill[j] -= take;
                    need -= take;
                    out.discharge[t * jn + j] += take;
                }
                // anything left over overdraws the first segment
                if need > 0.0 {
                    out.discharge[t * jn] += need;
                    fill[0] -= need;
                }
            } else if p < 0.0 {
                let mut room = -p * m * eta;
                for j in 0..jn {
                    let put = room.min(cap - fill[j]);
                    fill[j] += put;
                    room -= put;
                    out.charge[t * jn + j] += put;
                }
                if room > 0.0 {
                    out.charge[t * jn + jn - 1] += room;
                    fill[jn - 1] += room;
                }
            }
        }
        out.finish(inst, f64::NAN).into_solution(inst)
    }

    pub fn idle(inst: &DailyArbitrageInstance) -> Self {
        Self::from_dispatch(inst, vec![0.0; inst.intervals()])
    }
}

/// Segment flows in stored-energy units (MWh per interval), indexed `t * J + j`.
#[derive(Debug, Clone)]
struct Plan {
    charge: Vec<f64>,
    discharge: Vec<f64>,
    revenue: f64,
    cycle: f64,
    price: f64,
}

impl Plan {
    fn empty(t: usize, j: usize) -> Self {
        Self {
            charge: vec![0.0; t * j],
            discharge: vec![0.0; t * j],
            revenue: 0.0,
            cycle: 0.0,
            price: 0.0,
        }
    }

    fn finish(mut self, inst: &DailyArbitrageInstance, price: f64) -> Self {
        let eta = inst.efficiency;
        let jn = inst.stress.segments();
        let mut revenue = 0.0;
        let mut cycle = 0.0;
        for (t, lam) in inst.prices.iter().enumerate() {
            let mut grid = 0.0;
            for j in 0..jn {
                let y = self.discharge[t * jn + j];
                let x = self.charge[t * jn + j];
                grid += eta * y - x / eta;
                cycle += inst.stress.slopes[j] * eta * y;
            }
            revenue += lam * grid;
        }
        self.revenue = revenue;
        self.cycle = cycle;
        self.price = price;
        self
    }

    fn blend(a: &Plan, b: &Plan, theta: f64) -> Plan {
        let mix = |x: &[f64], y: &[f64]| -> Vec<f64> {
            x.iter()
                .zip(y)
                .map(|(p, q)| (theta * p + (1.0 - theta) * q).max(0.0))
                .collect()
        };
        Plan {
            charge: mix(&a.charge, &b.charge),
            discharge: mix(&a.discharge, &b.discharge),
            revenue: 0.0,
            cycle: 0.0,
            price: theta * a.price + (1.0 - theta) * b.price,
        }
    }

    fn into_solution(self, inst: &DailyArbitrageInstance) -> DailySolution {
        let t_n = inst.intervals();
        let jn = inst.stress.segments();
        let eta = inst.efficiency;
        let m = inst.step_hours;
        let mut fill = inst.stress.initial_fill(inst.initial_soc_mwh);
        let mut dispatch = Vec::with_capacity(t_n);
        let mut discharge = Vec::with_capacity(t_n);
        let mut charge = Vec::with_capacity(t_n);
        let mut segment_soc = Vec::with_capacity(t_n);
        let mut soc = Vec::with_capacity(t_n + 1);
        soc.push(inst.initial_soc_mwh);
        for t in 0..t_n {
            let mut pd = Vec::with_capacity(jn);
            let mut pc = Vec::with_capacity(jn);
            for j in 0..jn {
                let y = self.discharge[t * jn + j];
                let x = self.charge[t * jn + j];
                fill[j] += x - y;
                pd.push(eta * y / m);
                pc.push(x / (eta * m));
            }
            dispatch.push(pd.iter().sum::<f64>() - pc.iter().sum::<f64>());
            soc.push(fill.iter().sum());
            segment_soc.push(fill.clone());
            discharge.push(pd);
            charge.push(pc);
        }
        let end_capacity = inst.end_capacity(self.cycle);
        DailySolution {
            dispatch,
            discharge,
            charge,
            segment_soc,
            soc,
            objective: self.revenue + inst.future_value(self.cycle),
            revenue: self.revenue,
            cycle_degradation: self.cycle,
            end_capacity,
            degradation_price: self.price,
        }
    }
}

/// Maximizes revenue minus `price` times cycle aging.
fn solve_at_price(inst: &DailyArbitrageInstance, price: f64) -> Result<Plan> {
    let t_n = inst.intervals();
    let jn = inst.stress.segments();
    let eta = inst.efficiency;
    let m = inst.step_hours;
    let seg_cap = inst.stress.segment_energy_mwh;
    let fill0 = inst.stress.initial_fill(inst.initial_soc_mwh);
    let e0: f64 = fill0.iter().sum();

    let mut net = FlowNetwork::with_capacity(t_n * (jn + 2) + 2, t_n * (3 * jn + 2) + 1);
    let grid = net.add_node(0.0);
    let terminal = net.add_node(-e0);
    let seg_base = net.node_count();
    for t in 0..t_n {
        for j in 0..jn {
            net.add_node(if t == 0 { fill0[j] } else { 0.0 });
        }
    }
    let seg = |t: usize, j: usize| seg_base + t * jn + j;

    let charge_cap = eta * inst.power_mw * m;
    let discharge_cap = inst.power_mw * m / eta;
    let mut charge_arcs = vec![usize::MAX; t_n * jn];
    let mut discharge_arcs = vec![usize::MAX; t_n * jn];
    for (t, &lam) in inst.prices.iter().enumerate() {
        let hub_in = net.add_node(0.0);
        net.add_arc(grid, hub_in, charge_cap, lam / eta);
        for j in 0..jn {
            charge_arcs[t * jn + j] = net.add_arc(hub_in, seg(t, j), f64::INFINITY, 0.0);
        }
        if lam >= 0.0 {
            let hub_out = net.add_node(0.0);
            net.add_arc(hub_out, grid, discharge_cap, 0.0);
            for j in 0..jn {
                let cost = -eta * (lam - price * inst.stress.slopes[j]);
                discharge_arcs[t * jn + j] = net.add_arc(seg(t, j), hub_out, f64::INFINITY, cost);
            }
        }
        for j in 0..jn {
            let next = if t + 1 < t_n { seg(t + 1, j) } else { terminal };
            net.add_arc(seg(t, j), next, seg_cap, 0.0);
        }
    }
    net.add_arc(terminal, grid, f64::INFINITY, 0.0);

    let sol = net.solve()?;
    let mut plan = Plan::empty(t_n, jn);
    for k in 0..t_n * jn {
        plan.charge[k] = sol.flow[charge_arcs[k]];
        if discharge_arcs[k] != usize::MAX {
            plan.discharge[k] = sol.flow[discharge_arcs[k]];
        }
    }
    Ok(plan.finish(inst, price))
}

/// Solves the daily stage to optimality.
pub fn solve_daily(inst: &DailyArbitrageInstance) -> Result<DailySolution> {
    inst.validate()?;
    let v = &inst.next_value;
    let gamma = inst.discount;
    let rated = inst.rated_mwh;
    let last = v.segments() - 1;
    let price_of = |k: usize| gamma * rated * v.slope(k);
    // largest cycle aging that keeps the end capacity on piece k
    let upper_of = |k: usize| {
        if k == last {
            f64::INFINITY
        } else {
            (inst.capacity_mwh - v.knots[k + 1]) / rated - inst.calendar_rate
        }
    };
    let tol = |d: f64| 1e-12 + 1e-9 * d.abs();

    let mut k = v.segment_of(inst.end_capacity(0.0));
    let mut plan = solve_at_price(inst, price_of(k))?;
    loop {
        let upper = upper_of(k);
        if plan.cycle <= upper + tol(upper) {
            return Ok(plan.into_solution(inst));
        }
        let next = solve_at_price(inst, price_of(k + 1))?;
        if next.cycle >= upper - tol(upper) {
            k += 1;
            plan = next;
            continue;
        }
        // optimal aging jumps over the knot between the two prices
        return Ok(land_on_knot(inst, plan, next, upper)?.into_solution(inst));
    }
}

fn land_on_knot(inst: &DailyArbitrageInstance, mut lo: Plan, mut hi: Plan, target: f64) -> Result<Plan> {
    const MAX_BISECTIONS: usize = 200;
    for _ in 0..MAX_BISECTIONS {
        let gap = hi.price - lo.price;
        if gap <= 1e-13 * hi.price.abs().max(1.0) {
            break;
        }
        let mid = solve_at_price(inst, lo.price + 0.5 * gap)?;
        if (mid.cycle - target).abs() <= 1e-12 + 1e-9 * target.abs() {
            return Ok(mid);
        }
        if mid.cycle > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = (target - hi.cycle) / (lo.cycle - hi.cycle);
    Ok(Plan::blend(&lo, &hi, theta.clamp(0.0, 1.0)).finish(inst, 0.5 * (lo.price + hi.price)))
}

/// Maximizes revenue minus `price` times cycle aging, ignoring the
/// next-day value. This is the daily optimizer used as a policy when the
/// marginal cost of aging is held fixed for the day.
pub fn solve_with_degradation_price(inst: &DailyArbitrageInstance, price: f64) -> Result<DailySolution> {
    inst.validate()?;
    Ok(solve_at_price(inst, price)?.into_solution(inst))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Constraint {
    Shape,
    SegmentBalance,
    SegmentBounds,
    SocBounds,
    PowerBounds,
    NegativeFlow,
    NegativePriceDischarge,
    TerminalSoc,
    CycleDegradation,
    EndCapacity,
    Objective,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintViolation {
    pub constraint: Constraint,
    pub interval: Option<usize>,
    pub detail: String,
}

/// Lists every violated constraint (1e-8 absolute tolerance).
pub fn verify_solution(inst: &DailyArbitrageInstance, sol: &DailySolution) -> Vec<ConstraintViolation> {
    const TOL: f64 = 1e-8;
    let mut out = Vec::new();
    let mut flag = |c: Constraint, t: Option<usize>, detail: String| {
        out.push(ConstraintViolation {
            constraint: c,
            interval: t,
            detail,
        })
    };
    let t_n = inst.intervals();
    let jn = inst.stress.segments();
    if sol.dispatch.len() != t_n
        || sol.discharge.len() != t_n
        || sol.charge.len() != t_n
        || sol.segment_soc.len() != t_n
        || sol.soc.len() != t_n + 1
        || sol.discharge.iter().chain(&sol.charge).chain(&sol.segment_soc).any(|r| r.len() != jn)
    {
        flag(Constraint::Shape, None, "array lengths do not match the instance".into());
        return out;
    }
    let eta = inst.efficiency;
    let m = inst.step_hours;
    let cap = inst.stress.segment_energy_mwh;
    let mut prev = inst.stress.initial_fill(inst.initial_soc_mwh);
    if (sol.soc[0] - inst.initial_soc_mwh).abs() > TOL {
        flag(Constraint::SocBounds, Some(0), format!("initial SoC {} != {}", sol.soc[0], inst.initial_soc_mwh));
    }
    let mut cycle = 0.0;
    let mut revenue = 0.0;
    for t in 0..t_n {
        let mut net = 0.0;
        let mut discharged = 0.0;
        for j in 0..jn {
            let (pd, pc) = (sol.discharge[t][j], sol.charge[t][j]);
            if pd < -TOL || pc < -TOL {
                flag(Constraint::NegativeFlow, Some(t), format!("segment {j}: pd={pd}, pc={pc}"));
            }
            let expect = prev[j] + m * pc * eta - m * pd / eta;
            let e = sol.segment_soc[t][j];
            if (e - expect).abs() > TOL {
                flag(Constraint::SegmentBalance, Some(t), format!("segment {j}: {e} != {expect}"));
            }
            if e < -TOL || e > cap + TOL {
                flag(Constraint::SegmentBounds, Some(t), format!("segment {j}: {e} outside [0, {cap}]"));
            }
            net += pd - pc;
            discharged += pd;
            cycle += inst.stress.slopes[j] * m * pd;
            prev[j] = e;
        }
        if (net - sol.dispatch[t]).abs() > TOL {
            flag(Constraint::Shape, Some(t), format!("dispatch {} != segment sum {net}", sol.dispatch[t]));
        }
        if sol.dispatch[t].abs() > inst.power_mw + TOL {
            flag(Constraint::PowerBounds, Some(t), format!("|{}| > {}", sol.dispatch[t], inst.power_mw));
        }
        if inst.prices[t] < 0.0 && discharged > TOL {
            flag(
                Constraint::NegativePriceDischarge,
                Some(t),
                format!("discharging {discharged} MW at price {}", inst.prices[t]),
            );
        }
        let total: f64 = sol.segment_soc[t].iter().sum();
        if (total - sol.soc[t + 1]).abs() > TOL || total < -TOL || total > inst.capacity_mwh + TOL {
            flag(Constraint::SocBounds, Some(t), format!("SoC {} (segments {total})", sol.soc[t + 1]));
        }
        revenue += inst.prices[t] * m * sol.dispatch[t];
    }
    if sol.soc[t_n] < sol.soc[0] - TOL {
        flag(
            Constraint::TerminalSoc,
            None,
            format!("end SoC {} below start {}", sol.soc[t_n], sol.soc[0]),
        );
    }
    if (cycle - sol.cycle_degradation).abs() > TOL {
        flag(
            Constraint::CycleDegradation,
            None,
            format!("reported {} != {cycle}", sol.cycle_degradation),
        );
    }
    let end = inst.end_capacity(sol.cycle_degradation);
    if (end - sol.end_capacity).abs() > TOL {
        flag(Constraint::EndCapacity, None, format!("reported {} != {end}", sol.end_capacity));
    }
    let objective = revenue + inst.future_value(sol.cycle_degradation);
    if (objective - sol.objective).abs() > TOL * (1.0 + objective.abs()) {
        flag(Constraint::Objective, None, format!("reported {} != {objective}", sol.objective));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_price_day(t: usize) -> Vec<f64> {
        (0..t).map(|k| if k < t / 2 { 0.0 } else { 50.0 }).collect()
    }

    fn inst(prices: Vec<f64>, segments: usize, free: bool, next: PwlValue) -> DailyArbitrageInstance {
        let params = BatteryParams::default();
        let mut i = DailyArbitrageInstance::new(
            prices,
            1.0,
            &params,
            &StressFunction::default(),
            segments,
            if free { 0.0 } else { 0.2 / 1825.0 },
            1.0,
            next,
        )
        .unwrap();
        if free {
            i.stress = LinearizedStress::free(segments, i.efficiency, 1.0);
        }
        i
    }

    #[test]
    fn flat_prices_idle() {
        let i = inst(vec![30.0; 288], 10, false, PwlValue::zero(1.0, 0.8));
        let s = solve_daily(&i).unwrap();
        assert!(s.dispatch.iter().all(|p| p.abs() < 1e-9), "{:?}", &s.dispatch[..5]);
        assert!(s.revenue.abs() < 1e-9);
        assert!(s.objective.abs() < 1e-9);
        assert!(verify_solution(&i, &s).is_empty());
    }

    #[test]
    fn two_price_day_free_degradation() {
        let mut i = inst(two_price_day(288), 10, true, PwlValue::zero(1.0, 0.8));
        i.initial_soc_mwh = 0.0;
        let s = solve_daily(&i).unwrap();
        // charge to full at zero price, sell eta * E at $50
        let eta = 0.85f64.sqrt();
        assert!((s.revenue - eta * 50.0).abs() < 1e-9, "{}", s.revenue);
        assert!((s.revenue - 46.10).abs() < 0.01);
        assert!(verify_solution(&i, &s).is_empty(), "{:?}", verify_solution(&i, &s));

        // from the midpoint only half the capacity can be sold
        let i = inst(two_price_day(288), 10, true, PwlValue::zero(1.0, 0.8));
        let s = solve_daily(&i).unwrap();
        assert!((s.revenue - 0.5 * eta * 50.0).abs() < 1e-9, "{}", s.revenue);
    }

    fn steep(marginal: f64) -> PwlValue {
        PwlValue::new(vec![1.0, 0.8], vec![marginal * 0.2, 0.0]).unwrap()
    }

    #[test]
    fn steep_cuts_limit_cycling() {
        // shallowest segment costs 1e6 * delta_1 = $31.8/MWh < $50, the next ~$98
        let mut i = inst(two_price_day(288), 10, false, steep(1e6));
        i.initial_soc_mwh = 0.0;
        let s = solve_daily(&i).unwrap();
        assert!(verify_solution(&i, &s).is_empty());
        let seg = i.stress.segment_energy_mwh;
        let sold: f64 = s.dispatch.iter().filter(|p| **p > 0.0).sum::<f64>() * i.step_hours;
        assert!((sold - i.efficiency * seg).abs() < 1e-9, "{sold}");
        assert!(s.discharge.iter().all(|r| r[1..].iter().all(|p| p.abs() < 1e-12)));

        let mut i = inst(two_price_day(288), 10, false, steep(2e6));
        i.initial_soc_mwh = 0.0;
        let s = solve_daily(&i).unwrap();
        assert!(s.dispatch.iter().all(|p| p.abs() < 1e-9));
        assert!(verify_solution(&i, &s).is_empty());
    }

    #[test]
    fn verify_flags_violations() {
        let mut prices = two_price_day(24);
        prices[20] = -5.0;
        let i = inst(prices, 3, false, PwlValue::zero(1.0, 0.8));
        assert!(verify_solution(&i, &DailySolution::idle(&i)).is_empty());

        let mut d = vec![0.0; 24];
        d[20] = 0.1;
        d[3] = -0.1;
        let s = DailySolution::from_dispatch(&i, d);
        let v = verify_solution(&i, &s);
        assert!(v.iter().any(|c| c.constraint == Constraint::NegativePriceDischarge && c.interval == Some(20)));

        let mut d = vec![0.0; 24];
        d[15] = 0.2;
        let s = DailySolution::from_dispatch(&i, d);
        let v = verify_solution(&i, &s);
        assert!(v.iter().any(|c| c.constraint == Constraint::TerminalSoc));
    }

    #[test]
    fn rejects_bad_instances() {
        let mut i = inst(vec![10.0; 24], 2, false, PwlValue::zero(1.0, 0.8));
        i.discount = 0.0;
        assert!(solve_daily(&i).is_err());
        let mut i = inst(vec![10.0; 24], 2, false, PwlValue::zero(1.0, 0.8));
        i.step_hours = 0.5;
        assert!(solve_daily(&i).is_err());
        let mut i = inst(vec![10.0; 24], 2, false, PwlValue::zero(1.0, 0.8));
        i.next_value = PwlValue::new(vec![1.0, 0.9, 0.8], vec![10.0, 0.0, 0.0]).unwrap();
        assert!(solve_daily(&i).is_err());
    }
}
