//! Reference implementations shared by the test suites.
#![allow(dead_code)]

use lifeval_core::arbitrage::DailyArbitrageInstance;
use lifeval_core::battery::BatteryParams;
use lifeval_core::degradation::{LinearizedStress, StressFunction};
use lifeval_core::value_function::PwlValue;
use lifeval_core::DispatchProfile;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Daily problem solved by dynamic programming over per-segment energy
/// levels on a fixed grid, combined with a search over the price of aging.
pub mod dp {
    use super::*;

    pub const GRID_MWH: f64 = 0.001;

    struct Moves {
        /// net power, MW
        power: Vec<f64>,
        /// cycle aging
        aging: Vec<f64>,
        discharges: Vec<bool>,
        states: usize,
    }

    fn levels(inst: &DailyArbitrageInstance) -> (Vec<usize>, Vec<usize>) {
        let cap = (inst.stress.segment_energy_mwh / GRID_MWH).round() as usize;
        assert!((cap as f64 * GRID_MWH - inst.stress.segment_energy_mwh).abs() < 1e-12, "segment not on grid");
        let fill = inst.stress.initial_fill(inst.initial_soc_mwh);
        let start = fill
            .iter()
            .map(|e| {
                let u = (e / GRID_MWH).round();
                assert!((u * GRID_MWH - e).abs() < 1e-12, "initial level not on grid");
                u as usize
            })
            .collect();
        (vec![cap; inst.stress.segments()], start)
    }

    fn decode(mut s: usize, caps: &[usize]) -> Vec<usize> {
        caps.iter()
            .map(|c| {
                let u = s % (c + 1);
                s /= c + 1;
                u
            })
            .collect()
    }

    fn encode(u: &[usize], caps: &[usize]) -> usize {
        u.iter().zip(caps).rev().fold(0, |acc, (x, c)| acc * (c + 1) + x)
    }

    fn moves(inst: &DailyArbitrageInstance, caps: &[usize]) -> Moves {
        let states: usize = caps.iter().map(|c| c + 1).product();
        let eta = inst.efficiency;
        let m = inst.step_hours;
        let mut mv = Moves {
            power: vec![0.0; states * states],
            aging: vec![0.0; states * states],
            discharges: vec![false; states * states],
            states,
        };
        for a in 0..states {
            let ua = decode(a, caps);
            for b in 0..states {
                let ub = decode(b, caps);
                let (mut p, mut d, mut dis) = (0.0, 0.0, false);
                for j in 0..caps.len() {
                    let delta = (ub[j] as f64 - ua[j] as f64) * GRID_MWH;
                    if delta < 0.0 {
                        p += eta * (-delta) / m;
                        d += inst.stress.slopes[j] * eta * (-delta);
                        dis = true;
                    } else {
                        p -= delta / (eta * m);
                    }
                }
                mv.power[a * states + b] = p;
                mv.aging[a * states + b] = d;
                mv.discharges[a * states + b] = dis;
            }
        }
        mv
    }

    /// max over dispatches of revenue - price * aging
    fn best_at_price(inst: &DailyArbitrageInstance, caps: &[usize], start: usize, mv: &Moves, price: f64) -> f64 {
        let n = mv.states;
        let mut v = vec![f64::NEG_INFINITY; n];
        v[start] = 0.0;
        for &lam in &inst.prices {
            let mut next = vec![f64::NEG_INFINITY; n];
            for a in 0..n {
                if v[a] == f64::NEG_INFINITY {
                    continue;
                }
                for b in 0..n {
                    let k = a * n + b;
                    if mv.power[k].abs() > inst.power_mw + 1e-12 || (lam < 0.0 && mv.discharges[k]) {
                        continue;
                    }
                    let r = v[a] + lam * inst.step_hours * mv.power[k] - price * mv.aging[k];
                    if r > next[b] {
                        next[b] = r;
                    }
                }
            }
            v = next;
        }
        let floor: usize = decode(start, caps).iter().sum();
        (0..n)
            .filter(|s| decode(*s, caps).iter().sum::<usize>() >= floor)
            .map(|s| v[s])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// max over aging D >= 0 of future(D) + price * D
    fn conjugate(inst: &DailyArbitrageInstance, price: f64) -> f64 {
        let future = |d: f64| {
            let e = inst.capacity_mwh - (d + inst.calendar_rate) * inst.rated_mwh;
            inst.discount * inst.next_value.eval_extended(e)
        };
        let mut best = future(0.0);
        for &k in &inst.next_value.knots {
            let d = (inst.capacity_mwh - k) / inst.rated_mwh - inst.calendar_rate;
            if d > 0.0 {
                best = best.max(future(d) + price * d);
            }
        }
        best
    }

    /// Optimal objective of the daily problem.
    pub fn optimum(inst: &DailyArbitrageInstance) -> f64 {
        let (caps, start_levels) = levels(inst);
        let start = encode(&start_levels, &caps);
        let mv = moves(inst, &caps);
        let v = &inst.next_value;
        let top = inst.discount * inst.rated_mwh * v.slope(v.segments() - 1);
        let h = |c: f64| best_at_price(inst, &caps, start, &mv, c) + conjugate(inst, c);
        if top <= 0.0 {
            return h(0.0);
        }
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (0.0, top);
        let mut x1 = b - phi * (b - a);
        let mut x2 = a + phi * (b - a);
        let (mut f1, mut f2) = (h(x1), h(x2));
        for _ in 0..90 {
            if f1 <= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = h(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = h(x2);
            }
        }
        f1.min(f2).min(h(0.0)).min(h(top))
    }
}

/// Daily problem written out as one linear program with a hypograph
/// variable for the next-day value, solved by minilp.
pub mod lp {
    use super::*;
    use minilp::{ComparisonOp, OptimizationDirection, Problem};

    pub fn optimum(inst: &DailyArbitrageInstance) -> f64 {
        let t_n = inst.intervals();
        let jn = inst.stress.segments();
        let eta = inst.efficiency;
        let m = inst.step_hours;
        let cap = inst.stress.segment_energy_mwh;
        let mut pb = Problem::new(OptimizationDirection::Maximize);
        let mut prev: Vec<Option<minilp::Variable>> = vec![None; jn];
        let start = inst.stress.initial_fill(inst.initial_soc_mwh);
        let mut aging = Vec::new();
        let mut last = Vec::new();
        for (t, &lam) in inst.prices.iter().enumerate() {
            let mut net = Vec::new();
            for j in 0..jn {
                let dmax = if lam < 0.0 { 0.0 } else { f64::INFINITY };
                let pd = pb.add_var(lam * m, (0.0, dmax));
                let pc = pb.add_var(-lam * m, (0.0, f64::INFINITY));
                let e = pb.add_var(0.0, (0.0, cap));
                // e = prev + eta m pc - m pd / eta
                let mut row = vec![(e, 1.0), (pc, -eta * m), (pd, m / eta)];
                let rhs = match prev[j] {
                    Some(p) => {
                        row.push((p, -1.0));
                        0.0
                    }
                    None => start[j],
                };
                pb.add_constraint(&row[..], ComparisonOp::Eq, rhs);
                prev[j] = Some(e);
                net.push((pd, 1.0));
                net.push((pc, -1.0));
                aging.push((pd, inst.stress.slopes[j] * m));
                if t + 1 == t_n {
                    last.push((e, 1.0));
                }
            }
            pb.add_constraint(&net[..], ComparisonOp::Le, inst.power_mw);
            pb.add_constraint(&net[..], ComparisonOp::Ge, -inst.power_mw);
        }
        pb.add_constraint(&last[..], ComparisonOp::Ge, inst.initial_soc_mwh);
        // z <= discount * (v_k + s_k (E - knot_k)),  E = cap_n - (D + cal) E0
        let z = pb.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
        let v = &inst.next_value;
        for k in 0..v.segments() {
            let s = v.slope(k);
            let base = inst.capacity_mwh - inst.calendar_rate * inst.rated_mwh - v.knots[k];
            let mut row = vec![(z, 1.0)];
            for &(var, coef) in &aging {
                row.push((var, inst.discount * s * inst.rated_mwh * coef));
            }
            pb.add_constraint(&row[..], ComparisonOp::Le, inst.discount * (v.values[k] + s * base));
        }
        pb.solve().expect("reference LP solves").objective()
    }
}

/// Rainflow by repeated scanning from the start of the turning points.
pub mod rainflow_ref {
    pub fn turning_points(xs: &[f64]) -> Vec<f64> {
        let mut pts: Vec<f64> = Vec::new();
        for &x in xs {
            if pts.last() == Some(&x) {
                continue;
            }
            if pts.len() >= 2 {
                let a = pts[pts.len() - 2];
                let b = pts[pts.len() - 1];
                if (b - a) * (x - b) > 0.0 {
                    pts.pop();
                }
            }
            pts.push(x);
        }
        pts
    }

    /// (depth, weight) pairs sorted by depth then weight.
    pub fn cycles(xs: &[f64]) -> Vec<(f64, f64)> {
        let mut pts = turning_points(xs);
        let mut out = Vec::new();
        'scan: loop {
            for i in 0..pts.len().saturating_sub(3) {
                let y = (pts[i] - pts[i + 1]).abs();
                let x = (pts[i + 1] - pts[i + 2]).abs();
                let z = (pts[i + 2] - pts[i + 3]).abs();
                if x <= y && x <= z {
                    out.push((x, 1.0));
                    pts.drain(i + 1..i + 3);
                    continue 'scan;
                }
            }
            break;
        }
        for w in pts.windows(2) {
            out.push(((w[0] - w[1]).abs(), 0.5));
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out
    }
}

/// Seeded toy daily instances small enough for the grid oracle.
pub fn toy_instance(seed: u64) -> DailyArbitrageInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let segments = 1 + (seed % 3) as usize;
    let capacity = [0.1, 0.02, 0.018][segments - 1];
    // every other instance has lossless conversion and a binding power limit
    let lossless = seed % 2 == 1;
    let params = BatteryParams {
        power_mw: if lossless { 0.003 } else { 0.5 },
        round_trip_efficiency: if lossless { 1.0 } else { 0.85 },
        ..Default::default()
    };
    let eta = params.single_trip_efficiency();
    let prices: Vec<f64> = (0..24).map(|_| rng.gen_range(-10.0..80.0)).collect();
    let revenue_scale = 90.0 * capacity;
    let pieces = rng.gen_range(1..=3usize);
    let width: f64 = rng.gen_range(5e-5..2e-4);
    let mut slope = revenue_scale / 3.14e-4 * rng.gen_range(0.05..2.0);
    let mut knots = vec![capacity];
    let mut values = vec![rng.gen_range(50.0..150.0)];
    for k in 0..pieces {
        let e = capacity - width * (k + 1) as f64;
        values.push(values[k] - slope * width);
        knots.push(e);
        slope *= rng.gen_range(1.0..2.5);
    }
    DailyArbitrageInstance {
        prices,
        step_hours: 1.0,
        capacity_mwh: capacity,
        rated_mwh: 1.0,
        power_mw: params.power_mw,
        efficiency: eta,
        initial_soc_mwh: 0.5 * capacity,
        stress: LinearizedStress::new(&StressFunction::default(), segments, eta, capacity).unwrap(),
        calendar_rate: 0.2 / 1825.0,
        discount: 0.9998,
        next_value: PwlValue::new(knots, values).unwrap(),
    }
}

/// Closed daily profiles of one to three deep cycles from full charge at
/// rated power, depths uniform on [0.3, 1].
pub fn deep_cycle_profile(rng: &mut ChaCha8Rng) -> DispatchProfile {
    let params = BatteryParams::default();
    let eta = params.single_trip_efficiency();
    let dt = 1.0 / 12.0;
    let mut power = Vec::new();
    let mut e = 1.0f64;
    for _ in 0..rng.gen_range(1..=3) {
        let low = 1.0 - rng.gen_range(0.3..1.0);
        while e > low + 1e-12 {
            let drain = (e - low).min(params.power_mw / eta * dt);
            power.push(drain * eta / dt);
            e -= drain;
        }
        while e < 1.0 - 1e-12 {
            let fill = (1.0 - e).min(params.power_mw * eta * dt);
            power.push(-fill / (eta * dt));
            e += fill;
        }
    }
    power.resize(288, 0.0);
    DispatchProfile::from_power(power, dt, 1.0, 1.0, eta)
}
