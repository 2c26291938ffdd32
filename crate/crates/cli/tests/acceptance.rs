//! Acceptance suite: one pass/fail line per criterion.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::process::{Command, ExitCode};
use std::time::Instant;

use lifeval_core::arbitrage::{solve_daily, solve_with_degradation_price};
use lifeval_core::degradation::{calendar_rate, daily_cycle_degradation, rainflow};
use lifeval_core::engine::{
    run_algorithm1, run_algorithm2, second_life_analysis, EolScenarioSet, MarketDay, OptimizerPolicy, RunConfig,
};
use lifeval_core::io::{price_days, regulation_days, synth_prices, synth_reg_prices, synth_signal};
use lifeval_core::regulation::{performance_score, simulate_day, soc_band, PolicyParams};
use lifeval_core::value_function::{PwlValue, ResaleCurve};
use lifeval_core::{BatteryParams, CalendarModel, DispatchProfile, LinearizedStress, StressFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(bool, String), String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn synth_market(days: usize) -> Result<Vec<MarketDay>, String> {
    Ok(price_days(&synth_prices(1, days, 30.0, 20.0, 5.0).map_err(err)?))
}

fn arbitrage_cfg(days: usize) -> RunConfig {
    RunConfig {
        horizon_days: days,
        ..Default::default()
    }
}

fn c1_stress_values() -> Check {
    let phi = StressFunction::default();
    let one = phi.cycle_stress(1.0).map_err(err)?;
    let p8 = phi.cycle_stress(0.8).map_err(err)?;
    let life = (1000.0 * p8 - 0.2).abs() / 0.2;
    let ok = one == 3.14e-4 && (p8 - 1.9962e-4).abs() <= 1e-8 && life <= 0.005;
    Ok((ok, format!("phi(1)={one:e}, phi(0.8)={p8:.6e}, 1000*phi(0.8) off by {:.3}%", 100.0 * life)))
}

fn c2_calendar_rate() -> Check {
    let r = calendar_rate(&CalendarModel::default());
    let ok = (r - 0.2 / 1825.0).abs() <= 1e-9 && (r - 1.09589e-4).abs() <= 1e-9;
    Ok((ok, format!("rate={r:.6e}/day")))
}

fn c3_rainflow_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatched = 0;
    let mut swing_off = 0;
    for _ in 0..200 {
        let len = rng.gen_range(2..=12);
        let xs: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let got = rainflow(&xs).map_err(err)?;
        let mut pairs: Vec<(f64, f64)> = got.cycles.iter().map(|c| (c.depth, c.weight)).collect();
        pairs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if pairs != common::rainflow_ref::cycles(&xs) {
            mismatched += 1;
        }
        let tp = common::rainflow_ref::turning_points(&xs);
        let travel: f64 = tp.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        if (got.total_swing() - travel).abs() > 1e-12 {
            swing_off += 1;
        }
    }
    Ok((
        mismatched == 0 && swing_off == 0,
        format!("200 sequences, {mismatched} cycle-set mismatches, {swing_off} swing mismatches"),
    ))
}

fn linearization_error(profiles: &[DispatchProfile]) -> Result<f64, String> {
    let phi = StressFunction::default();
    let params = BatteryParams::default();
    let lin = LinearizedStress::new(&phi, 10, params.single_trip_efficiency(), 1.0).map_err(err)?;
    let mut errs = Vec::new();
    for p in profiles {
        let exact = daily_cycle_degradation(p, &phi).map_err(err)?;
        if exact > 0.0 {
            errs.push((lin.profile_degradation(p) - exact).abs() / exact);
        }
    }
    Ok(errs.iter().sum::<f64>() / errs.len().max(1) as f64)
}

fn c4_linearization_error() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let deep: Vec<_> = (0..100).map(|_| common::deep_cycle_profile(&mut rng)).collect();
    let mean = linearization_error(&deep)?;

    // other profile families, reported for information
    let params = BatteryParams::default();
    let eta = params.single_trip_efficiency();
    let walks: Vec<_> = (0..100)
        .map(|_| {
            let mut e = 0.5;
            let power = (0..288)
                .map(|_| {
                    let p: f64 = rng.gen_range(-1.0..1.0);
                    let d = p.max(0.0) / eta - p.min(0.0) * eta;
                    let next = e - d / 12.0;
                    if (0.0..=1.0).contains(&next) {
                        e = next;
                        p
                    } else {
                        0.0
                    }
                })
                .collect();
            DispatchProfile::from_power(power, 1.0 / 12.0, 1.0, 0.5, eta)
        })
        .collect();
    let walk = linearization_error(&walks)?;
    let cfg = RunConfig::default();
    let market = synth_prices(4, 20, 30.0, 20.0, 5.0).map_err(err)?;
    let mut dispatched = Vec::new();
    for n in 0..20 {
        let inst = cfg
            .arbitrage_instance(&params, market.day(n), 1.0, PwlValue::zero(1.0, 0.8))
            .map_err(err)?;
        let sol = solve_with_degradation_price(&inst, 1e5).map_err(err)?;
        dispatched.push(sol.profile(&inst));
    }
    let opt = linearization_error(&dispatched)?;
    Ok((
        mean < 0.01,
        format!(
            "mean {:.3}% over 100 deep-cycle days; random walks {:.1}%, optimizer dispatch {:.1}%",
            100.0 * mean,
            100.0 * walk,
            100.0 * opt
        ),
    ))
}

fn c5_daily_oracle() -> Check {
    let mut worst: f64 = 0.0;
    for seed in 0..25 {
        let inst = common::toy_instance(seed);
        let got = solve_daily(&inst).map_err(err)?.objective;
        let want = common::dp::optimum(&inst);
        worst = worst.max((got - want).abs() / want.abs().max(1e-9));
    }
    Ok((worst <= 1e-3, format!("25 instances, worst relative gap {worst:.2e}")))
}

fn c6_two_price_day() -> Check {
    let params = BatteryParams::default();
    let cfg = RunConfig {
        cycle_aging: false,
        initial_soc_fraction: 0.0,
        ..Default::default()
    };
    let prices: Vec<f64> = (0..288).map(|t| if t < 144 { 0.0 } else { 50.0 }).collect();
    let inst = cfg
        .arbitrage_instance(&params, &prices, 1.0, PwlValue::zero(1.0, 0.8))
        .map_err(err)?;
    let rev = solve_daily(&inst).map_err(err)?.revenue;
    let want = params.single_trip_efficiency() * 50.0;
    Ok(((rev - want).abs() <= 0.01, format!("revenue ${rev:.4}, expected ${want:.4}")))
}

fn c7_surface_invariants() -> Check {
    let out = run_algorithm1(&arbitrage_cfg(90), &BatteryParams::default(), &synth_market(90)?).map_err(err)?;
    let bad = out.surface.violations(1e-6);
    let first = bad.first().map(|v| format!("; first: {v:?}")).unwrap_or_default();
    Ok((
        bad.is_empty(),
        format!(
            "90 days x {} samples in {:.1} s, {} violations{first}",
            out.surface.grid().len(),
            out.total_seconds,
            bad.len()
        ),
    ))
}

fn c8_algorithm_equivalence() -> Check {
    let params = BatteryParams::default();
    let cfg = arbitrage_cfg(30);
    let market = synth_market(30)?;
    let a = run_algorithm1(&cfg, &params, &market).map_err(err)?;
    let policy = OptimizerPolicy {
        params,
        config: cfg.clone(),
    };
    let b = run_algorithm2(&cfg, &params, &market, &policy).map_err(err)?;
    let mut worst: f64 = 0.0;
    let mut zero_mismatch = 0;
    for n in 0..=30 {
        for i in 0..a.surface.grid().len() {
            let (x, y) = (a.surface.value(i, n), b.surface.value(i, n));
            if x == 0.0 {
                if y.abs() > 1e-6 {
                    zero_mismatch += 1;
                }
            } else {
                worst = worst.max((x - y).abs() / x.abs());
            }
        }
    }
    Ok((
        worst <= 0.005 && zero_mismatch == 0,
        format!(
            "worst relative difference {worst:.2e}, {} shape adjustments, {:.1} s + {:.1} s",
            b.shape_adjustments, a.total_seconds, b.total_seconds
        ),
    ))
}

fn c9_regulation_policy() -> Check {
    let params = BatteryParams::default();
    let policy = PolicyParams {
        efficiency: params.single_trip_efficiency(),
        ..Default::default()
    };
    let phi = StressFunction::default();
    let eta = policy.efficiency;
    let c_full = (eta * eta + 1.0) * policy.pi() / (eta * phi.derivative(1.0).map_err(err)?);
    let at_full = soc_band(&policy, &phi, c_full).map_err(err)?;
    let day = regulation_days(
        &synth_signal(7, 1).map_err(err)?,
        &synth_reg_prices(7, 1, 25.0, 10.0, 3.0).map_err(err)?,
        params.power_mw,
    )
    .map_err(err)?;
    let day = day[0].regulation().map_err(err)?;
    let mut bands = Vec::new();
    let mut aging = Vec::new();
    for k in 0..=24 {
        let c = c_full * 10f64.powf(0.25 * k as f64);
        let u = soc_band(&policy, &phi, c).map_err(err)?;
        let out = simulate_day(day, 1.0, 0.5, u, &params).map_err(err)?;
        bands.push(u);
        aging.push(daily_cycle_degradation(&out.profile, &phi).map_err(err)?);
    }
    let strict = bands.windows(2).all(|w| w[1] < w[0]);
    let nonincreasing = aging.windows(2).all(|w| w[1] <= w[0]);
    Ok((
        (at_full - 1.0).abs() <= 1e-9 && strict && nonincreasing,
        format!(
            "band 1 at C={c_full:.4e} ({at_full:.12}); C up to {:.2e}: band {:.4} -> {:.4}, cycle loss {:.3e} -> {:.3e}",
            c_full * 1e6,
            bands[0],
            bands[24],
            aging[0],
            aging[24]
        ),
    ))
}

fn c10_performance_score() -> Check {
    let sig: Vec<f64> = (0..1800).map(|k| (k as f64 / 90.0).sin()).collect();
    let cap = 2.0;
    let exact: Vec<f64> = sig.iter().map(|r| r * cap).collect();
    let half: Vec<f64> = exact.iter().map(|p| 0.5 * p).collect();
    let a = performance_score(&exact, &sig, cap).map_err(err)?;
    let b = performance_score(&vec![0.0; sig.len()], &sig, cap).map_err(err)?;
    let c = performance_score(&half, &sig, cap).map_err(err)?;
    let ok = (a - 1.0).abs() < 1e-12 && (b - 1.0 / 3.0).abs() < 1e-12 && (c - 5.0 / 6.0).abs() < 1e-3;
    Ok((ok, format!("exact {a:.6}, zero {b:.6}, half {c:.6}")))
}

fn c11_resale() -> Check {
    let params = BatteryParams::default();
    let s = ResaleCurve::default();
    let e0 = params.rated_energy_mwh;
    let vals = [s.value(e0, e0), s.value(0.9 * e0, e0), s.value(0.8 * e0, e0)];
    let points_ok = (vals[0] - 200_000.0).abs() < 1e-6 && (vals[1] - 90_000.0).abs() < 1e-6 && vals[2] == 0.0;
    let cfg = RunConfig {
        resale: true,
        ..arbitrage_cfg(3)
    };
    let out = run_algorithm1(&cfg, &params, &synth_market(3)?).map_err(err)?;
    let grid = out.surface.grid().clone();
    let below = (0..3)
        .flat_map(|n| (0..grid.len()).map(move |i| (i, n)))
        .filter(|&(i, n)| out.surface.value(i, n) < s.value(grid.energy(i), e0) - 1e-9)
        .count();
    Ok((
        points_ok && below == 0,
        format!("S = {:.0}, {:.0}, {:.0}; {below} surface points below S", vals[0], vals[1], vals[2]),
    ))
}

fn c12_second_life() -> Check {
    let params = BatteryParams::default();
    let scenarios = EolScenarioSet::default();
    let rep = second_life_analysis(&arbitrage_cfg(60), &params, &synth_market(60)?, &scenarios).map_err(err)?;
    let outside = rep
        .ratios
        .iter()
        .flatten()
        .filter(|r| !(0.0..=1.0).contains(*r))
        .count();
    let defined = rep.ratios.iter().flatten().count();
    let k = scenarios.thresholds.len() as f64;
    let mut worst: f64 = 0.0;
    for n in 0..60 {
        for (vals, weighted) in [(&rep.new_values, &rep.weighted_new), (&rep.second_values, &rep.weighted_second)] {
            let mean = vals.iter().map(|v| v[n]).sum::<f64>() / k;
            worst = worst.max((weighted[n] - mean).abs() / mean.abs().max(1.0));
        }
    }
    Ok((
        outside == 0 && worst <= 1e-9 && scenarios.thresholds.len() == 6,
        format!("{defined}/60 ratios defined, {outside} outside [0,1], weighted-vs-mean gap {worst:.1e}"),
    ))
}

fn c13_linear_scaling() -> Check {
    let params = BatteryParams::default();
    let market = synth_market(60)?;
    let t30 = run_algorithm1(&arbitrage_cfg(30), &params, &market[..30]).map_err(err)?.total_seconds;
    let t60 = run_algorithm1(&arbitrage_cfg(60), &params, &market).map_err(err)?.total_seconds;
    let ratio = t60 / (2.0 * t30);
    Ok(((0.75..=1.25).contains(&ratio), format!("30 days {t30:.1} s, 60 days {t60:.1} s, ratio to 2x {ratio:.3}")))
}

fn c14_determinism() -> Check {
    let tmp = std::env::temp_dir().join(format!("lifeval-acceptance-{}", std::process::id()));
    let mut digests = Vec::new();
    for run in ["a", "b"] {
        let dir = tmp.join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_lifeval"))
            .args(["value", "arbitrage", "--synth", "seed=1", "--days", "3", "--out"])
            .arg(&dir)
            .output()
            .map_err(err)?;
        if !status.status.success() {
            return Err(String::from_utf8_lossy(&status.stderr).into_owned());
        }
        let files: Vec<Vec<u8>> = ["surface.csv", "marginal_cost.csv", "synth_prices.csv"]
            .iter()
            .map(|f| std::fs::read(dir.join(f)))
            .collect::<Result<_, _>>()
            .map_err(err)?;
        digests.push(files);
    }
    let _ = std::fs::remove_dir_all(&tmp);
    let same = digests[0] == digests[1];
    Ok((same, format!("3 CSVs compared over two runs, identical: {same}")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 14] = [
        ("stress function values", c1_stress_values),
        ("calendar rate", c2_calendar_rate),
        ("rainflow oracle equivalence", c3_rainflow_oracle),
        ("linearization error", c4_linearization_error),
        ("daily solver oracle", c5_daily_oracle),
        ("two-price day", c6_two_price_day),
        ("surface invariants, 90 days", c7_surface_invariants),
        ("algorithm equivalence, 30 days", c8_algorithm_equivalence),
        ("regulation policy", c9_regulation_policy),
        ("performance score", c10_performance_score),
        ("resale values", c11_resale),
        ("second-life sweep, 60 days", c12_second_life),
        ("linear scaling", c13_linear_scaling),
        ("determinism", c14_determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let (ok, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} {:>2} {name} [{:.1} s]: {detail}",
            if ok { "PASS" } else { "FAIL" },
            k + 1,
            t0.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
