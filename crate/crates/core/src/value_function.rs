//! Piecewise-linear concave value of remaining capacity.
//!
//! A [`ValueSurface`] stores the value-to-go at each capacity sample for
//! every day of the horizon plus a terminal column. Between samples the
//! value is the linear interpolant; since the samples are concave this is
//! the same function as the pointwise minimum of the segment extensions.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Capacity samples from rated capacity down to end-of-life, strictly decreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SohGrid {
    rated_mwh: f64,
    energies: Vec<f64>,
}

impl SohGrid {
    pub fn new(rated_mwh: f64, energies: Vec<f64>) -> Result<Self> {
        if energies.len() < 2 {
            return Err(Error::Invalid("SoH grid needs at least two samples".into()));
        }
        if !energies.windows(2).all(|w| w[0] > w[1]) {
            return Err(Error::Invalid("SoH grid must be strictly decreasing".into()));
        }
        if !(rated_mwh > 0.0) || energies[0] > rated_mwh * (1.0 + 1e-12) || energies[energies.len() - 1] <= 0.0 {
            return Err(Error::Invalid("SoH grid must lie in (0, rated]".into()));
        }
        Ok(Self {
            rated_mwh,
            energies,
        })
    }

    /// Samples at `step` (fraction of rated) from 100% down to `eol_fraction`.
    pub fn uniform(rated_mwh: f64, eol_fraction: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && eol_fraction > 0.0 && eol_fraction < 1.0) {
            return Err(Error::Invalid(format!(
                "grid needs 0 < eol < 1 and step > 0, got eol {eol_fraction}, step {step}"
            )));
        }
        let steps = ((1.0 - eol_fraction) / step).round() as usize;
        if steps == 0 || ((1.0 - eol_fraction) - steps as f64 * step).abs() > 1e-9 {
            return Err(Error::Invalid(format!(
                "end-of-life {eol_fraction} is not a whole number of {step} steps below 1"
            )));
        }
        let energies = (0..=steps)
            .map(|k| rated_mwh * (1.0 - k as f64 * step))
            .collect();
        Self::new(rated_mwh, energies)
    }

    pub fn rated_mwh(&self) -> f64 {
        self.rated_mwh
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn energy(&self, i: usize) -> f64 {
        self.energies[i]
    }

    pub fn soh_pct(&self, i: usize) -> f64 {
        100.0 * self.energies[i] / self.rated_mwh
    }

    /// Index of the sample closest to `soh_fraction`, if one is within 1e-9.
    pub fn index_of_soh(&self, soh_fraction: f64) -> Option<usize> {
        self.energies
            .iter()
            .position(|e| (e / self.rated_mwh - soh_fraction).abs() < 1e-9)
    }
}

/// Concave piecewise-linear function on decreasing knots.
///
/// Used as the next-day value inside the daily optimizer. Below the last
/// knot the last segment is extended linearly, which is how the cut
/// representation behaves.
#[derive(Debug, Clone, PartialEq)]
pub struct PwlValue {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
}

impl PwlValue {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() != values.len() || knots.len() < 2 {
            return Err(Error::Invalid("PWL value needs >= 2 matching knots and values".into()));
        }
        if !knots.windows(2).all(|w| w[0] > w[1]) {
            return Err(Error::Invalid("PWL knots must be strictly decreasing".into()));
        }
        Ok(Self { knots, values })
    }

    /// Identically zero over `[low, high]`.
    pub fn zero(high: f64, low: f64) -> Self {
        Self {
            knots: vec![high, low],
            values: vec![0.0, 0.0],
        }
    }

    /// Slope (value per MWh) of segment `k`, between knots `k` and `k + 1`.
    pub fn slope(&self, k: usize) -> f64 {
        (self.values[k] - self.values[k + 1]) / (self.knots[k] - self.knots[k + 1])
    }

    pub fn segments(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn high(&self) -> f64 {
        self.knots[0]
    }

    pub fn low(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    /// Segment containing `e`, with segment 0 also covering `e > high` and
    /// the last segment covering `e < low`.
    pub fn segment_of(&self, e: f64) -> usize {
        let last = self.segments() - 1;
        (0..last).find(|&k| e >= self.knots[k + 1]).unwrap_or(last)
    }

    /// Linear interpolation, extended linearly past both ends.
    pub fn eval_extended(&self, e: f64) -> f64 {
        let k = self.segment_of(e);
        self.values[k + 1] + self.slope(k) * (e - self.knots[k + 1])
    }

    pub fn eval(&self, e: f64) -> Result<f64> {
        let tol = 1e-12 * self.high().abs().max(1.0);
        if e > self.high() + tol || e < self.low() - tol {
            return Err(Error::Domain(format!(
                "capacity {e} outside [{}, {}]",
                self.low(),
                self.high()
            )));
        }
        Ok(self.eval_extended(e.clamp(self.low(), self.high())))
    }

    /// Interpolation inside the span; value of the end-of-life knot below it.
    pub fn eval_clamped(&self, e: f64) -> f64 {
        if e <= self.low() {
            self.values[self.values.len() - 1]
        } else {
            self.eval_extended(e.min(self.high()))
        }
    }

    pub fn is_concave(&self, rel_tol: f64) -> bool {
        (0..self.segments().saturating_sub(1)).all(|k| {
            let (a, b) = (self.slope(k), self.slope(k + 1));
            a <= b + rel_tol * a.abs().max(b.abs()) + 1e-12
        })
    }
}

/// Value-to-go at each capacity sample for days `0..days` plus a terminal
/// column at index `days`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSurface {
    grid: SohGrid,
    columns: Vec<Vec<f64>>,
}

impl ValueSurface {
    pub fn new(grid: SohGrid, days: usize) -> Self {
        let columns = vec![vec![0.0; grid.len()]; days + 1];
        Self { grid, columns }
    }

    pub fn grid(&self) -> &SohGrid {
        &self.grid
    }

    /// Number of operating days (the terminal column is extra).
    pub fn days(&self) -> usize {
        self.columns.len() - 1
    }

    pub fn column(&self, day: usize) -> &[f64] {
        &self.columns[day]
    }

    pub fn column_mut(&mut self, day: usize) -> &mut [f64] {
        &mut self.columns[day]
    }

    pub fn set_column(&mut self, day: usize, values: Vec<f64>) {
        assert_eq!(values.len(), self.grid.len());
        self.columns[day] = values;
    }

    pub fn value(&self, sample: usize, day: usize) -> f64 {
        self.columns[day][sample]
    }

    pub fn pwl(&self, day: usize) -> PwlValue {
        PwlValue {
            knots: self.grid.energies.clone(),
            values: self.columns[day].clone(),
        }
    }

    pub fn evaluate(&self, day: usize, energy_mwh: f64) -> Result<f64> {
        if day >= self.columns.len() {
            return Err(Error::Index {
                index: day,
                len: self.columns.len(),
            });
        }
        self.pwl(day).eval(energy_mwh)
    }

    /// Slope from sample `i` toward the more degraded sample `i + 1`, using
    /// the values of day `day + 1`.
    pub fn marginal_cost(&self, sample: usize, day: usize) -> Result<f64> {
        let i_max = self.grid.len() - 1;
        if sample >= i_max {
            return Err(Error::Index {
                index: sample,
                len: i_max,
            });
        }
        if day + 1 >= self.columns.len() {
            return Err(Error::Index {
                index: day + 1,
                len: self.columns.len(),
            });
        }
        let next = &self.columns[day + 1];
        Ok((next[sample] - next[sample + 1])
            / (self.grid.energies[sample] - self.grid.energies[sample + 1]))
    }

    /// Raises day `day` to the resale value wherever selling beats operating,
    /// then restores concavity with the upper concave envelope.
    pub fn apply_resale_overlay(&mut self, day: usize, curve: &ResaleCurve) {
        self.raise_to_resale(day, curve);
        let env = upper_concave_envelope(&self.grid.energies, &self.columns[day]);
        self.columns[day] = env;
    }

    /// Pointwise `max(value, resale)` on day `day`, without the envelope step.
    pub fn raise_to_resale(&mut self, day: usize, curve: &ResaleCurve) {
        let rated = self.grid.rated_mwh;
        let col = &mut self.columns[day];
        for (v, &e) in col.iter_mut().zip(&self.grid.energies) {
            *v = v.max(curve.value(e, rated));
        }
    }

    /// Checks nonnegativity, monotonicity in capacity, concavity and the
    /// zero end-of-life value on every column.
    pub fn violations(&self, rel_tol: f64) -> Vec<SurfaceViolation> {
        self.violations_with(rel_tol, 0.0)
    }

    /// Like [`ValueSurface::violations`], also allowing each value an
    /// absolute error of `abs_tol` dollars, e.g. the rounding of a CSV file.
    pub fn violations_with(&self, rel_tol: f64, abs_tol: f64) -> Vec<SurfaceViolation> {
        let mut out = Vec::new();
        for day in 0..self.columns.len() {
            out.extend(column_violations(&self.grid, &self.columns[day], day, rel_tol, abs_tol));
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "day,soh_pct,value_usd")?;
        for (day, col) in self.columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                writeln!(w, "{},{:.2},{:.6}", day + 1, self.grid.soh_pct(i), v)?;
            }
        }
        Ok(())
    }

    /// Marginal cost of degradation for each (day, sample) with a defined
    /// next day and a more degraded neighbour.
    pub fn write_marginal_cost_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "day,soh_pct,marginal_cost_usd_per_mwh")?;
        for day in 0..self.days() {
            for i in 0..self.grid.len() - 1 {
                let c = self.marginal_cost(i, day)?;
                writeln!(w, "{},{:.2},{:.6}", day + 1, self.grid.soh_pct(i), c)?;
            }
        }
        Ok(())
    }

    /// Reads a surface written by [`ValueSurface::write_csv`]. Capacities
    /// are reconstructed relative to a rated capacity of 1 MWh.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let reader = std::io::BufReader::new(file);
        let mut days: Vec<Vec<(f64, f64)>> = Vec::new();
        for (k, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = k + 1;
            if k == 0 {
                if line.trim() != "day,soh_pct,value_usd" {
                    return Err(parse_err(path, lineno, "expected header day,soh_pct,value_usd"));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 3 {
                return Err(parse_err(path, lineno, "expected 3 fields"));
            }
            let day: usize = parts[0]
                .parse()
                .map_err(|_| parse_err(path, lineno, "bad day"))?;
            let soh: f64 = parts[1]
                .parse()
                .map_err(|_| parse_err(path, lineno, "bad soh_pct"))?;
            let v: f64 = parts[2]
                .parse()
                .map_err(|_| parse_err(path, lineno, "bad value_usd"))?;
            if day == 0 || day > days.len() + 1 {
                return Err(parse_err(path, lineno, "days must start at 1 and be contiguous"));
            }
            if day == days.len() + 1 {
                days.push(Vec::new());
            }
            days[day - 1].push((soh, v));
        }
        if days.is_empty() {
            return Err(Error::Invalid(format!("{}: no rows", path.display())));
        }
        let energies: Vec<f64> = days[0].iter().map(|(s, _)| s / 100.0).collect();
        let grid = SohGrid::new(1.0, energies.clone())?;
        let mut columns = Vec::with_capacity(days.len());
        for (d, rows) in days.into_iter().enumerate() {
            let e: Vec<f64> = rows.iter().map(|(s, _)| s / 100.0).collect();
            if e != energies {
                return Err(Error::Invalid(format!(
                    "{}: day {} uses a different SoH grid",
                    path.display(),
                    d + 1
                )));
            }
            columns.push(rows.into_iter().map(|(_, v)| v).collect());
        }
        Ok(Self { grid, columns })
    }
}

fn parse_err(path: &Path, line: usize, msg: &str) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    Negative,
    NotMonotone,
    NotConcave,
    NonzeroEndOfLife,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceViolation {
    /// 0-based column index.
    pub day: usize,
    pub sample: usize,
    pub soh_pct: f64,
    pub kind: ViolationKind,
}

pub fn column_violations(
    grid: &SohGrid,
    col: &[f64],
    day: usize,
    rel_tol: f64,
    abs_tol: f64,
) -> Vec<SurfaceViolation> {
    let mut out = Vec::new();
    let scale = col.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let abs_tol = abs_tol.max(1e-9 * (1.0 + scale));
    let mut push = |sample: usize, kind| {
        out.push(SurfaceViolation {
            day,
            sample,
            soh_pct: grid.soh_pct(sample),
            kind,
        })
    };
    let last = col.len() - 1;
    if col[last].abs() > abs_tol {
        push(last, ViolationKind::NonzeroEndOfLife);
    }
    for (i, v) in col.iter().enumerate() {
        if *v < -abs_tol {
            push(i, ViolationKind::Negative);
        }
    }
    for i in 0..last {
        if col[i] < col[i + 1] - abs_tol {
            push(i, ViolationKind::NotMonotone);
        }
    }
    let e = grid.energies();
    for i in 0..last.saturating_sub(1) {
        let s0 = (col[i] - col[i + 1]) / (e[i] - e[i + 1]);
        let s1 = (col[i + 1] - col[i + 2]) / (e[i + 1] - e[i + 2]);
        let tol = rel_tol * s0.abs().max(s1.abs()) + 2.0 * abs_tol * (1.0 / (e[i] - e[i + 1]) + 1.0 / (e[i + 1] - e[i + 2]));
        if s0 > s1 + tol {
            push(i + 1, ViolationKind::NotConcave);
        }
    }
    out
}

/// Smallest concave majorant of the points `(knots[i], values[i])`,
/// evaluated at the knots. Knots must be strictly monotone.
pub fn upper_concave_envelope(knots: &[f64], values: &[f64]) -> Vec<f64> {
    let n = knots.len();
    let mut order: Vec<usize> = (0..n).collect();
    if n > 1 && knots[0] > knots[n - 1] {
        order.reverse();
    }
    // monotone chain upper hull over increasing x
    let mut hull: Vec<usize> = Vec::with_capacity(n);
    for &k in &order {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (knots[b] - knots[a]) * (values[k] - values[a])
                - (values[b] - values[a]) * (knots[k] - knots[a]);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    let mut out = values.to_vec();
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        let pa = order.iter().position(|&x| x == a).unwrap();
        let pb = order.iter().position(|&x| x == b).unwrap();
        for &k in &order[pa + 1..pb] {
            let t = (knots[k] - knots[a]) / (knots[b] - knots[a]);
            out[k] = values[a] + t * (values[b] - values[a]);
        }
    }
    out
}

/// Prorated resale value while under warranty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResaleCurve {
    pub base_price_usd_per_kwh: f64,
    pub warranty_threshold: f64,
}

impl Default for ResaleCurve {
    fn default() -> Self {
        Self {
            base_price_usd_per_kwh: 200.0,
            warranty_threshold: 0.8,
        }
    }
}

impl ResaleCurve {
    /// Dollars for a battery with `energy_mwh` left out of `rated_mwh`.
    pub fn value(&self, energy_mwh: f64, rated_mwh: f64) -> f64 {
        let floor = self.warranty_threshold * rated_mwh;
        if energy_mwh < floor {
            return 0.0;
        }
        let warranty_left = (energy_mwh - floor) / ((1.0 - self.warranty_threshold) * rated_mwh);
        let soh = energy_mwh / rated_mwh;
        self.base_price_usd_per_kwh * 1000.0 * rated_mwh * warranty_left * soh
    }
}

pub fn resale_value(curve: &ResaleCurve, energy_mwh: f64, rated_mwh: f64) -> f64 {
    curve.value(energy_mwh, rated_mwh)
}
