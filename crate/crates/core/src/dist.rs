//! Finite value distributions on a [`ValueGrid`].
//!
//! `F(x)` is the strict CDF `Pr[v < x]`, so the revenue of a posted price is
//! `x * Pr[v >= x]`. Moments are taken of `min(v, t)` for a cap `t`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ValueGrid;

const PROB_TOL: f64 = 1e-12;
/// Relative tolerance under which two revenues count as tied.
const REV_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    grid: ValueGrid,
    /// (value in ticks, probability), ascending and distinct.
    atoms: Vec<(i64, f64)>,
    /// `tail[j] = Pr[v >= atoms[j].0]`.
    tail: Vec<f64>,
    myerson_ticks: i64,
}

impl DiscreteDistribution {
    /// Builds a distribution from money-valued atoms. Duplicate values are
    /// merged and probabilities renormalized to sum to exactly one.
    pub fn new(grid: ValueGrid, atoms: &[(f64, f64)]) -> Result<Self> {
        let mut ticked = Vec::with_capacity(atoms.len());
        for &(value, prob) in atoms {
            let t = grid.ticks(value)?;
            if t > grid.max_ticks() {
                return Err(Error::InvalidInput(format!(
                    "value {value} exceeds grid maximum {}",
                    grid.max_value
                )));
            }
            ticked.push((t, prob));
        }
        Self::from_ticks(grid, ticked)
    }

    pub fn from_ticks(grid: ValueGrid, mut atoms: Vec<(i64, f64)>) -> Result<Self> {
        if atoms.iter().any(|&(t, p)| t < 0 || !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidInput("atoms need non-negative values and probabilities".into()));
        }
        let sum: f64 = atoms.iter().map(|a| a.1).sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::ProbSumMismatch { sum });
        }
        atoms.sort_by_key(|a| a.0);
        let mut merged: Vec<(i64, f64)> = Vec::with_capacity(atoms.len());
        for (t, p) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == t => last.1 += p,
                _ => merged.push((t, p)),
            }
        }
        merged.retain(|a| a.1 > 0.0);
        for a in &mut merged {
            a.1 /= sum;
        }
        if merged.iter().all(|a| a.0 == 0) {
            return Err(Error::TrivialDistribution);
        }
        let mut tail = vec![0.0; merged.len()];
        let mut acc = 0.0;
        for j in (0..merged.len()).rev() {
            acc += merged[j].1;
            tail[j] = acc;
        }
        let mut d = DiscreteDistribution { grid, atoms: merged, tail, myerson_ticks: 0 };
        d.myerson_ticks = d.compute_myerson();
        Ok(d)
    }

    pub fn point_mass(grid: ValueGrid, value: f64) -> Result<Self> {
        Self::new(grid, &[(value, 1.0)])
    }

    /// Two-point distribution: `high` with probability `x`, else 0.
    pub fn binary(grid: ValueGrid, high: f64, x: f64) -> Result<Self> {
        Self::new(grid, &[(0.0, 1.0 - x), (high, x)])
    }

    fn compute_myerson(&self) -> i64 {
        let mut best = (0i64, 0.0f64);
        for (j, &(t, _)) in self.atoms.iter().enumerate() {
            let rev = t as f64 * self.tail[j];
            if rev >= best.1 - REV_TIE_TOL * best.1.abs() {
                best = (t, rev.max(best.1));
            }
        }
        best.0
    }

    pub fn grid(&self) -> &ValueGrid {
        &self.grid
    }

    pub fn atoms_ticks(&self) -> &[(i64, f64)] {
        &self.atoms
    }

    pub fn atoms(&self) -> Vec<(f64, f64)> {
        self.atoms.iter().map(|&(t, p)| (self.grid.money(t), p)).collect()
    }

    pub fn max_support_ticks(&self) -> i64 {
        self.atoms.last().map_or(0, |a| a.0)
    }

    /// `Pr[v >= k]` for a tick position `k` (which may be fractional).
    pub fn tail_at_coord(&self, k: f64) -> f64 {
        let j = self.atoms.partition_point(|a| (a.0 as f64) < k);
        if j < self.tail.len() {
            self.tail[j]
        } else {
            0.0
        }
    }

    pub fn tail_ticks(&self, k: i64) -> f64 {
        let j = self.atoms.partition_point(|a| a.0 < k);
        if j < self.tail.len() {
            self.tail[j]
        } else {
            0.0
        }
    }

    /// `Pr[v < x]`.
    pub fn cdf_strict(&self, x: f64) -> f64 {
        let k = self.grid.coord(x);
        let j = self.atoms.partition_point(|a| (a.0 as f64) < k);
        self.atoms[..j].iter().map(|a| a.1).sum()
    }

    /// `x * Pr[v >= x]`.
    pub fn revenue_at(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        x * self.tail_at_coord(self.grid.coord(x))
    }

    pub fn revenue_ticks(&self, k: i64) -> f64 {
        if k <= 0 {
            return 0.0;
        }
        self.grid.money(k) * self.tail_ticks(k)
    }

    /// Largest revenue-maximizing price.
    pub fn myerson_price(&self) -> f64 {
        self.grid.money(self.myerson_ticks)
    }

    pub fn myerson_ticks(&self) -> i64 {
        self.myerson_ticks
    }

    /// `E[min(v, t)]`.
    pub fn truncated_mean(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        self.atoms.iter().map(|&(v, p)| p * self.grid.money(v).min(t)).sum()
    }

    /// `Var[min(v, t)]`.
    pub fn truncated_variance(&self, t: f64) -> f64 {
        self.central_moment(t, |d| d * d)
    }

    /// `E[|min(v, t) - E[min(v, t)]|^3]`.
    pub fn truncated_abs3(&self, t: f64) -> f64 {
        self.central_moment(t, |d| d.abs().powi(3))
    }

    fn central_moment(&self, t: f64, f: impl Fn(f64) -> f64) -> f64 {
        let t = t.max(0.0);
        let mean = self.truncated_mean(t);
        self.atoms.iter().map(|&(v, p)| p * f(self.grid.money(v).min(t) - mean)).sum()
    }

    /// Untruncated mean, variance and third absolute central moment.
    pub fn mean(&self) -> f64 {
        self.truncated_mean(f64::INFINITY)
    }

    pub fn variance(&self) -> f64 {
        self.truncated_variance(f64::INFINITY)
    }

    pub fn abs3(&self) -> f64 {
        self.truncated_abs3(f64::INFINITY)
    }

    /// Distribution of `min(v, t)` for an on-grid cap `t`.
    /// Fails with `TrivialDistribution` when `t = 0`.
    pub fn truncate(&self, t: f64) -> Result<Self> {
        let k = self.grid.ticks(t)?;
        self.truncate_ticks(k)
    }

    pub fn truncate_ticks(&self, k: i64) -> Result<Self> {
        let atoms = self.atoms.iter().map(|&(v, p)| (v.min(k), p)).collect();
        Self::from_ticks(self.grid, atoms)
    }

    /// Same shape with every value multiplied by an integer factor.
    pub fn scaled(&self, factor: i64) -> Result<Self> {
        let grid = ValueGrid::new(self.grid.step, self.grid.max_value * factor as f64)?;
        let atoms = self.atoms.iter().map(|&(v, p)| (v * factor, p)).collect();
        Self::from_ticks(grid, atoms)
    }

    /// Re-homes the distribution on a grid with the same step and a larger maximum.
    pub fn with_max_value(&self, max_value: f64) -> Result<Self> {
        let grid = ValueGrid::new(self.grid.step, max_value)?;
        if self.max_support_ticks() > grid.max_ticks() {
            return Err(Error::InvalidInput("support exceeds new grid maximum".into()));
        }
        Self::from_ticks(grid, self.atoms.clone())
    }

    /// Parses the text format: a `# grid_step=<e> max_value=<V>` header
    /// followed by `value<TAB>prob` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut grid = None;
        let mut atoms = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if grid.is_none() && rest.contains("grid_step") {
                    grid = Some(parse_header(rest, line_no)?);
                }
                continue;
            }
            let g = grid.ok_or_else(|| Error::Parse {
                line: line_no,
                message: "missing `# grid_step=.. max_value=..` header".into(),
            })?;
            let mut fields = line.split_whitespace();
            let (Some(v), Some(p), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(Error::Parse { line: line_no, message: "expected `value<TAB>prob`".into() });
            };
            let value = parse_num(v, line_no)?;
            let prob = parse_num(p, line_no)?;
            let t = g.ticks(value).map_err(|e| Error::Parse { line: line_no, message: e.to_string() })?;
            if t > g.max_ticks() {
                return Err(Error::Parse { line: line_no, message: format!("value {v} exceeds max_value") });
            }
            atoms.push((t, prob));
        }
        let g = grid.ok_or_else(|| Error::Parse { line: 1, message: "empty distribution file".into() })?;
        Self::from_ticks(g, atoms)
    }

    pub fn to_text(&self) -> String {
        let digits = decimals_for(self.grid.step);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# grid_step={} max_value={}",
            fmt_fixed(self.grid.step, digits),
            fmt_fixed(self.grid.max_value, digits)
        );
        for &(t, p) in &self.atoms {
            let _ = writeln!(out, "{}\t{}", fmt_fixed(self.grid.money(t), digits), p);
        }
        out
    }
}

fn parse_header(rest: &str, line: usize) -> Result<ValueGrid> {
    let mut step = None;
    let mut max = None;
    for tok in rest.split_whitespace() {
        if let Some(v) = tok.strip_prefix("grid_step=") {
            step = Some(parse_num(v, line)?);
        } else if let Some(v) = tok.strip_prefix("max_value=") {
            max = Some(parse_num(v, line)?);
        }
    }
    match (step, max) {
        (Some(s), Some(m)) => {
            ValueGrid::new(s, m).map_err(|e| Error::Parse { line, message: e.to_string() })
        }
        _ => Err(Error::Parse { line, message: "header needs grid_step and max_value".into() }),
    }
}

fn parse_num(s: &str, line: usize) -> Result<f64> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse { line, message: format!("not a number: {s:?}") })
}

/// Number of decimals needed to print multiples of `step` exactly.
pub(crate) fn decimals_for(step: f64) -> usize {
    (0..=12)
        .find(|&d| {
            let scaled = step * 10f64.powi(d as i32);
            (scaled - scaled.round()).abs() < 1e-9 * scaled.max(1.0)
        })
        .unwrap_or(12)
}

pub(crate) fn fmt_fixed(x: f64, digits: usize) -> String {
    format!("{x:.digits$}")
}
