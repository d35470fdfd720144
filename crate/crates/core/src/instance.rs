//! Market instances: item value distributions on a shared grid, plus the
//! price grid item sellers choose from.

use serde::{Deserialize, Serialize};

use crate::dist::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::grid::ValueGrid;
use crate::menu::MAX_ITEMS;

/// Item-seller prices: multiples of `step_ticks` value-grid ticks, from 0 up
/// to a per-seller cap (the seller's Myerson price by default).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceGrid {
    pub step_ticks: i64,
    pub upper_ticks: Vec<i64>,
}

impl PriceGrid {
    pub fn points(&self, i: usize) -> Vec<i64> {
        (0..=self.upper_ticks[i] / self.step_ticks).map(|k| k * self.step_ticks).collect()
    }

    pub fn len(&self, i: usize) -> usize {
        (self.upper_ticks[i] / self.step_ticks + 1) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketInstance {
    grid: ValueGrid,
    dists: Vec<DiscreteDistribution>,
    prices: PriceGrid,
}

impl MarketInstance {
    /// Puts all distributions on one grid (same step, largest maximum) and
    /// uses the default price grid: one value tick per price step, capped at
    /// each item's Myerson price.
    pub fn new(dists: Vec<DiscreteDistribution>) -> Result<Self> {
        let Some(first) = dists.first() else {
            return Err(Error::InvalidInput("an instance needs at least one item".into()));
        };
        if dists.len() > MAX_ITEMS {
            return Err(Error::InvalidInput(format!("at most {MAX_ITEMS} items are supported")));
        }
        let step = first.grid().step;
        if dists.iter().any(|d| d.grid().step != step) {
            return Err(Error::InvalidInput("all items must share the grid step".into()));
        }
        let max_value = dists.iter().map(|d| d.grid().max_value).fold(0.0, f64::max);
        let grid = ValueGrid::new(step, max_value)?;
        let dists = dists
            .into_iter()
            .map(|d| if d.grid() == &grid { Ok(d) } else { d.with_max_value(max_value) })
            .collect::<Result<Vec<_>>>()?;
        let upper = dists.iter().map(|d| d.myerson_ticks()).collect();
        Ok(MarketInstance { grid, dists, prices: PriceGrid { step_ticks: 1, upper_ticks: upper } })
    }

    /// Price step as a whole number of value ticks.
    pub fn with_price_step(mut self, step_ticks: i64) -> Result<Self> {
        if step_ticks <= 0 {
            return Err(Error::InvalidInput("price step must be a positive number of ticks".into()));
        }
        self.prices.step_ticks = step_ticks;
        Ok(self)
    }

    /// Overrides the per-seller price caps (in ticks).
    pub fn with_upper_ticks(mut self, upper: Vec<i64>) -> Result<Self> {
        if upper.len() != self.dists.len() || upper.iter().any(|&u| u < 0) {
            return Err(Error::InvalidInput("one non-negative price cap per item is required".into()));
        }
        self.prices.upper_ticks = upper;
        Ok(self)
    }

    pub fn grid(&self) -> &ValueGrid {
        &self.grid
    }

    pub fn dists(&self) -> &[DiscreteDistribution] {
        &self.dists
    }

    pub fn dist(&self, i: usize) -> &DiscreteDistribution {
        &self.dists[i]
    }

    pub fn items(&self) -> usize {
        self.dists.len()
    }

    pub fn price_grid(&self) -> &PriceGrid {
        &self.prices
    }

    pub fn myerson_ticks(&self) -> Vec<i64> {
        self.dists.iter().map(|d| d.myerson_ticks()).collect()
    }

    pub fn myerson_prices(&self) -> Vec<f64> {
        self.dists.iter().map(|d| d.myerson_price()).collect()
    }

    /// Sub-market on the given items, keeping grid and price caps.
    pub fn restrict(&self, items: &[usize]) -> Result<Self> {
        let dists = items.iter().map(|&i| self.dists[i].clone()).collect();
        let upper = items.iter().map(|&i| self.prices.upper_ticks[i]).collect();
        MarketInstance::new(dists)?.with_price_step(self.prices.step_ticks)?.with_upper_ticks(upper)
    }
}
