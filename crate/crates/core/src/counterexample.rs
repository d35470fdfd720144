//! Markets where pair bundles earn revenue linear in the number of pairs while
//! every grand-bundle price earns at most a constant.
//!
//! Pair `i` holds two i.i.d. items worth `H_i = K^(2 * 3^(i-1))` with
//! probability `x_i = K^(-3^(i-1))` and zero otherwise, so `H_i x_i^2 = 1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::game::Game;
use crate::grid::ValueGrid;
use crate::instance::MarketInstance;
use crate::menu::{ItemSet, Menu};
use crate::pmf::MAX_EXACT_TICKS;
use crate::solver::{solve, SolveOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleSpec {
    pub k: u64,
    pub n: usize,
    pub h: Vec<f64>,
    /// `x_i = 1 / x_denominators[i]`.
    pub x: Vec<f64>,
    pub x_denominators: Vec<u128>,
    pub grid_step: f64,
    /// Text form of the pair-bundle menu.
    pub partition_menu: String,
}

impl CounterexampleSpec {
    /// `H_i * x_i^2 == 1`, checked in integers: `H_i` equals the squared denominator.
    pub fn identity_holds(&self) -> bool {
        self.h.iter().zip(&self.x_denominators).all(|(&h, &d)| d.checked_mul(d).map_or(false, |d2| d2 as f64 == h))
    }

    pub fn menu(&self) -> Result<Menu> {
        Menu::parse(&self.partition_menu, 2 * self.n)
    }

    /// `3 (x_{i+1} + 1 / (p x_i^2))` for the band `3 H_i <= p < 3 H_{i+1}`
    /// (1-based `i`), the loss term of the copy-seller sale bound.
    pub fn copy_seller_term(&self, p: f64) -> Option<(usize, f64)> {
        let i = (1..self.n).find(|&i| 3.0 * self.h[i - 1] <= p && p < 3.0 * self.h[i])?;
        Some((i, 3.0 * (self.x[i] + 1.0 / (p * self.x[i - 1] * self.x[i - 1]))))
    }
}

/// Builds the `2n`-item instance on a grid with the given step (one grid
/// step is the bundle premium over `H_i`).
pub fn build_counterexample(k: u64, n: usize, grid_step: f64) -> Result<(MarketInstance, CounterexampleSpec)> {
    if k <= 2 || n == 0 {
        return Err(Error::InvalidInput("the construction needs K > 2 and n >= 1".into()));
    }
    let mut h = Vec::with_capacity(n);
    let mut dens = Vec::with_capacity(n);
    for i in 0..n {
        let e = 3u32.checked_pow(i as u32).ok_or(Error::GridOverflow { ticks: u128::MAX, limit: MAX_EXACT_TICKS as u128 })?;
        let den = (k as u128).checked_pow(e);
        let hi = den.and_then(|d| d.checked_mul(d));
        let (Some(den), Some(hi)) = (den, hi) else {
            return Err(Error::GridOverflow { ticks: u128::MAX, limit: MAX_EXACT_TICKS as u128 });
        };
        dens.push(den);
        h.push(hi);
    }
    let top = *h.last().expect("n >= 1");
    // Sums of all 2n capped values must stay exactly representable.
    let ticks = (top as f64 / grid_step).ceil() as u128 * (2 * n as u128 + 1);
    if ticks >= MAX_EXACT_TICKS as u128 {
        return Err(Error::GridOverflow { ticks, limit: MAX_EXACT_TICKS as u128 });
    }
    let max_value = top as f64;
    let grid = ValueGrid::new(grid_step, max_value)?;
    let mut dists = Vec::with_capacity(2 * n);
    let x: Vec<f64> = dens.iter().map(|&d| 1.0 / d as f64).collect();
    for i in 0..n {
        let d = DiscreteDistribution::binary(grid.clone(), h[i] as f64, x[i])?;
        dists.push(d.clone());
        dists.push(d);
    }
    let instance = MarketInstance::new(dists)?;
    let blocks: Vec<(ItemSet, f64)> = (0..n)
        .map(|i| (ItemSet::from_items(&[2 * i, 2 * i + 1]), h[i] as f64 + grid_step))
        .collect();
    let menu = Menu::partition(2 * n, blocks)?;
    let spec = CounterexampleSpec {
        k,
        n,
        h: h.iter().map(|&v| v as f64).collect(),
        x,
        x_denominators: dens,
        grid_step,
        partition_menu: menu.to_text(),
    };
    Ok((instance, spec))
}

/// `count` prices spaced evenly in log scale from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![hi];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|j| (a + (b - a) * j as f64 / (count - 1) as f64).exp()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PriceBand {
    /// `p < 3 H_1`: revenue at most `p`.
    Low,
    /// `3 H_1 <= p < 3 H_n`: revenue at most 36.
    Mid,
    /// `p >= 3 H_n`.
    High,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Requested price and the on-grid price actually posted.
    pub requested_price: f64,
    pub price: f64,
    pub band: PriceBand,
    pub min_rev: Option<f64>,
    pub max_rev: Option<f64>,
    pub n_equilibria: usize,
    /// Revenue cap for the band: `p` (at most `3 K^2`), 36, or 0.
    pub band_bound: f64,
    pub bound_36_flag: bool,
    pub band_bound_ok: bool,
    /// Copy-seller loss term and the smallest sale probability seen among
    /// sellers of higher pairs, mid band only.
    pub copy_seller_term: Option<f64>,
    pub min_copy_seller_sale_prob: Option<f64>,
    pub budget_exceeded: bool,
}

/// Solves the grand-bundle game at each price (snapped down to the grid) and
/// records the revenue band over the equilibria found.
pub fn grand_bundle_sweep(
    instance: &MarketInstance,
    spec: &CounterexampleSpec,
    prices: &[f64],
    opts: &SolveOptions,
) -> Result<Vec<SweepRow>> {
    let m = instance.items();
    let step = instance.grid().step;
    let h_n = *spec.h.last().expect("n >= 1");
    prices
        .par_iter()
        .map(|&requested| {
            let price = ((requested / step) + 1e-9).floor() * step;
            let price = if price <= 0.0 { step } else { price };
            let game = Game::new(instance.clone(), Menu::grand_bundle(m, price)?)?;
            let rep = solve(&game, opts)?;
            let band = if price < 3.0 * spec.h[0] {
                PriceBand::Low
            } else if price < 3.0 * h_n {
                PriceBand::Mid
            } else {
                PriceBand::High
            };
            let band_bound = match band {
                PriceBand::Low => price,
                PriceBand::Mid => 36.0,
                PriceBand::High => 0.0,
            };
            let max_rev = rep.max_revenue;
            let band_bound_ok = max_rev.map_or(true, |r| r <= band_bound + 1e-9);
            let mut copy_term = None;
            let mut min_sale = None;
            if let Some((i, term)) = spec.copy_seller_term(price) {
                copy_term = Some(term);
                for e in &rep.equilibria {
                    let loos = game.loo_convolutions(&e.profile)?;
                    for j in 2 * i..m {
                        let loo = loos[j].as_ref().expect("grand bundle covers every item");
                        for &(q, _) in e.profile[j].atoms() {
                            let pr = loo.cdf_le(price / step - q as f64);
                            min_sale = Some(min_sale.map_or(pr, |x: f64| x.min(pr)));
                        }
                    }
                }
            }
            Ok(SweepRow {
                requested_price: requested,
                price,
                band,
                min_rev: rep.min_revenue,
                max_rev,
                n_equilibria: rep.equilibria.len(),
                band_bound,
                bound_36_flag: max_rev.map_or(true, |r| r <= 36.0 + 1e-9),
                band_bound_ok,
                copy_seller_term: copy_term,
                min_copy_seller_sale_prob: min_sale,
                budget_exceeded: rep.budget_exceeded,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k3_n2_parameters() {
        let (inst, spec) = build_counterexample(3, 2, 1.0).unwrap();
        assert_eq!(spec.h, vec![9.0, 729.0]);
        assert_eq!(spec.x_denominators, vec![3, 27]);
        assert!(spec.identity_holds());
        assert_eq!(inst.items(), 4);
        assert_eq!(inst.myerson_prices(), vec![9.0, 9.0, 729.0, 729.0]);
        assert_eq!(spec.partition_menu, spec.menu().unwrap().to_text());
        assert!(spec.partition_menu.contains("730"));
    }

    #[test]
    fn doubly_exponential_growth_overflows() {
        assert!(matches!(build_counterexample(3, 5, 1.0), Err(Error::GridOverflow { .. })));
        assert!(build_counterexample(2, 1, 1.0).is_err());
    }

    #[test]
    fn log_spacing_hits_endpoints() {
        let p = log_spaced(1.0, 2187.0, 120);
        assert_eq!(p.len(), 120);
        assert!((p[0] - 1.0).abs() < 1e-12);
        assert!((p[119] - 2187.0).abs() < 1e-9);
    }
}
