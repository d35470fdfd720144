//! The buyer's purchase decision.
//!
//! Given menu `p`, item-seller prices `q` and values `v`, the buyer picks the
//! principal set `T` maximizing `sum_{i in T} min(v_i, q_i) - p(T)`. Ties go
//! to (1) the cheaper `p(T)`, (2) fewer items in `T` that the buyer would
//! otherwise buy from their seller at a positive price, (3) the
//! lexicographically smallest membership vector. The buyer then buys every
//! item outside `T` with `v_i >= q_i`, plus every item priced at zero.
//!
//! The tick-level functions take a menu already converted with
//! [`Menu::in_ticks`] and integer tick vectors, so that every comparison is exact.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::ValueGrid;
use crate::menu::{ItemSet, Menu, MenuKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Choice {
    pub principal: ItemSet,
    pub sellers: ItemSet,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub principal_set: ItemSet,
    pub item_seller_set: ItemSet,
    pub principal_revenue: f64,
    pub seller_revenues: Vec<f64>,
    pub buyer_utility: f64,
}

/// Items whose seller purchase at a positive price would be displaced by `T`.
fn displaced(t: ItemSet, q: &[i64], v: &[i64]) -> usize {
    t.items().filter(|&i| q[i] > 0 && v[i] >= q[i]).count()
}

fn seller_set(t: ItemSet, q: &[i64], v: &[i64]) -> ItemSet {
    let mut u = ItemSet::EMPTY;
    for i in 0..q.len() {
        if q[i] == 0 || (!t.contains(i) && v[i] >= q[i]) {
            u = u.insert(i);
        }
    }
    u
}

/// Block rule for a set of items sold only together at one price: buy the
/// items with positive `min(v, q)` iff their sum strictly exceeds the price.
fn block_choice(block: ItemSet, price: f64, q: &[i64], v: &[i64]) -> ItemSet {
    let mut sum = 0i64;
    let mut req = ItemSet::EMPTY;
    for i in block.items() {
        let m = v[i].min(q[i]);
        if m > 0 {
            sum += m;
            req = req.insert(i);
        }
    }
    if (sum as f64) > price {
        req
    } else {
        ItemSet::EMPTY
    }
}

/// Buyer decision with a tick-denominated menu.
pub fn choose(tick_menu: &Menu, q: &[i64], v: &[i64]) -> Choice {
    let m = tick_menu.items();
    let t = match tick_menu.kind() {
        MenuKind::GrandBundle(p) => block_choice(ItemSet::full(m), *p, q, v),
        MenuKind::Partition(blocks) => blocks
            .iter()
            .fold(ItemSet::EMPTY, |acc, &(b, p)| acc.union(block_choice(b, p, q, v))),
        MenuKind::Explicit(_) => choose_by_enumeration(tick_menu, q, v),
    };
    Choice { principal: t, sellers: seller_set(t, q, v) }
}

/// Exhaustive search over all `2^m` principal sets with the full tie-break order.
pub fn choose_by_enumeration(tick_menu: &Menu, q: &[i64], v: &[i64]) -> ItemSet {
    let m = tick_menu.items();
    let mins: Vec<i64> = (0..m).map(|i| v[i].min(q[i])).collect();
    let mut best = ItemSet::EMPTY;
    let mut best_key = (0.0f64, 0.0f64, 0usize);
    for mask in 1u64..(1u64 << m) {
        let t = ItemSet(mask);
        let price = tick_menu.price(t);
        if price.is_infinite() {
            continue;
        }
        let gain: i64 = t.items().map(|i| mins[i]).sum();
        let key = (gain as f64 - price, price, displaced(t, q, v));
        let ord = key
            .0
            .partial_cmp(&best_key.0)
            .unwrap()
            .reverse()
            .then(key.1.partial_cmp(&best_key.1).unwrap())
            .then(key.2.cmp(&best_key.2))
            .then(t.lex_cmp(best));
        if ord == Ordering::Less {
            best = t;
            best_key = key;
        }
    }
    best
}

/// Best utility over every pair (principal set, seller set), by brute force.
/// Utility is in tick units.
pub fn best_utility_brute_force(tick_menu: &Menu, q: &[i64], v: &[i64]) -> f64 {
    let m = tick_menu.items();
    let mut best = f64::NEG_INFINITY;
    for tm in 0u64..(1u64 << m) {
        let t = ItemSet(tm);
        let price = tick_menu.price(t);
        if price.is_infinite() {
            continue;
        }
        for um in 0u64..(1u64 << m) {
            let u = ItemSet(um);
            let got = t.union(u);
            let value: i64 = got.items().map(|i| v[i]).sum();
            let paid: i64 = u.items().map(|i| q[i]).sum();
            best = best.max(value as f64 - price - paid as f64);
        }
    }
    best
}

/// Utility of a decision, in tick units.
pub fn utility_ticks(tick_menu: &Menu, c: Choice, q: &[i64], v: &[i64]) -> f64 {
    let value: i64 = c.principal.union(c.sellers).items().map(|i| v[i]).sum();
    let paid: i64 = c.sellers.items().map(|i| q[i]).sum();
    value as f64 - tick_menu.price(c.principal) - paid as f64
}

fn to_ticks(grid: &ValueGrid, xs: &[f64]) -> Result<Vec<i64>> {
    xs.iter().map(|&x| grid.ticks(x)).collect()
}

/// Money-denominated buyer decision with full revenue accounting.
pub fn buyer_choice(menu: &Menu, grid: &ValueGrid, q: &[f64], v: &[f64]) -> Result<Outcome> {
    if q.len() != menu.items() || v.len() != menu.items() {
        return Err(Error::InvalidInput("price and value vectors must match the item count".into()));
    }
    let (qt, vt) = (to_ticks(grid, q)?, to_ticks(grid, v)?);
    let c = choose(&menu.in_ticks(grid), &qt, &vt);
    let principal_revenue = menu.price(c.principal);
    let seller_revenues: Vec<f64> =
        (0..q.len()).map(|i| if c.sellers.contains(i) { q[i] } else { 0.0 }).collect();
    let value: f64 = c.principal.union(c.sellers).items().map(|i| v[i]).sum();
    let buyer_utility = value - principal_revenue - seller_revenues.iter().sum::<f64>();
    Ok(Outcome {
        principal_set: c.principal,
        item_seller_set: c.sellers,
        principal_revenue,
        seller_revenues,
        buyer_utility,
    })
}

/// Whether the grand bundle at price `p` sells: `p < sum_i min(v_i, q_i)`.
pub fn grand_bundle_sale(grid: &ValueGrid, p: f64, q: &[f64], v: &[f64]) -> Result<bool> {
    let (qt, vt) = (to_ticks(grid, q)?, to_ticks(grid, v)?);
    let sum: i64 = qt.iter().zip(&vt).map(|(a, b)| *a.min(b)).sum();
    Ok(grid.coord(p) < sum as f64)
}

/// Checks that changing values only on `s` cannot move the decision to a
/// different set with the same intersection with `s`.
pub fn value_change_check(tick_menu: &Menu, q: &[i64], v: &[i64], v2: &[i64], s: ItemSet) -> bool {
    let t1 = choose(tick_menu, q, v).principal;
    let t2 = choose(tick_menu, q, v2).principal;
    t1.intersect(s) != t2.intersect(s) || t1 == t2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdStructure {
    /// Principal set for `q_i <= theta`.
    pub below: ItemSet,
    /// Principal set for `q_i > theta`; contains `i` whenever it differs from `below`.
    pub above: ItemSet,
    /// Largest swept price (in ticks) at which `below` is still chosen.
    pub theta_ticks: i64,
}

/// Sweeps `q_i` over `0, step, .., q_max` (ticks) and checks that the chosen
/// principal set switches at most once, and then only to a set containing `i`.
pub fn threshold_structure(
    tick_menu: &Menu,
    q: &[i64],
    v: &[i64],
    i: usize,
    step: i64,
    q_max: i64,
) -> Result<ThresholdStructure> {
    let mut q = q.to_vec();
    q[i] = 0;
    let below = choose(tick_menu, &q, v).principal;
    let mut theta = 0;
    let mut above = below;
    let mut switched = false;
    let mut k = 0;
    while k <= q_max {
        q[i] = k;
        let t = choose(tick_menu, &q, v).principal;
        if !switched {
            if t == below {
                theta = k;
            } else {
                switched = true;
                above = t;
            }
        } else if t != above {
            return Err(Error::NonThresholdBehavior { item: i });
        }
        k += step;
    }
    if switched && (!above.contains(i) || below.contains(i)) {
        return Err(Error::NonThresholdBehavior { item: i });
    }
    Ok(ThresholdStructure { below, above, theta_ticks: theta })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> ValueGrid {
        ValueGrid::new(0.1, 2.0).unwrap()
    }

    #[test]
    fn bundle_beats_sellers_when_mins_exceed_price() {
        let menu = Menu::grand_bundle(2, 1.0).unwrap();
        let o = buyer_choice(&menu, &grid(), &[0.6, 0.6], &[0.9, 0.9]).unwrap();
        assert_eq!(o.principal_set, ItemSet::full(2));
        assert_eq!(o.principal_revenue, 1.0);
        assert!((o.buyer_utility - 0.8).abs() < 1e-12);
    }

    #[test]
    fn sellers_win_below_bundle_price() {
        let menu = Menu::grand_bundle(2, 1.0).unwrap();
        let o = buyer_choice(&menu, &grid(), &[0.4, 0.4], &[0.7, 0.8]).unwrap();
        assert_eq!(o.principal_set, ItemSet::EMPTY);
        assert_eq!(o.item_seller_set, ItemSet::full(2));
        assert_eq!(o.seller_revenues, vec![0.4, 0.4]);
    }

    #[test]
    fn exact_tie_goes_against_principal() {
        let menu = Menu::grand_bundle(2, 0.8).unwrap();
        let o = buyer_choice(&menu, &grid(), &[0.4, 0.4], &[0.7, 0.8]).unwrap();
        assert_eq!(o.principal_set, ItemSet::EMPTY);
        assert!(grand_bundle_sale(&grid(), 1.0, &[0.6, 0.6], &[0.9, 0.9]).unwrap());
        assert!(!grand_bundle_sale(&grid(), 1.0, &[0.5, 0.5], &[0.9, 0.9]).unwrap());
        assert!(grand_bundle_sale(&grid(), 0.0, &[0.1, 0.0], &[0.2, 0.0]).unwrap());
    }

    #[test]
    fn zero_price_items_are_also_bought_from_sellers() {
        let menu = Menu::grand_bundle(2, 0.5).unwrap();
        let o = buyer_choice(&menu, &grid(), &[0.0, 0.9], &[1.0, 1.0]).unwrap();
        assert_eq!(o.principal_set, ItemSet::from_items(&[1]));
        assert!(o.item_seller_set.contains(0));
    }

    #[test]
    fn closed_forms_match_enumeration() {
        let g = grid();
        let gb = Menu::grand_bundle(3, 1.0).unwrap().in_ticks(&g);
        let as_explicit = Menu::parse("explicit {1,2,3}=1.0", 3).unwrap().in_ticks(&g);
        let part = Menu::parse("partition {1,2}=0.6 {3}=0.3", 3).unwrap().in_ticks(&g);
        let part_explicit = Menu::parse("explicit {1,2,3}=0.9 {1,2}=0.6 {3}=0.3", 3).unwrap().in_ticks(&g);
        for code in 0..(5i64.pow(6)) {
            let mut c = code;
            let mut next = || {
                let x = (c % 5) * 3;
                c /= 5;
                x
            };
            let q = [next(), next(), next()];
            let v = [next(), next(), next()];
            assert_eq!(choose(&gb, &q, &v).principal, choose_by_enumeration(&as_explicit, &q, &v));
            assert_eq!(choose(&part, &q, &v).principal, choose_by_enumeration(&part_explicit, &q, &v));
        }
    }

    #[test]
    fn single_item_threshold_switches_to_bundle() {
        let g = ValueGrid::new(0.1, 1.0).unwrap();
        let menu = Menu::grand_bundle(1, 0.5).unwrap().in_ticks(&g);
        let ts = threshold_structure(&menu, &[0], &[6], 0, 1, 10).unwrap();
        assert_eq!(ts.below, ItemSet::EMPTY);
        assert_eq!(ts.above, ItemSet::single(0));
        assert_eq!(ts.theta_ticks, 5);
    }

    #[test]
    fn point_mass_threshold_at_undercut_price() {
        let g = ValueGrid::new(0.5, 1.0).unwrap();
        let menu = Menu::grand_bundle(3, 1.5).unwrap().in_ticks(&g);
        let ts = threshold_structure(&menu, &[0, 1, 1], &[2, 2, 2], 0, 1, 2).unwrap();
        assert_eq!(ts.theta_ticks, 1);
        assert_eq!(ts.above, ItemSet::full(3));
    }
}
