//! Expected utilities in the item sellers' pricing game for a fixed menu.
//!
//! Item seller `i` posting `q` earns `Rev_i(q) * Pr[sale | v_i >= q]`, since
//! whether `i` sells is the same for every `v_i >= q` and zero otherwise. For
//! grand-bundle and partition menus the sale probability inside a block with
//! price `p` is `Pr[p - q >= sum_{j != i} min(v_j, q_j)]`, computed from exact
//! leave-one-out convolutions. Explicit menus are evaluated by enumerating the
//! joint support of values and prices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::buyer::choose;
use crate::error::{Error, Result};
use crate::instance::MarketInstance;
use crate::menu::{ItemSet, Menu, MenuKind};
use crate::pmf::{leave_one_out, Pmf};
use crate::strategy::MixedStrategy;

/// Largest item count for the exact explicit-menu path.
pub const MAX_ENUMERATED_ITEMS: usize = 4;
/// Largest joint support the enumeration paths will walk.
pub const ENUMERATION_LIMIT: u128 = 50_000_000;

#[derive(Debug, Clone)]
struct Block {
    items: Vec<usize>,
    /// Price in tick coordinates.
    price: f64,
}

#[derive(Debug, Clone)]
enum Structure {
    Blocks { blocks: Vec<Block>, block_of: Vec<Option<usize>> },
    Enumerated,
}

#[derive(Debug, Clone)]
pub struct Game {
    instance: MarketInstance,
    menu: Menu,
    tick_menu: Menu,
    structure: Structure,
}

impl Game {
    pub fn new(instance: MarketInstance, menu: Menu) -> Result<Self> {
        let m = instance.items();
        if menu.items() != m {
            return Err(Error::InvalidInput(format!(
                "menu covers {} items but the instance has {m}",
                menu.items()
            )));
        }
        let tick_menu = menu.in_ticks(instance.grid());
        let blocks: Option<Vec<Block>> = match tick_menu.kind() {
            MenuKind::GrandBundle(p) => Some(vec![Block { items: (0..m).collect(), price: *p }]),
            MenuKind::Partition(b) => Some(
                b.iter().map(|&(s, p)| Block { items: s.items().collect(), price: p }).collect(),
            ),
            MenuKind::Explicit(_) => None,
        };
        let structure = match blocks {
            Some(blocks) => {
                let mut block_of = vec![None; m];
                for (k, b) in blocks.iter().enumerate() {
                    for &i in &b.items {
                        block_of[i] = Some(k);
                    }
                }
                Structure::Blocks { blocks, block_of }
            }
            None if m <= MAX_ENUMERATED_ITEMS => Structure::Enumerated,
            None => {
                return Err(Error::UnsupportedMenuAtScale(format!(
                    "exact evaluation of explicit menus is limited to {MAX_ENUMERATED_ITEMS} items (got {m}); \
                     use the Monte Carlo estimators"
                )))
            }
        };
        Ok(Game { instance, menu, tick_menu, structure })
    }

    pub fn instance(&self) -> &MarketInstance {
        &self.instance
    }

    pub fn menu(&self) -> &Menu {
        &self.menu
    }

    pub fn tick_menu(&self) -> &Menu {
        &self.tick_menu
    }

    pub fn items(&self) -> usize {
        self.instance.items()
    }

    pub fn seller_points(&self, i: usize) -> Vec<i64> {
        self.instance.price_grid().points(i)
    }

    /// Whether utilities come from block convolutions (grand bundle, partition).
    pub fn has_block_structure(&self) -> bool {
        matches!(self.structure, Structure::Blocks { .. })
    }

    /// Law of `min(v_i, q_i)` with `q_i ~ s_i`.
    pub fn capped_value_pmf(&self, i: usize, s: &MixedStrategy) -> Pmf {
        let d = self.instance.dist(i);
        let mut atoms = Vec::with_capacity(s.atoms().len() * d.atoms_ticks().len());
        for &(q, w) in s.atoms() {
            for &(v, p) in d.atoms_ticks() {
                atoms.push((v.min(q), w * p));
            }
        }
        Pmf::from_atoms(atoms)
    }

    /// `q * Pr[v_i >= q]` in money.
    pub fn item_revenue(&self, i: usize, q: i64) -> f64 {
        self.instance.dist(i).revenue_ticks(q)
    }

    /// Leave-one-out sums `sum_{j in block(i), j != i} min(v_j, q_j)` for every
    /// seller inside a block; `None` for sellers the principal does not cover
    /// and for explicit menus.
    pub fn loo_convolutions(&self, profile: &[MixedStrategy]) -> Result<Vec<Option<Pmf>>> {
        let Structure::Blocks { blocks, .. } = &self.structure else {
            return Ok(vec![None; self.items()]);
        };
        let mut out = vec![None; self.items()];
        for b in blocks {
            let parts: Vec<Pmf> = b.items.iter().map(|&j| self.capped_value_pmf(j, &profile[j])).collect();
            for (k, loo) in leave_one_out(&parts)?.into_iter().enumerate() {
                out[b.items[k]] = Some(loo);
            }
        }
        Ok(out)
    }

    /// Utilities of seller `i` for each listed pure price against the others'
    /// strategies in `profile`.
    pub fn deviation_utilities(&self, profile: &[MixedStrategy], i: usize, points: &[i64]) -> Result<Vec<f64>> {
        match &self.structure {
            Structure::Blocks { blocks, block_of } => {
                let Some(k) = block_of[i] else {
                    return Ok(points.iter().map(|&q| self.item_revenue(i, q)).collect());
                };
                let b = &blocks[k];
                let parts: Vec<Pmf> = b
                    .items
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| self.capped_value_pmf(j, &profile[j]))
                    .collect();
                let loo = Pmf::sum_of(&parts)?;
                Ok(self.block_utilities(i, b.price, &loo, points))
            }
            Structure::Enumerated => self.enumerated_deviation_utilities(profile, i, points),
        }
    }

    fn block_utilities(&self, i: usize, price: f64, loo: &Pmf, points: &[i64]) -> Vec<f64> {
        points
            .iter()
            .map(|&q| {
                let rev = self.item_revenue(i, q);
                if rev == 0.0 {
                    0.0
                } else {
                    rev * loo.cdf_le(price - q as f64)
                }
            })
            .collect()
    }

    /// Deviation utilities of every seller over their own price grid, sharing
    /// one leave-one-out pass per block.
    pub fn all_deviation_utilities(&self, profile: &[MixedStrategy]) -> Result<Vec<Vec<f64>>> {
        let points: Vec<Vec<i64>> = (0..self.items()).map(|i| self.seller_points(i)).collect();
        self.deviation_utilities_each(profile, &points)
    }

    /// Like [`Game::deviation_utilities`] for every seller at once, seller `i`
    /// evaluated at `points[i]`.
    pub fn deviation_utilities_each(&self, profile: &[MixedStrategy], points: &[Vec<i64>]) -> Result<Vec<Vec<f64>>> {
        match &self.structure {
            Structure::Blocks { blocks, block_of } => {
                let loos = self.loo_convolutions(profile)?;
                Ok((0..self.items())
                    .map(|i| match (block_of[i], &loos[i]) {
                        (Some(k), Some(loo)) => self.block_utilities(i, blocks[k].price, loo, &points[i]),
                        _ => points[i].iter().map(|&q| self.item_revenue(i, q)).collect(),
                    })
                    .collect())
            }
            Structure::Enumerated => {
                (0..self.items()).map(|i| self.deviation_utilities(profile, i, &points[i])).collect()
            }
        }
    }

    /// `E_{q ~ s_i}[Rev_i(q) Pr[sale]]`.
    pub fn seller_utility(&self, profile: &[MixedStrategy], i: usize) -> Result<f64> {
        let pts: Vec<i64> = profile[i].atoms().iter().map(|a| a.0).collect();
        let utils = self.deviation_utilities(profile, i, &pts)?;
        Ok(profile[i].atoms().iter().zip(utils).map(|(a, u)| a.1 * u).sum())
    }

    /// Expected principal revenue (money).
    pub fn principal_revenue(&self, profile: &[MixedStrategy]) -> Result<f64> {
        match &self.structure {
            Structure::Blocks { blocks, .. } => {
                let mut total = 0.0;
                for b in blocks {
                    let parts: Vec<Pmf> =
                        b.items.iter().map(|&j| self.capped_value_pmf(j, &profile[j])).collect();
                    let sum = Pmf::sum_of(&parts)?;
                    total += self.instance.grid().money(1) * b.price * sum.tail_gt(b.price);
                }
                Ok(total)
            }
            Structure::Enumerated => self.principal_revenue_enumerated(profile),
        }
    }

    fn check_enumeration(&self, sizes: impl Iterator<Item = usize>) -> Result<()> {
        let needed = sizes.fold(1u128, |acc, s| acc.saturating_mul(s as u128));
        if needed > ENUMERATION_LIMIT {
            return Err(Error::BudgetExceeded { needed, budget: ENUMERATION_LIMIT });
        }
        Ok(())
    }

    fn enumerated_deviation_utilities(
        &self,
        profile: &[MixedStrategy],
        i: usize,
        points: &[i64],
    ) -> Result<Vec<f64>> {
        let m = self.items();
        let others: Vec<usize> = (0..m).filter(|&j| j != i).collect();
        let mut lists: Vec<Vec<(i64, f64)>> = Vec::new();
        for &j in &others {
            lists.push(self.instance.dist(j).atoms_ticks().to_vec());
            lists.push(profile[j].atoms().to_vec());
        }
        self.check_enumeration(lists.iter().map(|l| l.len()).chain([points.len()]))?;
        let mut sale = vec![0.0; points.len()];
        let mut v = vec![0i64; m];
        let mut q = vec![0i64; m];
        for_each_product(&lists, |vals, prob| {
            for (k, &j) in others.iter().enumerate() {
                v[j] = vals[2 * k];
                q[j] = vals[2 * k + 1];
            }
            for (slot, &qi) in sale.iter_mut().zip(points) {
                q[i] = qi;
                v[i] = qi;
                if choose(&self.tick_menu, &q, &v).sellers.contains(i) {
                    *slot += prob;
                }
            }
        });
        Ok(points.iter().zip(sale).map(|(&q, s)| self.item_revenue(i, q) * s).collect())
    }

    /// `E[q_i 1{i sells}]` by walking every value and price profile.
    pub fn seller_utility_enumerated(&self, profile: &[MixedStrategy], i: usize) -> Result<f64> {
        let mut total = 0.0;
        let step = self.instance.grid().step;
        self.walk_outcomes(profile, |q, _, c, prob| {
            if c.sellers.contains(i) {
                total += prob * q[i] as f64 * step;
            }
        })?;
        Ok(total)
    }

    /// `E[p(T)]` by walking every value and price profile.
    pub fn principal_revenue_enumerated(&self, profile: &[MixedStrategy]) -> Result<f64> {
        let mut total = 0.0;
        let menu = &self.menu;
        self.walk_outcomes(profile, |_, _, c, prob| {
            if !c.principal.is_empty() {
                total += prob * menu.price(c.principal);
            }
        })?;
        Ok(total)
    }

    fn walk_outcomes(
        &self,
        profile: &[MixedStrategy],
        mut f: impl FnMut(&[i64], &[i64], crate::buyer::Choice, f64),
    ) -> Result<()> {
        let m = self.items();
        let mut lists: Vec<Vec<(i64, f64)>> = Vec::with_capacity(2 * m);
        for j in 0..m {
            lists.push(self.instance.dist(j).atoms_ticks().to_vec());
            lists.push(profile[j].atoms().to_vec());
        }
        self.check_enumeration(lists.iter().map(|l| l.len()))?;
        let mut v = vec![0i64; m];
        let mut q = vec![0i64; m];
        for_each_product(&lists, |vals, prob| {
            for j in 0..m {
                v[j] = vals[2 * j];
                q[j] = vals[2 * j + 1];
            }
            let c = choose(&self.tick_menu, &q, &v);
            f(&q, &v, c, prob);
        });
        Ok(())
    }

    /// Whether any buyer decision reachable under `profile` was settled by the
    /// lexicographic rule between sets that displace different seller sales.
    pub fn lexicographic_rule_decisive(&self, profile: &[MixedStrategy]) -> Result<bool> {
        if self.has_block_structure() {
            return Ok(false);
        }
        let mut decisive = false;
        let menu = &self.tick_menu;
        self.walk_outcomes(profile, |q, v, c, _| {
            if !decisive && lex_decisive(menu, q, v, c.principal) {
                decisive = true;
            }
        })?;
        Ok(decisive)
    }
}

/// True when a set other than `chosen` ties it on surplus, price and
/// displaced-sale count but displaces a different set of seller sales.
fn lex_decisive(menu: &Menu, q: &[i64], v: &[i64], chosen: ItemSet) -> bool {
    let m = menu.items();
    let key = |t: ItemSet| {
        let gain: i64 = t.items().map(|i| v[i].min(q[i])).sum();
        let displaced = t.items().filter(|&i| q[i] > 0 && v[i] >= q[i]).fold(ItemSet::EMPTY, |a, i| a.insert(i));
        (gain as f64 - menu.price(t), menu.price(t), displaced)
    };
    let (g, p, d) = key(chosen);
    (0u64..(1u64 << m)).map(ItemSet).any(|t| {
        if t == chosen || menu.price(t).is_infinite() {
            return false;
        }
        let (g2, p2, d2) = key(t);
        g2 == g && p2 == p && d2.len() == d.len() && d2 != d
    })
}

/// Calls `f(values, probability)` for every element of the product of the
/// given discrete lists, in odometer order.
pub fn for_each_product(lists: &[Vec<(i64, f64)>], mut f: impl FnMut(&[i64], f64)) {
    if lists.iter().any(|l| l.is_empty()) {
        return;
    }
    let n = lists.len();
    let mut idx = vec![0usize; n];
    let mut vals: Vec<i64> = lists.iter().map(|l| l[0].0).collect();
    loop {
        let prob: f64 = (0..n).map(|k| lists[k][idx[k]].1).product();
        f(&vals, prob);
        let mut k = n;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < lists[k].len() {
                vals[k] = lists[k][idx[k]].0;
                break;
            }
            idx[k] = 0;
            vals[k] = lists[k][0].0;
        }
    }
}

fn sample(cum: &[(i64, f64)], u: f64) -> i64 {
    let j = cum.partition_point(|a| a.1 <= u);
    cum[j.min(cum.len() - 1)].0
}

fn cumulative(atoms: &[(i64, f64)]) -> Vec<(i64, f64)> {
    let mut acc = 0.0;
    atoms
        .iter()
        .map(|&(t, p)| {
            acc += p;
            (t, acc)
        })
        .collect()
}

/// Monte Carlo estimates for menus too large for exact evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloEstimate {
    pub principal_revenue: f64,
    pub seller_utilities: Vec<f64>,
    pub samples: usize,
    /// Standard error of the principal revenue estimate.
    pub std_error: f64,
}

/// Seeded Monte Carlo estimate of principal revenue and seller utilities for
/// any menu over at most 12 items. Never used for certificates.
pub fn monte_carlo(
    instance: &MarketInstance,
    menu: &Menu,
    profile: &[MixedStrategy],
    samples: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    let m = instance.items();
    if menu.items() != m || profile.len() != m || samples == 0 {
        return Err(Error::InvalidInput("menu, profile and instance must agree; samples > 0".into()));
    }
    let tick_menu = menu.in_ticks(instance.grid());
    let vcum: Vec<_> = instance.dists().iter().map(|d| cumulative(d.atoms_ticks())).collect();
    let qcum: Vec<_> = profile.iter().map(|s| cumulative(s.atoms())).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    let mut seller = vec![0.0; m];
    let mut v = vec![0i64; m];
    let mut q = vec![0i64; m];
    let step = instance.grid().step;
    for _ in 0..samples {
        for j in 0..m {
            v[j] = sample(&vcum[j], rng.gen::<f64>());
            q[j] = sample(&qcum[j], rng.gen::<f64>());
        }
        let c = choose(&tick_menu, &q, &v);
        let rev = if c.principal.is_empty() { 0.0 } else { menu.price(c.principal) };
        sum += rev;
        sum_sq += rev * rev;
        for j in c.sellers.items() {
            seller[j] += q[j] as f64 * step;
        }
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    Ok(MonteCarloEstimate {
        principal_revenue: mean,
        seller_utilities: seller.into_iter().map(|s| s / n).collect(),
        samples,
        std_error: (var / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::DiscreteDistribution;
    use crate::grid::ValueGrid;
    use crate::strategy::pure_profile;

    fn binary100_single(price: f64) -> Game {
        let g = ValueGrid::new(1.0, 100.0).unwrap();
        let d = DiscreteDistribution::binary(g, 100.0, 0.1).unwrap();
        let inst = MarketInstance::new(vec![d]).unwrap();
        Game::new(inst, Menu::grand_bundle(1, price).unwrap()).unwrap()
    }

    #[test]
    fn single_seller_against_bundle() {
        let game = binary100_single(50.0);
        assert!((game.seller_utility(&pure_profile(&[40]), 0).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(game.seller_utility(&pure_profile(&[60]), 0).unwrap(), 0.0);
        assert!((game.seller_utility(&pure_profile(&[50]), 0).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(game.principal_revenue(&pure_profile(&[50])).unwrap(), 0.0);
    }

    #[test]
    fn point_masses_undercut_to_zero_revenue() {
        let g = ValueGrid::new(0.5, 1.0).unwrap();
        let d = DiscreteDistribution::point_mass(g, 1.0).unwrap();
        let inst = MarketInstance::new(vec![d.clone(), d.clone(), d]).unwrap();
        let game = Game::new(inst, Menu::grand_bundle(3, 1.5).unwrap()).unwrap();
        let prof = pure_profile(&[1, 1, 1]);
        assert_eq!(game.principal_revenue(&prof).unwrap(), 0.0);
        assert_eq!(game.deviation_utilities(&prof, 0, &[0, 1, 2]).unwrap(), vec![0.0, 0.5, 0.0]);
    }

    #[test]
    fn loo_matches_binomial() {
        let g = ValueGrid::new(1.0, 1.0).unwrap();
        let d = DiscreteDistribution::binary(g, 1.0, 0.5).unwrap();
        let inst = MarketInstance::new(vec![d.clone(), d.clone(), d]).unwrap();
        let game = Game::new(inst, Menu::grand_bundle(3, 2.0).unwrap()).unwrap();
        let loos = game.loo_convolutions(&pure_profile(&[1, 1, 1])).unwrap();
        for l in loos {
            assert_eq!(l.unwrap().atoms(), &[(0, 0.25), (1, 0.5), (2, 0.25)]);
        }
    }

    #[test]
    fn explicit_menus_beyond_four_items_need_monte_carlo() {
        let g = ValueGrid::new(1.0, 2.0).unwrap();
        let d = DiscreteDistribution::binary(g, 2.0, 0.5).unwrap();
        let inst = MarketInstance::new(vec![d; 5]).unwrap();
        let menu = Menu::parse("explicit {1,2,3,4,5}=3", 5).unwrap();
        assert!(matches!(Game::new(inst.clone(), menu.clone()), Err(Error::UnsupportedMenuAtScale(_))));
        let est = monte_carlo(&inst, &menu, &pure_profile(&[2; 5]), 20_000, 7).unwrap();
        // Bundle sells iff at least two of five items have value 2: 26/32.
        assert!((est.principal_revenue - 3.0 * 26.0 / 32.0).abs() < 4.0 * est.std_error + 1e-9);
    }

    #[test]
    fn product_walk_covers_all_combinations() {
        let lists = vec![vec![(0, 0.5), (1, 0.5)], vec![(5, 0.25), (6, 0.75)]];
        let mut seen = Vec::new();
        for_each_product(&lists, |v, p| seen.push((v.to_vec(), p)));
        assert_eq!(seen.len(), 4);
        assert_eq!(seen[3], (vec![1, 6], 0.375));
        let total: f64 = seen.iter().map(|s| s.1).sum();
        assert_eq!(total, 1.0);
    }
}
