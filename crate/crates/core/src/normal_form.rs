//! Explicit payoff tables over pure price profiles, with iterated strict
//! dominance and two-seller support enumeration on top of them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{for_each_product, Game};
use crate::strategy::{MixedStrategy, StrategyProfile};

/// Default cap on the number of pure profiles a table may hold.
pub const TABLE_BUDGET: u128 = 4_000_000;

#[derive(Debug, Clone)]
pub struct NormalForm {
    grids: Vec<Vec<i64>>,
    strides: Vec<usize>,
    /// `payoffs[i][flat]`, money.
    payoffs: Vec<Vec<f64>>,
}

fn profile_count(grids: &[Vec<i64>]) -> u128 {
    grids.iter().fold(1u128, |acc, g| acc.saturating_mul(g.len() as u128))
}

impl NormalForm {
    /// Tabulates every seller's utility on the product of `grids`.
    pub fn build(game: &Game, grids: &[Vec<i64>], budget: u128) -> Result<Self> {
        let m = game.items();
        if grids.len() != m || grids.iter().any(|g| g.is_empty()) {
            return Err(Error::InvalidInput("one non-empty price list per seller is required".into()));
        }
        let needed = profile_count(grids);
        if needed > budget {
            return Err(Error::BudgetExceeded { needed, budget });
        }
        let mut strides = vec![1usize; m];
        for i in 1..m {
            strides[i] = strides[i - 1] * grids[i - 1].len();
        }
        let total = needed as usize;
        let mut payoffs = Vec::with_capacity(m);
        for i in 0..m {
            let others: Vec<Vec<(i64, f64)>> = (0..m)
                .map(|j| if j == i { vec![(0, 1.0)] } else { (0..grids[j].len() as i64).map(|k| (k, 1.0)).collect() })
                .collect();
            let mut bases = Vec::with_capacity(total / grids[i].len());
            for_each_product(&others, |idx, _| bases.push(idx.to_vec()));
            let rows: Vec<(usize, Vec<f64>)> = bases
                .par_iter()
                .map(|idx| {
                    let profile: StrategyProfile = (0..m)
                        .map(|j| MixedStrategy::pure(if j == i { grids[i][0] } else { grids[j][idx[j] as usize] }))
                        .collect();
                    let base: usize = idx.iter().zip(&strides).map(|(&k, &s)| k as usize * s).sum();
                    game.deviation_utilities(&profile, i, &grids[i]).map(|u| (base, u))
                })
                .collect::<Result<_>>()?;
            let mut table = vec![0.0; total];
            for (base, u) in rows {
                for (a, val) in u.into_iter().enumerate() {
                    table[base + a * strides[i]] = val;
                }
            }
            payoffs.push(table);
        }
        Ok(NormalForm { grids: grids.to_vec(), strides, payoffs })
    }

    pub fn players(&self) -> usize {
        self.grids.len()
    }

    pub fn grid(&self, i: usize) -> &[i64] {
        &self.grids[i]
    }

    pub fn grids(&self) -> &[Vec<i64>] {
        &self.grids
    }

    pub fn index(&self, choice: &[usize]) -> usize {
        choice.iter().zip(&self.strides).map(|(&c, &s)| c * s).sum()
    }

    pub fn payoff(&self, i: usize, choice: &[usize]) -> f64 {
        self.payoffs[i][self.index(choice)]
    }

    /// Expected payoff of each of seller `i`'s actions when every other seller
    /// `j` mixes with weights `mixed[j]` over `grid(j)`.
    pub fn deviation_payoffs(&self, i: usize, mixed: &[Vec<f64>]) -> Vec<f64> {
        let m = self.players();
        let lists: Vec<Vec<(i64, f64)>> = (0..m)
            .map(|j| {
                if j == i {
                    vec![(0, 1.0)]
                } else {
                    mixed[j].iter().enumerate().filter(|(_, w)| **w > 0.0).map(|(k, &w)| (k as i64, w)).collect()
                }
            })
            .collect();
        let n = self.grids[i].len();
        let stride = self.strides[i];
        let table = &self.payoffs[i];
        let mut out = vec![0.0; n];
        for_each_product(&lists, |idx, w| {
            let base: usize = idx.iter().zip(&self.strides).map(|(&k, &s)| k as usize * s).sum();
            for (a, o) in out.iter_mut().enumerate() {
                *o += w * table[base + a * stride];
            }
        });
        out
    }

    /// Converts grid-index weights into a strategy profile.
    pub fn to_profile(&self, mixed: &[Vec<f64>]) -> StrategyProfile {
        mixed.iter().zip(&self.grids).map(|(w, g)| MixedStrategy::from_weights(g, w)).collect()
    }
}

/// One elimination step: prices removed from a seller in a round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Elimination {
    pub round: usize,
    pub seller: usize,
    pub removed: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    /// Surviving prices (ticks) per seller.
    pub grids: Vec<Vec<i64>>,
    /// Round 0 is the clip to `[0, r_i]`.
    pub eliminations: Vec<Elimination>,
    pub rounds: usize,
}

impl DominanceReport {
    pub fn is_singleton(&self) -> bool {
        self.grids.iter().all(|g| g.len() == 1)
    }
}

/// Clips each seller's grid to `[0, r_i]`, then removes strictly dominated
/// pure prices (against every surviving pure profile of the others) until
/// nothing changes. `tol` is the money margin a dominator must clear.
pub fn iterated_dominance(game: &Game, tol: f64, budget: u128) -> Result<DominanceReport> {
    let m = game.items();
    let r = game.instance().myerson_ticks();
    let mut eliminations = Vec::new();
    let mut grids = Vec::with_capacity(m);
    for i in 0..m {
        let pts = game.seller_points(i);
        let (keep, removed): (Vec<i64>, Vec<i64>) = pts.into_iter().partition(|&q| q <= r[i]);
        if !removed.is_empty() {
            eliminations.push(Elimination { round: 0, seller: i, removed });
        }
        grids.push(keep);
    }
    let nf = NormalForm::build(game, &grids, budget)?;
    let mut alive: Vec<Vec<usize>> = grids.iter().map(|g| (0..g.len()).collect()).collect();
    let mut round = 0;
    loop {
        round += 1;
        let dominated: Vec<Vec<usize>> = (0..m).map(|i| dominated_actions(&nf, &alive, i, tol)).collect();
        if dominated.iter().all(|d| d.is_empty()) {
            break;
        }
        for (i, d) in dominated.into_iter().enumerate() {
            if d.is_empty() {
                continue;
            }
            eliminations.push(Elimination { round, seller: i, removed: d.iter().map(|&k| nf.grid(i)[k]).collect() });
            alive[i].retain(|k| !d.contains(k));
        }
    }
    let grids = alive.iter().enumerate().map(|(i, a)| a.iter().map(|&k| nf.grid(i)[k]).collect()).collect();
    Ok(DominanceReport { grids, eliminations, rounds: round - 1 })
}

fn dominated_actions(nf: &NormalForm, alive: &[Vec<usize>], i: usize, tol: f64) -> Vec<usize> {
    let m = nf.players();
    let lists: Vec<Vec<(i64, f64)>> = (0..m)
        .map(|j| if j == i { vec![(0, 1.0)] } else { alive[j].iter().map(|&k| (k as i64, 1.0)).collect() })
        .collect();
    let mut bases = Vec::new();
    for_each_product(&lists, |idx, _| {
        bases.push(idx.iter().zip(&nf.strides).map(|(&k, &s)| k as usize * s).sum::<usize>())
    });
    // rows[a][col] = payoff of alive action a against surviving column col.
    let rows: Vec<Vec<f64>> = alive[i]
        .iter()
        .map(|&a| bases.iter().map(|&b| nf.payoffs[i][b + a * nf.strides[i]]).collect())
        .collect();
    let n = rows.len();
    // Try strongest candidates first: sort by worst-case payoff, descending.
    let mut order: Vec<usize> = (0..n).collect();
    let worst: Vec<f64> = rows.iter().map(|r| r.iter().copied().fold(f64::INFINITY, f64::min)).collect();
    order.sort_by(|&x, &y| worst[y].total_cmp(&worst[x]));
    (0..n)
        .into_par_iter()
        .filter(|&b| {
            order.iter().any(|&a| a != b && rows[a].iter().zip(&rows[b]).all(|(ua, ub)| *ua > *ub + tol))
        })
        .map(|b| alive[i][b])
        .collect()
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for x in start..n {
            cur.push(x);
            rec(x + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, j| acc * (n - j) as u128 / (j + 1) as u128)
}

/// Weights over `support` (indices into the mixer's grid) making every action
/// in `responder_support` indifferent; `payoff(a, b)` is the responder's
/// payoff for its action `a` against the mixer's action `b`.
fn indifference(
    support: &[usize],
    responder_support: &[usize],
    payoff: impl Fn(usize, usize) -> f64,
) -> Option<(Vec<f64>, f64)> {
    let k = support.len();
    // Unknowns: weights y_1..y_k and the common value v.
    let mut a = Vec::with_capacity(k + 1);
    let mut b = Vec::with_capacity(k + 1);
    for &ra in responder_support {
        let mut row: Vec<f64> = support.iter().map(|&sb| payoff(ra, sb)).collect();
        row.push(-1.0);
        a.push(row);
        b.push(0.0);
    }
    let mut row = vec![1.0; k];
    row.push(0.0);
    a.push(row);
    b.push(1.0);
    let x = solve_linear(a, b)?;
    let (w, v) = x.split_at(k);
    if w.iter().any(|&p| p < -1e-12) {
        return None;
    }
    Some((w.iter().map(|p| p.max(0.0)).collect(), v[0]))
}

/// Equal-size support enumeration for two-seller tables, supports of size up
/// to `max_support`. Returns profiles whose table regret is within `tol`.
pub fn support_enumeration(nf: &NormalForm, max_support: usize, tol: f64, budget: u128) -> Result<Vec<StrategyProfile>> {
    if nf.players() != 2 {
        return Err(Error::InvalidInput("support enumeration needs exactly two sellers".into()));
    }
    let (n0, n1) = (nf.grid(0).len(), nf.grid(1).len());
    let needed: u128 = (1..=max_support.min(n0).min(n1)).map(|k| binomial(n0, k) * binomial(n1, k)).sum();
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let u0 = |a: usize, b: usize| nf.payoff(0, &[a, b]);
    let u1 = |a: usize, b: usize| nf.payoff(1, &[b, a]);
    let mut found: Vec<StrategyProfile> = Vec::new();
    for k in 1..=max_support.min(n0).min(n1) {
        let s0s = combinations(n0, k);
        let s1s = combinations(n1, k);
        let hits: Vec<StrategyProfile> = s0s
            .par_iter()
            .flat_map_iter(|s0| {
                s1s.iter().filter_map(move |s1| {
                    // Seller 1's weights make seller 0 indifferent, and vice versa.
                    let (y, v0) = indifference(s1, s0, u0)?;
                    let (x, v1) = indifference(s0, s1, u1)?;
                    let mut w0 = vec![0.0; n0];
                    let mut w1 = vec![0.0; n1];
                    for (&a, &p) in s0.iter().zip(&x) {
                        w0[a] = p;
                    }
                    for (&b, &p) in s1.iter().zip(&y) {
                        w1[b] = p;
                    }
                    let mixed = vec![w0, w1];
                    let d0 = nf.deviation_payoffs(0, &mixed);
                    let d1 = nf.deviation_payoffs(1, &mixed);
                    let ok0 = d0.iter().all(|&u| u <= v0 + tol);
                    let ok1 = d1.iter().all(|&u| u <= v1 + tol);
                    (ok0 && ok1).then(|| nf.to_profile(&mixed))
                })
            })
            .collect();
        for h in hits {
            if !found.contains(&h) {
                found.push(h);
            }
        }
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::DiscreteDistribution;
    use crate::grid::ValueGrid;
    use crate::instance::MarketInstance;
    use crate::menu::Menu;

    fn claim_pair(step: f64) -> Game {
        let g = ValueGrid::new(step, 100.0).unwrap();
        let d = DiscreteDistribution::binary(g, 100.0, 0.1).unwrap();
        let inst = MarketInstance::new(vec![d.clone(), d]).unwrap();
        Game::new(inst, Menu::grand_bundle(2, 100.0 + step).unwrap()).unwrap()
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let game = claim_pair(10.0);
        let grids: Vec<Vec<i64>> = (0..2).map(|i| game.seller_points(i)).collect();
        let nf = NormalForm::build(&game, &grids, TABLE_BUDGET).unwrap();
        // q1 = q2 = 60 exceeds the bundle price 110, so seller 1 sells only when v2 = 0.
        assert!((nf.payoff(0, &[6, 6]) - 0.1 * 60.0 * 0.9).abs() < 1e-12);
        assert!((nf.payoff(0, &[6, 4]) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn dominance_isolates_the_high_price() {
        let game = claim_pair(1.0);
        let rep = iterated_dominance(&game, 1e-12, TABLE_BUDGET).unwrap();
        assert_eq!(rep.grids, vec![vec![100], vec![100]]);
        assert!(rep.rounds >= 2);
    }

    #[test]
    fn matching_pennies_style_support() {
        let a = vec![vec![1.0, -1.0], vec![1.0, 1.0]];
        let x = solve_linear(a, vec![0.0, 1.0]).unwrap();
        assert_eq!(x, vec![0.5, 0.5]);
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(binomial(21, 3), 1330);
    }

    #[test]
    fn support_enumeration_finds_the_pure_equilibrium() {
        let game = claim_pair(10.0);
        let grids: Vec<Vec<i64>> = (0..2).map(|i| game.seller_points(i)).collect();
        let nf = NormalForm::build(&game, &grids, TABLE_BUDGET).unwrap();
        let eqs = support_enumeration(&nf, 2, 1e-12, 1_000_000).unwrap();
        assert!(eqs.contains(&crate::strategy::pure_profile(&[10, 10])));
    }
}
