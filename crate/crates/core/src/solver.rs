//! Equilibrium search and certification for the item sellers' pricing game.
//!
//! Every certificate is produced by [`verify_equilibrium`], which measures each
//! seller's best pure deviation gain over the full price grid with the exact
//! utility evaluator, whatever method proposed the profile.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::Game;
use crate::menu::{Menu, MenuKind};
use crate::normal_form::{iterated_dominance, support_enumeration, DominanceReport, NormalForm};
use crate::strategy::{pure_profile, report_profile, MixedStrategy, StrategyProfile, StrategyReport};

pub const SCHEMA_VERSION: u32 = 1;
/// Default regret tolerance (money) for calling a profile an equilibrium.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    PureBruteForce,
    IteratedBR,
    FictitiousPlay,
    SupportEnumeration,
    Verified,
    /// Checked profile whose regret exceeds the tolerance.
    Unverified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumCertificate {
    pub profile: StrategyProfile,
    pub per_seller_regret: Vec<f64>,
    pub epsilon: f64,
    pub principal_revenue: f64,
    pub seller_utilities: Vec<f64>,
    pub method: Method,
    pub seed: Option<u64>,
    /// Some buyer decision under this profile was settled by the
    /// lexicographic tie-break between sets displacing different sales.
    pub lexicographic_tie_break_decisive: bool,
    pub notes: Vec<String>,
}

impl EquilibriumCertificate {
    pub fn is_certified(&self, tol: f64) -> bool {
        self.epsilon <= tol
    }

    pub fn to_document(&self, game: &Game) -> CertificateDocument {
        let inst = game.instance();
        let grid = inst.grid();
        CertificateDocument {
            schema: SCHEMA_VERSION,
            menu: game.menu().to_text(),
            grid: GridInfo {
                value_step: grid.step,
                max_value: grid.max_value,
                price_step: grid.money(inst.price_grid().step_ticks),
                price_caps: inst.price_grid().upper_ticks.iter().map(|&t| grid.money(t)).collect(),
            },
            profile: report_profile(&self.profile, grid),
            per_seller_regret: self.per_seller_regret.clone(),
            epsilon: self.epsilon,
            principal_revenue: self.principal_revenue,
            seller_utilities: self.seller_utilities.clone(),
            method: self.method,
            seed: self.seed,
            lexicographic_tie_break_decisive: self.lexicographic_tie_break_decisive,
            notes: self.notes.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub value_step: f64,
    pub max_value: f64,
    pub price_step: f64,
    pub price_caps: Vec<f64>,
}

/// Serialized certificate (`schema: 1`); prices are in money.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateDocument {
    pub schema: u32,
    pub menu: String,
    pub grid: GridInfo,
    pub profile: Vec<StrategyReport>,
    pub per_seller_regret: Vec<f64>,
    pub epsilon: f64,
    pub principal_revenue: f64,
    pub seller_utilities: Vec<f64>,
    pub method: Method,
    pub seed: Option<u64>,
    pub lexicographic_tie_break_decisive: bool,
    pub notes: Vec<String>,
}

fn tie_tol(best: f64) -> f64 {
    1e-12 * (1.0 + best.abs())
}

/// Index of the highest price attaining the maximum (up to rounding noise).
fn highest_argmax(utils: &[f64]) -> usize {
    let best = utils.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = tie_tol(best);
    utils.iter().rposition(|&u| u >= best - tol).unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    /// All maximizing prices (ticks), ascending.
    pub maximizers: Vec<i64>,
    pub value: f64,
}

impl BestResponse {
    /// The tie-break choice: the highest maximizer.
    pub fn chosen(&self) -> i64 {
        *self.maximizers.last().expect("a grid is never empty")
    }
}

/// Maximizing prices of seller `i` on its grid against `profile`.
pub fn best_response(game: &Game, profile: &[MixedStrategy], i: usize) -> Result<BestResponse> {
    let pts = game.seller_points(i);
    let utils = game.deviation_utilities(profile, i, &pts)?;
    Ok(maximizers(&pts, &utils))
}

fn maximizers(pts: &[i64], utils: &[f64]) -> BestResponse {
    let best = utils.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = tie_tol(best);
    BestResponse {
        maximizers: pts.iter().zip(utils).filter(|(_, &u)| u >= best - tol).map(|(&q, _)| q).collect(),
        value: best,
    }
}

fn check_profile(game: &Game, profile: &[MixedStrategy]) -> Result<()> {
    if profile.len() != game.items() {
        return Err(Error::InvalidInput(format!(
            "profile has {} strategies for {} sellers",
            profile.len(),
            game.items()
        )));
    }
    if profile.iter().any(|s| s.atoms().is_empty()) {
        return Err(Error::InvalidInput("every seller needs a non-empty strategy".into()));
    }
    Ok(())
}

/// Regret of every seller: best pure deviation on its grid minus its current
/// expected utility. Support points off the grid are evaluated too.
pub fn verify_equilibrium(game: &Game, profile: &[MixedStrategy], tol: f64) -> Result<EquilibriumCertificate> {
    check_profile(game, profile)?;
    let m = game.items();
    let points: Vec<Vec<i64>> = (0..m)
        .map(|i| {
            let mut pts = game.seller_points(i);
            pts.extend(profile[i].atoms().iter().map(|a| a.0));
            pts.sort_unstable();
            pts.dedup();
            pts
        })
        .collect();
    let utils = game.deviation_utilities_each(profile, &points)?;
    let mut regret = Vec::with_capacity(m);
    let mut current = Vec::with_capacity(m);
    for i in 0..m {
        let at = |q: i64| utils[i][points[i].binary_search(&q).expect("support point was added")];
        let cur: f64 = profile[i].atoms().iter().map(|&(q, w)| w * at(q)).sum();
        let grid_best = game.seller_points(i).iter().map(|&q| at(q)).fold(f64::NEG_INFINITY, f64::max);
        regret.push((grid_best - cur).max(0.0));
        current.push(cur);
    }
    let epsilon = regret.iter().copied().fold(0.0, f64::max);
    Ok(EquilibriumCertificate {
        profile: profile.to_vec(),
        per_seller_regret: regret,
        epsilon,
        principal_revenue: game.principal_revenue(profile)?,
        seller_utilities: current,
        method: if epsilon <= tol { Method::Verified } else { Method::Unverified },
        seed: None,
        lexicographic_tie_break_decisive: game.lexicographic_rule_decisive(profile)?,
        notes: Vec::new(),
    })
}

/// All pure profiles on `grids` (default: each seller's full grid) with zero
/// regret on the full grid. One seller (the one with the most prices) is
/// resolved by best response, so the budget counts the other sellers' product.
pub fn find_pure_equilibria(
    game: &Game,
    grids: Option<&[Vec<i64>]>,
    budget: u128,
) -> Result<Vec<EquilibriumCertificate>> {
    let m = game.items();
    let grids: Vec<Vec<i64>> = match grids {
        Some(g) => g.to_vec(),
        None => (0..m).map(|i| game.seller_points(i)).collect(),
    };
    let free = (0..m).max_by_key(|&i| (grids[i].len(), std::cmp::Reverse(i))).unwrap_or(0);
    let others: Vec<usize> = (0..m).filter(|&j| j != free).collect();
    let needed = others.iter().fold(1u128, |acc, &j| acc.saturating_mul(grids[j].len() as u128));
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let full: Vec<Vec<i64>> = (0..m).map(|i| game.seller_points(i)).collect();
    let free_full = &full[free];
    let found: Vec<Vec<i64>> = (0..needed as u64)
        .into_par_iter()
        .map(|code| -> Result<Vec<Vec<i64>>> {
            let mut prices = vec![0i64; m];
            let mut c = code;
            for &j in &others {
                let n = grids[j].len() as u64;
                prices[j] = grids[j][(c % n) as usize];
                c /= n;
            }
            let utils = game.deviation_utilities(&pure_profile(&prices), free, free_full)?;
            let br = maximizers(free_full, &utils);
            let mut hits = Vec::new();
            for q in br.maximizers {
                if !grids[free].contains(&q) {
                    continue;
                }
                prices[free] = q;
                let profile = pure_profile(&prices);
                let mut stable = true;
                for &j in &others {
                    let u = game.deviation_utilities(&profile, j, &full[j])?;
                    let cur = u[full[j].binary_search(&prices[j]).map_err(|_| {
                        Error::InvalidInput("restricted grid point is not on the price grid".into())
                    })?];
                    let best = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    if best - cur > tie_tol(best) {
                        stable = false;
                        break;
                    }
                }
                if stable {
                    hits.push(prices.clone());
                }
            }
            Ok(hits)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    found
        .into_iter()
        .map(|p| {
            let mut cert = verify_equilibrium(game, &pure_profile(&p), tie_tol(game.instance().grid().max_value))?;
            cert.method = Method::PureBruteForce;
            Ok(cert)
        })
        .collect()
}

/// Source of deviation payoffs for the learning dynamics: a payoff table when
/// it fits, else the exact evaluator on the mixed profile.
enum Backend<'a> {
    Table(NormalForm),
    Direct(&'a Game, Vec<Vec<i64>>),
}

impl Backend<'_> {
    fn grids(&self) -> &[Vec<i64>] {
        match self {
            Backend::Table(nf) => nf.grids(),
            Backend::Direct(_, g) => g,
        }
    }

    fn deviations(&self, weights: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        match self {
            Backend::Table(nf) => Ok((0..weights.len()).map(|i| nf.deviation_payoffs(i, weights)).collect()),
            Backend::Direct(game, grids) => {
                let profile = to_profile(grids, weights);
                game.deviation_utilities_each(&profile, grids)
            }
        }
    }
}

fn to_profile(grids: &[Vec<i64>], weights: &[Vec<f64>]) -> StrategyProfile {
    grids.iter().zip(weights).map(|(g, w)| MixedStrategy::from_weights(g, w)).collect()
}

fn backend<'a>(game: &'a Game, grids: Option<&[Vec<i64>]>, table_budget: u128) -> Backend<'a> {
    let grids: Vec<Vec<i64>> = match grids {
        Some(g) => g.to_vec(),
        None => (0..game.items()).map(|i| game.seller_points(i)).collect(),
    };
    // Block menus evaluate mixed profiles quickly by convolution; tables pay
    // off when every evaluation would otherwise enumerate the joint support.
    if !game.has_block_structure() {
        if let Ok(nf) = NormalForm::build(game, &grids, table_budget) {
            return Backend::Table(nf);
        }
    }
    Backend::Direct(game, grids)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsOptions {
    pub max_iters: usize,
    pub tol: f64,
    /// Largest payoff table the dynamics may build.
    pub table_budget: u128,
}

impl Default for DynamicsOptions {
    fn default() -> Self {
        DynamicsOptions { max_iters: 300, tol: DEFAULT_TOL, table_budget: 200_000 }
    }
}

/// Simultaneous fictitious play from a seeded random pure start. Returns the
/// best-verified of the empirical mixture, the last best-response profile and
/// the empirical mixture with rare prices trimmed.
pub fn fictitious_play(
    game: &Game,
    grids: Option<&[Vec<i64>]>,
    seed: u64,
    opts: &DynamicsOptions,
) -> Result<EquilibriumCertificate> {
    let be = backend(game, grids, opts.table_budget);
    let grids = be.grids().to_vec();
    let m = grids.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: Vec<Vec<f64>> = grids.iter().map(|g| vec![0.0; g.len()]).collect();
    let mut last: Vec<usize> = grids.iter().map(|g| rng.gen_range(0..g.len())).collect();
    for i in 0..m {
        counts[i][last[i]] += 1.0;
    }
    let pure_weights = |idx: &[usize]| -> Vec<Vec<f64>> {
        grids
            .iter()
            .zip(idx)
            .map(|(g, &k)| {
                let mut w = vec![0.0; g.len()];
                w[k] = 1.0;
                w
            })
            .collect()
    };
    let mut iters = 0;
    let mut stopped_early = false;
    while iters < opts.max_iters {
        iters += 1;
        let total = iters as f64;
        let weights: Vec<Vec<f64>> = counts.iter().map(|c| c.iter().map(|x| x / total).collect()).collect();
        let devs = be.deviations(&weights)?;
        last = devs.iter().map(|d| highest_argmax(d)).collect();
        for i in 0..m {
            counts[i][last[i]] += 1.0;
        }
        if iters % 10 == 0 {
            let devs = be.deviations(&pure_weights(&last))?;
            let fixed = (0..m).all(|i| {
                let best = devs[i].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                best - devs[i][last[i]] <= tie_tol(best)
            });
            if fixed {
                stopped_early = true;
                break;
            }
        }
    }
    let total: Vec<f64> = counts.iter().map(|c| c.iter().sum()).collect();
    let empirical: Vec<Vec<f64>> = counts.iter().zip(&total).map(|(c, t)| c.iter().map(|x| x / t).collect()).collect();
    let trimmed: Vec<Vec<f64>> = empirical
        .iter()
        .map(|w| {
            let top = w.iter().copied().fold(0.0, f64::max);
            w.iter().map(|&x| if x >= 0.05 * top { x } else { 0.0 }).collect()
        })
        .collect();
    let mut best: Option<EquilibriumCertificate> = None;
    let mut candidates = vec![("last best-response profile", pure_weights(&last))];
    if !stopped_early {
        candidates.push(("empirical mixture", empirical));
        candidates.push(("trimmed empirical mixture", trimmed));
    }
    for (label, w) in candidates {
        let mut cert = verify_equilibrium(game, &to_profile(&grids, &w), opts.tol)?;
        cert.notes.push(format!("candidate: {label}"));
        if best.as_ref().map_or(true, |b| cert.epsilon < b.epsilon) {
            best = Some(cert);
        }
    }
    let mut cert = best.expect("at least one candidate");
    cert.method = Method::FictitiousPlay;
    cert.seed = Some(seed);
    cert.notes.push(format!("{iters} iterations{}", if stopped_early { ", pure fixed point reached" } else { "" }));
    Ok(cert)
}

/// Round-robin (Gauss-Seidel) best-response dynamics over pure prices from a
/// seeded random start; stops at a fixed point, a repeated profile, or the
/// iteration cap.
pub fn iterated_best_response(
    game: &Game,
    grids: Option<&[Vec<i64>]>,
    seed: u64,
    opts: &DynamicsOptions,
) -> Result<EquilibriumCertificate> {
    let m = game.items();
    let grids: Vec<Vec<i64>> = match grids {
        Some(g) => g.to_vec(),
        None => (0..m).map(|i| game.seller_points(i)).collect(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut prices: Vec<i64> = grids.iter().map(|g| g[rng.gen_range(0..g.len())]).collect();
    let mut seen: HashSet<Vec<i64>> = HashSet::new();
    let mut note = format!("iteration cap {} reached", opts.max_iters);
    for round in 1..=opts.max_iters {
        let mut changed = false;
        for i in 0..m {
            let utils = game.deviation_utilities(&pure_profile(&prices), i, &grids[i])?;
            let cur = grids[i].iter().position(|&q| q == prices[i]).expect("price on grid");
            let best = utils.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if best - utils[cur] > tie_tol(best) {
                prices[i] = grids[i][highest_argmax(&utils)];
                changed = true;
            }
        }
        if !changed {
            note = format!("fixed point after {round} rounds");
            break;
        }
        if !seen.insert(prices.clone()) {
            note = format!("cycle detected after {round} rounds");
            break;
        }
    }
    let mut cert = verify_equilibrium(game, &pure_profile(&prices), opts.tol)?;
    cert.method = Method::IteratedBR;
    cert.seed = Some(seed);
    cert.notes.push(note);
    Ok(cert)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub seeds: Vec<u64>,
    pub dynamics: DynamicsOptions,
    pub dominance_budget: u128,
    pub pure_budget: u128,
    pub support_max: usize,
    pub support_budget: u128,
    pub iterated_best_response: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: DEFAULT_TOL,
            seeds: vec![1, 2, 3, 4, 5],
            dynamics: DynamicsOptions::default(),
            dominance_budget: 2_000_000,
            pure_budget: 10_000_000,
            support_max: 3,
            support_budget: 200_000,
            iterated_best_response: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub dominance: Option<DominanceReport>,
    pub pure_equilibria: usize,
    /// Every certificate produced (certified or not).
    pub certificates: Vec<EquilibriumCertificate>,
    /// Distinct certified profiles.
    pub equilibria: Vec<EquilibriumCertificate>,
    pub min_revenue: Option<f64>,
    pub max_revenue: Option<f64>,
    pub budget_exceeded: bool,
    pub notes: Vec<String>,
}

/// Work counts saturate at `u128::MAX`; print those as a magnitude.
fn count_text(n: u128) -> String {
    if n == u128::MAX {
        "more than 1e38".into()
    } else {
        n.to_string()
    }
}

pub const MIN_OVER_FOUND_NOTE: &str = "minimum revenue is taken over equilibria found by the search \
     (pure enumeration, support enumeration, learning dynamics), not over all equilibria";

/// Dominance, pure enumeration, two-seller support enumeration and seeded
/// learning dynamics; certificates are deduplicated by profile.
pub fn solve(game: &Game, opts: &SolveOptions) -> Result<SolveReport> {
    let m = game.items();
    let mut notes = vec![MIN_OVER_FOUND_NOTE.to_string()];
    let mut budget_exceeded = false;
    let dominance = match iterated_dominance(game, tie_tol(game.instance().grid().max_value), opts.dominance_budget) {
        Ok(d) => {
            if d.is_singleton() {
                notes.push("iterated strict dominance leaves one price per seller: the grid equilibrium is unique".into());
            }
            Some(d)
        }
        Err(Error::BudgetExceeded { needed, budget }) => {
            notes.push(format!("dominance skipped: {} pure profiles exceed the budget {budget}", count_text(needed)));
            None
        }
        Err(e) => return Err(e),
    };
    let reduced = dominance.as_ref().map(|d| d.grids.clone());
    let mut certificates = Vec::new();
    let mut pure_equilibria = 0;
    match find_pure_equilibria(game, reduced.as_deref(), opts.pure_budget) {
        Ok(found) => {
            pure_equilibria = found.len();
            certificates.extend(found);
        }
        Err(Error::BudgetExceeded { needed, budget }) => {
            budget_exceeded = true;
            notes.push(format!("pure enumeration skipped: {} profiles exceed the budget {budget}", count_text(needed)));
        }
        Err(e) => return Err(e),
    }
    if m == 2 {
        let grids = reduced.clone().unwrap_or_else(|| (0..2).map(|i| game.seller_points(i)).collect());
        if let Ok(nf) = NormalForm::build(game, &grids, opts.dominance_budget) {
            match support_enumeration(&nf, opts.support_max, opts.tol, opts.support_budget) {
                Ok(profiles) => {
                    for p in profiles {
                        let mut cert = verify_equilibrium(game, &p, opts.tol)?;
                        if !cert.profile.iter().all(|s| s.is_pure()) {
                            cert.method = Method::SupportEnumeration;
                            certificates.push(cert);
                        }
                    }
                }
                Err(Error::BudgetExceeded { .. }) => {
                    notes.push("support enumeration skipped: too many support pairs".into())
                }
                Err(e) => return Err(e),
            }
        }
    }
    let dyn_certs: Vec<EquilibriumCertificate> = opts
        .seeds
        .par_iter()
        .map(|&seed| -> Result<Vec<EquilibriumCertificate>> {
            let mut out = vec![fictitious_play(game, reduced.as_deref(), seed, &opts.dynamics)?];
            if opts.iterated_best_response {
                out.push(iterated_best_response(game, reduced.as_deref(), seed, &opts.dynamics)?);
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    certificates.extend(dyn_certs);
    let mut equilibria: Vec<EquilibriumCertificate> = Vec::new();
    for c in &certificates {
        if c.is_certified(opts.tol) && !equilibria.iter().any(|e| e.profile == c.profile) {
            equilibria.push(c.clone());
        }
    }
    let revs = equilibria.iter().map(|c| c.principal_revenue);
    let min_revenue = revs.clone().reduce(f64::min);
    let max_revenue = revs.reduce(f64::max);
    Ok(SolveReport { dominance, pure_equilibria, certificates, equilibria, min_revenue, max_revenue, budget_exceeded, notes })
}

/// One independent sub-game per partition block.
#[derive(Debug, Clone)]
pub struct SubGame {
    pub items: Vec<usize>,
    pub game: Game,
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub blocks: Vec<SubGame>,
    /// Items the menu does not offer; their sellers are monopolists.
    pub uncovered: Vec<usize>,
}

pub fn partition_decompose(game: &Game) -> Result<Decomposition> {
    let blocks: Vec<_> = match game.menu().kind() {
        MenuKind::GrandBundle(p) => vec![(crate::menu::ItemSet::full(game.items()), *p)],
        MenuKind::Partition(b) => b.clone(),
        MenuKind::Explicit(_) => return Err(Error::InvalidInput("decomposition needs a partition menu".into())),
    };
    let mut covered = crate::menu::ItemSet::EMPTY;
    let mut subs = Vec::with_capacity(blocks.len());
    for (set, price) in blocks {
        covered = covered.union(set);
        let items: Vec<usize> = set.items().collect();
        let inst = game.instance().restrict(&items)?;
        let sub = Game::new(inst, Menu::grand_bundle(items.len(), price)?)?;
        subs.push(SubGame { items, game: sub });
    }
    let uncovered = (0..game.items()).filter(|&i| !covered.contains(i)).collect();
    Ok(Decomposition { blocks: subs, uncovered })
}

/// Concatenates block profiles into a whole-game profile; uncovered sellers
/// post their highest revenue-maximizing grid price.
pub fn compose_profiles(game: &Game, dec: &Decomposition, block_profiles: &[StrategyProfile]) -> Result<StrategyProfile> {
    if block_profiles.len() != dec.blocks.len() {
        return Err(Error::InvalidInput("one profile per block is required".into()));
    }
    let mut out: Vec<Option<MixedStrategy>> = vec![None; game.items()];
    for (sub, prof) in dec.blocks.iter().zip(block_profiles) {
        if prof.len() != sub.items.len() {
            return Err(Error::InvalidInput("block profile size does not match the block".into()));
        }
        for (&i, s) in sub.items.iter().zip(prof) {
            out[i] = Some(s.clone());
        }
    }
    for &i in &dec.uncovered {
        let pts = game.seller_points(i);
        let utils: Vec<f64> = pts.iter().map(|&q| game.item_revenue(i, q)).collect();
        out[i] = Some(MixedStrategy::pure(pts[highest_argmax(&utils)]));
    }
    Ok(out.into_iter().map(|s| s.expect("every item is covered or uncovered")).collect())
}
