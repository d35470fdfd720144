//! Seeded randomized property suites. Each suite draws cases from a proptest
//! strategy, checks one family of invariants, and shrinks the first failure.

use std::sync::atomic::{AtomicUsize, Ordering};

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestError, TestRng, TestRunner};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::{k_ratio, supremum_bound, upper_bound_check};
use crate::berry_esseen::{berry_esseen_delta, kolmogorov_distance};
use crate::buyer::{
    best_utility_brute_force, buyer_choice, choose, grand_bundle_sale, threshold_structure, utility_ticks,
};
use crate::dist::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::game::Game;
use crate::grid::ValueGrid;
use crate::instance::MarketInstance;
use crate::lemmas::{const_variance_bound, f_at_myerson, high_mean_var, mean_to_var, rem_bound, LemmaCheck};
use crate::menu::{ItemSet, Menu, MenuKind};
use crate::solver::{solve, verify_equilibrium, SolveOptions, SCHEMA_VERSION};
use crate::strategy::MixedStrategy;

pub const SUITES: [&str; 7] = ["buyer", "monotone", "eq3", "supremum", "lemmas", "berry_esseen", "thm3"];

/// Value step of the random market instances.
pub const INSTANCE_STEP: f64 = 0.05;
/// Largest value of the random market instances, in ticks (1.0 in money).
pub const INSTANCE_MAX_TICKS: i64 = 20;
/// Factorized and enumerated utilities must agree to this absolute tolerance.
pub const EQ3_TOL: f64 = 1e-12;
/// Lemma slacks may dip this far below zero.
pub const LEMMA_TOL: f64 = 1e-12;
pub const REGRET_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema: u32,
    pub suite: String,
    pub seed: u64,
    pub trials: u32,
    pub passed: bool,
    /// Individual inequality or identity evaluations performed.
    pub checks: usize,
    /// Shrunk failing case and the reason it failed.
    pub failure: Option<String>,
}

/// Runs `suite` for `trials` cases from the given seed.
pub fn run_suite(suite: &str, seed: u64, trials: u32) -> Result<SuiteReport> {
    let counter = AtomicUsize::new(0);
    let mut runner = runner(seed, trials);
    let failure = match suite {
        "buyer" => failure_text(runner.run(&arb_buyer_case(), |c| buyer_case(&c, &counter))),
        "monotone" => failure_text(runner.run(&arb_monotone_case(), |c| monotone_case(&c, &counter))),
        "eq3" => failure_text(runner.run(&arb_market_case(true, false), |c| eq3_case(&c, &counter))),
        "supremum" => failure_text(runner.run(&arb_market_case(false, true), |c| supremum_case(&c, &counter))),
        "lemmas" => failure_text(runner.run(&arb_lemma_case(LEMMA_KS.to_vec()), |c| lemma_case(&c, &counter))),
        "berry_esseen" => failure_text(runner.run(&arb_berry_esseen_case(), |c| berry_esseen_case(&c, &counter))),
        "thm3" => failure_text(runner.run(&arb_market_case(false, false), |c| thm3_case(&c, &counter))),
        other => {
            return Err(Error::InvalidInput(format!("unknown suite {other:?}; expected one of {}", SUITES.join(", "))))
        }
    };
    Ok(SuiteReport {
        schema: SCHEMA_VERSION,
        suite: suite.to_string(),
        seed,
        trials,
        passed: failure.is_none(),
        checks: counter.into_inner(),
        failure,
    })
}

fn failure_text<T: std::fmt::Debug>(r: std::result::Result<(), TestError<T>>) -> Option<String> {
    r.err().map(|e| match e {
        TestError::Fail(reason, case) => format!("{reason}; minimal case: {case:?}"),
        TestError::Abort(reason) => format!("aborted: {reason}"),
    })
}

fn runner(seed: u64, trials: u32) -> TestRunner {
    let mut config = Config::with_cases(trials);
    config.failure_persistence = None;
    config.max_global_rejects = trials.saturating_mul(50).max(1024);
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &bytes))
}

fn fail(e: Error) -> TestCaseError {
    TestCaseError::fail(e.to_string())
}

/// Atoms as `(tick, integer weight)`; weights are normalized on build.
#[derive(Debug, Clone)]
pub struct DistSpec(pub Vec<(i64, u32)>);

impl DistSpec {
    pub fn build(&self, grid: ValueGrid) -> Result<DiscreteDistribution> {
        let total: u32 = self.0.iter().map(|a| a.1).sum();
        DiscreteDistribution::from_ticks(grid, self.0.iter().map(|&(t, w)| (t, w as f64 / total as f64)).collect())
    }
}

pub fn arb_dist(max_ticks: i64, atoms: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = DistSpec> {
    prop::collection::vec((0..=max_ticks, 1u32..=9), atoms)
        .prop_filter("needs a positive value", |a| a.iter().any(|x| x.0 > 0))
        .prop_map(DistSpec)
}

#[derive(Debug, Clone)]
pub struct InstanceSpec {
    pub dists: Vec<DistSpec>,
}

impl InstanceSpec {
    pub fn build(&self) -> Result<MarketInstance> {
        let grid = ValueGrid::new(INSTANCE_STEP, INSTANCE_MAX_TICKS as f64 * INSTANCE_STEP)?;
        MarketInstance::new(self.dists.iter().map(|d| d.build(grid)).collect::<Result<_>>()?)
    }
}

pub fn arb_instance(items: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = InstanceSpec> {
    prop::collection::vec(arb_dist(INSTANCE_MAX_TICKS, 1..=3), items).prop_map(|dists| InstanceSpec { dists })
}

/// Menu prices are in half ticks so that off-grid prices are exercised too.
#[derive(Debug, Clone)]
pub enum MenuSpec {
    Grand(i64),
    /// Block label per item (`items` means not offered) and a price per label.
    Partition { labels: Vec<usize>, prices: Vec<i64> },
    Explicit(Vec<(u64, i64)>),
}

impl MenuSpec {
    pub fn build(&self, items: usize, step: f64) -> Result<Menu> {
        let money = |h: i64| h as f64 * step / 2.0;
        let kind = match self {
            MenuSpec::Grand(h) => MenuKind::GrandBundle(money(*h)),
            MenuSpec::Partition { labels, prices } => MenuKind::Partition(
                (0..items)
                    .filter_map(|b| {
                        let set = (0..items).filter(|&i| labels[i] == b).fold(ItemSet::EMPTY, ItemSet::insert);
                        (!set.is_empty()).then(|| (set, money(prices[b])))
                    })
                    .collect(),
            ),
            MenuSpec::Explicit(e) => MenuKind::Explicit(e.iter().map(|&(s, h)| (ItemSet(s), money(h))).collect()),
        };
        Menu::new(items, kind)
    }

    pub fn is_block(&self) -> bool {
        !matches!(self, MenuSpec::Explicit(_))
    }
}

pub fn arb_menu(items: usize, max_half_ticks: i64, explicit: bool) -> BoxedStrategy<MenuSpec> {
    let grand = (0..=max_half_ticks).prop_map(MenuSpec::Grand);
    let partition = (
        prop::collection::vec(0..=items, items),
        prop::collection::vec(0..=max_half_ticks, items),
    )
        .prop_map(|(labels, prices)| MenuSpec::Partition { labels, prices });
    if !explicit {
        return prop_oneof![grand, partition].boxed();
    }
    let entries = prop::collection::vec((1u64..(1u64 << items), 0..=max_half_ticks), 1..=4).prop_map(MenuSpec::Explicit);
    prop_oneof![grand, partition, entries].boxed()
}

/// Up to three price atoms per seller, each at most the seller's cap.
#[derive(Debug, Clone)]
pub struct ProfileSpec(pub Vec<Vec<(i64, u32)>>);

impl ProfileSpec {
    pub fn build(&self) -> Vec<MixedStrategy> {
        self.0
            .iter()
            .map(|s| {
                let pts: Vec<i64> = s.iter().map(|a| a.0).collect();
                let ws: Vec<f64> = s.iter().map(|a| a.1 as f64).collect();
                let raw = MixedStrategy::from_weights(&pts, &ws);
                MixedStrategy::new(raw.atoms().to_vec()).expect("normalized weights")
            })
            .collect()
    }
}

pub fn arb_profile(caps: Vec<i64>) -> impl Strategy<Value = ProfileSpec> {
    caps.into_iter()
        .map(|c| prop::collection::vec((0..=c, 1u32..=9), 1..=3))
        .collect::<Vec<_>>()
        .prop_map(ProfileSpec)
}

#[derive(Debug, Clone)]
pub struct MarketCase {
    pub instance: InstanceSpec,
    pub menu: MenuSpec,
    pub profile: ProfileSpec,
}

impl MarketCase {
    pub fn game(&self) -> Result<Game> {
        let inst = self.instance.build()?;
        let menu = self.menu.build(inst.items(), INSTANCE_STEP)?;
        Game::new(inst, menu)
    }
}

/// Random instance with `m` in {2, 3}, a random menu and a random profile.
/// Profiles stay on the price grid unless `wide_profiles`, in which case any
/// value tick may be a price.
pub fn arb_market_case(block_menus_only: bool, wide_profiles: bool) -> impl Strategy<Value = MarketCase> {
    arb_instance(2..=3).prop_flat_map(move |spec| {
        let inst = spec.build().expect("generated instances are valid");
        let m = inst.items();
        let caps = if wide_profiles { vec![INSTANCE_MAX_TICKS; m] } else { inst.myerson_ticks() };
        let menu = arb_menu(m, 2 * m as i64 * INSTANCE_MAX_TICKS, !block_menus_only);
        (Just(spec), menu, arb_profile(caps)).prop_map(|(instance, menu, profile)| MarketCase { instance, menu, profile })
    })
}

#[derive(Debug, Clone)]
pub struct BuyerCase {
    pub menu: MenuSpec,
    pub q: Vec<i64>,
    pub v: Vec<i64>,
}

pub fn arb_buyer_case() -> impl Strategy<Value = BuyerCase> {
    (1usize..=4).prop_flat_map(|m| {
        let max = INSTANCE_MAX_TICKS;
        (
            arb_menu(m, 2 * m as i64 * max, true),
            prop::collection::vec(0..=2 * max, m),
            prop::collection::vec(0..=max, m),
        )
            .prop_map(|(menu, q, v)| BuyerCase { menu, q, v })
    })
}

fn buyer_case(c: &BuyerCase, counter: &AtomicUsize) -> std::result::Result<(), TestCaseError> {
    let m = c.q.len();
    let grid = ValueGrid::new(INSTANCE_STEP, 2.0 * INSTANCE_MAX_TICKS as f64 * INSTANCE_STEP).map_err(fail)?;
    let menu = c.menu.build(m, INSTANCE_STEP).map_err(fail)?;
    let ticks = menu.in_ticks(&grid);
    let choice = choose(&ticks, &c.q, &c.v);
    let got = utility_ticks(&ticks, choice, &c.q, &c.v);
    let best = best_utility_brute_force(&ticks, &c.q, &c.v);
    prop_assert!((got - best).abs() <= 1e-9, "decision utility {got} vs brute force {best}");

    let q: Vec<f64> = c.q.iter().map(|&t| grid.money(t)).collect();
    let v: Vec<f64> = c.v.iter().map(|&t| grid.money(t)).collect();
    let o = buyer_choice(&menu, &grid, &q, &v).map_err(fail)?;
    let got_value: f64 = o.principal_set.union(o.item_seller_set).items().map(|i| v[i]).sum();
    let total = o.buyer_utility + o.principal_revenue + o.seller_revenues.iter().sum::<f64>();
    prop_assert!((total - got_value).abs() <= 1e-9, "accounting {total} vs value {got_value}");
    if let MenuKind::GrandBundle(p) = menu.kind() {
        let sale = grand_bundle_sale(&grid, *p, &q, &v).map_err(fail)?;
        prop_assert_eq!(sale, o.principal_set == ItemSet::full(m));
    }
    counter.fetch_add(3, Ordering::Relaxed);
    Ok(())
}

/// Points per coordinate in the monotonicity checks (prices and values).
pub const STRUCTURE_POINTS: i64 = 6;

#[derive(Debug, Clone)]
pub struct MonotoneCase {
    pub menu: MenuSpec,
    pub q: Vec<i64>,
    pub v: Vec<i64>,
    pub v2: Vec<i64>,
    pub item: usize,
}

pub fn arb_monotone_case() -> impl Strategy<Value = MonotoneCase> {
    (1usize..=3).prop_flat_map(|m| {
        let pts = STRUCTURE_POINTS - 1;
        (
            arb_menu(m, 2 * m as i64 * pts, true),
            prop::collection::vec(0..=pts, m),
            prop::collection::vec(0..=pts, m),
            prop::collection::vec(0..=pts, m),
            0..m,
        )
            .prop_map(|(menu, q, v, v2, item)| MonotoneCase { menu, q, v, v2, item })
    })
}

fn monotone_case(c: &MonotoneCase, counter: &AtomicUsize) -> std::result::Result<(), TestCaseError> {
    let m = c.q.len();
    let ticks = c.menu.build(m, 1.0).map_err(fail)?;
    let violations = structure_violations(&ticks, &c.q, &c.v, c.item, STRUCTURE_POINTS);
    prop_assert!(violations.is_empty(), "{}", violations.join("; "));
    let s = (0..m).filter(|&i| c.v[i] != c.v2[i]).fold(ItemSet::EMPTY, ItemSet::insert);
    prop_assert!(value_change_holds(&ticks, &c.q, &c.v, &c.v2, s), "value-change claim fails on {s}");
    counter.fetch_add(3, Ordering::Relaxed);
    Ok(())
}

/// Indicator monotonicity and threshold shape for seller `i` as its price
/// sweeps `0..points`, everything else fixed.
fn structure_violations(ticks: &Menu, q: &[i64], v: &[i64], i: usize, points: i64) -> Vec<String> {
    let mut out = Vec::new();
    let mut q = q.to_vec();
    let mut prev = true;
    for k in 0..points {
        q[i] = k;
        let sells = choose(ticks, &q, v).sellers.contains(i);
        if sells && !prev {
            out.push(format!("seller {} indicator rises at q={k} (q={q:?}, v={v:?}, menu={ticks})", i + 1));
        }
        prev = sells;
    }
    if let Err(e) = threshold_structure(ticks, &q, v, i, 1, points - 1) {
        out.push(format!("{e} (q={q:?}, v={v:?}, menu={ticks})"));
    }
    out
}

fn value_change_holds(ticks: &Menu, q: &[i64], v: &[i64], v2: &[i64], s: ItemSet) -> bool {
    let t1 = choose(ticks, q, v).principal;
    let t2 = choose(ticks, q, v2).principal;
    t1.intersect(s) != t2.intersect(s) || t1 == t2
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub menus: usize,
    pub threshold_sweeps: usize,
    pub value_pairs: usize,
    pub violations: usize,
    /// First few violations, verbatim.
    pub examples: Vec<String>,
}

/// Exhaustive structure check of one tick-denominated menu: every price
/// vector and value vector in `0..points` per item, every seller sweep, and
/// every pair of value vectors (with `S` the set where they differ).
pub fn exhaustive_structure(ticks: &Menu, points: i64) -> StructureReport {
    let m = ticks.items();
    let vectors: Vec<Vec<i64>> = (0..points.pow(m as u32))
        .map(|mut code| {
            (0..m)
                .map(|_| {
                    let x = code % points;
                    code /= points;
                    x
                })
                .collect()
        })
        .collect();
    let mut rep = StructureReport { menus: 1, ..Default::default() };
    for q in &vectors {
        let sets: Vec<ItemSet> = vectors.iter().map(|v| choose(ticks, q, v).principal).collect();
        for (a, v) in vectors.iter().enumerate() {
            for i in 0..m {
                if q[i] == 0 {
                    rep.threshold_sweeps += 1;
                    for e in structure_violations(ticks, q, v, i, points) {
                        rep.violations += 1;
                        if rep.examples.len() < 5 {
                            rep.examples.push(e);
                        }
                    }
                }
            }
            for (b, v2) in vectors.iter().enumerate().skip(a + 1) {
                let s = (0..m).filter(|&i| v[i] != v2[i]).fold(ItemSet::EMPTY, ItemSet::insert);
                let (t1, t2) = (sets[a], sets[b]);
                rep.value_pairs += 1;
                if t1.intersect(s) == t2.intersect(s) && t1 != t2 {
                    rep.violations += 1;
                    if rep.examples.len() < 5 {
                        rep.examples.push(format!("value change on {s}: {t1} vs {t2} (q={q:?}, v={v:?}, v'={v2:?})"));
                    }
                }
            }
        }
    }
    rep
}

/// Runs [`exhaustive_structure`] over many menus in parallel and merges the counts.
pub fn exhaustive_structure_all(menus: &[Menu], points: i64) -> StructureReport {
    menus.par_iter().map(|m| exhaustive_structure(m, points)).reduce(StructureReport::default, |mut a, b| {
        a.menus += b.menus;
        a.threshold_sweeps += b.threshold_sweeps;
        a.value_pairs += b.value_pairs;
        a.violations += b.violations;
        a.examples.extend(b.examples);
        a.examples.truncate(5);
        a
    })
}

fn eq3_case(c: &MarketCase, counter: &AtomicUsize) -> std::result::Result<(), TestCaseError> {
    let game = c.game().map_err(fail)?;
    let profile = c.profile.build();
    for i in 0..game.items() {
        let fast = game.seller_utility(&profile, i).map_err(fail)?;
        let slow = game.seller_utility_enumerated(&profile, i).map_err(fail)?;
        prop_assert!((fast - slow).abs() <= EQ3_TOL, "seller {}: factorized {fast} vs enumerated {slow}", i + 1);
    }
    let fast = game.principal_revenue(&profile).map_err(fail)?;
    let slow = game.principal_revenue_enumerated(&profile).map_err(fail)?;
    prop_assert!((fast - slow).abs() <= EQ3_TOL, "principal: factorized {fast} vs enumerated {slow}");
    counter.fetch_add(game.items() + 1, Ordering::Relaxed);
    Ok(())
}

fn supremum_case(c: &MarketCase, counter: &AtomicUsize) -> std::result::Result<(), TestCaseError> {
    let game = c.game().map_err(fail)?;
    let profile = c.profile.build();
    let cert = verify_equilibrium(&game, &profile, REGRET_TOL).map_err(fail)?;
    prop_assume!(!cert.is_certified(REGRET_TOL), "profile happens to be an equilibrium");
    let rev = game.principal_revenue(&profile).map_err(fail)?;
    let bound = supremum_bound(game.instance(), &profile);
    prop_assert!(rev <= bound + 1e-12 * (1.0 + bound), "revenue {rev} above supremum bound {bound}");
    counter.fetch_add(1, Ordering::Relaxed);
    Ok(())
}

fn thm3_case(c: &MarketCase, counter: &AtomicUsize) -> std::result::Result<(), TestCaseError> {
    let game = c.game().map_err(fail)?;
    let opts = SolveOptions { tol: REGRET_TOL, ..SolveOptions::default() };
    let rep = solve(&game, &opts).map_err(fail)?;
    for cert in &rep.equilibria {
        let chk = upper_bound_check(game.instance(), cert, REGRET_TOL).map_err(fail)?;
        prop_assert!(chk.holds, "revenue {} above truncated welfare {}", chk.revenue, chk.bound);
    }
    counter.fetch_add(rep.equilibria.len(), Ordering::Relaxed);
    Ok(())
}

/// Grid for the lemma and Berry-Esseen draws: unit step.
fn unit_grid(max_ticks: i64) -> ValueGrid {
    ValueGrid::new(1.0, max_ticks as f64).expect("valid grid")
}

pub const LEMMA_MAX_TICKS: i64 = 20;
pub const LEMMA_KS: [i64; 3] = [1, 2, 4];

/// The lemma suite with every draw at one K-ratio.
pub fn run_lemma_suite(k: i64, seed: u64, trials: u32) -> Result<SuiteReport> {
    if k < 1 {
        return Err(Error::InvalidInput(format!("K must be at least 1, got {k}")));
    }
    let counter = AtomicUsize::new(0);
    let failure = failure_text(runner(seed, trials).run(&arb_lemma_case(vec![k]), |c| lemma_case(&c, &counter)));
    Ok(SuiteReport {
        schema: SCHEMA_VERSION,
        suite: format!("lemmas(K={k})"),
        seed,
        trials,
        passed: failure.is_none(),
        checks: counter.into_inner(),
        failure,
    })
}

#[derive(Debug, Clone)]
pub struct LemmaCase {
    pub k: i64,
    pub dist: DistSpec,
    /// Positions in per-mille of the allowed range, turned into prices on build.
    pub sandwich: Vec<(u16, u32)>,
    pub high_mean: [Vec<(u16, u32)>; 2],
}

pub fn arb_lemma_case(ks: Vec<i64>) -> impl Strategy<Value = LemmaCase> {
    let atoms = || prop::collection::vec((0u16..=1000, 1u32..=9), 1..=3);
    (
        prop::sample::select(ks),
        arb_dist(LEMMA_MAX_TICKS, 2..=5),
        atoms(),
        atoms(),
        atoms(),
    )
        .prop_map(|(k, dist, sandwich, a, b)| LemmaCase { k, dist, sandwich, high_mean: [a, b] })
}

fn strategy_in(lo: i64, hi: i64, atoms: &[(u16, u32)]) -> MixedStrategy {
    let pts: Vec<i64> = atoms.iter().map(|&(u, _)| lo + (hi - lo) * u as i64 / 1000).collect();
    let ws: Vec<f64> = atoms.iter().map(|a| a.1 as f64).collect();
    MixedStrategy::new(MixedStrategy::from_weights(&pts, &ws).atoms().to_vec()).expect("normalized weights")
}

/// The lemma pair instance: the drawn distribution and a copy scaled by `K`,
/// whose K-ratio is `K` whenever `F(r) > 0`.
pub fn lemma_instance(dist: &DiscreteDistribution, k: i64) -> Result<MarketInstance> {
    MarketInstance::new(vec![dist.clone(), dist.scaled(k)?])
}

fn lemma_case(c: &LemmaCase, counter: &AtomicUsize) -> std::result::Result<(), TestCaseError> {
    let d = c.dist.build(unit_grid(LEMMA_MAX_TICKS)).map_err(fail)?;
    let f = f_at_myerson(&d);
    prop_assume!(f > 0.0, "F(r) = 0 makes every lemma vacuous");
    let k = c.k as f64;
    let mut checks: Vec<LemmaCheck> = Vec::new();
    let c_const = 1.0 - f.powi(4) / (2.0 * k + 1.0);
    let c_rem = 1.0 - f.powi(4) / (8.0 * k + 1.0);
    checks.push(const_variance_bound(&d, c_const, k).map_err(fail)?);
    checks.push(rem_bound(&d, c_rem, k).map_err(fail)?);
    checks.extend(mean_to_var(&d, &strategy_in(0, d.myerson_ticks(), &c.sandwich)).map_err(fail)?);

    let inst = lemma_instance(&d, c.k).map_err(fail)?;
    let kr = k_ratio(&inst);
    let min_f = inst.dists().iter().map(f_at_myerson).fold(f64::INFINITY, f64::min);
    let c_inst = 1.0 - min_f.powi(4) / (8.0 * kr + 1.0);
    let profile: Vec<MixedStrategy> = inst
        .dists()
        .iter()
        .zip(&c.high_mean)
        .map(|(di, atoms)| {
            let r = di.myerson_ticks();
            strategy_in((c_inst * r as f64).ceil() as i64, r, atoms)
        })
        .collect();
    checks.push(high_mean_var(&inst, c_inst, &profile).map_err(fail)?);
    for chk in &checks {
        prop_assert!(chk.slack >= -LEMMA_TOL, "{:?} at K = {}: lhs {} rhs {}", chk.lemma, c.k, chk.lhs, chk.rhs);
    }
    counter.fetch_add(checks.len(), Ordering::Relaxed);
    Ok(())
}

pub const BERRY_ESSEEN_MAX_TICKS: i64 = 10;

#[derive(Debug, Clone)]
pub struct BerryEsseenCase(pub Vec<DistSpec>);

pub fn arb_berry_esseen_case() -> impl Strategy<Value = BerryEsseenCase> {
    let summand = prop::collection::vec((0..=BERRY_ESSEEN_MAX_TICKS, 1u32..=9), 2..=4)
        .prop_filter("needs two distinct values", |a| a.iter().any(|x| x.0 != a[0].0) && a.iter().any(|x| x.0 > 0))
        .prop_map(DistSpec);
    prop::collection::vec(summand, 5..=40).prop_map(BerryEsseenCase)
}

fn berry_esseen_case(c: &BerryEsseenCase, counter: &AtomicUsize) -> std::result::Result<(), TestCaseError> {
    let grid = unit_grid(BERRY_ESSEEN_MAX_TICKS);
    let ds: Vec<DiscreteDistribution> = c.0.iter().map(|s| s.build(grid)).collect::<Result<_>>().map_err(fail)?;
    let delta = berry_esseen_delta(&ds).map_err(fail)?;
    let dist = kolmogorov_distance(&ds).map_err(fail)?;
    prop_assert!(dist <= delta, "Kolmogorov distance {dist} exceeds {delta} with {} summands", ds.len());
    counter.fetch_add(1, Ordering::Relaxed);
    Ok(())
}
