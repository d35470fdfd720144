//! Acceptance run: one PASS/FAIL line per criterion, every tolerance pinned
//! below. Runs as a plain binary (`harness = false`) so the lines are always
//! printed; exits non-zero when any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use bundleduel_core::bench::{bundle_price_formula, BOUND_SLACK as WELFARE_SLACK, main_theorem_scope, truncated_sigma, truncated_welfare};
use bundleduel_core::counterexample::{build_counterexample, grand_bundle_sweep, log_spaced, PriceBand};
use bundleduel_core::dist::DiscreteDistribution;
use bundleduel_core::game::Game;
use bundleduel_core::grid::ValueGrid;
use bundleduel_core::instance::MarketInstance;
use bundleduel_core::menu::{ItemSet, Menu};
use bundleduel_core::normal_form::iterated_dominance;
use bundleduel_core::solver::{
    compose_profiles, find_pure_equilibria, partition_decompose, solve, verify_equilibrium, SolveOptions,
};
use bundleduel_core::strategy::pure_profile;
use bundleduel_core::suites::{
    exhaustive_structure_all, run_lemma_suite, run_suite, EQ3_TOL, LEMMA_KS, LEMMA_TOL, REGRET_TOL, STRUCTURE_POINTS,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Regret tolerance (1e-9), lemma slack (1e-12) and the factorized/enumerated
// utility gap (1e-12) are pinned in the suites module; the welfare slack
// (1e-9) in the bench module.
/// Closed-form constants against an independent recomputation.
const PLUG_IN_TOL: f64 = 1e-12;
/// Revenue that must equal a product of exact inputs, relative to its size:
/// a few units in the last place of an f64.
const EXACT_REL: f64 = 4.0 * f64::EPSILON;
const SEED: u64 = 20240601;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn crit1() -> Outcome {
    let rep = run_suite("thm3", SEED, 200).expect("known suite");
    outcome(
        rep.passed,
        format!(
            "200 random markets, {} certified equilibria, all within truncated welfare + {WELFARE_SLACK:e}{}",
            rep.checks,
            rep.failure.map(|f| format!("; failure: {f}")).unwrap_or_default()
        ),
    )
}

fn crit2() -> Outcome {
    let grid = ValueGrid::with_default_step(100.0).unwrap();
    let step = grid.step;
    let d = DiscreteDistribution::binary(grid, 100.0, 0.1).unwrap();
    let inst = MarketInstance::new(vec![d.clone(), d]).unwrap();
    let game = Game::new(inst, Menu::grand_bundle(2, 100.0 + step).unwrap()).unwrap();
    let r = grid.ticks(100.0).unwrap();
    let dom = iterated_dominance(&game, 0.0, 2_000_000).unwrap();
    let dom_ok = dom.grids == vec![vec![r], vec![r]];
    let pure = find_pure_equilibria(&game, None, 10_000_000).unwrap();
    let pure_ok = pure.len() == 1 && pure[0].profile == pure_profile(&[r, r]) && pure[0].epsilon == 0.0;
    let rev = pure.first().map_or(f64::NAN, |c| c.principal_revenue);
    let oracle = (100.0 + step) * 0.1 * 0.1;
    let rev_ok = (rev - oracle).abs() <= EXACT_REL * oracle && rev >= 1.0;
    outcome(
        dom_ok && pure_ok && rev_ok,
        format!(
            "step {step}: dominance leaves {:?} ticks after {} rounds, {} pure equilibria, revenue {rev} vs (100+step)*0.01 = {oracle}",
            dom.grids, dom.rounds, pure.len()
        ),
    )
}

fn crit3() -> Outcome {
    let (inst, spec) = build_counterexample(3, 2, 1.0).unwrap();
    let opts = SolveOptions { tol: REGRET_TOL, ..SolveOptions::default() };
    let mut ok = spec.identity_holds();
    let mut notes = Vec::new();

    // Pair bundles: solve each block, compose, check the whole game.
    let game = Game::new(inst.clone(), spec.menu().unwrap()).unwrap();
    let dec = partition_decompose(&game).unwrap();
    let mut block_profiles = Vec::new();
    let mut block_total = 0.0;
    for (b, sub) in dec.blocks.iter().enumerate() {
        let rep = solve(&sub.game, &opts).unwrap();
        let oracle = (spec.h[b] + spec.grid_step) / (spec.x_denominators[b] as f64).powi(2);
        let min = rep.min_revenue.unwrap_or(f64::NAN);
        ok &= min >= 1.0 && rep.equilibria.iter().all(|e| (e.principal_revenue - oracle).abs() <= EXACT_REL * oracle);
        notes.push(format!("pair {} revenue {min} (oracle {oracle})", b + 1));
        block_total += min;
        block_profiles.push(rep.equilibria.first().map(|e| e.profile.clone()).unwrap_or_default());
    }
    match compose_profiles(&game, &dec, &block_profiles) {
        Ok(profile) => {
            let cert = verify_equilibrium(&game, &profile, REGRET_TOL).unwrap();
            ok &= cert.is_certified(REGRET_TOL)
                && cert.principal_revenue >= 2.0
                && (cert.principal_revenue - block_total).abs() <= 1e-12 * block_total;
            notes.push(format!("composed revenue {} (epsilon {})", cert.principal_revenue, cert.epsilon));
        }
        Err(e) => {
            ok = false;
            notes.push(format!("composition failed: {e}"));
        }
    }

    // Grand bundle: 120 log-spaced prices up to 3 H_2, plus prices at and
    // beyond twice the total of the high values.
    let top = 3.0 * spec.h[1];
    let total_high: f64 = 2.0 * spec.h.iter().sum::<f64>();
    let mut prices = log_spaced(1.0, top, 120);
    prices.extend([2.0 * total_high, 4.0 * total_high]);
    let rows = grand_bundle_sweep(&inst, &spec, &prices, &opts).unwrap();
    let low_cap = 3.0 * (spec.k as f64).powi(2);
    let mut worst = [0.0f64; 3];
    for row in &rows {
        let max = row.max_rev.unwrap_or(f64::INFINITY);
        let band = match row.band {
            PriceBand::Low => 0,
            PriceBand::Mid => 1,
            PriceBand::High => 2,
        };
        worst[band] = worst[band].max(max);
        let row_ok = row.n_equilibria > 0
            && match row.band {
                PriceBand::Low => max <= row.price.min(low_cap) + 1e-9,
                PriceBand::Mid => max <= 36.0 + 1e-9,
                PriceBand::High => max == 0.0,
            }
            && (row.price < total_high || max == 0.0);
        if !row_ok {
            notes.push(format!("price {} fails: {row:?}", row.price));
        }
        ok &= row_ok;
    }
    notes.push(format!(
        "{} prices; max revenue {:.4} below 3H_1, {:.4} in [3H_1, 3H_2), {} from 3H_2",
        rows.len(),
        worst[0],
        worst[1],
        worst[2]
    ));
    outcome(ok, notes.join("; "))
}

fn crit4() -> Outcome {
    let rep = run_suite("berry_esseen", SEED, 100).expect("known suite");
    outcome(
        rep.passed,
        format!(
            "100 sums of 5..=40 random summands, {} within the 0.5606 bound{}",
            rep.checks,
            rep.failure.map(|f| format!("; failure: {f}")).unwrap_or_default()
        ),
    )
}

fn crit5() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (j, &k) in LEMMA_KS.iter().enumerate() {
        let rep = run_lemma_suite(k, SEED + j as u64, 500).expect("valid K");
        ok &= rep.passed;
        parts.push(format!("K={k}: {} checks over 500 draws", rep.checks));
        if let Some(f) = rep.failure {
            parts.push(format!("failure: {f}"));
        }
    }
    outcome(ok, format!("{} (slack tolerance {LEMMA_TOL:e})", parts.join(", ")))
}

fn crit6() -> Outcome {
    let rep = run_suite("eq3", SEED, 100).expect("known suite");
    outcome(
        rep.passed,
        format!(
            "100 triples, {} utilities agree within {EQ3_TOL:e}{}",
            rep.checks,
            rep.failure.map(|f| format!("; failure: {f}")).unwrap_or_default()
        ),
    )
}

/// Grand bundles at every half tick, every partition with a spread of block
/// prices, and seeded random explicit menus, for one to three items.
fn structure_menus() -> Vec<Menu> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut menus = Vec::new();
    for m in 1..=3usize {
        let top = 2 * m as i64 * (STRUCTURE_POINTS - 1);
        for h in 0..=top {
            menus.push(Menu::grand_bundle(m, h as f64 / 2.0).unwrap());
        }
        for code in 0..(m + 1).pow(m as u32) {
            let labels: Vec<usize> = (0..m).map(|i| code / (m + 1).pow(i as u32) % (m + 1)).collect();
            for _ in 0..3 {
                let blocks: Vec<(ItemSet, f64)> = (0..m)
                    .filter_map(|b| {
                        let set = (0..m).filter(|&i| labels[i] == b).fold(ItemSet::EMPTY, ItemSet::insert);
                        (!set.is_empty()).then(|| (set, rng.gen_range(0..=2 * set.len() as i64 * 5) as f64 / 2.0))
                    })
                    .collect();
                menus.push(Menu::partition(m, blocks).unwrap());
            }
        }
        for _ in 0..60 {
            let entries = (0..rng.gen_range(1..=4))
                .map(|_| (ItemSet(rng.gen_range(1..1u64 << m)), rng.gen_range(0..=top) as f64 / 2.0))
                .collect();
            menus.push(Menu::explicit(m, entries).unwrap());
        }
    }
    menus
}

fn crit7() -> Outcome {
    let menus = structure_menus();
    let rep = exhaustive_structure_all(&menus, STRUCTURE_POINTS);
    outcome(
        rep.violations == 0,
        format!(
            "{} menus, {} price points per item: {} threshold sweeps, {} value pairs, {} violations{}",
            rep.menus,
            STRUCTURE_POINTS,
            rep.threshold_sweeps,
            rep.value_pairs,
            rep.violations,
            if rep.examples.is_empty() { String::new() } else { format!(" e.g. {}", rep.examples.join(" | ")) }
        ),
    )
}

fn crit8() -> Outcome {
    let rep = run_suite("supremum", SEED, 200).expect("known suite");
    outcome(
        rep.passed,
        format!(
            "{} non-equilibrium profiles within the supremum bound{}",
            rep.checks,
            rep.failure.map(|f| format!("; failure: {f}")).unwrap_or_default()
        ),
    )
}

fn crit9() -> Outcome {
    let m = 50usize;
    let grid = ValueGrid::new(0.01, 1.0).unwrap();
    let d = DiscreteDistribution::binary(grid, 1.0, 0.5).unwrap();
    let inst = MarketInstance::new(vec![d; m]).unwrap();
    let bench = bundle_price_formula(&inst).unwrap();

    // Plug-in: r = 1, F(r) = Pr[v < 1] = 1/2, rem = 1/2 for every item so
    // K = 1; Rev(x) = x / 2 on (0, 1] so every slope down from r is 1/2.
    let k = 1.0;
    let c = 1.0 - 0.5f64.powi(4) / (8.0 * k + 1.0);
    let lambda = 0.5;
    let sigma = (m as f64 * 0.25).sqrt();
    let price = m as f64 * 0.5 * c + sigma / 4.0;
    let required = 12.0 / (lambda * (1.0 - c)).powf(1.5);
    let m_needed = (required / 0.5f64).powi(2);
    let close = |a: f64, b: f64| (a - b).abs() <= PLUG_IN_TOL * (1.0 + b.abs());
    let formula_ok = close(bench.k, k)
        && close(bench.c, c)
        && close(bench.lambda_min, lambda)
        && close(bench.sigma_truncated, sigma)
        && close(truncated_sigma(&inst), sigma)
        && close(bench.bundle_price, price)
        && close(bench.hypotheses.required_sigma, required)
        && close(bench.truncated_welfare, truncated_welfare(&inst))
        && !bench.hypothesis_ok;

    let rep = main_theorem_scope(&inst, &SolveOptions { tol: REGRET_TOL, ..SolveOptions::default() }).unwrap();
    let dyn_ok = rep.dynamics_runs == 10 && rep.converged_runs == rep.dynamics_runs && rep.branches_classified;
    let classes: Vec<String> = rep
        .equilibria
        .iter()
        .map(|e| {
            format!(
                "revenue {:.4}, sale prob {:.4}, {}, ratio {:.4}",
                e.principal_revenue,
                e.sale_probability,
                if e.contained { "supports in [C r, r]" } else { "sale branch" },
                e.ratio_to_welfare
            )
        })
        .collect();
    outcome(
        formula_ok && dyn_ok,
        format!(
            "constants match plug-in (K={k}, C={c:.7}, lambda={lambda}, sigma={sigma:.4}, p={price:.6}); \
             hypotheses need sigma >= {required:.4e}, i.e. m >= {m_needed:.2e}, so the guarantee itself is out of reach \
             and only reported; {}/{} dynamics runs converged; {} [{}] (empirical, not asserted)",
            rep.converged_runs,
            rep.dynamics_runs,
            rep.equilibria.len(),
            classes.join("; ")
        ),
    )
}

fn crit10() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    let grid = ValueGrid::new(0.05, 1.0).unwrap();
    let d = DiscreteDistribution::new(grid, &[(0.25, 0.25), (0.5, 0.25), (1.0, 0.5)]).unwrap();
    let single = MarketInstance::new(vec![d]).unwrap();
    let opts = SolveOptions { tol: REGRET_TOL, ..SolveOptions::default() };
    let mut certified = 0;
    for p in [0.05, 0.1, 0.3, 0.5, 0.55, 0.75, 1.0, 1.5] {
        let game = Game::new(single.clone(), Menu::grand_bundle(1, p).unwrap()).unwrap();
        let rep = solve(&game, &opts).unwrap();
        certified += rep.equilibria.len();
        let row_ok = !rep.equilibria.is_empty() && rep.equilibria.iter().all(|e| e.principal_revenue == 0.0);
        if !row_ok {
            notes.push(format!("m=1 price {p}: revenues {:?}", rep.equilibria.iter().map(|e| e.principal_revenue).collect::<Vec<_>>()));
        }
        ok &= row_ok;
    }
    notes.push(format!("m=1: {certified} certified equilibria over 8 prices, all revenue 0"));

    let pm = DiscreteDistribution::point_mass(grid, 1.0).unwrap();
    let three = MarketInstance::new(vec![pm; 3]).unwrap();
    let p = 1.5;
    let game = Game::new(three, Menu::grand_bundle(3, p).unwrap()).unwrap();
    let q = grid.ticks(p / 3.0).unwrap();
    let cert = verify_equilibrium(&game, &pure_profile(&[q, q, q]), REGRET_TOL).unwrap();
    let coord_ok = cert.epsilon == 0.0 && cert.principal_revenue == 0.0;
    let rep = solve(&game, &opts).unwrap();
    // Only existence is claimed: sellers who all post 1 are stuck too, since no
    // single seller can undercut the bundle alone.
    let zero = rep.equilibria.iter().filter(|e| e.principal_revenue == 0.0).count();
    ok &= coord_ok;
    notes.push(format!(
        "m=3 point masses at 1, p={p}: (p/3, p/3, p/3) has epsilon {} and revenue {}; search found {} equilibria, {zero} with revenue 0 (max {:?})",
        cert.epsilon,
        cert.principal_revenue,
        rep.equilibria.len(),
        rep.max_revenue
    ));
    outcome(ok, notes.join("; "))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("truncated-welfare upper bound", crit1),
        ("single-pair dominance and revenue", crit2),
        ("pair bundles against the grand bundle", crit3),
        ("Berry-Esseen inequality", crit4),
        ("variance and remainder lemmas", crit5),
        ("factorized seller utility", crit6),
        ("monotonicity and threshold structure", crit7),
        ("supremum bound off equilibrium", crit8),
        ("grand-bundle formula at m=50", crit9),
        ("Bertrand cases", crit10),
    ];
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let n = n + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} {verdict} [{name}] ({:.1}s) {}", start.elapsed().as_secs_f64(), o.detail);
        failed += usize::from(!o.passed);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
