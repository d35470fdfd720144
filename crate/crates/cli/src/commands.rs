//! The four subcommands. Each returns its output files and a status; nothing
//! touches the filesystem until the caller writes the outputs.

use std::path::PathBuf;

use bundleduel_core::bench::{bundle_price_formula, truncated_welfare, upper_bound_check, BenchmarkReport, BoundCheck};
use bundleduel_core::counterexample::grand_bundle_sweep;
use bundleduel_core::game::Game;
use bundleduel_core::instance::MarketInstance;
use bundleduel_core::lemmas::{f_at_myerson, lemma_suite, LemmaReport};
use bundleduel_core::menu::{Menu, MenuKind};
use bundleduel_core::sensitivity::sensitivity_lambda;
use bundleduel_core::solver::{
    compose_profiles, partition_decompose, solve, verify_equilibrium, EquilibriumCertificate, SolveOptions,
    SolveReport, SCHEMA_VERSION,
};
use bundleduel_core::suites::{run_suite, SuiteReport};
use bundleduel_core::{Error, Result};
use serde::Serialize;

use crate::config::{read_dists, Loaded};
use crate::output::{csv_bytes, CsvRow, Outputs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    CheckFailed,
    BudgetExceeded,
}

pub struct Run {
    pub outputs: Outputs,
    pub status: Status,
    pub summary: Vec<String>,
}

#[derive(Serialize)]
struct ItemReport {
    item: usize,
    myerson_price: f64,
    revenue: f64,
    f_at_myerson: f64,
    truncated_mean: f64,
    truncated_sd: f64,
    lambda: f64,
}

#[derive(Serialize)]
struct AnalyzeReport {
    schema: u32,
    items: Vec<ItemReport>,
    benchmark: BenchmarkReport,
    lemmas: LemmaReport,
}

/// Lemma slack tolerance for reports.
const LEMMA_TOL: f64 = 1e-12;

pub fn analyze(cfg: &Loaded, files: &[PathBuf]) -> Result<Run> {
    let instance = if files.is_empty() {
        cfg.market()?.instance
    } else {
        MarketInstance::new(read_dists(files)?)?
    };
    let benchmark = bundle_price_formula(&instance)?;
    let items = instance
        .dists()
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let r = d.myerson_price();
            ItemReport {
                item: i + 1,
                myerson_price: r,
                revenue: d.revenue_at(r),
                f_at_myerson: f_at_myerson(d),
                truncated_mean: d.truncated_mean(r),
                truncated_sd: d.truncated_variance(r).sqrt(),
                lambda: sensitivity_lambda(d, benchmark.c).lambda,
            }
        })
        .collect::<Vec<_>>();
    let lemmas = lemma_suite(&instance, benchmark.c, benchmark.k, &[], LEMMA_TOL);
    let mut summary: Vec<String> = items
        .iter()
        .map(|it| {
            format!(
                "item {}: r={} Rev(r)={} mu(r)={} sigma(r)={} lambda={}",
                it.item, it.myerson_price, it.revenue, it.truncated_mean, it.truncated_sd, it.lambda
            )
        })
        .collect();
    summary.push(format!(
        "K={} C={} sigma(V(r))={} bundle price={} hypothesis_ok={}",
        benchmark.k, benchmark.c, benchmark.sigma_truncated, benchmark.bundle_price, benchmark.hypothesis_ok
    ));
    for r in &benchmark.hypotheses.reasons {
        summary.push(format!("hypothesis fails: {r}"));
    }
    let status = if lemmas.passed { Status::Ok } else { Status::CheckFailed };
    let mut outputs = Outputs::default();
    outputs.json("analysis.json", &AnalyzeReport { schema: SCHEMA_VERSION, items, benchmark, lemmas });
    Ok(Run { outputs, status, summary })
}

#[derive(Serialize)]
struct BlockSummary {
    items: Vec<usize>,
    equilibria: usize,
    min_revenue: Option<f64>,
    max_revenue: Option<f64>,
}

#[derive(Serialize)]
struct SolveSummary {
    schema: u32,
    menu: String,
    truncated_welfare: f64,
    equilibria: usize,
    min_revenue: Option<f64>,
    max_revenue: Option<f64>,
    dominance_unique: bool,
    welfare_checks: Vec<BoundCheck>,
    welfare_bound_holds: bool,
    blocks: Vec<BlockSummary>,
    budget_exceeded: bool,
    notes: Vec<String>,
}

pub fn solve_cmd(cfg: &Loaded, seed: Option<u64>) -> Result<Run> {
    let market = cfg.market()?;
    let menu = cfg.menu(&market)?;
    let opts = cfg.config.solver.options(seed);
    let game = Game::new(market.instance.clone(), menu.clone())?;
    let mut outputs = Outputs::default();
    let mut blocks = Vec::new();
    let (equilibria, dominance_unique, budget_exceeded, mut notes) = match menu.kind() {
        MenuKind::Partition(_) => solve_partition(&game, &opts, &mut outputs, &mut blocks)?,
        _ => {
            let rep = solve(&game, &opts)?;
            let unique = rep.dominance.as_ref().is_some_and(|d| d.is_singleton());
            (rep.equilibria, unique, rep.budget_exceeded, rep.notes)
        }
    };
    let mut checks = Vec::new();
    for (j, cert) in equilibria.iter().enumerate() {
        outputs.json(format!("certificates/equilibrium-{:03}.json", j + 1), &cert.to_document(&game));
        checks.push(upper_bound_check(&market.instance, cert, opts.tol)?);
    }
    let holds = checks.iter().all(|c| c.holds);
    if equilibria.is_empty() {
        notes.push("no certified equilibrium was found".into());
    }
    let revs = equilibria.iter().map(|c| c.principal_revenue);
    let summary = SolveSummary {
        schema: SCHEMA_VERSION,
        menu: menu.to_text(),
        truncated_welfare: truncated_welfare(&market.instance),
        equilibria: equilibria.len(),
        min_revenue: revs.clone().reduce(f64::min),
        max_revenue: revs.reduce(f64::max),
        dominance_unique,
        welfare_bound_holds: holds,
        welfare_checks: checks,
        blocks,
        budget_exceeded,
        notes,
    };
    let show = |r: Option<f64>| r.map_or_else(|| "n/a".to_string(), |v| v.to_string());
    let mut lines = vec![format!(
        "{} certified equilibria; principal revenue min {} max {}; truncated welfare {}",
        summary.equilibria,
        show(summary.min_revenue),
        show(summary.max_revenue),
        summary.truncated_welfare
    )];
    lines.extend(summary.notes.iter().cloned());
    if !holds {
        lines.push("RED FLAG: an equilibrium exceeds the truncated-welfare bound".into());
    }
    outputs.json("summary.json", &summary);
    let status = if !holds {
        Status::CheckFailed
    } else if budget_exceeded {
        Status::BudgetExceeded
    } else {
        Status::Ok
    };
    Ok(Run { outputs, status, summary: lines })
}

type Solved = (Vec<EquilibriumCertificate>, bool, bool, Vec<String>);

/// Solves each block as its own grand-bundle game, writes the block
/// certificates, and composes the first equilibrium of every block into a
/// whole-game profile that is verified on the full game.
fn solve_partition(
    game: &Game,
    opts: &SolveOptions,
    outputs: &mut Outputs,
    blocks: &mut Vec<BlockSummary>,
) -> Result<Solved> {
    let dec = partition_decompose(game)?;
    let mut firsts = Vec::new();
    let mut budget = false;
    let mut unique = true;
    let mut notes = Vec::new();
    for (b, sub) in dec.blocks.iter().enumerate() {
        let rep: SolveReport = solve(&sub.game, opts)?;
        budget |= rep.budget_exceeded;
        unique &= rep.dominance.as_ref().is_some_and(|d| d.is_singleton());
        for (j, cert) in rep.equilibria.iter().enumerate() {
            outputs.json(format!("blocks/block-{}-equilibrium-{:03}.json", b + 1, j + 1), &cert.to_document(&sub.game));
        }
        blocks.push(BlockSummary {
            items: sub.items.iter().map(|i| i + 1).collect(),
            equilibria: rep.equilibria.len(),
            min_revenue: rep.min_revenue,
            max_revenue: rep.max_revenue,
        });
        for n in rep.notes {
            if !notes.contains(&n) {
                notes.push(n);
            }
        }
        firsts.push(rep.equilibria.into_iter().next().map(|c| c.profile));
    }
    let mut equilibria = Vec::new();
    if let Some(profiles) = firsts.into_iter().collect::<Option<Vec<_>>>() {
        let profile = compose_profiles(game, &dec, &profiles)?;
        let mut cert = verify_equilibrium(game, &profile, opts.tol)?;
        cert.notes.push("composed from per-block equilibria and verified on the whole game".into());
        if cert.is_certified(opts.tol) {
            equilibria.push(cert);
        } else {
            notes.push(format!("composed profile failed whole-game verification (epsilon {})", cert.epsilon));
        }
    } else {
        notes.push("some block has no certified equilibrium; nothing to compose".into());
    }
    Ok((equilibria, unique, budget, notes))
}

#[derive(Serialize)]
struct PlotPoint {
    x: f64,
    y_min: Option<f64>,
    y_max: Option<f64>,
}

#[derive(Serialize)]
struct PlotData {
    schema: u32,
    x_label: &'static str,
    y_label: &'static str,
    points: Vec<PlotPoint>,
}

#[derive(Serialize)]
struct PlainRow {
    price: f64,
    min_rev: Option<f64>,
    max_rev: Option<f64>,
    n_equilibria: usize,
    budget_exceeded: bool,
}

#[derive(Serialize)]
struct SweepDocument<T: Serialize> {
    schema: u32,
    rows: Vec<T>,
    notes: Vec<String>,
}

pub fn sweep(cfg: &Loaded, seed: Option<u64>) -> Result<Run> {
    let market = cfg.market()?;
    let Some(sweep_cfg) = &cfg.config.sweep else {
        return Err(Error::InvalidInput("the config has no [sweep] section".into()));
    };
    let prices = sweep_cfg.prices()?;
    let opts = cfg.config.solver.options(seed);
    let notes = vec![bundleduel_core::solver::MIN_OVER_FOUND_NOTE.to_string()];
    let mut outputs = Outputs::default();
    let (csv, status, mut summary) = if let Some(spec) = &market.counterexample {
        let rows = grand_bundle_sweep(&market.instance, spec, &prices, &opts)?;
        let csv: Vec<CsvRow> = rows
            .iter()
            .map(|r| CsvRow {
                price: r.price,
                min_rev: r.min_rev,
                max_rev: r.max_rev,
                n_equilibria: r.n_equilibria,
                bound_36_flag: r.bound_36_flag,
            })
            .collect();
        let bad = rows.iter().filter(|r| !r.band_bound_ok).count();
        let budget = rows.iter().any(|r| r.budget_exceeded);
        let status = if bad > 0 {
            Status::CheckFailed
        } else if budget {
            Status::BudgetExceeded
        } else {
            Status::Ok
        };
        let summary = vec![format!("{} prices, {bad} above their band bound", rows.len())];
        outputs.json("sweep.json", &SweepDocument { schema: SCHEMA_VERSION, rows, notes: notes.clone() });
        (csv, status, summary)
    } else {
        let m = market.instance.items();
        let mut rows = Vec::with_capacity(prices.len());
        for &p in &prices {
            let game = Game::new(market.instance.clone(), Menu::grand_bundle(m, p)?)?;
            let rep = solve(&game, &opts)?;
            rows.push(PlainRow {
                price: p,
                min_rev: rep.min_revenue,
                max_rev: rep.max_revenue,
                n_equilibria: rep.equilibria.len(),
                budget_exceeded: rep.budget_exceeded,
            });
        }
        let csv = rows
            .iter()
            .map(|r| CsvRow {
                price: r.price,
                min_rev: r.min_rev,
                max_rev: r.max_rev,
                n_equilibria: r.n_equilibria,
                bound_36_flag: r.max_rev.map_or(true, |x| x <= 36.0 + 1e-9),
            })
            .collect();
        let status = if rows.iter().any(|r| r.budget_exceeded) { Status::BudgetExceeded } else { Status::Ok };
        let summary = vec![format!("{} prices", rows.len())];
        outputs.json("sweep.json", &SweepDocument { schema: SCHEMA_VERSION, rows, notes: notes.clone() });
        (csv, status, summary)
    };
    let plot = PlotData {
        schema: SCHEMA_VERSION,
        x_label: "grand bundle price",
        y_label: "principal revenue over found equilibria",
        points: csv.iter().map(|r| PlotPoint { x: r.price, y_min: r.min_rev, y_max: r.max_rev }).collect(),
    };
    outputs.raw("sweep.csv", csv_bytes(&csv));
    outputs.json("plot.json", &plot);
    let top = csv.iter().filter_map(|r| r.max_rev).fold(0.0, f64::max);
    summary.push(format!("largest revenue found {top}"));
    Ok(Run { outputs, status, summary })
}

/// Default number of cases per suite.
pub const DEFAULT_TRIALS: u32 = 100;

pub fn proptest(cfg: &Loaded, suite: Option<&str>, trials: Option<u32>, seed: Option<u64>) -> Result<Run> {
    let from_cfg = cfg.config.proptest.as_ref();
    let Some(suite) = suite.or(from_cfg.map(|p| p.suite.as_str())) else {
        return Err(Error::InvalidInput("name a suite".into()));
    };
    let trials = trials.or(from_cfg.and_then(|p| p.trials)).unwrap_or(DEFAULT_TRIALS);
    let seed = seed.unwrap_or(0);
    let rep: SuiteReport = run_suite(suite, seed, trials)?;
    let mut summary = vec![format!(
        "suite {suite}, seed {seed}, {trials} trials: {} ({} checks)",
        if rep.passed { "PASS" } else { "FAIL" },
        rep.checks
    )];
    if let Some(f) = &rep.failure {
        summary.push(f.clone());
        summary.push(format!("reproduce with: bundleduel proptest {suite} --trials {trials} --seed {seed}"));
    }
    let status = if rep.passed { Status::Ok } else { Status::CheckFailed };
    let mut outputs = Outputs::default();
    outputs.json(format!("proptest-{suite}.json"), &rep);
    Ok(Run { outputs, status, summary })
}
