//! Experiment configuration, read from a TOML file.

use std::fs;
use std::path::{Path, PathBuf};

use bundleduel_core::counterexample::{build_counterexample, log_spaced, CounterexampleSpec};
use bundleduel_core::dist::DiscreteDistribution;
use bundleduel_core::grid::ValueGrid;
use bundleduel_core::instance::MarketInstance;
use bundleduel_core::menu::Menu;
use bundleduel_core::solver::{DynamicsOptions, SolveOptions, DEFAULT_TOL};
use bundleduel_core::{bench, Error, Result};
use serde::{Deserialize, Serialize};

/// Prices per decade when a sweep gives a range instead of a list.
pub const DEFAULT_PER_DECADE: usize = 40;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: Option<InstanceConfig>,
    pub menu: Option<MenuConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    pub sweep: Option<SweepConfig>,
    pub proptest: Option<ProptestConfig>,
    pub output: Option<OutputConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceConfig {
    /// Distribution files, one per item, relative to the config file.
    Files { paths: Vec<PathBuf> },
    /// `items` i.i.d. copies of `high` with probability `prob`, else 0.
    Binary { items: usize, high: f64, prob: f64, step: Option<f64> },
    /// `items` buyers' values fixed at `value`.
    PointMass { items: usize, value: f64, step: Option<f64> },
    /// Pairs of doubly exponentially spaced binary items.
    Counterexample { k: u64, n: usize, step: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MenuConfig {
    /// Menu text such as `grand 100.1` or `partition {1,2}=9.5 {3}=2`.
    Text { text: String },
    File { path: PathBuf },
    /// The pair-bundle partition of a counterexample instance.
    PairBundles,
    /// Grand bundle at the variance-based price formula.
    Formula,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Item-seller price step, in value-grid ticks.
    pub price_step_ticks: i64,
    pub tol: f64,
    pub seeds: Vec<u64>,
    pub max_iters: usize,
    pub dominance_budget: u64,
    pub pure_budget: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolveOptions::default();
        SolverConfig {
            price_step_ticks: 1,
            tol: DEFAULT_TOL,
            seeds: d.seeds,
            max_iters: d.dynamics.max_iters,
            dominance_budget: d.dominance_budget as u64,
            pure_budget: d.pure_budget as u64,
        }
    }
}

impl SolverConfig {
    /// `seed` replaces the seed list with as many consecutive seeds starting there.
    pub fn options(&self, seed: Option<u64>) -> SolveOptions {
        let seeds = match seed {
            Some(s) => (0..self.seeds.len().max(1) as u64).map(|j| s + j).collect(),
            None => self.seeds.clone(),
        };
        SolveOptions {
            tol: self.tol,
            seeds,
            dynamics: DynamicsOptions { max_iters: self.max_iters, tol: self.tol, ..DynamicsOptions::default() },
            dominance_budget: self.dominance_budget as u128,
            pure_budget: self.pure_budget as u128,
            ..SolveOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub prices: Option<Vec<f64>>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub per_decade: Option<usize>,
}

impl SweepConfig {
    pub fn prices(&self) -> Result<Vec<f64>> {
        if let Some(p) = &self.prices {
            if p.is_empty() || p.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(Error::InvalidInput("sweep prices must be positive".into()));
            }
            return Ok(p.clone());
        }
        let (Some(lo), Some(hi)) = (self.lo, self.hi) else {
            return Err(Error::InvalidInput("sweep needs `prices` or `lo` and `hi`".into()));
        };
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::InvalidInput(format!("bad sweep range [{lo}, {hi}]")));
        }
        let per = self.per_decade.unwrap_or(DEFAULT_PER_DECADE).max(1);
        let count = ((hi / lo).log10() * per as f64).ceil() as usize + 1;
        Ok(log_spaced(lo, hi, count))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProptestConfig {
    pub suite: String,
    pub trials: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

/// A loaded config plus the directory its relative paths resolve against.
pub struct Loaded {
    pub config: ExperimentConfig,
    pub base: PathBuf,
}

pub fn load(path: Option<&Path>) -> Result<Loaded> {
    let Some(path) = path else {
        return Ok(Loaded { config: ExperimentConfig::default(), base: PathBuf::from(".") });
    };
    let text = read(path)?;
    let config: ExperimentConfig = toml::from_str(&text).map_err(|e| {
        let line = e.span().map_or(1, |s| text[..s.start].lines().count().max(1));
        Error::Parse { line, message: format!("{}: {}", path.display(), e.message()) }
    })?;
    let base = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    Ok(Loaded { config, base })
}

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))
}

/// Parses distribution files, attaching the file name to parse errors.
pub fn read_dists(paths: &[PathBuf]) -> Result<Vec<DiscreteDistribution>> {
    paths
        .iter()
        .map(|p| {
            DiscreteDistribution::parse(&read(p)?).map_err(|e| match e {
                Error::Parse { line, message } => Error::Parse { line, message: format!("{}: {message}", p.display()) },
                other => other,
            })
        })
        .collect()
}

pub struct Market {
    pub instance: MarketInstance,
    pub counterexample: Option<CounterexampleSpec>,
}

impl Loaded {
    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn market(&self) -> Result<Market> {
        let Some(cfg) = &self.config.instance else {
            return Err(Error::InvalidInput("the config has no [instance] section".into()));
        };
        let grid_for = |max: f64, step: Option<f64>| match step {
            Some(s) => ValueGrid::new(s, max),
            None => ValueGrid::with_default_step(max),
        };
        let (instance, counterexample) = match cfg {
            InstanceConfig::Files { paths } => {
                let paths: Vec<PathBuf> = paths.iter().map(|p| self.resolve(p)).collect();
                (MarketInstance::new(read_dists(&paths)?)?, None)
            }
            InstanceConfig::Binary { items, high, prob, step } => {
                let d = DiscreteDistribution::binary(grid_for(*high, *step)?, *high, *prob)?;
                (MarketInstance::new(vec![d; *items])?, None)
            }
            InstanceConfig::PointMass { items, value, step } => {
                let d = DiscreteDistribution::point_mass(grid_for(*value, *step)?, *value)?;
                (MarketInstance::new(vec![d; *items])?, None)
            }
            InstanceConfig::Counterexample { k, n, step } => {
                let (inst, spec) = build_counterexample(*k, *n, *step)?;
                (inst, Some(spec))
            }
        };
        let instance = instance.with_price_step(self.config.solver.price_step_ticks)?;
        Ok(Market { instance, counterexample })
    }

    pub fn menu(&self, market: &Market) -> Result<Menu> {
        let m = market.instance.items();
        match &self.config.menu {
            None => Err(Error::InvalidInput("the config has no [menu] section".into())),
            Some(MenuConfig::Text { text }) => Menu::parse(text, m),
            Some(MenuConfig::File { path }) => Menu::parse(&read(&self.resolve(path))?, m),
            Some(MenuConfig::PairBundles) => match &market.counterexample {
                Some(spec) => spec.menu(),
                None => Err(Error::InvalidInput("pair_bundles needs a counterexample instance".into())),
            },
            Some(MenuConfig::Formula) => {
                Menu::grand_bundle(m, bench::bundle_price_formula(&market.instance)?.bundle_price)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_config_round_trips() {
        let text = r#"
            [instance]
            kind = "binary"
            items = 2
            high = 100.0
            prob = 0.1

            [menu]
            kind = "text"
            text = "grand 100.1"

            [solver]
            seeds = [1, 2]

            [sweep]
            lo = 1.0
            hi = 100.0
        "#;
        let cfg: ExperimentConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.solver.seeds, vec![1, 2]);
        assert_eq!(cfg.solver.max_iters, 300);
        let again: ExperimentConfig = toml::from_str(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.sweep.unwrap().prices().unwrap().len(), 81);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<ExperimentConfig>("[solver]\nseedz = [1]").is_err());
    }

    #[test]
    fn seed_flag_shifts_the_seed_list() {
        let s = SolverConfig::default();
        assert_eq!(s.options(Some(10)).seeds, vec![10, 11, 12, 13, 14]);
    }
}
