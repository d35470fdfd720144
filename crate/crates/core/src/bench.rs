//! Revenue benchmarks and the bounds that hold at every item-seller
//! equilibrium, plus the grand-bundle price formula with its hypothesis check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::Game;
use crate::instance::MarketInstance;
use crate::menu::{ItemSet, Menu};
use crate::sensitivity::sensitivity_lambda;
use crate::solver::{solve, EquilibriumCertificate, SolveOptions};
use crate::strategy::MixedStrategy;

/// Slack used when comparing revenue against welfare-type bounds.
pub const BOUND_SLACK: f64 = 1e-9;

/// `sum_i E[min(v_i, r_i)]`.
pub fn truncated_welfare(instance: &MarketInstance) -> f64 {
    instance.dists().iter().map(|d| d.truncated_mean(d.myerson_price())).sum()
}

/// Standard deviation of `sum_i min(v_i, r_i)`.
pub fn truncated_sigma(instance: &MarketInstance) -> f64 {
    instance.dists().iter().map(|d| d.truncated_variance(d.myerson_price())).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub revenue: f64,
    pub bound: f64,
    pub holds: bool,
}

impl BoundCheck {
    fn new(revenue: f64, bound: f64) -> Self {
        BoundCheck { revenue, bound, holds: revenue <= bound + BOUND_SLACK }
    }
}

/// Principal revenue at a certified equilibrium against truncated welfare.
pub fn upper_bound_check(instance: &MarketInstance, cert: &EquilibriumCertificate, tol: f64) -> Result<BoundCheck> {
    if !cert.is_certified(tol) {
        return Err(Error::HypothesisNotMet(format!(
            "certificate epsilon {} exceeds the tolerance {tol}",
            cert.epsilon
        )));
    }
    Ok(BoundCheck::new(cert.principal_revenue, truncated_welfare(instance)))
}

/// `sum_i E[min(v_i, sup supp s_i)]`, a bound on principal revenue for any
/// profile.
pub fn supremum_bound(instance: &MarketInstance, profile: &[MixedStrategy]) -> f64 {
    let grid = instance.grid();
    instance.dists().iter().zip(profile).map(|(d, s)| d.truncated_mean(grid.money(s.sup()))).sum()
}

/// Revenue of an arbitrary profile against its supremum bound.
pub fn supremum_check(game: &Game, profile: &[MixedStrategy]) -> Result<BoundCheck> {
    Ok(BoundCheck::new(game.principal_revenue(profile)?, supremum_bound(game.instance(), profile)))
}

/// Revenue at a certified equilibrium against `Rev(Y) + Wel(Z)` with `Z` the
/// complement of `y`, where `Rev(Y)` is relaxed to `sum_{i in Y} E[min(v_i, r_i)]`.
/// With `truncate_z` the welfare of `Z` is truncated at `r_i` as well;
/// otherwise it is the raw expected value.
pub fn rev_plus_welfare_bound(
    instance: &MarketInstance,
    y: ItemSet,
    cert: &EquilibriumCertificate,
    truncate_z: bool,
) -> Result<BoundCheck> {
    let m = instance.items();
    if !y.is_subset(ItemSet::full(m)) {
        return Err(Error::InvalidInput("Y must be a subset of the items".into()));
    }
    let bound = (0..m)
        .map(|i| {
            let d = instance.dist(i);
            if y.contains(i) || truncate_z {
                d.truncated_mean(d.myerson_price())
            } else {
                d.mean()
            }
        })
        .sum();
    Ok(BoundCheck::new(cert.principal_revenue, bound))
}

/// Per-condition breakdown of the grand-bundle hypotheses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisFlags {
    /// Every item is `(lambda_min, C)`-price sensitive with `lambda_min > 0`.
    pub price_sensitive: bool,
    /// `sigma(V(r)) >= 12 / (lambda (1 - C))^{3/2} * max_j r_j`.
    pub variance: bool,
    pub required_sigma: f64,
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub truncated_welfare: f64,
    pub sigma_truncated: f64,
    pub k: f64,
    pub c: f64,
    pub lambda_min: f64,
    pub lambdas: Vec<f64>,
    pub myerson_prices: Vec<f64>,
    pub hypothesis_ok: bool,
    pub hypotheses: HypothesisFlags,
    pub bundle_price: f64,
}

/// `r_i - E[min(v_i, r_i)]` for each item.
pub fn rem_at_myerson(instance: &MarketInstance) -> Vec<f64> {
    instance
        .dists()
        .iter()
        .map(|d| {
            let r = d.myerson_price();
            r - d.truncated_mean(r)
        })
        .collect()
}

/// `K = max_i rem_i / min_i rem_i` (infinite when some `rem_i = 0`).
pub fn k_ratio(instance: &MarketInstance) -> f64 {
    let rem = rem_at_myerson(instance);
    let hi = rem.iter().copied().fold(0.0, f64::max);
    let lo = rem.iter().copied().fold(f64::INFINITY, f64::min);
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// `C = 1 - min_i F_i(r_i)^4 / (8K + 1)` with `F_i(r_i) = Pr[v_i < r_i]`.
pub fn c_constant(instance: &MarketInstance, k: f64) -> f64 {
    let min_f = instance
        .dists()
        .iter()
        .map(|d| d.cdf_strict(d.myerson_price()))
        .fold(f64::INFINITY, f64::min);
    1.0 - min_f.powi(4) / (8.0 * k + 1.0)
}

/// Constants, hypothesis flags and the grand-bundle price
/// `sum_i E[min(v_i, C r_i)] + sigma(V(r)) / 4`.
pub fn bundle_price_formula(instance: &MarketInstance) -> Result<BenchmarkReport> {
    let r = instance.myerson_prices();
    if r.iter().any(|&x| x <= 0.0) {
        return Err(Error::InvalidInput("every Myerson price must be positive".into()));
    }
    let k = k_ratio(instance);
    let c = c_constant(instance, k);
    let sigma = truncated_sigma(instance);
    let lambdas: Vec<f64> = instance.dists().iter().map(|d| sensitivity_lambda(d, c).lambda).collect();
    let lambda_min = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let max_r = r.iter().copied().fold(0.0, f64::max);
    let mut reasons = Vec::new();
    let price_sensitive = lambda_min > 0.0;
    if !price_sensitive {
        reasons.push(format!("lambda={lambda_min}"));
    }
    if !k.is_finite() {
        reasons.push("K undefined: some item has r = E[min(v, r)]".into());
    }
    let required_sigma = if price_sensitive && c < 1.0 {
        12.0 / (lambda_min * (1.0 - c)).powf(1.5) * max_r
    } else {
        f64::INFINITY
    };
    let variance = sigma >= required_sigma;
    if !variance {
        reasons.push(format!("sigma={sigma} below required {required_sigma}"));
    }
    let bundle_price = instance.dists().iter().zip(&r).map(|(d, &ri)| d.truncated_mean(c * ri)).sum::<f64>() + sigma / 4.0;
    Ok(BenchmarkReport {
        truncated_welfare: truncated_welfare(instance),
        sigma_truncated: sigma,
        k,
        c,
        lambda_min,
        lambdas,
        myerson_prices: r,
        hypothesis_ok: price_sensitive && variance && k.is_finite(),
        hypotheses: HypothesisFlags { price_sensitive, variance, required_sigma, reasons },
        bundle_price,
    })
}

/// Which case of the grand-bundle argument an equilibrium falls in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchClassification {
    pub principal_revenue: f64,
    pub sale_probability: f64,
    /// The bundle sells with probability at least 1/2.
    pub sale_branch: bool,
    /// Every support lies in `[C r_i, r_i]`.
    pub contained: bool,
    pub ratio_to_welfare: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainTheoremReport {
    pub benchmark: BenchmarkReport,
    pub equilibria: Vec<BranchClassification>,
    pub dynamics_runs: usize,
    pub converged_runs: usize,
    /// Every found equilibrium is contained or in the sale branch.
    pub branches_classified: bool,
    pub min_ratio: Option<f64>,
    pub notes: Vec<String>,
}

/// Empirical stand-in for the grand-bundle guarantee at moderate `m`: price
/// the bundle by the formula, search for equilibria and classify each one.
pub fn main_theorem_scope(instance: &MarketInstance, opts: &SolveOptions) -> Result<MainTheoremReport> {
    let benchmark = bundle_price_formula(instance)?;
    let m = instance.items();
    let game = Game::new(instance.clone(), Menu::grand_bundle(m, benchmark.bundle_price)?)?;
    let report = solve(&game, opts)?;
    let grid = instance.grid();
    let lo: Vec<f64> = benchmark.myerson_prices.iter().map(|r| benchmark.c * r).collect();
    let equilibria: Vec<BranchClassification> = report
        .equilibria
        .iter()
        .map(|e| {
            let sale_probability = e.principal_revenue / benchmark.bundle_price;
            let contained = e.profile.iter().enumerate().all(|(i, s)| {
                s.atoms().iter().all(|&(q, _)| {
                    let x = grid.money(q);
                    x >= lo[i] - 1e-9 * (1.0 + lo[i]) && x <= benchmark.myerson_prices[i] + 1e-9
                })
            });
            BranchClassification {
                principal_revenue: e.principal_revenue,
                sale_probability,
                sale_branch: sale_probability >= 0.5,
                contained,
                ratio_to_welfare: e.principal_revenue / benchmark.truncated_welfare,
                epsilon: e.epsilon,
            }
        })
        .collect();
    let dynamics_runs = report.certificates.iter().filter(|c| c.seed.is_some()).count();
    let converged_runs =
        report.certificates.iter().filter(|c| c.seed.is_some() && c.is_certified(opts.tol)).count();
    let mut notes = report.notes.clone();
    if !benchmark.hypothesis_ok {
        notes.push(format!(
            "hypotheses do not hold ({}); ratios are empirical",
            benchmark.hypotheses.reasons.join("; ")
        ));
    }
    Ok(MainTheoremReport {
        branches_classified: !equilibria.is_empty() && equilibria.iter().all(|e| e.contained || e.sale_branch),
        min_ratio: equilibria.iter().map(|e| e.ratio_to_welfare).reduce(f64::min),
        benchmark,
        equilibria,
        dynamics_runs,
        converged_runs,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::DiscreteDistribution;
    use crate::grid::ValueGrid;
    use crate::strategy::pure_profile;

    fn coin_instance(m: usize) -> MarketInstance {
        let g = ValueGrid::new(0.01, 1.0).unwrap();
        let d = DiscreteDistribution::binary(g, 1.0, 0.5).unwrap();
        MarketInstance::new(vec![d; m]).unwrap()
    }

    #[test]
    fn welfare_of_binary_pair() {
        let g = ValueGrid::new(1.0, 100.0).unwrap();
        let d = DiscreteDistribution::binary(g, 100.0, 0.1).unwrap();
        let inst = MarketInstance::new(vec![d.clone(), d]).unwrap();
        assert!((truncated_welfare(&inst) - 20.0).abs() < 1e-12);
    }

    #[test]
    fn coin_formula_constants() {
        let rep = bundle_price_formula(&coin_instance(4)).unwrap();
        assert_eq!(rep.k, 1.0);
        assert!((rep.c - (1.0 - 0.0625 / 9.0)).abs() < 1e-15);
        assert!((rep.bundle_price - (4.0 * 0.5 * rep.c + 0.125 * 2.0)).abs() < 1e-12);
        assert!(!rep.hypothesis_ok);
    }

    #[test]
    fn equal_revenue_has_no_sensitivity() {
        let g = ValueGrid::new(1.0, 4.0).unwrap();
        let d = DiscreteDistribution::new(g, &[(1.0, 0.5), (2.0, 0.25), (4.0, 0.25)]).unwrap();
        let inst = MarketInstance::new(vec![d.clone(), d]).unwrap();
        let rep = bundle_price_formula(&inst).unwrap();
        assert_eq!(rep.lambda_min, 0.0);
        assert!(!rep.hypothesis_ok);
        assert!(rep.hypotheses.reasons.iter().any(|r| r == "lambda=0"));
    }

    #[test]
    fn supremum_bound_corner_cases() {
        let inst = coin_instance(2);
        assert_eq!(supremum_bound(&inst, &pure_profile(&[0, 0])), 0.0);
        assert!((supremum_bound(&inst, &pure_profile(&[100, 100])) - truncated_welfare(&inst)).abs() < 1e-12);
    }
}
