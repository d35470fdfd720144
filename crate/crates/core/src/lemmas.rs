//! Executable forms of the variance and mean inequalities behind the
//! grand-bundle guarantee. Each check evaluates both sides exactly and
//! reports `slack = lhs - rhs` for an inequality `lhs >= rhs`.

use serde::{Deserialize, Serialize};

use crate::bench::k_ratio;
use crate::dist::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::instance::MarketInstance;
use crate::solver::EquilibriumCertificate;
use crate::strategy::MixedStrategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Lemma {
    /// `sigma^2(C r) >= (1 - 1/K) sigma^2(r)` for `C >= 1 - F(r)^4 / (2K + 1)`.
    ConstVarianceBound,
    /// `E_q[sigma^2(r) - sigma^2(q)] >= 2 rem(inf s) (mu(r) - mu(s))`.
    MeanToVarUpper,
    /// `2 rem(r) (mu(r) - mu(s)) >= sigma^2(r) - sigma^2(s)`.
    MeanToVarLower,
    /// `rem(C r) >= 4/5 rem(r)` for `C >= 1 - F(r)^4 / (8K + 1)`.
    RemBound,
    /// `sum sigma_i^2(s_i) >= 1/2 sum sigma_i^2(r_i)` when `mu(s) >= sum mu_i(C r_i)`.
    HighMeanVar,
    /// Supports within `[C r_i, r_i]` when the bundle fails to sell w.p. >= 1/2.
    ContainedResponse,
}

pub const ALL_LEMMAS: [Lemma; 6] = [
    Lemma::ConstVarianceBound,
    Lemma::MeanToVarUpper,
    Lemma::MeanToVarLower,
    Lemma::RemBound,
    Lemma::HighMeanVar,
    Lemma::ContainedResponse,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub lemma: Lemma,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl LemmaCheck {
    fn new(lemma: Lemma, lhs: f64, rhs: f64) -> Self {
        LemmaCheck { lemma, lhs, rhs, slack: lhs - rhs }
    }
}

/// `F(r) = Pr[v < r]` at the Myerson price.
pub fn f_at_myerson(d: &DiscreteDistribution) -> f64 {
    d.cdf_strict(d.myerson_price())
}

/// `t - E[min(v, t)]`.
pub fn rem(d: &DiscreteDistribution, t: f64) -> f64 {
    t - d.truncated_mean(t)
}

/// Mean and variance of `min(v, q)` with `q ~ s` independent of `v`.
pub fn mixed_moments(d: &DiscreteDistribution, s: &MixedStrategy) -> (f64, f64) {
    let grid = d.grid();
    let (mut m1, mut m2) = (0.0, 0.0);
    for &(q, w) in s.atoms() {
        let t = grid.money(q);
        let mu = d.truncated_mean(t);
        m1 += w * mu;
        m2 += w * (d.truncated_variance(t) + mu * mu);
    }
    (m1, (m2 - m1 * m1).max(0.0))
}

fn c_floor(d: &DiscreteDistribution, denom: f64) -> f64 {
    1.0 - f_at_myerson(d).powi(4) / denom
}

pub fn const_variance_bound(d: &DiscreteDistribution, c: f64, k: f64) -> Result<LemmaCheck> {
    if k < 1.0 || c < c_floor(d, 2.0 * k + 1.0) || c > 1.0 {
        return Err(Error::HypothesisNotMet(format!("C = {c} is below 1 - F(r)^4 / (2K + 1) at K = {k}")));
    }
    let r = d.myerson_price();
    Ok(LemmaCheck::new(Lemma::ConstVarianceBound, d.truncated_variance(c * r), (1.0 - 1.0 / k) * d.truncated_variance(r)))
}

pub fn rem_bound(d: &DiscreteDistribution, c: f64, k: f64) -> Result<LemmaCheck> {
    if k < 1.0 || c < c_floor(d, 8.0 * k + 1.0) || c > 1.0 {
        return Err(Error::HypothesisNotMet(format!("C = {c} is below 1 - F(r)^4 / (8K + 1) at K = {k}")));
    }
    let r = d.myerson_price();
    Ok(LemmaCheck::new(Lemma::RemBound, rem(d, c * r), 0.8 * rem(d, r)))
}

/// Both sides of the mean/variance sandwich, in multiplied form so that a
/// zero `rem` is harmless.
pub fn mean_to_var(d: &DiscreteDistribution, s: &MixedStrategy) -> Result<[LemmaCheck; 2]> {
    let r_ticks = d.myerson_ticks();
    if s.sup() > r_ticks {
        return Err(Error::HypothesisNotMet("strategy support exceeds the Myerson price".into()));
    }
    let grid = d.grid();
    let r = d.myerson_price();
    let var_r = d.truncated_variance(r);
    let (mu_s, var_s) = mixed_moments(d, s);
    let dmu = d.truncated_mean(r) - mu_s;
    let expected_drop: f64 = s.atoms().iter().map(|&(q, w)| w * (var_r - d.truncated_variance(grid.money(q)))).sum();
    let upper = LemmaCheck::new(Lemma::MeanToVarUpper, expected_drop, 2.0 * rem(d, grid.money(s.inf())) * dmu);
    let lower = LemmaCheck::new(Lemma::MeanToVarLower, 2.0 * rem(d, r) * dmu, var_r - var_s);
    Ok([upper, lower])
}

/// `c` must satisfy `c >= 1 - min_i F_i(r_i)^4 / (8K + 1)` for the instance's
/// K-ratio, and the profile must reach the mean threshold.
pub fn high_mean_var(instance: &MarketInstance, c: f64, profile: &[MixedStrategy]) -> Result<LemmaCheck> {
    let k = k_ratio(instance);
    let min_f = instance.dists().iter().map(f_at_myerson).fold(f64::INFINITY, f64::min);
    if !k.is_finite() || c < 1.0 - min_f.powi(4) / (8.0 * k + 1.0) || c > 1.0 {
        return Err(Error::HypothesisNotMet(format!("C = {c} is below the threshold for K = {k}")));
    }
    if profile.len() != instance.items() {
        return Err(Error::InvalidInput("one strategy per item is required".into()));
    }
    let mut mu_s = 0.0;
    let mut var_s = 0.0;
    let mut mu_c = 0.0;
    let mut var_r = 0.0;
    for (d, s) in instance.dists().iter().zip(profile) {
        if s.sup() > d.myerson_ticks() {
            return Err(Error::HypothesisNotMet("strategy support exceeds the Myerson price".into()));
        }
        let (m, v) = mixed_moments(d, s);
        mu_s += m;
        var_s += v;
        let r = d.myerson_price();
        mu_c += d.truncated_mean(c * r);
        var_r += d.truncated_variance(r);
    }
    if mu_s < mu_c {
        return Err(Error::HypothesisNotMet(format!("mean {mu_s} is below the threshold {mu_c}")));
    }
    Ok(LemmaCheck::new(Lemma::HighMeanVar, var_s, 0.5 * var_r))
}

/// Applies only when the bundle at `bundle_price` sells with probability at
/// most 1/2 under the certified profile; slack is the smallest distance of a
/// support point inside `[C r_i, r_i]` (negative when outside).
pub fn contained_response(
    instance: &MarketInstance,
    c: f64,
    bundle_price: f64,
    cert: &EquilibriumCertificate,
) -> Result<LemmaCheck> {
    let sale = cert.principal_revenue / bundle_price;
    if sale > 0.5 {
        return Err(Error::HypothesisNotMet(format!("the bundle sells with probability {sale} > 1/2")));
    }
    let grid = instance.grid();
    let mut slack = f64::INFINITY;
    for (d, s) in instance.dists().iter().zip(&cert.profile) {
        let r = d.myerson_price();
        for &(q, _) in s.atoms() {
            let x = grid.money(q);
            slack = slack.min(x - c * r).min(r - x);
        }
    }
    Ok(LemmaCheck { lemma: Lemma::ContainedResponse, lhs: slack, rhs: 0.0, slack })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaSummary {
    pub lemma: Lemma,
    pub checked: usize,
    pub skipped: usize,
    pub min_slack: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub checks: Vec<LemmaCheck>,
    pub summaries: Vec<LemmaSummary>,
    pub passed: bool,
}

/// Runs every per-item lemma at `(c, k)`, the sandwich for each strategy of
/// each profile, and the high-mean variance lemma for each profile. Checks
/// whose premise fails are counted as skipped.
pub fn lemma_suite(
    instance: &MarketInstance,
    c: f64,
    k: f64,
    profiles: &[Vec<MixedStrategy>],
    tol: f64,
) -> LemmaReport {
    let mut checks = Vec::new();
    let mut skipped = std::collections::HashMap::new();
    let mut record = |lemma: Lemma, res: Result<Vec<LemmaCheck>>| match res {
        Ok(c) => checks.extend(c),
        Err(_) => *skipped.entry(lemma).or_insert(0usize) += 1,
    };
    for d in instance.dists() {
        record(Lemma::ConstVarianceBound, const_variance_bound(d, c, k).map(|x| vec![x]));
        record(Lemma::RemBound, rem_bound(d, c, k).map(|x| vec![x]));
    }
    for p in profiles {
        for (d, s) in instance.dists().iter().zip(p) {
            record(Lemma::MeanToVarUpper, mean_to_var(d, s).map(Vec::from));
        }
        record(Lemma::HighMeanVar, high_mean_var(instance, c, p).map(|x| vec![x]));
    }
    let summaries: Vec<LemmaSummary> = ALL_LEMMAS
        .iter()
        .filter(|&&l| l != Lemma::ContainedResponse)
        .map(|&lemma| {
            let slacks: Vec<f64> = checks.iter().filter(|c| c.lemma == lemma).map(|c| c.slack).collect();
            let min_slack = slacks.iter().copied().reduce(f64::min);
            LemmaSummary {
                lemma,
                checked: slacks.len(),
                skipped: skipped.get(&lemma).copied().unwrap_or(0),
                passed: min_slack.map_or(true, |s| s >= -tol),
                min_slack,
            }
        })
        .collect();
    let passed = summaries.iter().all(|s| s.passed);
    LemmaReport { checks, summaries, passed }
}
