//! Mixed pricing strategies of the item sellers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ValueGrid;

const SUM_TOL: f64 = 1e-9;

/// Distribution over prices (in ticks), ascending, no zero-probability entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedStrategy {
    atoms: Vec<(i64, f64)>,
}

impl MixedStrategy {
    pub fn pure(price: i64) -> Self {
        MixedStrategy { atoms: vec![(price, 1.0)] }
    }

    pub fn new(atoms: Vec<(i64, f64)>) -> Result<Self> {
        if atoms.iter().any(|&(t, p)| t < 0 || !(p >= 0.0)) {
            return Err(Error::InvalidInput("strategy needs non-negative prices and probabilities".into()));
        }
        let sum: f64 = atoms.iter().map(|a| a.1).sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::ProbSumMismatch { sum });
        }
        let mut atoms = atoms;
        atoms.sort_by_key(|a| a.0);
        let mut merged: Vec<(i64, f64)> = Vec::with_capacity(atoms.len());
        for (t, p) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == t => last.1 += p,
                _ => merged.push((t, p)),
            }
        }
        merged.retain(|a| a.1 > 0.0);
        for a in &mut merged {
            a.1 /= sum;
        }
        Ok(MixedStrategy { atoms: merged })
    }

    /// Normalizes non-negative weights (at least one positive) into a strategy.
    pub fn from_weights(points: &[i64], weights: &[f64]) -> Self {
        let total: f64 = weights.iter().sum();
        let atoms = points
            .iter()
            .zip(weights)
            .filter(|(_, w)| **w > 0.0)
            .map(|(&t, &w)| (t, w / total))
            .collect();
        MixedStrategy { atoms }
    }

    pub fn atoms(&self) -> &[(i64, f64)] {
        &self.atoms
    }

    pub fn is_pure(&self) -> bool {
        self.atoms.len() == 1
    }

    pub fn sup(&self) -> i64 {
        self.atoms.last().map_or(0, |a| a.0)
    }

    pub fn inf(&self) -> i64 {
        self.atoms.first().map_or(0, |a| a.0)
    }

    pub fn prob_of(&self, t: i64) -> f64 {
        self.atoms.binary_search_by_key(&t, |a| a.0).map_or(0.0, |j| self.atoms[j].1)
    }
}

pub type StrategyProfile = Vec<MixedStrategy>;

pub fn pure_profile(prices: &[i64]) -> StrategyProfile {
    prices.iter().map(|&t| MixedStrategy::pure(t)).collect()
}

/// Money-denominated view of a strategy, used in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyReport {
    pub prices: Vec<f64>,
    pub probs: Vec<f64>,
}

pub fn report_profile(profile: &[MixedStrategy], grid: &ValueGrid) -> Vec<StrategyReport> {
    profile
        .iter()
        .map(|s| StrategyReport {
            prices: s.atoms.iter().map(|a| grid.money(a.0)).collect(),
            probs: s.atoms.iter().map(|a| a.1).collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_merge_and_normalize() {
        let s = MixedStrategy::new(vec![(3, 0.25), (1, 0.5), (3, 0.25)]).unwrap();
        assert_eq!(s.atoms(), &[(1, 0.5), (3, 0.5)]);
        assert_eq!(s.sup(), 3);
        assert_eq!(s.inf(), 1);
        assert_eq!(s.prob_of(3), 0.5);
        assert!(MixedStrategy::new(vec![(1, 0.4)]).is_err());
        let w = MixedStrategy::from_weights(&[0, 5, 10], &[1.0, 0.0, 3.0]);
        assert_eq!(w.atoms(), &[(0, 0.25), (10, 0.75)]);
    }
}
