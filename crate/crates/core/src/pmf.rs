//! Sparse probability mass functions on integer ticks, with exact convolution
//! and leave-one-out sums.

use crate::error::{Error, Result};

/// Largest tick magnitude at which `f64` still represents every integer.
pub const MAX_EXACT_TICKS: i64 = 1 << 53;
/// Widest dense scratch buffer a single convolution may allocate.
const DENSE_LIMIT: i64 = 1 << 26;

#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    /// (tick, probability) ascending by tick, no zero entries.
    atoms: Vec<(i64, f64)>,
    /// `cum[j] = Pr[X <= atoms[j].0]`.
    cum: Vec<f64>,
}

impl Pmf {
    pub fn point(t: i64) -> Self {
        Self::from_sorted(vec![(t, 1.0)])
    }

    /// Builds from arbitrary atoms, merging duplicates.
    pub fn from_atoms(mut atoms: Vec<(i64, f64)>) -> Self {
        atoms.sort_by_key(|a| a.0);
        let mut merged: Vec<(i64, f64)> = Vec::with_capacity(atoms.len());
        for (t, p) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == t => last.1 += p,
                _ => merged.push((t, p)),
            }
        }
        Self::from_sorted(merged)
    }

    fn from_sorted(mut atoms: Vec<(i64, f64)>) -> Self {
        atoms.retain(|a| a.1 != 0.0);
        let mut cum = Vec::with_capacity(atoms.len());
        let mut acc = 0.0;
        for a in &atoms {
            acc += a.1;
            cum.push(acc);
        }
        Pmf { atoms, cum }
    }

    pub fn atoms(&self) -> &[(i64, f64)] {
        &self.atoms
    }

    pub fn total(&self) -> f64 {
        self.cum.last().copied().unwrap_or(0.0)
    }

    pub fn min_tick(&self) -> i64 {
        self.atoms.first().map_or(0, |a| a.0)
    }

    pub fn max_tick(&self) -> i64 {
        self.atoms.last().map_or(0, |a| a.0)
    }

    /// `Pr[X <= x]` for a tick coordinate `x`.
    pub fn cdf_le(&self, x: f64) -> f64 {
        let j = self.atoms.partition_point(|a| a.0 as f64 <= x);
        if j == 0 {
            0.0
        } else {
            self.cum[j - 1]
        }
    }

    /// `Pr[X > x]`, summed from the top to avoid cancellation.
    pub fn tail_gt(&self, x: f64) -> f64 {
        let j = self.atoms.partition_point(|a| a.0 as f64 <= x);
        self.atoms[j..].iter().rev().map(|a| a.1).sum()
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|&(t, p)| t as f64 * p).sum()
    }

    /// Exact convolution (distribution of the sum of independent draws).
    pub fn convolve(&self, other: &Pmf) -> Result<Pmf> {
        if self.atoms.is_empty() || other.atoms.is_empty() {
            return Ok(Pmf::from_sorted(Vec::new()));
        }
        let lo = self.min_tick() + other.min_tick();
        let hi = self.max_tick().checked_add(other.max_tick()).unwrap_or(i64::MAX);
        if hi >= MAX_EXACT_TICKS {
            return Err(Error::GridOverflow { ticks: hi as u128, limit: MAX_EXACT_TICKS as u128 });
        }
        let range = hi - lo + 1;
        let pairs = self.atoms.len() as i64 * other.atoms.len() as i64;
        if range <= DENSE_LIMIT && range <= pairs.saturating_mul(4) {
            let mut buf = vec![0.0f64; range as usize];
            for &(a, pa) in &self.atoms {
                for &(b, pb) in &other.atoms {
                    buf[(a + b - lo) as usize] += pa * pb;
                }
            }
            let atoms = buf
                .into_iter()
                .enumerate()
                .filter(|(_, p)| *p != 0.0)
                .map(|(k, p)| (lo + k as i64, p))
                .collect();
            Ok(Pmf::from_sorted(atoms))
        } else {
            let mut out = Vec::with_capacity(pairs as usize);
            for &(a, pa) in &self.atoms {
                for &(b, pb) in &other.atoms {
                    out.push((a + b, pa * pb));
                }
            }
            Ok(Pmf::from_atoms(out))
        }
    }

    /// Sum of a sequence of independent variables.
    pub fn sum_of(parts: &[Pmf]) -> Result<Pmf> {
        parts.iter().try_fold(Pmf::point(0), |acc, p| acc.convolve(p))
    }
}

/// Leave-one-out sums: entry `i` is the law of `sum_{j != i} X_j`, built from
/// prefix and suffix partial sums (`m - 1` convolutions per direction plus
/// one combining convolution per entry).
pub fn leave_one_out(parts: &[Pmf]) -> Result<Vec<Pmf>> {
    let m = parts.len();
    let mut prefix = Vec::with_capacity(m + 1);
    prefix.push(Pmf::point(0));
    for p in parts {
        let next = prefix.last().unwrap().convolve(p)?;
        prefix.push(next);
    }
    let mut suffix = vec![Pmf::point(0); m + 1];
    for j in (0..m).rev() {
        suffix[j] = suffix[j + 1].convolve(&parts[j])?;
    }
    (0..m).map(|i| prefix[i].convolve(&suffix[i + 1])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_leave_one_out() {
        let coin = Pmf::from_atoms(vec![(0, 0.5), (1, 0.5)]);
        let loo = leave_one_out(&[coin.clone(), coin.clone(), coin]).unwrap();
        for l in &loo {
            assert_eq!(l.atoms(), &[(0, 0.25), (1, 0.5), (2, 0.25)]);
        }
    }

    #[test]
    fn point_masses_sum_exactly() {
        let loo = leave_one_out(&[Pmf::point(5), Pmf::point(5)]).unwrap();
        assert_eq!(loo[0], Pmf::point(5));
        assert_eq!(loo[1], Pmf::point(5));
    }

    #[test]
    fn sparse_and_dense_paths_agree() {
        let a = Pmf::from_atoms(vec![(0, 0.25), (1000, 0.75)]);
        let b = Pmf::from_atoms(vec![(1, 0.5), (3, 0.5)]);
        let c = a.convolve(&b).unwrap();
        assert_eq!(c.atoms(), &[(1, 0.125), (3, 0.125), (1001, 0.375), (1003, 0.375)]);
        assert_eq!(c.cdf_le(3.0), 0.25);
        assert_eq!(c.cdf_le(2.5), 0.125);
        assert_eq!(c.tail_gt(3.0), 0.75);
    }

    #[test]
    fn overflow_is_reported() {
        let big = Pmf::point(MAX_EXACT_TICKS - 1);
        assert!(matches!(big.convolve(&big), Err(Error::GridOverflow { .. })));
    }
}
