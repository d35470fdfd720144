//! Berry-Esseen error bound for sums of independent discrete variables and
//! the exact Kolmogorov distance it bounds.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::dist::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::pmf::Pmf;

pub const BERRY_ESSEEN_CONSTANT: f64 = 0.5606;

/// `0.5606 / sigma * max_i rho_i / sigma_i^2`, with `rho_i` the third absolute
/// central moment of summand `i` and `sigma^2 = sum_i sigma_i^2`.
pub fn berry_esseen_delta(summands: &[DiscreteDistribution]) -> Result<f64> {
    if summands.is_empty() {
        return Err(Error::InvalidInput("at least one summand is required".into()));
    }
    let mut var_total = 0.0;
    let mut worst: f64 = 0.0;
    for (index, d) in summands.iter().enumerate() {
        let var = d.variance();
        if !(var > 0.0) {
            return Err(Error::ZeroVarianceSummand { index });
        }
        var_total += var;
        worst = worst.max(d.abs3() / var);
    }
    Ok(BERRY_ESSEEN_CONSTANT / var_total.sqrt() * worst)
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("valid parameters").cdf(z)
}

/// `sup_x |Pr[(S - mu) / sigma <= x] - Phi(x)|` for `S` the sum of the
/// summands, from the exact convolution. The supremum is attained at an atom,
/// approached from the left or the right.
pub fn kolmogorov_distance(summands: &[DiscreteDistribution]) -> Result<f64> {
    let Some(first) = summands.first() else {
        return Err(Error::InvalidInput("at least one summand is required".into()));
    };
    let step = first.grid().step;
    if summands.iter().any(|d| d.grid().step != step) {
        return Err(Error::InvalidInput("summands must share a grid step".into()));
    }
    let parts: Vec<Pmf> = summands.iter().map(|d| Pmf::from_atoms(d.atoms_ticks().to_vec())).collect();
    let sum = Pmf::sum_of(&parts)?;
    let mean: f64 = summands.iter().map(|d| d.mean()).sum();
    let var: f64 = summands.iter().map(|d| d.variance()).sum();
    if !(var > 0.0) {
        return Err(Error::ZeroVarianceSummand { index: 0 });
    }
    let sigma = var.sqrt();
    let mut below = 0.0;
    let mut worst: f64 = 0.0;
    for &(t, p) in sum.atoms() {
        let phi = normal_cdf((t as f64 * step - mean) / sigma);
        let above = below + p;
        worst = worst.max((below - phi).abs()).max((above - phi).abs());
        below = above;
    }
    Ok(worst)
}
