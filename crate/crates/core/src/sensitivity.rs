//! Price sensitivity of a single-item revenue curve.
//!
//! A distribution is `(lambda, C)`-price sensitive when lowering the price from
//! the Myerson price `r` to any `alpha * r` with `alpha <= C` loses revenue at
//! rate at least `lambda` per unit of price. On a grid only the `alpha` with
//! `alpha * r` on the grid can be checked; the certificate records that
//! granularity.

use serde::{Deserialize, Serialize};

use crate::dist::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::grid::ValueGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityCertificate {
    pub lambda: f64,
    pub c: f64,
    pub satisfied: bool,
    pub worst_alpha: f64,
    /// Spacing of the checked `alpha` values, `step / r`.
    pub alpha_step: f64,
}

/// Minimum over grid-feasible `alpha` in `[0, c]` of
/// `(Rev(r) - Rev(alpha r)) / ((1 - alpha) r)`.
pub fn sensitivity_lambda(d: &DiscreteDistribution, c: f64) -> SensitivityCertificate {
    let r = d.myerson_ticks();
    let rev_r = d.revenue_ticks(r);
    let step = d.grid().step;
    let k_max = ((c * r as f64) + 1e-9).floor().min((r - 1) as f64) as i64;
    let mut best = (f64::INFINITY, 0i64);
    for k in 0..=k_max.max(0) {
        let ratio = (rev_r - d.revenue_ticks(k)) / ((r - k) as f64 * step);
        if ratio < best.0 {
            best = (ratio, k);
        }
    }
    SensitivityCertificate {
        lambda: best.0,
        c,
        satisfied: best.0 > 0.0,
        worst_alpha: best.1 as f64 / r as f64,
        alpha_step: 1.0 / r as f64,
    }
}

/// Continuous value distributions with closed-form density and revenue curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Family {
    /// Uniform on `[a, b]`.
    Uniform { a: f64, b: f64 },
    /// Triangular density on `[lo, hi]` peaking at `mode`.
    Triangular { lo: f64, mode: f64, hi: f64 },
    /// Density proportional to `1 + slope * x / b` on `[0, b]`, `slope > -1`.
    LinearDensity { b: f64, slope: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyCertificate {
    pub myerson_price: f64,
    pub delta_smooth: f64,
    pub delta_concave: f64,
    pub lambda: f64,
}

impl Family {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Family::Uniform { a, b } => a >= 0.0 && b > a,
            Family::Triangular { lo, mode, hi } => lo >= 0.0 && lo <= mode && mode <= hi && hi > lo,
            Family::LinearDensity { b, slope } => b > 0.0 && slope > -1.0,
        };
        if ok && self.params().iter().all(|p| p.is_finite()) {
            Ok(())
        } else {
            Err(Error::UnsupportedFamily(format!("invalid parameters {self:?}")))
        }
    }

    fn params(&self) -> Vec<f64> {
        match *self {
            Family::Uniform { a, b } => vec![a, b],
            Family::Triangular { lo, mode, hi } => vec![lo, mode, hi],
            Family::LinearDensity { b, slope } => vec![b, slope],
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match *self {
            Family::Uniform { a, b } => (a, b),
            Family::Triangular { lo, hi, .. } => (lo, hi),
            Family::LinearDensity { b, .. } => (0.0, b),
        }
    }

    /// Points where the density is not smooth.
    fn breakpoints(&self) -> Vec<f64> {
        match *self {
            Family::Uniform { a, b } => vec![a, b],
            Family::Triangular { lo, mode, hi } => vec![lo, mode, hi],
            Family::LinearDensity { b, .. } => vec![b],
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        match *self {
            Family::Uniform { a, b } => (x - a) / (b - a),
            Family::Triangular { lo, mode, hi } => {
                if x <= mode {
                    (x - lo).powi(2) / ((hi - lo) * (mode - lo))
                } else {
                    1.0 - (hi - x).powi(2) / ((hi - lo) * (hi - mode))
                }
            }
            Family::LinearDensity { b, slope } => {
                let c0 = 1.0 / (b * (1.0 + slope / 2.0));
                c0 * (x + slope * x * x / (2.0 * b))
            }
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x < lo || x > hi {
            return 0.0;
        }
        match *self {
            Family::Uniform { a, b } => 1.0 / (b - a),
            Family::Triangular { lo, mode, hi } => {
                if x <= mode && mode > lo {
                    2.0 * (x - lo) / ((hi - lo) * (mode - lo))
                } else {
                    2.0 * (hi - x) / ((hi - lo) * (hi - mode))
                }
            }
            Family::LinearDensity { b, slope } => (1.0 + slope * x / b) / (b * (1.0 + slope / 2.0)),
        }
    }

    fn density_slope(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x < lo || x > hi {
            return 0.0;
        }
        match *self {
            Family::Uniform { .. } => 0.0,
            Family::Triangular { lo, mode, hi } => {
                if x <= mode && mode > lo {
                    2.0 / ((hi - lo) * (mode - lo))
                } else {
                    -2.0 / ((hi - lo) * (hi - mode))
                }
            }
            Family::LinearDensity { b, slope } => slope / (b * b * (1.0 + slope / 2.0)),
        }
    }

    /// `h(x) = x (1 - G(x))`.
    pub fn revenue(&self, x: f64) -> f64 {
        x * (1.0 - self.cdf(x))
    }

    /// `h''(x) = -2 G'(x) - x G''(x)`.
    pub fn revenue_second_derivative(&self, x: f64) -> f64 {
        -2.0 * self.density(x) - x * self.density_slope(x)
    }

    /// `h'(x) = 1 - G(x) - x G'(x)`.
    fn revenue_derivative(&self, x: f64) -> f64 {
        1.0 - self.cdf(x) - x * self.density(x)
    }

    /// Largest maximizer of `h`: a dense scan, then bisection on `h' = 0`
    /// inside the bracket around the best scanned point. When `h'` does not
    /// change sign there the optimum sits on a kink and the scanned point is kept.
    pub fn myerson_price(&self) -> f64 {
        let (_, hi) = self.support();
        const N: usize = 100_000;
        let mut best = (0.0, f64::NEG_INFINITY);
        for j in 0..=N {
            let x = hi * j as f64 / N as f64;
            let h = self.revenue(x);
            if h >= best.1 {
                best = (x, h);
            }
        }
        let width = hi / N as f64;
        let (mut a, mut b) = ((best.0 - width).max(0.0), (best.0 + width).min(hi));
        if !(self.revenue_derivative(a) > 0.0 && self.revenue_derivative(b) < 0.0) {
            return self
                .breakpoints()
                .into_iter()
                .filter(|&p| (p - best.0).abs() <= width && self.revenue(p) >= best.1)
                .fold(best.0, f64::max);
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if self.revenue_derivative(mid) > 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    }

    /// Atoms at grid points `k * step` carrying the mass of `[k step, (k+1) step)`,
    /// so that `Pr[v >= k step]` equals the continuous tail at every grid point.
    pub fn discretize(&self, grid: ValueGrid) -> Result<DiscreteDistribution> {
        self.validate()?;
        let n = grid.max_ticks();
        let mut atoms = Vec::with_capacity(n as usize + 1);
        for k in 0..=n {
            let upper = if k == n { 1.0 } else { self.cdf(grid.money(k + 1)) };
            let p = upper - self.cdf(grid.money(k));
            if p > 0.0 {
                atoms.push((k, p));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        for a in &mut atoms {
            a.1 /= total;
        }
        DiscreteDistribution::from_ticks(grid, atoms)
    }
}

/// Smoothness and revenue-concavity constants of a named family, and the
/// sensitivity rate `lambda = delta_concave / 2 * (1 - c)` they imply.
pub fn certify_family(family: &Family, c: f64) -> Result<FamilyCertificate> {
    family.validate()?;
    let r = family.myerson_price();
    if !(r > 0.0) {
        return Err(Error::UnsupportedFamily(format!("{family:?} has no positive Myerson price")));
    }
    // The infima over (0, r) of piecewise-linear quantities are attained at
    // breakpoints or interval ends, so scanning those plus a dense grid is exact
    // up to the one-sided limits taken just inside each point.
    let mut points: Vec<f64> = (1..2000).map(|j| r * j as f64 / 2000.0).collect();
    let eps = 1e-9 * r;
    for p in family.breakpoints().into_iter().chain([0.0, r]) {
        for x in [p - eps, p + eps] {
            if x > 0.0 && x < r {
                points.push(x);
            }
        }
    }
    let smooth = points.iter().map(|&x| family.density(x)).fold(f64::INFINITY, f64::min);
    let concave = points
        .iter()
        .map(|&x| -family.revenue_second_derivative(x))
        .fold(f64::INFINITY, f64::min);
    let delta_smooth = (smooth * r).max(0.0);
    let delta_concave = (concave * r).max(0.0);
    Ok(FamilyCertificate {
        myerson_price: r,
        delta_smooth,
        delta_concave,
        lambda: delta_concave / 2.0 * (1.0 - c),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(step: f64, max: f64) -> ValueGrid {
        ValueGrid::new(step, max).unwrap()
    }

    #[test]
    fn binary_half_has_constant_ratio() {
        let d = DiscreteDistribution::binary(grid(0.01, 1.0), 1.0, 0.5).unwrap();
        let cert = sensitivity_lambda(&d, 0.9);
        assert!((cert.lambda - 0.5).abs() < 1e-12);
        assert!(cert.satisfied);
    }

    #[test]
    fn point_mass_ratio_is_one() {
        let d = DiscreteDistribution::point_mass(grid(0.1, 1.0), 1.0).unwrap();
        let cert = sensitivity_lambda(&d, 0.5);
        assert!((cert.lambda - 1.0).abs() < 1e-12);
        assert!((cert.alpha_step - 0.1).abs() < 1e-12);
    }

    #[test]
    fn equal_revenue_fails_sensitivity() {
        let d = DiscreteDistribution::new(grid(1.0, 4.0), &[(1.0, 0.5), (2.0, 0.25), (4.0, 0.25)]).unwrap();
        let cert = sensitivity_lambda(&d, 0.5);
        assert_eq!(cert.lambda, 0.0);
        assert!(!cert.satisfied);
        assert!(cert.worst_alpha == 0.25 || cert.worst_alpha == 0.5);
    }

    #[test]
    fn uniform_unit_constants() {
        let cert = certify_family(&Family::Uniform { a: 0.0, b: 1.0 }, 0.8).unwrap();
        assert!((cert.myerson_price - 0.5).abs() < 1e-9);
        assert!((cert.delta_smooth - 0.5).abs() < 1e-6);
        assert!((cert.delta_concave - 1.0).abs() < 1e-6);
        assert!((cert.lambda - 0.1).abs() < 1e-6);
    }

    #[test]
    fn decreasing_triangle_constants() {
        // Density 2(1-x) on [0,1]: r = 1/3, G'(r) r = 4/9, -h''(r) r = 2/3.
        let cert = certify_family(&Family::Triangular { lo: 0.0, mode: 0.0, hi: 1.0 }, 0.5).unwrap();
        assert!((cert.myerson_price - 1.0 / 3.0).abs() < 1e-7);
        assert!((cert.delta_smooth - 4.0 / 9.0).abs() < 1e-6);
        assert!((cert.delta_concave - 2.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn shifted_uniform_is_not_smooth() {
        let cert = certify_family(&Family::Uniform { a: 0.2, b: 1.0 }, 0.5).unwrap();
        assert_eq!(cert.delta_smooth, 0.0);
        assert_eq!(cert.delta_concave, 0.0);
        assert!(certify_family(&Family::Uniform { a: 1.0, b: 0.5 }, 0.5).is_err());
    }

    #[test]
    fn discretized_family_meets_lemma_rate() {
        let fam = Family::Uniform { a: 0.0, b: 1.0 };
        let c = 0.8;
        let cert = certify_family(&fam, c).unwrap();
        let d = fam.discretize(grid(0.001, 1.0)).unwrap();
        assert!((d.myerson_price() - 0.5).abs() < 1e-12);
        let numeric = sensitivity_lambda(&d, c);
        assert!(numeric.lambda >= cert.lambda - 1e-9, "{} < {}", numeric.lambda, cert.lambda);
    }
}
