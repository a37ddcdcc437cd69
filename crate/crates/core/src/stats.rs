//! Moment-generating-function checks for the concentration toolkit, plus
//! the confidence-interval helper used by the Monte Carlo harness.
//!
//! Subgaussianity of order `s` means `log E[e^(theta (X - EX))] <= s
//! theta^2 / 2` for all real `theta`. The checks certify that bound on a
//! finite grid of `theta` values, evaluating the left side exactly from
//! finite distributions wherever one is available and reporting the worst
//! margin over the grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// 41 grid points: zero and twenty log-spaced magnitudes up to 4, mirrored.
pub fn default_theta_grid() -> Vec<f64> {
    let lo: f64 = 0.01;
    let hi: f64 = 4.0;
    let ratio = (hi / lo).powf(1.0 / 19.0);
    let mags: Vec<f64> = (0..20).map(|i| lo * ratio.powi(i)).collect();
    let mut grid: Vec<f64> = mags.iter().rev().map(|m| -m).collect();
    grid.push(0.0);
    grid.extend(mags);
    grid
}

/// Random variable with finitely many outcomes.
#[derive(Debug, Clone)]
pub struct FiniteDistribution {
    outcomes: Vec<(f64, f64)>,
}

impl FiniteDistribution {
    pub fn new(outcomes: Vec<(f64, f64)>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::Usage("need at least one outcome".into()));
        }
        let mut total = 0.0;
        for &(v, p) in &outcomes {
            if !v.is_finite() || !p.is_finite() || p < 0.0 {
                return Err(Error::Domain(format!("bad outcome ({v}, {p})")));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("outcome probabilities sum to {total}, not 1")));
        }
        Ok(Self { outcomes })
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("Bernoulli parameter {p} outside [0,1]")));
        }
        Self::new(vec![(0.0, 1.0 - p), (1.0, p)])
    }

    pub fn degenerate(value: f64) -> Result<Self> {
        Self::new(vec![(value, 1.0)])
    }

    /// The centered occupation variable `w = (eta - rho)/(rho(1 - rho))`.
    pub fn w_variable(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::Domain(format!("parameter {rho} outside (0,1)")));
        }
        let denom = rho * (1.0 - rho);
        Self::new(vec![(-rho / denom, 1.0 - rho), ((1.0 - rho) / denom, rho)])
    }

    /// Distribution of the product of independent copies.
    pub fn value_product(factors: &[FiniteDistribution]) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Usage("need at least one factor".into()));
        }
        let mut outcomes = vec![(1.0, 1.0)];
        for f in factors {
            let mut next = Vec::with_capacity(outcomes.len() * f.outcomes.len());
            for &(v, p) in &outcomes {
                for &(v2, p2) in &f.outcomes {
                    next.push((v * v2, p * p2));
                }
            }
            outcomes = next;
        }
        Self::new(outcomes)
    }

    pub fn outcomes(&self) -> &[(f64, f64)] {
        &self.outcomes
    }

    pub fn mean(&self) -> f64 {
        self.outcomes.iter().map(|&(v, p)| v * p).sum()
    }

    /// `log E[e^(theta (X - EX))]`, exact over the support. Dividing by the
    /// total mass removes the construction-time rounding of the
    /// probabilities, so the value at `theta = 0` is exactly zero.
    pub fn centered_log_mgf(&self, theta: f64) -> f64 {
        let total: f64 = self.outcomes.iter().map(|&(_, p)| p).sum();
        let mean = self.outcomes.iter().map(|&(v, p)| v * p).sum::<f64>() / total;
        let sum: f64 = self.outcomes.iter().map(|&(v, p)| p * (theta * (v - mean)).exp()).sum();
        (sum / total).ln()
    }
}

/// Grid certificate for one subgaussian bound. `margin` is the minimum of
/// `bound - lhs` over the grid; the certified inequality asks for it to be
/// nonnegative.
#[derive(Debug, Clone)]
pub struct MGFReport {
    pub theta_grid: Vec<f64>,
    pub lhs: Vec<f64>,
    pub bound: Vec<f64>,
    pub margin: f64,
    /// Subgaussian order behind the quadratic bound.
    pub order: f64,
}

fn grid_report(grid: &[f64], order: f64, lhs: impl Fn(f64) -> f64) -> Result<MGFReport> {
    if grid.is_empty() {
        return Err(Error::Usage("theta grid must not be empty".into()));
    }
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::Domain("theta grid must be finite".into()));
    }
    let lhs_vals: Vec<f64> = grid.iter().map(|&t| lhs(t)).collect();
    let bound: Vec<f64> = grid.iter().map(|&t| 0.5 * order * t * t).collect();
    let margin = lhs_vals
        .iter()
        .zip(&bound)
        .map(|(l, b)| b - l)
        .fold(f64::INFINITY, f64::min);
    Ok(MGFReport { theta_grid: grid.to_vec(), lhs: lhs_vals, bound, margin, order })
}

/// Certifies `log E[e^(theta (X - EX))] <= theta^2 / 8` for a variable
/// supported in `[0,1]`.
pub fn hoeffding_check(dist: &FiniteDistribution, theta_grid: &[f64]) -> Result<MGFReport> {
    for &(v, p) in dist.outcomes() {
        if p > 0.0 && !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain(format!("support point {v} outside [0,1]")));
        }
    }
    grid_report(theta_grid, 0.25, |t| dist.centered_log_mgf(t))
}

/// Certifies that a product of `set_size` independent centered occupation
/// variables at parameter `rho` is subgaussian of order
/// `(2/epsilon0)^(2 set_size)`, by exact enumeration of the `2^set_size`
/// outcomes.
pub fn w_subgaussian_check(
    rho: f64,
    epsilon0: f64,
    set_size: usize,
    theta_grid: &[f64],
) -> Result<MGFReport> {
    if !(epsilon0 > 0.0 && epsilon0 <= 0.5) {
        return Err(Error::Domain(format!("margin {epsilon0} outside (0, 1/2]")));
    }
    if !(rho >= epsilon0 && rho <= 1.0 - epsilon0) {
        return Err(Error::Domain(format!(
            "parameter {rho} is not within [{epsilon0}, {}]",
            1.0 - epsilon0
        )));
    }
    if !(1..=3).contains(&set_size) {
        return Err(Error::Usage(format!("set size must be 1..=3, got {set_size}")));
    }
    let site = FiniteDistribution::w_variable(rho)?;
    let product = FiniteDistribution::value_product(&vec![site; set_size])?;
    let order = (2.0 / epsilon0).powi(2 * set_size as i32);
    grid_report(theta_grid, order, |t| product.centered_log_mgf(t))
}

/// Evaluation strategy for the product-of-subgaussians bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProductCheckMethod {
    /// Independent centered Gaussians; the expectation has a closed form.
    GaussianClosedForm,
    /// Symmetric two-point variables at `+-sigma`; exact enumeration.
    TwoPointSymmetric,
    /// Gaussian pair estimated by sampling, with a confidence interval.
    MonteCarloGaussian { samples: usize, seed: u64 },
}

/// Outcome of one product-bound evaluation; `margin` compares the upper
/// confidence edge of the value against the constant bound 3.
#[derive(Debug, Clone, Copy)]
pub struct ProductBoundReport {
    pub sigma1: f64,
    pub sigma2: f64,
    pub gamma: f64,
    pub value: f64,
    pub halfwidth: f64,
    pub bound: f64,
    pub margin: f64,
}

/// Certifies `E[e^(gamma X1 X2)] <= 3` for independent subgaussian pairs
/// with orders `sigma1^2, sigma2^2`, under the admissibility condition
/// `|gamma| <= 1/(4 sigma1 sigma2)`.
pub fn subgaussian_product_check(
    sigma1: f64,
    sigma2: f64,
    gamma: f64,
    method: ProductCheckMethod,
) -> Result<ProductBoundReport> {
    if !(sigma1 >= 0.0 && sigma2 >= 0.0 && sigma1.is_finite() && sigma2.is_finite()) {
        return Err(Error::Domain("sigma must be finite and >= 0".into()));
    }
    if !gamma.is_finite() || gamma.abs() * 4.0 * sigma1 * sigma2 > 1.0 + 1e-12 {
        return Err(Error::Usage(format!(
            "gamma {gamma} outside the admissible range |gamma| <= 1/(4 sigma1 sigma2)"
        )));
    }
    let (value, halfwidth) = match method {
        ProductCheckMethod::GaussianClosedForm => {
            let g2 = gamma * gamma * sigma1 * sigma1 * sigma2 * sigma2;
            ((1.0 - g2).powf(-0.5), 0.0)
        }
        ProductCheckMethod::TwoPointSymmetric => ((gamma * sigma1 * sigma2).cosh(), 0.0),
        ProductCheckMethod::MonteCarloGaussian { samples, seed } => {
            if samples < 2 {
                return Err(Error::Usage("need at least two samples".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for _ in 0..samples {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                let v = (gamma * sigma1 * z1 * sigma2 * z2).exp();
                sum += v;
                sumsq += v * v;
            }
            let mean = sum / samples as f64;
            let var = (sumsq - sum * sum / samples as f64) / (samples - 1) as f64;
            let hw = normal_quantile(0.975)? * (var / samples as f64).sqrt();
            (mean, hw)
        }
    };
    let bound = 3.0;
    Ok(ProductBoundReport {
        sigma1,
        sigma2,
        gamma,
        value,
        halfwidth,
        bound,
        margin: bound - (value + halfwidth),
    })
}

/// Circular moving averages of independent centered occupation variables:
/// member `i` averages the base variables in the window `i..i+width`, so
/// members further than `width` apart are independent.
#[derive(Debug, Clone)]
pub struct MovingAverageFamily {
    rho: f64,
    sites: usize,
    width: usize,
}

/// Exact enumeration limit for the moving-average check.
pub const FAMILY_SITE_CAP: usize = 12;

impl MovingAverageFamily {
    pub fn new(rho: f64, sites: usize, width: usize) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::Domain(format!("parameter {rho} outside (0,1)")));
        }
        if sites == 0 || sites > FAMILY_SITE_CAP {
            return Err(Error::CapExceeded { sites, cap: FAMILY_SITE_CAP });
        }
        if width == 0 || width > sites {
            return Err(Error::Usage(format!("window width {width} outside 1..={sites}")));
        }
        Ok(Self { rho, sites, width })
    }

    pub fn len(&self) -> usize {
        self.sites
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dependence_range(&self) -> usize {
        self.width
    }

    /// Subgaussian order of one member: base order divided by the width.
    pub fn member_order(&self) -> f64 {
        let range = 1.0 / (self.rho * (1.0 - self.rho));
        range * range / 4.0 / self.width as f64
    }

    fn base_values(&self) -> (f64, f64) {
        let denom = self.rho * (1.0 - self.rho);
        ((1.0 - self.rho) / denom, -self.rho / denom)
    }
}

/// Certifies that the weighted sum of an `ell`-dependent family is
/// subgaussian of order `2 ell sum_i f_i^2 sigma_i^2`, enumerating every
/// assignment of the base variables.
pub fn ell_dependent_sum_check(
    family: &MovingAverageFamily,
    f: &[f64],
    theta_grid: &[f64],
) -> Result<MGFReport> {
    if f.len() != family.sites {
        return Err(Error::Usage(format!(
            "need one weight per member: {} members, got {}",
            family.sites,
            f.len()
        )));
    }
    if f.iter().any(|w| !w.is_finite()) {
        return Err(Error::Domain("weights must be finite".into()));
    }
    let ell = family.dependence_range() as f64;
    let order = 2.0 * ell * family.member_order() * f.iter().map(|w| w * w).sum::<f64>();

    let m = family.sites;
    let (up, down) = family.base_values();
    let inv_width = 1.0 / family.width as f64;
    let mut outcomes = Vec::with_capacity(1 << m);
    for mask in 0u32..1 << m {
        let mut prob = 1.0;
        let mut z = vec![0.0; m];
        for (x, zx) in z.iter_mut().enumerate() {
            if mask >> x & 1 == 1 {
                *zx = up;
                prob *= family.rho;
            } else {
                *zx = down;
                prob *= 1.0 - family.rho;
            }
        }
        let mut total = 0.0;
        for (i, &fi) in f.iter().enumerate() {
            let mut window = 0.0;
            for j in 0..family.width {
                window += z[(i + j) % m];
            }
            total += fi * window * inv_width;
        }
        outcomes.push((total, prob));
    }
    let sum = FiniteDistribution::new(outcomes)?;
    grid_report(theta_grid, order, |t| sum.centered_log_mgf(t))
}

/// Normal-approximation confidence interval `(mean, halfwidth)`.
pub fn confidence_interval(samples: &[f64], level: f64) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::Usage(format!("need at least 2 samples, got {}", samples.len())));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Usage(format!("confidence level {level} outside (0,1)")));
    }
    let r = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / r;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (r - 1.0);
    let z = normal_quantile(0.5 + level / 2.0)?;
    Ok((mean, z * (var / r).sqrt()))
}

/// Inverse standard normal CDF (Acklam's rational approximation, relative
/// error below 1.2e-9).
// Coefficient tables kept at their published precision.
#[allow(clippy::excessive_precision)]
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("quantile level {p} outside (0,1)")));
    }
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_grid_shape() {
        let grid = default_theta_grid();
        assert_eq!(grid.len(), 41);
        assert_eq!(grid[20], 0.0);
        assert!((grid[0] + 4.0).abs() < 1e-12);
        assert!((grid[40] - 4.0).abs() < 1e-12);
        for w in grid.windows(2) {
            assert!(w[0] < w[1]);
        }
        for i in 0..20 {
            assert!((grid[i] + grid[40 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn hoeffding_bernoulli_half_at_theta_one() {
        let dist = FiniteDistribution::bernoulli(0.5).unwrap();
        let report = hoeffding_check(&dist, &[1.0]).unwrap();
        assert!((report.lhs[0] - 0.5f64.cosh().ln()).abs() < 1e-14);
        assert!((report.lhs[0] - 0.120114).abs() < 1e-5);
        assert!((report.bound[0] - 0.125).abs() < 1e-15);
        assert!(report.margin > 0.0);
    }

    #[test]
    fn hoeffding_margins_nonnegative_over_parameter_sweep() {
        let grid = default_theta_grid();
        for p in [0.05, 0.2, 0.5, 0.77, 0.95] {
            let dist = FiniteDistribution::bernoulli(p).unwrap();
            let report = hoeffding_check(&dist, &grid).unwrap();
            assert!(report.margin >= -1e-12, "p = {p}: margin {}", report.margin);
        }
        let three_point =
            FiniteDistribution::new(vec![(0.0, 0.3), (0.4, 0.5), (1.0, 0.2)]).unwrap();
        assert!(hoeffding_check(&three_point, &grid).unwrap().margin >= -1e-12);
    }

    #[test]
    fn hoeffding_zero_theta_and_degenerate() {
        let dist = FiniteDistribution::bernoulli(0.3).unwrap();
        let report = hoeffding_check(&dist, &[0.0]).unwrap();
        assert_eq!(report.lhs[0], 0.0);
        assert_eq!(report.bound[0], 0.0);
        let flat = FiniteDistribution::degenerate(0.4).unwrap();
        let r2 = hoeffding_check(&flat, &default_theta_grid()).unwrap();
        for l in r2.lhs {
            assert!(l.abs() < 1e-14);
        }
    }

    #[test]
    fn hoeffding_rejects_support_outside_unit_interval() {
        let dist = FiniteDistribution::new(vec![(1.2, 0.5), (0.0, 0.5)]).unwrap();
        assert!(hoeffding_check(&dist, &[1.0]).is_err());
    }

    #[test]
    fn w_check_symmetric_case() {
        let report = w_subgaussian_check(0.5, 0.5, 1, &[1.0]).unwrap();
        // w takes values +-2 with equal probability.
        assert!((report.lhs[0] - 2.0f64.cosh().ln()).abs() < 1e-14);
        assert_eq!(report.order, 16.0);
        assert!(report.margin >= 0.0);
        let zero = w_subgaussian_check(0.5, 0.5, 1, &[0.0]).unwrap();
        assert_eq!(zero.lhs[0], 0.0);
        assert_eq!(zero.bound[0], 0.0);
    }

    #[test]
    fn w_check_orders_multiply_and_hold() {
        let grid = default_theta_grid();
        let mut orders = Vec::new();
        for set_size in 1..=3 {
            let report = w_subgaussian_check(0.3, 0.25, set_size, &grid).unwrap();
            assert!(report.margin >= -1e-12, "|B|={set_size}: margin {}", report.margin);
            orders.push(report.order);
        }
        assert!((orders[1] / orders[0] - orders[0]).abs() < 1e-9);
        assert!((orders[2] / orders[1] - orders[0]).abs() < 1e-6);
    }

    #[test]
    fn w_check_reciprocal_order_would_fail() {
        // The order must grow with the set size; its reciprocal is far too
        // small to dominate the exact log-MGF.
        let report = w_subgaussian_check(0.5, 0.5, 1, &[1.0]).unwrap();
        let reciprocal_bound = 0.5 / report.order;
        assert!(report.lhs[0] > reciprocal_bound);
    }

    #[test]
    fn w_check_validates_inputs() {
        assert!(w_subgaussian_check(0.9, 0.2, 1, &[1.0]).is_err());
        assert!(w_subgaussian_check(0.5, 0.0, 1, &[1.0]).is_err());
        assert!(w_subgaussian_check(0.5, 0.5, 4, &[1.0]).is_err());
    }

    #[test]
    fn gaussian_product_closed_form() {
        let report = subgaussian_product_check(
            1.0,
            1.0,
            0.25,
            ProductCheckMethod::GaussianClosedForm,
        )
        .unwrap();
        assert!((report.value - (16.0f64 / 15.0).sqrt()).abs() < 1e-12);
        assert!((report.value - 1.0328).abs() < 1e-4);
        assert!(report.margin > 1.9);
    }

    #[test]
    fn degenerate_factor_gives_unit_expectation() {
        let report =
            subgaussian_product_check(0.0, 1.0, 5.0, ProductCheckMethod::GaussianClosedForm)
                .unwrap();
        assert_eq!(report.value, 1.0);
        assert_eq!(report.margin, 2.0);
    }

    #[test]
    fn two_point_product_at_boundary_gamma() {
        let report =
            subgaussian_product_check(2.0, 1.5, 1.0 / 12.0, ProductCheckMethod::TwoPointSymmetric)
                .unwrap();
        assert!((report.value - 0.25f64.cosh()).abs() < 1e-12);
        assert!(report.margin > 0.0);
    }

    #[test]
    fn monte_carlo_agrees_with_closed_form() {
        let exact =
            subgaussian_product_check(1.0, 1.0, 0.25, ProductCheckMethod::GaussianClosedForm)
                .unwrap();
        let mc = subgaussian_product_check(
            1.0,
            1.0,
            0.25,
            ProductCheckMethod::MonteCarloGaussian { samples: 1_000_000, seed: 2024 },
        )
        .unwrap();
        assert!(mc.halfwidth > 0.0);
        assert!(
            (mc.value - exact.value).abs() <= 4.0 * mc.halfwidth,
            "mc {} vs exact {} (halfwidth {})",
            mc.value,
            exact.value,
            mc.halfwidth
        );
        assert!(mc.margin > 1.5);
    }

    #[test]
    fn product_check_rejects_large_gamma() {
        assert!(subgaussian_product_check(
            1.0,
            1.0,
            0.26,
            ProductCheckMethod::GaussianClosedForm
        )
        .is_err());
    }

    #[test]
    fn single_member_family_has_slack_two() {
        let family = MovingAverageFamily::new(0.5, 1, 1).unwrap();
        let report = ell_dependent_sum_check(&family, &[1.0], &[0.5]).unwrap();
        // Bound order is twice the member's own order, so the margin at
        // theta != 0 is strictly positive.
        assert!((report.order - 2.0 * family.member_order()).abs() < 1e-12);
        assert!(report.margin > 0.0);
    }

    #[test]
    fn zero_weights_give_zero_variable() {
        let family = MovingAverageFamily::new(0.4, 6, 2).unwrap();
        let report =
            ell_dependent_sum_check(&family, &[0.0; 6], &default_theta_grid()).unwrap();
        for l in report.lhs {
            assert!(l.abs() < 1e-14);
        }
        assert_eq!(report.order, 0.0);
    }

    #[test]
    fn eight_site_window_two_margins_hold() {
        let family = MovingAverageFamily::new(0.5, 8, 2).unwrap();
        let f: Vec<f64> = (0..8).map(|i| ((i as f64) * 0.7).sin()).collect();
        let report = ell_dependent_sum_check(&family, &f, &default_theta_grid()).unwrap();
        assert!(report.margin >= -1e-12, "margin {}", report.margin);
    }

    #[test]
    fn enumeration_matches_independent_factorization() {
        // The weighted family sum is a linear combination of the base
        // variables, so its MGF factorizes site by site.
        let rho = 0.35;
        let family = MovingAverageFamily::new(rho, 7, 3).unwrap();
        let f: Vec<f64> = (0..7).map(|i| 0.3 + 0.1 * i as f64).collect();
        let report = ell_dependent_sum_check(&family, &f, &[0.8, -0.6]).unwrap();
        let mut coeff = [0.0; 7];
        for (i, &fi) in f.iter().enumerate() {
            for j in 0..3 {
                coeff[(i + j) % 7] += fi / 3.0;
            }
        }
        let denom = rho * (1.0 - rho);
        let (up, down) = ((1.0 - rho) / denom, -rho / denom);
        for (t_idx, &theta) in [0.8, -0.6].iter().enumerate() {
            let factorized: f64 = coeff
                .iter()
                .map(|&c| {
                    let mean = rho * up + (1.0 - rho) * down;
                    (rho * (theta * c * (up - mean)).exp()
                        + (1.0 - rho) * (theta * c * (down - mean)).exp())
                    .ln()
                })
                .sum();
            assert!(
                (report.lhs[t_idx] - factorized).abs() < 1e-12,
                "theta {theta}: {} vs {factorized}",
                report.lhs[t_idx]
            );
        }
    }

    #[test]
    fn family_validates_construction() {
        assert!(MovingAverageFamily::new(0.5, 13, 2).is_err());
        assert!(MovingAverageFamily::new(0.5, 4, 5).is_err());
        assert!(MovingAverageFamily::new(1.0, 4, 2).is_err());
    }

    #[test]
    fn confidence_interval_examples() {
        let (mean, hw) = confidence_interval(&[0.0, 1.0], 0.95).unwrap();
        assert_eq!(mean, 0.5);
        assert!((hw - 0.98).abs() < 1e-3);
        let constant = [2.5; 6];
        let (m2, h2) = confidence_interval(&constant, 0.99).unwrap();
        assert_eq!(m2, 2.5);
        assert_eq!(h2, 0.0);
        assert!(confidence_interval(&[1.0], 0.95).is_err());
        assert!(confidence_interval(&[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn confidence_halfwidth_scales_inverse_sqrt() {
        let small: Vec<f64> = (0..100).map(|i| (i % 2) as f64).collect();
        let large: Vec<f64> = (0..10000).map(|i| (i % 2) as f64).collect();
        let (_, hw_small) = confidence_interval(&small, 0.95).unwrap();
        let (_, hw_large) = confidence_interval(&large, 0.95).unwrap();
        let ratio = hw_small / hw_large;
        assert!((ratio - 10.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn normal_quantile_pinned_values() {
        assert!((normal_quantile(0.975).unwrap() - 1.959963984540054).abs() < 1e-8);
        assert!((normal_quantile(0.995).unwrap() - 2.5758293035489004).abs() < 1e-8);
        assert!(normal_quantile(0.5).unwrap().abs() < 1e-9);
        for p in [0.01, 0.2, 0.6, 0.9, 0.999] {
            let q = normal_quantile(p).unwrap();
            let q_mirror = normal_quantile(1.0 - p).unwrap();
            assert!((q + q_mirror).abs() < 1e-9, "asymmetry at {p}");
        }
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
    }

    #[test]
    fn normal_quantile_monotone() {
        let mut last = f64::MIN;
        for i in 1..200 {
            let q = normal_quantile(i as f64 / 200.0).unwrap();
            assert!(q > last);
            last = q;
        }
    }
}
