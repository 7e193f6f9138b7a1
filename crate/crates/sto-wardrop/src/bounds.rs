//! Closed-form upper bounds on the price of anarchy, with their
//! applicability conditions.
//!
//! Three bound families are implemented, each driven entirely by demand
//! variability statistics and two instance parameters: the maximum cost
//! degree m and the largest number n of commodities sharing a link.
//!
//! * **Affine costs, any demands** (`affine_bound`):
//!   4 (1 + max_cv^2)(n + min_cv^2) / (3 n + 4 min_cv^2).
//! * **Polynomial costs, positive-valued demands**
//!   (`anarchy_bound_positive`): the anarchy value of the monomial class,
//!   applicable while the order-m moment ratio stays below
//!   (m + 1)(1/m)^(m/(m+1)).
//! * **Polynomial costs, normal demands** (`anarchy_bound_normal`): the
//!   same program with the Jensen lower bound on link moments sharpened by
//!   the floor coefficients `moment_floor`, which tightens the bound for
//!   small n.
//!
//! A general polynomial cost never needs its own analysis: an edge with
//! cost sum_j b_j x^j is equivalent to a serial chain of single-term links
//! (see `network::split_to_monomials`), so the monomial class is enough.
//! The full auxiliary-function machinery ([`AuxFunctions`]) is still
//! exposed for exploration; its supremum search over x is a grid heuristic
//! and is flagged as such.

use serde::{Deserialize, Serialize};

use crate::costs::PolynomialCost;
use crate::demand::DemandStats;
use crate::error::{Error, Result};
use crate::network::Network;
use crate::numeric;

/// Applicability threshold for the positive-demand polynomial bound:
/// the order-m moment ratio must stay below (m + 1)(1/m)^(m/(m+1)).
pub fn theta_threshold(m: usize) -> f64 {
    assert!(m >= 1, "threshold is defined for degree >= 1");
    let m_f = m as f64;
    (m_f + 1.0) * (1.0 / m_f).powf(m_f / (m_f + 1.0))
}

/// Lower-bound coefficient on E[V^m] / v^m for normal link flows:
/// sum over even r of C(m, r) (min_cv^2 / n)^(r/2) (r - 1)!!.
///
/// Equals the order-m moment ratio of a normal with coefficient of
/// variation min_cv / sqrt(n); always >= 1.
pub fn moment_floor(m: usize, min_cv: f64, n: usize) -> f64 {
    numeric::normal_moment_ratio(m, min_cv / (n as f64).sqrt())
}

/// Upper bound on the price of anarchy for affine costs under arbitrary
/// demand distributions.
pub fn affine_bound(max_cv: f64, min_cv: f64, n: usize) -> f64 {
    let n = n as f64;
    4.0 * (1.0 + max_cv * max_cv) * (n + min_cv * min_cv) / (3.0 * n + 4.0 * min_cv * min_cv)
}

/// Anarchy value of the single term x^j for positive-valued demands.
/// Degree 0 loses nothing (constant costs), so it returns 1.
pub fn anarchy_value_monomial_positive(j: usize, stats: &DemandStats) -> Result<f64> {
    if j == 0 {
        return Ok(1.0);
    }
    let q_j = stats.max_moment_ratio(j)?;
    let q_next = stats.max_moment_ratio(j + 1)?;
    let j_f = j as f64;
    let bracket =
        1.0 / q_next - (j_f / (j_f + 1.0)) * (q_j / q_next) * (q_j / (j_f + 1.0)).powf(1.0 / j_f);
    if bracket <= 0.0 {
        return Err(Error::NotApplicable(format!(
            "degree-{j} term: moment ratio {q_j} too large (bracket {bracket} <= 0)"
        )));
    }
    Ok(1.0 / bracket)
}

/// Anarchy value of the single term x^j for normal demands, sharpened by
/// the moment floors of order j and j + 1.
pub fn anarchy_value_monomial_normal(
    j: usize,
    stats: &DemandStats,
    n: usize,
) -> Result<f64> {
    if j == 0 {
        return Ok(1.0);
    }
    let q_j = stats.max_moment_ratio(j)?;
    let q_next = stats.max_moment_ratio(j + 1)?;
    let l_j = moment_floor(j, stats.min_cv, n);
    let l_next = moment_floor(j + 1, stats.min_cv, n);
    let j_f = j as f64;
    let bracket = l_j / q_next
        - (q_j * j_f / (q_next * (j_f + 1.0))) * (q_j / (l_next * (j_f + 1.0))).powf(1.0 / j_f);
    if bracket <= 0.0 {
        return Err(Error::NotApplicable(format!(
            "degree-{j} term: moment ratio {q_j} exceeds the normal-demand condition \
             (bracket {bracket} <= 0)"
        )));
    }
    Ok(1.0 / bracket)
}

/// Parameters a bound was evaluated with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    /// Maximum effective cost degree m.
    pub degree: usize,
    /// Largest number of commodities sharing one link.
    pub max_commodities_per_edge: usize,
    pub max_cv: f64,
    pub min_cv: f64,
    /// Max moment ratios by order, as far as they were needed.
    pub max_moment_ratio: Vec<f64>,
}

/// One theoretical bound with its applicability verdict. A bound that does
/// not apply reports `applicable = false` and the violated condition; it is
/// never silently infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// Which bound family: "affine", "polynomial_positive" or
    /// "polynomial_normal".
    pub name: String,
    /// The bound when applicable (always >= 1), `None` otherwise.
    pub value: Option<f64>,
    pub applicable: bool,
    pub violated_condition: Option<String>,
    pub params: BoundParams,
    /// Filled in by PoA reports: bound - empirical PoA.
    pub margin: Option<f64>,
    /// Filled in by PoA reports: empirical PoA <= bound (+1e-6 slack).
    pub holds: Option<bool>,
    /// Filled in by PoA reports: the bound is attained to ~1e-4 relative.
    pub tight: Option<bool>,
}

impl BoundReport {
    fn new(name: &str, params: BoundParams) -> Self {
        Self {
            name: name.to_string(),
            value: None,
            applicable: false,
            violated_condition: None,
            params,
            margin: None,
            holds: None,
            tight: None,
        }
    }

    fn applicable(mut self, value: f64) -> Self {
        debug_assert!(value >= 1.0 - 1e-12);
        self.value = Some(value);
        self.applicable = true;
        self
    }

    fn not_applicable(mut self, why: String) -> Self {
        self.violated_condition = Some(why);
        self
    }
}

fn params_for(m: usize, n: usize, stats: &DemandStats) -> BoundParams {
    BoundParams {
        degree: m,
        max_commodities_per_edge: n,
        max_cv: stats.max_cv,
        min_cv: stats.min_cv,
        max_moment_ratio: stats.max_moment_ratio[..=(m + 1).min(stats.max_order())].to_vec(),
    }
}

/// Bound for the monomial class of degree at most m under positive-valued
/// demands: the largest per-degree anarchy value, guarded by the order-m
/// applicability threshold. Fails only when the needed moment ratios are
/// missing; an inapplicable bound is a verdict, not an error.
pub fn anarchy_bound_positive(m: usize, stats: &DemandStats) -> Result<BoundReport> {
    // n plays no role in this family; record 1 for completeness.
    let report = BoundReport::new("polynomial_positive", params_for(m, 1, stats));
    if m == 0 {
        return Ok(report.applicable(1.0));
    }
    let q_m = stats.max_moment_ratio(m)?;
    let threshold = theta_threshold(m);
    if q_m >= threshold {
        return Ok(report.not_applicable(format!(
            "max moment ratio of order {m} is {q_m}, at or above the threshold {threshold}"
        )));
    }
    let mut best = 1.0_f64;
    for j in 0..=m {
        match anarchy_value_monomial_positive(j, stats) {
            Ok(value) => best = best.max(value),
            // Moment ratios from arbitrary moment tables need not be
            // monotone in the order, so a lower degree can fail even when
            // the order-m guard passes.
            Err(Error::NotApplicable(why)) => return Ok(report.not_applicable(why)),
            Err(other) => return Err(other),
        }
    }
    Ok(report.applicable(best))
}

/// Bound for the monomial class of degree at most m under normal demands.
/// Applicability is checked degree by degree; the first violated degree is
/// reported.
pub fn anarchy_bound_normal(m: usize, stats: &DemandStats, n: usize) -> Result<BoundReport> {
    let report = BoundReport::new("polynomial_normal", params_for(m, n, stats));
    if m == 0 {
        return Ok(report.applicable(1.0));
    }
    for j in 1..=m {
        let q_j = stats.max_moment_ratio(j)?;
        let l_j = moment_floor(j, stats.min_cv, n);
        let l_next = moment_floor(j + 1, stats.min_cv, n);
        let j_f = j as f64;
        let condition =
            l_j - (q_j * j_f / (j_f + 1.0)) * (q_j / (l_next * (j_f + 1.0))).powf(1.0 / j_f);
        if condition <= 0.0 {
            return Ok(report.not_applicable(format!(
                "normal-demand condition fails at degree {j}: \
                 floor {l_j} minus penalty leaves {condition} <= 0"
            )));
        }
    }
    let mut best = 1.0_f64;
    for j in 0..=m {
        best = best.max(anarchy_value_monomial_normal(j, stats, n)?);
    }
    Ok(report.applicable(best))
}

/// Largest common coefficient of variation (with max_cv = min_cv) for
/// which the normal-demand bound of degree m applies with n commodities
/// per link. Returns +inf when the condition never fails below cv = 64.
pub fn max_applicable_cv(m: usize, n: usize) -> f64 {
    assert!(m >= 1 && n >= 1);
    let condition = |cv: f64| -> f64 {
        let mut worst = f64::INFINITY;
        for j in 1..=m {
            let q_j = numeric::normal_moment_ratio(j, cv);
            let l_j = moment_floor(j, cv, n);
            let l_next = moment_floor(j + 1, cv, n);
            let j_f = j as f64;
            let c = l_j
                - (q_j * j_f / (j_f + 1.0)) * (q_j / (l_next * (j_f + 1.0))).powf(1.0 / j_f);
            worst = worst.min(c);
        }
        worst
    };
    let hi = 64.0;
    if condition(hi) > 0.0 {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (0.0_f64, hi);
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if condition(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Largest max/min ratio of a positive uniform demand U[a, b] keeping the
/// positive-demand bound of degree m applicable. Returns +inf when the
/// order-m moment ratio of the uniform family never reaches the threshold.
pub fn max_uniform_ratio(m: usize) -> f64 {
    assert!(m >= 1);
    let threshold = theta_threshold(m);
    let ratio_at = |b: f64| -> f64 {
        // Order-m moment ratio of U[1, b]:
        // E[D^m] = (b^(m+1) - 1) / ((m + 1)(b - 1)), mean = (1 + b) / 2.
        let m_i = m as i32;
        let raw = (b.powi(m_i + 1) - 1.0) / ((m as f64 + 1.0) * (b - 1.0));
        raw / (0.5 * (1.0 + b)).powi(m_i)
    };
    let cap = 1e6;
    if ratio_at(cap) < threshold {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (1.0 + 1e-9, cap);
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if ratio_at(mid) < threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Which lower-bound weights the auxiliary functions use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundVariant {
    /// Positive-valued demands: plain Jensen floors (all ones).
    Positive,
    /// Normal demands sharing links among at most n commodities.
    Normal { n: usize },
}

/// The auxiliary cost envelopes for one polynomial cost c and one demand
/// profile:
///
/// - `t_upper(x)` = sum_j b_j q_j x^j — upper envelope of E[c(V)] at mean
///   flow x (q_j the order-j max moment ratio),
/// - `t_lower(x)` = sum_j b_j l_j x^j — lower envelope (l_j = 1 for
///   positive demands, the moment floor for normal demands),
/// - `s_upper(x)`, `s_lower(x)` — the same envelopes for E[c(V) V],
/// - `lambda(x)` — the unique point where the marginal lower total cost
///   matches the upper mean cost: s_lower'(lambda x) = t_upper(x),
/// - `mu`, `phi`, `eta` — the normalized ratios whose combination
///   mu + phi - eta * lambda controls the anarchy value (0/0 reads as 1).
#[derive(Debug, Clone)]
pub struct AuxFunctions {
    cost: PolynomialCost,
    /// Max moment ratios q_j for j = 0..=degree+1.
    ratios: Vec<f64>,
    /// Floor weights l_j for j = 0..=degree+1 (all ones for the positive
    /// variant).
    floors: Vec<f64>,
}

impl AuxFunctions {
    pub fn new(cost: &PolynomialCost, stats: &DemandStats, variant: BoundVariant) -> Result<Self> {
        let degree = cost.degree();
        let mut ratios = Vec::with_capacity(degree + 2);
        for j in 0..=degree + 1 {
            ratios.push(stats.max_moment_ratio(j)?);
        }
        let floors = match variant {
            BoundVariant::Positive => vec![1.0; degree + 2],
            BoundVariant::Normal { n } => (0..=degree + 1)
                .map(|j| moment_floor(j, stats.min_cv, n))
                .collect(),
        };
        Ok(Self {
            cost: cost.clone(),
            ratios,
            floors,
        })
    }

    pub fn t_upper(&self, x: f64) -> f64 {
        self.cost
            .coefficients()
            .iter()
            .enumerate()
            .map(|(j, &b)| b * self.ratios[j] * x.powi(j as i32))
            .sum()
    }

    pub fn t_lower(&self, x: f64) -> f64 {
        self.cost
            .coefficients()
            .iter()
            .enumerate()
            .map(|(j, &b)| b * self.floors[j] * x.powi(j as i32))
            .sum()
    }

    pub fn s_upper(&self, x: f64) -> f64 {
        self.cost
            .coefficients()
            .iter()
            .enumerate()
            .map(|(j, &b)| b * self.ratios[j + 1] * x.powi(j as i32 + 1))
            .sum()
    }

    pub fn s_lower(&self, x: f64) -> f64 {
        self.cost
            .coefficients()
            .iter()
            .enumerate()
            .map(|(j, &b)| b * self.floors[j + 1] * x.powi(j as i32 + 1))
            .sum()
    }

    pub fn s_lower_prime(&self, x: f64) -> f64 {
        self.cost
            .coefficients()
            .iter()
            .enumerate()
            .map(|(j, &b)| (j as f64 + 1.0) * b * self.floors[j + 1] * x.powi(j as i32))
            .sum()
    }

    fn s_lower_second(&self, x: f64) -> f64 {
        self.cost
            .coefficients()
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, &b)| (j as f64 + 1.0) * j as f64 * b * self.floors[j + 1] * x.powi(j as i32 - 1))
            .sum()
    }

    /// Solves s_lower'(lambda x) = t_upper(x) for lambda > 0 by bracketed
    /// bisection plus a Newton polish, to 1e-12 relative residual.
    /// `ConstantCost` when the cost has no positive-degree term (the
    /// marginal is flat and never crosses).
    pub fn lambda(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Err(Error::NotApplicable(format!(
                "lambda is defined for x > 0, got {x}"
            )));
        }
        if self.cost.is_constant() {
            return Err(Error::ConstantCost);
        }
        let target = self.t_upper(x);
        let mut hi = x.max(1.0);
        let mut guard = 0;
        while self.s_lower_prime(hi) < target {
            hi *= 2.0;
            guard += 1;
            if guard > 4000 {
                return Err(Error::DegenerateCost(
                    "failed to bracket the lambda crossing".into(),
                ));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.s_lower_prime(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut y = 0.5 * (lo + hi);
        for _ in 0..8 {
            let slope = self.s_lower_second(y);
            if slope <= 0.0 {
                break;
            }
            let step = (self.s_lower_prime(y) - target) / slope;
            let next = y - step;
            if next.is_finite() && next > 0.0 {
                y = next;
            } else {
                break;
            }
        }
        Ok(y / x)
    }

    /// s_lower(lambda(x) x) / s_upper(x).
    pub fn mu(&self, x: f64) -> Result<f64> {
        let lambda = self.lambda(x)?;
        let num = self.s_lower(lambda * x);
        let den = self.s_upper(x);
        Ok(ratio_with_zero_convention(num, den))
    }

    /// x t_lower(x) / s_upper(x), with 0/0 = 1.
    pub fn phi(&self, x: f64) -> f64 {
        ratio_with_zero_convention(x * self.t_lower(x), self.s_upper(x))
    }

    /// x t_upper(x) / s_upper(x), with 0/0 = 1.
    pub fn eta(&self, x: f64) -> f64 {
        ratio_with_zero_convention(x * self.t_upper(x), self.s_upper(x))
    }

    /// The anarchy value of this single cost: the supremum over x > 0 of
    /// 1 / (mu + phi - eta * lambda), searched on a log grid over
    /// [1e-3, 1e3] and refined by golden section. For monomial costs the
    /// integrand is constant in x and the search is exact; for general
    /// polynomials this is a heuristic — the per-term decomposition via
    /// `split_to_monomials` is the reliable route.
    pub fn anarchy_value(&self) -> Result<f64> {
        let combo = |x: f64| -> Result<f64> {
            let bracket = self.mu(x)? + self.phi(x) - self.eta(x) * self.lambda(x)?;
            if bracket <= 0.0 {
                return Err(Error::NotApplicable(format!(
                    "anarchy-value bracket {bracket} <= 0 at x = {x}"
                )));
            }
            Ok(1.0 / bracket)
        };
        let grid = 121;
        let (log_lo, log_hi) = (-3.0_f64, 3.0_f64);
        let mut best = f64::NEG_INFINITY;
        let mut best_t = log_lo;
        for idx in 0..grid {
            let t = log_lo + (log_hi - log_lo) * idx as f64 / (grid - 1) as f64;
            let value = combo(10f64.powf(t))?;
            if value > best {
                best = value;
                best_t = t;
            }
        }
        let step = (log_hi - log_lo) / (grid - 1) as f64;
        let (mut a, mut b) = (best_t - step, best_t + step);
        let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = b - inv_phi * (b - a);
        let mut x2 = a + inv_phi * (b - a);
        let mut f1 = combo(10f64.powf(x1))?;
        let mut f2 = combo(10f64.powf(x2))?;
        for _ in 0..60 {
            if f1 < f2 {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + inv_phi * (b - a);
                f2 = combo(10f64.powf(x2))?;
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - inv_phi * (b - a);
                f1 = combo(10f64.powf(x1))?;
            }
        }
        Ok(best.max(f1).max(f2))
    }
}

fn ratio_with_zero_convention(num: f64, den: f64) -> f64 {
    if den == 0.0 && num == 0.0 {
        1.0
    } else {
        num / den
    }
}

/// Convenience wrapper: the crossing multiplier lambda(x) for one cost.
pub fn lambda_of(
    cost: &PolynomialCost,
    stats: &DemandStats,
    x: f64,
    variant: BoundVariant,
) -> Result<f64> {
    AuxFunctions::new(cost, stats, variant)?.lambda(x)
}

/// Every bound family evaluated for one network: the affine bound (when
/// all costs are affine), the positive-demand polynomial bound (when all
/// demands are positive-valued) and the normal-demand polynomial bound
/// (when all demands are normal). Families whose structural precondition
/// fails are reported as inapplicable with the reason.
pub fn bound_reports(network: &Network) -> Result<Vec<BoundReport>> {
    let m = network.max_cost_degree();
    let n = network.incidence().max_commodities_per_edge.max(1);
    let stats = network.demand_stats(m + 1)?;
    let mut reports = Vec::new();

    let affine_report = {
        let report = BoundReport::new("affine", params_for(1.min(m.max(1)), n, &stats));
        if network.is_affine() {
            report.applicable(affine_bound(stats.max_cv, stats.min_cv, n))
        } else {
            report.not_applicable(format!("cost degree {m} exceeds affine"))
        }
    };
    reports.push(affine_report);

    let positive_report = if network.all_demands_positive_valued() {
        anarchy_bound_positive(m, &stats)?
    } else {
        BoundReport::new("polynomial_positive", params_for(m, n, &stats))
            .not_applicable("some demand is not positive-valued".into())
    };
    reports.push(positive_report);

    let normal_report = if network.all_demands_normal_family() {
        anarchy_bound_normal(m, &stats, n)?
    } else {
        BoundReport::new("polynomial_normal", params_for(m, n, &stats))
            .not_applicable("some demand is not normal".into())
    };
    reports.push(normal_report);

    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand::{demand_stats, DemandDistribution};
    use crate::rng::SampleRng;
    use approx::assert_relative_eq;

    fn normal_stats(cv: f64, order: usize) -> DemandStats {
        demand_stats(&[DemandDistribution::normal(1.0, cv).unwrap()], order).unwrap()
    }

    fn deterministic_stats(order: usize) -> DemandStats {
        demand_stats(&[DemandDistribution::deterministic(1.0).unwrap()], order).unwrap()
    }

    /// The deterministic-limit anarchy value (1 - m (m+1)^(-(m+1)/m))^-1.
    fn deterministic_limit(m: usize) -> f64 {
        let m_f = m as f64;
        1.0 / (1.0 - m_f * (m_f + 1.0).powf(-(m_f + 1.0) / m_f))
    }

    #[test]
    fn affine_bound_values() {
        for n in [1, 2, 7, 100] {
            assert_relative_eq!(affine_bound(0.0, 0.0, n), 4.0 / 3.0, max_relative = 1e-15);
        }
        assert_relative_eq!(affine_bound(1.0, 1.0, 1), 16.0 / 7.0, max_relative = 1e-15);
        assert_relative_eq!(affine_bound(1.0, 0.0, 5), 8.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn moment_floor_low_orders() {
        assert_eq!(moment_floor(0, 0.7, 3), 1.0);
        assert_eq!(moment_floor(1, 0.7, 3), 1.0);
        assert_relative_eq!(moment_floor(2, 1.0, 1), 2.0, max_relative = 1e-15);
        for (cv, n) in [(0.3, 1), (0.8, 2), (1.5, 7)] {
            assert_relative_eq!(
                moment_floor(3, cv, n),
                1.0 + 3.0 * cv * cv / n as f64,
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn thresholds_match_tabulated_values() {
        assert!((theta_threshold(2) - 1.889).abs() < 1e-3);
        assert!((theta_threshold(3) - 1.754).abs() < 1e-3);
        assert!((theta_threshold(4) - 1.649).abs() < 1e-3);
    }

    #[test]
    fn monomial_positive_deterministic_values() {
        let stats = deterministic_stats(6);
        assert_eq!(anarchy_value_monomial_positive(0, &stats).unwrap(), 1.0);
        assert_relative_eq!(
            anarchy_value_monomial_positive(1, &stats).unwrap(),
            4.0 / 3.0,
            max_relative = 1e-14
        );
        let j2 = anarchy_value_monomial_positive(2, &stats).unwrap();
        assert!((j2 - 1.6258).abs() < 1e-4);
        assert_relative_eq!(j2, deterministic_limit(2), max_relative = 1e-12);
    }

    #[test]
    fn positive_bound_deterministic_degree_three() {
        let stats = deterministic_stats(6);
        let report = anarchy_bound_positive(3, &stats).unwrap();
        assert!(report.applicable);
        let expected = 1.0 / (1.0 - 3.0 * 4.0f64.powf(-4.0 / 3.0));
        assert_relative_eq!(report.value.unwrap(), expected, max_relative = 1e-12);
    }

    #[test]
    fn positive_bound_rejects_high_variability() {
        // U[1, 20] has an order-3 moment ratio above the threshold.
        let stats =
            demand_stats(&[DemandDistribution::uniform(1.0, 20.0).unwrap()], 4).unwrap();
        let report = anarchy_bound_positive(3, &stats).unwrap();
        assert!(!report.applicable);
        assert!(report.value.is_none());
        assert!(report.violated_condition.unwrap().contains("threshold"));
    }

    #[test]
    fn monomial_normal_reduces_to_affine_bound() {
        for &cv in &[0.0, 0.25, 0.5, 1.0] {
            for &n in &[1usize, 2, 5, 20] {
                let stats = normal_stats(cv, 3);
                let got = anarchy_value_monomial_normal(1, &stats, n).unwrap();
                let want = affine_bound(cv, cv, n);
                assert_relative_eq!(got, want, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn monomial_normal_deterministic_limits() {
        let stats = normal_stats(0.0, 4);
        assert_relative_eq!(
            anarchy_value_monomial_normal(1, &stats, 4).unwrap(),
            4.0 / 3.0,
            max_relative = 1e-12
        );
        let j2 = anarchy_value_monomial_normal(2, &stats, 9).unwrap();
        assert!((j2 - 1.6258).abs() < 1e-4);
    }

    #[test]
    fn normal_bound_matches_closed_curve_at_zero_cv() {
        let stats = normal_stats(0.0, 3);
        let report = anarchy_bound_normal(2, &stats, 1).unwrap();
        assert!(report.applicable);
        // 9 / (9 - 2 sqrt(3))
        let want = 9.0 / (9.0 - 2.0 * 3.0f64.sqrt());
        assert_relative_eq!(report.value.unwrap(), want, max_relative = 1e-10);
        assert!((report.value.unwrap() - 1.6258).abs() < 1e-4);
    }

    #[test]
    fn normal_bound_converges_to_positive_bound_for_large_n() {
        for cv in [0.2, 0.5, 0.9] {
            let stats = normal_stats(cv, 4);
            let normal = anarchy_bound_normal(3, &stats, 1_000_000_000).unwrap();
            let positive = anarchy_bound_positive(3, &stats).unwrap();
            match (normal.value, positive.value) {
                (Some(a), Some(b)) => {
                    assert!((a - b).abs() / b < 1e-6, "cv {cv}: {a} vs {b}");
                }
                (None, None) => {}
                other => panic!("applicability mismatch at cv {cv}: {other:?}"),
            }
        }
    }

    #[test]
    fn deterministic_limit_shared_by_all_families() {
        let stats = normal_stats(0.0, 5);
        for m in 1..=4 {
            let want = deterministic_limit(m);
            let normal = anarchy_bound_normal(m, &stats, 3).unwrap().value.unwrap();
            let positive = anarchy_bound_positive(m, &deterministic_stats(5))
                .unwrap()
                .value
                .unwrap();
            assert_relative_eq!(normal, want, max_relative = 1e-10);
            assert_relative_eq!(positive, want, max_relative = 1e-10);
            if m == 1 {
                assert_relative_eq!(affine_bound(0.0, 0.0, 3), want, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn degree_two_curves_match_reference_expressions() {
        // Independent algebraic forms of the degree-2 bound, derived by
        // substituting the normal moment ratios g2 = 1 + t^2, g3 = 1 + 3 t^2
        // by hand (n = 1 and the large-n limit).
        for t in [0.0f64, 0.2, 0.6, 1.0] {
            let g2 = 1.0 + t * t;
            let g3 = 1.0 + 3.0 * t * t;
            let stats = normal_stats(t, 3);

            let n1 = anarchy_bound_normal(2, &stats, 1).unwrap().value.unwrap();
            let reference_n1 = (9.0 + 27.0 * t * t)
                / ((9.0 + 9.0 * t * t) - 2.0 * 3.0f64.sqrt() * g2 * (g2 / g3).sqrt());
            assert_relative_eq!(n1, reference_n1, max_relative = 1e-12);

            let limit = anarchy_bound_positive(2, &stats).unwrap().value.unwrap();
            let reference_limit =
                (9.0 + 27.0 * t * t) / (9.0 - 2.0 * 3.0f64.sqrt() * g2.powf(1.5));
            assert_relative_eq!(limit, reference_limit, max_relative = 1e-12);
        }
    }

    #[test]
    fn max_applicable_cv_spot_values() {
        assert!((max_applicable_cv(2, 3) - 3.45372).abs() < 1e-2);
        assert!((max_applicable_cv(2, 10) - 1.13276).abs() < 1e-2);
        assert!((max_applicable_cv(3, 5) - 0.66982).abs() < 1e-2);
        assert!((max_applicable_cv(4, 5) - 0.394156).abs() < 1e-2);
        assert!(max_applicable_cv(2, 1).is_infinite());
        assert!(max_applicable_cv(3, 2).is_infinite());
        assert!((max_applicable_cv(4, 2) - 0.766966).abs() < 1e-2);
    }

    #[test]
    fn max_uniform_ratio_spot_values() {
        assert!(max_uniform_ratio(2).is_infinite());
        assert!((max_uniform_ratio(3) - 14.241).abs() < 1e-2);
        assert!((max_uniform_ratio(4) - 3.556).abs() < 1e-2);
    }

    #[test]
    fn lambda_closed_forms() {
        // Monomial, positive variant: lambda = (q_j / (j + 1))^(1/j),
        // independent of x.
        for j in 1..=4usize {
            let stats = demand_stats(&[DemandDistribution::uniform(1.0, 2.0).unwrap()], j + 1)
                .unwrap();
            let cost = PolynomialCost::monomial(2.5, j).unwrap();
            let q_j = stats.max_moment_ratio(j).unwrap();
            let want = (q_j / (j as f64 + 1.0)).powf(1.0 / j as f64);
            for x in [0.05, 1.0, 42.0] {
                let got = lambda_of(&cost, &stats, x, BoundVariant::Positive).unwrap();
                assert_relative_eq!(got, want, max_relative = 1e-11);
            }
        }
        // c(x) = x, deterministic demand: 2 lambda x = x.
        let stats = deterministic_stats(2);
        let cost = PolynomialCost::new(vec![0.0, 1.0]).unwrap();
        assert_relative_eq!(
            lambda_of(&cost, &stats, 3.0, BoundVariant::Positive).unwrap(),
            0.5,
            max_relative = 1e-12
        );
        // Monomial, normal variant: lambda = (q_j / (l_{j+1} (j + 1)))^(1/j).
        for j in 1..=3usize {
            let stats = normal_stats(0.6, j + 1);
            let n = 2;
            let cost = PolynomialCost::monomial(1.0, j).unwrap();
            let q_j = stats.max_moment_ratio(j).unwrap();
            let l_next = moment_floor(j + 1, stats.min_cv, n);
            let want = (q_j / (l_next * (j as f64 + 1.0))).powf(1.0 / j as f64);
            let got = lambda_of(&cost, &stats, 0.7, BoundVariant::Normal { n }).unwrap();
            assert_relative_eq!(got, want, max_relative = 1e-11);
        }
    }

    #[test]
    fn lambda_residual_on_random_probes() {
        let mut rng = SampleRng::for_stream(4242, 0);
        for _ in 0..100 {
            let degree = 1 + (rng.next_u64() % 4) as usize;
            let coefficients: Vec<f64> = (0..=degree)
                .map(|_| {
                    if rng.next_uniform() < 0.3 {
                        0.0
                    } else {
                        rng.next_uniform() * 5.0
                    }
                })
                .collect();
            let mut coefficients = coefficients;
            if coefficients[1..].iter().all(|&b| b == 0.0) {
                coefficients[degree] = 1.0; // keep a positive-degree term
            }
            let cost = PolynomialCost::new(coefficients).unwrap();
            let stats = normal_stats(rng.next_uniform(), degree + 1);
            let x = 10f64.powf(rng.next_uniform() * 4.0 - 2.0);
            for variant in [BoundVariant::Positive, BoundVariant::Normal { n: 3 }] {
                let aux = AuxFunctions::new(&cost, &stats, variant).unwrap();
                let lambda = aux.lambda(x).unwrap();
                let residual = (aux.s_lower_prime(lambda * x) - aux.t_upper(x)).abs();
                assert!(
                    residual <= 1e-10 * aux.t_upper(x).abs(),
                    "residual {residual} at x {x}"
                );
            }
        }
    }

    #[test]
    fn general_anarchy_value_matches_monomial_formula() {
        let stats = normal_stats(0.4, 4);
        for j in 1..=3usize {
            let cost = PolynomialCost::monomial(3.0, j).unwrap();
            let aux = AuxFunctions::new(&cost, &stats, BoundVariant::Positive).unwrap();
            let got = aux.anarchy_value().unwrap();
            let want = anarchy_value_monomial_positive(j, &stats).unwrap();
            assert_relative_eq!(got, want, max_relative = 1e-8);
        }
    }

    #[test]
    fn zero_cost_ratios_use_the_zero_convention() {
        let stats = deterministic_stats(2);
        let cost = PolynomialCost::new(vec![0.0, 0.0]).unwrap();
        let aux = AuxFunctions::new(&cost, &stats, BoundVariant::Positive).unwrap();
        assert_eq!(aux.phi(1.0), 1.0);
        assert_eq!(aux.eta(1.0), 1.0);
        assert!(matches!(aux.lambda(1.0), Err(Error::ConstantCost)));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            // Fixing min_cv and n, the affine bound grows with max_cv.
            #[test]
            fn affine_bound_monotone_in_max_cv(
                lo in 0.0f64..2.0,
                delta in 0.0f64..2.0,
                extra in 0.0f64..1.0,
                n in 1usize..20,
            ) {
                let min_cv = lo;
                let a = affine_bound(lo + delta, min_cv, n);
                let b = affine_bound(lo + delta + extra, min_cv, n);
                prop_assert!(b >= a - 1e-12);
            }

            // Every applicable bound is at least 1.
            #[test]
            fn applicable_bounds_at_least_one(cv in 0.0f64..1.5, m in 1usize..=4, n in 1usize..10) {
                let stats = demand_stats(
                    &[DemandDistribution::normal(1.0, cv).unwrap()],
                    m + 1,
                ).unwrap();
                if let Some(v) = anarchy_bound_normal(m, &stats, n).unwrap().value {
                    prop_assert!(v >= 1.0);
                }
                prop_assert!(affine_bound(cv, cv, n) >= 1.0);
            }
        }
    }
}
