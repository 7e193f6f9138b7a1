//! Polynomial link costs and the expected-cost layer.
//!
//! A link cost is a polynomial with nonnegative coefficients,
//! c(x) = sum_j b_j x^j, which makes it nondecreasing on the nonnegative
//! axis. Expectations of costs under random link flows reduce to linear
//! combinations of raw flow moments:
//!
//! - E[c(V)]   = sum_j b_j E[V^j]        (expected link cost)
//! - E[c(V) V] = sum_j b_j E[V^(j+1)]    (expected link total cost)
//!
//! and the social objective is T(p) = sum over links of E[c(V) V].
//!
//! Costs are evaluated on the whole real line: normal link flows can go
//! negative, and the analytic moment formulas integrate over all reals, so
//! the polynomial extension is the consistent choice (see the demand module
//! notes on untruncated normal sampling).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{self, Strategy};
use crate::network::Network;

/// Hard cap on the polynomial degree accepted by [`PolynomialCost::new`].
/// Exact moment expansions grow combinatorially with the degree; practical
/// cost functions rarely exceed degree 4.
pub const DEFAULT_MAX_DEGREE: usize = 8;

/// A link cost polynomial with nonnegative coefficients, stored as the
/// coefficient array `[b_0, b_1, ..., b_m]`.
///
/// Trailing zero coefficients are kept as given: the monomial-splitting
/// transform maps coefficient positions to chain links one-to-one, so the
/// representation is meaningful, not just the value.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PolynomialCost {
    coefficients: Vec<f64>,
}

impl PolynomialCost {
    /// Builds a cost from its coefficient array, enforcing nonnegative
    /// finite coefficients and the default degree cap.
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        Self::with_degree_limit(coefficients, DEFAULT_MAX_DEGREE)
    }

    /// As [`PolynomialCost::new`] with an explicit degree cap.
    pub fn with_degree_limit(coefficients: Vec<f64>, max_degree: usize) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidCost(
                "coefficient array must not be empty (use [0.0] for a free link)".into(),
            ));
        }
        if coefficients.len() > max_degree + 1 {
            return Err(Error::InvalidCost(format!(
                "degree {} exceeds the cap of {max_degree}",
                coefficients.len() - 1
            )));
        }
        for (j, &b) in coefficients.iter().enumerate() {
            if !b.is_finite() || b < 0.0 {
                return Err(Error::InvalidCost(format!(
                    "coefficient b_{j} = {b} must be finite and nonnegative"
                )));
            }
        }
        Ok(Self { coefficients })
    }

    /// The constant cost c(x) = value.
    pub fn constant(value: f64) -> Result<Self> {
        Self::new(vec![value])
    }

    /// The single-term cost c(x) = coefficient * x^degree.
    pub fn monomial(coefficient: f64, degree: usize) -> Result<Self> {
        let mut coefficients = vec![0.0; degree + 1];
        coefficients[degree] = coefficient;
        Self::new(coefficients)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// b_j, or 0 past the stored degree.
    pub fn coefficient(&self, j: usize) -> f64 {
        self.coefficients.get(j).copied().unwrap_or(0.0)
    }

    /// Degree of the stored representation (trailing zeros included).
    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// Largest j with b_j > 0, or 0 for the zero polynomial.
    pub fn effective_degree(&self) -> usize {
        self.coefficients
            .iter()
            .rposition(|&b| b > 0.0)
            .unwrap_or(0)
    }

    pub fn is_affine(&self) -> bool {
        self.effective_degree() <= 1
    }

    pub fn is_constant(&self) -> bool {
        self.effective_degree() == 0
    }

    /// c(x) by Horner's rule.
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, &b| acc * x + b)
    }

    /// The antiderivative of c evaluated at x with F(0) = 0:
    /// sum_j b_j x^(j+1) / (j+1). This is the per-link term of the
    /// potential whose minimizer over feasible mean flows is the affine
    /// user equilibrium.
    pub fn antiderivative(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (j, &b) in self.coefficients.iter().enumerate().rev() {
            acc = acc * x + b / (j + 1) as f64;
        }
        acc * x
    }

    /// Affine view (intercept, slope); fails on higher-degree terms.
    pub fn as_affine(&self) -> Result<(f64, f64)> {
        if !self.is_affine() {
            return Err(Error::InvalidCost(format!(
                "cost of effective degree {} is not affine",
                self.effective_degree()
            )));
        }
        Ok((self.coefficient(0), self.coefficient(1)))
    }
}

impl TryFrom<Vec<f64>> for PolynomialCost {
    type Error = Error;

    fn try_from(coefficients: Vec<f64>) -> Result<Self> {
        Self::new(coefficients)
    }
}

impl<'de> Deserialize<'de> for PolynomialCost {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let coefficients = Vec::<f64>::deserialize(deserializer)?;
        Self::new(coefficients).map_err(serde::de::Error::custom)
    }
}

/// E[c_e(V_e)] under the given strategy.
pub fn expected_link_cost(edge: usize, strategy: &Strategy, network: &Network) -> Result<f64> {
    let cost = &network.edge(edge).cost;
    let mut acc = 0.0;
    for (j, &b) in cost.coefficients().iter().enumerate() {
        if b > 0.0 {
            acc += b * moments::link_raw_moment(edge, j, strategy, network)?;
        }
    }
    Ok(acc)
}

/// E[c_e(V_e) * V_e] — edge `e`'s contribution to the social objective.
pub fn expected_link_total(edge: usize, strategy: &Strategy, network: &Network) -> Result<f64> {
    let cost = &network.edge(edge).cost;
    let mut acc = 0.0;
    for (j, &b) in cost.coefficients().iter().enumerate() {
        if b > 0.0 {
            acc += b * moments::link_raw_moment(edge, j + 1, strategy, network)?;
        }
    }
    Ok(acc)
}

/// Expected cost of path `k` of commodity `i`: the sum of its links'
/// expected costs.
pub fn expected_path_cost(
    commodity: usize,
    path: usize,
    strategy: &Strategy,
    network: &Network,
) -> Result<f64> {
    let mut acc = 0.0;
    for &edge in network.path(commodity, path) {
        acc += expected_link_cost(edge, strategy, network)?;
    }
    Ok(acc)
}

/// Expected costs of every link, computed in one pass.
pub fn expected_link_costs(strategy: &Strategy, network: &Network) -> Result<Vec<f64>> {
    (0..network.num_edges())
        .map(|e| expected_link_cost(e, strategy, network))
        .collect()
}

/// Expected costs of every path of every commodity, sharing one link-cost
/// pass.
pub fn expected_path_costs(strategy: &Strategy, network: &Network) -> Result<Vec<Vec<f64>>> {
    let link_costs = expected_link_costs(strategy, network)?;
    Ok((0..network.num_commodities())
        .map(|i| {
            network
                .paths(i)
                .iter()
                .map(|path| path.iter().map(|&e| link_costs[e]).sum())
                .collect()
        })
        .collect())
}

/// The social objective T(p) = sum over links of E[c_e(V_e) V_e].
pub fn expected_total_cost(strategy: &Strategy, network: &Network) -> Result<f64> {
    let mut acc = 0.0;
    for e in 0..network.num_edges() {
        acc += expected_link_total(e, strategy, network)?;
    }
    Ok(acc)
}
