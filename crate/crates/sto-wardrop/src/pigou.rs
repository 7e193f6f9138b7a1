//! Pigou-style two-link benchmark networks and their closed-form solutions.
//!
//! A single commodity routes a normal demand D ~ N(d, (theta d)^2) from s
//! to t over two parallel links. The upper link charges a constant equal to
//! an expected cost of the lower link's family; the lower link charges a
//! pure power of its flow:
//!
//! - affine family: upper cost d, lower cost x;
//! - monomial family of degree j: upper cost E[D^j], lower cost x^j.
//!
//! Sending everyone down the lower link is a user equilibrium (its expected
//! cost never exceeds the constant), while the optimal coordinator diverts
//! part of the traffic upward. Both the optimal split and the resulting
//! cost ratio have closed forms, which makes these networks the reference
//! fixtures for every solver and bound in this crate.

use crate::costs::PolynomialCost;
use crate::demand::DemandDistribution;
use crate::error::Result;
use crate::network::Network;
use crate::numeric;

/// Moment ratio E[D^j] / d^j of the normal demand with coefficient of
/// variation `theta`.
pub fn moment_coefficient(j: usize, theta: f64) -> f64 {
    numeric::normal_moment_ratio(j, theta)
}

/// The affine two-link network: upper cost d (constant), lower cost x,
/// demand N(d, (theta d)^2).
pub fn affine(theta: f64, d: f64) -> Result<Network> {
    let mut b = Network::builder();
    b.edge("upper", "s", "t", PolynomialCost::constant(d)?)?;
    b.edge("lower", "s", "t", PolynomialCost::new(vec![0.0, 1.0])?)?;
    b.od_pair("od", "s", "t", DemandDistribution::normal(d, theta * d)?)?;
    // Pin the path order: index 0 upper, index 1 lower.
    b.explicit_paths("od", &[vec!["upper".into()], vec!["lower".into()]])?;
    b.build()
}

/// The monomial two-link network of degree j: upper cost E[D^j] (constant),
/// lower cost x^j, demand N(d, (theta d)^2).
pub fn monomial(j: usize, theta: f64, d: f64) -> Result<Network> {
    let upper = moment_coefficient(j, theta) * d.powi(j as i32);
    let mut b = Network::builder();
    b.edge("upper", "s", "t", PolynomialCost::constant(upper)?)?;
    b.edge("lower", "s", "t", PolynomialCost::monomial(1.0, j)?)?;
    b.od_pair("od", "s", "t", DemandDistribution::normal(d, theta * d)?)?;
    b.explicit_paths("od", &[vec!["upper".into()], vec!["lower".into()]])?;
    b.build()
}

/// Optimal probability of the lower link in the affine network:
/// 1 / (2 (1 + theta^2)).
pub fn affine_optimal_lower_prob(theta: f64) -> f64 {
    1.0 / (2.0 * (1.0 + theta * theta))
}

/// Expected total cost of the all-lower equilibrium in the affine network:
/// (1 + theta^2) d^2.
pub fn affine_equilibrium_total(theta: f64, d: f64) -> f64 {
    (1.0 + theta * theta) * d * d
}

/// Expected total cost at the optimum of the affine network:
/// (4 theta^2 + 3) d^2 / (4 (1 + theta^2)).
pub fn affine_optimal_total(theta: f64, d: f64) -> f64 {
    (4.0 * theta * theta + 3.0) * d * d / (4.0 * (1.0 + theta * theta))
}

/// Cost ratio of the affine network: 4 (1 + theta^2)^2 / (3 + 4 theta^2).
pub fn affine_poa(theta: f64) -> f64 {
    let g2 = 1.0 + theta * theta;
    4.0 * g2 * g2 / (3.0 + 4.0 * theta * theta)
}

/// Optimal probability of the lower link in the degree-j monomial network:
/// (g_j / (g_(j+1) (j + 1)))^(1/j), where g_j is the order-j moment ratio.
pub fn monomial_optimal_lower_prob(j: usize, theta: f64) -> f64 {
    assert!(j >= 1);
    let g_j = moment_coefficient(j, theta);
    let g_next = moment_coefficient(j + 1, theta);
    (g_j / (g_next * (j as f64 + 1.0))).powf(1.0 / j as f64)
}

/// Expected total cost of the all-lower equilibrium in the monomial
/// network: E[D^(j+1)] = g_(j+1) d^(j+1).
pub fn monomial_equilibrium_total(j: usize, theta: f64, d: f64) -> f64 {
    moment_coefficient(j + 1, theta) * d.powi(j as i32 + 1)
}

/// Expected total cost at the optimum of the degree-j monomial network.
pub fn monomial_optimal_total(j: usize, theta: f64, d: f64) -> f64 {
    let g_j = moment_coefficient(j, theta);
    let p = monomial_optimal_lower_prob(j, theta);
    (1.0 - (j as f64 / (j as f64 + 1.0)) * p) * g_j * d.powi(j as i32 + 1)
}

/// Cost ratio of the degree-j monomial network.
pub fn monomial_poa(j: usize, theta: f64) -> f64 {
    let g_j = moment_coefficient(j, theta);
    let g_next = moment_coefficient(j + 1, theta);
    let p = (g_j / (g_next * (j as f64 + 1.0))).powf(1.0 / j as f64);
    1.0 / (g_j / g_next - (g_j * j as f64 / (g_next * (j as f64 + 1.0))) * p)
}
