//! Routing games on congested networks with stochastic, independent
//! origin-destination demands.
//!
//! Travelers play mixed strategies over fixed path sets; link flows are
//! probability-weighted sums of random demands. This crate computes, for
//! polynomial link costs:
//!
//! - exact raw moments of every link flow, and the expected-cost layer
//!   built on them ([`moments`], [`costs`]);
//! - user-equilibrium strategies (no traveler can reduce their expected
//!   cost unilaterally) and system-optimum strategies (minimum expected
//!   total cost) ([`solvers`]);
//! - the empirical price of anarchy and three closed-form upper bounds on
//!   it — affine costs, polynomial costs with positive-valued demands, and
//!   polynomial costs with normal demands — each with its applicability
//!   condition ([`bounds`]);
//! - a bit-reproducible Monte Carlo oracle that validates every analytic
//!   expectation by simulation ([`montecarlo`]).
//!
//! The [`pigou`] module ships the canonical two-link benchmark networks
//! whose equilibria, optima and cost ratios are known in closed form; the
//! test suites and the command-line front end reproduce those values.
//!
//! See the `book/` directory of the repository for a guided tour. Code
//! blocks in the book compile and run as doc-tests of the companion guide
//! crate, so the narrative stays in sync with the library.

#![forbid(unsafe_code)]

mod error;
mod numeric;

pub mod bounds;
pub mod costs;
pub mod demand;
pub mod moments;
pub mod montecarlo;
pub mod network;
pub mod pigou;
pub mod rng;
pub mod solvers;

pub use bounds::{
    affine_bound, anarchy_bound_normal, anarchy_bound_positive, anarchy_value_monomial_normal,
    anarchy_value_monomial_positive, bound_reports, lambda_of, max_applicable_cv,
    max_uniform_ratio, moment_floor, theta_threshold, AuxFunctions, BoundReport, BoundVariant,
};
pub use costs::{
    expected_link_cost, expected_link_total, expected_path_cost, expected_total_cost,
    PolynomialCost,
};
pub use demand::{demand_stats, DemandDistribution, DemandStats};
pub use error::{Error, Result};
pub use moments::{
    link_choice_probs, link_cross_moment, link_flow_stats, link_raw_moment, LinkFlowStats,
    Strategy,
};
pub use montecarlo::{simulate_link_cost, simulate_link_moment, simulate_total_cost, McEstimate};
pub use network::{build_incidence, split_to_monomials, Incidence, Network, NetworkBuilder};
pub use solvers::{
    compute_poa, solve_so, solve_ue, solve_ue_from, total_cost_gradient, ue_gap,
    wardrop_violation,
    EquilibriumResult, OptimumResult, PoAReport, SolverConfig, StepRule,
};
