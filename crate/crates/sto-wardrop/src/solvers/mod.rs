//! Equilibrium and optimum solvers, and the empirical price of anarchy.
//!
//! * [`solve_ue`] finds a mixed strategy at which every positive-probability
//!   path of a commodity attains that commodity's minimum expected cost
//!   (measured by the relative variational-inequality gap [`ue_gap`]).
//!   Affine instances use an exact-line-search descent on the potential
//!   sum_e int_0^{v_e} c_e; general polynomial instances iterate the
//!   best-response averaging scheme with the gap monitored every step.
//! * [`solve_so`] minimizes the expected total cost T(p) by multi-start
//!   projected gradient descent with the exact analytic gradient.
//! * [`compute_poa`] runs both and reports T(UE) / T(SO) next to every
//!   closed-form bound with its applicability verdict.

mod simplex;
mod so;
mod ue;

use serde::{Deserialize, Serialize};

use crate::bounds::{bound_reports, BoundReport};
use crate::costs;
use crate::error::{Error, Result};
use crate::moments::Strategy;
use crate::network::Network;

pub(crate) use simplex::project_blocks;

/// Step-size rule for the iterative solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    /// Averaging steps 1/(t+1) for the general equilibrium iteration.
    Msa,
    /// Exact line search on the affine potential; non-affine instances
    /// fall back to averaging steps.
    ExactLineSearchAffine,
    /// Backtracking line search (on the gap for the equilibrium iteration,
    /// on T for the optimum).
    Armijo,
}

/// Solver parameters. `Default` gives desk-scale settings; scenario files
/// may override any subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub relative_gap_tolerance: f64,
    pub so_gradient_tolerance: f64,
    /// Extra random starting points besides the uniform strategy.
    pub restarts: usize,
    pub step_rule: StepRule,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 10_000,
            relative_gap_tolerance: 1e-6,
            so_gradient_tolerance: 1e-8,
            restarts: 8,
            step_rule: StepRule::ExactLineSearchAffine,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidStrategy("max_iterations must be >= 1".into()));
        }
        if !(self.relative_gap_tolerance > 0.0) || !(self.so_gradient_tolerance > 0.0) {
            return Err(Error::InvalidStrategy("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Multi-start diagnostics of an equilibrium solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeDiagnostics {
    /// How many starts reached the gap tolerance.
    pub converged_starts: usize,
    pub total_starts: usize,
    /// Relative spread of T(p) across converged starts — a cheap
    /// uniqueness heuristic (near zero when every start finds the same
    /// equilibrium cost).
    pub total_cost_dispersion: f64,
    /// Which iteration family produced the returned strategy.
    pub algorithm: String,
}

/// Outcome of [`solve_ue`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub strategy: Strategy,
    /// Relative variational-inequality gap at `strategy`.
    pub relative_gap: f64,
    /// Iterations used by the run that produced `strategy`.
    pub iterations: usize,
    pub converged: bool,
    /// Per-commodity minimum expected path cost at `strategy`.
    pub min_expected_path_costs: Vec<f64>,
    pub diagnostics: UeDiagnostics,
}

/// Outcome of [`solve_so`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumResult {
    pub strategy: Strategy,
    /// Expected total cost at `strategy`, re-evaluated exactly.
    pub total_cost: f64,
    /// Scale-invariant stationarity measure: the sup-norm of
    /// p - proj(p - g/|g|_inf), zero exactly at stationary points.
    pub projected_gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub restarts_used: usize,
    /// True when more than one start was run and the best was kept.
    pub best_of_restarts: bool,
    /// True when converged starts disagree on T by more than 1e-6
    /// relative — the landscape may be non-convex and the result a local
    /// optimum.
    pub local_optimum_risk: bool,
}

/// Empirical price of anarchy with every bound verdict attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoAReport {
    pub poa: f64,
    pub t_ue: f64,
    pub t_so: f64,
    pub ue: EquilibriumResult,
    pub so: OptimumResult,
    pub bounds: Vec<BoundReport>,
    pub local_optimum_risk: bool,
}

pub use so::{solve_so, solve_so_with_starts, total_cost_gradient};
pub use ue::{solve_ue, solve_ue_from};

/// Relative variational-inequality gap of a strategy:
///
///   sum_i d_i (sum_k p_k^i E[c_k^i] - pi_i)  /  sum_i d_i pi_i,
///
/// where pi_i is commodity i's minimum expected path cost. The gap is zero
/// exactly at user equilibria. When the denominator vanishes (all expected
/// costs zero) the absolute numerator is returned instead, so a free
/// network reports gap zero rather than 0/0.
pub fn ue_gap(strategy: &Strategy, network: &Network) -> Result<f64> {
    let path_costs = costs::expected_path_costs(strategy, network)?;
    Ok(gap_from_costs(strategy, network, &path_costs).0)
}

/// Gap plus the per-commodity minimum expected path costs.
pub(crate) fn gap_from_costs(
    strategy: &Strategy,
    network: &Network,
    path_costs: &[Vec<f64>],
) -> (f64, Vec<f64>) {
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    let mut minima = Vec::with_capacity(network.num_commodities());
    for (i, costs_i) in path_costs.iter().enumerate() {
        let d = network.od_pair(i).demand.mean();
        let minimum = costs_i.iter().cloned().fold(f64::INFINITY, f64::min);
        let mixed: f64 = costs_i
            .iter()
            .enumerate()
            .map(|(k, &c)| strategy.prob(i, k) * c)
            .sum();
        numerator += d * (mixed - minimum);
        denominator += d * minimum;
        minima.push(minimum);
    }
    let numerator = numerator.max(0.0);
    let gap = if denominator < 1e-12 {
        numerator
    } else {
        numerator / denominator
    };
    (gap, minima)
}

/// Worst relative violation of the equilibrium condition over paths
/// carrying probability above `prob_floor`: max over such paths of
/// (E[c_k^i] - pi_i) / pi_i. Zero at an exact equilibrium.
pub fn wardrop_violation(
    strategy: &Strategy,
    network: &Network,
    prob_floor: f64,
) -> Result<f64> {
    let path_costs = costs::expected_path_costs(strategy, network)?;
    let mut worst: f64 = 0.0;
    for (i, costs_i) in path_costs.iter().enumerate() {
        let minimum = costs_i.iter().cloned().fold(f64::INFINITY, f64::min);
        for (k, &c) in costs_i.iter().enumerate() {
            if strategy.prob(i, k) > prob_floor {
                let excess = c - minimum;
                worst = worst.max(if minimum > 0.0 {
                    excess / minimum
                } else if excess > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                });
            }
        }
    }
    Ok(worst)
}

/// Solves both problems and reports the empirical price of anarchy
/// T(UE) / T(SO) with every theoretical bound's verdict. The optimum solve
/// is additionally warm-started from the equilibrium, so T(SO) <= T(UE)
/// holds by construction whenever the descent accepts the start.
pub fn compute_poa(network: &Network, config: &SolverConfig) -> Result<PoAReport> {
    config.validate()?;
    let ue = solve_ue(network, config)?;
    if !ue.converged {
        return Err(Error::NotConverged(format!(
            "user-equilibrium gap {} above tolerance {}",
            ue.relative_gap, config.relative_gap_tolerance
        )));
    }
    let so = solve_so_with_starts(network, config, std::slice::from_ref(&ue.strategy))?;
    if !so.converged {
        return Err(Error::NotConverged(format!(
            "optimum stationarity {} above tolerance {}",
            so.projected_gradient_norm, config.so_gradient_tolerance
        )));
    }
    let t_ue = costs::expected_total_cost(&ue.strategy, network)?;
    let t_so = so.total_cost;
    if !(t_so > 0.0) {
        return Err(Error::DegenerateCost(
            "optimal expected total cost is zero; the cost ratio is undefined".into(),
        ));
    }
    let poa = t_ue / t_so;
    let mut bounds = bound_reports(network)?;
    for bound in &mut bounds {
        if let Some(value) = bound.value {
            bound.margin = Some(value - poa);
            bound.holds = Some(poa <= value + 1e-6);
            bound.tight = Some((value - poa).abs() <= 1e-4 * value.abs());
        }
    }
    let local_optimum_risk = so.local_optimum_risk;
    Ok(PoAReport {
        poa,
        t_ue,
        t_so,
        ue,
        so,
        bounds,
        local_optimum_risk,
    })
}
