//! User-equilibrium solvers.
//!
//! Affine instances: expectation is linear, so expected path costs equal
//! deterministic path costs at the mean flows and the equilibrium is the
//! minimizer of the convex potential Z(p) = sum_e int_0^{v_e} c_e(x) dx.
//! We descend Z by sweeping the commodities, shifting probability from
//! each commodity's worst supported path to its best path with an exact
//! line search (Z is quadratic along any segment). The relative VI gap is
//! monitored every sweep and is the sole convergence criterion.
//!
//! General polynomial instances: no potential is available, so we iterate
//! best-response averaging — blend the current strategy toward the
//! all-mass-on-cheapest-path response, with averaging (1/(t+1)) or
//! backtracking steps — keeping the best-gap iterate seen. The gap is
//! monitored every iteration; convergence of the iteration itself is not
//! assumed anywhere. Averaging moves every commodity by a common step, so
//! near mixed equilibria it stalls; a second phase then sweeps the
//! commodities one at a time, shifting probability from each commodity's
//! most expensive supported path to its cheapest path until their expected
//! costs equalize (1-D bisection, everyone else held fixed). The sweeps
//! monitor the same gap and the best iterate over both phases is returned.

use crate::costs;
use crate::error::Result;
use crate::moments::Strategy;
use crate::network::Network;
use crate::rng::SampleRng;

use super::{gap_from_costs, EquilibriumResult, SolverConfig, StepRule, UeDiagnostics};

struct RunOutcome {
    probabilities: Vec<Vec<f64>>,
    gap: f64,
    iterations: usize,
    converged: bool,
}

/// Computes a user equilibrium from multiple starts (the uniform strategy
/// plus `config.restarts` random ones).
///
/// Among converged starts the one with the **largest** expected total cost
/// is returned: the price of anarchy is defined against the worst
/// equilibrium, and when the equilibrium is unique the choice is
/// immaterial. The spread of T across converged starts is reported as a
/// uniqueness heuristic. If no start converges, the best-gap strategy is
/// returned with `converged = false` (a soft failure).
pub fn solve_ue(network: &Network, config: &SolverConfig) -> Result<EquilibriumResult> {
    solve_ue_multistart(network, config, None)
}

/// Single-start variant: runs the equilibrium iteration from the given
/// strategy only. The best-gap iterate over the run is returned, and the
/// starting point itself is a candidate, so warm-starting from a previous
/// solution can never report a worse gap.
pub fn solve_ue_from(
    network: &Network,
    config: &SolverConfig,
    start: &Strategy,
) -> Result<EquilibriumResult> {
    start.check_shape(network)?;
    solve_ue_multistart(network, config, Some(start))
}

fn solve_ue_multistart(
    network: &Network,
    config: &SolverConfig,
    warm_start: Option<&Strategy>,
) -> Result<EquilibriumResult> {
    config.validate()?;
    let affine_fast_path =
        network.is_affine() && config.step_rule == StepRule::ExactLineSearchAffine;
    let algorithm = if affine_fast_path {
        "affine-potential-descent"
    } else {
        "best-response-averaging"
    };

    let restarts = if warm_start.is_some() { 0 } else { config.restarts };
    let mut runs = Vec::new();
    for start_index in 0..=restarts {
        let start = match (start_index, warm_start) {
            (0, Some(warm)) => warm.probabilities().to_vec(),
            (0, None) => Strategy::uniform(network).probabilities().to_vec(),
            _ => {
                let mut rng = SampleRng::for_stream(config.seed, start_index as u64);
                (0..network.num_commodities())
                    .map(|i| rng.next_simplex_point(network.num_paths(i)))
                    .collect()
            }
        };
        let outcome = if affine_fast_path {
            affine_potential_descent(network, config, start)
        } else {
            general_iteration(network, config, start)?
        };
        runs.push(outcome);
    }

    let tol = config.relative_gap_tolerance;
    let converged_starts = runs.iter().filter(|r| r.converged).count();

    let mut chosen: Option<(usize, f64)> = None; // (run index, T or -gap)
    let mut t_min = f64::INFINITY;
    let mut t_max = f64::NEG_INFINITY;
    for (idx, run) in runs.iter().enumerate() {
        if converged_starts > 0 {
            if !run.converged {
                continue;
            }
            let strategy = Strategy::new(run.probabilities.clone())?;
            let total = costs::expected_total_cost(&strategy, network)?;
            t_min = t_min.min(total);
            t_max = t_max.max(total);
            if chosen.map_or(true, |(_, best)| total > best) {
                chosen = Some((idx, total));
            }
        } else if chosen.map_or(true, |(_, best)| -run.gap > best) {
            chosen = Some((idx, -run.gap));
        }
    }
    let (chosen_idx, _) = chosen.expect("at least one start runs");
    let run = &runs[chosen_idx];

    let strategy = Strategy::new(run.probabilities.clone())?;
    let path_costs = costs::expected_path_costs(&strategy, network)?;
    let (gap, minima) = gap_from_costs(&strategy, network, &path_costs);
    let dispersion = if converged_starts > 0 && t_max.is_finite() {
        (t_max - t_min) / t_max.abs().max(1e-300)
    } else {
        f64::INFINITY
    };

    Ok(EquilibriumResult {
        strategy,
        relative_gap: gap,
        iterations: run.iterations,
        converged: gap <= tol,
        min_expected_path_costs: minima,
        diagnostics: UeDiagnostics {
            converged_starts,
            total_starts: runs.len(),
            total_cost_dispersion: dispersion,
            algorithm: algorithm.to_string(),
        },
    })
}

/// Mean link flows from raw probabilities.
fn mean_flows(network: &Network, probabilities: &[Vec<f64>]) -> Vec<f64> {
    let mut v = vec![0.0; network.num_edges()];
    for (e, through) in network.incidence().paths_through_edge.iter().enumerate() {
        for &(i, k) in through {
            v[e] += probabilities[i][k] * network.od_pair(i).demand.mean();
        }
    }
    v
}

/// Deterministic path costs at the mean flows (exact expected path costs
/// for affine instances).
fn affine_path_costs(network: &Network, v: &[f64]) -> Vec<Vec<f64>> {
    let link_costs: Vec<f64> = (0..network.num_edges())
        .map(|e| network.edge(e).cost.eval(v[e]))
        .collect();
    (0..network.num_commodities())
        .map(|i| {
            network
                .paths(i)
                .iter()
                .map(|path| path.iter().map(|&e| link_costs[e]).sum())
                .collect()
        })
        .collect()
}

fn affine_potential_descent(
    network: &Network,
    config: &SolverConfig,
    mut probabilities: Vec<Vec<f64>>,
) -> RunOutcome {
    let strategy_view = |p: &[Vec<f64>]| Strategy::from_raw(p.to_vec());
    let mut v = mean_flows(network, &probabilities);
    let mut best_gap = f64::INFINITY;
    let mut best = probabilities.clone();
    let mut iterations = 0;

    for sweep in 0..config.max_iterations {
        iterations = sweep + 1;
        let path_costs = affine_path_costs(network, &v);
        let (gap, _) = gap_from_costs(&strategy_view(&probabilities), network, &path_costs);
        if gap < best_gap {
            best_gap = gap;
            best = probabilities.clone();
        }
        if gap <= config.relative_gap_tolerance {
            break;
        }

        for i in 0..network.num_commodities() {
            let costs_i: Vec<f64> = network
                .paths(i)
                .iter()
                .map(|path| path.iter().map(|&e| network.edge(e).cost.eval(v[e])).sum())
                .collect();
            let Some((k_best, k_worst)) = best_and_worst_supported(&probabilities[i], &costs_i)
            else {
                continue;
            };
            if k_best == k_worst {
                continue;
            }
            let d = network.od_pair(i).demand.mean();
            // Flow change per unit of probability moved from worst to best.
            let mut w = vec![0.0; network.num_edges()];
            for &e in network.path(i, k_best) {
                w[e] += d;
            }
            for &e in network.path(i, k_worst) {
                w[e] -= d;
            }
            // Z(p + gamma move) is quadratic in gamma:
            //   quad = sum_e (a_e / 2) w_e^2, slope = sum_e c_e(v_e) w_e.
            let mut quad = 0.0;
            let mut slope = 0.0;
            for e in 0..network.num_edges() {
                if w[e] != 0.0 {
                    let (_, a) = network.edge(e).cost.as_affine().expect("affine instance");
                    quad += 0.5 * a * w[e] * w[e];
                    slope += network.edge(e).cost.eval(v[e]) * w[e];
                }
            }
            if slope >= 0.0 {
                continue;
            }
            let cap = probabilities[i][k_worst];
            let gamma = if quad > 0.0 {
                (-slope / (2.0 * quad)).min(cap)
            } else {
                cap
            };
            if gamma <= 0.0 {
                continue;
            }
            probabilities[i][k_best] += gamma;
            probabilities[i][k_worst] -= gamma;
            for e in 0..network.num_edges() {
                v[e] += gamma * w[e];
            }
        }
    }

    let final_costs = affine_path_costs(network, &mean_flows(network, &probabilities));
    let (gap, _) = gap_from_costs(&strategy_view(&probabilities), network, &final_costs);
    if gap < best_gap {
        best_gap = gap;
        best = probabilities;
    }
    RunOutcome {
        probabilities: best,
        gap: best_gap,
        iterations,
        converged: best_gap <= config.relative_gap_tolerance,
    }
}

/// Cheapest path overall and the most expensive path still carrying
/// probability. Ties break toward the lowest path index.
fn best_and_worst_supported(probs: &[f64], costs: &[f64]) -> Option<(usize, usize)> {
    if probs.len() < 2 {
        return None;
    }
    let mut k_best = 0;
    for (k, &c) in costs.iter().enumerate() {
        if c < costs[k_best] {
            k_best = k;
        }
    }
    let mut k_worst = None;
    for (k, &c) in costs.iter().enumerate() {
        if probs[k] > 1e-15 && k_worst.map_or(true, |w: usize| c > costs[w]) {
            k_worst = Some(k);
        }
    }
    Some((k_best, k_worst?))
}

/// The non-affine solve: best-response averaging, then equalization
/// sweeps if the averaging phase stalls above the tolerance.
fn general_iteration(
    network: &Network,
    config: &SolverConfig,
    start: Vec<Vec<f64>>,
) -> Result<RunOutcome> {
    let averaging = best_response_averaging(network, config, start)?;
    if averaging.converged {
        return Ok(averaging);
    }
    let sweeps = equalization_sweeps(network, config, averaging.probabilities.clone())?;
    let iterations = averaging.iterations + sweeps.iterations;
    let better = if sweeps.gap < averaging.gap { sweeps } else { averaging };
    Ok(RunOutcome {
        iterations,
        ..better
    })
}

fn best_response_averaging(
    network: &Network,
    config: &SolverConfig,
    mut probabilities: Vec<Vec<f64>>,
) -> Result<RunOutcome> {
    let gap_of = |p: &[Vec<f64>]| -> Result<f64> {
        let strategy = Strategy::from_raw(p.to_vec());
        let path_costs = costs::expected_path_costs(&strategy, network)?;
        Ok(gap_from_costs(&strategy, network, &path_costs).0)
    };

    let mut best_gap = f64::INFINITY;
    let mut best = probabilities.clone();
    let mut iterations = 0;
    let mut last_improvement = 0usize;

    for t in 0..config.max_iterations {
        iterations = t + 1;
        let strategy = Strategy::from_raw(probabilities.clone());
        let path_costs = costs::expected_path_costs(&strategy, network)?;
        let (gap, _) = gap_from_costs(&strategy, network, &path_costs);
        if gap < 0.99 * best_gap {
            last_improvement = t;
        }
        if gap < best_gap {
            best_gap = gap;
            best = probabilities.clone();
        }
        if gap <= config.relative_gap_tolerance {
            break;
        }
        // Averaging progress is O(1/t) at best; once it stalls, hand over
        // to the equalization sweeps instead of burning the budget.
        if t - last_improvement > 300 {
            break;
        }

        // Best response: all mass on the cheapest path (lowest index wins
        // ties, which `fold` below guarantees by strict comparison).
        let response: Vec<usize> = path_costs
            .iter()
            .map(|costs_i| {
                costs_i
                    .iter()
                    .enumerate()
                    .fold(0, |best_k, (k, &c)| if c < costs_i[best_k] { k } else { best_k })
            })
            .collect();

        let blend = |p: &[Vec<f64>], alpha: f64| -> Vec<Vec<f64>> {
            p.iter()
                .enumerate()
                .map(|(i, probs_i)| {
                    probs_i
                        .iter()
                        .enumerate()
                        .map(|(k, &x)| {
                            let target = if k == response[i] { 1.0 } else { 0.0 };
                            (1.0 - alpha) * x + alpha * target
                        })
                        .collect()
                })
                .collect()
        };

        let msa_alpha = 1.0 / (t as f64 + 2.0);
        probabilities = match config.step_rule {
            StepRule::Armijo => {
                // Backtrack from a full best-response step until the gap
                // improves; fall back to the averaging step if it never
                // does (progress is then driven by averaging alone).
                let mut alpha = 1.0;
                let mut accepted = None;
                for _ in 0..20 {
                    let candidate = blend(&probabilities, alpha);
                    if gap_of(&candidate)? < gap * (1.0 - 0.1 * alpha) {
                        accepted = Some(candidate);
                        break;
                    }
                    alpha *= 0.5;
                }
                accepted.unwrap_or_else(|| blend(&probabilities, msa_alpha))
            }
            _ => blend(&probabilities, msa_alpha),
        };
    }

    let final_gap = gap_of(&probabilities)?;
    if final_gap < best_gap {
        best_gap = final_gap;
        best = probabilities;
    }
    Ok(RunOutcome {
        probabilities: best,
        gap: best_gap,
        iterations,
        converged: best_gap <= config.relative_gap_tolerance,
    })
}

/// Gauss-Seidel phase: commodities take turns; each shifts probability
/// from its priciest supported path to its cheapest path until the two
/// expected costs meet (or the supported path drains). Only the active
/// commodity's strategy changes inside a move, so each move is a 1-D
/// root-finding problem in the transferred mass.
fn equalization_sweeps(
    network: &Network,
    config: &SolverConfig,
    mut probabilities: Vec<Vec<f64>>,
) -> Result<RunOutcome> {
    let max_sweeps = config.max_iterations.min(5_000);
    let mut best_gap = f64::INFINITY;
    let mut best = probabilities.clone();
    let mut iterations = 0;

    let commodity_costs = |p: &[Vec<f64>], i: usize| -> Result<Vec<f64>> {
        let strategy = Strategy::from_raw(p.to_vec());
        (0..network.num_paths(i))
            .map(|k| costs::expected_path_cost(i, k, &strategy, network))
            .collect()
    };

    for sweep in 0..max_sweeps {
        iterations = sweep + 1;
        let strategy = Strategy::from_raw(probabilities.clone());
        let path_costs = costs::expected_path_costs(&strategy, network)?;
        let (gap, _) = gap_from_costs(&strategy, network, &path_costs);
        if gap < best_gap {
            best_gap = gap;
            best = probabilities.clone();
        }
        if gap <= config.relative_gap_tolerance {
            break;
        }

        let mut moved_any = false;
        for i in 0..network.num_commodities() {
            for _ in 0..2 * network.num_paths(i) {
                let costs_i = commodity_costs(&probabilities, i)?;
                let Some((k_best, k_worst)) =
                    best_and_worst_supported(&probabilities[i], &costs_i)
                else {
                    break;
                };
                let spread = costs_i[k_worst] - costs_i[k_best];
                if k_best == k_worst
                    || spread <= 1e-14 * costs_i[k_best].abs().max(1e-300)
                {
                    break;
                }
                let cap = probabilities[i][k_worst];
                // Cost difference after moving `mass` from worst to best;
                // negative at 0, so either the worst path drains or the
                // costs cross inside (0, cap].
                let difference_at = |mass: f64| -> Result<f64> {
                    let mut p = probabilities.clone();
                    p[i][k_best] += mass;
                    p[i][k_worst] -= mass;
                    let s = Strategy::from_raw(p);
                    Ok(costs::expected_path_cost(i, k_best, &s, network)?
                        - costs::expected_path_cost(i, k_worst, &s, network)?)
                };
                let mass = if difference_at(cap)? <= 0.0 {
                    cap
                } else {
                    let (mut lo, mut hi) = (0.0f64, cap);
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        if difference_at(mid)? <= 0.0 {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    lo
                };
                if mass <= 0.0 {
                    break;
                }
                probabilities[i][k_best] += mass;
                probabilities[i][k_worst] -= mass;
                moved_any = true;
            }
        }
        if !moved_any {
            break;
        }
    }

    let strategy = Strategy::from_raw(probabilities.clone());
    let path_costs = costs::expected_path_costs(&strategy, network)?;
    let (gap, _) = gap_from_costs(&strategy, network, &path_costs);
    if gap < best_gap {
        best_gap = gap;
        best = probabilities;
    }
    Ok(RunOutcome {
        probabilities: best,
        gap: best_gap,
        iterations,
        converged: best_gap <= config.relative_gap_tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costs::PolynomialCost;
    use crate::demand::DemandDistribution;
    use crate::pigou;
    use crate::solvers::ue_gap;
    use approx::assert_relative_eq;

    #[test]
    fn two_link_equilibrium_sends_everyone_down() {
        for theta in [0.0, 0.25, 1.0] {
            let net = pigou::affine(theta, 1.0).unwrap();
            let result = solve_ue(&net, &SolverConfig::default()).unwrap();
            assert!(result.converged);
            assert!(result.relative_gap <= 1e-6);
            assert_relative_eq!(result.strategy.prob(0, 1), 1.0, epsilon = 1e-6);
            assert_relative_eq!(
                costs::expected_total_cost(&result.strategy, &net).unwrap(),
                pigou::affine_equilibrium_total(theta, 1.0),
                max_relative = 1e-5
            );
        }
    }

    #[test]
    fn identical_linear_links_split_evenly() {
        let mut b = Network::builder();
        b.edge("p1", "s", "t", PolynomialCost::new(vec![0.0, 1.0]).unwrap())
            .unwrap();
        b.edge("p2", "s", "t", PolynomialCost::new(vec![0.0, 1.0]).unwrap())
            .unwrap();
        b.od_pair("od", "s", "t", DemandDistribution::deterministic(2.0).unwrap())
            .unwrap();
        let net = b.build().unwrap();
        let result = solve_ue(&net, &SolverConfig::default()).unwrap();
        assert!(result.converged);
        assert_relative_eq!(result.strategy.prob(0, 0), 0.5, epsilon = 1e-5);
    }

    #[test]
    fn general_iteration_matches_affine_fast_path() {
        // Same affine instance solved by both routes: mean flows agree.
        let net = pigou::affine(0.5, 2.0).unwrap();
        let fast = solve_ue(&net, &SolverConfig::default()).unwrap();
        let msa = solve_ue(
            &net,
            &SolverConfig {
                step_rule: StepRule::Msa,
                max_iterations: 200_000,
                // The gap here scales like the squared distance from the
                // vertex equilibrium, so matching flows to 1e-4 needs a
                // much tighter gap.
                relative_gap_tolerance: 1e-9,
                ..SolverConfig::default()
            },
        )
        .unwrap();
        assert!(fast.converged && msa.converged);
        let v_fast = mean_flows(&net, fast.strategy.probabilities());
        let v_msa = mean_flows(&net, msa.strategy.probabilities());
        for (a, b) in v_fast.iter().zip(&v_msa) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
    }

    #[test]
    fn monomial_instances_converge_with_averaging() {
        for j in [2usize, 3] {
            for theta in [0.0, 0.5] {
                let net = pigou::monomial(j, theta, 1.0).unwrap();
                let result = solve_ue(&net, &SolverConfig::default()).unwrap();
                assert!(result.converged, "j={j} theta={theta}");
                // Everyone on the lower link is the equilibrium.
                assert!(result.strategy.prob(0, 1) > 1.0 - 1e-3);
                assert!(ue_gap(&result.strategy, &net).unwrap() <= 1e-6);
            }
        }
    }

    #[test]
    fn returned_minima_match_a_recomputation() {
        let net = pigou::affine(0.5, 1.0).unwrap();
        let result = solve_ue(&net, &SolverConfig::default()).unwrap();
        let path_costs = costs::expected_path_costs(&result.strategy, &net).unwrap();
        for (i, costs_i) in path_costs.iter().enumerate() {
            let minimum = costs_i.iter().cloned().fold(f64::INFINITY, f64::min);
            assert_relative_eq!(
                result.min_expected_path_costs[i],
                minimum,
                max_relative = 1e-12
            );
        }
    }

    /// Independent oracle for an affine three-path instance: enumerate
    /// supports, solve the equal-cost linear system on each support by
    /// Gaussian elimination, and keep the feasible equilibrium.
    #[test]
    fn affine_three_path_instance_matches_kkt_enumeration() {
        // Three parallel links with distinct affine costs.
        let costs_spec = [(1.0, 1.0), (1.5, 0.5), (2.0, 0.25)]; // (b0, slope)
        let demand = 3.0;
        let mut b = Network::builder();
        for (idx, (b0, a)) in costs_spec.iter().enumerate() {
            b.edge(
                &format!("p{idx}"),
                "s",
                "t",
                PolynomialCost::new(vec![*b0, *a]).unwrap(),
            )
            .unwrap();
        }
        b.od_pair("od", "s", "t", DemandDistribution::normal(demand, 0.9).unwrap())
            .unwrap();
        let net = b.build().unwrap();
        let result = solve_ue(&net, &SolverConfig::default()).unwrap();
        assert!(result.converged);

        // Oracle: for each support S, solve c_k(f_k) equal for k in S,
        // sum f = d, f >= 0, and no cheaper path outside S.
        let mut oracle_flows: Option<Vec<f64>> = None;
        for support in 1usize..8 {
            let members: Vec<usize> = (0..3).filter(|k| support & (1 << k) != 0).collect();
            // Unknowns: flows on members and the common cost c:
            // a_k f_k + b0_k = c; sum f_k = d.
            // Solve for c by substitution: f_k = (c - b0_k) / a_k.
            let (mut num, mut den) = (demand, 0.0);
            for &k in &members {
                num += costs_spec[k].0 / costs_spec[k].1;
                den += 1.0 / costs_spec[k].1;
            }
            let c = num / den;
            let flows: Vec<f64> = (0..3)
                .map(|k| {
                    if members.contains(&k) {
                        (c - costs_spec[k].0) / costs_spec[k].1
                    } else {
                        0.0
                    }
                })
                .collect();
            if flows.iter().any(|&f| f < -1e-9) {
                continue;
            }
            let feasible = (0..3).all(|k| {
                members.contains(&k) || costs_spec[k].0 + costs_spec[k].1 * flows[k] >= c - 1e-9
            });
            if feasible {
                oracle_flows = Some(flows);
                break;
            }
        }
        let oracle_flows = oracle_flows.expect("some support is feasible");
        let v = mean_flows(&net, result.strategy.probabilities());
        for (got, want) in v.iter().zip(&oracle_flows) {
            assert!((got - want).abs() < 1e-5, "flow {got} vs oracle {want}");
        }
    }
}
