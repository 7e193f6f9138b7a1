//! System-optimum solver: multi-start projected descent on the expected
//! total cost T(p), with exact first and second derivatives.
//!
//! Writing q_e^i for the link-choice probabilities, T(p) =
//! sum_e sum_j b_ej E[V_e^(j+1)] and
//!
//!   dT/dp_k^i        = sum over edges e on path k of
//!                      sum_j b_ej (j + 1) E[V_e^j D_i],
//!   d2T/dp_k^i dp_l^h = sum over edges e on both paths of
//!                      sum_j b_ej (j + 1) j E[V_e^(j-1) D_i D_h],
//!
//! with all moments computed exactly by the moments module. Each iteration
//! takes a Newton step restricted to the current face of the simplex
//! product (an equality-constrained solve on the paths that carry
//! probability or want to enter), with an exact line search driven by the
//! directional derivative; when the Newton system is unhelpful — singular,
//! or pointing uphill on a non-convex instance — the iteration falls back
//! to a projected gradient direction. Deterministic demands make whole
//! commodity-identity directions nearly flat, which stalls first-order
//! methods; the Newton step is what keeps convergence fast there.
//!
//! T can be non-convex for normal demands with odd-degree cost terms, so
//! the solver restarts from random simplex points and keeps the best;
//! when converged starts disagree on T the result carries
//! `local_optimum_risk`.

use crate::costs;
use crate::error::Result;
use crate::moments::{self, Strategy};
use crate::network::Network;
use crate::rng::SampleRng;

use super::{project_blocks, OptimumResult, SolverConfig};

/// Minimizes T(p) over the product of path simplices.
pub fn solve_so(network: &Network, config: &SolverConfig) -> Result<OptimumResult> {
    solve_so_with_starts(network, config, &[])
}

/// As [`solve_so`], with additional caller-supplied starting points (the
/// price-of-anarchy report warm-starts from the equilibrium so the optimum
/// can never come out worse).
pub fn solve_so_with_starts(
    network: &Network,
    config: &SolverConfig,
    extra_starts: &[Strategy],
) -> Result<OptimumResult> {
    config.validate()?;
    let mut starts: Vec<Vec<Vec<f64>>> =
        vec![Strategy::uniform(network).probabilities().to_vec()];
    for restart in 0..config.restarts {
        let mut rng = SampleRng::for_stream(config.seed ^ 0x50_4744, restart as u64);
        starts.push(
            (0..network.num_commodities())
                .map(|i| rng.next_simplex_point(network.num_paths(i)))
                .collect(),
        );
    }
    for s in extra_starts {
        starts.push(s.probabilities().to_vec());
    }

    let mut best: Option<Descent> = None;
    let mut converged_totals: Vec<f64> = Vec::new();
    for start in &starts {
        let run = descend(network, config, start.clone())?;
        if run.converged {
            converged_totals.push(run.total);
        }
        if best.as_ref().map_or(true, |b| run.total < b.total) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one start runs");

    let local_optimum_risk = if converged_totals.len() > 1 {
        let lo = converged_totals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = converged_totals
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        (hi - lo) > 1e-6 * hi.abs().max(1e-300)
    } else {
        false
    };

    let strategy = Strategy::new(best.probabilities)?;
    let total_cost = costs::expected_total_cost(&strategy, network)?;
    Ok(OptimumResult {
        strategy,
        total_cost,
        projected_gradient_norm: best.stationarity,
        iterations: best.iterations,
        converged: best.converged,
        restarts_used: starts.len(),
        best_of_restarts: starts.len() > 1,
        local_optimum_risk,
    })
}

/// Exact gradient of T at the given strategy.
pub fn total_cost_gradient(strategy: &Strategy, network: &Network) -> Result<Vec<Vec<f64>>> {
    strategy.check_shape(network)?;
    // Per-edge, per-commodity marginal: sum_j b_ej (j + 1) E[V_e^j D_i].
    let mut marginal: Vec<Vec<f64>> =
        vec![vec![0.0; network.num_commodities()]; network.num_edges()];
    for e in 0..network.num_edges() {
        let coefficients = network.edge(e).cost.coefficients();
        for i in 0..network.num_commodities() {
            if !network.incidence().commodity_uses_edge[i][e] {
                continue;
            }
            let mut acc = 0.0;
            for (j, &b) in coefficients.iter().enumerate() {
                if b > 0.0 {
                    acc += b
                        * (j as f64 + 1.0)
                        * moments::link_cross_moment(e, j, i, strategy, network)?;
                }
            }
            marginal[e][i] = acc;
        }
    }
    let mut gradient: Vec<Vec<f64>> = (0..network.num_commodities())
        .map(|i| vec![0.0; network.num_paths(i)])
        .collect();
    for i in 0..network.num_commodities() {
        for k in 0..network.num_paths(i) {
            gradient[i][k] = network.path(i, k).iter().map(|&e| marginal[e][i]).sum();
        }
    }
    Ok(gradient)
}

/// Flat indexing over (commodity, path) pairs.
struct PathIndex {
    offsets: Vec<usize>,
    dim: usize,
}

impl PathIndex {
    fn new(network: &Network) -> Self {
        let mut offsets = Vec::with_capacity(network.num_commodities());
        let mut dim = 0;
        for i in 0..network.num_commodities() {
            offsets.push(dim);
            dim += network.num_paths(i);
        }
        Self { offsets, dim }
    }

    fn flat(&self, commodity: usize, path: usize) -> usize {
        self.offsets[commodity] + path
    }
}

/// Exact Hessian of T, as a dense matrix over the flat path index.
fn total_cost_hessian(
    strategy: &Strategy,
    network: &Network,
    index: &PathIndex,
) -> Result<Vec<Vec<f64>>> {
    let mut hessian = vec![vec![0.0; index.dim]; index.dim];
    for e in 0..network.num_edges() {
        let through = &network.incidence().paths_through_edge[e];
        if through.is_empty() {
            continue;
        }
        let coefficients = network.edge(e).cost.coefficients();
        if coefficients.iter().skip(1).all(|&b| b == 0.0) {
            continue; // constant cost: no curvature
        }
        // Commodities with a path through e.
        let mut commodities: Vec<usize> = through.iter().map(|&(i, _)| i).collect();
        commodities.dedup();
        // Pairwise curvature h[i][h'] = sum_j b_ej (j+1) j E[V^(j-1) D_i D_h].
        let mut curvature = vec![vec![0.0; commodities.len()]; commodities.len()];
        for (a, &i) in commodities.iter().enumerate() {
            for (b_idx, &h) in commodities.iter().enumerate().skip(a) {
                let mut acc = 0.0;
                for (j, &b) in coefficients.iter().enumerate().skip(1) {
                    if b > 0.0 {
                        acc += b
                            * (j as f64 + 1.0)
                            * j as f64
                            * moments::link_double_cross_moment(e, j - 1, i, h, strategy, network)?;
                    }
                }
                curvature[a][b_idx] = acc;
                curvature[b_idx][a] = acc;
            }
        }
        let position = |i: usize| commodities.iter().position(|&c| c == i).unwrap();
        for &(i, k) in through {
            for &(h, l) in through {
                hessian[index.flat(i, k)][index.flat(h, l)] +=
                    curvature[position(i)][position(h)];
            }
        }
    }
    Ok(hessian)
}

struct Descent {
    probabilities: Vec<Vec<f64>>,
    total: f64,
    stationarity: f64,
    iterations: usize,
    converged: bool,
}

/// Scale-invariant stationarity: |p - proj(p - g / |g|_inf)|_inf. Invariant
/// under positive rescaling of the costs and zero exactly at stationary
/// points.
fn stationarity_measure(probabilities: &[Vec<f64>], gradient: &[Vec<f64>]) -> f64 {
    let scale = gradient
        .iter()
        .flat_map(|g| g.iter().map(|x| x.abs()))
        .fold(0.0f64, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let stepped: Vec<Vec<f64>> = probabilities
        .iter()
        .zip(gradient)
        .map(|(p, g)| p.iter().zip(g).map(|(&x, &d)| x - d / scale).collect())
        .collect();
    let projected = project_blocks(&stepped);
    probabilities
        .iter()
        .zip(&projected)
        .flat_map(|(p, q)| p.iter().zip(q).map(|(&a, &b)| (a - b).abs()))
        .fold(0.0f64, f64::max)
}

/// Dense linear solve by Gaussian elimination with partial pivoting.
/// Returns `None` for (numerically) singular systems.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| {
            a[r][col].abs().partial_cmp(&a[s][col].abs()).unwrap()
        })?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for c in col..n {
                    a[row][c] -= factor * a[col][c];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for c in row + 1..n {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

/// Newton direction on the current face: free variables are the paths
/// carrying probability plus any path strictly cheaper (in marginal cost)
/// than its commodity's cheapest supported path; the direction solves the
/// equality-constrained quadratic model (one mass-conservation row per
/// commodity). `None` when the KKT system is singular or the direction is
/// not a descent direction.
fn newton_direction(
    network: &Network,
    index: &PathIndex,
    probabilities: &[Vec<f64>],
    gradient: &[Vec<f64>],
    hessian: &[Vec<f64>],
) -> Option<Vec<Vec<f64>>> {
    let mut free = vec![false; index.dim];
    let mut commodity_rows = Vec::with_capacity(network.num_commodities());
    for i in 0..network.num_commodities() {
        let supported_min = (0..network.num_paths(i))
            .filter(|&k| probabilities[i][k] > 1e-12)
            .map(|k| gradient[i][k])
            .fold(f64::INFINITY, f64::min);
        let mut row = Vec::new();
        for k in 0..network.num_paths(i) {
            let flat = index.flat(i, k);
            if probabilities[i][k] > 1e-12
                || gradient[i][k] < supported_min - 1e-12 * supported_min.abs()
            {
                free[flat] = true;
                row.push(flat);
            }
        }
        commodity_rows.push(row);
    }

    let free_list: Vec<usize> = (0..index.dim).filter(|&f| free[f]).collect();
    let nf = free_list.len();
    let nc = commodity_rows.len();
    let position: Vec<Option<usize>> = {
        let mut map = vec![None; index.dim];
        for (pos, &f) in free_list.iter().enumerate() {
            map[f] = Some(pos);
        }
        map
    };

    // KKT system: [H A^T; A 0] [delta; mu] = [-g; 0].
    let n = nf + nc;
    let mut matrix = vec![vec![0.0; n]; n];
    let mut rhs = vec![0.0; n];
    let mut curvature_scale = 0.0f64;
    for (row, &fr) in free_list.iter().enumerate() {
        for (col, &fc) in free_list.iter().enumerate() {
            matrix[row][col] = hessian[fr][fc];
            curvature_scale = curvature_scale.max(hessian[fr][fc].abs());
        }
    }
    // Tiny ridge keeps flat directions solvable without disturbing the
    // step where curvature is real.
    let ridge = 1e-10 * curvature_scale.max(1e-300);
    for row in 0..nf {
        matrix[row][row] += ridge;
    }
    let mut flat_gradient = vec![0.0; index.dim];
    for i in 0..network.num_commodities() {
        for k in 0..network.num_paths(i) {
            flat_gradient[index.flat(i, k)] = gradient[i][k];
        }
    }
    for (row, &fr) in free_list.iter().enumerate() {
        rhs[row] = -flat_gradient[fr];
    }
    for (c, row_members) in commodity_rows.iter().enumerate() {
        for &flat in row_members {
            let pos = position[flat].unwrap();
            matrix[nf + c][pos] = 1.0;
            matrix[pos][nf + c] = 1.0;
        }
        rhs[nf + c] = 0.0;
    }

    let solution = solve_linear(matrix, rhs)?;
    let mut direction: Vec<Vec<f64>> = (0..network.num_commodities())
        .map(|i| vec![0.0; network.num_paths(i)])
        .collect();
    let mut slope = 0.0;
    for i in 0..network.num_commodities() {
        for k in 0..network.num_paths(i) {
            if let Some(pos) = position[index.flat(i, k)] {
                direction[i][k] = solution[pos];
                slope += gradient[i][k] * solution[pos];
            }
        }
    }
    if !(slope < 0.0) {
        return None;
    }
    Some(direction)
}

fn descend(network: &Network, config: &SolverConfig, start: Vec<Vec<f64>>) -> Result<Descent> {
    let index = PathIndex::new(network);
    let gradient_of = |p: &[Vec<f64>]| -> Result<Vec<Vec<f64>>> {
        total_cost_gradient(&Strategy::from_raw(p.to_vec()), network)
    };
    let inner = |a: &[Vec<f64>], b: &[Vec<f64>]| -> f64 {
        a.iter()
            .zip(b)
            .flat_map(|(x, y)| x.iter().zip(y).map(|(&u, &v)| u * v))
            .sum()
    };

    let mut probabilities = project_blocks(&start);
    let mut stationarity = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    for iter in 0..config.max_iterations {
        iterations = iter + 1;
        let gradient = gradient_of(&probabilities)?;
        stationarity = stationarity_measure(&probabilities, &gradient);
        if stationarity <= config.so_gradient_tolerance {
            converged = true;
            break;
        }

        let strategy = Strategy::from_raw(probabilities.clone());
        let hessian = total_cost_hessian(&strategy, network, &index)?;
        let newton =
            newton_direction(network, &index, &probabilities, &gradient, &hessian);

        // Fallback: projected-gradient direction (normalized step keeps it
        // scale-invariant); moving to p + t * d stays feasible for t <= 1.
        let direction = match newton {
            Some(direction) => direction,
            None => {
                let scale = gradient
                    .iter()
                    .flat_map(|g| g.iter().map(|x| x.abs()))
                    .fold(0.0f64, f64::max);
                let stepped: Vec<Vec<f64>> = probabilities
                    .iter()
                    .zip(&gradient)
                    .map(|(p, g)| p.iter().zip(g).map(|(&x, &d)| x - d / scale).collect())
                    .collect();
                let target = project_blocks(&stepped);
                target
                    .iter()
                    .zip(&probabilities)
                    .map(|(t, p)| t.iter().zip(p).map(|(&a, &b)| a - b).collect())
                    .collect()
            }
        };
        if inner(&gradient, &direction) >= 0.0 {
            break; // numerically stationary
        }

        // Largest feasible step: each shrinking coordinate may reach zero.
        let mut cap = f64::INFINITY;
        for i in 0..network.num_commodities() {
            for k in 0..network.num_paths(i) {
                if direction[i][k] < 0.0 {
                    cap = cap.min(probabilities[i][k] / -direction[i][k]);
                }
            }
        }
        let cap = cap.min(1.0);
        if !(cap > 0.0) {
            break;
        }

        // Exact line search via the directional derivative
        // phi'(t) = <grad T(p + t d), d>; the analytic gradient keeps this
        // accurate even where T is flat to machine precision.
        let blend = |t: f64| -> Vec<Vec<f64>> {
            probabilities
                .iter()
                .zip(&direction)
                .map(|(p, d)| {
                    p.iter()
                        .zip(d)
                        .map(|(&x, &dx)| (x + t * dx).max(0.0))
                        .collect()
                })
                .collect()
        };
        let slope_at =
            |t: f64| -> Result<f64> { Ok(inner(&gradient_of(&blend(t))?, &direction)) };
        let step = if slope_at(cap)? <= 0.0 {
            cap
        } else {
            let (mut lo, mut hi) = (0.0f64, cap);
            for _ in 0..50 {
                let mid = 0.5 * (lo + hi);
                if slope_at(mid)? <= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        if step <= 0.0 {
            break;
        }
        probabilities = blend(step);
        for block in &mut probabilities {
            let sum: f64 = block.iter().sum();
            for x in block.iter_mut() {
                *x /= sum;
            }
        }
    }

    let total =
        costs::expected_total_cost(&Strategy::from_raw(probabilities.clone()), network)?;
    Ok(Descent {
        probabilities,
        total,
        stationarity,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pigou;
    use crate::solvers::StepRule;
    use approx::assert_relative_eq;

    #[test]
    fn two_link_optimum_matches_closed_form() {
        for theta in [0.0, 0.25, 0.5, 1.0] {
            let net = pigou::affine(theta, 1.0).unwrap();
            let result = solve_so(&net, &SolverConfig::default()).unwrap();
            assert!(result.converged, "theta = {theta}");
            assert_relative_eq!(
                result.strategy.prob(0, 1),
                pigou::affine_optimal_lower_prob(theta),
                epsilon = 1e-6
            );
            assert_relative_eq!(
                result.total_cost,
                pigou::affine_optimal_total(theta, 1.0),
                max_relative = 1e-8
            );
        }
    }

    #[test]
    fn monomial_optimum_matches_closed_form() {
        for j in [1usize, 2, 3] {
            for theta in [0.0, 0.5] {
                let net = pigou::monomial(j, theta, 1.0).unwrap();
                let result = solve_so(&net, &SolverConfig::default()).unwrap();
                assert!(result.converged, "j={j} theta={theta}");
                assert_relative_eq!(
                    result.strategy.prob(0, 1),
                    pigou::monomial_optimal_lower_prob(j, theta),
                    epsilon = 1e-5
                );
                assert_relative_eq!(
                    result.total_cost,
                    pigou::monomial_optimal_total(j, theta, 1.0),
                    max_relative = 1e-7
                );
            }
        }
    }

    #[test]
    fn identical_linear_links_split_evenly_at_optimum() {
        use crate::costs::PolynomialCost;
        use crate::demand::DemandDistribution;
        let mut b = Network::builder();
        b.edge("p1", "s", "t", PolynomialCost::new(vec![0.0, 1.0]).unwrap())
            .unwrap();
        b.edge("p2", "s", "t", PolynomialCost::new(vec![0.0, 1.0]).unwrap())
            .unwrap();
        b.od_pair("od", "s", "t", DemandDistribution::deterministic(1.0).unwrap())
            .unwrap();
        let net = b.build().unwrap();
        let result = solve_so(&net, &SolverConfig::default()).unwrap();
        assert!(result.converged);
        assert_relative_eq!(result.strategy.prob(0, 0), 0.5, epsilon = 1e-6);
        assert_relative_eq!(result.total_cost, 0.5, max_relative = 1e-9);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        // Five-point central differences on a smooth polynomial objective;
        // T extends smoothly off the simplex so coordinate probes are fine.
        let net = pigou::monomial(3, 0.4, 1.2).unwrap();
        let mut rng = SampleRng::for_stream(99, 0);
        for _ in 0..10 {
            let probs: Vec<Vec<f64>> = (0..net.num_commodities())
                .map(|i| rng.next_simplex_point(net.num_paths(i)))
                .collect();
            let strategy = Strategy::from_raw(probs.clone());
            let analytic = total_cost_gradient(&strategy, &net).unwrap();
            let scale = analytic
                .iter()
                .flat_map(|g| g.iter().map(|x| x.abs()))
                .fold(0.0f64, f64::max);
            let h = 1e-3;
            for i in 0..net.num_commodities() {
                for k in 0..net.num_paths(i) {
                    let t_at = |delta: f64| -> f64 {
                        let mut p = probs.clone();
                        p[i][k] += delta;
                        costs::expected_total_cost(&Strategy::from_raw(p), &net).unwrap()
                    };
                    let fd = (8.0 * (t_at(h) - t_at(-h)) - (t_at(2.0 * h) - t_at(-2.0 * h)))
                        / (12.0 * h);
                    let denom = analytic[i][k].abs().max(fd.abs()).max(1e-3 * scale);
                    assert!(
                        (analytic[i][k] - fd).abs() / denom < 1e-5,
                        "grad[{i}][{k}]: {} vs fd {}",
                        analytic[i][k],
                        fd
                    );
                }
            }
        }
    }

    #[test]
    fn hessian_matches_finite_differences_of_the_gradient() {
        use crate::costs::PolynomialCost;
        use crate::demand::DemandDistribution;
        // Two commodities sharing a quadratic middle edge.
        let mut b = Network::builder();
        b.edge("a", "s1", "m0", PolynomialCost::new(vec![0.2, 1.0]).unwrap())
            .unwrap();
        b.edge("m", "m0", "m1", PolynomialCost::new(vec![0.1, 0.5, 0.8]).unwrap())
            .unwrap();
        b.edge("z", "m1", "t1", PolynomialCost::new(vec![0.3, 0.0, 1.0]).unwrap())
            .unwrap();
        b.edge("d", "s1", "t1", PolynomialCost::new(vec![1.0, 2.0]).unwrap())
            .unwrap();
        b.edge("b", "s2", "m0", PolynomialCost::new(vec![0.4, 0.7]).unwrap())
            .unwrap();
        b.edge("y", "m1", "t2", PolynomialCost::new(vec![0.2, 0.3]).unwrap())
            .unwrap();
        b.edge("c", "s2", "t2", PolynomialCost::new(vec![0.9, 1.0]).unwrap())
            .unwrap();
        b.od_pair("od1", "s1", "t1", DemandDistribution::normal(1.0, 0.4).unwrap())
            .unwrap();
        b.od_pair("od2", "s2", "t2", DemandDistribution::uniform(0.8, 1.6).unwrap())
            .unwrap();
        let net = b.build().unwrap();
        let index = PathIndex::new(&net);
        let mut rng = SampleRng::for_stream(55, 1);
        for _ in 0..5 {
            let probs: Vec<Vec<f64>> = (0..net.num_commodities())
                .map(|i| rng.next_simplex_point(net.num_paths(i)))
                .collect();
            let strategy = Strategy::from_raw(probs.clone());
            let hessian = total_cost_hessian(&strategy, &net, &index).unwrap();
            let h = 1e-4;
            for i in 0..net.num_commodities() {
                for k in 0..net.num_paths(i) {
                    let grad_at = |delta: f64| -> Vec<Vec<f64>> {
                        let mut p = probs.clone();
                        p[i][k] += delta;
                        total_cost_gradient(&Strategy::from_raw(p), &net).unwrap()
                    };
                    let up = grad_at(h);
                    let down = grad_at(-h);
                    for ii in 0..net.num_commodities() {
                        for kk in 0..net.num_paths(ii) {
                            let fd = (up[ii][kk] - down[ii][kk]) / (2.0 * h);
                            let exact = hessian[index.flat(i, k)][index.flat(ii, kk)];
                            assert!(
                                (fd - exact).abs() <= 1e-6 * exact.abs().max(1.0),
                                "H[{i}{k}][{ii}{kk}] {exact} vs fd {fd}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn scaling_costs_rescales_total_but_not_strategy() {
        use crate::costs::PolynomialCost;
        use crate::demand::DemandDistribution;
        let lambda = 3.7;
        let build = |scale: f64| {
            let mut b = Network::builder();
            b.edge(
                "upper",
                "s",
                "t",
                PolynomialCost::new(vec![scale * 1.0]).unwrap(),
            )
            .unwrap();
            b.edge(
                "lower",
                "s",
                "t",
                PolynomialCost::new(vec![0.0, scale * 1.0]).unwrap(),
            )
            .unwrap();
            b.od_pair("od", "s", "t", DemandDistribution::normal(1.0, 0.5).unwrap())
                .unwrap();
            b.build().unwrap()
        };
        let base = solve_so(&build(1.0), &SolverConfig::default()).unwrap();
        let scaled = solve_so(&build(lambda), &SolverConfig::default()).unwrap();
        assert!(base.converged && scaled.converged);
        assert_relative_eq!(
            base.strategy.prob(0, 1),
            scaled.strategy.prob(0, 1),
            epsilon = 1e-6
        );
        assert_relative_eq!(
            scaled.total_cost,
            lambda * base.total_cost,
            max_relative = 1e-8
        );
    }

    #[test]
    fn warm_start_from_equilibrium_never_loses() {
        let net = pigou::monomial(2, 0.5, 1.0).unwrap();
        let config = SolverConfig {
            step_rule: StepRule::Msa,
            ..SolverConfig::default()
        };
        let ue = crate::solvers::solve_ue(&net, &config).unwrap();
        let t_ue = costs::expected_total_cost(&ue.strategy, &net).unwrap();
        let so = solve_so_with_starts(&net, &config, &[ue.strategy]).unwrap();
        assert!(so.total_cost <= t_ue + 1e-9);
    }
}
