//! Simulation oracle for the analytic engine.
//!
//! Every analytic expectation in this crate — link moments, expected link
//! costs, the total cost T(p) — has a sampling counterpart here. One
//! sample draws each commodity's demand, realizes path flows as
//! probability-weighted demand shares, sums them into link flows, and
//! evaluates the requested statistic.
//!
//! Estimates are **bit-reproducible**: sample s draws from its own RNG
//! stream derived from (seed, s), samples are aggregated per fixed-size
//! chunk, and the chunk summaries are merged in chunk order. Parallel and
//! sequential runs, with any worker count, produce identical bits. Worker
//! counts can be capped by running inside a configured rayon pool.
//!
//! Normal demands are sampled untruncated — negative draws are evaluated
//! through the polynomial costs on the whole real line — because the
//! analytic formulas this oracle validates integrate over all reals.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::moments::{link_choice_probs, Strategy};
use crate::network::Network;
use crate::rng::SampleRng;

const CHUNK: u64 = 8192;

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    /// Sample standard deviation over sqrt(samples).
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Streaming mean/variance accumulator with an order-stable merge
/// (Chan et al. pairwise update). Used per chunk and then merged in chunk
/// order so results do not depend on scheduling.
#[derive(Debug, Clone, Copy, Default)]
struct RunningMoments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Self) -> Self {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2
            + other.m2
            + delta * delta * self.count as f64 * other.count as f64 / count as f64;
        Self { count, mean, m2 }
    }

    fn finish(self, seed: u64) -> McEstimate {
        let variance = if self.count > 1 {
            (self.m2 / (self.count as f64 - 1.0)).max(0.0)
        } else {
            0.0
        };
        McEstimate {
            estimate: self.mean,
            std_error: (variance / self.count as f64).sqrt(),
            samples: self.count,
            seed,
        }
    }
}

/// Runs `samples` evaluations of a per-sample statistic of the realized
/// link flows, in parallel over chunks, merged deterministically.
fn simulate<F>(
    strategy: &Strategy,
    network: &Network,
    samples: u64,
    seed: u64,
    statistic: F,
) -> Result<McEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    strategy.check_shape(network)?;
    if samples < 2 {
        return Err(crate::error::Error::InvalidArgument(
            "a standard error needs at least two samples".into(),
        ));
    }
    // Sampling fails only for moment-table demands; check once up front.
    for od in network.od_pairs() {
        od.demand.sample(&mut SampleRng::for_stream(seed, 0))?;
    }
    let link_choice = link_choice_probs(strategy, network.incidence());
    let num_edges = network.num_edges();
    let demands = network.demands();

    let chunks = samples.div_ceil(CHUNK);
    let partials: Vec<RunningMoments> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut acc = RunningMoments::default();
            let mut flows = vec![0.0f64; num_edges];
            let lo = chunk * CHUNK;
            let hi = (lo + CHUNK).min(samples);
            for sample in lo..hi {
                let mut rng = SampleRng::for_stream(seed, sample);
                flows.iter_mut().for_each(|v| *v = 0.0);
                for (i, demand) in demands.iter().enumerate() {
                    let draw = demand.sample(&mut rng).expect("sampling checked above");
                    for e in 0..num_edges {
                        let q = link_choice[e][i];
                        if q > 0.0 {
                            flows[e] += q * draw;
                        }
                    }
                }
                acc.push(statistic(&flows));
            }
            acc
        })
        .collect();

    let total = partials
        .into_iter()
        .fold(RunningMoments::default(), RunningMoments::merge);
    Ok(total.finish(seed))
}

/// Samples the total cost sum_e c_e(V_e) V_e; its mean estimates T(p).
pub fn simulate_total_cost(
    strategy: &Strategy,
    network: &Network,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    let edges = network.edges();
    simulate(strategy, network, samples, seed, move |flows| {
        edges
            .iter()
            .zip(flows)
            .map(|(edge, &v)| edge.cost.eval(v) * v)
            .sum()
    })
}

/// Samples V_e^m; its mean estimates the raw link-flow moment.
pub fn simulate_link_moment(
    edge: usize,
    m: usize,
    strategy: &Strategy,
    network: &Network,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    simulate(strategy, network, samples, seed, move |flows| {
        flows[edge].powi(m as i32)
    })
}

/// Samples c_e(V_e); its mean estimates the expected link cost.
pub fn simulate_link_cost(
    edge: usize,
    strategy: &Strategy,
    network: &Network,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    let cost = network.edge(edge).cost.clone();
    simulate(strategy, network, samples, seed, move |flows| {
        cost.eval(flows[edge])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costs;
    use crate::demand::DemandDistribution;
    use crate::error::Error;
    use crate::network::Network;
    use crate::pigou;
    use approx::assert_relative_eq;

    #[test]
    fn deterministic_demand_gives_exact_zero_error_estimates() {
        let net = pigou::affine(0.0, 2.0).unwrap();
        let s = Strategy::new(vec![vec![0.25, 0.75]]).unwrap();
        let mc = simulate_total_cost(&s, &net, 1000, 7).unwrap();
        assert_eq!(mc.std_error, 0.0);
        assert_relative_eq!(
            mc.estimate,
            costs::expected_total_cost(&s, &net).unwrap(),
            max_relative = 1e-12
        );
        let mc = simulate_link_moment(1, 3, &s, &net, 100, 7).unwrap();
        assert_relative_eq!(mc.estimate, 1.5f64.powi(3), max_relative = 1e-12);
        assert_eq!(mc.std_error, 0.0);
    }

    #[test]
    fn two_link_total_cost_within_four_standard_errors() {
        let net = pigou::affine(1.0, 1.0).unwrap();
        let s = Strategy::new(vec![vec![0.0, 1.0]]).unwrap();
        let mc = simulate_total_cost(&s, &net, 1_000_000, 42).unwrap();
        let analytic = 2.0; // (1 + theta^2) d^2 at theta = 1
        assert!(
            (mc.estimate - analytic).abs() <= 4.0 * mc.std_error,
            "estimate {} +- {} vs {analytic}",
            mc.estimate,
            mc.std_error
        );
    }

    #[test]
    fn monomial_equilibrium_total_within_four_standard_errors() {
        // Degree 2, theta = 0.5, all flow on the lower link:
        // T = E[D^3] = (1 + 3 * 0.25) d^3.
        let net = pigou::monomial(2, 0.5, 1.0).unwrap();
        let s = Strategy::new(vec![vec![0.0, 1.0]]).unwrap();
        let mc = simulate_total_cost(&s, &net, 1_000_000, 11).unwrap();
        let analytic = 1.75;
        assert!(
            (mc.estimate - analytic).abs() <= 4.0 * mc.std_error,
            "estimate {} +- {} vs {analytic}",
            mc.estimate,
            mc.std_error
        );
    }

    #[test]
    fn normal_second_moment_within_four_standard_errors() {
        let net = pigou::affine(1.0, 1.0).unwrap();
        let s = Strategy::new(vec![vec![0.0, 1.0]]).unwrap();
        let mc = simulate_link_moment(1, 2, &s, &net, 1_000_000, 5).unwrap();
        assert!((mc.estimate - 2.0).abs() <= 4.0 * mc.std_error);
    }

    #[test]
    fn uniform_third_moment_with_half_choice() {
        let mut b = Network::builder();
        b.edge("up", "s", "t", crate::costs::PolynomialCost::new(vec![0.0, 1.0]).unwrap())
            .unwrap();
        b.edge("down", "s", "t", crate::costs::PolynomialCost::new(vec![0.0, 1.0]).unwrap())
            .unwrap();
        b.od_pair("od", "s", "t", DemandDistribution::uniform(1.0, 3.0).unwrap())
            .unwrap();
        let net = b.build().unwrap();
        let s = Strategy::new(vec![vec![0.5, 0.5]]).unwrap();
        let mc = simulate_link_moment(0, 3, &s, &net, 1_000_000, 3).unwrap();
        assert!((mc.estimate - 1.25).abs() <= 4.0 * mc.std_error);
    }

    #[test]
    fn identical_runs_are_bit_identical() {
        let net = pigou::affine(0.7, 1.3).unwrap();
        let s = Strategy::new(vec![vec![0.3, 0.7]]).unwrap();
        let a = simulate_total_cost(&s, &net, 50_000, 123).unwrap();
        let b = simulate_total_cost(&s, &net, 50_000, 123).unwrap();
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
        let c = simulate_total_cost(&s, &net, 50_000, 124).unwrap();
        assert_ne!(a.estimate.to_bits(), c.estimate.to_bits());
    }

    #[test]
    fn estimates_do_not_depend_on_worker_count() {
        let net = pigou::affine(0.5, 1.0).unwrap();
        let s = Strategy::new(vec![vec![0.4, 0.6]]).unwrap();
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| simulate_total_cost(&s, &net, 100_000, 9).unwrap());
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(7)
            .build()
            .unwrap()
            .install(|| simulate_total_cost(&s, &net, 100_000, 9).unwrap());
        assert_eq!(single.estimate.to_bits(), many.estimate.to_bits());
        assert_eq!(single.std_error.to_bits(), many.std_error.to_bits());
    }

    #[test]
    fn moment_table_demands_cannot_be_simulated() {
        let mut b = Network::builder();
        b.edge("e", "s", "t", crate::costs::PolynomialCost::new(vec![0.0, 1.0]).unwrap())
            .unwrap();
        b.od_pair(
            "od",
            "s",
            "t",
            DemandDistribution::from_raw_moments(vec![1.0, 2.0]).unwrap(),
        )
        .unwrap();
        let net = b.build().unwrap();
        let s = Strategy::new(vec![vec![1.0]]).unwrap();
        assert!(matches!(
            simulate_total_cost(&s, &net, 10, 0),
            Err(Error::SamplingUnavailable)
        ));
    }

    #[test]
    fn coverage_of_four_se_intervals_on_random_instances() {
        // 200 seeded random two-to-three commodity instances; the analytic
        // T should fall inside the 4-standard-error band essentially
        // always (the miss probability per instance is ~6e-5).
        let mut rng = SampleRng::for_stream(2026, 0);
        let mut covered = 0;
        let total = 200;
        for round in 0..total {
            let theta = rng.next_uniform();
            let d = 0.5 + 2.0 * rng.next_uniform();
            let net = if round % 2 == 0 {
                pigou::affine(theta, d).unwrap()
            } else {
                pigou::monomial(1 + (round % 3), theta, d).unwrap()
            };
            let p2 = rng.next_uniform();
            let s = Strategy::new(vec![vec![1.0 - p2, p2]]).unwrap();
            let analytic = costs::expected_total_cost(&s, &net).unwrap();
            let mc = simulate_total_cost(&s, &net, 20_000, 1000 + round as u64).unwrap();
            if (mc.estimate - analytic).abs() <= 4.0 * mc.std_error.max(1e-12) {
                covered += 1;
            }
        }
        assert!(
            covered * 100 >= total * 99,
            "coverage {covered}/{total} below 99%"
        );
    }
}
