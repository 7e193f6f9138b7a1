//! Seeded random instances shared by the integration suites.

use sto_wardrop::rng::SampleRng;
use sto_wardrop::{DemandDistribution, Network, PolynomialCost, Strategy};

#[derive(Debug, Clone, Copy)]
pub enum DemandFamily {
    /// Deterministic and uniform demands (positive-valued support).
    Positive,
    /// Normal demands, point masses included.
    Normal,
}

#[derive(Debug, Clone, Copy)]
pub struct InstanceOptions {
    pub max_nodes: usize,
    pub max_edges: usize,
    pub max_commodities: usize,
    pub max_degree: usize,
    pub family: DemandFamily,
    /// Cap on the coefficient of variation of each demand.
    pub max_cv: f64,
}

impl Default for InstanceOptions {
    fn default() -> Self {
        Self {
            max_nodes: 6,
            max_edges: 10,
            max_commodities: 3,
            max_degree: 3,
            family: DemandFamily::Normal,
            max_cv: 0.3,
        }
    }
}

fn random_cost(rng: &mut SampleRng, max_degree: usize) -> PolynomialCost {
    let degree = (rng.next_u64() % (max_degree as u64 + 1)) as usize;
    let mut coefficients = vec![0.1 + rng.next_uniform()];
    for _ in 1..=degree {
        coefficients.push(if rng.next_uniform() < 0.7 {
            rng.next_uniform()
        } else {
            0.0
        });
    }
    PolynomialCost::new(coefficients).unwrap()
}

fn random_demand(rng: &mut SampleRng, family: DemandFamily, max_cv: f64) -> DemandDistribution {
    let mean = 0.5 + 2.0 * rng.next_uniform();
    match family {
        DemandFamily::Normal => {
            DemandDistribution::normal(mean, max_cv * rng.next_uniform() * mean).unwrap()
        }
        DemandFamily::Positive => {
            if rng.next_uniform() < 0.4 {
                DemandDistribution::deterministic(mean).unwrap()
            } else {
                // Spread chosen so the coefficient of variation stays
                // under max_cv: U[a, a(1+w)] has cv = w / (sqrt(12)(1 + w/2)).
                let w = (rng.next_uniform() * 12f64.sqrt() * max_cv * 2.0).min(2.0);
                DemandDistribution::uniform(mean, mean * (1.0 + w)).unwrap()
            }
        }
    }
}

/// A connected random instance honoring the option caps. Retries draws
/// until every commodity has a path; deterministic given the rng state.
pub fn random_network(rng: &mut SampleRng, opts: &InstanceOptions) -> Network {
    loop {
        let nodes = 3 + (rng.next_u64() as usize) % (opts.max_nodes - 2);
        let edges = 4 + (rng.next_u64() as usize) % (opts.max_edges - 3);
        let commodities = 1 + (rng.next_u64() as usize) % opts.max_commodities;
        let mut b = Network::builder();
        for node in 0..nodes {
            b.node(&format!("n{node}"));
        }
        for e in 0..edges {
            let tail = (rng.next_u64() as usize) % nodes;
            let mut head = (rng.next_u64() as usize) % nodes;
            if head == tail {
                head = (head + 1) % nodes;
            }
            let cost = random_cost(rng, opts.max_degree);
            b.edge(&format!("e{e}"), &format!("n{tail}"), &format!("n{head}"), cost)
                .unwrap();
        }
        let mut ok = true;
        for i in 0..commodities {
            let origin = (rng.next_u64() as usize) % nodes;
            let mut destination = (rng.next_u64() as usize) % nodes;
            if destination == origin {
                destination = (destination + 1) % nodes;
            }
            let demand = random_demand(rng, opts.family, opts.max_cv);
            if b
                .od_pair(
                    &format!("od{i}"),
                    &format!("n{origin}"),
                    &format!("n{destination}"),
                    demand,
                )
                .is_err()
            {
                ok = false;
                break;
            }
        }
        if !ok {
            continue;
        }
        match b.build() {
            Ok(net) => return net,
            Err(_) => continue,
        }
    }
}

/// A random interior point of every commodity's path simplex.
pub fn random_strategy(rng: &mut SampleRng, network: &Network) -> Strategy {
    Strategy::new(
        (0..network.num_commodities())
            .map(|i| rng.next_simplex_point(network.num_paths(i)))
            .collect(),
    )
    .unwrap()
}
