//! Exact distributional statistics of link flows under a mixed strategy.
//!
//! Every traveler of commodity i picks path k with probability p_k^i, so
//! the realized path flow is p_k^i D_i and the flow on link e is
//!
//!   V_e = sum_i q_e^i D_i,   q_e^i = sum over paths k through e of p_k^i,
//!
//! a linear combination of the independent demands. Raw moments E[V_e^m]
//! therefore expand exactly over integer compositions of m across the
//! commodities using the link (general case), or collapse to the normal
//! closed form when every demand is normal. Both routes are exposed: they
//! must agree, and the test suites hold them to that.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Incidence, Network};
use crate::numeric;

/// A mixed routing strategy: one probability vector over paths per
/// commodity.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Strategy {
    probabilities: Vec<Vec<f64>>,
}

impl<'de> Deserialize<'de> for Strategy {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let probabilities = Vec::<Vec<f64>>::deserialize(deserializer)?;
        Strategy::new(probabilities).map_err(serde::de::Error::custom)
    }
}

impl Strategy {
    /// Validates simplex membership per commodity. Tiny negative entries
    /// (above -1e-9) and sum drift up to 1e-6 are repaired by clamping and
    /// renormalizing; anything worse is rejected.
    pub fn new(probabilities: Vec<Vec<f64>>) -> Result<Self> {
        let mut probabilities = probabilities;
        for (i, p) in probabilities.iter_mut().enumerate() {
            if p.is_empty() {
                return Err(Error::InvalidStrategy(format!(
                    "commodity {i} has an empty probability vector"
                )));
            }
            for &x in p.iter() {
                if !x.is_finite() || x < -1e-9 {
                    return Err(Error::InvalidStrategy(format!(
                        "commodity {i} has probability {x}"
                    )));
                }
            }
            for x in p.iter_mut() {
                *x = x.max(0.0);
            }
            let total: f64 = p.iter().sum();
            if (total - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidStrategy(format!(
                    "commodity {i} probabilities sum to {total}"
                )));
            }
            for x in p.iter_mut() {
                *x /= total;
            }
        }
        Ok(Self { probabilities })
    }

    /// The uniform strategy over every commodity's path set.
    pub fn uniform(network: &Network) -> Self {
        let probabilities = (0..network.num_commodities())
            .map(|i| {
                let k = network.num_paths(i);
                vec![1.0 / k as f64; k]
            })
            .collect();
        Self { probabilities }
    }

    pub fn probabilities(&self) -> &[Vec<f64>] {
        &self.probabilities
    }

    pub fn prob(&self, commodity: usize, path: usize) -> f64 {
        self.probabilities[commodity][path]
    }

    pub fn num_commodities(&self) -> usize {
        self.probabilities.len()
    }

    pub(crate) fn from_raw(probabilities: Vec<Vec<f64>>) -> Self {
        Self { probabilities }
    }

    /// Wraps raw probability vectors without validating or renormalizing.
    /// The moment formulas extend smoothly off the simplex, which is what
    /// finite-difference probes of T(p) need; everything else should go
    /// through [`Strategy::new`].
    #[doc(hidden)]
    pub fn unchecked(probabilities: Vec<Vec<f64>>) -> Self {
        Self { probabilities }
    }

    pub(crate) fn check_shape(&self, network: &Network) -> Result<()> {
        if self.probabilities.len() != network.num_commodities() {
            return Err(Error::InvalidStrategy(format!(
                "strategy covers {} commodities, network has {}",
                self.probabilities.len(),
                network.num_commodities()
            )));
        }
        for (i, p) in self.probabilities.iter().enumerate() {
            if p.len() != network.num_paths(i) {
                return Err(Error::InvalidStrategy(format!(
                    "strategy has {} paths for commodity {i}, network has {}",
                    p.len(),
                    network.num_paths(i)
                )));
            }
        }
        Ok(())
    }
}

/// First- and second-order link flow statistics under a strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkFlowStats {
    /// Mean link flows v_e.
    pub mean: Vec<f64>,
    /// Link flow variances; by independence across commodities,
    /// var_e = sum_i (q_e^i)^2 sigma_i^2.
    pub variance: Vec<f64>,
    /// `link_choice[e][i]` — probability q_e^i that a traveler of
    /// commodity i crosses edge e.
    pub link_choice: Vec<Vec<f64>>,
}

/// Link-choice probabilities q_e^i = sum over paths k through e of p_k^i.
pub fn link_choice_probs(strategy: &Strategy, incidence: &Incidence) -> Vec<Vec<f64>> {
    let num_edges = incidence.paths_through_edge.len();
    let num_commodities = incidence.commodity_uses_edge.len();
    let mut q = vec![vec![0.0; num_commodities]; num_edges];
    for (e, through) in incidence.paths_through_edge.iter().enumerate() {
        for &(i, k) in through {
            q[e][i] += strategy.prob(i, k);
        }
    }
    q
}

/// Mean and variance of every link flow under the strategy.
pub fn link_flow_stats(strategy: &Strategy, network: &Network) -> Result<LinkFlowStats> {
    strategy.check_shape(network)?;
    let link_choice = link_choice_probs(strategy, network.incidence());
    let num_edges = network.num_edges();
    let mut mean = vec![0.0; num_edges];
    let mut variance = vec![0.0; num_edges];
    for e in 0..num_edges {
        for (i, od) in network.od_pairs().iter().enumerate() {
            let q = link_choice[e][i];
            mean[e] += q * od.demand.mean();
            variance[e] += q * q * od.demand.variance();
        }
    }
    Ok(LinkFlowStats {
        mean,
        variance,
        link_choice,
    })
}

/// Exact raw moment E[V_e^m].
///
/// Dispatches to the normal closed form when every demand is in the normal
/// family (point masses count as zero-spread normals) and to the
/// composition expansion otherwise.
pub fn link_raw_moment(
    edge: usize,
    m: usize,
    strategy: &Strategy,
    network: &Network,
) -> Result<f64> {
    if network.all_demands_normal_family() {
        link_raw_moment_normal_closed_form(edge, m, strategy, network)
    } else {
        link_raw_moment_multinomial(edge, m, strategy, network)
    }
}

/// E[V_e^m] by exact expansion over compositions of m among the
/// commodities present on the link:
///
///   E[V^m] = sum over (s_1..s_kappa), sum s = m, of
///            m!/prod(s_i!) * prod_i q_i^{s_i} E[D_i^{s_i}].
///
/// Commodities with q_e^i = 0 contribute nothing and are dropped before
/// enumeration. Term counts grow as C(m + kappa - 1, kappa - 1); with the
/// crate-wide degree cap this stays desk-sized.
pub fn link_raw_moment_multinomial(
    edge: usize,
    m: usize,
    strategy: &Strategy,
    network: &Network,
) -> Result<f64> {
    strategy.check_shape(network)?;
    let q = edge_choice_probs(edge, strategy, network);
    let active = active_commodities(&q);
    composition_moment(&active, network, m, &[])
}

/// E[V_e^m] via the normal closed form
/// sum over even r of C(m, r) sigma_e^r v_e^(m-r) (r-1)!!,
/// valid when every demand is normal (or a point mass).
pub fn link_raw_moment_normal_closed_form(
    edge: usize,
    m: usize,
    strategy: &Strategy,
    network: &Network,
) -> Result<f64> {
    strategy.check_shape(network)?;
    if !network.all_demands_normal_family() {
        return Err(Error::InvalidDemand(
            "normal closed form requires every demand to be normal".into(),
        ));
    }
    let q = edge_choice_probs(edge, strategy, network);
    let mut v = 0.0;
    let mut var = 0.0;
    for (i, od) in network.od_pairs().iter().enumerate() {
        v += q[i] * od.demand.mean();
        var += q[i] * q[i] * od.demand.variance();
    }
    Ok(numeric::normal_raw_moment(m, v, var.sqrt()))
}

/// Exact cross moment E[V_e^m * D_i] for one commodity i, used by the
/// analytic gradient of the social objective. Expands as the raw moment
/// with one extra D_i factor; commodities absent from the link (or with
/// q_e^i = 0) separate by independence into E[V_e^m] * E[D_i].
pub fn link_cross_moment(
    edge: usize,
    m: usize,
    commodity: usize,
    strategy: &Strategy,
    network: &Network,
) -> Result<f64> {
    strategy.check_shape(network)?;
    let q = edge_choice_probs(edge, strategy, network);
    let active = active_commodities(&q);
    composition_moment(&active, network, m, &[commodity])
}

/// Exact double cross moment E[V_e^m * D_i * D_j] (i = j allowed), the
/// ingredient of the social objective's Hessian.
pub(crate) fn link_double_cross_moment(
    edge: usize,
    m: usize,
    first: usize,
    second: usize,
    strategy: &Strategy,
    network: &Network,
) -> Result<f64> {
    let q = edge_choice_probs(edge, strategy, network);
    let active = active_commodities(&q);
    composition_moment(&active, network, m, &[first, second])
}

fn edge_choice_probs(edge: usize, strategy: &Strategy, network: &Network) -> Vec<f64> {
    let mut q = vec![0.0; network.num_commodities()];
    for &(i, k) in &network.incidence().paths_through_edge[edge] {
        q[i] += strategy.prob(i, k);
    }
    q
}

fn active_commodities(q: &[f64]) -> Vec<(usize, f64)> {
    // Exact zeros are dropped before enumeration (0^0 never arises);
    // negative values only occur for off-simplex probes, where the
    // polynomial expansion is still exact.
    q.iter()
        .enumerate()
        .filter(|&(_, &p)| p != 0.0)
        .map(|(i, &p)| (i, p))
        .collect()
}

/// Shared expansion core: E[V^m * prod of D_i over `extras`]. Each entry
/// of `extras` bumps that commodity's demand-moment order by one (repeats
/// allowed); extras not present on the link separate out by independence.
fn composition_moment(
    active: &[(usize, f64)],
    network: &Network,
    m: usize,
    extras: &[usize],
) -> Result<f64> {
    let mut extra_counts: Vec<(usize, usize)> = Vec::new();
    for &i in extras {
        match extra_counts.iter_mut().find(|(j, _)| *j == i) {
            Some(entry) => entry.1 += 1,
            None => extra_counts.push((i, 1)),
        }
    }
    // Extras off the link are independent of V and factor out.
    let mut detached = 1.0;
    for &(i, count) in &extra_counts {
        if !active.iter().any(|&(j, _)| j == i) {
            detached *= network.od_pair(i).demand.raw_moment(count)?;
        }
    }
    if active.is_empty() {
        return Ok(if m == 0 { detached } else { 0.0 });
    }
    let extra_count_of = |i: usize| -> usize {
        extra_counts
            .iter()
            .find(|(j, _)| *j == i)
            .map(|&(_, c)| c)
            .unwrap_or(0)
    };

    let mut total = 0.0;
    let mut failure: Option<Error> = None;
    numeric::for_each_composition(m, active.len(), |parts| {
        if failure.is_some() {
            return;
        }
        let mut term = numeric::multinomial(m, parts);
        for (&(i, p), &s) in active.iter().zip(parts.iter()) {
            let order = s + extra_count_of(i);
            if s > 0 {
                term *= p.powi(s as i32);
            }
            if order > 0 {
                match network.od_pair(i).demand.raw_moment(order) {
                    Ok(raw) => term *= raw,
                    Err(err) => {
                        failure = Some(err);
                        return;
                    }
                }
            }
        }
        total += term;
    });
    if let Some(err) = failure {
        return Err(err);
    }
    Ok(total * detached)
}
