//! Directed multigraph networks with commodities and explicit path sets.
//!
//! A network couples a directed multigraph (parallel edges allowed) with a
//! set of origin-destination commodities, each carrying a demand
//! distribution and a finite list of candidate paths. Path sets are fixed
//! data: either supplied explicitly or enumerated once at construction.
//! After construction the network is immutable and safe to share across
//! threads.
//!
//! Node, edge and commodity handles are plain `usize` indices in insertion
//! order; string ids exist for I/O and error messages.

use std::collections::{HashMap, HashSet};

use crate::costs::PolynomialCost;
use crate::demand::{demand_stats, DemandDistribution, DemandStats};
use crate::error::{Error, Result};

/// Default cap on enumerated paths per commodity. Simple-path counts grow
/// exponentially with network size; hitting the cap sets a truncation flag
/// rather than failing.
pub const DEFAULT_MAX_PATHS: usize = 1000;

/// A directed edge with a polynomial cost.
#[derive(Debug, Clone)]
pub struct Edge {
    pub id: String,
    pub tail: usize,
    pub head: usize,
    pub cost: PolynomialCost,
}

/// One origin-destination commodity.
#[derive(Debug, Clone)]
pub struct OdPair {
    pub id: String,
    pub origin: usize,
    pub destination: usize,
    pub demand: DemandDistribution,
}

/// Link-path incidence structure: who uses which edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Incidence {
    /// `commodity_uses_edge[i][e]` — whether any path of commodity i
    /// traverses edge e.
    pub commodity_uses_edge: Vec<Vec<bool>>,
    /// Number of commodities using each edge.
    pub commodities_per_edge: Vec<usize>,
    /// Maximum of `commodities_per_edge` over all edges (at least 1 for any
    /// network with a commodity, since every path has an edge).
    pub max_commodities_per_edge: usize,
    /// For each edge, the (commodity, path) pairs whose path contains it,
    /// in ascending order.
    pub paths_through_edge: Vec<Vec<(usize, usize)>>,
}

impl Incidence {
    fn build(num_edges: usize, paths: &[Vec<Vec<usize>>]) -> Self {
        let num_commodities = paths.len();
        let mut commodity_uses_edge = vec![vec![false; num_edges]; num_commodities];
        let mut paths_through_edge = vec![Vec::new(); num_edges];
        for (i, commodity_paths) in paths.iter().enumerate() {
            for (k, path) in commodity_paths.iter().enumerate() {
                for &e in path {
                    if !paths_through_edge[e].contains(&(i, k)) {
                        paths_through_edge[e].push((i, k));
                    }
                    commodity_uses_edge[i][e] = true;
                }
            }
        }
        for list in &mut paths_through_edge {
            list.sort_unstable();
        }
        let commodities_per_edge: Vec<usize> = (0..num_edges)
            .map(|e| (0..num_commodities).filter(|&i| commodity_uses_edge[i][e]).count())
            .collect();
        let max_commodities_per_edge = commodities_per_edge.iter().copied().max().unwrap_or(0);
        Self {
            commodity_uses_edge,
            commodities_per_edge,
            max_commodities_per_edge,
            paths_through_edge,
        }
    }

    /// Whether path k of commodity i traverses edge e.
    pub fn path_uses_edge(&self, commodity: usize, path: usize, edge: usize) -> bool {
        self.paths_through_edge[edge]
            .binary_search(&(commodity, path))
            .is_ok()
    }
}

/// The result of enumerating simple paths for one commodity.
#[derive(Debug, Clone)]
pub struct PathEnumeration {
    /// Paths as edge-index sequences, in lexicographic order of the
    /// traversed edge ids.
    pub paths: Vec<Vec<usize>>,
    /// True when enumeration stopped at the path cap before exhausting the
    /// search.
    pub truncated: bool,
}

/// An immutable routing-game network.
#[derive(Debug, Clone)]
pub struct Network {
    nodes: Vec<String>,
    edges: Vec<Edge>,
    od_pairs: Vec<OdPair>,
    /// `paths[i][k]` is an edge-index sequence from origin to destination.
    paths: Vec<Vec<Vec<usize>>>,
    truncated: Vec<bool>,
    incidence: Incidence,
}

impl Network {
    pub fn builder() -> NetworkBuilder {
        NetworkBuilder::new()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_commodities(&self) -> usize {
        self.od_pairs.len()
    }

    pub fn node_id(&self, node: usize) -> &str {
        &self.nodes[node]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, edge: usize) -> &Edge {
        &self.edges[edge]
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    pub fn od_pairs(&self) -> &[OdPair] {
        &self.od_pairs
    }

    pub fn od_pair(&self, commodity: usize) -> &OdPair {
        &self.od_pairs[commodity]
    }

    pub fn demands(&self) -> Vec<DemandDistribution> {
        self.od_pairs.iter().map(|od| od.demand.clone()).collect()
    }

    pub fn paths(&self, commodity: usize) -> &[Vec<usize>] {
        &self.paths[commodity]
    }

    pub fn path(&self, commodity: usize, path: usize) -> &[usize] {
        &self.paths[commodity][path]
    }

    pub fn num_paths(&self, commodity: usize) -> usize {
        self.paths[commodity].len()
    }

    /// Whether path enumeration for the commodity hit the cap.
    pub fn truncated(&self, commodity: usize) -> bool {
        self.truncated[commodity]
    }

    pub fn any_truncated(&self) -> bool {
        self.truncated.iter().any(|&t| t)
    }

    pub fn incidence(&self) -> &Incidence {
        &self.incidence
    }

    /// Largest effective cost degree over all edges.
    pub fn max_cost_degree(&self) -> usize {
        self.edges
            .iter()
            .map(|e| e.cost.effective_degree())
            .max()
            .unwrap_or(0)
    }

    /// Whether every edge cost is affine.
    pub fn is_affine(&self) -> bool {
        self.max_cost_degree() <= 1
    }

    pub fn all_demands_positive_valued(&self) -> bool {
        self.od_pairs.iter().all(|od| od.demand.is_positive_valued())
    }

    pub fn all_demands_normal_family(&self) -> bool {
        self.od_pairs.iter().all(|od| od.demand.is_normal_family())
    }

    /// Demand statistics with moment ratios up to `max_order`.
    pub fn demand_stats(&self, max_order: usize) -> Result<DemandStats> {
        demand_stats(&self.demands(), max_order)
    }

    /// Moment order needed by every consumer in this crate: the social
    /// gradient touches E[V^j D] up to j = degree, hence demand moments up
    /// to 2 * degree + 1 in the worst composition.
    pub fn default_moment_order(&self) -> usize {
        2 * self.max_cost_degree() + 1
    }

    /// Re-enumerates simple paths for one commodity. The network's stored
    /// path set is untouched; this is the enumeration operation exposed for
    /// inspection and testing.
    pub fn enumerate_paths(&self, commodity: usize, max_paths: usize) -> Result<PathEnumeration> {
        let od = &self.od_pairs[commodity];
        enumerate_simple_paths(&self.edges, self.nodes.len(), od.origin, od.destination, max_paths)
            .ok_or_else(|| Error::NoPathExists {
                commodity: od.id.clone(),
                origin: self.nodes[od.origin].clone(),
                destination: self.nodes[od.destination].clone(),
            })
    }
}

/// Recomputes the incidence structure of a network from scratch.
pub fn build_incidence(network: &Network) -> Incidence {
    Incidence::build(network.num_edges(), &network.paths)
}

/// Enumerates all simple directed paths from `origin` to `destination`,
/// visiting out-edges in ascending edge-id order so the result is in
/// lexicographic order of edge-id sequences. Returns `None` when no path
/// exists; truncates (with a flag) at `max_paths`.
fn enumerate_simple_paths(
    edges: &[Edge],
    num_nodes: usize,
    origin: usize,
    destination: usize,
    max_paths: usize,
) -> Option<PathEnumeration> {
    let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
    for (e, edge) in edges.iter().enumerate() {
        out_edges[edge.tail].push(e);
    }
    for list in &mut out_edges {
        list.sort_by(|&a, &b| edges[a].id.cmp(&edges[b].id).then(a.cmp(&b)));
    }

    let mut paths = Vec::new();
    let mut truncated = false;
    let mut visited = vec![false; num_nodes];
    let mut edge_stack: Vec<usize> = Vec::new();
    // (node, next out-edge position to try)
    let mut frames: Vec<(usize, usize)> = vec![(origin, 0)];
    visited[origin] = true;

    'outer: while let Some(&mut (node, ref mut pos)) = frames.last_mut() {
        while *pos < out_edges[node].len() {
            let e = out_edges[node][*pos];
            *pos += 1;
            let next = edges[e].head;
            if next == destination {
                if paths.len() == max_paths {
                    truncated = true;
                    break 'outer;
                }
                let mut path = edge_stack.clone();
                path.push(e);
                paths.push(path);
            } else if !visited[next] {
                visited[next] = true;
                edge_stack.push(e);
                frames.push((next, 0));
                continue 'outer;
            }
        }
        frames.pop();
        visited[node] = false;
        edge_stack.pop();
    }

    if paths.is_empty() && !truncated {
        None
    } else {
        Some(PathEnumeration { paths, truncated })
    }
}

/// Rewrites the network so that every edge cost is a single monomial: an
/// edge with cost `b_0 + b_1 x + ... + b_m x^m` becomes a serial chain of
/// m + 1 links with costs `b_j x^j` (zero-coefficient terms kept as
/// zero-cost links, so term j always sits at chain position j). Every chain
/// link carries exactly the flow of the original edge, so expected path
/// costs and the expected total cost are unchanged for every strategy.
pub fn split_to_monomials(network: &Network) -> Result<Network> {
    let mut nodes = network.nodes.clone();
    let mut edges: Vec<Edge> = Vec::new();
    // chain[e] = the new edge indices replacing original edge e, in order.
    let mut chain: Vec<Vec<usize>> = Vec::with_capacity(network.num_edges());

    for edge in &network.edges {
        let coefficients = edge.cost.coefficients();
        let terms = coefficients.len();
        let mut ids = Vec::with_capacity(terms);
        let mut tail = edge.tail;
        for (j, &b) in coefficients.iter().enumerate() {
            let head = if j + 1 == terms {
                edge.head
            } else {
                nodes.push(format!("{}@{}", edge.id, j + 1));
                nodes.len() - 1
            };
            ids.push(edges.len());
            edges.push(Edge {
                id: format!("{}#{}", edge.id, j),
                tail,
                head,
                cost: PolynomialCost::monomial(b, j)?,
            });
            tail = head;
        }
        chain.push(ids);
    }

    let paths: Vec<Vec<Vec<usize>>> = network
        .paths
        .iter()
        .map(|commodity_paths| {
            commodity_paths
                .iter()
                .map(|path| path.iter().flat_map(|&e| chain[e].iter().copied()).collect())
                .collect()
        })
        .collect();

    let incidence = Incidence::build(edges.len(), &paths);
    let split = Network {
        nodes,
        edges,
        od_pairs: network.od_pairs.clone(),
        paths,
        truncated: network.truncated.clone(),
        incidence,
    };
    validate(&split)?;
    Ok(split)
}

fn validate(network: &Network) -> Result<()> {
    let mut seen_edge_ids = HashSet::new();
    for edge in &network.edges {
        if edge.tail >= network.nodes.len() || edge.head >= network.nodes.len() {
            return Err(Error::InvalidNetwork(format!(
                "edge {} references a missing node",
                edge.id
            )));
        }
        if !seen_edge_ids.insert(&edge.id) {
            return Err(Error::InvalidNetwork(format!("duplicate edge id {}", edge.id)));
        }
    }
    let mut seen_node_ids = HashSet::new();
    for node in &network.nodes {
        if !seen_node_ids.insert(node) {
            return Err(Error::InvalidNetwork(format!("duplicate node id {node}")));
        }
    }
    if network.paths.len() != network.od_pairs.len() {
        return Err(Error::InvalidNetwork(
            "one path list is required per commodity".into(),
        ));
    }
    for (i, od) in network.od_pairs.iter().enumerate() {
        if od.origin == od.destination {
            return Err(Error::InvalidNetwork(format!(
                "commodity {} has identical origin and destination",
                od.id
            )));
        }
        od.demand.validate()?;
        if network.paths[i].is_empty() {
            return Err(Error::InvalidNetwork(format!(
                "commodity {} has no path",
                od.id
            )));
        }
        for (k, path) in network.paths[i].iter().enumerate() {
            validate_path(network, od, k, path)?;
        }
    }
    Ok(())
}

fn validate_path(network: &Network, od: &OdPair, k: usize, path: &[usize]) -> Result<()> {
    let describe = |msg: &str| {
        Error::InvalidNetwork(format!("path {k} of commodity {}: {msg}", od.id))
    };
    if path.is_empty() {
        return Err(describe("empty edge sequence"));
    }
    let mut seen = HashSet::new();
    let mut at = od.origin;
    for &e in path {
        let edge = network
            .edges
            .get(e)
            .ok_or_else(|| describe("references a missing edge"))?;
        if edge.tail != at {
            return Err(describe(&format!(
                "edge {} does not continue from node {}",
                edge.id, network.nodes[at]
            )));
        }
        if !seen.insert(e) {
            return Err(describe(&format!("edge {} appears twice", edge.id)));
        }
        at = edge.head;
    }
    if at != od.destination {
        return Err(describe("does not end at the destination"));
    }
    Ok(())
}

/// Incremental construction of a [`Network`].
///
/// Nodes referenced by edges are created on first use; commodities must
/// connect existing nodes. Commodities without explicit path lists get
/// their simple paths enumerated at [`NetworkBuilder::build`] time.
#[derive(Debug, Default)]
pub struct NetworkBuilder {
    nodes: Vec<String>,
    node_index: HashMap<String, usize>,
    edges: Vec<Edge>,
    edge_index: HashMap<String, usize>,
    od_pairs: Vec<OdPair>,
    od_index: HashMap<String, usize>,
    explicit_paths: HashMap<usize, Vec<Vec<usize>>>,
    max_paths: usize,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self {
            max_paths: DEFAULT_MAX_PATHS,
            ..Self::default()
        }
    }

    /// Cap on enumerated paths per commodity (explicit path lists are
    /// never truncated).
    pub fn max_paths(&mut self, max_paths: usize) -> &mut Self {
        self.max_paths = max_paths.max(1);
        self
    }

    pub fn node(&mut self, id: &str) -> usize {
        if let Some(&idx) = self.node_index.get(id) {
            return idx;
        }
        self.nodes.push(id.to_string());
        self.node_index.insert(id.to_string(), self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    pub fn edge(&mut self, id: &str, tail: &str, head: &str, cost: PolynomialCost) -> Result<usize> {
        if self.edge_index.contains_key(id) {
            return Err(Error::InvalidNetwork(format!("duplicate edge id {id}")));
        }
        let tail = self.node(tail);
        let head = self.node(head);
        self.edges.push(Edge {
            id: id.to_string(),
            tail,
            head,
            cost,
        });
        self.edge_index.insert(id.to_string(), self.edges.len() - 1);
        Ok(self.edges.len() - 1)
    }

    pub fn od_pair(
        &mut self,
        id: &str,
        origin: &str,
        destination: &str,
        demand: DemandDistribution,
    ) -> Result<usize> {
        if self.od_index.contains_key(id) {
            return Err(Error::InvalidNetwork(format!("duplicate commodity id {id}")));
        }
        demand.validate()?;
        let origin = *self
            .node_index
            .get(origin)
            .ok_or_else(|| Error::InvalidNetwork(format!("unknown node {origin}")))?;
        let destination = *self
            .node_index
            .get(destination)
            .ok_or_else(|| Error::InvalidNetwork(format!("unknown node {destination}")))?;
        if origin == destination {
            return Err(Error::InvalidNetwork(format!(
                "commodity {id} has identical origin and destination"
            )));
        }
        self.od_pairs.push(OdPair {
            id: id.to_string(),
            origin,
            destination,
            demand,
        });
        self.od_index.insert(id.to_string(), self.od_pairs.len() - 1);
        Ok(self.od_pairs.len() - 1)
    }

    /// Fixes the path set of a commodity explicitly, as sequences of edge
    /// ids. Skips enumeration for that commodity.
    pub fn explicit_paths(&mut self, od_id: &str, paths: &[Vec<String>]) -> Result<()> {
        let i = *self
            .od_index
            .get(od_id)
            .ok_or_else(|| Error::InvalidNetwork(format!("unknown commodity {od_id}")))?;
        let mut resolved = Vec::with_capacity(paths.len());
        for path in paths {
            let mut edge_path = Vec::with_capacity(path.len());
            for id in path {
                let e = *self
                    .edge_index
                    .get(id)
                    .ok_or_else(|| Error::InvalidNetwork(format!("unknown edge {id}")))?;
                edge_path.push(e);
            }
            resolved.push(edge_path);
        }
        self.explicit_paths.insert(i, resolved);
        Ok(())
    }

    pub fn build(&self) -> Result<Network> {
        if self.od_pairs.is_empty() {
            return Err(Error::InvalidNetwork("at least one commodity is required".into()));
        }
        let mut paths = Vec::with_capacity(self.od_pairs.len());
        let mut truncated = Vec::with_capacity(self.od_pairs.len());
        for (i, od) in self.od_pairs.iter().enumerate() {
            if let Some(explicit) = self.explicit_paths.get(&i) {
                paths.push(explicit.clone());
                truncated.push(false);
            } else {
                let enumeration = enumerate_simple_paths(
                    &self.edges,
                    self.nodes.len(),
                    od.origin,
                    od.destination,
                    self.max_paths,
                )
                .ok_or_else(|| Error::NoPathExists {
                    commodity: od.id.clone(),
                    origin: self.nodes[od.origin].clone(),
                    destination: self.nodes[od.destination].clone(),
                })?;
                paths.push(enumeration.paths);
                truncated.push(enumeration.truncated);
            }
        }
        let incidence = Incidence::build(self.edges.len(), &paths);
        let network = Network {
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
            od_pairs: self.od_pairs.clone(),
            paths,
            truncated,
            incidence,
        };
        validate(&network)?;
        Ok(network)
    }
}
