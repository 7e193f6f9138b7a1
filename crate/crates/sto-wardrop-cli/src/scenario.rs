//! Scenario files: the JSON ingestion format.
//!
//! A scenario bundles a network (nodes, edges with cost coefficient
//! arrays, commodities with demand specs, optional explicit path lists)
//! with optional solver overrides. The schema is documented in
//! `docs/schema.json` at the repository root; deserialization plus the
//! library's construction-time invariants enforce it.

use serde::Deserialize;

use sto_wardrop::{DemandDistribution, Network, SolverConfig};

use crate::CliError;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u64,
    pub nodes: Vec<String>,
    pub edges: Vec<EdgeSpec>,
    pub od_pairs: Vec<OdSpec>,
    /// Cap on enumerated paths per commodity (commodities with explicit
    /// path lists are exempt).
    #[serde(default)]
    pub max_paths: Option<usize>,
    /// Partial solver overrides; unspecified fields keep their defaults.
    #[serde(default)]
    pub solver: Option<SolverConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub id: String,
    pub tail: String,
    pub head: String,
    /// Polynomial coefficients [b0, b1, ..., bm].
    pub cost: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdSpec {
    pub id: String,
    pub origin: String,
    pub destination: String,
    pub demand: DemandDistribution,
    /// Optional explicit path lists as edge-id sequences.
    #[serde(default)]
    pub paths: Option<Vec<Vec<String>>>,
}

impl Scenario {
    pub fn from_file(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|err| CliError::validation(format!("cannot read {}: {err}", path.display())))?;
        let scenario: Scenario = serde_json::from_str(&text).map_err(|err| {
            CliError::validation(format!(
                "{}: malformed scenario at line {}, column {}: {err}",
                path.display(),
                err.line(),
                err.column()
            ))
        })?;
        if scenario.version != SCHEMA_VERSION {
            return Err(CliError::validation(format!(
                "unsupported scenario version {} (expected {SCHEMA_VERSION})",
                scenario.version
            )));
        }
        Ok(scenario)
    }

    /// Builds the immutable network, enforcing that every referenced node
    /// and edge id exists.
    pub fn build_network(&self) -> Result<Network, CliError> {
        let known: std::collections::HashSet<&str> =
            self.nodes.iter().map(String::as_str).collect();
        if known.len() != self.nodes.len() {
            return Err(CliError::validation("duplicate node id in `nodes`".into()));
        }
        let mut builder = Network::builder();
        for node in &self.nodes {
            builder.node(node);
        }
        if let Some(max_paths) = self.max_paths {
            builder.max_paths(max_paths);
        }
        for edge in &self.edges {
            for endpoint in [&edge.tail, &edge.head] {
                if !known.contains(endpoint.as_str()) {
                    return Err(CliError::validation(format!(
                        "edge {} references unknown node {endpoint}",
                        edge.id
                    )));
                }
            }
            let cost = sto_wardrop::PolynomialCost::new(edge.cost.clone())
                .map_err(CliError::from_library)?;
            builder
                .edge(&edge.id, &edge.tail, &edge.head, cost)
                .map_err(CliError::from_library)?;
        }
        for od in &self.od_pairs {
            for endpoint in [&od.origin, &od.destination] {
                if !known.contains(endpoint.as_str()) {
                    return Err(CliError::validation(format!(
                        "commodity {} references unknown node {endpoint}",
                        od.id
                    )));
                }
            }
            builder
                .od_pair(&od.id, &od.origin, &od.destination, od.demand.clone())
                .map_err(CliError::from_library)?;
            if let Some(paths) = &od.paths {
                builder
                    .explicit_paths(&od.id, paths)
                    .map_err(CliError::from_library)?;
            }
        }
        builder.build().map_err(CliError::from_library)
    }

    pub fn solver_config(&self) -> SolverConfig {
        self.solver.clone().unwrap_or_default()
    }
}
