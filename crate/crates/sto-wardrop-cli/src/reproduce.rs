//! Reference tables and curves: closed forms next to solver output, as
//! deterministic CSV.

use std::path::Path;

use sto_wardrop::{
    anarchy_bound_normal, compute_poa, demand_stats, max_applicable_cv, max_uniform_ratio, pigou,
    theta_threshold, DemandDistribution, SolverConfig, StepRule,
};

use crate::output::{emit, fmt_sig, Csv};
use crate::CliError;

fn tight_config() -> SolverConfig {
    SolverConfig {
        relative_gap_tolerance: 1e-8,
        step_rule: StepRule::Armijo,
        ..SolverConfig::default()
    }
}

/// Affine two-link benchmark at one coefficient of variation: solver
/// results against the closed forms.
pub fn example1(theta: f64, out: Option<&Path>) -> Result<(), CliError> {
    let net = pigou::affine(theta, 1.0).map_err(CliError::from_library)?;
    let report =
        compute_poa(&net, &SolverConfig::default()).map_err(CliError::from_library)?;
    let mut csv = Csv::new(&[
        "theta",
        "poa",
        "poa_closed_form",
        "affine_bound",
        "t_ue",
        "t_so",
        "p_lower_so",
        "p_lower_so_closed_form",
    ]);
    csv.row(&[
        fmt_sig(theta),
        fmt_sig(report.poa),
        fmt_sig(pigou::affine_poa(theta)),
        fmt_sig(sto_wardrop::affine_bound(theta, theta, 1)),
        fmt_sig(report.t_ue),
        fmt_sig(report.t_so),
        fmt_sig(report.so.strategy.prob(0, 1)),
        fmt_sig(pigou::affine_optimal_lower_prob(theta)),
    ]);
    emit(out, &csv.into_string())
}

/// Monomial two-link benchmark of one degree: solver results against the
/// closed forms and the normal-demand bound at n = 1.
pub fn example2(degree: usize, theta: f64, out: Option<&Path>) -> Result<(), CliError> {
    if degree == 0 {
        return Err(CliError::validation("degree must be at least 1".into()));
    }
    let net = pigou::monomial(degree, theta, 1.0).map_err(CliError::from_library)?;
    let report = compute_poa(&net, &tight_config()).map_err(CliError::from_library)?;
    let stats = demand_stats(
        &[DemandDistribution::normal(1.0, theta).map_err(CliError::from_library)?],
        degree + 1,
    )
    .map_err(CliError::from_library)?;
    let bound = anarchy_bound_normal(degree, &stats, 1).map_err(CliError::from_library)?;
    let mut csv = Csv::new(&[
        "j",
        "theta",
        "poa",
        "poa_closed_form",
        "normal_bound",
        "t_ue",
        "t_so",
        "p_lower_so",
        "p_lower_so_closed_form",
    ]);
    csv.row(&[
        degree.to_string(),
        fmt_sig(theta),
        fmt_sig(report.poa),
        fmt_sig(pigou::monomial_poa(degree, theta)),
        bound.value.map(fmt_sig).unwrap_or_else(|| "NA".into()),
        fmt_sig(report.t_ue),
        fmt_sig(report.t_so),
        fmt_sig(report.so.strategy.prob(0, 1)),
        fmt_sig(pigou::monomial_optimal_lower_prob(degree, theta)),
    ]);
    emit(out, &csv.into_string())
}

/// Applicability thresholds on the order-m moment ratio for m = 2, 3, 4.
pub fn table1(out: Option<&Path>) -> Result<(), CliError> {
    let mut csv = Csv::new(&["m", "max_moment_ratio_threshold"]);
    for m in [2usize, 3, 4] {
        csv.row(&[m.to_string(), fmt_sig(theta_threshold(m))]);
    }
    emit(out, &csv.into_string())
}

/// Largest applicable uniform spread max/min for m = 2, 3, 4.
pub fn table2(out: Option<&Path>) -> Result<(), CliError> {
    let mut csv = Csv::new(&["m", "max_uniform_ratio"]);
    for m in [2usize, 3, 4] {
        csv.row(&[m.to_string(), fmt_sig(max_uniform_ratio(m))]);
    }
    emit(out, &csv.into_string())
}

/// Maximum applicable coefficient of variation of the normal-demand bound
/// as a function of the link-sharing count n.
pub fn fig2(degree: usize, n_max: usize, out: Option<&Path>) -> Result<(), CliError> {
    if degree == 0 || n_max == 0 {
        return Err(CliError::validation("m and n-max must be at least 1".into()));
    }
    let mut csv = Csv::new(&["n", "max_cv"]);
    for n in 1..=n_max {
        csv.row(&[n.to_string(), fmt_sig(max_applicable_cv(degree, n))]);
    }
    emit(out, &csv.into_string())
}

/// Degree-2 normal-demand bound curves over the coefficient of variation,
/// one column per requested n plus the large-n limit (which coincides with
/// the positive-demand bound). Inapplicable points print NA.
pub fn fig3(n_values: &[usize], out: Option<&Path>) -> Result<(), CliError> {
    if n_values.is_empty() {
        return Err(CliError::validation("at least one n is required".into()));
    }
    let mut header: Vec<String> = vec!["theta".into()];
    for &n in n_values {
        header.push(format!("n={n}"));
    }
    header.push("n=inf".into());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&header_refs);

    for step in 0..=100 {
        let theta = step as f64 * 0.01;
        let stats = demand_stats(
            &[DemandDistribution::normal(1.0, theta).map_err(CliError::from_library)?],
            3,
        )
        .map_err(CliError::from_library)?;
        let mut cells = vec![fmt_sig(theta)];
        for &n in n_values {
            let report = anarchy_bound_normal(2, &stats, n).map_err(CliError::from_library)?;
            cells.push(report.value.map(fmt_sig).unwrap_or_else(|| "NA".into()));
        }
        let limit = sto_wardrop::anarchy_bound_positive(2, &stats).map_err(CliError::from_library)?;
        cells.push(limit.value.map(fmt_sig).unwrap_or_else(|| "NA".into()));
        csv.row(&cells);
    }
    emit(out, &csv.into_string())
}
