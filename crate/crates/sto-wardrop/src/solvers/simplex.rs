//! Euclidean projection onto the probability simplex.

/// Projects `x` onto { p >= 0 : sum p = 1 } in O(k log k) by the sort-based
/// threshold rule.
pub(crate) fn project_onto_simplex(x: &[f64]) -> Vec<f64> {
    let k = x.len();
    debug_assert!(k > 0);
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumulative = 0.0;
    let mut threshold = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            threshold = candidate;
        } else {
            break;
        }
    }
    x.iter().map(|&v| (v - threshold).max(0.0)).collect()
}

/// Per-commodity projection of a full routing vector.
pub(crate) fn project_blocks(blocks: &[Vec<f64>]) -> Vec<Vec<f64>> {
    blocks.iter().map(|b| project_onto_simplex(b)).collect()
}
