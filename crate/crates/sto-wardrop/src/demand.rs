//! Per-commodity demand models.
//!
//! Each origin-destination pair carries an independent demand distribution.
//! The analytic engine never needs densities — only raw moments E[D^m] —
//! so a distribution here is anything that can answer moment queries, plus
//! (for the Monte Carlo oracle) draw i.i.d. samples.
//!
//! A note on normal demands: draws are **not** truncated at zero, even
//! though traffic demand is physically nonnegative. All closed-form moment
//! formulas in this crate integrate over the whole real line, and the
//! simulation oracle must estimate exactly the quantity the analytic engine
//! computes. Users who cannot tolerate negative tails should keep the
//! coefficient of variation small or use a positive-valued variant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric;
use crate::rng::SampleRng;

/// An independent demand distribution for one commodity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum DemandDistribution {
    /// Point mass at `value`.
    Deterministic { value: f64 },
    /// Normal with the given mean and standard deviation (untruncated).
    Normal { mean: f64, std_dev: f64 },
    /// Uniform on [min, max] with 0 < min <= max.
    Uniform { min: f64, max: f64 },
    /// Empirical raw moments E[D^1], E[D^2], ...; `raw_moments[0]` is the mean.
    Moments { raw_moments: Vec<f64> },
}

impl DemandDistribution {
    pub fn deterministic(value: f64) -> Result<Self> {
        let d = Self::Deterministic { value };
        d.validate()?;
        Ok(d)
    }

    pub fn normal(mean: f64, std_dev: f64) -> Result<Self> {
        let d = Self::Normal { mean, std_dev };
        d.validate()?;
        Ok(d)
    }

    pub fn uniform(min: f64, max: f64) -> Result<Self> {
        let d = Self::Uniform { min, max };
        d.validate()?;
        Ok(d)
    }

    pub fn from_raw_moments(raw_moments: Vec<f64>) -> Result<Self> {
        let d = Self::Moments { raw_moments };
        d.validate()?;
        Ok(d)
    }

    /// Checks the structural invariants of the variant: positive mean,
    /// nonnegative spread, and (for moment tables) Jensen consistency
    /// E[D^m] >= mean^m for every stored order.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Deterministic { value } => {
                if !(value.is_finite() && *value > 0.0) {
                    return Err(Error::InvalidDemand(format!(
                        "deterministic demand must be positive and finite, got {value}"
                    )));
                }
            }
            Self::Normal { mean, std_dev } => {
                if !(mean.is_finite() && *mean > 0.0) {
                    return Err(Error::InvalidDemand(format!(
                        "normal demand mean must be positive and finite, got {mean}"
                    )));
                }
                if !(std_dev.is_finite() && *std_dev >= 0.0) {
                    return Err(Error::InvalidDemand(format!(
                        "normal demand std_dev must be nonnegative, got {std_dev}"
                    )));
                }
            }
            Self::Uniform { min, max } => {
                if !(min.is_finite() && max.is_finite() && *min > 0.0 && min <= max) {
                    return Err(Error::InvalidDemand(format!(
                        "uniform demand requires 0 < min <= max, got [{min}, {max}]"
                    )));
                }
            }
            Self::Moments { raw_moments } => {
                if raw_moments.is_empty() {
                    return Err(Error::InvalidDemand(
                        "moment table must store at least the mean".into(),
                    ));
                }
                let mean = raw_moments[0];
                if !(mean.is_finite() && mean > 0.0) {
                    return Err(Error::InvalidDemand(format!(
                        "moment-table mean must be positive and finite, got {mean}"
                    )));
                }
                for (idx, &m) in raw_moments.iter().enumerate() {
                    let order = idx + 1;
                    if !m.is_finite() || m < mean.powi(order as i32) * (1.0 - 1e-12) {
                        return Err(Error::InvalidDemand(format!(
                            "moment table violates Jensen consistency at order {order}: \
                             E[D^{order}] = {m} < mean^{order} = {}",
                            mean.powi(order as i32)
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Deterministic { value } => *value,
            Self::Normal { mean, .. } => *mean,
            Self::Uniform { min, max } => 0.5 * (min + max),
            Self::Moments { raw_moments } => raw_moments[0],
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Self::Deterministic { .. } => 0.0,
            Self::Normal { std_dev, .. } => std_dev * std_dev,
            Self::Uniform { min, max } => (max - min) * (max - min) / 12.0,
            Self::Moments { raw_moments } => {
                let mean = raw_moments[0];
                // A table holding only the mean has unknown spread; treating
                // it as deterministic would silently misstate it, so variance
                // queries go through raw_moment and fail loudly instead.
                let m2 = raw_moments.get(1).copied().unwrap_or(mean * mean);
                (m2 - mean * mean).max(0.0)
            }
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Coefficient of variation: standard deviation over mean.
    pub fn cv(&self) -> f64 {
        self.std_dev() / self.mean()
    }

    /// Raw moment E[D^m].
    ///
    /// Closed-form variants answer any order; moment tables answer the
    /// stored orders only and fail with `MomentUnavailable` past them.
    pub fn raw_moment(&self, m: usize) -> Result<f64> {
        if m == 0 {
            return Ok(1.0);
        }
        match self {
            Self::Deterministic { value } => Ok(value.powi(m as i32)),
            Self::Normal { mean, std_dev } => Ok(numeric::normal_raw_moment(m, *mean, *std_dev)),
            Self::Uniform { min, max } => {
                if max == min {
                    return Ok(min.powi(m as i32));
                }
                let p = (m + 1) as f64;
                Ok((max.powi(m as i32 + 1) - min.powi(m as i32 + 1)) / (p * (max - min)))
            }
            Self::Moments { raw_moments } => {
                raw_moments
                    .get(m - 1)
                    .copied()
                    .ok_or(Error::MomentUnavailable {
                        order: m,
                        stored: raw_moments.len(),
                    })
            }
        }
    }

    /// Moment ratio E[D^m] / mean^m — the normalized shape statistic that
    /// the polynomial bounds consume. Always >= 1 by Jensen's inequality.
    pub fn moment_ratio(&self, m: usize) -> Result<f64> {
        Ok(self.raw_moment(m)? / self.mean().powi(m as i32))
    }

    /// One i.i.d. draw. Moment tables name no distribution and cannot be
    /// sampled.
    pub fn sample(&self, rng: &mut SampleRng) -> Result<f64> {
        match self {
            Self::Deterministic { value } => Ok(*value),
            Self::Normal { mean, std_dev } => Ok(mean + std_dev * rng.next_standard_normal()),
            Self::Uniform { min, max } => Ok(min + (max - min) * rng.next_uniform()),
            Self::Moments { .. } => Err(Error::SamplingUnavailable),
        }
    }

    /// Whether the support is contained in (0, inf). Moment tables are
    /// taken at their word: they exist to carry empirical moments of
    /// physical (nonnegative) demand.
    pub fn is_positive_valued(&self) -> bool {
        match self {
            Self::Deterministic { .. } | Self::Uniform { .. } | Self::Moments { .. } => true,
            Self::Normal { std_dev, .. } => *std_dev == 0.0,
        }
    }

    /// Whether the distribution is normal, counting a point mass as the
    /// degenerate normal with zero spread.
    pub fn is_normal_family(&self) -> bool {
        matches!(
            self,
            Self::Normal { .. } | Self::Deterministic { .. }
        )
    }
}

/// Aggregate demand-variability statistics across all commodities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandStats {
    /// Coefficient of variation per commodity.
    pub cv: Vec<f64>,
    /// Largest coefficient of variation.
    pub max_cv: f64,
    /// Smallest coefficient of variation.
    pub min_cv: f64,
    /// `max_moment_ratio[m]` = max over commodities of E[D^m] / mean^m,
    /// for m = 0..=max_order. Entries 0 and 1 are exactly 1.
    pub max_moment_ratio: Vec<f64>,
}

impl DemandStats {
    /// Largest moment ratio of the given order.
    pub fn max_moment_ratio(&self, m: usize) -> Result<f64> {
        self.max_moment_ratio
            .get(m)
            .copied()
            .ok_or(Error::MomentUnavailable {
                order: m,
                stored: self.max_moment_ratio.len().saturating_sub(1),
            })
    }

    pub fn max_order(&self) -> usize {
        self.max_moment_ratio.len().saturating_sub(1)
    }
}

/// Computes per-commodity and aggregate variability statistics with moment
/// ratios up to `max_order`.
pub fn demand_stats(demands: &[DemandDistribution], max_order: usize) -> Result<DemandStats> {
    if demands.is_empty() {
        return Err(Error::InvalidDemand(
            "demand statistics require at least one commodity".into(),
        ));
    }
    for d in demands {
        d.validate()?;
    }
    let cv: Vec<f64> = demands.iter().map(|d| d.cv()).collect();
    let max_cv = cv.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_cv = cv.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut max_moment_ratio = Vec::with_capacity(max_order + 1);
    for m in 0..=max_order {
        let mut best = f64::NEG_INFINITY;
        for d in demands {
            best = best.max(d.moment_ratio(m)?);
        }
        max_moment_ratio.push(best);
    }
    Ok(DemandStats {
        cv,
        max_cv,
        min_cv,
        max_moment_ratio,
    })
}
