//! Salience scores, the divergence regression and country categorization.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which external measure a score run compares against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExternalSource {
    Emdat,
    Wbglhm,
}

impl ExternalSource {
    pub fn label(self) -> &'static str {
        match self {
            ExternalSource::Emdat => "EMDAT",
            ExternalSource::Wbglhm => "WBGLHM",
        }
    }
}

/// OLS fit of news salience on external salience.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub beta0: f64,
    pub beta1: f64,
    pub n: usize,
}

impl RegressionFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.beta0 + self.beta1 * x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    Overreported,
    Similar,
    Underreported,
}

impl Category {
    pub fn label(self) -> &'static str {
        match self {
            Category::Overreported => "overreported",
            Category::Similar => "similar",
            Category::Underreported => "underreported",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceRecord {
    pub iso3: String,
    pub divergence: f64,
    pub band_halfwidth: f64,
    pub category: Category,
}

#[derive(Debug, Error, PartialEq)]
pub enum SalienceError {
    #[error("cohort has fewer than 2 members")]
    CohortTooSmall,
    #[error("all cohort values are equal")]
    DegenerateCohort,
    #[error("regression needs at least 3 pairs")]
    TooFewPairs,
    #[error("design is singular: all x values are equal")]
    SingularDesign,
}

/// Outcome of a salience computation. `degenerate` is set when every
/// cohort value was equal and all scores were defined as 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SalienceScores {
    pub scores: BTreeMap<String, f64>,
    pub degenerate: bool,
}

/// Map raw non-negative values to [0,1]: log1p then min-max over the cohort.
pub fn salience_scores(
    values: &BTreeMap<String, f64>,
) -> Result<SalienceScores, SalienceError> {
    if values.len() < 2 {
        return Err(SalienceError::CohortTooSmall);
    }
    let logs: BTreeMap<String, f64> =
        values.iter().map(|(k, &v)| (k.clone(), v.ln_1p())).collect();
    let min = logs.values().cloned().fold(f64::INFINITY, f64::min);
    let max = logs.values().cloned().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Ok(SalienceScores {
            scores: logs.keys().map(|k| (k.clone(), 0.0)).collect(),
            degenerate: true,
        });
    }
    let range = max - min;
    Ok(SalienceScores {
        scores: logs
            .into_iter()
            .map(|(k, l)| (k, (l - min) / range))
            .collect(),
        degenerate: false,
    })
}

/// Ordinary least squares with intercept.
pub fn fit_regression(pairs: &[(f64, f64)]) -> Result<RegressionFit, SalienceError> {
    if pairs.len() < 3 {
        return Err(SalienceError::TooFewPairs);
    }
    let n = pairs.len() as f64;
    let mean_x = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let var_x: f64 = pairs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if var_x == 0.0 {
        return Err(SalienceError::SingularDesign);
    }
    let cov: f64 = pairs
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let beta1 = cov / var_x;
    Ok(RegressionFit {
        beta0: mean_y - beta1 * mean_x,
        beta1,
        n: pairs.len(),
    })
}

/// Residuals of the fit: observed news salience minus prediction.
pub fn divergence(
    fit: &RegressionFit,
    pairs: &BTreeMap<String, (f64, f64)>,
) -> Vec<DivergenceRecord> {
    pairs
        .iter()
        .map(|(iso3, &(x, y))| DivergenceRecord {
            iso3: iso3.clone(),
            divergence: y - fit.predict(x),
            band_halfwidth: 0.0,
            category: Category::Similar,
        })
        .collect()
}

/// Assign the similarity band and over/similar/under categories.
/// The band half-width is `band_fraction` of the most extreme |divergence|;
/// ties at the boundary categorize as Similar.
pub fn categorize(records: &mut [DivergenceRecord], band_fraction: f64) {
    let extreme = records
        .iter()
        .map(|r| r.divergence.abs())
        .fold(0.0_f64, f64::max);
    let half = band_fraction * extreme;
    for record in records.iter_mut() {
        record.band_halfwidth = half;
        record.category = if record.divergence > half {
            Category::Overreported
        } else if record.divergence < -half {
            Category::Underreported
        } else {
            Category::Similar
        };
    }
}
