//! Murphy decomposition of the deviance score.
//!
//! Scores are measured on the log-likelihood scale: the loss of a mean `mu`
//! for response `y` is `d(y, mu) / (2 phi)`, half the unit deviance per unit
//! dispersion. With this scaling the miscalibration term times the total
//! weight equals the in-sample log likelihood ratio statistic exactly.

use serde::{Deserialize, Serialize};

use crate::edf::TestSample;
use crate::error::{Error, Result};
use crate::isotonic::recalibrate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MurphyDecomposition {
    pub score: f64,
    pub unc: f64,
    pub dsc: f64,
    pub mcb: f64,
}

/// Weighted average loss of `means` on the sample.
pub fn score(sample: &TestSample, means: &[f64]) -> Result<f64> {
    if means.len() != sample.len() {
        return Err(Error::LengthMismatch {
            expected: sample.len(),
            found: means.len(),
        });
    }
    let family = sample.family();
    for &m in means {
        family.check_mean(m)?;
    }
    Ok(score_unchecked(sample, means))
}

/// Score allowing means on the closed boundary of the mean domain (as
/// produced by isotonic fits of boundary responses).
fn score_unchecked(sample: &TestSample, means: &[f64]) -> f64 {
    let family = sample.family();
    let scale = 0.5 / sample.phi();
    let total: f64 = sample
        .y()
        .iter()
        .zip(means)
        .zip(sample.weights())
        .map(|((&y, &m), &v)| v * scale * family.deviance_unchecked(y, m))
        .sum();
    total / sample.total_weight()
}

pub fn decompose(sample: &TestSample) -> Result<MurphyDecomposition> {
    let total_w = sample.total_weight();
    let y_bar = sample.y().iter().zip(sample.weights()).map(|(y, v)| y * v).sum::<f64>() / total_w;
    let recal = recalibrate(sample)?;
    let s_hat = score(sample, sample.mu_hat())?;
    let s_bar = score_unchecked(sample, &vec![y_bar; sample.len()]);
    let s_rc = score_unchecked(sample, &recal);
    Ok(MurphyDecomposition {
        score: s_hat,
        unc: s_bar,
        dsc: s_bar - s_rc,
        mcb: s_hat - s_rc,
    })
}

/// Miscalibration from the log likelihood ratio statistic.
pub fn mcb_from_log_lrs(log_lrs: f64, total_weight: f64) -> Result<f64> {
    if !(total_weight > 0.0 && total_weight.is_finite()) {
        return Err(Error::InvalidSample(format!("total weight must be positive, got {total_weight}")));
    }
    Ok(log_lrs / total_weight)
}

/// Log likelihood ratio statistic from the miscalibration term.
pub fn log_lrs_from_mcb(mcb: f64, total_weight: f64) -> Result<f64> {
    if !(total_weight > 0.0 && total_weight.is_finite()) {
        return Err(Error::InvalidSample(format!("total weight must be positive, got {total_weight}")));
    }
    Ok(mcb * total_weight)
}

/// Miscalibration written in canonical parameters,
/// `sum v_i (y_i (xi_i - theta_i) - (kappa(xi_i) - kappa(theta_i))) / phi / sum v_i`,
/// with recalibrated means clamped into the open mean domain.
pub fn mcb_canonical(sample: &TestSample) -> Result<f64> {
    let family = sample.family();
    let recal = recalibrate(sample)?;
    let mut total = 0.0;
    for (i, obs) in sample.observations().enumerate() {
        let theta = family.canonical_from_mean(obs.mu_hat)?;
        let xi = family.canonical_from_mean(family.clamp_mean(recal[i]))?;
        total += crate::edf::log_e_factor(family, sample.phi(), obs.v, theta, xi, obs.y)?;
    }
    Ok(total / sample.total_weight())
}
