//! Classical calibration inference.
//!
//! The likelihood ratio statistic compares the isotonic recalibration of the
//! predictions with the predictions themselves, in-sample. Its null
//! distribution has no usable closed form, so critical values come from a
//! parametric bootstrap: responses are redrawn from the predicted means with
//! the same weights and dispersion, and the statistic is recomputed.

use serde::{Deserialize, Serialize};

use crate::edf::TestSample;
use crate::error::{Error, Result};
use crate::isotonic::PavBuilder;
use crate::par;
use crate::ranked::RankedSample;
use crate::rng::stream;

/// Smallest accepted number of bootstrap replicates.
pub const MIN_BOOTSTRAP: usize = 100;

/// Log of the in-sample likelihood ratio statistic (isotonic MLE against the
/// predictions). Non-negative up to rounding.
pub fn log_lrs(sample: &TestSample) -> Result<f64> {
    let ranked = RankedSample::new(sample);
    let mut pav = PavBuilder::with_capacity(sample.len());
    Ok(ranked.log_lrs(sample.y(), &mut pav))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapNull {
    /// Bootstrap log statistics, ascending.
    pub statistics: Vec<f64>,
    pub n_boot: usize,
    pub seed: u64,
}

impl BootstrapNull {
    /// Nearest-rank empirical quantile.
    pub fn quantile(&self, p: f64) -> f64 {
        nearest_rank(&self.statistics, p)
    }

    /// `(1 + #{draws >= observed}) / (n_boot + 1)`.
    pub fn p_value(&self, observed: f64) -> f64 {
        let exceed = self.statistics.len() - self.statistics.partition_point(|&s| s < observed);
        (1 + exceed) as f64 / (self.n_boot + 1) as f64
    }
}

/// `sorted[ceil(p * len) - 1]`, clamped to the valid index range.
pub(crate) fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let len = sorted.len();
    let k = (p * len as f64).ceil() as usize;
    sorted[k.clamp(1, len) - 1]
}

fn check_n_boot(n_boot: usize) -> Result<()> {
    if n_boot < MIN_BOOTSTRAP {
        return Err(Error::Config(format!("n_boot must be at least {MIN_BOOTSTRAP}, got {n_boot}")));
    }
    Ok(())
}

/// Parametric bootstrap of the log statistic under the null. Replicate `b`
/// draws its responses from the stream `(seed, b)`.
pub fn bootstrap_null(sample: &TestSample, n_boot: usize, seed: u64) -> Result<BootstrapNull> {
    check_n_boot(n_boot)?;
    let ranked = RankedSample::new(sample);
    let mut statistics = par::map_indexed(n_boot, |b| {
        let mut rng = stream(seed, &[b as u64]);
        let y_star = sample.simulate_null_responses(&mut rng);
        let mut pav = PavBuilder::with_capacity(sample.len());
        ranked.log_lrs(&y_star, &mut pav)
    });
    statistics.sort_by(f64::total_cmp);
    Ok(BootstrapNull {
        statistics,
        n_boot,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrtReport {
    pub observed: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub n_boot: usize,
    pub seed: u64,
}

/// Bootstrap likelihood ratio test: reject when the observed log statistic
/// exceeds the empirical `1 - alpha` quantile of the bootstrap null.
pub fn lrt_test(sample: &TestSample, alpha: f64, n_boot: usize, seed: u64) -> Result<LrtReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let observed = log_lrs(sample)?;
    let null = bootstrap_null(sample, n_boot, seed)?;
    let critical_value = null.quantile(1.0 - alpha);
    Ok(LrtReport {
        observed,
        critical_value,
        p_value: null.p_value(observed),
        reject: observed > critical_value,
        alpha,
        n_boot,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagramPoint {
    pub mu_hat: f64,
    pub mu_rc: f64,
    pub band_lo: f64,
    pub band_hi: f64,
}

/// CORP reliability diagram with point-wise consistency band; one point per
/// distinct predicted mean, ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityDiagram {
    pub points: Vec<DiagramPoint>,
    pub level: f64,
    pub n_boot: usize,
    pub seed: u64,
}

impl ReliabilityDiagram {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mu_hat,mu_rc,band_lo,band_hi\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{},{}\n", p.mu_hat, p.mu_rc, p.band_lo, p.band_hi));
        }
        out
    }
}

/// Builds the reliability diagram. Bootstrap replicates are drawn exactly as
/// in [`bootstrap_null`]; the band at each predicted mean spans the
/// nearest-rank `(1 - level) / 2` and `(1 + level) / 2` quantiles of the
/// replicated recalibrated means.
pub fn reliability_diagram(sample: &TestSample, level: f64, n_boot: usize, seed: u64) -> Result<ReliabilityDiagram> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!("level must lie in (0, 1), got {level}")));
    }
    check_n_boot(n_boot)?;
    let ranked = RankedSample::new(sample);
    let mu = sample.mu_hat();
    let n = sample.len();

    // Positions (in sorted order) where a new distinct prediction starts.
    let order = ranked.order();
    let firsts: Vec<usize> = (0..n).filter(|&p| p == 0 || mu[order[p]] != mu[order[p - 1]]).map(|p| order[p]).collect();

    let mut pav = PavBuilder::with_capacity(n);
    let mut recal = vec![0.0; n];
    ranked.recalibrated_into(sample.y(), &mut pav, &mut recal);

    // Each replicate is a step function over the distinct points, stored as
    // runs (first distinct index, value).
    let replicates: Vec<Vec<(usize, f64)>> = par::map_indexed(n_boot, |b| {
        let mut rng = stream(seed, &[b as u64]);
        let y_star = sample.simulate_null_responses(&mut rng);
        let mut pav = PavBuilder::with_capacity(n);
        let mut out = vec![0.0; n];
        ranked.recalibrated_into(&y_star, &mut pav, &mut out);
        let mut runs: Vec<(usize, f64)> = Vec::new();
        for (k, &i) in firsts.iter().enumerate() {
            if runs.last().is_none_or(|&(_, v)| v != out[i]) {
                runs.push((k, out[i]));
            }
        }
        runs
    });

    let lo_p = (1.0 - level) / 2.0;
    let hi_p = (1.0 + level) / 2.0;
    let points = par::map_indexed(firsts.len(), |k| {
        let mut column: Vec<f64> = replicates
            .iter()
            .map(|runs| runs[runs.partition_point(|&(start, _)| start <= k) - 1].1)
            .collect();
        column.sort_by(f64::total_cmp);
        let i = firsts[k];
        DiagramPoint {
            mu_hat: mu[i],
            mu_rc: recal[i],
            band_lo: nearest_rank(&column, lo_p),
            band_hi: nearest_rank(&column, hi_p),
        }
    });
    Ok(ReliabilityDiagram {
        points,
        level,
        n_boot,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edf::{log_e_factor, Family};
    use crate::isotonic::pav_fit;
    use crate::murphy::decompose;
    use crate::rng::stream;
    use rand::Rng;

    #[test]
    fn zero_when_recalibration_is_identity() {
        let s = TestSample::from_columns(Family::Poisson, 1.0, vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0], None).unwrap();
        assert_eq!(log_lrs(&s).unwrap(), 0.0);
    }

    #[test]
    fn five_point_hand_computation() {
        let y = [0.0, 2.0, 0.0, 1.0, 3.0];
        let mu = [0.5, 0.8, 1.0, 1.5, 2.0];
        let s = TestSample::from_columns(Family::Poisson, 1.0, y.to_vec(), mu.to_vec(), None).unwrap();
        // PAV by hand: (0), (2, 0, 1) -> 1, (3).
        let fit = pav_fit(&y, &[1.0; 5], &mu).unwrap();
        let fitted: Vec<f64> = mu.iter().map(|&m| fit.predict(m)).collect();
        assert_eq!(fitted, vec![0.0, 1.0, 1.0, 1.0, 3.0]);
        let xi = [1e-12f64.ln(), 0.0, 0.0, 0.0, 3.0f64.ln()];
        let want: f64 = (0..5)
            .map(|i| log_e_factor(Family::Poisson, 1.0, 1.0, mu[i].ln(), xi[i], y[i]).unwrap())
            .sum();
        assert!((log_lrs(&s).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn bridge_to_mcb() {
        let mut rng = stream(21, &[]);
        let mu: Vec<f64> = (0..20).map(|_| rng.random_range(0.1..2.0)).collect();
        let y: Vec<f64> = mu.iter().map(|&m| Family::Poisson.sample(1.2 * m, 1.0, 1.0, &mut rng).unwrap()).collect();
        let s = TestSample::from_columns(Family::Poisson, 1.0, y, mu, None).unwrap();
        let l = log_lrs(&s).unwrap();
        let d = decompose(&s).unwrap();
        assert!(l >= 0.0);
        assert!((l - s.total_weight() * d.mcb).abs() < 1e-10);
    }

    #[test]
    fn bootstrap_shape_and_determinism() {
        let mut rng = stream(22, &[]);
        let mu: Vec<f64> = (0..200).map(|_| rng.random_range(0.1..1.0)).collect();
        let y: Vec<f64> = mu.iter().map(|&m| Family::Poisson.sample(m, 1.0, 1.0, &mut rng).unwrap()).collect();
        let s = TestSample::from_columns(Family::Poisson, 1.0, y, mu, None).unwrap();
        let a = bootstrap_null(&s, 100, 9).unwrap();
        let b = bootstrap_null(&s, 100, 9).unwrap();
        assert_eq!(a.statistics.len(), 100);
        assert!(a.statistics.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(
            a.statistics.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            b.statistics.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
        assert!(bootstrap_null(&s, 99, 9).is_err());
        let r = lrt_test(&s, 0.05, 100, 9).unwrap();
        assert_eq!(r.critical_value, a.statistics[94]);
        assert!(r.p_value > 0.0 && r.p_value <= 1.0);
        assert!(lrt_test(&s, 1.0, 100, 9).is_err());
    }

    #[test]
    fn p_value_counts_ties_and_exceedances() {
        let null = BootstrapNull {
            statistics: (1..=100).map(f64::from).collect(),
            n_boot: 100,
            seed: 0,
        };
        assert_eq!(null.p_value(101.0), 1.0 / 101.0);
        assert_eq!(null.p_value(100.0), 2.0 / 101.0);
        assert_eq!(null.p_value(0.0), 1.0);
        assert_eq!(null.quantile(0.95), 95.0);
        assert_eq!(null.quantile(0.0), 1.0);
    }

    #[test]
    fn diagram_on_constant_predictions_is_one_point() {
        let s = TestSample::from_columns(Family::Poisson, 1.0, vec![0.0, 1.0, 2.0, 1.0], vec![0.7; 4], None).unwrap();
        let d = reliability_diagram(&s, 0.9, 100, 1).unwrap();
        assert_eq!(d.points.len(), 1);
        assert_eq!(d.points[0].mu_hat, 0.7);
        assert_eq!(d.points[0].mu_rc, 1.0);
        assert!(d.points[0].band_lo <= d.points[0].band_hi);
        assert_eq!(d.to_csv().lines().count(), 2);
    }

    #[test]
    fn diagram_bands_are_ordered() {
        let mut rng = stream(23, &[]);
        let mu: Vec<f64> = (0..300).map(|_| rng.random_range(0.5..3.0)).collect();
        let y: Vec<f64> = mu.iter().map(|&m| Family::Poisson.sample(m, 1.0, 1.0, &mut rng).unwrap()).collect();
        let s = TestSample::from_columns(Family::Poisson, 1.0, y, mu, None).unwrap();
        let d = reliability_diagram(&s, 0.95, 200, 5).unwrap();
        assert_eq!(d.points.len(), 300);
        assert!(d.points.windows(2).all(|w| w[0].mu_hat < w[1].mu_hat && w[0].mu_rc <= w[1].mu_rc));
        assert!(d.points.iter().all(|p| p.band_lo <= p.band_hi));
        let inside = d.points.iter().filter(|p| p.band_lo <= p.mu_rc && p.mu_rc <= p.band_hi).count();
        assert!(inside as f64 >= 0.8 * 300.0, "{inside}");
        assert_eq!(d, reliability_diagram(&s, 0.95, 200, 5).unwrap());
    }
}
