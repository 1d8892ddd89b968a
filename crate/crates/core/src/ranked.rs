//! A test sample pre-sorted by its predicted means.
//!
//! The ordering of `mu_hat` never changes across bootstrap replicates or
//! random partitions, so it is computed once and every later isotonic fit is
//! a linear pass.

use crate::edf::{Family, TestSample};
use crate::isotonic::{rank_order, PavBuilder};

pub(crate) struct RankedSample<'a> {
    sample: &'a TestSample,
    order: Vec<usize>,
    theta: Vec<f64>,
    kappa_theta: Vec<f64>,
}

/// Where the alternative canonical parameters come from.
#[derive(Clone, Copy)]
pub(crate) enum AltSource<'x> {
    /// Isotonic fit on the complementary part, mapped through the link.
    Isotonic,
    /// Fixed canonical parameters per observation (original indexing).
    Fixed(&'x [f64]),
}

impl<'a> RankedSample<'a> {
    pub(crate) fn new(sample: &'a TestSample) -> Self {
        let family = sample.family();
        let theta = sample.canonical_predictions();
        let kappa_theta = theta.iter().map(|&t| family.cumulant_unchecked(t)).collect();
        RankedSample {
            sample,
            order: rank_order(sample.mu_hat()),
            theta,
            kappa_theta,
        }
    }

    pub(crate) fn family(&self) -> Family {
        self.sample.family()
    }

    /// Indices sorted by predicted mean.
    pub(crate) fn order(&self) -> &[usize] {
        &self.order
    }

    #[inline]
    fn link_fitted(&self, value: f64) -> (f64, f64) {
        let family = self.family();
        let xi = family.canonical_unchecked(family.clamp_mean(value));
        (xi, family.cumulant_unchecked(xi))
    }

    /// Full-sample isotonic fit of `y` ranked by `mu_hat`; returns the fitted
    /// mean of every observation (original indexing) into `out`.
    pub(crate) fn recalibrated_into(&self, y: &[f64], pav: &mut PavBuilder, out: &mut [f64]) {
        let mu = self.sample.mu_hat();
        let v = self.sample.weights();
        pav.clear();
        for &i in &self.order {
            pav.push(mu[i], y[i], v[i]);
        }
        pav.finish();
        let mut k = 0;
        let nb = pav.n_blocks();
        for &i in &self.order {
            while k + 1 < nb && pav.block_left(k + 1) <= mu[i] {
                k += 1;
            }
            out[i] = pav.block_value(k);
        }
    }

    /// In-sample log likelihood ratio of the isotonic fit against the
    /// predictions, for responses `y`.
    pub(crate) fn log_lrs(&self, y: &[f64], pav: &mut PavBuilder) -> f64 {
        let mu = self.sample.mu_hat();
        let v = self.sample.weights();
        let inv_phi = 1.0 / self.sample.phi();
        pav.clear();
        for &i in &self.order {
            pav.push(mu[i], y[i], v[i]);
        }
        pav.finish();
        let nb = pav.n_blocks();
        let mut k = 0;
        let (mut xi, mut kxi) = self.link_fitted(pav.block_value(0));
        let mut total = 0.0;
        for &i in &self.order {
            if k + 1 < nb && pav.block_left(k + 1) <= mu[i] {
                while k + 1 < nb && pav.block_left(k + 1) <= mu[i] {
                    k += 1;
                }
                (xi, kxi) = self.link_fitted(pav.block_value(k));
            }
            total += v[i] * inv_phi * (y[i] * (xi - self.theta[i]) - (kxi - self.kappa_theta[i]));
        }
        total
    }

    /// Tempered hold-out log statistics on the observations flagged in `in_d0`,
    /// one sum per entry of `ts` written to `out`. The alternative is fitted on
    /// the remaining observations (or taken from `alt`).
    pub(crate) fn holdout_log_power(
        &self,
        in_d0: &[bool],
        alt: AltSource<'_>,
        ts: &[f64],
        pav: &mut PavBuilder,
        out: &mut [f64],
    ) {
        debug_assert_eq!(ts.len(), out.len());
        let family = self.family();
        let y = self.sample.y();
        let mu = self.sample.mu_hat();
        let v = self.sample.weights();
        let inv_phi = 1.0 / self.sample.phi();
        out.iter_mut().for_each(|o| *o = 0.0);

        let mut accumulate = |i: usize, xi: f64, kxi: f64| {
            let th = self.theta[i];
            let kth = self.kappa_theta[i];
            let scale = v[i] * inv_phi;
            let delta = xi - th;
            for (o, &t) in out.iter_mut().zip(ts) {
                let k_blend = if t == 1.0 {
                    kxi
                } else {
                    family.cumulant_unchecked(t * xi + (1.0 - t) * th)
                };
                *o += scale * (t * y[i] * delta - (k_blend - kth));
            }
        };

        match alt {
            AltSource::Fixed(xi_all) => {
                for &i in &self.order {
                    if in_d0[i] {
                        let xi = xi_all[i];
                        accumulate(i, xi, family.cumulant_unchecked(xi));
                    }
                }
            }
            AltSource::Isotonic => {
                pav.clear();
                for &i in &self.order {
                    if !in_d0[i] {
                        pav.push(mu[i], y[i], v[i]);
                    }
                }
                pav.finish();
                let nb = pav.n_blocks();
                debug_assert!(nb > 0, "training part must be non-empty");
                let mut k = 0;
                let (mut xi, mut kxi) = self.link_fitted(pav.block_value(0));
                for &i in &self.order {
                    if !in_d0[i] {
                        continue;
                    }
                    if k + 1 < nb && pav.block_left(k + 1) <= mu[i] {
                        while k + 1 < nb && pav.block_left(k + 1) <= mu[i] {
                            k += 1;
                        }
                        (xi, kxi) = self.link_fitted(pav.block_value(k));
                    }
                    accumulate(i, xi, kxi);
                }
            }
        }
    }
}
