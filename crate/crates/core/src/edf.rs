//! Exponential dispersion family primitives.
//!
//! A response `Y ~ EDF(theta; v, phi)` has density
//! `exp((y theta - kappa(theta)) / (phi / v) + a(y, v / phi))`, mean
//! `kappa'(theta)` and variance `(phi / v) kappa''(theta)`. Everything the
//! tests need reduces to the cumulant `kappa`, the canonical link and its
//! inverse, the unit deviance and a sampler.
//!
//! Binomial responses are success fractions with the case weight `v` read as
//! the number of trials (with `phi = 1`; in general `v / phi` trials).

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Gamma, InverseGaussian, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest distance kept between a fitted mean and a boundary of the mean
/// domain before mapping it to the canonical scale.
pub const MEAN_CLAMP_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Poisson,
    Gamma,
    Normal,
    Binomial,
    InverseGaussian,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Poisson,
        Family::Gamma,
        Family::Normal,
        Family::Binomial,
        Family::InverseGaussian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Poisson => "poisson",
            Family::Gamma => "gamma",
            Family::Normal => "normal",
            Family::Binomial => "binomial",
            Family::InverseGaussian => "inverse_gaussian",
        }
    }

    pub fn from_name(name: &str) -> Option<Family> {
        match name.to_ascii_lowercase().replace('-', "_").as_str() {
            "poisson" => Some(Family::Poisson),
            "gamma" => Some(Family::Gamma),
            "normal" | "gaussian" => Some(Family::Normal),
            "binomial" | "bernoulli" => Some(Family::Binomial),
            "inverse_gaussian" | "inversegaussian" | "ig" => Some(Family::InverseGaussian),
            _ => None,
        }
    }

    /// Open interval of canonical parameters on which `kappa` is finite and smooth.
    pub fn effective_domain(self) -> (f64, f64) {
        match self {
            Family::Poisson | Family::Normal | Family::Binomial => (f64::NEG_INFINITY, f64::INFINITY),
            Family::Gamma | Family::InverseGaussian => (f64::NEG_INFINITY, 0.0),
        }
    }

    /// Open interval of attainable means.
    pub fn mean_domain(self) -> (f64, f64) {
        match self {
            Family::Normal => (f64::NEG_INFINITY, f64::INFINITY),
            Family::Binomial => (0.0, 1.0),
            Family::Poisson | Family::Gamma | Family::InverseGaussian => (0.0, f64::INFINITY),
        }
    }

    fn theta_bound(self) -> &'static str {
        match self {
            Family::Gamma | Family::InverseGaussian => "(-inf, 0)",
            _ => "(-inf, inf)",
        }
    }

    fn mean_bound(self) -> &'static str {
        match self {
            Family::Normal => "(-inf, inf)",
            Family::Binomial => "(0, 1)",
            _ => "(0, inf)",
        }
    }

    pub fn check_canonical(self, theta: f64) -> Result<()> {
        let (lo, hi) = self.effective_domain();
        if theta.is_finite() && theta > lo && theta < hi {
            Ok(())
        } else {
            Err(Error::domain(self, "canonical parameter", theta, self.theta_bound()))
        }
    }

    pub fn check_mean(self, mu: f64) -> Result<()> {
        let (lo, hi) = self.mean_domain();
        if mu.is_finite() && mu > lo && mu < hi {
            Ok(())
        } else {
            Err(Error::domain(self, "mean", mu, self.mean_bound()))
        }
    }

    /// Checks that `y` lies in the support of the response.
    pub fn check_response(self, y: f64) -> Result<()> {
        let ok = y.is_finite()
            && match self {
                Family::Normal => true,
                Family::Poisson => y >= 0.0,
                Family::Gamma | Family::InverseGaussian => y > 0.0,
                Family::Binomial => (0.0..=1.0).contains(&y),
            };
        if ok {
            Ok(())
        } else {
            let bound = match self {
                Family::Normal => "(-inf, inf)",
                Family::Poisson => "[0, inf)",
                Family::Gamma | Family::InverseGaussian => "(0, inf)",
                Family::Binomial => "[0, 1]",
            };
            Err(Error::domain(self, "response", y, bound))
        }
    }

    /// Cumulant function `kappa(theta)`.
    pub fn cumulant(self, theta: f64) -> Result<f64> {
        self.check_canonical(theta)?;
        Ok(self.cumulant_unchecked(theta))
    }

    #[inline]
    pub(crate) fn cumulant_unchecked(self, theta: f64) -> f64 {
        match self {
            Family::Poisson => theta.exp(),
            Family::Gamma => -(-theta).ln(),
            Family::Normal => 0.5 * theta * theta,
            Family::Binomial => softplus(theta),
            Family::InverseGaussian => -(-2.0 * theta).sqrt(),
        }
    }

    /// Mean `kappa'(theta)`.
    pub fn mean_from_canonical(self, theta: f64) -> Result<f64> {
        self.check_canonical(theta)?;
        Ok(self.mean_unchecked(theta))
    }

    #[inline]
    pub(crate) fn mean_unchecked(self, theta: f64) -> f64 {
        match self {
            Family::Poisson => theta.exp(),
            Family::Gamma => -1.0 / theta,
            Family::Normal => theta,
            Family::Binomial => logistic(theta),
            Family::InverseGaussian => 1.0 / (-2.0 * theta).sqrt(),
        }
    }

    /// Canonical link `(kappa')^{-1}(mu)`.
    pub fn canonical_from_mean(self, mu: f64) -> Result<f64> {
        self.check_mean(mu)?;
        Ok(self.canonical_unchecked(mu))
    }

    #[inline]
    pub(crate) fn canonical_unchecked(self, mu: f64) -> f64 {
        match self {
            Family::Poisson => mu.ln(),
            Family::Gamma => -1.0 / mu,
            Family::Normal => mu,
            Family::Binomial => mu.ln() - (-mu).ln_1p(),
            Family::InverseGaussian => -0.5 / (mu * mu),
        }
    }

    /// Variance function `V(mu) = kappa''((kappa')^{-1}(mu))`.
    pub fn variance_function(self, mu: f64) -> Result<f64> {
        self.check_mean(mu)?;
        Ok(match self {
            Family::Poisson => mu,
            Family::Gamma => mu * mu,
            Family::Normal => 1.0,
            Family::Binomial => mu * (1.0 - mu),
            Family::InverseGaussian => mu * mu * mu,
        })
    }

    /// Pulls `mu` at least [`MEAN_CLAMP_EPS`] inside the mean domain.
    pub fn clamp_mean(self, mu: f64) -> f64 {
        match self {
            Family::Normal => mu,
            Family::Binomial => mu.clamp(MEAN_CLAMP_EPS, 1.0 - MEAN_CLAMP_EPS),
            Family::Poisson | Family::Gamma | Family::InverseGaussian => mu.max(MEAN_CLAMP_EPS),
        }
    }

    /// Unit deviance `d(y, mu) = 2 [ y (theta_y - theta_mu) - kappa(theta_y) + kappa(theta_mu) ]`,
    /// with the usual `0 log 0 = 0` limits at the boundary of the support.
    pub fn unit_deviance(self, y: f64, mu: f64) -> Result<f64> {
        self.check_response(y)?;
        self.check_mean(mu)?;
        Ok(self.deviance_unchecked(y, mu))
    }

    /// Unit deviance that also accepts a mean on the closed boundary of the
    /// mean domain. Returns `+inf` when the mean is on the boundary but `y` is not.
    pub(crate) fn deviance_unchecked(self, y: f64, mu: f64) -> f64 {
        match self {
            Family::Poisson => {
                if mu <= 0.0 {
                    return if y == 0.0 { 0.0 } else { f64::INFINITY };
                }
                2.0 * (xlogy_ratio(y, mu) - y + mu)
            }
            Family::Gamma => {
                let r = y / mu;
                2.0 * (r - 1.0 - r.ln())
            }
            Family::Normal => (y - mu) * (y - mu),
            Family::Binomial => {
                if mu <= 0.0 || mu >= 1.0 {
                    return if y == mu { 0.0 } else { f64::INFINITY };
                }
                2.0 * (xlogy_ratio(y, mu) + xlogy_ratio(1.0 - y, 1.0 - mu))
            }
            Family::InverseGaussian => (y - mu) * (y - mu) / (mu * mu * y),
        }
    }

    /// Draws `Y ~ EDF(theta(mu); v, phi)`.
    pub fn sample<R: Rng + ?Sized>(self, mu: f64, v: f64, phi: f64, rng: &mut R) -> Result<f64> {
        self.check_mean(mu)?;
        check_weight_and_dispersion(self, v, phi)?;
        let precision = v / phi;
        Ok(match self {
            Family::Poisson => poisson_count(mu * precision, rng) / precision,
            Family::Gamma => {
                let g = Gamma::new(precision, mu / precision).expect("validated gamma parameters");
                g.sample(rng)
            }
            Family::Normal => {
                let g = Normal::new(mu, (1.0 / precision).sqrt()).expect("validated normal parameters");
                g.sample(rng)
            }
            Family::Binomial => {
                let trials = binomial_trials(self, precision)?;
                binomial_count(trials, mu, rng) / trials as f64
            }
            Family::InverseGaussian => {
                let g = InverseGaussian::new(mu, precision).expect("validated inverse Gaussian parameters");
                g.sample(rng)
            }
        })
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Family::from_name(s).ok_or_else(|| format!("unknown family '{s}'"))
    }
}

fn check_weight_and_dispersion(family: Family, v: f64, phi: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::NonpositiveWeight { index: 0, value: v });
    }
    if !(phi.is_finite() && phi > 0.0) {
        return Err(Error::domain(family, "dispersion", phi, "(0, inf)"));
    }
    Ok(())
}

fn binomial_trials(family: Family, precision: f64) -> Result<u64> {
    let m = precision.round();
    if m < 1.0 || (precision - m).abs() > 1e-9 * precision.max(1.0) {
        return Err(Error::domain(family, "trials v/phi", precision, "positive integers"));
    }
    Ok(m as u64)
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `y log(y / mu)` with `0 log 0 = 0`.
#[inline]
fn xlogy_ratio(y: f64, mu: f64) -> f64 {
    if y == 0.0 {
        0.0
    } else {
        y * (y / mu).ln()
    }
}

/// Poisson count; inversion for small means, rand_distr above.
fn poisson_count<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> f64 {
    if lambda < 30.0 {
        let u: f64 = rng.random();
        let mut p = (-lambda).exp();
        let mut cdf = p;
        let mut k = 0u32;
        while u > cdf && k < 1000 {
            k += 1;
            p *= lambda / f64::from(k);
            cdf += p;
        }
        f64::from(k)
    } else {
        Poisson::new(lambda).expect("positive finite rate").sample(rng)
    }
}

fn binomial_count<R: Rng + ?Sized>(trials: u64, p: f64, rng: &mut R) -> f64 {
    rand_distr::Binomial::new(trials, p).expect("p in (0, 1)").sample(rng) as f64
}

/// Log of one likelihood-ratio factor,
/// `(v / phi) * ( y (xi - theta) - (kappa(xi) - kappa(theta)) )`.
pub fn log_e_factor(family: Family, phi: f64, v: f64, theta: f64, xi: f64, y: f64) -> Result<f64> {
    log_power_e_factor(family, phi, v, theta, xi, y, 1.0)
}

/// Log of the tempered factor
/// `(v / phi) * ( t y (xi - theta) - (kappa(t xi + (1 - t) theta) - kappa(theta)) )`.
/// `t = 1` gives [`log_e_factor`].
pub fn log_power_e_factor(family: Family, phi: f64, v: f64, theta: f64, xi: f64, y: f64, t: f64) -> Result<f64> {
    family.check_canonical(theta)?;
    family.check_canonical(xi)?;
    family.check_response(y)?;
    check_weight_and_dispersion(family, v, phi)?;
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Config(format!("power exponent t = {t} must lie in (0, 1]")));
    }
    let blended = t * xi + (1.0 - t) * theta;
    Ok((v / phi)
        * (t * y * (xi - theta) - (family.cumulant_unchecked(blended) - family.cumulant_unchecked(theta))))
}

/// One test-sample record: response, predicted mean and case weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub y: f64,
    pub mu_hat: f64,
    pub v: f64,
}

/// Responses with their predicted means and weights, tied to a family and a
/// known dispersion. Stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSample {
    family: Family,
    phi: f64,
    y: Vec<f64>,
    mu_hat: Vec<f64>,
    v: Vec<f64>,
}

impl TestSample {
    pub fn new(family: Family, phi: f64, obs: &[Observation]) -> Result<Self> {
        Self::from_columns(
            family,
            phi,
            obs.iter().map(|o| o.y).collect(),
            obs.iter().map(|o| o.mu_hat).collect(),
            Some(obs.iter().map(|o| o.v).collect()),
        )
    }

    /// Builds a sample from columns; missing weights default to 1.
    pub fn from_columns(family: Family, phi: f64, y: Vec<f64>, mu_hat: Vec<f64>, v: Option<Vec<f64>>) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        if mu_hat.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: mu_hat.len(),
            });
        }
        let v = v.unwrap_or_else(|| vec![1.0; n]);
        if v.len() != n {
            return Err(Error::LengthMismatch { expected: n, found: v.len() });
        }
        if n < 2 {
            return Err(Error::InsufficientData(format!("a test sample needs at least 2 observations, got {n}")));
        }
        if !(phi.is_finite() && phi > 0.0) {
            return Err(Error::domain(family, "dispersion", phi, "(0, inf)"));
        }
        for i in 0..n {
            if !(v[i].is_finite() && v[i] > 0.0) {
                return Err(Error::NonpositiveWeight { index: i, value: v[i] });
            }
            family.check_response(y[i])?;
            family.check_mean(mu_hat[i])?;
        }
        Ok(TestSample {
            family,
            phi,
            y,
            mu_hat,
            v,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn mu_hat(&self) -> &[f64] {
        &self.mu_hat
    }

    pub fn weights(&self) -> &[f64] {
        &self.v
    }

    pub fn total_weight(&self) -> f64 {
        self.v.iter().sum()
    }

    pub fn observation(&self, i: usize) -> Observation {
        Observation {
            y: self.y[i],
            mu_hat: self.mu_hat[i],
            v: self.v[i],
        }
    }

    pub fn observations(&self) -> impl Iterator<Item = Observation> + '_ {
        (0..self.len()).map(move |i| self.observation(i))
    }

    /// Canonical parameters of the predicted means.
    pub fn canonical_predictions(&self) -> Vec<f64> {
        self.mu_hat.iter().map(|&m| self.family.canonical_unchecked(m)).collect()
    }

    /// Same predictions and weights with new responses. Responses are checked
    /// against the family support.
    pub fn with_responses(&self, y: Vec<f64>) -> Result<Self> {
        if y.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: y.len(),
            });
        }
        for &yi in &y {
            self.family.check_response(yi)?;
        }
        Ok(TestSample { y, ..self.clone() })
    }

    /// Draws fresh responses from the null model `Y_i ~ EDF(mu_hat_i; v_i, phi)`.
    pub fn simulate_null_responses<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.mu_hat
            .iter()
            .zip(&self.v)
            .map(|(&m, &w)| self.family.sample(m, w, self.phi, rng).expect("sample validated at construction"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn cumulant_values() {
        assert_eq!(Family::Poisson.cumulant(0.0).unwrap(), 1.0);
        assert_eq!(Family::Normal.cumulant(2.0).unwrap(), 2.0);
        assert!(close(Family::Gamma.cumulant(-2.0).unwrap(), -(2.0f64).ln(), 1e-15));
        assert!(close(Family::Binomial.cumulant(0.0).unwrap(), (2.0f64).ln(), 1e-15));
        assert!(close(Family::InverseGaussian.cumulant(-0.5).unwrap(), -1.0, 1e-15));
    }

    #[test]
    fn cumulant_domain_errors_name_the_family() {
        let err = Family::Gamma.cumulant(0.5).unwrap_err();
        match &err {
            Error::Domain { family, bound, .. } => {
                assert_eq!(*family, Family::Gamma);
                assert_eq!(*bound, "(-inf, 0)");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("gamma"));
        assert!(Family::InverseGaussian.cumulant(0.0).is_err());
        assert!(Family::Poisson.cumulant(f64::NAN).is_err());
    }

    #[test]
    fn link_examples() {
        assert!(close(Family::Poisson.mean_from_canonical(0.5f64.ln()).unwrap(), 0.5, 1e-15));
        let th = Family::Poisson.canonical_from_mean(0.25).unwrap();
        assert!(close(Family::Poisson.mean_from_canonical(th).unwrap(), 0.25, 1e-15));
        assert_eq!(Family::Binomial.mean_from_canonical(0.0).unwrap(), 0.5);
        assert!(Family::Binomial.canonical_from_mean(1.0).is_err());
        assert!(Family::Gamma.canonical_from_mean(0.0).is_err());
    }

    #[test]
    fn e_factor_examples() {
        let (th, xi) = (0.5f64.ln(), 0.7f64.ln());
        assert_eq!(log_e_factor(Family::Poisson, 1.0, 1.0, th, th, 3.0).unwrap(), 0.0);
        let one = log_e_factor(Family::Poisson, 1.0, 1.0, th, xi, 1.0).unwrap();
        assert!(close(one, 1.4f64.ln() - 0.2, 1e-14));
        assert!(close(one, 0.13647, 1e-5));
        let zero = log_e_factor(Family::Poisson, 1.0, 1.0, th, xi, 0.0).unwrap();
        assert!(close(zero, -0.2, 1e-14));
        assert!(log_e_factor(Family::Gamma, 1.0, 1.0, -1.0, 0.1, 1.0).is_err());
        assert!(log_e_factor(Family::Poisson, 1.0, 0.0, th, xi, 1.0).is_err());
    }

    #[test]
    fn deviance_examples() {
        assert_eq!(Family::Poisson.unit_deviance(3.0, 3.0).unwrap(), 0.0);
        assert!(close(Family::Poisson.unit_deviance(0.0, 0.5).unwrap(), 1.0, 1e-15));
        assert_eq!(Family::Normal.unit_deviance(1.0, 0.0).unwrap(), 1.0);
        assert!(close(Family::Binomial.unit_deviance(1.0, 0.5).unwrap(), 2.0 * 2.0f64.ln(), 1e-14));
        assert!(Family::Gamma.unit_deviance(0.0, 1.0).is_err());
        assert!(Family::Poisson.unit_deviance(-1.0, 1.0).is_err());
    }

    #[test]
    fn deviance_matches_canonical_form() {
        // d(y, mu) = 2 [ y (theta_y - theta_mu) - kappa(theta_y) + kappa(theta_mu) ]
        let cases = [
            (Family::Poisson, 2.0, 0.7),
            (Family::Gamma, 1.3, 2.1),
            (Family::Normal, -0.4, 1.1),
            (Family::Binomial, 0.3, 0.6),
            (Family::InverseGaussian, 0.8, 1.7),
        ];
        for (f, y, mu) in cases {
            let ty = f.canonical_from_mean(y).unwrap();
            let tm = f.canonical_from_mean(mu).unwrap();
            let direct = 2.0 * (y * (ty - tm) - f.cumulant(ty).unwrap() + f.cumulant(tm).unwrap());
            assert!(close(f.unit_deviance(y, mu).unwrap(), direct, 1e-12), "{f}");
        }
    }

    #[test]
    fn deviance_minimised_at_response() {
        let cases = [
            (Family::Poisson, 2.0),
            (Family::Gamma, 1.5),
            (Family::Normal, -0.3),
            (Family::Binomial, 0.4),
            (Family::InverseGaussian, 0.9),
        ];
        for (f, y) in cases {
            let (lo, hi) = match f {
                Family::Normal => (-2.0, 2.0),
                Family::Binomial => (0.01, 0.99),
                _ => (0.05, 4.0),
            };
            let best = (0..=2000)
                .map(|k| lo + (hi - lo) * k as f64 / 2000.0)
                .map(|m| (m, f.unit_deviance(y, m).unwrap()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assert!((best.0 - y).abs() <= (hi - lo) / 2000.0 + 1e-12, "{f}: argmin {}", best.0);
            assert!(best.1 >= 0.0);
        }
    }

    #[test]
    fn cumulant_is_strictly_convex() {
        let grid = |f: Family| -> Vec<f64> {
            match f {
                Family::Gamma | Family::InverseGaussian => (1..=40).map(|k| -0.1 * k as f64).collect(),
                _ => (-20..=20).map(|k| 0.2 * k as f64).collect(),
            }
        };
        for f in Family::ALL {
            let g = grid(f);
            for (a, &t1) in g.iter().enumerate() {
                for &t2 in &g[a + 1..] {
                    for t in [0.1, 0.3, 0.5, 0.9] {
                        let mid = f.cumulant(t * t1 + (1.0 - t) * t2).unwrap();
                        let chord = t * f.cumulant(t1).unwrap() + (1.0 - t) * f.cumulant(t2).unwrap();
                        assert!(mid < chord, "{f} at {t1}, {t2}, t={t}");
                    }
                }
            }
        }
    }

    #[test]
    fn link_round_trip() {
        for f in Family::ALL {
            let grid: Vec<f64> = match f {
                Family::Gamma | Family::InverseGaussian => (1..=200).map(|k| -0.05 * k as f64).collect(),
                Family::Binomial => (-100..=100).map(|k| 0.1 * k as f64).collect(),
                _ => (-100..=100).map(|k| 0.15 * k as f64).collect(),
            };
            for th in grid {
                let back = f.canonical_from_mean(f.mean_from_canonical(th).unwrap()).unwrap();
                assert!((back - th).abs() <= 1e-12 * (1.0 + th.abs()), "{f}: {th} -> {back}");
            }
        }
    }

    #[test]
    fn poisson_e_factor_has_unit_expectation() {
        // sum_y P(y; mu_theta) exp(log factor) = 1, truncated where the tail is negligible.
        for &(mu, mu_xi) in &[(0.5, 0.7), (0.1, 0.02), (3.0, 5.5), (0.05, 0.25)] {
            let th = f64::ln(mu);
            let xi = f64::ln(mu_xi);
            let mut total = 0.0;
            let mut p = (-mu).exp();
            for y in 0..200u32 {
                if y > 0 {
                    p *= mu / f64::from(y);
                }
                total += p * log_e_factor(Family::Poisson, 1.0, 1.0, th, xi, f64::from(y)).unwrap().exp();
            }
            assert!((total - 1.0).abs() < 1e-10, "{mu}, {mu_xi}: {total}");
        }
    }

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    #[test]
    fn sampler_moments() {
        let n = 100_000;
        let mut rng = stream(11, &[]);
        let draws: Vec<f64> = (0..n).map(|_| Family::Poisson.sample(0.1, 1.0, 1.0, &mut rng).unwrap()).collect();
        let (m, _) = mean_var(&draws);
        assert!((m - 0.1).abs() < 3.0 * (0.1f64 / n as f64).sqrt(), "poisson mean {m}");

        let draws: Vec<f64> = (0..n).map(|_| Family::Normal.sample(0.0, 1.0, 1.0, &mut rng).unwrap()).collect();
        let (_, v) = mean_var(&draws);
        // s.e. of the sample variance of a normal is sqrt(2 / (n - 1)).
        assert!((v - 1.0).abs() < 3.0 * (2.0 / (n as f64 - 1.0)).sqrt(), "normal variance {v}");

        let draws: Vec<f64> = (0..n).map(|_| Family::Gamma.sample(2.0, 4.0, 1.0, &mut rng).unwrap()).collect();
        let (m, v) = mean_var(&draws);
        assert!((m - 2.0).abs() < 3.0 * (1.0 / n as f64).sqrt(), "gamma mean {m}");
        // Gamma(shape 4, scale 0.5): fourth central moment 3 k (k + 2) s^4 = 4.5.
        let se_var = ((4.5 - 1.0) / n as f64).sqrt();
        assert!((v - 1.0).abs() < 3.0 * se_var, "gamma variance {v}");
    }

    #[test]
    fn sampler_weighting_conventions() {
        let n = 50_000;
        let mut rng = stream(12, &[]);
        // Poisson with exposure: y = N / v, N ~ Poi(mu v); Var(y) = mu / v.
        let draws: Vec<f64> = (0..n).map(|_| Family::Poisson.sample(0.4, 5.0, 1.0, &mut rng).unwrap()).collect();
        let (m, v) = mean_var(&draws);
        assert!((m - 0.4).abs() < 3.0 * (0.08f64 / n as f64).sqrt());
        assert!((v - 0.08).abs() < 0.004);
        // Binomial with 10 trials: success fraction.
        let draws: Vec<f64> = (0..n).map(|_| Family::Binomial.sample(0.3, 10.0, 1.0, &mut rng).unwrap()).collect();
        let (m, v) = mean_var(&draws);
        assert!((m - 0.3).abs() < 3.0 * (0.021f64 / n as f64).sqrt());
        assert!((v - 0.021).abs() < 0.001);
        assert!(draws.iter().all(|&y| (y * 10.0 - (y * 10.0).round()).abs() < 1e-12));
        assert!(Family::Binomial.sample(0.3, 2.5, 1.0, &mut rng).is_err());
        // Inverse Gaussian: Var = phi / v * mu^3.
        let draws: Vec<f64> =
            (0..n).map(|_| Family::InverseGaussian.sample(1.5, 2.0, 1.0, &mut rng).unwrap()).collect();
        let (m, _) = mean_var(&draws);
        assert!((m - 1.5).abs() < 3.0 * (1.6875f64 / n as f64).sqrt());
    }

    #[test]
    fn sample_validation() {
        let bad_weight = TestSample::from_columns(Family::Poisson, 1.0, vec![1.0, 0.0], vec![0.5, 0.5], Some(vec![1.0, 0.0]));
        assert!(matches!(bad_weight, Err(Error::NonpositiveWeight { index: 1, .. })));
        let bad_y = TestSample::from_columns(Family::Gamma, 1.0, vec![1.0, 0.0], vec![0.5, 0.5], None);
        assert!(matches!(bad_y, Err(Error::Domain { .. })));
        let short = TestSample::from_columns(Family::Poisson, 1.0, vec![1.0], vec![0.5], None);
        assert!(matches!(short, Err(Error::InsufficientData(_))));
        let bad_phi = TestSample::from_columns(Family::Poisson, 0.0, vec![1.0, 0.0], vec![0.5, 0.5], None);
        assert!(bad_phi.is_err());
        let ok = TestSample::from_columns(Family::Poisson, 1.0, vec![1.0, 0.0], vec![0.5, 0.5], None).unwrap();
        assert_eq!(ok.weights(), &[1.0, 1.0]);
        assert_eq!(ok.total_weight(), 2.0);
    }
}
