//! Calibration tests for mean predictions in the exponential dispersion family.
//!
//! * [`edf`]: cumulants, links, deviances and samplers for the Poisson, gamma,
//!   normal, binomial and inverse Gaussian families.
//! * [`isotonic`]: weighted PAV and isotonic recalibration.
//! * [`murphy`]: score decomposition into uncertainty, discrimination and
//!   miscalibration.
//! * [`classical`]: in-sample likelihood ratio statistic with a parametric
//!   bootstrap null, and CORP reliability diagrams with consistency bands.
//! * [`universal`]: split likelihood ratio e-values, their sub-sampled,
//!   tempered (power) and combined variants, and e-power diagnostics.
//! * [`simulate`]: the Poisson portfolio power study.

pub mod classical;
pub mod edf;
pub mod error;
pub mod isotonic;
pub mod murphy;
pub mod par;
pub mod rng;
pub mod simulate;
pub mod universal;

mod ranked;

pub use edf::{Family, Observation, TestSample};
pub use error::{Error, Result};
