//! Private-signal model: conditional densities, threshold tests and their
//! exact false-alarm / missed-detection probabilities.
//!
//! Every agent observes `Y = H + Z` and runs a likelihood ratio test against a
//! threshold that depends on its belief about `P[H = 0]` and the two error
//! costs. For additive Gaussian noise the test reduces to comparing `Y` with
//!
//! ```text
//! λ(q) = 1/2 + σ² · log(c_FA q / (c_MD (1 − q)))
//! ```
//!
//! and the error probabilities follow from the Gaussian tail function `Q`.

use std::f64::consts::SQRT_2;

use crate::error::{FusionError, Result};

/// Beliefs are clamped to `[BELIEF_FLOOR, 1 − BELIEF_FLOOR]` before log-odds are taken.
pub const BELIEF_FLOOR: f64 = 1e-9;

/// Tail function of the standard normal, `Q(x) = P[Z > x]`.
pub fn gaussian_q(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// `ln Q(x)`, accurate where `Q(x)` itself underflows.
pub fn ln_gaussian_q(x: f64) -> f64 {
    if x < 30.0 {
        return if x < 0.0 { (-gaussian_q(-x)).ln_1p() } else { gaussian_q(x).ln() };
    }
    // asymptotic series of the Mills ratio, error below 1e-14 for x >= 30
    let r = 1.0 / (x * x);
    let series = 1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r * (1.0 - 9.0 * r))));
    -0.5 * x * x - (x * (2.0 * std::f64::consts::PI).sqrt()).ln() + series.ln()
}

/// Standard normal density.
pub fn gaussian_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn clamp_belief(q: f64) -> f64 {
    q.clamp(BELIEF_FLOOR, 1.0 - BELIEF_FLOOR)
}

/// Checks that `q` is a probability and returns it clamped.
pub fn validate_belief(name: &'static str, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(FusionError::InvalidBelief { name, value: q });
    }
    Ok(clamp_belief(q))
}

/// `log(p / (1 − p))`.
pub fn log_odds(p: f64) -> f64 {
    p.ln() - (-p).ln_1p()
}

/// Inverse of [`log_odds`].
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Costs of a false alarm (deciding 1 under H = 0) and a missed detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostPair {
    pub c_fa: f64,
    pub c_md: f64,
}

impl CostPair {
    pub fn new(c_fa: f64, c_md: f64) -> Result<Self> {
        let costs = Self { c_fa, c_md };
        costs.validate()?;
        Ok(costs)
    }

    pub fn equal() -> Self {
        Self { c_fa: 1.0, c_md: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("false-alarm", self.c_fa), ("missed-detection", self.c_md)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(FusionError::InvalidCost { name, value });
            }
        }
        Ok(())
    }

    /// `c_MD / (c_FA + c_MD)`: the belief at which the Gaussian test threshold sits at 1/2.
    pub fn neutral_belief(&self) -> f64 {
        self.c_md / (self.c_fa + self.c_md)
    }

    /// `log(c_FA / c_MD)`.
    pub fn log_ratio(&self) -> f64 {
        (self.c_fa / self.c_md).ln()
    }
}

/// Error probabilities of a single threshold test.
///
/// All four conditional probabilities are evaluated directly so that tiny
/// complements keep full relative precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorProbs {
    /// `P[decide 1 | H = 0]`
    pub p_fa: f64,
    /// `P[decide 0 | H = 1]`
    pub p_md: f64,
    /// `P[decide 0 | H = 0]`
    pub p_true_neg: f64,
    /// `P[decide 1 | H = 1]`
    pub p_detect: f64,
}

impl ErrorProbs {
    /// `P[decide h | H = 0]`.
    pub fn given_h0(&self, decision: bool) -> f64 {
        if decision {
            self.p_fa
        } else {
            self.p_true_neg
        }
    }

    /// `P[decide h | H = 1]`.
    pub fn given_h1(&self, decision: bool) -> f64 {
        if decision {
            self.p_detect
        } else {
            self.p_md
        }
    }
}

/// Model of the private signal `Y` given the hypothesis.
///
/// Only additive Gaussian noise is built in. Thresholds returned by
/// [`ObservationModel::threshold_from_belief`] live in the model's natural test
/// statistic, which for the Gaussian kind is the signal itself.
#[derive(Debug, Clone, Copy, PartialEq)]
#[non_exhaustive]
pub enum ObservationModel {
    /// `Y = H + Z` with `Z ~ N(0, σ²)`.
    Gaussian { sigma: f64 },
}

impl ObservationModel {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        let model = ObservationModel::Gaussian { sigma };
        model.validate()?;
        Ok(model)
    }

    pub fn standard_gaussian() -> Self {
        ObservationModel::Gaussian { sigma: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ObservationModel::Gaussian { sigma } => {
                if sigma.is_finite() && sigma > 0.0 {
                    Ok(())
                } else {
                    Err(FusionError::InvalidSigma(sigma))
                }
            }
        }
    }

    pub fn sigma(&self) -> f64 {
        match *self {
            ObservationModel::Gaussian { sigma } => sigma,
        }
    }

    /// Conditional density `f(y | h)`.
    pub fn density(&self, y: f64, h: bool) -> f64 {
        match *self {
            ObservationModel::Gaussian { sigma } => {
                let mean = if h { 1.0 } else { 0.0 };
                gaussian_pdf((y - mean) / sigma) / sigma
            }
        }
    }

    /// `log f(y | 1) − log f(y | 0)`.
    pub fn log_likelihood_ratio(&self, y: f64) -> f64 {
        match *self {
            ObservationModel::Gaussian { sigma } => (y - 0.5) / (sigma * sigma),
        }
    }

    /// Test threshold for a belief given as log-odds of `P[H = 0]`.
    ///
    /// Used directly for updated beliefs, which are carried in log-odds and
    /// never clamped.
    pub fn threshold_from_log_odds(&self, costs: &CostPair, belief_log_odds: f64) -> f64 {
        match *self {
            ObservationModel::Gaussian { sigma } => {
                0.5 + sigma * sigma * (costs.log_ratio() + belief_log_odds)
            }
        }
    }

    /// Test threshold for belief `q` (clamped to the belief floor first).
    pub fn threshold_from_belief(&self, costs: &CostPair, q: f64) -> Result<f64> {
        let q = validate_belief("belief", q)?;
        Ok(self.threshold_from_log_odds(costs, log_odds(q)))
    }

    /// Belief whose test threshold equals `threshold`.
    pub fn belief_from_threshold(&self, costs: &CostPair, threshold: f64) -> f64 {
        match *self {
            ObservationModel::Gaussian { sigma } => {
                sigmoid((threshold - 0.5) / (sigma * sigma) - costs.log_ratio())
            }
        }
    }

    /// Exact error probabilities of the test that decides 1 iff the statistic
    /// exceeds `threshold`.
    pub fn error_probs(&self, threshold: f64) -> ErrorProbs {
        match *self {
            ObservationModel::Gaussian { sigma } => {
                if threshold == f64::INFINITY {
                    return ErrorProbs { p_fa: 0.0, p_md: 1.0, p_true_neg: 1.0, p_detect: 0.0 };
                }
                if threshold == f64::NEG_INFINITY {
                    return ErrorProbs { p_fa: 1.0, p_md: 0.0, p_true_neg: 0.0, p_detect: 1.0 };
                }
                let under_h0 = threshold / sigma;
                let under_h1 = (threshold - 1.0) / sigma;
                ErrorProbs {
                    p_fa: gaussian_q(under_h0),
                    p_md: gaussian_q(-under_h1),
                    p_true_neg: gaussian_q(-under_h0),
                    p_detect: gaussian_q(under_h1),
                }
            }
        }
    }

    /// Natural logs of [`Self::error_probs`], finite even where the
    /// probabilities underflow.
    pub fn log_error_probs(&self, threshold: f64) -> ErrorProbs {
        match *self {
            ObservationModel::Gaussian { sigma } => {
                let under_h0 = threshold / sigma;
                let under_h1 = (threshold - 1.0) / sigma;
                ErrorProbs {
                    p_fa: ln_gaussian_q(under_h0),
                    p_md: ln_gaussian_q(-under_h1),
                    p_true_neg: ln_gaussian_q(-under_h0),
                    p_detect: ln_gaussian_q(under_h1),
                }
            }
        }
    }

    /// Threshold test on an observed signal. Equality decides 0.
    pub fn decide(&self, y: f64, threshold: f64) -> bool {
        match *self {
            ObservationModel::Gaussian { .. } => y > threshold,
        }
    }

    /// Mean of `Y` under hypothesis `h`.
    pub fn mean(&self, h: bool) -> f64 {
        match *self {
            ObservationModel::Gaussian { .. } => {
                if h {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Sub-Gaussian variance proxy of the noise.
    pub fn variance_proxy(&self) -> f64 {
        match *self {
            ObservationModel::Gaussian { sigma } => sigma * sigma,
        }
    }

    /// Upper bound `exp(−t² / 2σ²)` on the one-sided tail `P[Y − E Y > t]`.
    pub fn tail_bound(&self, t: f64) -> f64 {
        (-t * t / (2.0 * self.variance_proxy())).exp()
    }
}
