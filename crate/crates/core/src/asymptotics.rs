//! Behaviour of the network as the number of local agents grows.
//!
//! With identical local beliefs `q1` the fusion agent's log-odds drift by
//! `ln z1 + t ln z2` per agent, where `t` is the fraction of local 1-decisions
//! (`t0` under H=0, `t1` under H=1). The signs of the two drifts decide the
//! limiting risk:
//!
//! | drift under H=0 | drift under H=1 | region | limit of R0 |
//! |---|---|---|---|
//! | > 0 | < 0 | Case 1 | 0 |
//! | < 0 | < 0 | Case 2 | c_FA π0 |
//! | > 0 | > 0 | Case 3 | c_MD (1 − π0) |
//!
//! The fourth sign pattern cannot occur because `z2 < 1` and `t0 < t1`.
//!
//! The optimal error exponent over identical thresholds is
//! `β* = −min_λ min_s g(λ, s)` with
//! `g(λ, s) = ln(a^{1−s} (1−b)^s + (1−a)^{1−s} b^s)`, `a = 1 − FA(λ)`,
//! `b = 1 − MD(λ)`.

use std::fmt;

use rayon::prelude::*;

use crate::observation::{log_odds, CostPair, ErrorProbs, ObservationModel};
use crate::search::{golden_section_min, ternary_min};

/// Drifts within this distance of zero are reported as a region boundary.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// Risk vanishes.
    Case1,
    /// Fusion agent always raises a false alarm under H=0.
    Case2,
    /// Fusion agent always misses under H=1.
    Case3,
    /// Drift up under H=1 but down under H=0. Infeasible; kept so callers can
    /// assert it never appears.
    Case4,
    Boundary,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::Case1 => "Case1",
            Region::Case2 => "Case2",
            Region::Case3 => "Case3",
            Region::Case4 => "Case4",
            Region::Boundary => "boundary",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseClassification {
    /// `p(0|0) / p(0|1)` as perceived by the fusion agent.
    pub z1: f64,
    /// `[p(0|1) / p(0|0)] · [p(1|0) / p(1|1)]` as perceived by the fusion agent.
    pub z2: f64,
    /// Probability a local agent decides 1 under H=0.
    pub t0: f64,
    /// Probability a local agent decides 1 under H=1.
    pub t1: f64,
    /// `ln(z1 z2^t0)`.
    pub drift_h0: f64,
    /// `ln(z1 z2^t1)`.
    pub drift_h1: f64,
    pub region: Region,
}

impl PhaseClassification {
    /// Limit of the fusion agent's true risk, `None` off the three cases.
    pub fn limit_risk(&self, costs: &CostPair, pi0: f64) -> Option<f64> {
        match self.region {
            Region::Case1 => Some(0.0),
            Region::Case2 => Some(costs.c_fa * pi0),
            Region::Case3 => Some(costs.c_md * (1.0 - pi0)),
            Region::Case4 | Region::Boundary => None,
        }
    }
}

fn region_from_drifts(drift_h0: f64, drift_h1: f64) -> Region {
    if !(drift_h0.abs() > BOUNDARY_TOL && drift_h1.abs() > BOUNDARY_TOL) {
        return Region::Boundary;
    }
    match (drift_h0 > 0.0, drift_h1 > 0.0) {
        (true, false) => Region::Case1,
        (false, false) => Region::Case2,
        (true, true) => Region::Case3,
        (false, true) => Region::Case4,
    }
}

/// Limiting region for a fusion belief `q0` and identical local beliefs `q1`.
pub fn classify_phase(model: &ObservationModel, costs: &CostPair, q0: f64, q1: f64) -> PhaseClassification {
    let ln = model.log_error_probs(model.threshold_from_log_odds(costs, log_odds(q0)));
    let local = model.error_probs(model.threshold_from_log_odds(costs, log_odds(q1)));
    classify_from_log_probs(&ln, &local)
}

/// Classification from the logs of the fusion agent's perceived local error
/// probabilities and the locals' true error probabilities.
pub fn classify_from_log_probs(ln: &ErrorProbs, local: &ErrorProbs) -> PhaseClassification {
    let ln_z1 = ln.p_true_neg - ln.p_md;
    let ln_z2 = ln.p_md - ln.p_true_neg + ln.p_fa - ln.p_detect;
    let (t0, t1) = (local.p_fa, local.p_detect);
    let drift_h0 = ln_z1 + t0 * ln_z2;
    let drift_h1 = ln_z1 + t1 * ln_z2;
    PhaseClassification {
        z1: ln_z1.exp(),
        z2: ln_z2.exp(),
        t0,
        t1,
        drift_h0,
        drift_h1,
        region: region_from_drifts(drift_h0, drift_h1),
    }
}

/// Region map over a `(q0, q1)` lattice, row-major with `q0` outer.
pub fn region_map(
    model: &ObservationModel,
    costs: &CostPair,
    grid: &[f64],
) -> Vec<(f64, f64, PhaseClassification)> {
    grid.par_iter()
        .flat_map_iter(|&q0| grid.iter().map(move |&q1| (q0, q1, classify_phase(model, costs, q0, q1))))
        .collect()
}

fn ln_add_exp(x: f64, y: f64) -> f64 {
    let m = x.max(y);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((x - m).exp() + (y - m).exp()).ln()
}

fn g_from_probs(p: &ErrorProbs, s: f64) -> f64 {
    // a = 1 - FA, 1 - a = FA, b = 1 - MD, 1 - b = MD
    let term = |x: f64, y: f64| {
        let lx = (1.0 - s) * x.ln();
        let ly = s * y.ln();
        if (1.0 - s) == 0.0 {
            ly
        } else if s == 0.0 {
            lx
        } else {
            lx + ly
        }
    };
    ln_add_exp(term(p.p_true_neg, p.p_md), term(p.p_fa, p.p_detect))
}

/// `g(λ, s)`; zero for infinite thresholds.
pub fn g(model: &ObservationModel, lambda: f64, s: f64) -> f64 {
    g_from_probs(&model.error_probs(lambda), s)
}

/// Minimizer of `g(λ, ·)` over `[0, 1]` by ternary search.
pub fn min_over_s(model: &ObservationModel, lambda: f64, tol: f64) -> (f64, f64) {
    let p = model.error_probs(lambda);
    ternary_min(|s| g_from_probs(&p, s), 0.0, 1.0, tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentSettings {
    pub lambda_step: f64,
    /// Search `λ` over `[mean0 − span σ, mean1 + span σ]`.
    pub span_sigmas: f64,
    pub tol: f64,
}

impl Default for ExponentSettings {
    fn default() -> Self {
        Self { lambda_step: 1e-3, span_sigmas: 3.0, tol: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentReport {
    pub lambda_star: f64,
    pub s_star: f64,
    pub beta_star: f64,
    pub fa_at_opt: f64,
    pub md_at_opt: f64,
    /// Identical belief whose threshold is `λ*`.
    pub q_star: f64,
    pub variance_proxy: f64,
}

/// Best error exponent achievable with identical local thresholds.
pub fn optimal_exponent(model: &ObservationModel, costs: &CostPair, settings: &ExponentSettings) -> ExponentReport {
    let sigma = model.sigma();
    let lo = model.mean(false) - settings.span_sigmas * sigma;
    let hi = model.mean(true) + settings.span_sigmas * sigma;
    let inner = |lambda: f64| min_over_s(model, lambda, settings.tol).1;

    let steps = ((hi - lo) / settings.lambda_step).round() as usize;
    let (best_k, _) = (0..=steps)
        .into_par_iter()
        .map(|k| (k, inner(lo + k as f64 * settings.lambda_step)))
        .reduce(|| (usize::MAX, f64::INFINITY), |a, b| {
            match a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)) {
                std::cmp::Ordering::Greater => b,
                _ => a,
            }
        });
    let centre = lo + best_k as f64 * settings.lambda_step;
    let (lambda_star, _) = golden_section_min(
        inner,
        centre - settings.lambda_step,
        centre + settings.lambda_step,
        settings.tol,
    );
    let (s_star, g_min) = min_over_s(model, lambda_star, settings.tol);
    let probs = model.error_probs(lambda_star);
    ExponentReport {
        lambda_star,
        s_star,
        beta_star: -g_min,
        fa_at_opt: probs.p_fa,
        md_at_opt: probs.p_md,
        q_star: model.belief_from_threshold(costs, lambda_star),
        variance_proxy: model.variance_proxy(),
    }
}

/// `(λ, s*(λ), g(λ, s*(λ)))` at each threshold.
pub fn g_curve(model: &ObservationModel, lambdas: &[f64], tol: f64) -> Vec<(f64, f64, f64)> {
    lambdas
        .par_iter()
        .map(|&lambda| {
            let (s, v) = min_over_s(model, lambda, tol);
            (lambda, s, v)
        })
        .collect()
}

/// Chernoff information between Bernoulli(p1) and Bernoulli(p2).
pub fn chernoff_bernoulli(p1: f64, p2: f64) -> f64 {
    let f = |s: f64| ln_add_exp(s * p1.ln() + (1.0 - s) * p2.ln(), s * (1.0 - p1).ln() + (1.0 - s) * (1.0 - p2).ln());
    let (_, v) = ternary_min(f, 0.0, 1.0, 1e-12);
    (-v).max(0.0)
}

/// Three routes to the minimizing `s` of `g(λ, ·)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SStarComparison {
    pub lambda: f64,
    /// Ternary-search minimizer; the reference value.
    pub numerical: f64,
    /// Root of `∂g/∂s = 0`: `(ln(a/(1−a)) + ln(B/A)) / (A + B)` with
    /// `A = ln b − ln(1−a)`, `B = ln a − ln(1−b)`.
    pub stationary: Option<f64>,
    /// `ln((a/(1−a) + ln(B/A)) / (A + B))` as printed; `None` outside its domain.
    pub printed: Option<f64>,
}

/// Compares the numerical minimizer of `g(λ, ·)` with two closed forms.
pub fn app_g_closed_form_sstar(lambda: f64, model: &ObservationModel) -> SStarComparison {
    let p = model.error_probs(lambda);
    let (ln_a, ln_1ma) = (p.p_true_neg.ln(), p.p_fa.ln());
    let (ln_b, ln_1mb) = (p.p_detect.ln(), p.p_md.ln());
    let big_a = ln_b - ln_1ma;
    let big_b = ln_a - ln_1mb;
    let ratio = big_b / big_a;
    let valid = ratio.is_finite() && ratio > 0.0 && (big_a + big_b) != 0.0;

    let stationary = valid.then(|| (ln_a - ln_1ma + ratio.ln()) / (big_a + big_b)).filter(|s| s.is_finite());
    let printed = valid
        .then(|| ((ln_a - ln_1ma).exp() + ratio.ln()) / (big_a + big_b))
        .filter(|x| *x > 0.0 && x.is_finite())
        .map(f64::ln);
    SStarComparison { lambda, numerical: min_over_s(model, lambda, 1e-13).0, stationary, printed }
}
