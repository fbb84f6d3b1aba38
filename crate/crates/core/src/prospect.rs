//! Prelec probability weighting and how well it reproduces the optimal local
//! beliefs.
//!
//! `w(p; α, β) = exp(−β (−ln p)^α)`. The local-belief curve `q1*(π0)` from a
//! prior sweep is fitted in the sup norm, and the risk paid by agents that
//! hold `w(π0)` instead of `q1*(π0)` is reported per prior.

use rayon::prelude::*;

use crate::error::{FusionError, Result};
use crate::network::NetworkConfig;
use crate::optimize::{optimize_q0, SweepPoint};
use crate::search::nelder_mead;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrelecParams {
    pub alpha: f64,
    /// Prelec's β, distinct from the risk exponent.
    pub beta_w: f64,
}

impl PrelecParams {
    pub fn new(alpha: f64, beta_w: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite() && beta_w > 0.0 && beta_w.is_finite()) {
            return Err(FusionError::InvalidSettings(format!(
                "Prelec parameters must be positive, got alpha={alpha}, beta={beta_w}"
            )));
        }
        Ok(Self { alpha, beta_w })
    }

    pub fn identity() -> Self {
        Self { alpha: 1.0, beta_w: 1.0 }
    }
}

/// Prelec weight of `p`, with `w(0) = 0` by continuous extension.
pub fn prelec(p: f64, params: PrelecParams) -> f64 {
    if p <= 0.0 {
        0.0
    } else if p >= 1.0 {
        1.0
    } else {
        (-params.beta_w * (-p.ln()).powf(params.alpha)).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSettings {
    pub alpha_range: (f64, f64),
    pub beta_range: (f64, f64),
    /// Points per axis of the coarse log-spaced grid.
    pub grid_points: usize,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self { alpha_range: (0.2, 3.0), beta_range: (0.2, 3.0), grid_points: 41, tol: 1e-12, max_iters: 4000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrelecFit {
    pub params: PrelecParams,
    pub linf_error: f64,
}

fn linf(curve: &[(f64, f64)], params: PrelecParams) -> f64 {
    curve.iter().map(|&(p, q)| (prelec(p, params) - q).abs()).fold(0.0, f64::max)
}

fn log_space(range: (f64, f64), n: usize) -> Vec<f64> {
    let (a, b) = (range.0.ln(), range.1.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

/// Minimax fit of a sampled curve `(π0, q)` by a Prelec function: coarse
/// log-spaced grid, then Nelder-Mead on `(ln α, ln β)`.
pub fn fit_prelec_minimax(curve: &[(f64, f64)], settings: &FitSettings) -> Result<PrelecFit> {
    if curve.is_empty() {
        return Err(FusionError::EmptyCurve);
    }
    if settings.grid_points < 2 {
        return Err(FusionError::InvalidSettings("fit grid needs at least two points per axis".into()));
    }
    let alphas = log_space(settings.alpha_range, settings.grid_points);
    let betas = log_space(settings.beta_range, settings.grid_points);
    let mut start = PrelecParams::identity();
    let mut best = f64::INFINITY;
    for &alpha in &alphas {
        for &beta_w in &betas {
            let params = PrelecParams { alpha, beta_w };
            let err = linf(curve, params);
            if err < best {
                best = err;
                start = params;
            }
        }
    }

    let objective = |v: &[f64]| linf(curve, PrelecParams { alpha: v[0].exp(), beta_w: v[1].exp() });
    let (v, err) = nelder_mead(
        objective,
        &[start.alpha.ln(), start.beta_w.ln()],
        0.05,
        settings.tol,
        settings.max_iters,
    );
    let params = if err < best { PrelecParams { alpha: v[0].exp(), beta_w: v[1].exp() } } else { start };
    Ok(PrelecFit { params, linf_error: linf(curve, params) })
}

/// How the fusion belief is chosen once the local agents hold Prelec beliefs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Q0Strategy {
    /// Re-minimize the risk over `q0` against the Prelec locals.
    Reoptimize,
    /// Keep the unconstrained optimum's `q0`.
    KeepOptimal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapPoint {
    pub pi0: f64,
    pub q_local_opt: f64,
    pub q_local_prelec: f64,
    pub q0_prelec: f64,
    pub risk_opt: f64,
    pub risk_prelec: f64,
}

impl GapPoint {
    pub fn gap(&self) -> f64 {
        self.risk_prelec - self.risk_opt
    }
}

/// Risk with Prelec-weighted local beliefs next to the optimal risk, for each
/// point of a prior sweep produced with tied local beliefs.
pub fn prelec_risk_gap(
    template: &NetworkConfig,
    sweep: &[SweepPoint],
    params: PrelecParams,
    strategy: Q0Strategy,
) -> Result<Vec<GapPoint>> {
    template.validate()?;
    if sweep.is_empty() {
        return Err(FusionError::EmptyCurve);
    }
    Ok(sweep
        .par_iter()
        .map(|point| {
            let mut config = template.clone();
            config.pi0 = point.pi0;
            let q = prelec(point.pi0, params);
            let locals = vec![q; template.n()];
            config.set_beliefs(point.beliefs[0], &locals);
            let (q0, risk_prelec) = match strategy {
                Q0Strategy::KeepOptimal => (config.q0, config.risk()),
                Q0Strategy::Reoptimize => {
                    let (q0, r) = optimize_q0(&config, 1e-9);
                    // never report worse than keeping the optimal q0
                    let kept = config.risk();
                    if kept <= r {
                        (config.q0, kept)
                    } else {
                        (q0, r)
                    }
                }
            };
            GapPoint {
                pi0: point.pi0,
                q_local_opt: point.beliefs[1],
                q_local_prelec: config.q_local[0],
                q0_prelec: q0,
                risk_opt: point.risk,
                risk_prelec,
            }
        })
        .collect())
}

/// Point with the largest absolute gap; earliest wins ties.
pub fn max_gap(points: &[GapPoint]) -> Option<&GapPoint> {
    points.iter().fold(None, |best: Option<&GapPoint>, p| match best {
        Some(b) if b.gap().abs() >= p.gap().abs() => Some(b),
        _ => Some(p),
    })
}
