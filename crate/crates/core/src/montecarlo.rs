//! Forward simulation of the network and empirical error-exponent fits.
//!
//! Every trial draws from its own ChaCha8 stream (`stream = trial index`),
//! and every agent reads from a fixed word offset inside that stream, so a
//! result depends only on `(config, trials, seed)` and never on how trials are
//! split across threads. Tallies are integer counts.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::asymptotics::{classify_phase, Region};
use crate::error::{FusionError, Result};
use crate::network::NetworkConfig;
use crate::observation::log_odds;

/// Largest network size for which [`estimate_exponent`] uses exact risks.
pub const EXACT_RISK_MAX_AGENTS: usize = 200;

/// 32-bit words reserved per agent inside a trial's stream.
const WORDS_PER_SLOT: u128 = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSpec {
    pub config: NetworkConfig,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationResult {
    pub empirical_risk: f64,
    /// Trials with H=0 where the fusion agent decided 1.
    pub fa_count: u64,
    /// Trials with H=1 where the fusion agent decided 0.
    pub md_count: u64,
    pub h0_count: u64,
    pub trials: u64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    fa: u64,
    md: u64,
    h0: u64,
}

impl std::ops::Add for Tally {
    type Output = Tally;
    fn add(self, o: Tally) -> Tally {
        Tally { fa: self.fa + o.fa, md: self.md + o.md, h0: self.h0 + o.h0 }
    }
}

/// Runs `spec.trials` independent forward passes of the network.
pub fn simulate(spec: &SimulationSpec) -> Result<SimulationResult> {
    let config = &spec.config;
    config.validate()?;
    if spec.trials == 0 {
        return Err(FusionError::InvalidSettings("trials must be at least 1".into()));
    }
    let model = config.model;
    let rule = config.fusion_rule();
    let thresholds: Vec<f64> = config
        .q_local
        .iter()
        .map(|&q| model.threshold_from_log_odds(&config.costs, log_odds(q)))
        .collect();
    let n = config.n();
    let sigma = model.sigma();

    let tally = (0..spec.trials)
        .into_par_iter()
        .fold_with(
            (Tally::default(), ChaCha8Rng::seed_from_u64(spec.seed)),
            |(mut tally, mut rng), trial| {
                rng.set_stream(trial);
                rng.set_word_pos(0);
                let h = rng.random::<f64>() >= config.pi0;
                let mean = model.mean(h);
                let mut ones = 0;
                for (i, &t) in thresholds.iter().enumerate() {
                    rng.set_word_pos((i as u128 + 2) * WORDS_PER_SLOT);
                    let z: f64 = rng.sample(StandardNormal);
                    ones += usize::from(model.decide(mean + sigma * z, t));
                }
                rng.set_word_pos(WORDS_PER_SLOT);
                let z: f64 = rng.sample(StandardNormal);
                let decision = rule.decide(n - ones, ones, mean + sigma * z);
                if h {
                    tally.md += u64::from(!decision);
                } else {
                    tally.h0 += 1;
                    tally.fa += u64::from(decision);
                }
                (tally, rng)
            },
        )
        .map(|(tally, _)| tally)
        .reduce(Tally::default, |a, b| a + b);

    let t = spec.trials as f64;
    let (c_fa, c_md) = (config.costs.c_fa, config.costs.c_md);
    let mean = (c_fa * tally.fa as f64 + c_md * tally.md as f64) / t;
    let second = (c_fa * c_fa * tally.fa as f64 + c_md * c_md * tally.md as f64) / t;
    let std_error = if spec.trials > 1 {
        ((second - mean * mean).max(0.0) * t / (t - 1.0) / t).sqrt()
    } else {
        0.0
    };
    Ok(SimulationResult {
        empirical_risk: mean,
        fa_count: tally.fa,
        md_count: tally.md,
        h0_count: tally.h0,
        trials: spec.trials,
        std_error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    /// `−ln(excess) = β N + c`.
    Linear,
    /// `−ln(excess) = β N + γ ln N + c`, absorbing a polynomial prefactor.
    WithLogPrefactor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFit {
    pub model: FitModel,
    pub beta_hat: f64,
    /// Coefficient of `ln N`; zero for [`FitModel::Linear`].
    pub log_coefficient: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentEstimate {
    pub region: Region,
    pub limit_risk: f64,
    /// `(N, R0, |R0 − limit|)` for every N used in the fits.
    pub points: Vec<(usize, f64, f64)>,
    /// N values dropped because the excess hit the floating-point floor.
    pub truncated: Vec<usize>,
    pub linear: ExponentFit,
    pub log_prefactor: ExponentFit,
}

impl ExponentEstimate {
    /// Reported slope, from the fit with the `ln N` term.
    pub fn beta_hat(&self) -> f64 {
        self.log_prefactor.beta_hat
    }

    pub fn fit(&self, model: FitModel) -> &ExponentFit {
        match model {
            FitModel::Linear => &self.linear,
            FitModel::WithLogPrefactor => &self.log_prefactor,
        }
    }
}

fn least_squares(xs: &[Vec<f64>], ys: &[f64], model: FitModel) -> ExponentFit {
    let cols = xs[0].len();
    let design = DMatrix::from_fn(xs.len(), cols, |r, c| xs[r][c]);
    let y = DVector::from_column_slice(ys);
    let coef = design.clone().svd(true, true).solve(&y, 1e-14).expect("svd computed with u and v");
    let fitted = &design * &coef;
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = ys.iter().zip(fitted.iter()).map(|(v, f)| (v - f).powi(2)).sum();
    ExponentFit {
        model,
        beta_hat: coef[0],
        log_coefficient: if cols == 3 { coef[1] } else { 0.0 },
        intercept: coef[cols - 1],
        r_squared: if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 },
    }
}

/// Risk of the template with `n` local agents all holding `q_local[0]`.
fn risk_at_size(template: &NetworkConfig, n: usize, trials: u64, seed: u64) -> Result<f64> {
    let mut config = template.clone();
    config.q_local = vec![template.q_local[0]; n];
    if n <= EXACT_RISK_MAX_AGENTS {
        Ok(config.risk())
    } else {
        Ok(simulate(&SimulationSpec { config, trials, seed })?.empirical_risk)
    }
}

/// Fits the decay rate of `|R0(N) − R0(∞)|` for identical local beliefs
/// `template.q_local[0]` and fusion belief `template.q0`.
///
/// Exact risks are used up to [`EXACT_RISK_MAX_AGENTS`] agents; larger sizes
/// are simulated with `trials` and `seed`.
pub fn estimate_exponent(
    template: &NetworkConfig,
    n_list: &[usize],
    trials: u64,
    seed: u64,
) -> Result<ExponentEstimate> {
    template.validate()?;
    if n_list.len() < 3 || n_list.windows(2).any(|w| w[0] >= w[1]) || n_list[0] == 0 {
        return Err(FusionError::InvalidSettings("N list must be increasing, positive, with at least 3 values".into()));
    }
    let phase = classify_phase(&template.model, &template.costs, template.q0, template.q_local[0]);
    let limit = phase.limit_risk(&template.costs, template.pi0).ok_or_else(|| {
        FusionError::InvalidSettings(format!("configuration is not inside a limit region ({})", phase.region))
    })?;

    let risks: Vec<f64> = n_list
        .par_iter()
        .map(|&n| risk_at_size(template, n, trials, seed))
        .collect::<Result<_>>()?;

    let mut points = Vec::new();
    let mut truncated = Vec::new();
    for (&n, &r) in n_list.iter().zip(&risks) {
        let excess = (r - limit).abs();
        let floor = 64.0 * f64::EPSILON * r.max(limit);
        if !truncated.is_empty() || excess <= floor || excess == 0.0 {
            truncated.push(n);
        } else {
            points.push((n, r, excess));
        }
    }
    if points.len() < 3 {
        return Err(FusionError::InvalidSettings(format!(
            "only {} sizes remain above the floating-point floor",
            points.len()
        )));
    }

    let ys: Vec<f64> = points.iter().map(|p| -p.2.ln()).collect();
    let linear_x: Vec<Vec<f64>> = points.iter().map(|p| vec![p.0 as f64, 1.0]).collect();
    let log_x: Vec<Vec<f64>> = points.iter().map(|p| vec![p.0 as f64, (p.0 as f64).ln(), 1.0]).collect();
    Ok(ExponentEstimate {
        region: phase.region,
        limit_risk: limit,
        linear: least_squares(&linear_x, &ys, FitModel::Linear),
        log_prefactor: least_squares(&log_x, &ys, FitModel::WithLogPrefactor),
        points,
        truncated,
    })
}
