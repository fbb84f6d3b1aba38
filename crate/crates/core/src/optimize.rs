//! Searches for belief tuples that minimize the fusion agent's true risk.
//!
//! Three routes are provided:
//!
//! - [`grid_search`]: exhaustive search on a refining lattice, used as the
//!   global reference.
//! - [`pbpo`] with [`PbpoVariant::Step`]: person-by-person optimization that
//!   moves one belief at a time by a fixed step `±Δ` (Gauss-Seidel order).
//! - [`pbpo`] with [`PbpoVariant::Exact`]: the same cyclic scheme, but each
//!   local belief jumps straight to the root of its stationarity condition
//!
//!   ```text
//!   q_j / (1 − q_j) = π0 / (1 − π0) · [p_FA(h_j=1) − p_FA(h_j=0)] / [p_MD(h_j=0) − p_MD(h_j=1)]
//!   ```
//!
//!   whose right side does not depend on `q_j`. The fusion belief has no such
//!   closed form and is found by a dense scan plus golden-section refinement.

use std::cell::RefCell;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{FusionError, Result};
use crate::network::NetworkConfig;
use crate::observation::{log_odds, sigmoid, BELIEF_FLOOR};
use crate::search::scan_then_golden;

/// Seed used for random restarts unless the caller overrides it.
pub const DEFAULT_SEED: u64 = 20_190_707;

/// Largest number of untied local agents accepted by [`grid_search`].
pub const GRID_MAX_FREE_AGENTS: usize = 3;

/// Finest accepted grid resolution (at most 10⁴ points per coordinate).
pub const MIN_GRID_RESOLUTION: f64 = 1e-4;

const COARSE_GRID: f64 = 0.02;
const Q0_SCAN_POINTS: usize = 199;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerSettings {
    /// PBPO step size Δ.
    pub step: f64,
    /// Stop once a sweep moves the belief tuple by at most this much (2-norm).
    pub eps: f64,
    pub max_iters: usize,
    pub restarts: usize,
    /// Finest lattice spacing of [`grid_search`].
    pub grid_resolution: f64,
    /// Constrain `q_1 = … = q_N`.
    pub tie_local_beliefs: bool,
    pub seed: u64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            step: 5e-4,
            eps: 1e-4,
            max_iters: 100_000,
            restarts: 8,
            grid_resolution: 2e-4,
            tie_local_beliefs: false,
            seed: DEFAULT_SEED,
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(FusionError::InvalidSettings(msg.to_string()));
        if !(self.step > 0.0 && self.step < 0.5) {
            return bad("step must be in (0, 0.5)");
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad("eps must be positive");
        }
        if self.max_iters == 0 || self.restarts == 0 {
            return bad("max_iters and restarts must be positive");
        }
        if !(self.grid_resolution >= MIN_GRID_RESOLUTION && self.grid_resolution < 0.5) {
            return bad("grid resolution must be in [1e-4, 0.5)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PbpoVariant {
    /// Fixed `±Δ` moves per coordinate.
    Step,
    /// Closed-form local updates and a 1-D search for the fusion belief.
    Exact,
}

/// State after one full sweep over the coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub iteration: usize,
    pub beliefs: Vec<f64>,
    pub risk: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    /// `(q0, q1, …, qN)`.
    pub beliefs: Vec<f64>,
    pub risk: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stationarity_residual: f64,
    /// Per-sweep history; empty for grid search.
    pub trace: Vec<SweepRecord>,
}

impl OptimizationResult {
    pub fn q0(&self) -> f64 {
        self.beliefs[0]
    }

    pub fn q_local(&self) -> &[f64] {
        &self.beliefs[1..]
    }
}

/// Outcome of a closed-form local belief update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateUpdate {
    pub belief: f64,
    /// Agent's decision never shifts the fusion outcome in the needed direction;
    /// the belief is returned unchanged.
    pub degenerate: bool,
}

/// Point of a prior sweep: the optimum found for one value of `π0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub pi0: f64,
    pub beliefs: Vec<f64>,
    pub risk: f64,
}

fn expand(coords: &[f64], n: usize, tied: bool) -> Vec<f64> {
    if tied {
        let mut beliefs = vec![coords[1]; n + 1];
        beliefs[0] = coords[0];
        beliefs
    } else {
        coords.to_vec()
    }
}

fn risk_at(config: &mut NetworkConfig, beliefs: &[f64]) -> f64 {
    config.set_beliefs(beliefs[0], &beliefs[1..]);
    config.risk()
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

fn better(a: (f64, Vec<f64>), b: (f64, Vec<f64>)) -> (f64, Vec<f64>) {
    match a.0.total_cmp(&b.0).then_with(|| lex_cmp(&a.1, &b.1)) {
        std::cmp::Ordering::Greater => b,
        _ => a,
    }
}

fn grid_levels(resolution: f64) -> Vec<f64> {
    let mut levels = Vec::new();
    let mut h = COARSE_GRID;
    while h > resolution * (1.0 + 1e-9) {
        levels.push(h);
        h /= 10.0;
    }
    levels.push(resolution);
    levels
}

/// Minimum of the risk over the cartesian product of per-coordinate candidates.
/// The reduction is a total order (risk, then lexicographic beliefs), so the
/// result does not depend on how the work is split across threads.
fn best_on_product(template: &NetworkConfig, axes: &[Vec<f64>], tied: bool) -> (f64, Vec<f64>) {
    let n = template.n();
    let total: usize = axes.iter().map(Vec::len).product();
    (0..total)
        .into_par_iter()
        .map_init(
            || (template.clone(), vec![0.0; axes.len()]),
            |(config, coords), mut idx| {
                for (c, axis) in coords.iter_mut().zip(axes).rev() {
                    *c = axis[idx % axis.len()];
                    idx /= axis.len();
                }
                let beliefs = expand(coords, n, tied);
                (risk_at(config, &beliefs), beliefs)
            },
        )
        .reduce(|| (f64::INFINITY, vec![f64::INFINITY; n + 1]), better)
}

/// Exhaustive search over a lattice refined from 0.02 down to the requested
/// resolution, each finer pass centred on the incumbent.
pub fn grid_search(template: &NetworkConfig, settings: &OptimizerSettings) -> Result<OptimizationResult> {
    template.validate()?;
    settings.validate()?;
    let n = template.n();
    let tied = settings.tie_local_beliefs;
    if !tied && n > GRID_MAX_FREE_AGENTS {
        return Err(FusionError::DimensionGuard { n, max: GRID_MAX_FREE_AGENTS });
    }
    let dims = if tied { 2 } else { n + 1 };

    let levels = grid_levels(settings.grid_resolution);
    let h0 = levels[0];
    let coarse: Vec<f64> =
        (1..).map(|k| k as f64 * h0).take_while(|&x| x < 1.0 - 1e-12).collect();
    let mut best = best_on_product(template, &vec![coarse; dims], tied);

    for pair in levels.windows(2) {
        let (prev, h) = (pair[0], pair[1]);
        let reach = (prev / h).round() as i64;
        let incumbent: Vec<f64> = if tied { vec![best.1[0], best.1[1]] } else { best.1.clone() };
        let axes: Vec<Vec<f64>> = incumbent
            .iter()
            .map(|&c| {
                (-reach..=reach)
                    .map(|m| c + m as f64 * h)
                    .filter(|&x| x > BELIEF_FLOOR && x < 1.0 - BELIEF_FLOOR)
                    .collect()
            })
            .collect();
        best = better(best, best_on_product(template, &axes, tied));
    }

    let (risk, beliefs) = best;
    let mut at = template.clone();
    at.set_beliefs(beliefs[0], &beliefs[1..]);
    Ok(OptimizationResult {
        stationarity_residual: stationarity_residual(&at),
        beliefs,
        risk,
        iterations: levels.len(),
        converged: true,
        trace: Vec::new(),
    })
}

/// Risk-minimizing fusion belief with the local beliefs held fixed.
///
/// The risk is not unimodal in `q0`, so a dense scan picks the basin before
/// golden-section refinement.
pub fn optimize_q0(config: &NetworkConfig, tol: f64) -> (f64, f64) {
    let work = RefCell::new(config.clone());
    let locals = config.q_local.clone();
    scan_then_golden(
        |q0| risk_at(&mut work.borrow_mut(), &[&[q0], locals.as_slice()].concat()),
        1e-3,
        1.0 - 1e-3,
        Q0_SCAN_POINTS,
        tol,
    )
}

/// Right side of the stationarity condition for agent `j`, in log-odds:
/// `log(π0/(1−π0)) + log(ΔFA_j / ΔMD_j)`. `None` when either difference is
/// non-positive.
pub fn balance_log_odds(config: &NetworkConfig, j: usize) -> Result<Option<f64>> {
    let (d_fa, d_md) = config.pinned_differences(j)?;
    if d_fa > 0.0 && d_md > 0.0 {
        Ok(Some(log_odds(config.pi0) + d_fa.ln() - d_md.ln()))
    } else {
        Ok(None)
    }
}

/// Belief of local agent `j` that solves its stationarity condition with all
/// other beliefs held fixed.
pub fn exact_coordinate_update(config: &NetworkConfig, j: usize) -> Result<CoordinateUpdate> {
    Ok(match balance_log_odds(config, j)? {
        Some(lo) => CoordinateUpdate { belief: sigmoid(lo), degenerate: false },
        None => CoordinateUpdate { belief: config.q_local[j - 1], degenerate: true },
    })
}

/// Largest violation of the local stationarity conditions, measured in
/// log-odds. Infinite when some agent's balance is undefined.
pub fn stationarity_residual(config: &NetworkConfig) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 1..=config.n() {
        match balance_log_odds(config, j).expect("index in range") {
            Some(rhs) => worst = worst.max((log_odds(config.q_local[j - 1]) - rhs).abs()),
            None => return f64::INFINITY,
        }
    }
    worst
}

/// Evaluates agent `j`'s balance right side along `grid` values of agent
/// `i`'s belief and reports whether it is strictly decreasing in grid order.
pub fn monotone_rhs_check(config: &NetworkConfig, j: usize, i: usize, grid: &[f64]) -> Result<bool> {
    let n = config.n();
    for index in [i, j] {
        if index == 0 || index > n {
            return Err(FusionError::AgentIndex { index, n });
        }
    }
    if i == j {
        return Err(FusionError::InvalidSettings("monotone check needs i != j".into()));
    }
    let mut work = config.clone();
    let mut previous = f64::INFINITY;
    for &q in grid {
        work.q_local[i - 1] = crate::observation::clamp_belief(q);
        let Some(rhs) = balance_log_odds(&work, j)? else {
            return Ok(false);
        };
        if rhs >= previous {
            return Ok(false);
        }
        previous = rhs;
    }
    Ok(true)
}

fn clamp_coord(x: f64) -> f64 {
    x.clamp(BELIEF_FLOOR, 1.0 - BELIEF_FLOOR)
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// One PBPO run starting from the template's beliefs.
pub fn pbpo_single(
    template: &NetworkConfig,
    settings: &OptimizerSettings,
    variant: PbpoVariant,
) -> Result<OptimizationResult> {
    template.validate()?;
    settings.validate()?;
    let n = template.n();
    let tied = settings.tie_local_beliefs;
    let mut coords: Vec<f64> = if tied {
        let mean = template.q_local.iter().sum::<f64>() / n as f64;
        vec![template.q0, mean]
    } else {
        template.beliefs()
    };
    let mut work = template.clone();
    let mut risk = risk_at(&mut work, &expand(&coords, n, tied));
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < settings.max_iters {
        iterations += 1;
        let before = coords.clone();
        match variant {
            PbpoVariant::Step => {
                for i in 0..coords.len() {
                    let mut plus = coords.clone();
                    plus[i] = clamp_coord(coords[i] + settings.step);
                    let mut minus = coords.clone();
                    minus[i] = clamp_coord(coords[i] - settings.step);
                    let r_plus = risk_at(&mut work, &expand(&plus, n, tied));
                    let r_minus = risk_at(&mut work, &expand(&minus, n, tied));
                    let (candidate, r) =
                        if r_plus < r_minus { (plus, r_plus) } else { (minus, r_minus) };
                    // a move that does not lower the risk is not taken
                    if r < risk {
                        coords = candidate;
                        risk = r;
                    }
                }
            }
            PbpoVariant::Exact => {
                let tol = settings.eps / 10.0;
                let beliefs = expand(&coords, n, tied);
                work.set_beliefs(beliefs[0], &beliefs[1..]);
                let (q0, r) = optimize_q0(&work, tol);
                if r < risk {
                    coords[0] = q0;
                    risk = r;
                }
                if tied {
                    let q0 = coords[0];
                    let scratch = RefCell::new(work.clone());
                    let (s, r) = scan_then_golden(
                        |s| risk_at(&mut scratch.borrow_mut(), &expand(&[q0, s], n, true)),
                        1e-3,
                        1.0 - 1e-3,
                        Q0_SCAN_POINTS,
                        tol,
                    );
                    if r < risk {
                        coords[1] = s;
                        risk = r;
                    }
                } else {
                    for j in 1..=n {
                        work.set_beliefs(coords[0], &coords[1..]);
                        let update = exact_coordinate_update(&work, j)?;
                        if update.degenerate {
                            continue;
                        }
                        let mut candidate = coords.clone();
                        candidate[j] = clamp_coord(update.belief);
                        let r = risk_at(&mut work, &candidate);
                        if r < risk {
                            coords = candidate;
                            risk = r;
                        }
                    }
                }
            }
        }
        trace.push(SweepRecord { iteration: iterations, beliefs: expand(&coords, n, tied), risk });
        if distance(&coords, &before) <= settings.eps {
            converged = true;
            break;
        }
    }

    let beliefs = expand(&coords, n, tied);
    work.set_beliefs(beliefs[0], &beliefs[1..]);
    Ok(OptimizationResult {
        stationarity_residual: stationarity_residual(&work),
        beliefs,
        risk,
        iterations,
        converged,
        trace,
    })
}

/// PBPO with restarts: run 0 starts from the template's beliefs, the others
/// from uniform random beliefs drawn from a seeded stream per restart. The
/// lowest-risk run wins, ties going to the earlier run.
pub fn pbpo(
    template: &NetworkConfig,
    settings: &OptimizerSettings,
    variant: PbpoVariant,
) -> Result<OptimizationResult> {
    template.validate()?;
    settings.validate()?;
    let runs: Vec<Result<OptimizationResult>> = (0..settings.restarts)
        .into_par_iter()
        .map(|run| {
            let mut start = template.clone();
            if run > 0 {
                let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
                rng.set_stream(run as u64);
                let q0 = rng.random_range(0.01..0.99);
                let locals: Vec<f64> = (0..template.n()).map(|_| rng.random_range(0.01..0.99)).collect();
                start.set_beliefs(q0, &locals);
            }
            pbpo_single(&start, settings, variant)
        })
        .collect();
    let mut best: Option<OptimizationResult> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().is_none_or(|b| run.risk < b.risk) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Grid-search optimum for each prior in `priors`, in input order.
pub fn sweep_prior(
    template: &NetworkConfig,
    priors: &[f64],
    settings: &OptimizerSettings,
) -> Result<Vec<SweepPoint>> {
    priors
        .par_iter()
        .map(|&pi0| {
            let mut config = template.clone();
            config.pi0 = pi0;
            let result = grid_search(&config, settings)?;
            Ok(SweepPoint { pi0, beliefs: result.beliefs, risk: result.risk })
        })
        .collect()
}

/// Risk over a `(q1, q2)` lattice with `q0` fixed, for two-agent networks.
/// Rows are ordered by `q1` then `q2`.
pub fn risk_contour(template: &NetworkConfig, q0: f64, grid: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
    template.validate()?;
    if template.n() != 2 {
        return Err(FusionError::InvalidSettings("contour needs exactly two local agents".into()));
    }
    Ok(grid
        .par_iter()
        .flat_map_iter(|&q1| {
            let mut config = template.clone();
            grid.iter()
                .map(move |&q2| (q1, q2, risk_at(&mut config, &[q0, q1, q2])))
                .collect::<Vec<_>>()
        })
        .collect())
}
