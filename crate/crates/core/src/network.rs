//! The star network: selfish local tests, the fusion agent's belief update
//! and final test, and the fusion agent's exact Bayes risk.
//!
//! The fusion agent interprets every local decision as if the local agent had
//! used the fusion agent's own belief `q0`. Those perceived probabilities are
//! the same for every local agent, so the updated belief depends on the local
//! decisions only through the number of ones. The true risk therefore reduces
//! to a sum over that count, whose distribution under each hypothesis is a
//! Poisson-binomial law over the agents' true detection probabilities.

use crate::error::{FusionError, Result};
use crate::observation::{
    log_odds, sigmoid, validate_belief, CostPair, ErrorProbs, ObservationModel,
};

/// Largest network accepted by [`NetworkConfig::exact_risk_bruteforce`].
pub const BRUTE_FORCE_MAX_AGENTS: usize = 20;

/// A star network with `N` local agents and the fusion agent (agent 0).
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    /// True prior `P[H = 0]`.
    pub pi0: f64,
    pub costs: CostPair,
    pub model: ObservationModel,
    /// Fusion agent's belief.
    pub q0: f64,
    /// Local agents' beliefs `q_1 … q_N`.
    pub q_local: Vec<f64>,
}

/// Distribution of the number of local "1" decisions under each hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct CountDistribution {
    pub pmf_h0: Vec<f64>,
    pub pmf_h1: Vec<f64>,
}

/// Fusion behaviour once `k` local agents have decided 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountProfile {
    pub k: usize,
    pub updated_belief: f64,
    pub threshold: f64,
    pub p_fa: f64,
    pub p_md: f64,
}

/// True Bayes risk of the fusion agent and its decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport {
    pub r0: f64,
    /// `P[fusion decides 1 | H = 0]`
    pub p_fa0: f64,
    /// `P[fusion decides 0 | H = 1]`
    pub p_md0: f64,
    pub per_count: Vec<CountProfile>,
}

/// Probability mass of the number of successes among independent Bernoulli
/// trials with the given success probabilities (O(n²) convolution).
pub fn poisson_binomial(success: &[f64]) -> Vec<f64> {
    let mut pmf = vec![0.0; success.len() + 1];
    pmf[0] = 1.0;
    for (n, &p) in success.iter().enumerate() {
        for k in (1..=n + 1).rev() {
            pmf[k] = pmf[k] * (1.0 - p) + pmf[k - 1] * p;
        }
        pmf[0] *= 1.0 - p;
    }
    pmf
}

/// The fusion agent's decision rule, fixed by its own belief.
///
/// Holds the perceived per-decision log-likelihood ratios so that the
/// belief update for any mix of local decisions is a sum in log-odds space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionRule {
    model: ObservationModel,
    costs: CostPair,
    prior_log_odds: f64,
    /// `log(p(0|0)/p(0|1))` as perceived under `q0`.
    per_zero: f64,
    /// `log(p(1|0)/p(1|1))` as perceived under `q0`.
    per_one: f64,
}

impl FusionRule {
    pub fn new(model: ObservationModel, costs: CostPair, q0: f64) -> Result<Self> {
        let q0 = validate_belief("q0", q0)?;
        let prior_log_odds = log_odds(q0);
        let ln = model.log_error_probs(model.threshold_from_log_odds(&costs, prior_log_odds));
        Ok(Self {
            model,
            costs,
            prior_log_odds,
            per_zero: ln.p_true_neg - ln.p_md,
            per_one: ln.p_fa - ln.p_detect,
        })
    }

    /// Log-odds of the updated belief after observing `zeros` local 0s and `ones` local 1s.
    pub fn updated_log_odds(&self, zeros: usize, ones: usize) -> f64 {
        self.prior_log_odds + zeros as f64 * self.per_zero + ones as f64 * self.per_one
    }

    pub fn updated_belief(&self, zeros: usize, ones: usize) -> f64 {
        sigmoid(self.updated_log_odds(zeros, ones))
    }

    /// Belief update for an explicit decision vector, summed decision by decision.
    pub fn updated_log_odds_for(&self, decisions: &[bool]) -> f64 {
        decisions.iter().fold(self.prior_log_odds, |acc, &d| {
            acc + if d { self.per_one } else { self.per_zero }
        })
    }

    pub fn threshold(&self, zeros: usize, ones: usize) -> f64 {
        self.model.threshold_from_log_odds(&self.costs, self.updated_log_odds(zeros, ones))
    }

    /// Fusion error probabilities over its own signal, given the local counts.
    pub fn conditional_errors(&self, zeros: usize, ones: usize) -> ErrorProbs {
        self.model.error_probs(self.threshold(zeros, ones))
    }

    pub fn decide(&self, zeros: usize, ones: usize, y0: f64) -> bool {
        self.model.decide(y0, self.threshold(zeros, ones))
    }

    /// Per-decision log factors `(log z1, log(z1·z2))`: the perceived update
    /// contributed by one local 0 and by one local 1.
    pub fn per_decision_log_factors(&self) -> (f64, f64) {
        (self.per_zero, self.per_one)
    }
}

impl NetworkConfig {
    /// Builds and validates a configuration. Beliefs are clamped to the belief floor.
    pub fn new(
        pi0: f64,
        costs: CostPair,
        model: ObservationModel,
        q0: f64,
        q_local: Vec<f64>,
    ) -> Result<Self> {
        let mut config = Self { pi0, costs, model, q0, q_local };
        config.validate()?;
        config.q0 = validate_belief("q0", q0)?;
        for q in config.q_local.iter_mut() {
            *q = validate_belief("local belief", *q)?;
        }
        Ok(config)
    }

    /// Standard Gaussian noise and unit costs.
    pub fn standard(pi0: f64, q0: f64, q_local: Vec<f64>) -> Result<Self> {
        Self::new(pi0, CostPair::equal(), ObservationModel::standard_gaussian(), q0, q_local)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pi0 > 0.0 && self.pi0 < 1.0) {
            return Err(FusionError::DegeneratePrior(self.pi0));
        }
        self.costs.validate()?;
        self.model.validate()?;
        if self.q_local.is_empty() {
            return Err(FusionError::NoLocalAgents);
        }
        validate_belief("q0", self.q0)?;
        for &q in &self.q_local {
            validate_belief("local belief", q)?;
        }
        Ok(())
    }

    /// Number of local agents.
    pub fn n(&self) -> usize {
        self.q_local.len()
    }

    /// Replaces all beliefs, clamping them. Intended for optimizer inner loops
    /// where the values are already known to be probabilities.
    pub fn set_beliefs(&mut self, q0: f64, q_local: &[f64]) {
        self.q0 = crate::observation::clamp_belief(q0);
        self.q_local.clear();
        self.q_local.extend(q_local.iter().map(|&q| crate::observation::clamp_belief(q)));
    }

    /// Belief tuple `(q0, q1, …, qN)`.
    pub fn beliefs(&self) -> Vec<f64> {
        std::iter::once(self.q0).chain(self.q_local.iter().copied()).collect()
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.n() {
            Err(FusionError::AgentIndex { index: i, n: self.n() })
        } else {
            Ok(())
        }
    }

    fn local_probs_unchecked(&self, i: usize) -> ErrorProbs {
        let q = self.q_local[i - 1];
        self.model.error_probs(self.model.threshold_from_log_odds(&self.costs, log_odds(q)))
    }

    /// True error probabilities of local agent `i` (1-based).
    pub fn local_error_probs(&self, i: usize) -> Result<ErrorProbs> {
        self.check_index(i)?;
        Ok(self.local_probs_unchecked(i))
    }

    /// Local error probabilities as the fusion agent perceives them, i.e. as if
    /// a local agent had used belief `q0`.
    pub fn perceived_local_probs(&self) -> ErrorProbs {
        self.model.error_probs(self.model.threshold_from_log_odds(&self.costs, log_odds(self.q0)))
    }

    pub fn fusion_rule(&self) -> FusionRule {
        FusionRule::new(self.model, self.costs, self.q0).expect("validated belief")
    }

    fn check_decisions(&self, decisions: &[bool]) -> Result<()> {
        if decisions.len() != self.n() {
            return Err(FusionError::DecisionLength { expected: self.n(), got: decisions.len() });
        }
        Ok(())
    }

    /// Fusion agent's updated belief after observing `decisions`.
    pub fn update_belief(&self, decisions: &[bool]) -> Result<f64> {
        self.check_decisions(decisions)?;
        Ok(sigmoid(self.fusion_rule().updated_log_odds_for(decisions)))
    }

    /// Updated belief when `ones` of the `N` local agents decided 1.
    pub fn update_belief_count(&self, ones: usize) -> f64 {
        let ones = ones.min(self.n());
        self.fusion_rule().updated_belief(self.n() - ones, ones)
    }

    /// Final decision of the fusion agent given the local decisions and its own signal.
    pub fn fusion_decide(&self, decisions: &[bool], y0: f64) -> Result<bool> {
        self.check_decisions(decisions)?;
        let rule = self.fusion_rule();
        let threshold = self
            .model
            .threshold_from_log_odds(&self.costs, rule.updated_log_odds_for(decisions));
        Ok(self.model.decide(y0, threshold))
    }

    fn local_probs_all(&self) -> Vec<ErrorProbs> {
        (1..=self.n()).map(|i| self.local_probs_unchecked(i)).collect()
    }

    fn counts_from(probs: &[ErrorProbs]) -> CountDistribution {
        let t0: Vec<f64> = probs.iter().map(|e| e.p_fa).collect();
        let t1: Vec<f64> = probs.iter().map(|e| e.p_detect).collect();
        CountDistribution { pmf_h0: poisson_binomial(&t0), pmf_h1: poisson_binomial(&t1) }
    }

    /// Distribution of the number of local 1-decisions under H = 0 and H = 1.
    pub fn count_distribution(&self) -> CountDistribution {
        Self::counts_from(&self.local_probs_all())
    }

    fn assemble(&self, fa: f64, md: f64) -> f64 {
        self.costs.c_fa * self.pi0 * fa + self.costs.c_md * (1.0 - self.pi0) * md
    }

    /// Exact true Bayes risk of the fusion agent with its per-count profile.
    pub fn exact_risk(&self) -> RiskReport {
        let n = self.n();
        let counts = self.count_distribution();
        let rule = self.fusion_rule();
        let mut per_count = Vec::with_capacity(n + 1);
        let (mut fa, mut md) = (0.0, 0.0);
        for k in 0..=n {
            let threshold = rule.threshold(n - k, k);
            let e = self.model.error_probs(threshold);
            fa += counts.pmf_h0[k] * e.p_fa;
            md += counts.pmf_h1[k] * e.p_md;
            per_count.push(CountProfile {
                k,
                updated_belief: rule.updated_belief(n - k, k),
                threshold,
                p_fa: e.p_fa,
                p_md: e.p_md,
            });
        }
        RiskReport { r0: self.assemble(fa, md), p_fa0: fa, p_md0: md, per_count }
    }

    /// Exact true Bayes risk only. Same arithmetic as [`Self::exact_risk`].
    pub fn risk(&self) -> f64 {
        let n = self.n();
        let counts = self.count_distribution();
        let rule = self.fusion_rule();
        let (mut fa, mut md) = (0.0, 0.0);
        for k in 0..=n {
            let e = rule.conditional_errors(n - k, k);
            fa += counts.pmf_h0[k] * e.p_fa;
            md += counts.pmf_h1[k] * e.p_md;
        }
        self.assemble(fa, md)
    }

    /// Exact risk by enumerating all `2^N` local decision vectors.
    pub fn exact_risk_bruteforce(&self) -> Result<RiskReport> {
        let n = self.n();
        if n > BRUTE_FORCE_MAX_AGENTS {
            return Err(FusionError::TooManyAgents { n, max: BRUTE_FORCE_MAX_AGENTS });
        }
        let local = self.local_probs_all();
        let rule = self.fusion_rule();
        let mut decisions = vec![false; n];
        let (mut fa, mut md) = (0.0, 0.0);
        for mask in 0u32..(1u32 << n) {
            let (mut p0, mut p1) = (1.0, 1.0);
            for (i, d) in decisions.iter_mut().enumerate() {
                *d = mask >> i & 1 == 1;
                p0 *= local[i].given_h0(*d);
                p1 *= local[i].given_h1(*d);
            }
            let threshold = self
                .model
                .threshold_from_log_odds(&self.costs, rule.updated_log_odds_for(&decisions));
            let e = self.model.error_probs(threshold);
            fa += p0 * e.p_fa;
            md += p1 * e.p_md;
        }
        let mut report = self.exact_risk();
        report.r0 = self.assemble(fa, md);
        report.p_fa0 = fa;
        report.p_md0 = md;
        Ok(report)
    }

    /// Fusion false-alarm and missed-detection probabilities with agent `j`'s
    /// decision pinned to `pinned` and all other agents random.
    pub fn conditional_fusion_errors(&self, j: usize, pinned: bool) -> Result<(f64, f64)> {
        self.check_index(j)?;
        let mut others = self.local_probs_all();
        others.remove(j - 1);
        let counts = Self::counts_from(&others);
        Ok(self.pinned_errors(&counts, pinned))
    }

    fn pinned_errors(&self, others: &CountDistribution, pinned: bool) -> (f64, f64) {
        let n = self.n();
        let rule = self.fusion_rule();
        let extra = usize::from(pinned);
        let (mut fa, mut md) = (0.0, 0.0);
        for k in 0..others.pmf_h0.len() {
            let ones = k + extra;
            let e = rule.conditional_errors(n - ones, ones);
            fa += others.pmf_h0[k] * e.p_fa;
            md += others.pmf_h1[k] * e.p_md;
        }
        (fa, md)
    }

    /// Differences `(p_FA(h_j=1) − p_FA(h_j=0), p_MD(h_j=0) − p_MD(h_j=1))`
    /// that balance agent `j`'s optimal belief.
    pub fn pinned_differences(&self, j: usize) -> Result<(f64, f64)> {
        self.check_index(j)?;
        let mut others = self.local_probs_all();
        others.remove(j - 1);
        let counts = Self::counts_from(&others);
        let (fa1, md1) = self.pinned_errors(&counts, true);
        let (fa0, md0) = self.pinned_errors(&counts, false);
        Ok((fa1 - fa0, md0 - md1))
    }

    /// Risk the fusion agent believes it incurs: its own belief taken as the
    /// prior and every local agent assumed to share that belief.
    pub fn perceived_risk(&self) -> f64 {
        let n = self.n();
        let perceived = self.perceived_local_probs();
        let pmf0 = poisson_binomial(&vec![perceived.p_fa; n]);
        let pmf1 = poisson_binomial(&vec![perceived.p_detect; n]);
        let rule = self.fusion_rule();
        let (mut fa, mut md) = (0.0, 0.0);
        for k in 0..=n {
            let e = rule.conditional_errors(n - k, k);
            fa += pmf0[k] * e.p_fa;
            md += pmf1[k] * e.p_md;
        }
        self.costs.c_fa * self.q0 * fa + self.costs.c_md * (1.0 - self.q0) * md
    }

    /// True Bayes risk of local agent `i` on its own.
    pub fn local_true_risk(&self, i: usize) -> Result<f64> {
        let e = self.local_error_probs(i)?;
        Ok(self.assemble(e.p_fa, e.p_md))
    }
}
