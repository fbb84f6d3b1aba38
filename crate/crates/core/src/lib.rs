//! Bayesian binary hypothesis testing in a star network of selfish agents
//! whose beliefs about the prior may be wrong.
//!
//! Local agents run likelihood ratio tests with their own beliefs; the fusion
//! agent updates its belief from the local decisions (interpreting them as if
//! every local agent shared its belief) and tests its own signal. This crate
//! computes the fusion agent's exact true Bayes risk, searches for belief
//! tuples that minimize it, fits Prelec reweighting curves to the optimal
//! local beliefs, and characterizes the many-agent limit and its exponent.

pub mod asymptotics;
pub mod error;
pub mod montecarlo;
pub mod observation;
pub mod network;
pub mod optimize;
pub mod prospect;
pub mod search;

pub use error::{FusionError, Result};
pub use network::{CountDistribution, CountProfile, FusionRule, NetworkConfig, RiskReport};
pub use observation::{gaussian_q, CostPair, ErrorProbs, ObservationModel};
