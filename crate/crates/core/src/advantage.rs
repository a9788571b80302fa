//! Majority vote versus weighted vote: the empirical modeling advantage, the
//! label-matrix-only upper bound used to skip model fitting, the
//! density-regime bounds, and the strategy optimizer built on them.

use std::fmt;

use crate::error::{Error, Result};
use crate::genmodel::{CorrelationSet, FitConfig};
use crate::labelmatrix::{GoldLabels, LabelMatrix, Vote};
use crate::math::sigmoid;
use crate::structlearn::{sweep, SweepResult};

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Minimum predicted advantage (a fraction) worth fitting a model for.
    pub gamma: f64,
    /// Structure search resolution; thresholds `δ, 2δ, ..., 0.5` are tried.
    pub delta: f64,
    pub w_min: f64,
    pub w_bar: f64,
    pub w_max: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            gamma: 0.01,
            delta: 0.02,
            w_min: 0.5,
            w_bar: 1.0,
            w_max: 1.5,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::invalid("gamma must lie in [0, 1]"));
        }
        if !(self.delta > 0.0 && self.delta <= 0.5) {
            return Err(Error::invalid("delta must lie in (0, 0.5]"));
        }
        if !(0.0 < self.w_min && self.w_min <= self.w_bar && self.w_bar <= self.w_max) {
            return Err(Error::invalid(
                "weights must satisfy 0 < w_min <= w_bar <= w_max",
            ));
        }
        Ok(())
    }
}

/// Unweighted vote sum. Zero means a tie (or no votes).
pub fn majority_vote(row: &[Vote]) -> i64 {
    row.iter().map(|&v| v as i64).sum()
}

/// `Σ_j w_j λ_j`. Positive and negative mass are summed separately so that
/// equal weights on a tied row cancel exactly.
pub fn weighted_vote(row: &[Vote], weights: &[f64]) -> f64 {
    signed_sum(row.iter().zip(weights).map(|(&v, &w)| (v, w)))
}

fn sparse_weighted_vote(matrix: &LabelMatrix, i: usize, weights: &[f64]) -> f64 {
    signed_sum(matrix.row(i).map(|(j, v)| (v, weights[j])))
}

fn signed_sum(terms: impl Iterator<Item = (Vote, f64)>) -> f64 {
    let (mut pos, mut neg) = (0.0, 0.0);
    for (v, w) in terms {
        match v {
            1 => pos += w,
            -1 => neg += w,
            _ => {}
        }
    }
    pos - neg
}

/// Net fraction of rows where the weighted vote is right and the majority
/// vote is not, minus the reverse. A score of exactly zero counts as wrong
/// for both predictors.
pub fn empirical_advantage(
    matrix: &LabelMatrix,
    gold: &GoldLabels,
    weights: &[f64],
) -> Result<f64> {
    gold.check_against(matrix)?;
    if weights.len() != matrix.m() {
        return Err(Error::Dimension {
            what: "vote weights",
            expected: matrix.m(),
            found: weights.len(),
        });
    }
    if matrix.n() == 0 {
        return Err(Error::EmptyMatrix);
    }
    let mut net = 0i64;
    for (i, &y) in gold.as_slice().iter().enumerate() {
        let y = y as f64;
        let weighted_right = y * sparse_weighted_vote(matrix, i, weights) > 0.0;
        let majority_right = y * matrix.vote_sum(i) as f64 > 0.0;
        net += (weighted_right && !majority_right) as i64;
        net -= (!weighted_right && majority_right) as i64;
    }
    Ok(net as f64 / matrix.n() as f64)
}

/// Upper bound on the expected advantage of optimally weighted voting given
/// only the label matrix, assuming true weights in `[w_min, w_max]` with
/// mean `w_bar`:
///
/// `(1/n) Σ_i Σ_{y=±1} 1{y f_1(Λ_i) ≤ 0} · Φ(Λ_i, y) · σ(2 y w̄ f_1(Λ_i))`
///
/// where `Φ(Λ_i, y) = 1{c_y w_max > c_{−y} w_min}` says whether a weighted
/// vote could output `y` at all.
pub fn advantage_bound(matrix: &LabelMatrix, config: &OptimizerConfig) -> f64 {
    if matrix.n() == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..matrix.n() {
        let (mut pos, mut neg) = (0usize, 0usize);
        for (_, v) in matrix.row(i) {
            if v > 0 {
                pos += 1;
            } else {
                neg += 1;
            }
        }
        let f1 = pos as f64 - neg as f64;
        for (y, c_same, c_other) in [(1.0, pos, neg), (-1.0, neg, pos)] {
            let possible = c_same as f64 * config.w_max > c_other as f64 * config.w_min;
            if y * f1 <= 0.0 && possible {
                total += sigmoid(2.0 * y * config.w_bar * f1);
            }
        }
    }
    total / matrix.n() as f64
}

/// Low-density bound on the expected optimal advantage, `d̄² ᾱ (1 − ᾱ)`.
pub fn low_density_bound(d_bar: f64, alpha_bar: f64) -> f64 {
    d_bar * d_bar * alpha_bar * (1.0 - alpha_bar)
}

/// High-density bound on the expected optimal advantage,
/// `exp(−2 p_l (ᾱ − ½)² d̄)`. Requires better-than-chance sources.
pub fn high_density_bound(d_bar: f64, p_l: f64, alpha_bar: f64) -> Result<f64> {
    if alpha_bar <= 0.5 {
        return Err(Error::invalid(format!(
            "high-density bound needs mean accuracy > 0.5, got {alpha_bar}"
        )));
    }
    if !(p_l > 0.0 && p_l <= 1.0) {
        return Err(Error::invalid("propensity must lie in (0, 1]"));
    }
    Ok((-2.0 * p_l * (alpha_bar - 0.5).powi(2) * d_bar).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelingStrategy {
    MajorityVote,
    GenerativeModel {
        epsilon: f64,
        correlations: CorrelationSet,
    },
}

impl ModelingStrategy {
    pub fn short_name(&self) -> &'static str {
        match self {
            ModelingStrategy::MajorityVote => "MV",
            ModelingStrategy::GenerativeModel { .. } => "GM",
        }
    }
}

impl fmt::Display for ModelingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

/// The first branch of the strategy optimizer: is the predicted advantage
/// large enough to bother with a generative model?
pub fn prefers_generative(bound: f64, gamma: f64) -> bool {
    !(bound < gamma)
}

/// Everything the strategy optimizer computed on the way to its decision.
#[derive(Debug, Clone)]
pub struct StrategyOutcome {
    pub bound: f64,
    pub strategy: ModelingStrategy,
    pub sweep: Option<SweepResult>,
}

/// Return majority vote when the bound falls below `gamma`; otherwise sweep
/// correlation thresholds and model the structure at the elbow.
pub fn optimize(
    matrix: &LabelMatrix,
    config: &OptimizerConfig,
    fit: &FitConfig,
) -> Result<StrategyOutcome> {
    config.validate()?;
    let bound = advantage_bound(matrix, config);
    if !prefers_generative(bound, config.gamma) {
        return Ok(StrategyOutcome {
            bound,
            strategy: ModelingStrategy::MajorityVote,
            sweep: None,
        });
    }
    let result = sweep(matrix, config.delta, fit)?;
    let chosen = result.chosen_point();
    let strategy = ModelingStrategy::GenerativeModel {
        epsilon: chosen.epsilon,
        correlations: chosen.selected.clone(),
    };
    Ok(StrategyOutcome {
        bound,
        strategy,
        sweep: Some(result),
    })
}

pub fn choose_strategy(
    matrix: &LabelMatrix,
    config: &OptimizerConfig,
    fit: &FitConfig,
) -> Result<ModelingStrategy> {
    optimize(matrix, config, fit).map(|o| o.strategy)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageReport {
    pub empirical_advantage: f64,
    /// Only known when the generating weights are available.
    pub optimal_advantage: Option<f64>,
    pub bound: f64,
    pub low_density_bound: Option<f64>,
    pub high_density_bound: Option<f64>,
}

/// Header line matching [`table_row`].
pub fn table_header() -> String {
    format!(
        "{:<12} {:>8} {:>8} {:>9} {:>6}",
        "dataset", "A_w(%)", "A~*(%)", "strategy", "d"
    )
}

/// One row in the layout `name, A_w %, Ã* %, strategy, density`.
pub fn table_row(
    name: &str,
    empirical_advantage: Option<f64>,
    bound: f64,
    strategy: &str,
    density: f64,
) -> String {
    let aw = empirical_advantage.map_or("-".to_string(), |a| format!("{:.1}", 100.0 * a));
    format!(
        "{:<12} {:>8} {:>8.1} {:>9} {:>6.1}",
        name,
        aw,
        100.0 * bound,
        strategy,
        density
    )
}

/// Binary classification metrics on scores where a score of exactly zero
/// (no decision) is counted as a negative prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

pub fn classification_metrics(scores: &[f64], gold: &[Vote]) -> Result<ClassificationMetrics> {
    if scores.len() != gold.len() {
        return Err(Error::Dimension {
            what: "scores",
            expected: gold.len(),
            found: scores.len(),
        });
    }
    let (mut tp, mut fp, mut tn, mut fneg) = (0usize, 0usize, 0usize, 0usize);
    for (&s, &y) in scores.iter().zip(gold) {
        match (s > 0.0, y > 0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fneg += 1,
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fneg);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(ClassificationMetrics {
        accuracy: ratio(tp + tn, scores.len()),
        precision,
        recall,
        f1,
        support: scores.len(),
    })
}
