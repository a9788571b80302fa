//! Generative label model over source outputs `Λ` and latent labels `y`.
//!
//! Each row contributes `exp(wᵀ φ(Λ_i, y_i))` with three factor blocks:
//!
//! * propensity: `1{λ_j ≠ 0}` per source,
//! * accuracy: `λ_j · y` per source (`+1` agree, `-1` disagree, `0` abstain),
//! * correlation: `1{λ_j = λ_k}` per modelled pair, which also fires when
//!   both sources abstain.
//!
//! With this accuracy factor a source's accuracy given that it votes is
//! `σ(2w)`, and the label posterior of the independent model is
//! `σ(2 Σ_j w_j λ_j)`.

mod exact;
mod gibbs;

use std::collections::BTreeSet;

pub use exact::{
    exact_marginal_loglik, fit_independent_exact, independent_loglik_and_gradient,
    marginal_loglik_enumerated, ENUMERATION_LIMIT,
};
pub use gibbs::{fit_gibbs_sgd, posterior_gibbs};

use crate::error::{Error, Result};
use crate::kv::{join, KvDoc};
use crate::labelmatrix::{LabelMatrix, Vote};
use crate::math::sigmoid;

/// Tag written into model files; readers refuse files without it.
pub const CONVENTION: &str = "acc=sigma(2w)";

/// Accuracy of a voting source with accuracy weight `w`: `σ(2w)`.
pub fn weight_to_accuracy(w: f64) -> f64 {
    sigmoid(2.0 * w)
}

/// Inverse of [`weight_to_accuracy`]: `½ ln(α / (1 − α))`.
pub fn accuracy_to_weight(alpha: f64) -> f64 {
    0.5 * (alpha / (1.0 - alpha)).ln()
}

/// Unordered pairs of sources modelled as correlated. Stored with `j < k`,
/// sorted, without repeats.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorrelationSet {
    pairs: Vec<(usize, usize)>,
}

impl CorrelationSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Validate and normalise a pair list for `m` sources.
    pub fn new(m: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in pairs {
            if a == b {
                return Err(Error::invalid(format!("self-pair ({a}, {a})")));
            }
            if a >= m || b >= m {
                return Err(Error::invalid(format!(
                    "pair ({a}, {b}) references a source outside 0..{m}"
                )));
            }
            if !set.insert((a.min(b), a.max(b))) {
                return Err(Error::invalid(format!("pair ({a}, {b}) listed twice")));
            }
        }
        Ok(CorrelationSet {
            pairs: set.into_iter().collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.index_of(a, b).is_some()
    }

    pub fn index_of(&self, a: usize, b: usize) -> Option<usize> {
        self.pairs.binary_search(&(a.min(b), a.max(b))).ok()
    }

    /// For each source, the `(other source, pair index)` entries touching it.
    pub fn neighbours(&self, m: usize) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); m];
        for (p, &(a, b)) in self.pairs.iter().enumerate() {
            adj[a].push((b, p));
            adj[b].push((a, p));
        }
        adj
    }

    /// `j-k` items joined by commas.
    pub fn to_list_string(&self) -> String {
        self.pairs
            .iter()
            .map(|(a, b)| format!("{a}-{b}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn parse_list(m: usize, s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Self::empty());
        }
        let pairs = s
            .split(',')
            .map(|item| {
                let (a, b) = item
                    .trim()
                    .split_once('-')
                    .ok_or_else(|| Error::invalid(format!("bad pair '{item}'")))?;
                let parse = |t: &str| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::invalid(format!("bad pair '{item}'")))
                };
                Ok((parse(a)?, parse(b)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(m, pairs)
    }
}

/// Weights of the generative model: `2m + |C|` parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerativeParams {
    lab: Vec<f64>,
    acc: Vec<f64>,
    corr: Vec<f64>,
    correlations: CorrelationSet,
}

impl GenerativeParams {
    pub fn new(
        lab: Vec<f64>,
        acc: Vec<f64>,
        correlations: CorrelationSet,
        corr: Vec<f64>,
    ) -> Result<Self> {
        if lab.len() != acc.len() {
            return Err(Error::Dimension {
                what: "accuracy weights",
                expected: lab.len(),
                found: acc.len(),
            });
        }
        if corr.len() != correlations.len() {
            return Err(Error::Dimension {
                what: "correlation weights",
                expected: correlations.len(),
                found: corr.len(),
            });
        }
        if let Some(&(a, b)) = correlations.pairs().last() {
            if a.max(b) >= lab.len() {
                return Err(Error::invalid("correlation pair outside source range"));
            }
        }
        let params = GenerativeParams {
            lab,
            acc,
            corr,
            correlations,
        };
        if !params.is_finite() {
            return Err(Error::invalid("non-finite weight"));
        }
        Ok(params)
    }

    /// Independent model with the given accuracy weights and zero propensity.
    pub fn independent(acc: Vec<f64>) -> Self {
        GenerativeParams {
            lab: vec![0.0; acc.len()],
            acc,
            corr: Vec::new(),
            correlations: CorrelationSet::empty(),
        }
    }

    pub fn zeros(m: usize, correlations: CorrelationSet) -> Self {
        GenerativeParams {
            lab: vec![0.0; m],
            acc: vec![0.0; m],
            corr: vec![0.0; correlations.len()],
            correlations,
        }
    }

    pub fn m(&self) -> usize {
        self.lab.len()
    }

    pub fn num_params(&self) -> usize {
        2 * self.m() + self.corr.len()
    }

    pub fn lab(&self) -> &[f64] {
        &self.lab
    }

    pub fn acc(&self) -> &[f64] {
        &self.acc
    }

    pub fn corr(&self) -> &[f64] {
        &self.corr
    }

    pub fn correlations(&self) -> &CorrelationSet {
        &self.correlations
    }

    pub fn corr_weight(&self, a: usize, b: usize) -> Option<f64> {
        self.correlations.index_of(a, b).map(|p| self.corr[p])
    }

    /// Per-source accuracies `σ(2 w_j)`.
    pub fn accuracies(&self) -> Vec<f64> {
        self.acc.iter().map(|&w| weight_to_accuracy(w)).collect()
    }

    /// All weights concatenated as `[lab, acc, corr]`.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        out.extend_from_slice(&self.lab);
        out.extend_from_slice(&self.acc);
        out.extend_from_slice(&self.corr);
        out
    }

    /// Replace all weights from a `[lab, acc, corr]` vector.
    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::Dimension {
                what: "flat parameter vector",
                expected: self.num_params(),
                found: flat.len(),
            });
        }
        let m = self.m();
        self.lab.copy_from_slice(&flat[..m]);
        self.acc.copy_from_slice(&flat[m..2 * m]);
        self.corr.copy_from_slice(&flat[2 * m..]);
        Ok(())
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut [f64], &mut [f64], &mut [f64]) {
        (&mut self.lab, &mut self.acc, &mut self.corr)
    }

    pub fn is_finite(&self) -> bool {
        self.lab
            .iter()
            .chain(&self.acc)
            .chain(&self.corr)
            .all(|w| w.is_finite())
    }

    /// `wᵀ φ(row, y)` for a dense row.
    pub fn energy(&self, row: &[Vote], y: Vote) -> f64 {
        let mut e = 0.0;
        for (j, &v) in row.iter().enumerate() {
            if v != 0 {
                e += self.lab[j] + self.acc[j] * (v * y) as f64;
            }
        }
        for (p, &(a, b)) in self.correlations.pairs().iter().enumerate() {
            if row[a] == row[b] {
                e += self.corr[p];
            }
        }
        e
    }

    pub fn check_matrix(&self, matrix: &LabelMatrix) -> Result<()> {
        if matrix.m() != self.m() {
            return Err(Error::Dimension {
                what: "label matrix columns (model m)",
                expected: self.m(),
                found: matrix.m(),
            });
        }
        Ok(())
    }

    /// Model file contents. `seed` is the seed used for fitting.
    pub fn to_kv(&self, seed: u64) -> KvDoc {
        let mut doc = KvDoc::new();
        doc.set("convention", CONVENTION)
            .set("m", self.m())
            .set("seed", seed)
            .set("correlations", self.correlations.to_list_string())
            .set("lab", join(&self.lab))
            .set("acc", join(&self.acc))
            .set("corr", join(&self.corr));
        doc
    }

    pub fn from_kv(doc: &KvDoc) -> Result<Self> {
        let convention = doc.require("convention")?;
        if convention != CONVENTION {
            return Err(Error::invalid(format!(
                "model uses weight convention '{convention}', expected '{CONVENTION}'"
            )));
        }
        let m: usize = doc.parse("m")?;
        let correlations = CorrelationSet::parse_list(m, doc.require("correlations")?)?;
        let lab = doc.parse_list("lab")?;
        if lab.len() != m {
            return Err(Error::Dimension {
                what: "propensity weights",
                expected: m,
                found: lab.len(),
            });
        }
        Self::new(
            lab,
            doc.parse_list("acc")?,
            correlations,
            doc.parse_list("corr")?,
        )
    }
}

/// Factor indicators for one row and label: `[lab (m), acc (m), corr (|C|)]`.
pub fn factor_values(row: &[Vote], y: Vote, correlations: &CorrelationSet) -> Vec<i8> {
    let mut out = Vec::with_capacity(2 * row.len() + correlations.len());
    out.extend(row.iter().map(|&v| (v != 0) as i8));
    out.extend(row.iter().map(|&v| v * y));
    out.extend(
        correlations
            .pairs()
            .iter()
            .map(|&(a, b)| (row[a] == row[b]) as i8),
    );
    out
}

/// Per-row positive-class probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbLabels(Vec<f64>);

impl ProbLabels {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
        }
        Ok(ProbLabels(probs))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Closed-form posterior of the independent model, `σ(2 Σ_j w_j λ_ij)`.
pub fn posterior_independent(
    matrix: &LabelMatrix,
    params: &GenerativeParams,
) -> Result<ProbLabels> {
    if !params.correlations().is_empty() {
        return Err(Error::invalid(
            "closed-form posterior requires an independent model (no correlations)",
        ));
    }
    params.check_matrix(matrix)?;
    Ok(ProbLabels(
        (0..matrix.n())
            .map(|i| sigmoid(2.0 * weighted_sum(matrix, i, params.acc())))
            .collect(),
    ))
}

pub(crate) fn weighted_sum(matrix: &LabelMatrix, i: usize, acc: &[f64]) -> f64 {
    matrix.row(i).map(|(j, v)| acc[j] * v as f64).sum()
}

/// Settings shared by the learners in this crate.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// Passes over the data for stochastic learners.
    pub epochs: usize,
    /// Iteration budget for the deterministic (full-gradient) solvers.
    pub max_iters: usize,
    pub step_size: f64,
    /// Use `step_size / sqrt(epoch + 1)` instead of a constant step.
    pub step_decay: bool,
    /// Return the mean of the end-of-epoch weights over the second half of
    /// training instead of the final iterate.
    pub tail_average: bool,
    /// Gibbs sweeps per negative-phase sample (the `k` of CD-k).
    pub gibbs_steps: usize,
    pub l2_reg: f64,
    pub seed: u64,
    pub init_acc_weight: f64,
    /// Every weight is clipped to `[-weight_cap, weight_cap]`.
    pub weight_cap: f64,
    /// Stop the deterministic solvers once the projected gradient's
    /// infinity norm falls below this.
    pub tolerance: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            epochs: 100,
            max_iters: 2000,
            step_size: 0.01,
            step_decay: false,
            tail_average: true,
            gibbs_steps: 1,
            l2_reg: 1e-4,
            seed: 0,
            init_acc_weight: accuracy_to_weight(0.7),
            weight_cap: 6.0,
            tolerance: 1e-7,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::invalid("step size must be positive"));
        }
        if self.l2_reg < 0.0 || !self.l2_reg.is_finite() {
            return Err(Error::invalid("l2 regularisation must be non-negative"));
        }
        if !(self.weight_cap > 0.0) {
            return Err(Error::invalid("weight cap must be positive"));
        }
        if !self.init_acc_weight.is_finite() {
            return Err(Error::invalid("initial accuracy weight must be finite"));
        }
        Ok(())
    }

    /// Key/value view used in file headers.
    pub fn describe(&self) -> String {
        format!(
            "epochs={} max_iters={} step_size={} step_decay={} tail_average={} gibbs_steps={} l2_reg={} seed={} init_acc_weight={} weight_cap={} tolerance={}",
            self.epochs,
            self.max_iters,
            self.step_size,
            self.step_decay,
            self.tail_average,
            self.gibbs_steps,
            self.l2_reg,
            self.seed,
            self.init_acc_weight,
            self.weight_cap,
            self.tolerance
        )
    }
}
