//! Correlation structure selection by l1-regularised pseudolikelihood.
//!
//! For each source `j` we maximise `Σ_i log p(λ_ij | λ_i,−j)` with the true
//! label summed out. The free parameters are `j`'s propensity and accuracy
//! weights and its correlation weights `w_jk` to every other source; the
//! other sources' accuracy weights are held at the independent-model fit.
//! With `ε` as both the l1 coefficient and the selection threshold, a pair
//! `(j, k)` is kept when either solve gives `|w_jk| ≥ ε`.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::genmodel::{fit_independent_exact, CorrelationSet, FitConfig, GenerativeParams};
use crate::labelmatrix::{LabelMatrix, Vote};
use crate::math::{log_two_cosh, log_two_cosh_and_tanh};

/// Offsets into a per-source parameter vector: `[lab, acc, w_0 .. w_{m-1}]`.
const LAB: usize = 0;
const ACC: usize = 1;
const CORR: usize = 2;

/// Pseudolikelihood set-up shared by every threshold of a sweep: the matrix,
/// the independent-model fit the per-source solves condition on, and a
/// dense copy of the votes.
pub struct StructureLearner<'a> {
    matrix: &'a LabelMatrix,
    base: GenerativeParams,
    config: FitConfig,
    dense: Vec<Vote>,
    base_scores: Vec<f64>,
}

/// Per-source correlation weights from one l1 coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLikelihoodFit {
    pub l1: f64,
    /// `weights[j][k]` is `w_jk` from source `j`'s solve; `weights[j][j] = 0`.
    pub weights: Vec<Vec<f64>>,
    /// Full per-source parameter vectors, used to warm-start the next solve.
    solutions: Vec<Vec<f64>>,
}

impl PseudoLikelihoodFit {
    /// Pairs whose weight clears `threshold` in either direction, each with
    /// the larger-magnitude of its two weights.
    pub fn selected_pairs(&self, threshold: f64) -> Vec<(usize, usize, f64)> {
        let m = self.weights.len();
        let mut out = Vec::new();
        for j in 0..m {
            for k in j + 1..m {
                let (a, b) = (self.weights[j][k], self.weights[k][j]);
                if a.abs() >= threshold || b.abs() >= threshold {
                    out.push((j, k, if a.abs() >= b.abs() { a } else { b }));
                }
            }
        }
        out
    }

    pub fn select(&self, threshold: f64) -> CorrelationSet {
        CorrelationSet::new(
            self.weights.len(),
            self.selected_pairs(threshold)
                .into_iter()
                .map(|(j, k, _)| (j, k)),
        )
        .expect("pairs from a weight table are valid")
    }
}

impl<'a> StructureLearner<'a> {
    /// Fits the independent model once; every later solve conditions on it.
    pub fn new(matrix: &'a LabelMatrix, config: &FitConfig) -> Result<Self> {
        let base = fit_independent_exact(matrix, config)?;
        Self::with_base(matrix, base, config)
    }

    /// Use given independent-model weights instead of fitting them.
    pub fn with_base(
        matrix: &'a LabelMatrix,
        base: GenerativeParams,
        config: &FitConfig,
    ) -> Result<Self> {
        config.validate()?;
        base.check_matrix(matrix)?;
        if matrix.n() == 0 {
            return Err(Error::EmptyMatrix);
        }
        let m = matrix.m();
        let mut dense = vec![0 as Vote; matrix.n() * m];
        let mut base_scores = vec![0.0; matrix.n()];
        for i in 0..matrix.n() {
            matrix.fill_dense_row(i, &mut dense[i * m..(i + 1) * m]);
            base_scores[i] = matrix.row(i).map(|(j, v)| base.acc()[j] * v as f64).sum();
        }
        Ok(StructureLearner {
            matrix,
            base,
            config: config.clone(),
            dense,
            base_scores,
        })
    }

    pub fn base(&self) -> &GenerativeParams {
        &self.base
    }

    pub fn m(&self) -> usize {
        self.matrix.m()
    }

    /// Starting point of source `j`'s solve: base propensity and accuracy,
    /// zero correlation weights.
    pub fn initial_params(&self, j: usize) -> Vec<f64> {
        let mut theta = vec![0.0; CORR + self.m()];
        theta[LAB] = self.base.lab()[j];
        theta[ACC] = self.base.acc()[j];
        theta
    }

    /// Mean negative log-pseudolikelihood of source `j` (plus the l2 term)
    /// and its gradient. `theta` is `[lab_j, acc_j, w_j0, ..., w_j(m-1)]`;
    /// the entry for `w_jj` is ignored.
    pub fn source_objective(&self, j: usize, theta: &[f64], grad: &mut [f64]) -> f64 {
        let m = self.m();
        let n = self.matrix.n();
        let (lab, acc) = (theta[LAB], theta[ACC]);
        let w = &theta[CORR..];
        let w_total: f64 = w
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != j)
            .map(|(_, x)| x)
            .sum();
        let base_acc_j = self.base.acc()[j];

        grad.fill(0.0);
        let mut ll = 0.0;
        let mut d_lab = 0.0;
        let mut d_acc = 0.0;
        let mut d_abstain = 0.0;
        let mut d_corr = vec![0.0; m];

        for i in 0..n {
            let observed = self.dense[i * m + j];
            let s = self.base_scores[i] - base_acc_j * observed as f64;
            let (mut s_pos, mut s_neg) = (0.0, 0.0);
            for (k, v) in self.matrix.row(i) {
                if k == j {
                    continue;
                }
                if v > 0 {
                    s_pos += w[k];
                } else {
                    s_neg += w[k];
                }
            }
            let s_zero = w_total - s_pos - s_neg;
            let (lc_neg, t_neg) = log_two_cosh_and_tanh(s - acc);
            let (lc_pos, t_pos) = log_two_cosh_and_tanh(s + acc);
            // Slots: 0 → λ = −1, 1 → λ = 0, 2 → λ = +1.
            let g = [
                lab + s_neg + lc_neg,
                s_zero + log_two_cosh(s),
                lab + s_pos + lc_pos,
            ];
            let max = g[0].max(g[1]).max(g[2]);
            let e = g.map(|x| (x - max).exp());
            let total = e[0] + e[1] + e[2];
            let p = e.map(|x| x / total);
            let slot = (observed + 1) as usize;
            ll += g[slot] - max - total.ln();

            let mut d = [-p[0], -p[1], -p[2]];
            d[slot] += 1.0;
            d_lab += d[0] + d[2];
            d_acc += match observed {
                1 => t_pos,
                -1 => -t_neg,
                _ => 0.0,
            } - (p[2] * t_pos - p[0] * t_neg);
            d_abstain += d[1];
            for (k, v) in self.matrix.row(i) {
                if k != j {
                    d_corr[k] += d[(v + 1) as usize] - d[1];
                }
            }
        }

        let nf = n as f64;
        let l2 = self.config.l2_reg;
        grad[LAB] = -d_lab / nf + 2.0 * l2 * lab;
        grad[ACC] = -d_acc / nf + 2.0 * l2 * acc;
        let mut reg = lab * lab + acc * acc;
        for k in 0..m {
            if k != j {
                grad[CORR + k] = -(d_abstain + d_corr[k]) / nf + 2.0 * l2 * w[k];
                reg += w[k] * w[k];
            }
        }
        -ll / nf + l2 * reg
    }

    /// Proximal gradient solve of source `j` with l1 coefficient `l1` on its
    /// correlation weights; all weights are kept inside the weight cap.
    pub fn solve_source(&self, j: usize, l1: f64) -> Result<Vec<f64>> {
        self.solve_source_from(j, l1, self.initial_params(j))
    }

    /// [`solve_source`](Self::solve_source) starting from `theta`.
    pub fn solve_source_from(&self, j: usize, l1: f64, mut theta: Vec<f64>) -> Result<Vec<f64>> {
        let dim = CORR + self.m();
        if theta.len() != dim {
            return Err(Error::Dimension {
                what: "source parameter vector",
                expected: dim,
                found: theta.len(),
            });
        }
        let cap = self.config.weight_cap;
        let prox = |theta: &mut [f64], step: f64| {
            for (idx, x) in theta.iter_mut().enumerate() {
                if idx >= CORR {
                    if idx - CORR == j {
                        *x = 0.0;
                        continue;
                    }
                    let t = step * l1;
                    *x = if *x > t {
                        *x - t
                    } else if *x < -t {
                        *x + t
                    } else {
                        0.0
                    };
                }
                *x = x.clamp(-cap, cap);
            }
        };

        prox(&mut theta, 0.0);
        let mut grad = vec![0.0; dim];
        let mut value = self.source_objective(j, &theta, &mut grad);
        let mut step = 1.0;
        let mut trial = vec![0.0; dim];
        let mut trial_grad = vec![0.0; dim];

        for iter in 0..self.config.max_iters {
            let mut accepted = false;
            let mut moved = 0.0f64;
            while step > 1e-14 {
                for k in 0..dim {
                    trial[k] = theta[k] - step * grad[k];
                }
                prox(&mut trial, step);
                let trial_value = self.source_objective(j, &trial, &mut trial_grad);
                if !trial_value.is_finite() {
                    return Err(Error::Divergence {
                        epoch: iter,
                        message: format!("non-finite pseudolikelihood for source {j}"),
                    });
                }
                let mut lin = 0.0;
                let mut sq = 0.0;
                for k in 0..dim {
                    let d = trial[k] - theta[k];
                    lin += grad[k] * d;
                    sq += d * d;
                }
                if trial_value <= value + lin + sq / (2.0 * step) + 1e-15 {
                    let mut sy = 0.0;
                    for k in 0..dim {
                        sy += (trial[k] - theta[k]) * (trial_grad[k] - grad[k]);
                        moved = moved.max((trial[k] - theta[k]).abs());
                    }
                    step = if sy > 0.0 {
                        (sq / sy).clamp(1e-4, 1e4)
                    } else {
                        (step * 2.0).min(1e4)
                    };
                    std::mem::swap(&mut theta, &mut trial);
                    std::mem::swap(&mut grad, &mut trial_grad);
                    value = trial_value;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted || moved < self.config.tolerance {
                break;
            }
        }
        Ok(theta)
    }

    /// Solve every source at l1 coefficient `l1`.
    pub fn fit(&self, l1: f64) -> Result<PseudoLikelihoodFit> {
        self.fit_from(l1, None)
    }

    /// Solve every source at `l1`, starting each solve from `warm`'s solution
    /// when given.
    pub fn fit_from(
        &self,
        l1: f64,
        warm: Option<&PseudoLikelihoodFit>,
    ) -> Result<PseudoLikelihoodFit> {
        let solve = |j: usize| -> Result<Vec<f64>> {
            let start = match warm {
                Some(fit) => fit.solutions[j].clone(),
                None => self.initial_params(j),
            };
            self.solve_source_from(j, l1, start)
        };
        #[cfg(feature = "parallel")]
        let solutions: Result<Vec<Vec<f64>>> = (0..self.m()).into_par_iter().map(solve).collect();
        #[cfg(not(feature = "parallel"))]
        let solutions: Result<Vec<Vec<f64>>> = (0..self.m()).map(solve).collect();
        let solutions = solutions?;
        Ok(PseudoLikelihoodFit {
            l1,
            weights: solutions.iter().map(|t| t[CORR..].to_vec()).collect(),
            solutions,
        })
    }

    pub fn learn(&self, epsilon: f64) -> Result<CorrelationSet> {
        if !(epsilon > 0.0) {
            return Err(Error::invalid("epsilon must be positive"));
        }
        Ok(self.fit(epsilon)?.select(epsilon))
    }
}

/// Correlated source pairs at threshold `epsilon`.
pub fn learn_structure(
    matrix: &LabelMatrix,
    epsilon: f64,
    config: &FitConfig,
) -> Result<CorrelationSet> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    StructureLearner::new(matrix, config)?.learn(epsilon)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub epsilon: f64,
    pub num_correlations: usize,
    pub selected: CorrelationSet,
    /// Weight of each selected pair, aligned with `selected.pairs()`.
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Ordered by descending epsilon.
    pub points: Vec<SweepPoint>,
    pub chosen_epsilon: f64,
}

impl SweepResult {
    pub fn chosen_point(&self) -> &SweepPoint {
        self.points
            .iter()
            .find(|p| p.epsilon == self.chosen_epsilon)
            .expect("chosen epsilon is one of the sweep points")
    }
}

/// `δ, 2δ, ..., ⌊1/(2δ)⌋ δ`, ascending.
pub fn epsilon_grid(delta: f64) -> Result<Vec<f64>> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::invalid("delta must lie in (0, 0.5]"));
    }
    let steps = (1.0 / (2.0 * delta) + 1e-9).floor() as usize;
    Ok((1..=steps).map(|i| i as f64 * delta).collect())
}

/// Options for [`sweep_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct SweepOptions {
    /// Stop ascending once no pair is selected; the remaining thresholds are
    /// recorded with no correlations.
    pub early_stop: bool,
}

pub fn sweep(matrix: &LabelMatrix, delta: f64, config: &FitConfig) -> Result<SweepResult> {
    let learner = StructureLearner::new(matrix, config)?;
    sweep_with(&learner, delta, SweepOptions::default())
}

/// Run structure learning over the threshold grid and pick the elbow.
pub fn sweep_with(
    learner: &StructureLearner<'_>,
    delta: f64,
    options: SweepOptions,
) -> Result<SweepResult> {
    let grid = epsilon_grid(delta)?;
    let mut points = Vec::with_capacity(grid.len());
    let mut exhausted = false;
    let mut previous: Option<PseudoLikelihoodFit> = None;
    for &epsilon in &grid {
        if exhausted {
            points.push(SweepPoint {
                epsilon,
                num_correlations: 0,
                selected: CorrelationSet::empty(),
                weights: Vec::new(),
            });
            continue;
        }
        let fit = learner
            .fit_from(epsilon, previous.as_ref())
            .map_err(|e| Error::AtEpsilon {
                epsilon,
                source: Box::new(e),
            })?;
        let pairs = fit.selected_pairs(epsilon);
        let selected = fit.select(epsilon);
        exhausted = options.early_stop && selected.is_empty();
        points.push(SweepPoint {
            epsilon,
            num_correlations: selected.len(),
            weights: pairs.iter().map(|&(_, _, w)| w).collect(),
            selected,
        });
        previous = Some(fit);
    }
    points.reverse();
    let chosen_epsilon = select_elbow(&points)?;
    Ok(SweepResult {
        points,
        chosen_epsilon,
    })
}

/// Elbow of the count-versus-threshold curve. With counts `c_i` at strictly
/// descending thresholds, returns the interior threshold maximising
/// `c_{i+1} − c_{i−1}`; ties go to the larger threshold.
pub fn select_elbow(points: &[SweepPoint]) -> Result<f64> {
    let counts: Vec<usize> = points.iter().map(|p| p.num_correlations).collect();
    let eps: Vec<f64> = points.iter().map(|p| p.epsilon).collect();
    select_elbow_counts(&eps, &counts)
}

/// [`select_elbow`] on parallel slices.
pub fn select_elbow_counts(epsilons: &[f64], counts: &[usize]) -> Result<f64> {
    if epsilons.len() != counts.len() {
        return Err(Error::Dimension {
            what: "sweep counts",
            expected: epsilons.len(),
            found: counts.len(),
        });
    }
    if epsilons.len() < 3 {
        return Err(Error::InsufficientPoints(epsilons.len()));
    }
    if epsilons.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::invalid(
            "sweep points must be strictly descending in epsilon",
        ));
    }
    let mut best = 1;
    let mut best_score = i64::MIN;
    for i in 1..epsilons.len() - 1 {
        let score = counts[i + 1] as i64 - counts[i - 1] as i64;
        if score > best_score {
            best = i;
            best_score = score;
        }
    }
    Ok(epsilons[best])
}
