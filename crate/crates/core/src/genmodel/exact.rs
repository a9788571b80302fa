//! Exact likelihood of the independent model and its gradient-based learner.
//!
//! Without correlation factors the normaliser factorises per source:
//! `Z = 2 · Π_j (1 + 2 e^{lab_j} cosh(acc_j))`, and the marginal of a row is
//! `e^{Σ lab_j v_j} · 2 cosh(Σ acc_j λ_j)`.

use super::{FitConfig, GenerativeParams};
use crate::error::{Error, Result};
use crate::labelmatrix::{LabelMatrix, Vote};
use crate::math::{log_sum_exp, log_two_cosh, sigmoid, softplus};

/// Largest `m` for which [`marginal_loglik_enumerated`] will run.
pub const ENUMERATION_LIMIT: usize = 8;

/// `Σ_i log Σ_y p_w(Λ_i, y)`.
///
/// Uses the factorised closed form when the model has no correlations and
/// exhaustive enumeration (limited to `m ≤ 8`) otherwise.
pub fn exact_marginal_loglik(matrix: &LabelMatrix, params: &GenerativeParams) -> Result<f64> {
    params.check_matrix(matrix)?;
    if params.correlations().is_empty() {
        Ok(independent_loglik_and_gradient(matrix, params)?.0)
    } else {
        marginal_loglik_enumerated(matrix, params)
    }
}

/// Brute-force marginal log-likelihood: enumerates all `2 · 3^m` joint
/// configurations of one row for the normaliser. Handles any correlation set.
pub fn marginal_loglik_enumerated(matrix: &LabelMatrix, params: &GenerativeParams) -> Result<f64> {
    params.check_matrix(matrix)?;
    let m = matrix.m();
    if m > ENUMERATION_LIMIT {
        return Err(Error::Infeasible {
            m,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut energies = Vec::with_capacity(2 * 3usize.pow(m as u32));
    let mut row = vec![0 as Vote; m];
    for code in 0..3usize.pow(m as u32) {
        let mut c = code;
        for v in row.iter_mut() {
            *v = (c % 3) as Vote - 1;
            c /= 3;
        }
        for y in [-1, 1] {
            energies.push(params.energy(&row, y));
        }
    }
    let log_z = log_sum_exp(&energies);

    let mut total = 0.0;
    for i in 0..matrix.n() {
        matrix.fill_dense_row(i, &mut row);
        total += log_sum_exp(&[params.energy(&row, -1), params.energy(&row, 1)]) - log_z;
    }
    Ok(total)
}

/// Closed-form log-likelihood (summed over rows) of an independent model and
/// its gradient with respect to the propensity and accuracy weights.
pub fn independent_loglik_and_gradient(
    matrix: &LabelMatrix,
    params: &GenerativeParams,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    if !params.correlations().is_empty() {
        return Err(Error::invalid(
            "closed-form likelihood requires an independent model",
        ));
    }
    params.check_matrix(matrix)?;
    let objective = IndependentObjective::new(matrix);
    let mut grad_lab = vec![0.0; matrix.m()];
    let mut grad_acc = vec![0.0; matrix.m()];
    let ll = objective.eval(params.lab(), params.acc(), &mut grad_lab, &mut grad_acc);
    Ok((ll, grad_lab, grad_acc))
}

pub(crate) struct IndependentObjective<'a> {
    matrix: &'a LabelMatrix,
    vote_counts: Vec<f64>,
}

impl<'a> IndependentObjective<'a> {
    pub(crate) fn new(matrix: &'a LabelMatrix) -> Self {
        let mut vote_counts = vec![0.0; matrix.m()];
        for (_, j, _) in matrix.triplets() {
            vote_counts[j] += 1.0;
        }
        IndependentObjective {
            matrix,
            vote_counts,
        }
    }

    /// Summed log-likelihood; gradients are written into the two buffers.
    pub(crate) fn eval(
        &self,
        lab: &[f64],
        acc: &[f64],
        grad_lab: &mut [f64],
        grad_acc: &mut [f64],
    ) -> f64 {
        let n = self.matrix.n() as f64;
        grad_acc.fill(0.0);
        let mut ll = 0.0;
        for i in 0..self.matrix.n() {
            let mut s = 0.0;
            for (j, v) in self.matrix.row(i) {
                s += acc[j] * v as f64;
                ll += lab[j];
            }
            ll += log_two_cosh(s);
            let t = s.tanh();
            for (j, v) in self.matrix.row(i) {
                grad_acc[j] += v as f64 * t;
            }
        }
        let mut log_z = std::f64::consts::LN_2;
        for j in 0..lab.len() {
            let a = lab[j] + log_two_cosh(acc[j]);
            log_z += softplus(a);
            let p_vote = sigmoid(a);
            grad_lab[j] = self.vote_counts[j] - n * p_vote;
            grad_acc[j] -= n * p_vote * acc[j].tanh();
        }
        ll - n * log_z
    }
}

/// Maximum-likelihood fit of the independent model by projected gradient
/// ascent with Barzilai-Borwein steps and Armijo backtracking.
///
/// Maximises `LL / n − l2 · ‖w‖²` over the box `[-cap, cap]^{2m}`. The
/// objective is unchanged when every accuracy weight changes sign, so the
/// result is reported in the orientation where the accuracy weights sum to a
/// non-negative value.
pub fn fit_independent_exact(matrix: &LabelMatrix, config: &FitConfig) -> Result<GenerativeParams> {
    config.validate()?;
    if matrix.n() == 0 {
        return Err(Error::EmptyMatrix);
    }
    let m = matrix.m();
    let n = matrix.n() as f64;
    let cap = config.weight_cap;
    let objective = IndependentObjective::new(matrix);

    let eval = |theta: &[f64], grad: &mut [f64]| -> f64 {
        let (gl, ga) = grad.split_at_mut(m);
        let ll = objective.eval(&theta[..m], &theta[m..], gl, ga);
        let mut reg = 0.0;
        for (g, &w) in grad.iter_mut().zip(theta) {
            *g = *g / n - 2.0 * config.l2_reg * w;
            reg += w * w;
        }
        ll / n - config.l2_reg * reg
    };
    let project = |w: f64| w.clamp(-cap, cap);

    let mut theta: Vec<f64> = std::iter::repeat_n(0.0, m)
        .chain(std::iter::repeat_n(project(config.init_acc_weight), m))
        .collect();
    let mut grad = vec![0.0; 2 * m];
    let mut value = eval(&theta, &mut grad);
    if !value.is_finite() {
        return Err(Error::Divergence {
            epoch: 0,
            message: "non-finite objective at initialisation".into(),
        });
    }

    let mut step = 0.1 / crate::math::max_abs(grad.iter().copied()).max(1e-12);
    let mut trial = vec![0.0; 2 * m];
    let mut trial_grad = vec![0.0; 2 * m];
    for epoch in 0..config.max_iters {
        let pg_norm = theta
            .iter()
            .zip(&grad)
            .map(|(&w, &g)| (project(w + g) - w).abs())
            .fold(0.0, f64::max);
        if pg_norm < config.tolerance {
            break;
        }

        let mut accepted = false;
        while step > 1e-16 {
            for k in 0..2 * m {
                trial[k] = project(theta[k] + step * grad[k]);
            }
            let trial_value = eval(&trial, &mut trial_grad);
            if !trial_value.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    message: "non-finite objective".into(),
                });
            }
            let gain: f64 = grad
                .iter()
                .zip(trial.iter().zip(&theta))
                .map(|(g, (t, w))| g * (t - w))
                .sum();
            if trial_value >= value + 1e-4 * gain {
                let mut ss = 0.0;
                let mut sy = 0.0;
                for k in 0..2 * m {
                    let s = trial[k] - theta[k];
                    ss += s * s;
                    sy -= s * (trial_grad[k] - grad[k]);
                }
                step = if sy > 0.0 {
                    (ss / sy).clamp(1e-6, 1e6)
                } else {
                    (step * 2.0).min(1e6)
                };
                std::mem::swap(&mut theta, &mut trial);
                std::mem::swap(&mut grad, &mut trial_grad);
                value = trial_value;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    let (lab, acc) = theta.split_at(m);
    let sign = if acc.iter().sum::<f64>() < 0.0 {
        -1.0
    } else {
        1.0
    };
    GenerativeParams::new(
        lab.to_vec(),
        acc.iter().map(|w| sign * w).collect(),
        super::CorrelationSet::empty(),
        Vec::new(),
    )
}

#[cfg(test)]
mod tests {
    use super::super::{accuracy_to_weight, weight_to_accuracy, CorrelationSet};
    use super::*;

    #[test]
    fn all_zero_weights_single_abstain_row() {
        // Six equally weighted (λ, y) configurations, two of them with λ = 0.
        let m = LabelMatrix::from_dense(&[[0]]).unwrap();
        let p = GenerativeParams::zeros(1, CorrelationSet::empty());
        let ll = exact_marginal_loglik(&m, &p).unwrap();
        assert!((ll - (1.0f64 / 3.0).ln()).abs() < 1e-14);
        let brute = marginal_loglik_enumerated(&m, &p).unwrap();
        assert!((brute - ll).abs() < 1e-14);
    }

    #[test]
    fn enumeration_refuses_wide_matrices() {
        let m = LabelMatrix::from_triplets(1, 9, []).unwrap();
        let c = CorrelationSet::new(9, [(0, 1)]).unwrap();
        assert!(matches!(
            exact_marginal_loglik(&m, &GenerativeParams::zeros(9, c)),
            Err(Error::Infeasible { m: 9, limit: 8 })
        ));
    }

    #[test]
    fn independent_fit_recovers_a_clean_two_source_signal() {
        // Three sources that always vote and agree 90% of the time pairwise
        // with the majority are identified as accurate.
        let mut rows = Vec::new();
        for i in 0..400 {
            let y: Vote = if i % 2 == 0 { 1 } else { -1 };
            let mut r = [y, y, y];
            if i % 10 == 3 {
                r[0] = -y;
            }
            if i % 10 == 6 {
                r[1] = -y;
            }
            if i % 10 == 9 {
                r[2] = -y;
            }
            rows.push(r);
        }
        let m = LabelMatrix::from_dense(&rows).unwrap();
        let cfg = FitConfig {
            l2_reg: 0.0,
            ..FitConfig::default()
        };
        let p = fit_independent_exact(&m, &cfg).unwrap();
        for a in p.accuracies() {
            assert!((a - 0.9).abs() < 0.02, "accuracy {a}");
        }
        let (_, gl, ga) = independent_loglik_and_gradient(&m, &p).unwrap();
        // Propensity sits at the cap (every source always votes), so only the
        // accuracy gradient must vanish.
        assert!(ga.iter().all(|g| g.abs() / 400.0 < 1e-5), "{ga:?}");
        assert!(gl.iter().all(|g| *g >= 0.0));
    }

    #[test]
    fn constant_single_source_saturates_towards_the_cap() {
        let m = LabelMatrix::from_dense(&vec![[1]; 200]).unwrap();
        let cfg = FitConfig {
            l2_reg: 0.0,
            weight_cap: 3.0,
            ..FitConfig::default()
        };
        let p = fit_independent_exact(&m, &cfg).unwrap();
        assert!(p.acc()[0] > cfg.init_acc_weight);
        assert!(p.acc()[0] <= 3.0);
        assert_eq!(p.lab()[0], 3.0);
    }

    #[test]
    fn empty_matrix_is_rejected() {
        let m = LabelMatrix::from_triplets(0, 2, []).unwrap();
        assert!(fit_independent_exact(&m, &FitConfig::default()).is_err());
    }

    #[test]
    fn init_is_accuracy_seventy_percent() {
        let w = FitConfig::default().init_acc_weight;
        assert!((weight_to_accuracy(w) - 0.7).abs() < 1e-12);
        assert_eq!(w, accuracy_to_weight(0.7));
    }
}
