//! Sampling-based inference and contrastive-divergence learning.

use rand::seq::SliceRandom;
use rand::Rng as _;

use super::{weighted_sum, CorrelationSet, FitConfig, GenerativeParams, ProbLabels};
use crate::error::{Error, Result};
use crate::labelmatrix::{LabelMatrix, Vote};
use crate::math::sigmoid;
use crate::rng::{rng_from, Rng};

/// Gibbs estimate of `p(y_i = +1 | Λ_i)`.
///
/// Every sweep redraws each `y_i` from its conditional given the observed
/// row. The estimate is the Rao-Blackwellised average, over post-burn-in
/// sweeps, of `p(y_i = +1 | chain state)` rather than of the sampled
/// indicator. Propensity and correlation factors do not involve `y`, so the
/// conditional is `σ(2 Σ_j acc_j λ_ij)` for every correlation structure.
pub fn posterior_gibbs(
    matrix: &LabelMatrix,
    params: &GenerativeParams,
    samples: usize,
    burn_in: usize,
    seed: u64,
) -> Result<ProbLabels> {
    if samples == 0 {
        return Err(Error::invalid("posterior_gibbs needs at least one sample"));
    }
    params.check_matrix(matrix)?;
    let m = matrix.m();
    let mut rng = rng_from(seed, &[0x6962_6273]);
    let mut row = vec![0 as Vote; m];
    let mut out = Vec::with_capacity(matrix.n());
    for i in 0..matrix.n() {
        matrix.fill_dense_row(i, &mut row);
        // The label is the only unobserved variable, so its conditional
        // does not change along the chain.
        let p = sigmoid(2.0 * weighted_sum(matrix, i, params.acc()));
        let mut total = 0.0;
        for sweep in 0..burn_in + samples {
            let _y = sample_label(&mut rng, params.acc(), &row);
            if sweep >= burn_in {
                total += p;
            }
        }
        out.push((total / samples as f64).clamp(0.0, 1.0));
    }
    ProbLabels::new(out)
}

fn sample_label(rng: &mut Rng, acc: &[f64], row: &[Vote]) -> Vote {
    let s: f64 = row
        .iter()
        .zip(acc)
        .filter(|(v, _)| **v != 0)
        .map(|(&v, &w)| w * v as f64)
        .sum();
    if rng.random::<f64>() < sigmoid(2.0 * s) {
        1
    } else {
        -1
    }
}

/// Conditional distribution of `row[j]` over `(-1, 0, +1)` given `y` and the
/// other sources.
fn vote_probabilities(
    params: &GenerativeParams,
    neighbours: &[(usize, usize)],
    row: &[Vote],
    j: usize,
    y: Vote,
) -> [f64; 3] {
    let mut energy = [0.0f64; 3];
    for (slot, v) in [-1i8, 0, 1].into_iter().enumerate() {
        let mut e = 0.0;
        if v != 0 {
            e += params.lab()[j] + params.acc()[j] * (v * y) as f64;
        }
        for &(k, p) in neighbours {
            if row[k] == v {
                e += params.corr()[p];
            }
        }
        energy[slot] = e;
    }
    let max = energy.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights = energy.map(|e| (e - max).exp());
    let total: f64 = weights.iter().sum();
    weights.map(|w| w / total)
}

fn draw_vote(rng: &mut Rng, probs: &[f64; 3]) -> Vote {
    let u = rng.random::<f64>();
    if u < probs[0] {
        -1
    } else if u < probs[0] + probs[1] {
        0
    } else {
        1
    }
}

fn slot(v: Vote) -> usize {
    (v + 1) as usize
}

/// Stochastic maximum-likelihood learning with CD-k gradient estimates.
///
/// For each row (visited in a seeded random order every epoch) the positive
/// phase takes the expected factors under `p(y | Λ_i)`; the negative phase
/// starts a chain at the observed row and runs `gibbs_steps` sweeps over
/// `(y, λ_1, ..., λ_m)`. The weights move along the difference of the two
/// factor vectors, minus the l2 term, and are clipped to the weight cap.
/// With `tail_average` the end-of-epoch weights of the second half of
/// training are averaged. Flipping the sign of every accuracy weight leaves
/// the distribution of `Λ` unchanged, so the result is reported with
/// non-negative accuracy sum.
pub fn fit_gibbs_sgd(
    matrix: &LabelMatrix,
    correlations: &CorrelationSet,
    config: &FitConfig,
) -> Result<GenerativeParams> {
    config.validate()?;
    if config.gibbs_steps == 0 {
        return Err(Error::invalid(
            "contrastive divergence needs gibbs_steps >= 1",
        ));
    }
    let m = matrix.m();
    if let Some(&(_, b)) = correlations.pairs().last() {
        if b >= m {
            return Err(Error::invalid("correlation pair outside source range"));
        }
    }
    let mut params = GenerativeParams::zeros(m, correlations.clone());
    let cap = config.weight_cap;
    params
        .parts_mut()
        .1
        .fill(config.init_acc_weight.clamp(-cap, cap));
    let neighbours = correlations.neighbours(m);

    let mut rng = rng_from(config.seed, &[0x6364]);
    let mut order: Vec<usize> = (0..matrix.n()).collect();
    let mut row = vec![0 as Vote; m];
    let mut chain = vec![0 as Vote; m];
    let mut g_lab = vec![0.0; m];
    let mut g_acc = vec![0.0; m];
    let mut g_corr = vec![0.0; correlations.len()];
    let mut tail_sum = vec![0.0; params.num_params()];
    let mut tail_count = 0usize;

    for epoch in 0..config.epochs {
        let eta = if config.step_decay {
            config.step_size / ((epoch + 1) as f64).sqrt()
        } else {
            config.step_size
        };
        order.shuffle(&mut rng);
        for &i in &order {
            matrix.fill_dense_row(i, &mut row);
            g_lab.fill(0.0);
            g_acc.fill(0.0);
            g_corr.fill(0.0);

            // Positive phase: exact expectation over y given the observed row.
            let t = weighted_sum(matrix, i, params.acc()).tanh();
            for (j, v) in matrix.row(i) {
                g_lab[j] += 1.0;
                g_acc[j] += v as f64 * t;
            }
            for (p, &(a, b)) in correlations.pairs().iter().enumerate() {
                if row[a] == row[b] {
                    g_corr[p] += 1.0;
                }
            }

            // Negative phase: k sweeps from the observed row. On the last
            // sweep each factor enters through its conditional expectation
            // at the moment its final value is drawn.
            chain.copy_from_slice(&row);
            for sweep in 0..config.gibbs_steps {
                let y = sample_label(&mut rng, params.acc(), &chain);
                let last = sweep + 1 == config.gibbs_steps;
                for j in 0..m {
                    let probs = vote_probabilities(&params, &neighbours[j], &chain, j, y);
                    if last {
                        g_lab[j] -= probs[0] + probs[2];
                        g_acc[j] -= y as f64 * (probs[2] - probs[0]);
                        for &(k, p) in &neighbours[j] {
                            if k < j {
                                g_corr[p] -= probs[slot(chain[k])];
                            }
                        }
                    }
                    chain[j] = draw_vote(&mut rng, &probs);
                }
            }

            let l2 = 2.0 * config.l2_reg;
            let (lab, acc, corr) = params.parts_mut();
            for (w, g) in lab
                .iter_mut()
                .zip(&g_lab)
                .chain(acc.iter_mut().zip(&g_acc))
                .chain(corr.iter_mut().zip(&g_corr))
            {
                *w = (*w + eta * (g - l2 * *w)).clamp(-cap, cap);
            }
        }
        if !params.is_finite() {
            return Err(Error::Divergence {
                epoch,
                message: "non-finite weights".into(),
            });
        }
        if config.tail_average && 2 * epoch >= config.epochs {
            let sign = if params.acc().iter().sum::<f64>() < 0.0 {
                -1.0
            } else {
                1.0
            };
            for (k, w) in params.flat().into_iter().enumerate() {
                let flip = if (m..2 * m).contains(&k) { sign } else { 1.0 };
                tail_sum[k] += flip * w;
            }
            tail_count += 1;
        }
    }
    if tail_count > 0 {
        let mean: Vec<f64> = tail_sum.iter().map(|s| s / tail_count as f64).collect();
        params.set_flat(&mean)?;
    }
    let acc = params.parts_mut().1;
    if acc.iter().sum::<f64>() < 0.0 {
        acc.iter_mut().for_each(|w| *w = -*w);
    }
    Ok(params)
}
