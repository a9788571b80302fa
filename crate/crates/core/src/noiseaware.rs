//! Logistic regression trained on probabilistic labels.
//!
//! The noise-aware loss is the expected logistic loss when each example's
//! label is `+1` with probability `ỹ_i`:
//! `Σ_i ỹ_i ℓ(s_i, +1) + (1 − ỹ_i) ℓ(s_i, −1)` with `ℓ(s, y) = ln(1 + e^{−ys})`.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::genmodel::{FitConfig, ProbLabels};
use crate::kv::{join, KvDoc};
use crate::labelmatrix::data_lines;
use crate::math::{sigmoid, softplus};

/// Dense row-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl FeatureSet {
    pub fn new(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * d {
            return Err(Error::Dimension {
                what: "feature values",
                expected: n * d,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("features must be finite"));
        }
        Ok(FeatureSet { n, d, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * d);
        for r in rows {
            if r.len() != d {
                return Err(Error::Dimension {
                    what: "feature row length",
                    expected: d,
                    found: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), d, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * self.d);
        for &i in rows {
            if i >= self.n {
                return Err(Error::invalid(format!("row {i} out of range")));
            }
            values.extend_from_slice(self.row(i));
        }
        Self::new(rows.len(), self.d, values)
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for item in data_lines(reader) {
            let (line_no, line) = item?;
            let row = line
                .split(',')
                .map(|f| {
                    f.trim().parse::<f64>().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("expected a number, found '{}'", f.trim()),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if let Some(first) = rows.first() {
                if first.len() != row.len() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("expected {} columns, found {}", first.len(), row.len()),
                    });
                }
            }
            rows.push(row);
        }
        Self::from_rows(&rows)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for i in 0..self.n {
            writeln!(w, "{}", join(self.row(i)))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl DiscModel {
    pub fn zeros(d: usize) -> Self {
        DiscModel {
            weights: vec![0.0; d],
            bias: 0.0,
        }
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        self.bias + x.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>()
    }

    fn check(&self, features: &FeatureSet) -> Result<()> {
        if features.d() != self.weights.len() {
            return Err(Error::Dimension {
                what: "feature columns",
                expected: self.weights.len(),
                found: features.d(),
            });
        }
        Ok(())
    }

    pub fn to_kv(&self) -> KvDoc {
        let mut doc = KvDoc::new();
        doc.set("d", self.weights.len())
            .set("weights", join(&self.weights))
            .set("bias", self.bias);
        doc
    }

    pub fn from_kv(doc: &KvDoc) -> Result<Self> {
        let d: usize = doc.parse("d")?;
        let weights: Vec<f64> = doc.parse_list("weights")?;
        if weights.len() != d {
            return Err(Error::Dimension {
                what: "model weights",
                expected: d,
                found: weights.len(),
            });
        }
        let bias: f64 = doc.parse("bias")?;
        if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("non-finite model parameter"));
        }
        Ok(DiscModel { weights, bias })
    }
}

fn check_aligned(features: &FeatureSet, probs: &ProbLabels) -> Result<()> {
    if features.n() != probs.len() {
        return Err(Error::Dimension {
            what: "probabilistic labels",
            expected: features.n(),
            found: probs.len(),
        });
    }
    Ok(())
}

/// Expected logistic loss summed over examples.
pub fn noise_aware_loss(
    model: &DiscModel,
    features: &FeatureSet,
    probs: &ProbLabels,
) -> Result<f64> {
    model.check(features)?;
    check_aligned(features, probs)?;
    Ok(probs
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, &q)| {
            let s = model.score(features.row(i));
            q * softplus(-s) + (1.0 - q) * softplus(s)
        })
        .sum())
}

/// Gradient of [`noise_aware_loss`] as `(d weights, d bias)`.
pub fn noise_aware_gradient(
    model: &DiscModel,
    features: &FeatureSet,
    probs: &ProbLabels,
) -> Result<(Vec<f64>, f64)> {
    model.check(features)?;
    check_aligned(features, probs)?;
    let mut gw = vec![0.0; features.d()];
    let mut gb = 0.0;
    for (i, &q) in probs.as_slice().iter().enumerate() {
        let x = features.row(i);
        let r = sigmoid(model.score(x)) - q;
        gb += r;
        for (g, &xi) in gw.iter_mut().zip(x) {
            *g += r * xi;
        }
    }
    Ok((gw, gb))
}

/// Minimise `loss / n + l2_reg · ‖weights‖²` (bias unpenalised) by gradient
/// descent with Barzilai-Borwein steps and Armijo backtracking, starting from
/// zero. Stops when the gradient's infinity norm drops below
/// `config.tolerance` or after `config.max_iters` iterations.
pub fn train(features: &FeatureSet, probs: &ProbLabels, config: &FitConfig) -> Result<DiscModel> {
    config.validate()?;
    check_aligned(features, probs)?;
    if features.n() == 0 {
        return Err(Error::invalid("cannot train on zero examples"));
    }
    let d = features.d();
    let nf = features.n() as f64;
    let l2 = config.l2_reg;

    let objective = |theta: &[f64], grad: &mut [f64]| -> Result<f64> {
        let model = DiscModel {
            weights: theta[..d].to_vec(),
            bias: theta[d],
        };
        let loss = noise_aware_loss(&model, features, probs)?;
        let (gw, gb) = noise_aware_gradient(&model, features, probs)?;
        let mut reg = 0.0;
        for k in 0..d {
            grad[k] = gw[k] / nf + 2.0 * l2 * theta[k];
            reg += theta[k] * theta[k];
        }
        grad[d] = gb / nf;
        Ok(loss / nf + l2 * reg)
    };

    let mut theta = vec![0.0; d + 1];
    let mut grad = vec![0.0; d + 1];
    let mut value = objective(&theta, &mut grad)?;
    let mut trial = vec![0.0; d + 1];
    let mut trial_grad = vec![0.0; d + 1];
    let mut step = 1.0;
    for epoch in 0..config.max_iters {
        if crate::math::max_abs(grad.iter().copied()) < config.tolerance {
            break;
        }
        let gg: f64 = grad.iter().map(|g| g * g).sum();
        let mut accepted = false;
        while step > 1e-16 {
            for k in 0..=d {
                trial[k] = theta[k] - step * grad[k];
            }
            let trial_value = objective(&trial, &mut trial_grad)?;
            if !trial_value.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    message: "non-finite noise-aware loss".into(),
                });
            }
            if trial_value <= value - 1e-4 * step * gg {
                let mut ss = 0.0;
                let mut sy = 0.0;
                for k in 0..=d {
                    let s = trial[k] - theta[k];
                    ss += s * s;
                    sy += s * (trial_grad[k] - grad[k]);
                }
                step = if sy > 0.0 {
                    (ss / sy).clamp(1e-8, 1e8)
                } else {
                    step * 2.0
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
    Ok(DiscModel {
        weights: theta[..d].to_vec(),
        bias: theta[d],
    })
}

/// `σ(score)` per row.
pub fn predict(model: &DiscModel, features: &FeatureSet) -> Result<Vec<f64>> {
    model.check(features)?;
    Ok((0..features.n())
        .map(|i| sigmoid(model.score(features.row(i))))
        .collect())
}
