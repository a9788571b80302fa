//! Library results against brute-force computations written from the model
//! definition.

use labelfuse::genmodel::{
    exact_marginal_loglik, fit_gibbs_sgd, fit_independent_exact, posterior_gibbs,
    posterior_independent,
};
use labelfuse::noiseaware::train;
use labelfuse::rng::rng_from;
use labelfuse::synthgen::{generate, SynthConfig};
use labelfuse::{CorrelationSet, FeatureSet, FitConfig, GenerativeParams, LabelMatrix, ProbLabels};
use rand::seq::SliceRandom;
use rand::Rng;

/// Unnormalised log-weight of one `(λ, y)` configuration.
fn energy(params: &GenerativeParams, row: &[i8], y: i8) -> f64 {
    let mut e = 0.0;
    for (j, &v) in row.iter().enumerate() {
        if v != 0 {
            e += params.lab()[j];
        }
        e += params.acc()[j] * (v * y) as f64;
    }
    for (p, &(a, b)) in params.correlations().pairs().iter().enumerate() {
        if row[a] == row[b] {
            e += params.corr()[p];
        }
    }
    e
}

fn all_rows(m: usize) -> Vec<Vec<i8>> {
    let mut rows = vec![vec![]];
    for _ in 0..m {
        rows = rows
            .into_iter()
            .flat_map(|r| {
                [-1i8, 0, 1].into_iter().map(move |v| {
                    let mut r = r.clone();
                    r.push(v);
                    r
                })
            })
            .collect();
    }
    rows
}

fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn brute_loglik(matrix: &LabelMatrix, params: &GenerativeParams) -> f64 {
    let log_z = log_sum_exp(
        all_rows(matrix.m())
            .iter()
            .flat_map(|r| [energy(params, r, 1), energy(params, r, -1)]),
    );
    (0..matrix.n())
        .map(|i| {
            let row = matrix.dense_row(i);
            log_sum_exp([energy(params, &row, 1), energy(params, &row, -1)]) - log_z
        })
        .sum()
}

fn brute_posterior(matrix: &LabelMatrix, params: &GenerativeParams) -> Vec<f64> {
    (0..matrix.n())
        .map(|i| {
            let row = matrix.dense_row(i);
            let (a, b) = (energy(params, &row, 1), energy(params, &row, -1));
            1.0 / (1.0 + (b - a).exp())
        })
        .collect()
}

struct Instance {
    matrix: LabelMatrix,
    params: GenerativeParams,
}

fn random_instance(rng: &mut impl Rng, max_n: usize, max_m: usize, max_pairs: usize) -> Instance {
    let n = rng.random_range(1..=max_n);
    let m = rng.random_range(1..=max_m);
    let mut triplets = Vec::new();
    for i in 0..n {
        for j in 0..m {
            match rng.random_range(0..3) {
                0 => triplets.push((i, j, 1)),
                1 => triplets.push((i, j, -1)),
                _ => {}
            }
        }
    }
    let matrix = LabelMatrix::from_triplets(n, m, triplets).unwrap();
    let mut candidates: Vec<(usize, usize)> = (0..m)
        .flat_map(|a| (a + 1..m).map(move |b| (a, b)))
        .collect();
    candidates.shuffle(rng);
    let k = rng.random_range(0..=max_pairs.min(candidates.len()));
    let correlations = CorrelationSet::new(m, candidates[..k].iter().copied()).unwrap();
    let params = GenerativeParams::new(
        (0..m).map(|_| rng.random_range(-2.0..1.0)).collect(),
        (0..m).map(|_| rng.random_range(-1.5..1.5)).collect(),
        correlations,
        (0..k).map(|_| rng.random_range(-1.0..2.0)).collect(),
    )
    .unwrap();
    Instance { matrix, params }
}

#[test]
fn marginal_loglik_matches_enumeration() {
    let mut rng = rng_from(21, &[]);
    for _ in 0..60 {
        let inst = random_instance(&mut rng, 6, 4, 3);
        let lib = exact_marginal_loglik(&inst.matrix, &inst.params).unwrap();
        let brute = brute_loglik(&inst.matrix, &inst.params);
        assert!(
            (lib - brute).abs() < 1e-9 * (1.0 + brute.abs()),
            "{lib} vs {brute}"
        );
    }
}

#[test]
fn closed_form_posterior_matches_enumeration() {
    let mut rng = rng_from(22, &[]);
    for _ in 0..60 {
        let inst = random_instance(&mut rng, 6, 5, 0);
        let lib = posterior_independent(&inst.matrix, &inst.params).unwrap();
        for (a, b) in lib
            .as_slice()
            .iter()
            .zip(brute_posterior(&inst.matrix, &inst.params))
        {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn gibbs_posterior_matches_enumeration_with_correlations() {
    let mut rng = rng_from(23, &[]);
    for trial in 0..50 {
        let inst = random_instance(&mut rng, 5, 4, 2);
        let gibbs = posterior_gibbs(&inst.matrix, &inst.params, 2000, 200, trial).unwrap();
        for (a, b) in gibbs
            .as_slice()
            .iter()
            .zip(brute_posterior(&inst.matrix, &inst.params))
        {
            assert!((a - b).abs() < 0.02, "trial {trial}: {a} vs {b}");
        }
    }
}

#[test]
fn exact_fit_is_a_local_maximum() {
    let data = generate(&SynthConfig::uniform(3000, 5, 0.4, 0.8, 3)).unwrap();
    let cfg = FitConfig {
        l2_reg: 0.0,
        ..FitConfig::default()
    };
    let fit = fit_independent_exact(&data.matrix, &cfg).unwrap();
    let best = brute_loglik(&data.matrix, &fit);
    let mut rng = rng_from(24, &[]);
    for _ in 0..30 {
        let mut flat = fit.flat();
        for w in &mut flat {
            *w += rng.random_range(-0.02..0.02);
        }
        let mut moved = fit.clone();
        moved.set_flat(&flat).unwrap();
        assert!(brute_loglik(&data.matrix, &moved) <= best + 1e-9);
    }
    for a in fit.accuracies() {
        assert!((a - 0.8).abs() < 0.05, "accuracy {a}");
    }
}

#[test]
fn contrastive_divergence_agrees_with_exact_fit() {
    let data = generate(&SynthConfig::uniform(4000, 6, 0.3, 0.8, 5)).unwrap();
    let exact = fit_independent_exact(&data.matrix, &FitConfig::default()).unwrap();
    let cd = fit_gibbs_sgd(
        &data.matrix,
        &CorrelationSet::empty(),
        &FitConfig::default(),
    )
    .unwrap();
    for (a, b) in exact.acc().iter().zip(cd.acc()) {
        assert!((a - b).abs() < 0.1, "{a} vs {b}");
    }
}

/// Plain logistic regression by Newton's method.
fn newton_logistic(features: &FeatureSet, labels: &[f64], l2: f64) -> Vec<f64> {
    let (n, d) = (features.n(), features.d());
    let dim = d + 1;
    let mut theta = vec![0.0; dim];
    for _ in 0..100 {
        let mut grad = vec![0.0; dim];
        let mut hess = vec![vec![0.0; dim]; dim];
        for i in 0..n {
            let x: Vec<f64> = features.row(i).iter().copied().chain([1.0]).collect();
            let s: f64 = x.iter().zip(&theta).map(|(a, b)| a * b).sum();
            let p = 1.0 / (1.0 + (-s).exp());
            for a in 0..dim {
                grad[a] += (p - labels[i]) * x[a] / n as f64;
                for b in 0..dim {
                    hess[a][b] += p * (1.0 - p) * x[a] * x[b] / n as f64;
                }
            }
        }
        for a in 0..d {
            grad[a] += 2.0 * l2 * theta[a];
            hess[a][a] += 2.0 * l2;
        }
        // Gaussian elimination on the Newton system.
        let mut aug: Vec<Vec<f64>> = hess
            .iter()
            .zip(&grad)
            .map(|(row, g)| row.iter().copied().chain([*g]).collect())
            .collect();
        for c in 0..dim {
            let pivot = (c..dim)
                .max_by(|&a, &b| aug[a][c].abs().total_cmp(&aug[b][c].abs()))
                .unwrap();
            aug.swap(c, pivot);
            for r in 0..dim {
                if r != c {
                    let f = aug[r][c] / aug[c][c];
                    for k in c..=dim {
                        aug[r][k] -= f * aug[c][k];
                    }
                }
            }
        }
        let mut step_norm: f64 = 0.0;
        for a in 0..dim {
            let step = aug[a][dim] / aug[a][a];
            theta[a] -= step;
            step_norm = step_norm.max(step.abs());
        }
        if step_norm < 1e-14 {
            break;
        }
    }
    theta
}

#[test]
fn hard_label_training_is_logistic_regression() {
    let mut rng = rng_from(25, &[]);
    let (n, d) = (300, 3);
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..n {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let s = 0.8 * x[0] - 0.5 * x[1] + 0.2;
        let p = 1.0 / (1.0 + (-s).exp());
        labels.push(if rng.random::<f64>() < p { 1.0 } else { 0.0 });
        values.extend(x);
    }
    let features = FeatureSet::new(n, d, values).unwrap();
    let cfg = FitConfig {
        tolerance: 1e-12,
        max_iters: 20_000,
        ..FitConfig::default()
    };
    let model = train(&features, &ProbLabels::new(labels.clone()).unwrap(), &cfg).unwrap();
    let reference = newton_logistic(&features, &labels, cfg.l2_reg);
    for (a, b) in model.weights.iter().chain([&model.bias]).zip(&reference) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}
