//! Seeded synthetic label matrices with known ground truth.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::advantage::{
    advantage_bound, empirical_advantage, high_density_bound, low_density_bound, OptimizerConfig,
};
use crate::error::{Error, Result};
use crate::genmodel::{
    accuracy_to_weight, fit_independent_exact, CorrelationSet, FitConfig, GenerativeParams,
};
use crate::kv::{join, KvDoc};
use crate::labelmatrix::{GoldLabels, LabelMatrix, Vote};
use crate::math::{log_two_cosh, mean, mean_and_stderr};
use crate::noiseaware::FeatureSet;
use crate::rng::rng_from;

/// Truth weights are clipped to this magnitude (matches the default fit cap).
pub const TRUTH_WEIGHT_CAP: f64 = 6.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n: usize,
    pub m: usize,
    /// Probability that a source votes on a row.
    pub propensity: f64,
    /// Per-source probability of voting the true label, given a vote.
    pub accuracies: Vec<f64>,
    /// Probability of the positive class.
    pub class_balance: f64,
    /// Groups of sources that copy a single shared draw. The draw uses the
    /// accuracy of the group's lowest-indexed member.
    pub duplicate_groups: Vec<Vec<usize>>,
    pub seed: u64,
}

impl SynthConfig {
    /// Independent sources sharing one accuracy.
    pub fn uniform(n: usize, m: usize, propensity: f64, accuracy: f64, seed: u64) -> Self {
        SynthConfig {
            n,
            m,
            propensity,
            accuracies: vec![accuracy; m],
            class_balance: 0.5,
            duplicate_groups: Vec::new(),
            seed,
        }
    }

    /// Class-balanced data, 10% voting probability, accuracies drawn uniformly
    /// from `0.75 ± spread` (a spread of 0 gives every source accuracy 0.75).
    pub fn footnote7(n: usize, m: usize, spread: f64, seed: u64) -> Self {
        let mut rng = rng_from(seed, &[0x6163_63]);
        let accuracies = (0..m)
            .map(|_| {
                if spread > 0.0 {
                    rng.random_range(0.75 - spread..=0.75 + spread)
                } else {
                    0.75
                }
            })
            .collect();
        SynthConfig {
            accuracies,
            ..Self::uniform(n, m, 0.1, 0.75, seed)
        }
    }

    /// Five copies of one coin-flip source plus five independent 99%
    /// accurate sources, everyone always voting.
    pub fn duplicated(n: usize, seed: u64) -> Self {
        let mut accuracies = vec![0.5; 5];
        accuracies.extend([0.99; 5]);
        SynthConfig {
            n,
            m: 10,
            propensity: 1.0,
            accuracies,
            class_balance: 0.5,
            duplicate_groups: vec![(0..5).collect()],
            seed,
        }
    }

    /// `pairs` disjoint duplicated pairs placed on sources `(0,1), (2,3), ...`.
    pub fn planted_pairs(
        n: usize,
        m: usize,
        pairs: usize,
        propensity: f64,
        accuracy: f64,
        seed: u64,
    ) -> Self {
        SynthConfig {
            duplicate_groups: (0..pairs).map(|p| vec![2 * p, 2 * p + 1]).collect(),
            ..Self::uniform(n, m, propensity, accuracy, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.accuracies.len() != self.m {
            return Err(Error::Dimension {
                what: "accuracy vector",
                expected: self.m,
                found: self.accuracies.len(),
            });
        }
        if !(self.propensity > 0.0 && self.propensity <= 1.0) {
            return Err(Error::invalid("propensity must lie in (0, 1]"));
        }
        if self.accuracies.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::invalid("accuracies must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.class_balance) {
            return Err(Error::invalid("class balance must lie in [0, 1]"));
        }
        let mut owner = vec![false; self.m];
        for group in &self.duplicate_groups {
            for &j in group {
                if j >= self.m {
                    return Err(Error::invalid(format!("duplicate group member {j} >= m")));
                }
                if std::mem::replace(&mut owner[j], true) {
                    return Err(Error::invalid("duplicate groups must be disjoint"));
                }
            }
        }
        Ok(())
    }

    /// For each source, the source whose draw it copies (itself if none).
    fn leaders(&self) -> Vec<usize> {
        let mut leader: Vec<usize> = (0..self.m).collect();
        for group in &self.duplicate_groups {
            if let Some(&first) = group.iter().min() {
                for &j in group {
                    leader[j] = first;
                }
            }
        }
        leader
    }

    /// Pairs of sources inside the same duplicate group.
    pub fn planted_correlations(&self) -> Result<CorrelationSet> {
        let mut pairs = Vec::new();
        for g in &self.duplicate_groups {
            for (a, &j) in g.iter().enumerate() {
                for &k in &g[a + 1..] {
                    pairs.push((j, k));
                }
            }
        }
        CorrelationSet::new(self.m, pairs)
    }

    pub fn mean_accuracy(&self) -> f64 {
        mean(&self.accuracies)
    }

    /// Expected number of votes per row.
    pub fn expected_density(&self) -> f64 {
        self.m as f64 * self.propensity
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub matrix: LabelMatrix,
    pub gold: GoldLabels,
    /// Generator weights: `accuracy_to_weight(α_j)`, the propensity weights
    /// that reproduce the voting rate, and duplicate-group pairs as
    /// correlations at the weight cap. All clipped to `±TRUTH_WEIGHT_CAP`.
    pub truth: GenerativeParams,
}

pub fn generate(config: &SynthConfig) -> Result<SynthData> {
    config.validate()?;
    let mut rng = rng_from(config.seed, &[0x6765_6e]);
    let leaders = config.leaders();
    let mut gold = Vec::with_capacity(config.n);
    let mut entries = Vec::new();
    let mut draw = vec![0 as Vote; config.m];
    for i in 0..config.n {
        let y: Vote = if rng.random::<f64>() < config.class_balance {
            1
        } else {
            -1
        };
        gold.push(y);
        for j in 0..config.m {
            draw[j] = if leaders[j] != j {
                draw[leaders[j]]
            } else if rng.random::<f64>() < config.propensity {
                if rng.random::<f64>() < config.accuracies[j] {
                    y
                } else {
                    -y
                }
            } else {
                0
            };
            if draw[j] != 0 {
                entries.push((i, j, draw[j]));
            }
        }
    }
    let matrix = LabelMatrix::from_triplets(config.n, config.m, entries)?;

    let cap = TRUTH_WEIGHT_CAP;
    let acc: Vec<f64> = config
        .accuracies
        .iter()
        .map(|&a| accuracy_to_weight(a).clamp(-cap, cap))
        .collect();
    let logit_p = (config.propensity / (1.0 - config.propensity)).ln();
    let lab = acc
        .iter()
        .map(|&w| (logit_p - log_two_cosh(w)).clamp(-cap, cap))
        .collect();
    let correlations = config.planted_correlations()?;
    let corr = vec![cap; correlations.len()];
    Ok(SynthData {
        matrix,
        gold: GoldLabels::new(gold)?,
        truth: GenerativeParams::new(lab, acc, correlations, corr)?,
    })
}

/// Data whose sources only cover half of feature space.
///
/// Each row has three features: `x0 ~ N(0, 1)` decides coverage (sources
/// may vote only when `x0 > 0`), `x1 ~ N(y · separation, 1)` carries the
/// class signal and `x2 ~ N(0, 1)` is noise. A classifier trained on the
/// covered half can therefore still label the uncovered half.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageConfig {
    pub n: usize,
    pub m: usize,
    pub propensity: f64,
    pub accuracy: f64,
    pub separation: f64,
    pub class_balance: f64,
    pub seed: u64,
}

impl CoverageConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        CoverageConfig {
            n,
            m: 10,
            propensity: 0.5,
            accuracy: 0.75,
            separation: 1.0,
            class_balance: 0.5,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoverageData {
    pub features: FeatureSet,
    pub matrix: LabelMatrix,
    pub gold: GoldLabels,
}

pub fn generate_coverage(config: &CoverageConfig) -> Result<CoverageData> {
    if !(config.propensity > 0.0 && config.propensity <= 1.0)
        || !(0.0..=1.0).contains(&config.accuracy)
        || !(0.0..=1.0).contains(&config.class_balance)
        || !config.separation.is_finite()
    {
        return Err(Error::invalid("invalid coverage configuration"));
    }
    let mut rng = rng_from(config.seed, &[0x6578_35]);
    let normal = StandardNormal;
    let mut values = Vec::with_capacity(config.n * 3);
    let mut gold = Vec::with_capacity(config.n);
    let mut entries = Vec::new();
    for i in 0..config.n {
        let y: Vote = if rng.random::<f64>() < config.class_balance {
            1
        } else {
            -1
        };
        let x0: f64 = normal.sample(&mut rng);
        let noise: f64 = normal.sample(&mut rng);
        let x1 = y as f64 * config.separation + noise;
        let x2: f64 = normal.sample(&mut rng);
        values.extend([x0, x1, x2]);
        gold.push(y);
        for j in 0..config.m {
            if x0 > 0.0 && rng.random::<f64>() < config.propensity {
                let v = if rng.random::<f64>() < config.accuracy {
                    y
                } else {
                    -y
                };
                entries.push((i, j, v));
            }
        }
    }
    Ok(CoverageData {
        features: FeatureSet::new(config.n, 3, values)?,
        matrix: LabelMatrix::from_triplets(config.n, config.m, entries)?,
        gold: GoldLabels::new(gold)?,
    })
}

/// Sidecar document describing how a synthetic dataset was generated.
pub fn truth_doc(config: &SynthConfig, data: &SynthData) -> KvDoc {
    let mut doc = data.truth.to_kv(config.seed);
    doc.set("n", config.n)
        .set("propensity", config.propensity)
        .set("class_balance", config.class_balance)
        .set("accuracies", join(&config.accuracies))
        .set(
            "duplicate_groups",
            config
                .duplicate_groups
                .iter()
                .map(|g| {
                    g.iter()
                        .map(|j| j.to_string())
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .collect::<Vec<_>>()
                .join(","),
        );
    doc
}

/// Settings for the advantage-versus-number-of-sources experiment.
#[derive(Debug, Clone)]
pub struct Fig3Options {
    pub n: usize,
    pub propensity: f64,
    pub accuracy_mean: f64,
    /// Per-trial accuracies are drawn uniformly from `mean ± spread`.
    pub accuracy_spread: f64,
    pub class_balance: f64,
    pub seed: u64,
    /// Also fit the independent model per trial and report its advantage.
    pub fit_learned: bool,
    pub optimizer: OptimizerConfig,
    pub fit: FitConfig,
}

impl Default for Fig3Options {
    fn default() -> Self {
        Fig3Options {
            n: 1000,
            propensity: 0.1,
            accuracy_mean: 0.75,
            accuracy_spread: 0.15,
            class_balance: 0.5,
            seed: 0,
            fit_learned: false,
            optimizer: OptimizerConfig::default(),
            fit: FitConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Summary {
    pub mean: f64,
    pub stderr: f64,
}

impl Summary {
    fn of(xs: &[f64]) -> Self {
        let (mean, stderr) = mean_and_stderr(xs);
        Summary { mean, stderr }
    }
}

/// Monte Carlo summary for one number of sources.
#[derive(Debug, Clone, PartialEq)]
pub struct Fig3Point {
    pub m: usize,
    /// Expected label density `m · p_l`.
    pub density: f64,
    /// Advantage of the generator's true weights.
    pub optimal: Summary,
    /// Advantage of weights fitted by the independent exact learner.
    pub learned: Option<Summary>,
    /// Optimizer bound computed from the label matrix alone.
    pub bound: Summary,
    /// `d̄² ᾱ (1 − ᾱ)`, averaged over trials.
    pub low_density_bound: f64,
    /// `exp(−2 p_l (ᾱ − ½)² d̄)`, averaged over trials.
    pub high_density_bound: f64,
}

struct TrialOutcome {
    optimal: f64,
    learned: Option<f64>,
    bound: f64,
    low: f64,
    high: f64,
}

fn run_trial(m: usize, trial: usize, opts: &Fig3Options) -> Result<TrialOutcome> {
    let seed = crate::rng::derive_seed(opts.seed, &[m as u64, trial as u64]);
    let mut rng = rng_from(seed, &[0x6163_63]);
    let (lo, hi) = (
        opts.accuracy_mean - opts.accuracy_spread,
        opts.accuracy_mean + opts.accuracy_spread,
    );
    let accuracies = (0..m)
        .map(|_| {
            if hi > lo {
                rng.random_range(lo..=hi)
            } else {
                lo
            }
        })
        .collect();
    let config = SynthConfig {
        n: opts.n,
        m,
        propensity: opts.propensity,
        accuracies,
        class_balance: opts.class_balance,
        duplicate_groups: Vec::new(),
        seed,
    };
    let data = generate(&config)?;
    let optimal = empirical_advantage(&data.matrix, &data.gold, data.truth.acc())?;
    let learned = if opts.fit_learned {
        let fitted = fit_independent_exact(&data.matrix, &opts.fit)?;
        Some(empirical_advantage(&data.matrix, &data.gold, fitted.acc())?)
    } else {
        None
    };
    let alpha_bar = config.mean_accuracy();
    let d_bar = config.expected_density();
    Ok(TrialOutcome {
        optimal,
        learned,
        bound: advantage_bound(&data.matrix, &opts.optimizer),
        low: low_density_bound(d_bar, alpha_bar),
        high: high_density_bound(d_bar, opts.propensity, alpha_bar)?,
    })
}

/// For each `m`, run `trials` seeded trials and summarise the advantages and
/// bounds. Trial seeds depend only on `(seed, m, trial)`, so the result does
/// not depend on thread scheduling.
pub fn fig3_grid(m_values: &[usize], trials: usize, opts: &Fig3Options) -> Result<Vec<Fig3Point>> {
    if trials == 0 {
        return Err(Error::invalid("fig3_grid needs at least one trial"));
    }
    let jobs: Vec<(usize, usize)> = m_values
        .iter()
        .flat_map(|&m| (0..trials).map(move |t| (m, t)))
        .collect();
    #[cfg(feature = "parallel")]
    let outcomes: Vec<Result<TrialOutcome>> = jobs
        .par_iter()
        .map(|&(m, t)| run_trial(m, t, opts))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<Result<TrialOutcome>> =
        jobs.iter().map(|&(m, t)| run_trial(m, t, opts)).collect();
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    Ok(m_values
        .iter()
        .zip(outcomes.chunks(trials))
        .map(|(&m, chunk)| {
            let pick = |f: fn(&TrialOutcome) -> f64| chunk.iter().map(f).collect::<Vec<_>>();
            let learned: Vec<f64> = chunk.iter().filter_map(|o| o.learned).collect();
            Fig3Point {
                m,
                density: m as f64 * opts.propensity,
                optimal: Summary::of(&pick(|o| o.optimal)),
                learned: (!learned.is_empty()).then(|| Summary::of(&learned)),
                bound: Summary::of(&pick(|o| o.bound)),
                low_density_bound: mean(&pick(|o| o.low)),
                high_density_bound: mean(&pick(|o| o.high)),
            }
        })
        .collect())
}
