//! Combine the outputs of many noisy, abstaining labeling sources into
//! probabilistic training labels.
//!
//! The crate is organised around the pipeline a weak-supervision run goes
//! through:
//!
//! * [`labelmatrix`] holds the observed label matrix (rows are data points,
//!   columns are sources, entries in `{-1, 0, +1}` with `0` = abstain).
//! * [`genmodel`] is the generative label model: propensity, accuracy and
//!   pairwise correlation factors, posterior inference, an exact learner for
//!   the independent model and a contrastive-divergence learner for models
//!   with correlations.
//! * [`structlearn`] picks which source pairs to model as correlated using an
//!   l1-regularised pseudolikelihood, sweeps the threshold and picks the
//!   elbow.
//! * [`advantage`] compares weighted and unweighted majority votes and
//!   decides whether learning a model is worth it at all.
//! * [`synthgen`] generates seeded synthetic label matrices with known truth.
//! * [`noiseaware`] trains a logistic regression on probabilistic labels.

pub mod advantage;
pub mod error;
pub mod genmodel;
pub mod kv;
pub mod labelmatrix;
pub mod math;
pub mod noiseaware;
pub mod rng;
pub mod structlearn;
pub mod synthgen;

pub use advantage::{AdvantageReport, ModelingStrategy, OptimizerConfig};
pub use error::{Error, Result};
pub use genmodel::{CorrelationSet, FitConfig, GenerativeParams, ProbLabels};
pub use labelmatrix::{Format, GoldLabels, LabelMatrix, MatrixStats};
pub use noiseaware::{DiscModel, FeatureSet};
pub use structlearn::{SweepPoint, SweepResult};
pub use synthgen::SynthConfig;
