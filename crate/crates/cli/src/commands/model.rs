use labelfuse::advantage::optimize;
use labelfuse::genmodel::{
    fit_gibbs_sgd, fit_independent_exact, posterior_gibbs, posterior_independent,
};
use labelfuse::kv::KvDoc;
use labelfuse::noiseaware;
use labelfuse::structlearn::learn_structure;
use labelfuse::{CorrelationSet, DiscModel, FeatureSet, ModelingStrategy};

use super::{load_matrix, load_matrix_args, majority_probabilities, ModelFile};
use crate::args::{FitCmd, PredictCmd};
use crate::error::{CliError, Result};
use crate::io::{emit, read_file, read_pairs, write_file, write_probabilities, Header};

pub fn fit(cmd: &FitCmd, header: Header) -> Result<()> {
    let matrix = load_matrix_args(&cmd.matrix)?;
    let config = cmd.fit.config(cmd.run.seed);
    let mut strategy = "GM";
    let mut epsilon = None;
    let mut bound = None;

    let (params, fitter) = if cmd.exact {
        (fit_independent_exact(&matrix, &config)?, "exact")
    } else {
        let correlations = if let Some(path) = &cmd.correlations {
            read_file(path, |r| read_pairs(r, matrix.m()))?
        } else if cmd.auto_structure {
            let outcome = optimize(&matrix, &cmd.optimizer.config(), &config)?;
            bound = Some(outcome.bound);
            match outcome.strategy {
                ModelingStrategy::MajorityVote => {
                    strategy = "MV";
                    CorrelationSet::empty()
                }
                ModelingStrategy::GenerativeModel {
                    epsilon: e,
                    correlations,
                } => {
                    epsilon = Some(e);
                    correlations
                }
            }
        } else if let Some(e) = cmd.l1 {
            epsilon = Some(e);
            learn_structure(&matrix, e, &config)?
        } else {
            CorrelationSet::empty()
        };
        (fit_gibbs_sgd(&matrix, &correlations, &config)?, "cd")
    };

    let mut doc = params.to_kv(cmd.run.seed);
    doc.set("fitter", fitter).set("strategy", strategy);
    if let Some(e) = epsilon {
        doc.set("epsilon", e);
    }
    if let Some(b) = bound {
        doc.set("bound", b);
    }
    header.add_to(&mut doc);
    write_file(&cmd.out, |w| doc.write(w))
}

pub fn predict(cmd: &PredictCmd, header: Header) -> Result<()> {
    let probs = if let Some(path) = &cmd.disc_model {
        let features_path = cmd.features.as_ref().expect("clap requires --features");
        let model = read_file(path, |r| DiscModel::from_kv(&KvDoc::read(r)?))?;
        let features = read_file(features_path, FeatureSet::read)?;
        noiseaware::predict(&model, &features)?
    } else {
        let matrix_path = cmd.matrix.as_ref().ok_or_else(|| {
            CliError::usage("predict needs --matrix unless --disc-model is given")
        })?;
        let matrix = load_matrix(matrix_path, cmd.format)?;
        if cmd.mv {
            majority_probabilities(&matrix)
        } else {
            let path = cmd.model.as_ref().ok_or_else(|| {
                CliError::usage("predict needs one of --model, --mv or --disc-model")
            })?;
            let model = ModelFile::load(path)?;
            model.params.check_matrix(&matrix)?;
            if model.is_majority_vote() {
                majority_probabilities(&matrix)
            } else if model.params.correlations().is_empty() {
                posterior_independent(&matrix, &model.params)?.into_vec()
            } else {
                posterior_gibbs(
                    &matrix,
                    &model.params,
                    cmd.samples,
                    cmd.burn_in,
                    cmd.run.seed,
                )?
                .into_vec()
            }
        }
    };
    let mut buf = Vec::new();
    write_probabilities(&mut buf, &header, &probs)?;
    emit(
        cmd.out.as_deref(),
        &String::from_utf8(buf).expect("ASCII output"),
    )
}
