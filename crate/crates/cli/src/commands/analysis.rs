use std::fmt::Write as _;

use labelfuse::advantage::{
    advantage_bound, empirical_advantage, high_density_bound, low_density_bound,
};
use labelfuse::kv::KvDoc;
use labelfuse::structlearn::{sweep_with, StructureLearner, SweepOptions, SweepResult};
use labelfuse::{advantage, Error, GoldLabels, ModelingStrategy};

use super::{load_matrix_args, ModelFile};
use crate::args::{AdvantageCmd, OptimizeCmd, StructureCmd, SweepCmd};
use crate::error::{CliError, Result};
use crate::io::{emit, read_file, write_pairs, Header};

fn sweep_table(out: &mut String, result: &SweepResult) {
    out.push_str("epsilon,num_correlations,pairs\n");
    for p in &result.points {
        let _ = writeln!(
            out,
            "{},{},{}",
            p.epsilon,
            p.num_correlations,
            p.selected.to_list_string()
        );
    }
    let _ = writeln!(out, "chosen_epsilon: {}", result.chosen_epsilon);
}

pub fn optimize(cmd: &OptimizeCmd, header: Header) -> Result<()> {
    let matrix = load_matrix_args(&cmd.matrix)?;
    let outcome = advantage::optimize(
        &matrix,
        &cmd.optimizer.config(),
        &cmd.fit.config(cmd.run.seed),
    )?;
    let mut out = header.to_text();
    let _ = writeln!(out, "bound: {}", outcome.bound);
    let _ = writeln!(out, "strategy: {}", outcome.strategy);
    if let Some(result) = &outcome.sweep {
        sweep_table(&mut out, result);
    }
    if let ModelingStrategy::GenerativeModel { correlations, .. } = &outcome.strategy {
        let _ = writeln!(out, "correlations: {}", correlations.to_list_string());
    }
    emit(cmd.out.as_deref(), &out)
}

pub fn structure(cmd: &StructureCmd, header: Header) -> Result<()> {
    if !(cmd.l1 > 0.0) {
        return Err(CliError::usage("--l1 must be positive"));
    }
    let matrix = load_matrix_args(&cmd.matrix)?;
    let learner = StructureLearner::new(&matrix, &cmd.fit.config(cmd.run.seed))?;
    let pairs = learner.fit(cmd.l1)?.selected_pairs(cmd.l1);
    let mut buf = Vec::new();
    write_pairs(&mut buf, &header, &pairs)?;
    emit(
        cmd.out.as_deref(),
        &String::from_utf8(buf).expect("ASCII output"),
    )
}

pub fn sweep(cmd: &SweepCmd, header: Header) -> Result<()> {
    let matrix = load_matrix_args(&cmd.matrix)?;
    let learner = StructureLearner::new(&matrix, &cmd.fit.config(cmd.run.seed))?;
    let result = sweep_with(
        &learner,
        cmd.delta,
        SweepOptions {
            early_stop: cmd.early_stop,
        },
    )?;
    let mut out = header.to_text();
    sweep_table(&mut out, &result);
    emit(cmd.out.as_deref(), &out)
}

/// Generator facts needed for the density bounds.
struct Truth {
    acc: Vec<f64>,
    propensity: f64,
    mean_accuracy: f64,
}

fn load_truth(path: &std::path::Path) -> Result<Truth> {
    read_file(path, |r| {
        let doc = KvDoc::read(r)?;
        let accuracies: Vec<f64> = doc.parse_list("accuracies")?;
        if accuracies.is_empty() {
            return Err(Error::InvalidArgument(
                "truth file lists no accuracies".into(),
            ));
        }
        Ok(Truth {
            acc: doc.parse_list("acc")?,
            propensity: doc.parse("propensity")?,
            mean_accuracy: accuracies.iter().sum::<f64>() / accuracies.len() as f64,
        })
    })
}

pub fn advantage(cmd: &AdvantageCmd, header: Header) -> Result<()> {
    let matrix = load_matrix_args(&cmd.matrix)?;
    let config = cmd.optimizer.config();
    config.validate()?;
    let gold = cmd
        .gold
        .as_ref()
        .map(|p| read_file(p, GoldLabels::read))
        .transpose()?;
    let weights = match (&cmd.model, &cmd.weights) {
        (Some(path), _) => {
            let model = ModelFile::load(path)?;
            model.params.check_matrix(&matrix)?;
            Some(model.params.acc().to_vec())
        }
        (None, Some(list)) => Some(
            list.split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| CliError::usage(format!("bad weight '{}'", s.trim())))
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        (None, None) => None,
    };
    let truth = cmd.truth.as_deref().map(load_truth).transpose()?;

    let mut out = header.to_text();
    let _ = writeln!(out, "bound: {}", advantage_bound(&matrix, &config));
    let _ = writeln!(
        out,
        "density: {}",
        matrix.nnz() as f64 / matrix.n().max(1) as f64
    );
    if let Some(gold) = &gold {
        if let Some(w) = &weights {
            let _ = writeln!(
                out,
                "empirical_advantage: {}",
                empirical_advantage(&matrix, gold, w)?
            );
        }
        if let Some(t) = &truth {
            let _ = writeln!(
                out,
                "optimal_advantage: {}",
                empirical_advantage(&matrix, gold, &t.acc)?
            );
        }
    }
    if let Some(t) = &truth {
        let d_bar = matrix.m() as f64 * t.propensity;
        let _ = writeln!(out, "expected_density: {d_bar}");
        let _ = writeln!(
            out,
            "low_density_bound: {}",
            low_density_bound(d_bar, t.mean_accuracy)
        );
        match high_density_bound(d_bar, t.propensity, t.mean_accuracy) {
            Ok(b) => {
                let _ = writeln!(out, "high_density_bound: {b}");
            }
            Err(_) => out.push_str("high_density_bound: undefined (mean accuracy <= 0.5)\n"),
        }
    }
    emit(cmd.out.as_deref(), &out)
}
