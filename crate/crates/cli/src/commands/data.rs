use std::fmt::Write as _;

use labelfuse::advantage::{
    advantage_bound, classification_metrics, empirical_advantage, prefers_generative, table_header,
    table_row, ClassificationMetrics,
};
use labelfuse::kv::KvDoc;
use labelfuse::labelmatrix::stats;
use labelfuse::noiseaware::train;
use labelfuse::synthgen::{generate, generate_coverage, truth_doc, CoverageConfig, SynthConfig};
use labelfuse::{Error, FeatureSet, FitConfig, GoldLabels, ProbLabels};

use super::{load_matrix, ModelFile};
use crate::args::{EvalCmd, Preset, SynthCmd, TrainDiscCmd};
use crate::error::{CliError, Result};
use crate::io::{emit, read_file, read_probabilities, write_file, Header};

pub fn synth(cmd: &SynthCmd, mut header: Header) -> Result<()> {
    let seed = cmd.run.seed;
    let fixed = matches!(cmd.preset, Preset::Footnote7 | Preset::Duplicated);
    if fixed && (cmd.propensity.is_some() || cmd.accuracy.is_some()) {
        return Err(CliError::usage(
            "footnote7 and duplicated fix the propensity and accuracies",
        ));
    }
    if cmd.preset == Preset::Duplicated && cmd.m.is_some_and(|m| m != 10) {
        return Err(CliError::usage("duplicated always has 10 sources"));
    }

    let (matrix, gold, features, truth) = if cmd.preset == Preset::Coverage {
        let defaults = CoverageConfig::new(cmd.n, seed);
        let config = CoverageConfig {
            m: cmd.m.unwrap_or(defaults.m),
            propensity: cmd.propensity.unwrap_or(defaults.propensity),
            accuracy: cmd.accuracy.unwrap_or(defaults.accuracy),
            ..defaults
        };
        header.note("resolved_m", config.m);
        header.note("resolved_propensity", config.propensity);
        header.note("resolved_accuracy", config.accuracy);
        header.note("separation", config.separation);
        let data = generate_coverage(&config)?;
        (data.matrix, data.gold, Some(data.features), None)
    } else {
        let config = match cmd.preset {
            Preset::Footnote7 => {
                SynthConfig::footnote7(cmd.n, cmd.m.unwrap_or(10), cmd.spread, seed)
            }
            Preset::Duplicated => SynthConfig::duplicated(cmd.n, seed),
            Preset::Planted => SynthConfig::planted_pairs(
                cmd.n,
                cmd.m.unwrap_or(20),
                cmd.pairs,
                cmd.propensity.unwrap_or(0.5),
                cmd.accuracy.unwrap_or(0.6),
                seed,
            ),
            Preset::Uniform => SynthConfig::uniform(
                cmd.n,
                cmd.m.unwrap_or(10),
                cmd.propensity.unwrap_or(0.5),
                cmd.accuracy.unwrap_or(0.75),
                seed,
            ),
            Preset::Coverage => unreachable!(),
        };
        header.note("resolved_m", config.m);
        header.note("resolved_propensity", config.propensity);
        let data = generate(&config)?;
        let mut doc = truth_doc(&config, &data);
        header.add_to(&mut doc);
        (data.matrix, data.gold, None, Some(doc))
    };

    let dir = &cmd.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::File {
        path: dir.clone(),
        source: Error::Io(e),
    })?;
    write_file(&dir.join("matrix.csv"), |w| {
        header.write(w)?;
        matrix.write(&mut *w, cmd.format)
    })?;
    write_file(&dir.join("gold.csv"), |w| {
        header.write(w)?;
        gold.write(&mut *w)
    })?;
    if let Some(features) = &features {
        write_file(&dir.join("features.csv"), |w| {
            header.write(w)?;
            features.write(&mut *w)
        })?;
    }
    if let Some(doc) = &truth {
        write_file(&dir.join("truth.kv"), |w| doc.write(w))?;
    }

    let s = stats(&matrix)?;
    let summary = format!(
        "n: {}\nm: {}\ndensity: {}\ncoverage: {}\noverlap: {}\nconflict: {}\n",
        matrix.n(),
        matrix.m(),
        s.density,
        s.coverage,
        s.overlap,
        s.conflict
    );
    emit(None, &summary)
}

fn metrics_line(label: &str, m: &ClassificationMetrics) -> String {
    format!(
        "{label}: accuracy={:.4} precision={:.4} recall={:.4} f1={:.4} support={}\n",
        m.accuracy, m.precision, m.recall, m.f1, m.support
    )
}

pub fn eval(cmd: &EvalCmd, header: Header) -> Result<()> {
    let mut gold = read_file(&cmd.gold, GoldLabels::read)?;
    let mut matrix = cmd
        .matrix
        .as_ref()
        .map(|p| load_matrix(p, cmd.format))
        .transpose()?;
    let mut preds = cmd
        .pred
        .as_ref()
        .map(|p| read_file(p, read_probabilities))
        .transpose()?;
    if let Some(m) = &matrix {
        gold.check_against(m)?;
    }
    if let Some(p) = &preds {
        if p.len() != gold.len() {
            return Err(Error::Dimension {
                what: "predictions",
                expected: gold.len(),
                found: p.len(),
            }
            .into());
        }
    }
    let model = cmd.model.as_deref().map(ModelFile::load).transpose()?;

    if cmd.abstain_only {
        let m = matrix.as_ref().expect("clap requires --matrix");
        let rows: Vec<usize> = (0..m.n()).filter(|&i| m.row_nnz(i) == 0).collect();
        if rows.is_empty() {
            return Err(CliError::usage("no row has every source abstaining"));
        }
        gold = GoldLabels::new(rows.iter().map(|&i| gold.as_slice()[i]).collect())?;
        preds = preds.map(|p| rows.iter().map(|&i| p[i]).collect());
        matrix = Some(m.select_rows(&rows)?);
    }

    let mut out = header.to_text();
    if let Some(m) = &matrix {
        let config = cmd.optimizer.config();
        config.validate()?;
        let bound = advantage_bound(m, &config);
        let aw = match &model {
            Some(model) => {
                model.params.check_matrix(m)?;
                Some(empirical_advantage(m, &gold, model.params.acc())?)
            }
            None => None,
        };
        let strategy = match &model {
            Some(model) => model.doc.get("strategy").unwrap_or("GM").to_string(),
            None if prefers_generative(bound, config.gamma) => "GM".into(),
            None => "MV".into(),
        };
        let density = m.nnz() as f64 / m.n() as f64;
        let _ = writeln!(out, "{}", table_header());
        let _ = writeln!(
            out,
            "{}",
            table_row(&cmd.name, aw, bound, &strategy, density)
        );
        if let Some(a) = aw {
            let _ = writeln!(out, "advantage: {a}");
        }
    }

    let labels = gold.as_slice();
    let positives = labels.iter().filter(|&&y| y > 0).count();
    let majority_class = positives.max(labels.len() - positives) as f64 / labels.len() as f64;
    let _ = writeln!(out, "rows: {}", labels.len());
    let _ = writeln!(out, "majority_class_baseline: accuracy={majority_class:.4}");
    if let Some(m) = &matrix {
        let scores: Vec<f64> = (0..m.n()).map(|i| m.vote_sum(i) as f64).collect();
        out.push_str(&metrics_line(
            "majority_vote",
            &classification_metrics(&scores, labels)?,
        ));
    }
    if let Some(p) = &preds {
        let scores: Vec<f64> = p.iter().map(|q| q - 0.5).collect();
        out.push_str(&metrics_line(
            "predictions",
            &classification_metrics(&scores, labels)?,
        ));
    }
    emit(cmd.out.as_deref(), &out)
}

pub fn train_disc(cmd: &TrainDiscCmd, mut header: Header) -> Result<()> {
    let features = read_file(&cmd.features, FeatureSet::read)?;
    let probs = read_file(&cmd.labels, read_probabilities)?;
    if probs.len() != features.n() {
        return Err(Error::Dimension {
            what: "probabilistic labels",
            expected: features.n(),
            found: probs.len(),
        }
        .into());
    }
    let rows: Vec<usize> = (0..probs.len())
        .filter(|&i| !(cmd.skip_ties && probs[i] == 0.5))
        .collect();
    if rows.is_empty() {
        return Err(CliError::usage("every row is a tie; nothing to train on"));
    }
    header.note("training_rows", rows.len());
    let features = features.select_rows(&rows)?;
    let probs = ProbLabels::new(rows.iter().map(|&i| probs[i]).collect())?;
    let config = FitConfig {
        l2_reg: cmd.l2,
        max_iters: cmd.max_iters,
        tolerance: cmd.tolerance,
        seed: cmd.run.seed,
        ..FitConfig::default()
    };
    let model = train(&features, &probs, &config)?;
    let mut doc: KvDoc = model.to_kv();
    header.add_to(&mut doc);
    write_file(&cmd.out, |w| doc.write(w))
}
