mod analysis;
mod data;
mod model;

use std::path::Path;

use labelfuse::kv::KvDoc;
use labelfuse::{Format, GenerativeParams, LabelMatrix};

use crate::args::{Command, MatrixArgs};
use crate::error::Result;
use crate::io::{read_file, Header};

pub fn run(command: &Command, header: Header) -> Result<()> {
    match command {
        Command::Fit(c) => model::fit(c, header),
        Command::Predict(c) => model::predict(c, header),
        Command::Optimize(c) => analysis::optimize(c, header),
        Command::Structure(c) => analysis::structure(c, header),
        Command::Sweep(c) => analysis::sweep(c, header),
        Command::Advantage(c) => analysis::advantage(c, header),
        Command::Synth(c) => data::synth(c, header),
        Command::Eval(c) => data::eval(c, header),
        Command::TrainDisc(c) => data::train_disc(c, header),
    }
}

fn load_matrix(path: &Path, format: Format) -> Result<LabelMatrix> {
    read_file(path, |r| LabelMatrix::read(r, format))
}

fn load_matrix_args(args: &MatrixArgs) -> Result<LabelMatrix> {
    load_matrix(&args.matrix, args.format)
}

/// A generative model file: the weights plus the keys `fit` adds.
struct ModelFile {
    params: GenerativeParams,
    doc: KvDoc,
}

impl ModelFile {
    fn load(path: &Path) -> Result<Self> {
        read_file(path, |r| {
            let doc = KvDoc::read(r)?;
            Ok(ModelFile {
                params: GenerativeParams::from_kv(&doc)?,
                doc,
            })
        })
    }

    fn is_majority_vote(&self) -> bool {
        self.doc.get("strategy") == Some("MV")
    }
}

/// `1.0`, `0.0` or `0.5` from the sign of each row's vote sum.
fn majority_probabilities(matrix: &LabelMatrix) -> Vec<f64> {
    (0..matrix.n())
        .map(|i| match matrix.vote_sum(i).signum() {
            1 => 1.0,
            -1 => 0.0,
            _ => 0.5,
        })
        .collect()
}
