//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each exported function takes plain numbers or text and returns a JSON
//! string, so the page needs no glue beyond `JSON.parse`.

use std::fmt::Write as _;

use labelfuse::advantage::{advantage_bound, prefers_generative};
use labelfuse::genmodel::{fit_independent_exact, posterior_independent, weight_to_accuracy};
use labelfuse::structlearn::sweep;
use labelfuse::synthgen::{fig3_grid, generate, Fig3Options};
use labelfuse::{FitConfig, Format, LabelMatrix, OptimizerConfig, SynthConfig};
use wasm_bindgen::prelude::*;

fn to_js(e: labelfuse::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn list(xs: impl IntoIterator<Item = f64>) -> String {
    let items: Vec<String> = xs.into_iter().map(number).collect();
    format!("[{}]", items.join(","))
}

/// JSON has no NaN or infinity.
fn number(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        "null".into()
    }
}

fn pairs(set: &[(usize, usize)]) -> String {
    let items: Vec<String> = set.iter().map(|(a, b)| format!("[{a},{b}]")).collect();
    format!("[{}]", items.join(","))
}

/// Mean optimal advantage, optimizer bound and the two density bounds for
/// `m = 1..=max_sources`.
pub fn advantage_curve_json(
    max_sources: usize,
    trials: usize,
    propensity: f64,
    accuracy: f64,
    seed: u64,
) -> labelfuse::Result<String> {
    let opts = Fig3Options {
        n: 500,
        propensity,
        accuracy_mean: accuracy,
        accuracy_spread: (accuracy - 0.5).min(1.0 - accuracy).min(0.15),
        seed,
        ..Fig3Options::default()
    };
    let m_values: Vec<usize> = (1..=max_sources).collect();
    let grid = fig3_grid(&m_values, trials, &opts)?;
    let mut out = String::from("[");
    for (k, p) in grid.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        let _ = write!(
            out,
            r#"{{"m":{},"density":{},"optimal":{},"stderr":{},"bound":{},"low":{},"high":{}}}"#,
            p.m,
            number(p.density),
            number(p.optimal.mean),
            number(p.optimal.stderr),
            number(p.bound.mean),
            number(p.low_density_bound),
            number(p.high_density_bound)
        );
    }
    out.push(']');
    Ok(out)
}

/// Structure-learning sweep on data with `planted` duplicated source pairs.
pub fn structure_sweep_json(
    n: usize,
    m: usize,
    planted: usize,
    accuracy: f64,
    delta: f64,
    seed: u64,
) -> labelfuse::Result<String> {
    let config = SynthConfig::planted_pairs(n, m, planted, 0.5, accuracy, seed);
    let data = generate(&config)?;
    let fit = FitConfig {
        seed,
        ..FitConfig::default()
    };
    let result = sweep(&data.matrix, delta, &fit)?;
    let points: Vec<String> = result
        .points
        .iter()
        .map(|p| {
            format!(
                r#"{{"epsilon":{},"count":{},"pairs":{}}}"#,
                number(p.epsilon),
                p.num_correlations,
                pairs(p.selected.pairs())
            )
        })
        .collect();
    let planted: Vec<(usize, usize)> = config
        .duplicate_groups
        .iter()
        .flat_map(|g| {
            g.iter()
                .enumerate()
                .flat_map(move |(k, &a)| g[k + 1..].iter().map(move |&b| (a, b)))
        })
        .collect();
    Ok(format!(
        r#"{{"planted":{},"chosen":{},"points":[{}]}}"#,
        pairs(&planted),
        number(result.chosen_epsilon),
        points.join(",")
    ))
}

/// Fit the independent model to a dense matrix given as text (one row per
/// line, comma-separated votes in {-1, 0, 1}) and report its output.
pub fn label_posterior_json(matrix_text: &str, gamma: f64) -> labelfuse::Result<String> {
    let matrix = LabelMatrix::read(matrix_text.as_bytes(), Format::Dense)?;
    let optimizer = OptimizerConfig {
        gamma,
        ..OptimizerConfig::default()
    };
    optimizer.validate()?;
    let params = fit_independent_exact(&matrix, &FitConfig::default())?;
    let posterior = posterior_independent(&matrix, &params)?;
    let bound = advantage_bound(&matrix, &optimizer);
    let majority = (0..matrix.n()).map(|i| match matrix.vote_sum(i).signum() {
        1 => 1.0,
        -1 => 0.0,
        _ => 0.5,
    });
    Ok(format!(
        r#"{{"n":{},"m":{},"accuracies":{},"propensities":{},"posterior":{},"majority":{},"bound":{},"strategy":"{}"}}"#,
        matrix.n(),
        matrix.m(),
        list(params.acc().iter().map(|&w| weight_to_accuracy(w))),
        list(
            matrix
                .columns()
                .iter()
                .map(|c| c.len() as f64 / matrix.n() as f64)
        ),
        list(posterior.as_slice().iter().copied()),
        list(majority),
        number(bound),
        if prefers_generative(bound, gamma) {
            "GM"
        } else {
            "MV"
        }
    ))
}

#[wasm_bindgen(js_name = advantageCurve)]
pub fn advantage_curve(
    max_sources: usize,
    trials: usize,
    propensity: f64,
    accuracy: f64,
    seed: u64,
) -> Result<String, JsError> {
    advantage_curve_json(max_sources, trials, propensity, accuracy, seed).map_err(to_js)
}

#[wasm_bindgen(js_name = structureSweep)]
pub fn structure_sweep(
    n: usize,
    m: usize,
    planted: usize,
    accuracy: f64,
    delta: f64,
    seed: u64,
) -> Result<String, JsError> {
    structure_sweep_json(n, m, planted, accuracy, delta, seed).map_err(to_js)
}

#[wasm_bindgen(js_name = labelPosterior)]
pub fn label_posterior(matrix_text: &str, gamma: f64) -> Result<String, JsError> {
    label_posterior_json(matrix_text, gamma).map_err(to_js)
}
