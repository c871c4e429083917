//! `score`: exact log-likelihood of a fitted model on an events file
//! (higher is better; floored event intensities are counted).

use std::path::PathBuf;

use clap::Args;
use hawkes_rkhs::model::load_model;
use hawkes_rkhs::{default_grid_size, exact_neg_log_likelihood, Result};
use serde::{Deserialize, Serialize};

use crate::common;

#[derive(Args, Debug)]
pub struct ScoreArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Fitted model file.
    #[arg(long)]
    model: Option<PathBuf>,

    /// Events file.
    #[arg(long)]
    events: Option<PathBuf>,

    /// Events format: csv or json [default: csv]
    #[arg(long)]
    format: Option<String>,

    /// Observation horizon (required for CSV events).
    #[arg(long)]
    horizon: Option<f64>,

    /// Number of dimensions (CSV; inferred when omitted).
    #[arg(long)]
    dims: Option<usize>,

    /// Skip the first CSV line.
    #[arg(long)]
    header: bool,

    /// Scoring grid size [default: max(1000, 2 max_j N_j)]
    #[arg(long)]
    m_score: Option<usize>,

    /// Output file [default: score.json]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    model: Option<PathBuf>,
    events: Option<PathBuf>,
    format: Option<String>,
    horizon: Option<f64>,
    dims: Option<usize>,
    header: Option<bool>,
    m_score: Option<usize>,
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ScoreOutput {
    command: String,
    model: PathBuf,
    events: PathBuf,
    m_score: usize,
    /// Log-likelihood, higher is better.
    loglik: f64,
    neg_log_likelihood: f64,
    /// Events whose intensity was floored inside the logarithm.
    floored_events: usize,
}

pub fn run(args: ScoreArgs, verbose: bool) -> Result<()> {
    let file: FileConfig = common::load_config(&args.config)?;
    let model_path = common::pick_opt(args.model, file.model)
        .ok_or_else(|| hawkes_rkhs::Error::config("--model is required".to_string()))?;
    let events_path = common::pick_opt(args.events, file.events)
        .ok_or_else(|| hawkes_rkhs::Error::config("--events is required".to_string()))?;
    let format = common::pick(args.format, file.format, "csv".to_string());
    let header = args.header || file.header.unwrap_or(false);

    let saved = load_model(&model_path)?;
    let events = common::read_events(
        &events_path,
        &format,
        common::pick_opt(args.horizon, file.horizon),
        common::pick_opt(args.dims, file.dims),
        header,
    )?;
    let m_score = common::pick(args.m_score, file.m_score, default_grid_size(&events));
    let (nll, floored) = exact_neg_log_likelihood(&saved.model, &events, m_score)?;
    if verbose {
        eprintln!("score: loglik {} ({floored} floored events)", -nll);
    }
    let out = ScoreOutput {
        command: "score".to_string(),
        model: model_path,
        events: events_path,
        m_score,
        loglik: -nll,
        neg_log_likelihood: nll,
        floored_events: floored,
    };
    let path = common::pick(args.out, file.out, PathBuf::from("score.json"));
    common::write_json(&path, &out)?;
    Ok(())
}
