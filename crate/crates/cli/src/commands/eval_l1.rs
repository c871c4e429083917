//! `eval-l1`: per-pair L1 errors of a fitted model against a ground truth.

use std::path::PathBuf;

use clap::Args;
use hawkes_rkhs::evaluate::{l1_summary, L1Summary};
use hawkes_rkhs::model::load_model;
use hawkes_rkhs::{IntensityModel, Result};
use serde::{Deserialize, Serialize};

use crate::common;

#[derive(Args, Debug)]
pub struct EvalL1Args {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Fitted model file.
    #[arg(long)]
    model: Option<PathBuf>,

    /// Ground-truth model: builtin name or JSON spec file [default: paper3d]
    #[arg(long)]
    truth: Option<String>,

    /// Evaluation grid points per pair [default: 2001]
    #[arg(long)]
    grid_points: Option<usize>,

    /// Output directory [default: .]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    model: Option<PathBuf>,
    truth: Option<String>,
    grid_points: Option<usize>,
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct L1Output {
    command: String,
    model: PathBuf,
    truth: String,
    grid_points: usize,
    l1: L1Summary,
}

pub fn run(args: EvalL1Args, verbose: bool) -> Result<()> {
    let file: FileConfig = common::load_config(&args.config)?;
    let model_path = common::pick_opt(args.model, file.model)
        .ok_or_else(|| hawkes_rkhs::Error::config("--model is required".to_string()))?;
    let truth_name = common::pick(args.truth, file.truth, "paper3d".to_string());
    let grid_points = common::pick(args.grid_points, file.grid_points, 2001);
    let out_dir = common::pick(args.out, file.out, PathBuf::from("."));

    let truth = common::resolve_truth(&truth_name)?;
    let saved = load_model(&model_path)?;
    if saved.model.dims() != truth.dims() {
        return Err(hawkes_rkhs::Error::Shape(format!(
            "model has {} dimensions, truth has {}",
            saved.model.dims(),
            truth.dims()
        )));
    }
    let l1 = l1_summary(&truth, &saved.model, grid_points);
    if verbose {
        eprintln!("eval-l1: sum {}", l1.sum);
    }

    let mut csv = String::from("j,l,l1\n");
    for (j, row) in l1.per_pair.iter().enumerate() {
        for (l, v) in row.iter().enumerate() {
            csv.push_str(&format!("{j},{l},{v}\n"));
        }
    }
    std::fs::create_dir_all(&out_dir)?;
    common::write_text(&out_dir.join("l1.csv"), &csv)?;
    common::write_json(
        &out_dir.join("l1.json"),
        &L1Output {
            command: "eval-l1".to_string(),
            model: model_path,
            truth: truth_name,
            grid_points,
            l1,
        },
    )?;
    Ok(())
}
