//! `sweep`: factorial sweep over the smoothing parameters omega and M,
//! reporting the best summed L1 error per pair over the (gamma, eta) grid.

use std::path::PathBuf;

use clap::Args;
use hawkes_rkhs::evaluate::{approximation_sweep, sweep_table_csv, GridSpec, Method, SweepRow};
use hawkes_rkhs::optimizer::OptimOptions;
use hawkes_rkhs::{simulate_thinning, IntensityModel, Result};
use serde::{Deserialize, Serialize};

use crate::common;

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Ground-truth model [default: paper3d]
    #[arg(long)]
    truth: Option<String>,

    /// Training/validation horizon [default: 1000]
    #[arg(long)]
    horizon: Option<f64>,

    /// Root seed (train = seed, val = seed + 1) [default: 0]
    #[arg(long)]
    seed: Option<u64>,

    /// Burn-in length [default: 10 support lengths]
    #[arg(long)]
    burn_in: Option<f64>,

    /// Softplus sharpness values, comma separated [default: 1,10,100]
    #[arg(long)]
    omegas: Option<String>,

    /// Riemann grid sizes, comma separated [default: 100,1000]
    #[arg(long)]
    ms: Option<String>,

    /// Kernel width grid [default: 1,10,100]
    #[arg(long)]
    gammas: Option<String>,

    /// Ridge weight grid [default: 0.1,1,10,100]
    #[arg(long)]
    etas: Option<String>,

    /// Criterion: mle or ls [default: mle]
    #[arg(long)]
    criterion: Option<String>,

    /// Interaction support bound [default: truth support]
    #[arg(long)]
    support: Option<f64>,

    /// Optimizer iteration cap [default: 500]
    #[arg(long)]
    max_iters: Option<usize>,

    /// L1 evaluation grid points [default: 2001]
    #[arg(long)]
    grid_points: Option<usize>,

    /// Output directory [default: .]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    truth: Option<String>,
    horizon: Option<f64>,
    seed: Option<u64>,
    burn_in: Option<f64>,
    omegas: Option<String>,
    ms: Option<String>,
    gammas: Option<String>,
    etas: Option<String>,
    criterion: Option<String>,
    support: Option<f64>,
    max_iters: Option<usize>,
    grid_points: Option<usize>,
    out: Option<PathBuf>,
}

#[derive(Serialize, Clone)]
struct Effective {
    truth: String,
    horizon: f64,
    seed: u64,
    burn_in: f64,
    omegas: Vec<f64>,
    ms: Vec<usize>,
    gammas: Vec<f64>,
    etas: Vec<f64>,
    criterion: String,
    support: f64,
    max_iters: usize,
    grid_points: usize,
    out: PathBuf,
}

#[derive(Serialize)]
struct Manifest {
    command: String,
    status: String,
    config: Effective,
    outputs: Vec<String>,
    train_counts: Vec<usize>,
    val_counts: Vec<usize>,
}

#[derive(Serialize)]
struct Summary {
    best: SweepRow,
    rows: usize,
}

pub fn run(args: SweepArgs, verbose: bool) -> Result<()> {
    let file: FileConfig = common::load_config(&args.config)?;
    let truth_name = common::pick(args.truth, file.truth, "paper3d".to_string());
    let truth = common::resolve_truth(&truth_name)?;
    let cfg = Effective {
        horizon: common::pick(args.horizon, file.horizon, 1000.0),
        seed: common::pick(args.seed, file.seed, 0),
        burn_in: common::pick(args.burn_in, file.burn_in, 10.0 * truth.support()),
        omegas: common::parse_f64_list(&common::pick(
            args.omegas,
            file.omegas,
            "1,10,100".to_string(),
        ))?,
        ms: common::parse_usize_list(&common::pick(args.ms, file.ms, "100,1000".to_string()))?,
        gammas: common::parse_f64_list(&common::pick(
            args.gammas,
            file.gammas,
            "1,10,100".to_string(),
        ))?,
        etas: common::parse_f64_list(&common::pick(
            args.etas,
            file.etas,
            "0.1,1,10,100".to_string(),
        ))?,
        criterion: common::pick(args.criterion, file.criterion, "mle".to_string()),
        support: common::pick(args.support, file.support, truth.support()),
        max_iters: common::pick(args.max_iters, file.max_iters, 500),
        grid_points: common::pick(args.grid_points, file.grid_points, 2001),
        out: common::pick(args.out, file.out, PathBuf::from(".")),
        truth: truth_name,
    };

    std::fs::create_dir_all(&cfg.out)?;
    let train = simulate_thinning(&truth, cfg.horizon, cfg.burn_in, cfg.seed)?;
    let val = simulate_thinning(&truth, cfg.horizon, cfg.burn_in, cfg.seed + 1)?;

    let mut manifest = Manifest {
        command: "sweep".to_string(),
        status: "running".to_string(),
        config: cfg.clone(),
        outputs: vec!["sweep.csv".to_string()],
        train_counts: train.counts(),
        val_counts: val.counts(),
    };
    common::write_json(&cfg.out.join("manifest.json"), &manifest)?;

    let base = GridSpec {
        method: Method::Rkhs,
        gammas: cfg.gammas.clone(),
        etas: cfg.etas.clone(),
        omega: cfg.omegas[0],
        criterion: common::parse_criterion(&cfg.criterion)?,
        m_rule: hawkes_rkhs::evaluate::MRule::Fixed(cfg.ms[0]),
        support: cfg.support,
        basis_size: 10,
        optim: OptimOptions {
            max_iters: cfg.max_iters,
            ..OptimOptions::default()
        },
    };
    let rows = approximation_sweep(
        &train,
        &val,
        &truth,
        &cfg.omegas,
        &cfg.ms,
        &base,
        cfg.grid_points,
    )?;
    if verbose {
        for r in &rows {
            eprintln!("omega={} m={}: best L1 {}", r.omega, r.m, r.l1_sum);
        }
    }
    common::write_text(&cfg.out.join("sweep.csv"), &sweep_table_csv(&rows))?;

    let best = rows
        .iter()
        .min_by(|a, b| a.l1_sum.partial_cmp(&b.l1_sum).unwrap())
        .cloned()
        .expect("sweep produced no rows");
    common::write_json(
        &cfg.out.join("summary.json"),
        &Summary { best, rows: rows.len() },
    )?;

    manifest.status = "complete".to_string();
    manifest.outputs.push("summary.json".to_string());
    common::write_json(&cfg.out.join("manifest.json"), &manifest)?;
    Ok(())
}
