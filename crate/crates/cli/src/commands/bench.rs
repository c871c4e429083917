//! `bench`: compare estimation methods over growing horizons with seed
//! replications. Rows are appended to `cells.csv` after each completed
//! replication, so an interrupted run leaves a manifest with
//! `status: "running"` and the finished replications on disk.

use std::path::PathBuf;

use clap::Args;
use hawkes_rkhs::evaluate::{
    horizon_cells_csv, horizon_study, horizon_summary_csv, summarize_cells, HorizonCell, Method,
    StudyConfig, SummaryRow,
};
use hawkes_rkhs::optimizer::OptimOptions;
use hawkes_rkhs::{IntensityModel, Result};
use serde::{Deserialize, Serialize};

use crate::common;

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Ground-truth model [default: paper3d]
    #[arg(long)]
    truth: Option<String>,

    /// Horizons, comma separated [default: 250,500,1000,2000]
    #[arg(long)]
    horizons: Option<String>,

    /// Root seed; replication r uses seed + 100 r [default: 0]
    #[arg(long)]
    seed: Option<u64>,

    /// Number of replications [default: 10]
    #[arg(long)]
    replications: Option<usize>,

    /// Methods, comma separated
    /// [default: rkhs,exponential,gaussian_basis,bernstein]
    #[arg(long)]
    methods: Option<String>,

    /// Kernel width grid [default: 1,10,100]
    #[arg(long)]
    gammas: Option<String>,

    /// Ridge weight grid [default: 0.1,1,10,100]
    #[arg(long)]
    etas: Option<String>,

    /// Softplus sharpness [default: 100]
    #[arg(long)]
    omega: Option<f64>,

    /// Criterion: mle or ls [default: mle]
    #[arg(long)]
    criterion: Option<String>,

    /// Burn-in length [default: 10 support lengths]
    #[arg(long)]
    burn_in: Option<f64>,

    /// Basis size for the feature-map baselines [default: 10]
    #[arg(long)]
    basis_size: Option<usize>,

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
    horizons: Option<String>,
    seed: Option<u64>,
    replications: Option<usize>,
    methods: Option<String>,
    gammas: Option<String>,
    etas: Option<String>,
    omega: Option<f64>,
    criterion: Option<String>,
    burn_in: Option<f64>,
    basis_size: Option<usize>,
    max_iters: Option<usize>,
    grid_points: Option<usize>,
    out: Option<PathBuf>,
}

#[derive(Serialize, Clone)]
struct Effective {
    truth: String,
    horizons: Vec<f64>,
    seed: u64,
    replications: usize,
    replication_seeds: Vec<u64>,
    methods: Vec<Method>,
    gammas: Vec<f64>,
    etas: Vec<f64>,
    omega: f64,
    criterion: String,
    burn_in: f64,
    basis_size: usize,
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
    completed_replications: Vec<u64>,
}

#[derive(Serialize)]
struct Summary {
    /// Method with the best seed-mean test log-likelihood at the largest
    /// horizon.
    selected_method: Method,
    largest_horizon: f64,
    summary: Vec<SummaryRow>,
}

pub fn run(args: BenchArgs, verbose: bool) -> Result<()> {
    let file: FileConfig = common::load_config(&args.config)?;
    let truth_name = common::pick(args.truth, file.truth, "paper3d".to_string());
    let truth = common::resolve_truth(&truth_name)?;
    let methods: Vec<Method> = common::pick(
        args.methods,
        file.methods,
        "rkhs,exponential,gaussian_basis,bernstein".to_string(),
    )
    .split(',')
    .map(|s| s.trim().parse())
    .collect::<Result<_>>()?;
    let seed = common::pick(args.seed, file.seed, 0);
    let replications = common::pick(args.replications, file.replications, 10);
    let cfg = Effective {
        horizons: common::parse_f64_list(&common::pick(
            args.horizons,
            file.horizons,
            "250,500,1000,2000".to_string(),
        ))?,
        seed,
        replications,
        replication_seeds: (0..replications).map(|r| seed + 100 * r as u64).collect(),
        methods,
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
        omega: common::pick(args.omega, file.omega, 100.0),
        criterion: common::pick(args.criterion, file.criterion, "mle".to_string()),
        burn_in: common::pick(args.burn_in, file.burn_in, 10.0 * truth.support()),
        basis_size: common::pick(args.basis_size, file.basis_size, 10),
        max_iters: common::pick(args.max_iters, file.max_iters, 500),
        grid_points: common::pick(args.grid_points, file.grid_points, 2001),
        out: common::pick(args.out, file.out, PathBuf::from(".")),
        truth: truth_name,
    };

    let study = StudyConfig {
        gammas: cfg.gammas.clone(),
        etas: cfg.etas.clone(),
        omega: cfg.omega,
        criterion: common::parse_criterion(&cfg.criterion)?,
        basis_size: cfg.basis_size,
        burn_in: Some(cfg.burn_in),
        l1_grid_points: cfg.grid_points,
        optim: OptimOptions {
            max_iters: cfg.max_iters,
            ..OptimOptions::default()
        },
    };

    std::fs::create_dir_all(&cfg.out)?;
    let mut manifest = Manifest {
        command: "bench".to_string(),
        status: "running".to_string(),
        config: cfg.clone(),
        outputs: vec!["cells.csv".to_string()],
        completed_replications: Vec::new(),
    };
    common::write_json(&cfg.out.join("manifest.json"), &manifest)?;

    let mut cells: Vec<HorizonCell> = Vec::new();
    for &rep_seed in &cfg.replication_seeds {
        let part = horizon_study(&truth, &cfg.horizons, &cfg.methods, &[rep_seed], &study)?;
        if verbose {
            for c in &part.cells {
                eprintln!(
                    "seed {} T={} {}: l1 {:.3}, test loglik {:.2}",
                    c.seed, c.horizon, c.method, c.l1_sum, c.test_loglik
                );
            }
        }
        cells.extend(part.cells);
        // completed rows land on disk after every replication
        common::write_text(&cfg.out.join("cells.csv"), &horizon_cells_csv(&cells))?;
        manifest.completed_replications.push(rep_seed);
        common::write_json(&cfg.out.join("manifest.json"), &manifest)?;
    }

    let summary = summarize_cells(&cells, &cfg.methods, &cfg.horizons);
    common::write_text(&cfg.out.join("bench.csv"), &horizon_summary_csv(&summary))?;

    let largest = cfg.horizons.iter().cloned().fold(0.0, f64::max);
    let selected = summary
        .iter()
        .filter(|r| r.horizon == largest)
        .max_by(|a, b| a.test_loglik_mean.partial_cmp(&b.test_loglik_mean).unwrap())
        .map(|r| r.method)
        .unwrap_or(Method::Rkhs);
    common::write_json(
        &cfg.out.join("summary.json"),
        &Summary {
            selected_method: selected,
            largest_horizon: largest,
            summary,
        },
    )?;

    manifest.status = "complete".to_string();
    manifest.outputs.extend(["bench.csv".to_string(), "summary.json".to_string()]);
    common::write_json(&cfg.out.join("manifest.json"), &manifest)?;
    Ok(())
}
