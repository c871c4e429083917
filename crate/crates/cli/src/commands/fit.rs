//! `fit`: estimate a model from an events file, writing `model.json` and
//! `report.json`.

use std::path::PathBuf;

use clap::Args;
use hawkes_rkhs::baselines::{fit_basis, BasisKind};
use hawkes_rkhs::evaluate::Method;
use hawkes_rkhs::fit::{fit_rkhs, FitOptions};
use hawkes_rkhs::model::{save_model, LinkSpec, Model, SavedModel};
use hawkes_rkhs::optimizer::{OptimDiagnostics, OptimOptions};
use hawkes_rkhs::{default_grid_size, KernelConfig, Result};
use serde::{Deserialize, Serialize};

use crate::common;

#[derive(Args, Debug)]
pub struct FitArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,

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

    /// Method: rkhs, exponential, gaussian_basis or bernstein [default: rkhs]
    #[arg(long)]
    method: Option<String>,

    /// Kernel width / basis rate gamma [default: 10]
    #[arg(long)]
    gamma: Option<f64>,

    /// Ridge weight eta [default: 1]
    #[arg(long)]
    eta: Option<f64>,

    /// Softplus sharpness omega [default: 100]
    #[arg(long)]
    omega: Option<f64>,

    /// Criterion: mle or ls [default: mle]
    #[arg(long)]
    criterion: Option<String>,

    /// Interaction support bound A [default: 5]
    #[arg(long)]
    support: Option<f64>,

    /// Riemann grid size M [default: max(1000, 2 max_j N_j)]
    #[arg(long)]
    m: Option<usize>,

    /// Basis size for the feature-map baselines [default: 10]
    #[arg(long)]
    basis_size: Option<usize>,

    /// Optimizer iteration cap [default: 500]
    #[arg(long)]
    max_iters: Option<usize>,

    /// Projected-gradient tolerance [default: 1e-6]
    #[arg(long)]
    grad_tol: Option<f64>,

    /// Relative decrease tolerance [default: 1e-10]
    #[arg(long)]
    f_tol: Option<f64>,

    /// Quasi-Newton memory length [default: 10]
    #[arg(long)]
    history: Option<usize>,

    /// Output directory [default: .]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    events: Option<PathBuf>,
    format: Option<String>,
    horizon: Option<f64>,
    dims: Option<usize>,
    header: Option<bool>,
    method: Option<String>,
    gamma: Option<f64>,
    eta: Option<f64>,
    omega: Option<f64>,
    criterion: Option<String>,
    support: Option<f64>,
    m: Option<usize>,
    basis_size: Option<usize>,
    max_iters: Option<usize>,
    grad_tol: Option<f64>,
    f_tol: Option<f64>,
    history: Option<usize>,
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Effective {
    events: PathBuf,
    format: String,
    horizon: Option<f64>,
    dims: Option<usize>,
    header: bool,
    method: Method,
    gamma: f64,
    eta: f64,
    omega: f64,
    criterion: String,
    support: f64,
    m: usize,
    basis_size: usize,
    max_iters: usize,
    grad_tol: f64,
    f_tol: f64,
    history: usize,
    out: PathBuf,
}

#[derive(Serialize)]
struct Report {
    command: String,
    config: Effective,
    counts: Vec<usize>,
    objective: f64,
    diagnostics: OptimDiagnostics,
    model_file: String,
}

pub fn run(args: FitArgs, verbose: bool) -> Result<()> {
    let file: FileConfig = common::load_config(&args.config)?;
    let events_path = common::pick_opt(args.events, file.events)
        .ok_or_else(|| hawkes_rkhs::Error::config("--events is required".to_string()))?;
    let format = common::pick(args.format, file.format, "csv".to_string());
    let horizon = common::pick_opt(args.horizon, file.horizon);
    let dims = common::pick_opt(args.dims, file.dims);
    let header = args.header || file.header.unwrap_or(false);
    let method: Method = common::pick(args.method, file.method, "rkhs".to_string()).parse()?;

    let events = common::read_events(&events_path, &format, horizon, dims, header)?;
    let m = common::pick(args.m, file.m, default_grid_size(&events));
    let cfg = Effective {
        events: events_path,
        format,
        horizon,
        dims,
        header,
        method,
        gamma: common::pick(args.gamma, file.gamma, 10.0),
        eta: common::pick(args.eta, file.eta, 1.0),
        omega: common::pick(args.omega, file.omega, 100.0),
        criterion: common::pick(args.criterion, file.criterion, "mle".to_string()),
        support: common::pick(args.support, file.support, 5.0),
        m,
        basis_size: common::pick(args.basis_size, file.basis_size, 10),
        max_iters: common::pick(args.max_iters, file.max_iters, 500),
        grad_tol: common::pick(args.grad_tol, file.grad_tol, 1e-6),
        f_tol: common::pick(args.f_tol, file.f_tol, 1e-10),
        history: common::pick(args.history, file.history, 10),
        out: common::pick(args.out, file.out, PathBuf::from(".")),
    };

    let link = LinkSpec::new(cfg.omega, common::parse_criterion(&cfg.criterion)?)?;
    let optim = OptimOptions {
        max_iters: cfg.max_iters,
        grad_tol: cfg.grad_tol,
        f_tol: cfg.f_tol,
        history: cfg.history,
        lower_bounds: Vec::new(),
    };

    let (model, objective, diagnostics) = match cfg.method {
        Method::Rkhs => {
            let kernel = KernelConfig::new(cfg.gamma, cfg.support)?;
            let out = fit_rkhs(
                &events,
                &kernel,
                cfg.eta,
                &link,
                cfg.m,
                &FitOptions { optim, jittered: true },
            )?;
            (Model::Rkhs(out.params), out.objective, out.diagnostics)
        }
        method => {
            let kind = match method {
                Method::Exponential => BasisKind::Exponential,
                Method::GaussianBasis => BasisKind::GaussianBasis,
                Method::Bernstein => BasisKind::Bernstein,
                Method::Rkhs => unreachable!(),
            };
            let out = fit_basis(
                &events,
                kind,
                cfg.basis_size,
                cfg.gamma,
                cfg.support,
                cfg.eta,
                &link,
                cfg.m,
                &optim,
            )?;
            (Model::Basis(out.model), out.objective, out.diagnostics)
        }
    };

    if verbose {
        eprintln!(
            "fit: objective {objective:.6}, {} iterations, {:?}",
            diagnostics.iterations, diagnostics.termination
        );
    }

    std::fs::create_dir_all(&cfg.out)?;
    let model_path = cfg.out.join("model.json");
    save_model(&SavedModel { model, link: Some(link) }, &model_path)?;
    let report = Report {
        command: "fit".to_string(),
        counts: events.counts(),
        objective,
        diagnostics,
        model_file: "model.json".to_string(),
        config: cfg,
    };
    common::write_json(&report.config.out.join("report.json"), &report)?;
    Ok(())
}
