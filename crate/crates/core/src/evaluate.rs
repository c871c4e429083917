//! Metrics and experiment drivers: L1 kernel error, validation grid search,
//! approximation sweeps over the smoothing parameters, and the horizon study
//! comparing estimators over growing observation windows.
//!
//! All drivers are deterministic given their seeds: cells are computed
//! independently (in parallel where available) and assembled in a canonical
//! order, so repeated runs produce identical tables.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{fit_basis, BasisKind};
use crate::error::{Error, Result};
use crate::events::{restrict_window, EventData};
use crate::fit::{fit_rkhs_with_matrices, FitOptions};
use crate::kernel::KernelConfig;
use crate::model::{Criterion, IntensityModel, LinkSpec, Model};
use crate::objective::{default_grid_size, exact_neg_log_likelihood};
use crate::optimizer::{OptimDiagnostics, OptimOptions};
use crate::precompute::build_matrices;
use crate::simulate::{simulate_thinning, GroundTruthModel};

/// Estimation method of one experiment cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rkhs,
    Exponential,
    GaussianBasis,
    Bernstein,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Rkhs => write!(f, "rkhs"),
            Method::Exponential => write!(f, "exponential"),
            Method::GaussianBasis => write!(f, "gaussian_basis"),
            Method::Bernstein => write!(f, "bernstein"),
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rkhs" => Ok(Method::Rkhs),
            "exponential" => Ok(Method::Exponential),
            "gaussian" | "gaussian_basis" => Ok(Method::GaussianBasis),
            "bernstein" => Ok(Method::Bernstein),
            other => Err(Error::config(format!(
                "unknown method '{other}' (expected rkhs, exponential, gaussian_basis or bernstein)"
            ))),
        }
    }
}

/// Riemann grid-size rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MRule {
    Fixed(usize),
    /// `max(1000, 2 max_j N_j)` from the training events.
    ScaledByEvents,
}

impl MRule {
    pub fn resolve(&self, events: &EventData) -> usize {
        match self {
            MRule::Fixed(m) => *m,
            MRule::ScaledByEvents => default_grid_size(events),
        }
    }
}

/// Hyperparameter grid and shared fitting configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub method: Method,
    pub gammas: Vec<f64>,
    pub etas: Vec<f64>,
    pub omega: f64,
    pub criterion: Criterion,
    pub m_rule: MRule,
    /// Interaction support bound `A`.
    pub support: f64,
    /// Basis size for the feature-map baselines.
    pub basis_size: usize,
    #[serde(skip)]
    pub optim: OptimOptions,
}

impl GridSpec {
    /// Benchmark defaults: `gamma` in {1, 10, 100}, `eta` in
    /// {0.1, 1, 10, 100}, `omega = 100`, likelihood criterion,
    /// `M = max(1000, 2 max_j N_j)`, support 5, basis size 10.
    pub fn defaults(method: Method) -> Self {
        let (gammas, etas) = match method {
            // the exponential model fits its own decays and carries no
            // smoothing penalty; a single nominal cell with a tiny ridge
            Method::Exponential => (vec![1.0], vec![1e-6]),
            _ => (vec![1.0, 10.0, 100.0], vec![0.1, 1.0, 10.0, 100.0]),
        };
        GridSpec {
            method,
            gammas,
            etas,
            omega: 100.0,
            criterion: Criterion::Mle,
            m_rule: MRule::ScaledByEvents,
            support: 5.0,
            basis_size: 10,
            optim: OptimOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gammas.is_empty() || self.etas.is_empty() {
            return Err(Error::config("gamma and eta grids must be nonempty"));
        }
        if self.gammas.iter().chain(&self.etas).any(|&v| !(v > 0.0)) {
            return Err(Error::config("grid values must be positive"));
        }
        if !(self.omega > 0.0) || !(self.support > 0.0) || self.basis_size == 0 {
            return Err(Error::config("omega, support and basis size must be positive"));
        }
        Ok(())
    }

    fn link(&self) -> LinkSpec {
        LinkSpec {
            omega: self.omega,
            criterion: self.criterion,
        }
    }
}

/// Per-pair L1 errors and their sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1Summary {
    pub per_pair: Vec<Vec<f64>>,
    pub sum: f64,
}

/// Trapezoid approximation of `integral_0^A |g_true - g_fit|` on a uniform
/// grid of `grid_points` nodes (both endpoints included).
pub fn l1_error<T: IntensityModel + ?Sized, F: IntensityModel + ?Sized>(
    truth: &T,
    fitted: &F,
    j: usize,
    l: usize,
    grid_points: usize,
) -> f64 {
    let a = truth.support();
    let n = grid_points.max(2);
    let h = a / (n - 1) as f64;
    let mut sum = 0.0;
    for i in 0..n {
        let t = i as f64 * h;
        let gap = (truth.interaction(j, l, t) - fitted.interaction(j, l, t)).abs();
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        sum += w * gap;
    }
    sum * h
}

/// L1 errors over all interaction pairs.
pub fn l1_summary<T: IntensityModel + ?Sized, F: IntensityModel + ?Sized>(
    truth: &T,
    fitted: &F,
    grid_points: usize,
) -> L1Summary {
    let d = truth.dims();
    let per_pair: Vec<Vec<f64>> = (0..d)
        .map(|j| (0..d).map(|l| l1_error(truth, fitted, j, l, grid_points)).collect())
        .collect();
    let sum = per_pair.iter().flatten().sum();
    L1Summary { per_pair, sum }
}

/// One hyperparameter cell of a search table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub gamma: f64,
    pub eta: f64,
    /// Validation log-likelihood (higher is better); `None` when the cell failed.
    pub val_loglik: Option<f64>,
    pub objective: Option<f64>,
    pub error: Option<String>,
}

/// A fitted model with its search metadata and scores.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub method: Method,
    pub gamma: f64,
    pub eta: f64,
    pub model: Model,
    pub objective: f64,
    /// Validation log-likelihood, higher is better.
    pub val_loglik: f64,
    pub test_loglik: Option<f64>,
    pub l1: Option<L1Summary>,
    /// Wall-clock seconds of the winning fit; excluded from serialized
    /// reports so outputs stay byte-identical across runs.
    #[serde(skip)]
    pub timing_secs: f64,
    pub diagnostics: OptimDiagnostics,
}

struct CellFit {
    gamma: f64,
    eta: f64,
    outcome: std::result::Result<(Model, f64, OptimDiagnostics, f64), String>,
}

/// Fit every `(gamma, eta)` cell of the spec on the training events.
/// Matrices/designs are shared across the ridge weights of one `gamma`.
fn fit_cells(train: &EventData, spec: &GridSpec, m: usize) -> Result<Vec<CellFit>> {
    let link = spec.link();
    let groups: Vec<Vec<CellFit>> = spec
        .gammas
        .par_iter()
        .map(|&gamma| -> Result<Vec<CellFit>> {
            let mut out = Vec::with_capacity(spec.etas.len());
            match spec.method {
                Method::Rkhs => {
                    let kernel = KernelConfig::new(gamma, spec.support)?;
                    let mats = build_matrices(train, &kernel, m)?;
                    for &eta in &spec.etas {
                        let start = std::time::Instant::now();
                        let fit = fit_rkhs_with_matrices(
                            train,
                            &mats,
                            eta,
                            &link,
                            &FitOptions { optim: spec.optim.clone(), jittered: true },
                            None,
                        );
                        out.push(CellFit {
                            gamma,
                            eta,
                            outcome: collapse(fit.map(|f| {
                                (Model::Rkhs(f.params), f.objective, f.diagnostics)
                            }))
                            .map(|(a, b, c)| (a, b, c, start.elapsed().as_secs_f64())),
                        });
                    }
                }
                method => {
                    let kind = match method {
                        Method::Exponential => BasisKind::Exponential,
                        Method::GaussianBasis => BasisKind::GaussianBasis,
                        Method::Bernstein => BasisKind::Bernstein,
                        Method::Rkhs => unreachable!(),
                    };
                    for &eta in &spec.etas {
                        let start = std::time::Instant::now();
                        let fit = fit_basis(
                            train,
                            kind,
                            spec.basis_size,
                            gamma,
                            spec.support,
                            eta,
                            &link,
                            m,
                            &spec.optim,
                        );
                        out.push(CellFit {
                            gamma,
                            eta,
                            outcome: collapse(fit.map(|f| {
                                (Model::Basis(f.model), f.objective, f.diagnostics)
                            }))
                            .map(|(a, b, c)| (a, b, c, start.elapsed().as_secs_f64())),
                        });
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(groups.into_iter().flatten().collect())
}

/// Numerical failures become recordable strings; anything else propagates.
fn collapse<T>(r: Result<T>) -> std::result::Result<T, String> {
    match r {
        Ok(v) => Ok(v),
        Err(e @ Error::Numerical { .. }) => Err(e.to_string()),
        Err(e) => Err(format!("unrecoverable: {e}")),
    }
}

/// Fit every cell of the grid, score each on the validation events, and
/// return the best cell (ties broken toward smaller `eta`, then smaller
/// `gamma`) together with the full table.
pub fn grid_search(
    train: &EventData,
    val: &EventData,
    spec: &GridSpec,
) -> Result<(FitReport, Vec<GridCell>)> {
    spec.validate()?;
    if train.dims() != val.dims() {
        return Err(Error::validation(format!(
            "training events have {} dimensions, validation {}",
            train.dims(),
            val.dims()
        )));
    }
    let m = spec.m_rule.resolve(train);
    let fits = fit_cells(train, spec, m)?;
    let m_val = default_grid_size(val);

    let mut table = Vec::with_capacity(fits.len());
    let mut best: Option<FitReport> = None;
    for cell in fits {
        match cell.outcome {
            Err(msg) => table.push(GridCell {
                gamma: cell.gamma,
                eta: cell.eta,
                val_loglik: None,
                objective: None,
                error: Some(msg),
            }),
            Ok((model, objective, diagnostics, secs)) => {
                let (nll, _) = exact_neg_log_likelihood(&model, val, m_val)?;
                let val_loglik = -nll;
                table.push(GridCell {
                    gamma: cell.gamma,
                    eta: cell.eta,
                    val_loglik: Some(val_loglik),
                    objective: Some(objective),
                    error: None,
                });
                let better = match &best {
                    None => true,
                    Some(b) => {
                        val_loglik > b.val_loglik
                            || (val_loglik == b.val_loglik
                                && (cell.eta < b.eta
                                    || (cell.eta == b.eta && cell.gamma < b.gamma)))
                    }
                };
                if better {
                    best = Some(FitReport {
                        method: spec.method,
                        gamma: cell.gamma,
                        eta: cell.eta,
                        model,
                        objective,
                        val_loglik,
                        test_loglik: None,
                        l1: None,
                        timing_secs: secs,
                        diagnostics,
                    });
                }
            }
        }
    }
    let best = best.ok_or_else(|| {
        Error::Search("every cell of the hyperparameter grid failed".into())
    })?;
    Ok((best, table))
}

/// One row of the approximation sweep: the best (smallest) summed L1 error
/// over the `(gamma, eta)` grid at fixed smoothing parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub omega: f64,
    pub m: usize,
    pub l1_sum: f64,
    pub gamma: f64,
    pub eta: f64,
    pub failed_cells: usize,
}

/// Full factorial sweep over the smoothing parameters `omega` and `M`,
/// reporting for each pair the smallest summed L1 error over the
/// hyperparameter grid.
pub fn approximation_sweep(
    train: &EventData,
    _val: &EventData,
    truth: &GroundTruthModel,
    omegas: &[f64],
    ms: &[usize],
    base: &GridSpec,
    l1_grid_points: usize,
) -> Result<Vec<SweepRow>> {
    base.validate()?;
    let mut rows = Vec::with_capacity(omegas.len() * ms.len());
    for &omega in omegas {
        for &m in ms {
            let spec = GridSpec {
                omega,
                m_rule: MRule::Fixed(m),
                ..base.clone()
            };
            let fits = fit_cells(train, &spec, m)?;
            let mut best: Option<(f64, f64, f64)> = None; // (l1, gamma, eta)
            let mut failed = 0usize;
            for cell in fits {
                match cell.outcome {
                    Err(_) => failed += 1,
                    Ok((model, _, _, _)) => {
                        let l1 = l1_summary(truth, &model, l1_grid_points).sum;
                        let better = match best {
                            None => true,
                            Some((b, bg, be)) => {
                                l1 < b
                                    || (l1 == b
                                        && (cell.eta < be || (cell.eta == be && cell.gamma < bg)))
                            }
                        };
                        if better {
                            best = Some((l1, cell.gamma, cell.eta));
                        }
                    }
                }
            }
            let (l1_sum, gamma, eta) = best.ok_or_else(|| {
                Error::Search(format!("all cells failed at omega={omega}, m={m}"))
            })?;
            rows.push(SweepRow { omega, m, l1_sum, gamma, eta, failed_cells: failed });
        }
    }
    Ok(rows)
}

/// Shared configuration of the simulation-based studies.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub gammas: Vec<f64>,
    pub etas: Vec<f64>,
    pub omega: f64,
    pub criterion: Criterion,
    pub basis_size: usize,
    /// Burn-in length; `None` means ten support lengths.
    pub burn_in: Option<f64>,
    pub l1_grid_points: usize,
    pub optim: OptimOptions,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            gammas: vec![1.0, 10.0, 100.0],
            etas: vec![0.1, 1.0, 10.0, 100.0],
            omega: 100.0,
            criterion: Criterion::Mle,
            basis_size: 10,
            burn_in: None,
            l1_grid_points: 2001,
            optim: OptimOptions::default(),
        }
    }
}

impl StudyConfig {
    fn spec(&self, method: Method, support: f64) -> GridSpec {
        let mut spec = GridSpec::defaults(method);
        if method != Method::Exponential {
            spec.gammas = self.gammas.clone();
            spec.etas = self.etas.clone();
        }
        spec.omega = self.omega;
        spec.criterion = self.criterion;
        spec.support = support;
        spec.basis_size = self.basis_size;
        spec.optim = self.optim.clone();
        spec
    }
}

/// One completed `(method, horizon, seed)` cell of the horizon study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonCell {
    pub method: Method,
    pub horizon: f64,
    pub seed: u64,
    pub gamma: f64,
    pub eta: f64,
    pub l1_sum: f64,
    pub val_loglik: f64,
    pub test_loglik: f64,
    pub flagged_events: usize,
}

/// Seed-aggregated statistics (mean and normal-approximation 95% half-width).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub horizon: f64,
    pub n_seeds: usize,
    pub l1_mean: f64,
    pub l1_ci_half: f64,
    pub test_loglik_mean: f64,
    pub test_loglik_ci_half: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HorizonStudy {
    pub cells: Vec<HorizonCell>,
    pub summary: Vec<SummaryRow>,
}

fn mean_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * (var / n as f64).sqrt())
}

/// Per `(method, horizon, seed)`: simulate a train/validation/test triple
/// (seeds `s`, `s + 1`, `s + 2`), grid-search each method, and record the
/// summed L1 error against the truth plus the test log-likelihood. Growing
/// horizons reuse the same trajectories through window restriction.
pub fn horizon_study(
    truth: &GroundTruthModel,
    horizons: &[f64],
    methods: &[Method],
    seeds: &[u64],
    cfg: &StudyConfig,
) -> Result<HorizonStudy> {
    if horizons.is_empty() || methods.is_empty() || seeds.is_empty() {
        return Err(Error::config("horizons, methods and seeds must be nonempty"));
    }
    let t_max = horizons.iter().cloned().fold(0.0, f64::max);
    let burn_in = cfg.burn_in.unwrap_or(10.0 * truth.support());
    let support = truth.support();

    let per_seed: Vec<Vec<HorizonCell>> = seeds
        .par_iter()
        .map(|&seed| -> Result<Vec<HorizonCell>> {
            let train_full = simulate_thinning(truth, t_max, burn_in, seed)?;
            let val_full = simulate_thinning(truth, t_max, burn_in, seed + 1)?;
            let test_full = simulate_thinning(truth, t_max, burn_in, seed + 2)?;
            let mut cells = Vec::new();
            for &horizon in horizons {
                let train = restrict_window(&train_full, 0.0, horizon)?;
                let val = restrict_window(&val_full, 0.0, horizon)?;
                let test = restrict_window(&test_full, 0.0, horizon)?;
                for &method in methods {
                    let spec = cfg.spec(method, support);
                    let (best, _) = grid_search(&train, &val, &spec)?;
                    let (nll, flagged) =
                        exact_neg_log_likelihood(&best.model, &test, default_grid_size(&test))?;
                    let l1 = l1_summary(truth, &best.model, cfg.l1_grid_points);
                    cells.push(HorizonCell {
                        method,
                        horizon,
                        seed,
                        gamma: best.gamma,
                        eta: best.eta,
                        l1_sum: l1.sum,
                        val_loglik: best.val_loglik,
                        test_loglik: -nll,
                        flagged_events: flagged,
                    });
                }
            }
            Ok(cells)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut cells: Vec<HorizonCell> = per_seed.into_iter().flatten().collect();
    let method_rank = |m: Method| methods.iter().position(|&x| x == m).unwrap_or(usize::MAX);
    cells.sort_by(|a, b| {
        method_rank(a.method)
            .cmp(&method_rank(b.method))
            .then(a.horizon.partial_cmp(&b.horizon).unwrap())
            .then(a.seed.cmp(&b.seed))
    });

    let summary = summarize_cells(&cells, methods, horizons);
    Ok(HorizonStudy { cells, summary })
}

/// Seed-aggregate completed cells into per-`(method, horizon)` statistics.
pub fn summarize_cells(cells: &[HorizonCell], methods: &[Method], horizons: &[f64]) -> Vec<SummaryRow> {
    let mut summary = Vec::new();
    for &method in methods {
        for &horizon in horizons {
            let select: Vec<&HorizonCell> = cells
                .iter()
                .filter(|c| c.method == method && c.horizon == horizon)
                .collect();
            if select.is_empty() {
                continue;
            }
            let l1: Vec<f64> = select.iter().map(|c| c.l1_sum).collect();
            let ll: Vec<f64> = select.iter().map(|c| c.test_loglik).collect();
            let (l1_mean, l1_ci_half) = mean_ci(&l1);
            let (test_loglik_mean, test_loglik_ci_half) = mean_ci(&ll);
            summary.push(SummaryRow {
                method,
                horizon,
                n_seeds: select.len(),
                l1_mean,
                l1_ci_half,
                test_loglik_mean,
                test_loglik_ci_half,
            });
        }
    }
    summary
}

// -- CSV tables ----------------------------------------------------------
//
// Columns are documented next to each writer; floats use the shortest
// round-trip representation so read-write cycles are lossless.

fn opt_f64(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `gamma,eta,val_loglik,objective,status`
pub fn grid_table_csv(cells: &[GridCell]) -> String {
    let mut out = String::from("gamma,eta,val_loglik,objective,status\n");
    for c in cells {
        let status = match &c.error {
            None => "ok".to_string(),
            Some(e) => format!("error: {}", e.replace([',', '\n'], ";")),
        };
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            c.gamma,
            c.eta,
            opt_f64(c.val_loglik),
            opt_f64(c.objective),
            status
        ));
    }
    out
}

/// `omega,m,l1_sum,gamma,eta,failed_cells`
pub fn sweep_table_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("omega,m,l1_sum,gamma,eta,failed_cells\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.omega, r.m, r.l1_sum, r.gamma, r.eta, r.failed_cells
        ));
    }
    out
}

/// Parse a sweep table written by [`sweep_table_csv`].
pub fn sweep_table_from_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 6 {
            return Err(Error::Parse {
                line: i + 1,
                message: "expected 6 columns".into(),
            });
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("invalid number '{s}'"),
            })
        };
        rows.push(SweepRow {
            omega: parse_f(parts[0])?,
            m: parts[1].parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("invalid integer '{}'", parts[1]),
            })?,
            l1_sum: parse_f(parts[2])?,
            gamma: parse_f(parts[3])?,
            eta: parse_f(parts[4])?,
            failed_cells: parts[5].parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("invalid integer '{}'", parts[5]),
            })?,
        });
    }
    Ok(rows)
}

/// `method,horizon,seed,gamma,eta,l1_sum,val_loglik,test_loglik,flagged_events`
pub fn horizon_cells_csv(cells: &[HorizonCell]) -> String {
    let mut out = String::from("method,horizon,seed,gamma,eta,l1_sum,val_loglik,test_loglik,flagged_events\n");
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            c.method, c.horizon, c.seed, c.gamma, c.eta, c.l1_sum, c.val_loglik, c.test_loglik, c.flagged_events
        ));
    }
    out
}

/// `method,horizon,n_seeds,l1_mean,l1_ci_half,test_loglik_mean,test_loglik_ci_half`
pub fn horizon_summary_csv(rows: &[SummaryRow]) -> String {
    let mut out =
        String::from("method,horizon,n_seeds,l1_mean,l1_ci_half,test_loglik_mean,test_loglik_ci_half\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.method, r.horizon, r.n_seeds, r.l1_mean, r.l1_ci_half, r.test_loglik_mean, r.test_loglik_ci_half
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{builtin_kernels, Curve, GroundTruthModel};

    fn constant_model(d: usize, value: f64, support: f64) -> GroundTruthModel {
        GroundTruthModel::new(
            vec![0.1; d],
            vec![vec![Curve::Constant { value }; d]; d],
            support,
        )
        .unwrap()
    }

    #[test]
    fn l1_zero_on_identical_models() {
        let truth = builtin_kernels("paper3d").unwrap();
        for j in 0..3 {
            for l in 0..3 {
                assert_eq!(l1_error(&truth, &truth, j, l, 501), 0.0);
            }
        }
    }

    #[test]
    fn l1_constant_gap_is_height_times_support() {
        let a = constant_model(1, 0.0, 4.0);
        let b = constant_model(1, -0.3, 4.0);
        let got = l1_error(&a, &b, 0, 0, 2001);
        assert!((got - 0.3 * 4.0).abs() < 1e-10);
    }

    #[test]
    fn l1_grid_refinement_is_stable() {
        let truth = builtin_kernels("paper3d").unwrap();
        let zero = constant_model(3, 0.0, 5.0);
        for j in 0..3 {
            for l in 0..3 {
                let coarse = l1_error(&truth, &zero, j, l, 2001);
                let fine = l1_error(&truth, &zero, j, l, 4001);
                assert!(
                    (coarse - fine).abs() <= 1e-4 * fine.abs().max(1e-6),
                    "({j},{l}): {coarse} vs {fine}"
                );
            }
        }
    }

    #[test]
    fn l1_is_a_pseudometric_on_sampled_grids() {
        let a = constant_model(1, 0.2, 3.0);
        let b = constant_model(1, -0.1, 3.0);
        let c = constant_model(1, 0.5, 3.0);
        let ab = l1_error(&a, &b, 0, 0, 101);
        let ba = l1_error(&b, &a, 0, 0, 101);
        assert_eq!(ab, ba);
        let ac = l1_error(&a, &c, 0, 0, 101);
        let cb = l1_error(&c, &b, 0, 0, 101);
        assert!(ab <= ac + cb + 1e-12);
    }

    #[test]
    fn mean_ci_edge_cases() {
        let (m, h) = mean_ci(&[2.0]);
        assert_eq!((m, h), (2.0, 0.0));
        let (m, h) = mean_ci(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!(h > 0.0);
    }

    #[test]
    fn sweep_table_roundtrip() {
        let rows = vec![
            SweepRow { omega: 1.0, m: 100, l1_sum: 12.345678901234567, gamma: 10.0, eta: 0.1, failed_cells: 0 },
            SweepRow { omega: 100.0, m: 1000, l1_sum: 3.0000000001, gamma: 1.0, eta: 100.0, failed_cells: 1 },
        ];
        let text = sweep_table_csv(&rows);
        let back = sweep_table_from_csv(&text).unwrap();
        assert_eq!(rows, back);
    }

    #[test]
    fn method_parsing() {
        assert_eq!("rkhs".parse::<Method>().unwrap(), Method::Rkhs);
        assert_eq!("gaussian".parse::<Method>().unwrap(), Method::GaussianBasis);
        assert!("nope".parse::<Method>().is_err());
    }
}
