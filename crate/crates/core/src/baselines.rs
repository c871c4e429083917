//! Competitor models: interaction functions as finite feature maps fitted
//! with the same smoothed objective.
//!
//! - `bernstein`: `g_{jl}(t) = sum_u a_u^(jl) exp(-gamma u t)`, free signs;
//! - `gaussian_basis`: `g_{jl}(t) = sum_u a_u^(jl) exp(-gamma (t - t_u)^2)`
//!   on a regular center grid over `[0, A]`, coefficients constrained
//!   nonnegative (the model cannot express inhibition);
//! - `exponential`: `g_{jl}(t) = a_{jl} exp(-b_{jl} t)` with a free decay per
//!   pair, fitted as a nonlinear model on the same contrast.
//!
//! All three share the support truncation `1_[0,A]` and the quadratic
//! penalty on the coefficients.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::EventData;
use crate::kernel::active_range;
use crate::model::{IntensityModel, LinkSpec};
use crate::objective::{link_pair, minimize_design, DesignProblem, DimBlock, PenaltyBlock};
use crate::optimizer::{minimize, OptimDiagnostics, OptimOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    Exponential,
    GaussianBasis,
    Bernstein,
}

impl std::fmt::Display for BasisKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BasisKind::Exponential => write!(f, "exponential"),
            BasisKind::GaussianBasis => write!(f, "gaussian_basis"),
            BasisKind::Bernstein => write!(f, "bernstein"),
        }
    }
}

/// A fitted feature-map model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBasisModel {
    pub kind: BasisKind,
    /// Basis size; 1 for the exponential model.
    pub u: usize,
    /// Basis rate/width parameter (unused by the exponential model, which
    /// fits its own decays).
    pub gamma: f64,
    /// Interaction support bound.
    pub support: f64,
    pub mu: Vec<f64>,
    /// Coefficients per `(j, l)`, length `u`.
    pub coeffs: Vec<Vec<Vec<f64>>>,
    /// Fitted decay rates per `(j, l)`; exponential model only.
    pub decay: Option<Vec<Vec<f64>>>,
    /// Coefficients constrained nonnegative at fit time.
    pub nonneg: bool,
}

impl FeatureBasisModel {
    fn basis_value(&self, idx: usize, t: f64) -> f64 {
        match self.kind {
            BasisKind::Bernstein => (-self.gamma * (idx + 1) as f64 * t).exp(),
            BasisKind::GaussianBasis => {
                let center = gaussian_center(idx, self.u, self.support);
                let d = t - center;
                (-self.gamma * d * d).exp()
            }
            BasisKind::Exponential => unreachable!("exponential basis is parametric"),
        }
    }
}

fn gaussian_center(idx: usize, u: usize, support: f64) -> f64 {
    if u <= 1 {
        0.0
    } else {
        idx as f64 * support / (u - 1) as f64
    }
}

/// `g_{jl}(t)` of a basis model for `t` in `[0, A]`.
pub fn basis_interaction_at(model: &FeatureBasisModel, j: usize, l: usize, t: f64) -> Result<f64> {
    if !(0.0..=model.support).contains(&t) {
        return Err(Error::Domain(format!(
            "lag {t} outside the interaction support [0, {}]",
            model.support
        )));
    }
    Ok(model.interaction(j, l, t))
}

impl IntensityModel for FeatureBasisModel {
    fn dims(&self) -> usize {
        self.mu.len()
    }

    fn support(&self) -> f64 {
        self.support
    }

    fn baseline(&self, j: usize) -> f64 {
        self.mu[j]
    }

    fn interaction(&self, j: usize, l: usize, lag: f64) -> f64 {
        match self.kind {
            BasisKind::Exponential => {
                let b = self.decay.as_ref().expect("exponential model carries decays");
                self.coeffs[j][l][0] * (-b[j][l] * lag).exp()
            }
            _ => self.coeffs[j][l]
                .iter()
                .enumerate()
                .map(|(u, &a)| a * self.basis_value(u, lag))
                .sum(),
        }
    }
}

/// Fit result of a baseline model.
#[derive(Debug, Clone)]
pub struct BasisFitOutcome {
    pub model: FeatureBasisModel,
    pub objective: f64,
    pub diagnostics: OptimDiagnostics,
}

/// Fit a feature-map model by minimizing the smoothed objective with a
/// quadratic penalty `(eta/2) sum |coeffs|^2` and the per-kind constraints.
/// `support` is the truncation bound `A` of the interaction functions.
#[allow(clippy::too_many_arguments)]
pub fn fit_basis(
    events: &EventData,
    kind: BasisKind,
    u: usize,
    gamma: f64,
    support: f64,
    eta: f64,
    link: &LinkSpec,
    m: usize,
    optim: &OptimOptions,
) -> Result<BasisFitOutcome> {
    if u == 0 {
        return Err(Error::config("basis size must be at least 1"));
    }
    if !(eta > 0.0) {
        return Err(Error::config(format!("eta must be positive, got {eta}")));
    }
    if !(gamma > 0.0) {
        return Err(Error::config(format!("gamma must be positive, got {gamma}")));
    }
    if !(support > 0.0) {
        return Err(Error::config(format!("support must be positive, got {support}")));
    }
    if m < 2 {
        return Err(Error::config("grid size must be at least 2"));
    }
    match kind {
        BasisKind::Exponential => fit_exponential(events, support, eta, link, m, optim),
        _ => fit_linear_basis(events, kind, u, gamma, support, eta, link, m, optim),
    }
}

fn mu_init(events: &EventData, j: usize) -> f64 {
    let n = events.count(j);
    if n == 0 {
        1.0 / events.horizon()
    } else {
        n as f64 / events.horizon()
    }
}

fn riemann_grid(horizon: f64, m: usize) -> Vec<f64> {
    (1..=m).map(|n| (n - 1) as f64 / m as f64 * horizon).collect()
}

#[allow(clippy::too_many_arguments)]
fn fit_linear_basis(
    events: &EventData,
    kind: BasisKind,
    u: usize,
    gamma: f64,
    support: f64,
    eta: f64,
    link: &LinkSpec,
    m: usize,
    optim: &OptimOptions,
) -> Result<BasisFitOutcome> {
    let d = events.dims();
    let horizon = events.horizon();
    let proto = FeatureBasisModel {
        kind,
        u,
        gamma,
        support,
        mu: vec![0.0; d],
        coeffs: vec![vec![vec![0.0; u]; d]; d],
        decay: None,
        nonneg: kind == BasisKind::GaussianBasis,
    };

    let grid = riemann_grid(horizon, m);
    let design_at = |points: &[f64]| -> Array2<f64> {
        let mut mat = Array2::<f64>::zeros((points.len(), d * u));
        for (row, &t) in points.iter().enumerate() {
            for l in 0..d {
                let tl = events.times(l);
                for i in active_range(tl, t, support) {
                    let lag = t - tl[i];
                    for k in 0..u {
                        mat[(row, l * u + k)] += proto.basis_value(k, lag);
                    }
                }
            }
        }
        mat
    };
    let grid_design = design_at(&grid);

    let mut blocks = Vec::with_capacity(d);
    for j in 0..d {
        let event_design = design_at(events.times(j));
        let mut lower = vec![None; 1 + d * u];
        lower[0] = Some(0.0);
        if proto.nonneg {
            for slot in lower.iter_mut().skip(1) {
                *slot = Some(0.0);
            }
        }
        blocks.push(DimBlock {
            grid: grid_design.clone(),
            event: event_design,
            penalty: vec![PenaltyBlock { offset: 0, k: Array2::eye(d * u) }],
            lower,
        });
    }
    let problem = DesignProblem {
        horizon,
        link: link_pair(link),
        eta,
        blocks,
    };

    let mut x0 = Vec::with_capacity(problem.n_params());
    for j in 0..d {
        x0.push(mu_init(events, j));
        x0.extend(std::iter::repeat(0.0).take(d * u));
    }
    let (x, diagnostics) = minimize_design(&problem, &x0, optim)?;

    let mut model = proto;
    let mut off = 0;
    for j in 0..d {
        model.mu[j] = x[off].max(0.0);
        off += 1;
        for l in 0..d {
            for k in 0..u {
                model.coeffs[j][l][k] = x[off + l * u + k];
            }
        }
        off += d * u;
    }
    Ok(BasisFitOutcome {
        model,
        objective: diagnostics.final_value,
        diagnostics,
    })
}

/// Active lags per row in compressed form.
struct LagRows {
    row_ptr: Vec<usize>,
    lags: Vec<f64>,
}

fn lag_rows(points: &[f64], events: &[f64], support: f64) -> LagRows {
    let mut row_ptr = Vec::with_capacity(points.len() + 1);
    let mut lags = Vec::new();
    row_ptr.push(0);
    for &t in points {
        for i in active_range(events, t, support) {
            lags.push(t - events[i]);
        }
        row_ptr.push(lags.len());
    }
    LagRows { row_ptr, lags }
}

fn fit_exponential(
    events: &EventData,
    support: f64,
    eta: f64,
    link: &LinkSpec,
    m: usize,
    optim: &OptimOptions,
) -> Result<BasisFitOutcome> {
    let d = events.dims();
    let horizon = events.horizon();
    let grid = riemann_grid(horizon, m);
    let pair = link_pair(link);

    // active lags at the grid nodes (shared across j) and at each
    // dimension's event times
    let grid_lags: Vec<LagRows> = (0..d).map(|l| lag_rows(&grid, events.times(l), support)).collect();
    let event_lags: Vec<Vec<LagRows>> = (0..d)
        .map(|j| {
            (0..d)
                .map(|l| lag_rows(events.times(j), events.times(l), support))
                .collect()
        })
        .collect();

    // layout per dimension: [mu_j, (a_{jl}, b_{jl}) for l in 0..d]
    let block = 1 + 2 * d;
    let n_params = d * block;
    let weight = horizon / m as f64;

    let value_grad = |x: &[f64], g: &mut [f64]| -> f64 {
        g.fill(0.0);
        let mut value = 0.0;
        for j in 0..d {
            let off = j * block;
            let mu = x[off];

            // pass over the grid rows
            let mut sums = vec![0.0; d]; // sum exp(-b lag)
            let mut dsums = vec![0.0; d]; // sum lag exp(-b lag)
            for n in 0..m {
                let mut pre = mu;
                for l in 0..d {
                    let rows = &grid_lags[l];
                    let (a, b) = (x[off + 1 + 2 * l], x[off + 2 + 2 * l]);
                    let mut s = 0.0;
                    let mut sp = 0.0;
                    for &lag in &rows.lags[rows.row_ptr[n]..rows.row_ptr[n + 1]] {
                        let e = (-b * lag).exp();
                        s += e;
                        sp += lag * e;
                    }
                    sums[l] = s;
                    dsums[l] = sp;
                    pre += a * s;
                }
                value += weight * pair.phi1(pre);
                let w = weight * pair.dphi1(pre);
                g[off] += w;
                for l in 0..d {
                    g[off + 1 + 2 * l] += w * sums[l];
                    g[off + 2 + 2 * l] -= w * x[off + 1 + 2 * l] * dsums[l];
                }
            }

            // pass over the event rows of dimension j
            let nj = events.count(j);
            for n in 0..nj {
                let mut pre = mu;
                for l in 0..d {
                    let rows = &event_lags[j][l];
                    let (a, b) = (x[off + 1 + 2 * l], x[off + 2 + 2 * l]);
                    let mut s = 0.0;
                    let mut sp = 0.0;
                    for &lag in &rows.lags[rows.row_ptr[n]..rows.row_ptr[n + 1]] {
                        let e = (-b * lag).exp();
                        s += e;
                        sp += lag * e;
                    }
                    sums[l] = s;
                    dsums[l] = sp;
                    pre += a * s;
                }
                value -= pair.phi2(pre);
                let w = pair.dphi2(pre);
                g[off] -= w;
                for l in 0..d {
                    g[off + 1 + 2 * l] -= w * sums[l];
                    g[off + 2 + 2 * l] += w * x[off + 1 + 2 * l] * dsums[l];
                }
            }

            // quadratic penalty on the amplitudes
            for l in 0..d {
                let a = x[off + 1 + 2 * l];
                value += 0.5 * eta * a * a;
                g[off + 1 + 2 * l] += eta * a;
            }
        }
        value
    };

    let mut x0 = vec![0.0; n_params];
    let mut lower = vec![None; n_params];
    for j in 0..d {
        let off = j * block;
        x0[off] = mu_init(events, j);
        lower[off] = Some(0.0);
        for l in 0..d {
            x0[off + 2 + 2 * l] = 1.0; // decay starts at 1
            lower[off + 2 + 2 * l] = Some(1e-4);
        }
    }
    let opts = OptimOptions {
        lower_bounds: lower,
        ..optim.clone()
    };
    let (x, diagnostics) = minimize(value_grad, &x0, &opts)?;

    let mut mu = Vec::with_capacity(d);
    let mut coeffs = vec![vec![vec![0.0]; d]; d];
    let mut decay = vec![vec![0.0; d]; d];
    for j in 0..d {
        let off = j * block;
        mu.push(x[off].max(0.0));
        for l in 0..d {
            coeffs[j][l][0] = x[off + 1 + 2 * l];
            decay[j][l] = x[off + 2 + 2 * l];
        }
    }
    Ok(BasisFitOutcome {
        model: FeatureBasisModel {
            kind: BasisKind::Exponential,
            u: 1,
            gamma: 0.0,
            support,
            mu,
            coeffs,
            decay: Some(decay),
            nonneg: false,
        },
        objective: diagnostics.final_value,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Criterion;
    use crate::objective::exact_neg_log_likelihood;
    use crate::simulate::{builtin_kernels, simulate_thinning, Curve, GroundTruthModel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn default_optim() -> OptimOptions {
        OptimOptions::default()
    }

    #[test]
    fn gaussian_basis_single_bump() {
        let u = 5;
        let support = 4.0;
        let mut model = FeatureBasisModel {
            kind: BasisKind::GaussianBasis,
            u,
            gamma: 3.0,
            support,
            mu: vec![0.1],
            coeffs: vec![vec![vec![0.0; u]]],
            decay: None,
            nonneg: true,
        };
        model.coeffs[0][0][1] = 1.0;
        let center = support / (u - 1) as f64;
        for t in [0.0, 0.7, 2.2] {
            let want = (-(3.0) * (t - center) * (t - center)).exp();
            assert!((basis_interaction_at(&model, 0, 0, t).unwrap() - want).abs() < 1e-15);
        }
    }

    #[test]
    fn bernstein_first_coefficient_is_plain_decay() {
        let model = FeatureBasisModel {
            kind: BasisKind::Bernstein,
            u: 3,
            gamma: 2.0,
            support: 5.0,
            mu: vec![0.1],
            coeffs: vec![vec![vec![1.0, 0.0, 0.0]]],
            decay: None,
            nonneg: false,
        };
        for t in [0.0, 0.4, 3.0] {
            assert!((model.interaction(0, 0, t) - (-2.0 * t).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn random_coefficients_match_term_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = 6;
        let model = FeatureBasisModel {
            kind: BasisKind::GaussianBasis,
            u,
            gamma: 1.5,
            support: 5.0,
            mu: vec![0.1],
            coeffs: vec![vec![(0..u).map(|_| rng.random_range(0.0..1.0)).collect()]],
            decay: None,
            nonneg: true,
        };
        for t in [0.3, 1.9, 4.6] {
            let mut want = 0.0;
            for (k, &a) in model.coeffs[0][0].iter().enumerate() {
                let c = gaussian_center(k, u, 5.0);
                want += a * (-(1.5) * (t - c) * (t - c)).exp();
            }
            assert!((model.interaction(0, 0, t) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn interaction_outside_support_is_domain_error() {
        let model = FeatureBasisModel {
            kind: BasisKind::Bernstein,
            u: 1,
            gamma: 1.0,
            support: 2.0,
            mu: vec![0.1],
            coeffs: vec![vec![vec![1.0]]],
            decay: None,
            nonneg: false,
        };
        assert!(matches!(
            basis_interaction_at(&model, 0, 0, 2.5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn empty_events_fit_drives_baseline_to_zero() {
        let ev = EventData::empty(1, 50.0).unwrap();
        let link = LinkSpec::new(100.0, Criterion::Mle).unwrap();
        let out = fit_basis(
            &ev,
            BasisKind::Bernstein,
            3,
            1.0,
            5.0,
            1.0,
            &link,
            100,
            &default_optim(),
        )
        .unwrap();
        assert!(out.model.mu[0] < 1e-3, "mu = {}", out.model.mu[0]);
        for &c in &out.model.coeffs[0][0] {
            assert!(c.abs() < 1e-6);
        }
    }

    #[test]
    fn gaussian_basis_fit_never_negative() {
        let truth = builtin_kernels("paper3d").unwrap();
        let ev = simulate_thinning(&truth, 150.0, 50.0, 2).unwrap();
        let link = LinkSpec::new(100.0, Criterion::Mle).unwrap();
        let out = fit_basis(
            &ev,
            BasisKind::GaussianBasis,
            5,
            10.0,
            5.0,
            1.0,
            &link,
            300,
            &default_optim(),
        )
        .unwrap();
        for j in 0..3 {
            for l in 0..3 {
                for &c in &out.model.coeffs[j][l] {
                    assert!(c >= 0.0);
                }
                for t in [0.0, 1.0, 3.0, 5.0] {
                    assert!(out.model.interaction(j, l, t) >= 0.0);
                }
            }
        }
    }

    #[test]
    fn exponential_recovers_decay_on_exponential_data() {
        let truth = GroundTruthModel::new(
            vec![0.5],
            vec![vec![Curve::ExpDecay { amplitude: 0.6, rate: 1.0 }]],
            5.0,
        )
        .unwrap();
        let ev = simulate_thinning(&truth, 2000.0, 50.0, 11).unwrap();
        assert!(ev.count(0) > 1000, "simulation too sparse: {}", ev.count(0));
        let link = LinkSpec::new(100.0, Criterion::Mle).unwrap();
        let m = 1000.max(2 * ev.max_count());
        let out = fit_basis(
            &ev,
            BasisKind::Exponential,
            1,
            1.0,
            5.0,
            1e-6,
            &link,
            m,
            &default_optim(),
        )
        .unwrap();
        let beta = out.model.decay.as_ref().unwrap()[0][0];
        let amp = out.model.coeffs[0][0][0];
        assert!(
            (beta - 1.0).abs() < 0.2,
            "decay {beta} not within 20% of the truth"
        );
        assert!((amp - 0.6).abs() < 0.2 * 0.6 + 0.05, "amplitude {amp}");
        assert!((out.model.mu[0] - 0.5).abs() < 0.15, "mu {}", out.model.mu[0]);
    }

    #[test]
    fn large_omega_objective_matches_exact_likelihood_when_positive() {
        // an exciting process keeps fitted intensities positive, where the
        // smoothed objective collapses onto the plain likelihood
        let truth = GroundTruthModel::new(
            vec![0.6],
            vec![vec![Curve::ExpDecay { amplitude: 0.5, rate: 2.0 }]],
            3.0,
        )
        .unwrap();
        let ev = simulate_thinning(&truth, 400.0, 30.0, 4).unwrap();
        let omega = 1e4;
        let link = LinkSpec::new(omega, Criterion::Mle).unwrap();
        let m = 2000;
        let eta = 0.1;
        let out = fit_basis(
            &ev,
            BasisKind::Bernstein,
            4,
            1.0,
            3.0,
            eta,
            &link,
            m,
            &default_optim(),
        )
        .unwrap();
        let penalty: f64 = out
            .model
            .coeffs
            .iter()
            .flatten()
            .flatten()
            .map(|&a| a * a)
            .sum::<f64>()
            * 0.5
            * eta;
        let f_data = out.objective - penalty;
        let (l_exact, flags) = exact_neg_log_likelihood(&out.model, &ev, m).unwrap();
        assert_eq!(flags, 0);
        // events with the smallest intensity control the log-gap bound
        let min_lam = ev.times(0).iter().fold(f64::INFINITY, |acc, &t| {
            acc.min(crate::model::pre_intensity_for(&out.model, &ev, 0, t))
        });
        assert!(min_lam > 0.0);
        let bound = (ev.horizon() + ev.total_count() as f64 / min_lam) * 2.0f64.ln() / omega;
        assert!(
            (f_data - l_exact).abs() <= 1.5 * bound + 1e-9,
            "gap {} exceeds bound {bound}",
            (f_data - l_exact).abs()
        );
    }
}
