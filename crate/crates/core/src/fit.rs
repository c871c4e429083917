//! Fitting the representer-form model: matrix assembly, parameter packing,
//! and the bound-constrained minimization run.

use crate::error::Result;
use crate::events::EventData;
use crate::kernel::KernelConfig;
use crate::model::{LinkSpec, RkhsParams};
use crate::objective::{minimize_design, pack_rkhs, rkhs_design_problem, unpack_rkhs};
use crate::optimizer::{OptimDiagnostics, OptimOptions};
use crate::precompute::{build_matrices, PrecomputedMatrices};

/// Fit options; `jittered` applies the default spectral floor to the Gram
/// penalty blocks (the data terms are untouched).
#[derive(Debug, Clone)]
pub struct FitOptions {
    pub optim: OptimOptions,
    pub jittered: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            optim: OptimOptions::default(),
            jittered: true,
        }
    }
}

/// Result of one representer-model fit.
#[derive(Debug, Clone)]
pub struct RkhsFitOutcome {
    pub params: RkhsParams,
    pub objective: f64,
    pub diagnostics: OptimDiagnostics,
}

/// Fit with matrices built internally.
pub fn fit_rkhs(
    events: &EventData,
    kernel: &KernelConfig,
    eta: f64,
    link: &LinkSpec,
    m: usize,
    opts: &FitOptions,
) -> Result<RkhsFitOutcome> {
    let mats = build_matrices(events, kernel, m)?;
    fit_rkhs_with_matrices(events, &mats, eta, link, opts, None)
}

/// Fit reusing prebuilt matrices (they only depend on the events, the kernel
/// configuration and the grid size, so a ridge-weight search can share them).
/// An optional warm start overrides the default initialization
/// `mu_j = N_j / T` (or `1/T` for empty dimensions), `alpha = 0`, `b = 0`.
pub fn fit_rkhs_with_matrices(
    events: &EventData,
    matrices: &PrecomputedMatrices,
    eta: f64,
    link: &LinkSpec,
    opts: &FitOptions,
    warm_start: Option<&RkhsParams>,
) -> Result<RkhsFitOutcome> {
    let problem = rkhs_design_problem(matrices, link, eta, opts.jittered);
    let x0 = match warm_start {
        Some(theta) => pack_rkhs(theta),
        None => {
            let d = events.dims();
            let mut x = Vec::with_capacity(problem.n_params());
            for j in 0..d {
                let n = events.count(j);
                let mu0 = if n == 0 {
                    1.0 / events.horizon()
                } else {
                    n as f64 / events.horizon()
                };
                x.push(mu0);
                x.extend(std::iter::repeat(0.0).take(d * (events.count(j) + 1) + d));
            }
            x
        }
    };
    let (x, diagnostics) = minimize_design(&problem, &x0, &opts.optim)?;
    let params = unpack_rkhs(&x, matrices.kernel, events.clone())?;
    Ok(RkhsFitOutcome {
        params,
        objective: diagnostics.final_value,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Criterion;
    use crate::simulate::{builtin_kernels, simulate_thinning};

    #[test]
    fn fit_on_small_simulation_converges() {
        let truth = builtin_kernels("paper3d").unwrap();
        let ev = simulate_thinning(&truth, 100.0, 50.0, 3).unwrap();
        let kernel = KernelConfig { gamma: 10.0, support: 5.0 };
        let link = LinkSpec::new(100.0, Criterion::Mle).unwrap();
        let out = fit_rkhs(&ev, &kernel, 1.0, &link, 200, &FitOptions::default()).unwrap();
        assert!(out.objective.is_finite());
        assert!(out.params.mu.iter().all(|&m| m >= 0.0));
        // accepted objective values decrease monotonically
        for w in out.diagnostics.accepted_values.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn fit_empty_events_sends_baseline_to_zero() {
        let ev = EventData::empty(1, 20.0).unwrap();
        let kernel = KernelConfig { gamma: 1.0, support: 5.0 };
        let link = LinkSpec::new(100.0, Criterion::Mle).unwrap();
        let out = fit_rkhs(&ev, &kernel, 1.0, &link, 100, &FitOptions::default()).unwrap();
        assert!(out.params.mu[0] < 1e-3, "mu = {}", out.params.mu[0]);
    }

    #[test]
    fn restart_from_fit_terminates_quickly() {
        use crate::optimizer::{OptimOptions, Termination};
        use crate::simulate::{Curve, GroundTruthModel};
        let truth = GroundTruthModel::new(
            vec![0.6],
            vec![vec![Curve::ExpDecay { amplitude: 0.4, rate: 1.5 }]],
            2.0,
        )
        .unwrap();
        let kernel = KernelConfig { gamma: 1.0, support: 2.0 };
        let link = LinkSpec::new(100.0, Criterion::Mle).unwrap();
        let opts = FitOptions {
            optim: OptimOptions { max_iters: 5000, ..OptimOptions::default() },
            jittered: true,
        };
        for seed in [1, 2, 3] {
            let ev = simulate_thinning(&truth, 40.0, 20.0, seed).unwrap();
            let mats = build_matrices(&ev, &kernel, 200).unwrap();
            let first = fit_rkhs_with_matrices(&ev, &mats, 1.0, &link, &opts, None).unwrap();
            assert_ne!(first.diagnostics.termination, Termination::MaxIters);
            let second =
                fit_rkhs_with_matrices(&ev, &mats, 1.0, &link, &opts, Some(&first.params)).unwrap();
            assert!(
                second.diagnostics.iterations <= 2,
                "seed {seed}: restart took {} iterations",
                second.diagnostics.iterations
            );
        }
    }

    #[test]
    fn fits_are_deterministic() {
        let truth = builtin_kernels("paper3d").unwrap();
        let ev = simulate_thinning(&truth, 60.0, 30.0, 9).unwrap();
        let kernel = KernelConfig { gamma: 1.0, support: 5.0 };
        let link = LinkSpec::new(100.0, Criterion::Mle).unwrap();
        let a = fit_rkhs(&ev, &kernel, 0.1, &link, 120, &FitOptions::default()).unwrap();
        let b = fit_rkhs(&ev, &kernel, 0.1, &link, 120, &FitOptions::default()).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.objective, b.objective);
    }
}
