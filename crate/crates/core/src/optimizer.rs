//! Bound-constrained smooth minimization: limited-memory quasi-Newton with
//! gradient projection for box lower bounds and a backtracking line search
//! enforcing the Armijo sufficient-decrease condition. Curvature is enforced
//! on the update pairs (pairs with nonpositive `s'y` are skipped), which
//! keeps the implicit Hessian approximation positive definite.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Options of one minimization run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimOptions {
    pub max_iters: usize,
    /// Infinity-norm tolerance on the projected gradient.
    pub grad_tol: f64,
    /// Relative decrease tolerance.
    pub f_tol: f64,
    /// Quasi-Newton memory length.
    pub history: usize,
    /// Per-parameter optional lower bounds; empty means unconstrained.
    #[serde(skip)]
    pub lower_bounds: Vec<Option<f64>>,
}

impl Default for OptimOptions {
    fn default() -> Self {
        OptimOptions {
            max_iters: 500,
            grad_tol: 1e-6,
            f_tol: 1e-10,
            history: 10,
            lower_bounds: Vec::new(),
        }
    }
}

/// Why the run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Projected gradient infinity norm below tolerance.
    GradientTol,
    /// Relative objective decrease below tolerance.
    SmallDecrease,
    MaxIters,
    /// No acceptable step found along the current direction.
    LineSearchStalled,
}

/// Run summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimDiagnostics {
    pub iterations: usize,
    pub n_evals: usize,
    pub termination: Termination,
    /// Projected-gradient infinity norm at the returned point.
    pub grad_norm: f64,
    pub final_value: f64,
    /// Objective value at each accepted iterate, starting point included.
    #[serde(skip)]
    pub accepted_values: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn project(x: &mut [f64], bounds: &[Option<f64>]) {
    if bounds.is_empty() {
        return;
    }
    for (xi, b) in x.iter_mut().zip(bounds) {
        if let Some(lb) = b {
            if *xi < *lb {
                *xi = *lb;
            }
        }
    }
}

/// A coordinate is frozen when it sits at its lower bound and the gradient
/// pushes further outward.
fn frozen(x: &[f64], g: &[f64], bounds: &[Option<f64>], i: usize) -> bool {
    if bounds.is_empty() {
        return false;
    }
    matches!(bounds[i], Some(lb) if x[i] <= lb && g[i] > 0.0)
}

/// Minimize a smooth function with optional lower bounds.
///
/// `f` must write the gradient into its second argument and return the value.
/// Returns the minimizer and run diagnostics; a non-finite value or gradient
/// at an accepted iterate (or an unrecoverable trial) is a
/// [`Error::Numerical`] carrying the iterate.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &OptimOptions) -> Result<(Vec<f64>, OptimDiagnostics)>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let bounds = &opts.lower_bounds;
    if !bounds.is_empty() && bounds.len() != n {
        return Err(Error::Shape(format!(
            "{} bounds for {n} parameters",
            bounds.len()
        )));
    }
    let mut x = x0.to_vec();
    for (i, b) in bounds.iter().enumerate() {
        if let Some(lb) = b {
            if x[i] < *lb {
                return Err(Error::validation(format!(
                    "starting point violates lower bound at coordinate {i}"
                )));
            }
        }
    }

    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut n_evals = 1usize;
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical {
            message: "non-finite objective or gradient at the starting point".into(),
            iterate: x,
        });
    }

    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut accepted_values = vec![fx];
    let mut termination = Termination::MaxIters;
    let mut iterations = 0;

    let proj_grad_norm = |x: &[f64], g: &[f64]| -> f64 {
        (0..n)
            .map(|i| if frozen(x, g, bounds, i) { 0.0 } else { g[i].abs() })
            .fold(0.0, f64::max)
    };

    for iter in 0..opts.max_iters {
        iterations = iter;
        let pg = proj_grad_norm(&x, &g);
        if pg <= opts.grad_tol {
            termination = Termination::GradientTol;
            break;
        }

        // gradient restricted to the free subspace
        let gfree: Vec<f64> = (0..n)
            .map(|i| if frozen(&x, &g, bounds, i) { 0.0 } else { g[i] })
            .collect();

        // two-loop recursion
        let mut d = gfree.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &d);
            for i in 0..n {
                d[i] -= a * y[i];
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = history.back() {
            let sy = dot(s, y);
            let yy = dot(y, y);
            if yy > 0.0 {
                let scale = sy / yy;
                for v in d.iter_mut() {
                    *v *= scale;
                }
            }
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let beta = rho * dot(y, &d);
            for i in 0..n {
                d[i] += (a - beta) * s[i];
            }
        }
        for v in d.iter_mut() {
            *v = -*v;
        }
        for i in 0..n {
            if frozen(&x, &g, bounds, i) {
                d[i] = 0.0;
            }
        }
        // fall back to projected steepest descent when the model direction
        // is not a descent direction
        if dot(&d, &gfree) >= -1e-12 * norm2(&d) * norm2(&gfree) {
            for i in 0..n {
                d[i] = -gfree[i];
            }
        }

        // backtracking Armijo search along the projected path
        const C1: f64 = 1e-4;
        let mut t = 1.0;
        let mut accepted: Option<(Vec<f64>, Vec<f64>, f64, f64)> = None;
        let mut gt = vec![0.0; n];
        for _ in 0..60 {
            let mut xt: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            project(&mut xt, bounds);
            let step: Vec<f64> = xt.iter().zip(&x).map(|(a, b)| a - b).collect();
            if step.iter().all(|&s| s == 0.0) {
                break;
            }
            let ft = f(&xt, &mut gt);
            n_evals += 1;
            let finite = ft.is_finite() && gt.iter().all(|v| v.is_finite());
            let slope = dot(&g, &step);
            if finite && ft <= fx + C1 * slope {
                accepted = Some((xt, step, ft, t));
                break;
            }
            // quadratic interpolation on the last trial, safeguarded
            let next = if finite && slope < 0.0 {
                let denom = 2.0 * (ft - fx - slope);
                if denom > 0.0 {
                    (-slope / denom * t).clamp(0.1 * t, 0.5 * t)
                } else {
                    0.5 * t
                }
            } else {
                0.5 * t
            };
            t = next;
            if t < 1e-20 {
                break;
            }
        }

        let Some((xt, step, ft, t_accepted)) = accepted else {
            termination = Termination::LineSearchStalled;
            break;
        };

        let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&step, &y);
        if sy > 1e-10 * norm2(&step) * norm2(&y) {
            let rho = 1.0 / sy;
            history.push_back((step, y, rho));
            while history.len() > opts.history.max(1) {
                history.pop_front();
            }
        }

        let decrease = fx - ft;
        x = xt;
        fx = ft;
        g.copy_from_slice(&gt);
        accepted_values.push(fx);
        iterations = iter + 1;

        // a tiny decrease only signals convergence on a near-full step;
        // heavily backtracked steps stall transiently and recover
        if t_accepted >= 0.5 && decrease <= opts.f_tol * (1.0 + fx.abs()) {
            termination = Termination::SmallDecrease;
            break;
        }
    }

    let grad_norm = proj_grad_norm(&x, &g);
    if grad_norm <= opts.grad_tol {
        termination = Termination::GradientTol;
    }
    Ok((
        x,
        OptimDiagnostics {
            iterations,
            n_evals,
            termination,
            grad_norm,
            final_value: fx,
            accepted_values,
        },
    ))
}
