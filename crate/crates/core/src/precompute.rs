//! Assembly of the Riemann grid and all design/Gram matrices, once per
//! `(events, kernel config, M)`.
//!
//! For each dimension `j` the objective needs, with `P = N_j + 1`:
//!
//! - `Q^(j) = [Q^(j1) | .. | Q^(jd)]`, `M x dP`, values of the representer
//!   basis aggregated over active events at the grid points;
//! - `K^(jl)`, `P x P`, the Gram matrix of the basis `{r_l, q_1, .., q_Nj}`;
//! - `K^(j) = [K1^(j1) | .. | K1^(jd)]`, `N_j x dP`, where `K1^(jl)` drops
//!   row 0 of `K^(jl)` (values at the dimension-j event times);
//! - `B`, `M x d`, and `E^(j)`, `N_j x d`, active-event counts driving the
//!   offset coefficients.
//!
//! The grid follows the left-rule convention `tau_n = (n-1) T / M`, so
//! `tau_1 = 0` and the right endpoint `T` is never sampled.

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::events::EventData;
use crate::kernel::{active_range, double_int_s, int_s, s_ell, KernelConfig};

/// All matrices of the matrix-form objective, immutable once built.
#[derive(Debug, Clone)]
pub struct PrecomputedMatrices {
    /// Left-rule Riemann nodes `tau_n = (n-1) T / M`, `n = 1..M`.
    pub grid: Vec<f64>,
    pub horizon: f64,
    pub kernel: KernelConfig,
    /// Per-dimension event counts of the anchor events.
    pub counts: Vec<usize>,
    /// Per dimension `j`: `M x d (N_j + 1)` grid design matrix `Q^(j)`.
    pub q: Vec<Array2<f64>>,
    /// Per pair `(j, l)`: the `(N_j+1) x (N_j+1)` Gram matrix `K^(jl)`.
    pub kfull: Vec<Vec<Array2<f64>>>,
    /// Per dimension `j`: `N_j x d (N_j + 1)` event design matrix `K^(j)`.
    pub kdata: Vec<Array2<f64>>,
    /// `M x d` active-event counts at grid points.
    pub b: Array2<f64>,
    /// Per dimension `j`: `N_j x d` active-event counts at event times.
    pub e: Vec<Array2<f64>>,
}

impl PrecomputedMatrices {
    /// Number of Riemann nodes.
    pub fn m(&self) -> usize {
        self.grid.len()
    }

    pub fn dims(&self) -> usize {
        self.counts.len()
    }
}

/// Build every matrix of the objective for the given anchor events.
pub fn build_matrices(
    events: &EventData,
    cfg: &KernelConfig,
    m: usize,
) -> Result<PrecomputedMatrices> {
    if m < 2 {
        return Err(Error::config(format!("grid size must be at least 2, got {m}")));
    }
    let d = events.dims();
    let horizon = events.horizon();
    let grid: Vec<f64> = (1..=m)
        .map(|n| (n - 1) as f64 / m as f64 * horizon)
        .collect();

    let mut b = Array2::<f64>::zeros((m, d));
    for l in 0..d {
        let tl = events.times(l);
        for (n, &tau) in grid.iter().enumerate() {
            b[(n, l)] = active_range(tl, tau, cfg.support).len() as f64;
        }
    }

    let per_dim: Vec<(Array2<f64>, Vec<Array2<f64>>, Array2<f64>, Array2<f64>)> = (0..d)
        .into_par_iter()
        .map(|j| build_dimension(events, cfg, &grid, j))
        .collect();

    let mut q = Vec::with_capacity(d);
    let mut kfull = Vec::with_capacity(d);
    let mut kdata = Vec::with_capacity(d);
    let mut e = Vec::with_capacity(d);
    for (qj, kj, kdj, ej) in per_dim {
        q.push(qj);
        kfull.push(kj);
        kdata.push(kdj);
        e.push(ej);
    }

    Ok(PrecomputedMatrices {
        grid,
        horizon,
        kernel: *cfg,
        counts: events.counts(),
        q,
        kfull,
        kdata,
        b,
        e,
    })
}

fn build_dimension(
    events: &EventData,
    cfg: &KernelConfig,
    grid: &[f64],
    j: usize,
) -> (Array2<f64>, Vec<Array2<f64>>, Array2<f64>, Array2<f64>) {
    let d = events.dims();
    let horizon = events.horizon();
    let tj = events.times(j);
    let nj = tj.len();
    let p = nj + 1;
    let m = grid.len();

    let mut q = Array2::<f64>::zeros((m, d * p));
    let mut kfull: Vec<Array2<f64>> = Vec::with_capacity(d);
    let mut kdata = Array2::<f64>::zeros((nj, d * p));
    let mut e = Array2::<f64>::zeros((nj, d));

    for l in 0..d {
        let tl = events.times(l);
        let col0 = l * p;

        for (n, &tau) in grid.iter().enumerate() {
            q[(n, col0)] = int_s(tau, horizon, tl, cfg);
            for (u, &tu) in tj.iter().enumerate() {
                q[(n, col0 + 1 + u)] = s_ell(tau, tu, tl, cfg);
            }
        }

        let mut k = Array2::<f64>::zeros((p, p));
        k[(0, 0)] = double_int_s(horizon, tl, cfg);
        for (u, &tu) in tj.iter().enumerate() {
            let v = int_s(tu, horizon, tl, cfg);
            k[(0, 1 + u)] = v;
            k[(1 + u, 0)] = v;
        }
        // upper triangle, mirrored, so K is bitwise symmetric
        for r in 0..nj {
            for c in r..nj {
                let v = s_ell(tj[r], tj[c], tl, cfg);
                k[(1 + r, 1 + c)] = v;
                k[(1 + c, 1 + r)] = v;
            }
        }

        for r in 0..nj {
            for c in 0..p {
                kdata[(r, col0 + c)] = k[(1 + r, c)];
            }
        }
        kfull.push(k);

        for (n, &tn) in tj.iter().enumerate() {
            e[(n, l)] = active_range(tl, tn, cfg.support).len() as f64;
        }
    }

    (q, kfull, kdata, e)
}

/// `K + jitter * I`: lifts the spectrum of a near-singular Gram matrix before
/// it enters the regularization quadratic form.
pub fn spectral_floor(k: &Array2<f64>, jitter: f64) -> Array2<f64> {
    let mut out = k.clone();
    for i in 0..out.nrows().min(out.ncols()) {
        out[(i, i)] += jitter;
    }
    out
}

/// Default jitter rule: `1e-10 * trace(K) / dim(K)`.
pub fn default_jitter(k: &Array2<f64>) -> f64 {
    let n = k.nrows();
    if n == 0 {
        return 0.0;
    }
    let trace: f64 = (0..n).map(|i| k[(i, i)]).sum();
    1e-10 * trace / n as f64
}
