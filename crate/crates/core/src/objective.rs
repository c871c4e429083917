//! The approximated regularized objective in matrix form, its analytic
//! gradient, and exact (ReLU) log-likelihood scoring.
//!
//! With the precomputed matrices of one dimension `j`, the objective reads
//!
//! ```text
//! F(theta) = sum_j [ (T/M) 1' phi1(mu_j 1 + Q^(j) a^(j) + B b^(j))
//!                  -       1' phi2(mu_j 1 + K^(j) a^(j) + E^(j) b^(j)) ]
//!          + (eta/2) sum_{j,l} a^(jl)' K^(jl) a^(jl),
//! ```
//!
//! where the link pair is `(phi1, phi2) = (softplus, log softplus)` for the
//! likelihood criterion and `(softplus^2, 2 softplus)` for least squares.
//! Parameters are packed per dimension as `(mu_j, a^(j1..jd), b^(j.))`; the
//! per-dimension terms are separable.

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::error::{Error, Result};
use crate::events::EventData;
use crate::model::{
    log_softplus, log_softplus_prime, pre_intensity_for, softplus, softplus_prime, Criterion,
    IntensityModel, LinkSpec, RkhsParams,
};
use crate::optimizer::OptimOptions;
use crate::precompute::{default_jitter, spectral_floor, PrecomputedMatrices};

/// Intensities below this value are floored inside logarithms when scoring,
/// so test scores stay finite; the number of floored events is reported.
pub const LOG_FLOOR: f64 = 1e-10;

/// The two pointwise maps of the smoothed objective and their derivatives.
#[derive(Debug, Clone, Copy)]
pub struct LinkPair {
    omega: f64,
    criterion: Criterion,
}

impl LinkPair {
    /// Map applied at the Riemann nodes (the compensator part).
    #[inline]
    pub fn phi1(&self, x: f64) -> f64 {
        match self.criterion {
            Criterion::Mle => softplus(x, self.omega),
            Criterion::Ls => {
                let s = softplus(x, self.omega);
                s * s
            }
        }
    }

    /// Map applied at the event times (the data part, entering negatively).
    #[inline]
    pub fn phi2(&self, x: f64) -> f64 {
        match self.criterion {
            Criterion::Mle => log_softplus(x, self.omega),
            Criterion::Ls => 2.0 * softplus(x, self.omega),
        }
    }

    #[inline]
    pub fn dphi1(&self, x: f64) -> f64 {
        match self.criterion {
            Criterion::Mle => softplus_prime(x, self.omega),
            Criterion::Ls => 2.0 * softplus(x, self.omega) * softplus_prime(x, self.omega),
        }
    }

    #[inline]
    pub fn dphi2(&self, x: f64) -> f64 {
        match self.criterion {
            Criterion::Mle => log_softplus_prime(x, self.omega),
            Criterion::Ls => 2.0 * softplus_prime(x, self.omega),
        }
    }
}

/// Build the link pair for a criterion.
pub fn link_pair(link: &LinkSpec) -> LinkPair {
    LinkPair {
        omega: link.omega,
        criterion: link.criterion,
    }
}

/// Configuration of one objective evaluation.
#[derive(Clone)]
pub struct ObjectiveConfig<'a> {
    pub link: LinkSpec,
    /// Ridge weight `eta > 0`.
    pub eta: f64,
    pub matrices: &'a PrecomputedMatrices,
}

impl<'a> ObjectiveConfig<'a> {
    pub fn new(link: LinkSpec, eta: f64, matrices: &'a PrecomputedMatrices) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::config(format!("eta must be positive, got {eta}")));
        }
        Ok(ObjectiveConfig { link, eta, matrices })
    }
}

/// Gradient with the same block structure as the free parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RkhsGradient {
    pub mu: Vec<f64>,
    pub alpha: Vec<Vec<Vec<f64>>>,
    pub b: Vec<Vec<f64>>,
}

fn check_shapes(theta: &RkhsParams, cfg: &ObjectiveConfig) -> Result<()> {
    let mats = cfg.matrices;
    if theta.anchors().counts() != mats.counts {
        return Err(Error::Shape(format!(
            "parameter anchors have counts {:?}, matrices were built for {:?}",
            theta.anchors().counts(),
            mats.counts
        )));
    }
    if theta.kernel != mats.kernel {
        return Err(Error::Shape(
            "kernel configuration of parameters and matrices disagree".into(),
        ));
    }
    Ok(())
}

/// Matrix-form evaluation of the approximated regularized objective.
pub fn objective_value(theta: &RkhsParams, cfg: &ObjectiveConfig) -> Result<f64> {
    check_shapes(theta, cfg)?;
    let problem = rkhs_design_problem(cfg.matrices, &cfg.link, cfg.eta, false);
    let x = pack_rkhs(theta);
    Ok(problem.value(&x))
}

/// Analytic gradient over `(mu, alpha, b)`.
pub fn objective_gradient(theta: &RkhsParams, cfg: &ObjectiveConfig) -> Result<RkhsGradient> {
    check_shapes(theta, cfg)?;
    let problem = rkhs_design_problem(cfg.matrices, &cfg.link, cfg.eta, false);
    let x = pack_rkhs(theta);
    let mut g = vec![0.0; x.len()];
    problem.value_grad(&x, &mut g);
    Ok(unpack_gradient(&g, &cfg.matrices.counts))
}

/// One quadratic-penalty block acting on a slice of the coefficient vector.
pub(crate) struct PenaltyBlock {
    pub offset: usize,
    pub k: Array2<f64>,
}

/// Design matrices and penalty of one dimension's separable term.
pub(crate) struct DimBlock {
    /// Riemann-node design, `M x P`.
    pub grid: Array2<f64>,
    /// Event-time design, `N_j x P`.
    pub event: Array2<f64>,
    pub penalty: Vec<PenaltyBlock>,
    /// Lower bounds for the local parameters `[mu, coeffs..]`.
    pub lower: Vec<Option<f64>>,
}

/// A packed smooth objective over per-dimension design blocks; used for both
/// the representer parametrization and the finite feature-map baselines.
pub(crate) struct DesignProblem {
    pub horizon: f64,
    pub link: LinkPair,
    pub eta: f64,
    pub blocks: Vec<DimBlock>,
}

impl DesignProblem {
    pub fn n_params(&self) -> usize {
        self.blocks.iter().map(|b| 1 + b.grid.ncols()).sum()
    }

    pub fn lower_bounds(&self) -> Vec<Option<f64>> {
        let mut out = Vec::with_capacity(self.n_params());
        for b in &self.blocks {
            out.extend_from_slice(&b.lower);
        }
        out
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.eval(x, None)
    }

    pub fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.eval(x, Some(grad))
    }

    /// Per-parameter scale factors (RMS of the design columns, 1 for the
    /// baselines): optimizing in the rescaled variables `x * scale`
    /// equalizes the column norms, which conditions the quasi-Newton run.
    pub fn column_scales(&self) -> Vec<f64> {
        let mut scales = Vec::with_capacity(self.n_params());
        for block in &self.blocks {
            scales.push(1.0);
            let rows = (block.grid.nrows() + block.event.nrows()) as f64;
            for k in 0..block.grid.ncols() {
                let gs: f64 = block.grid.column(k).iter().map(|v| v * v).sum();
                let es: f64 = block.event.column(k).iter().map(|v| v * v).sum();
                scales.push(((gs + es) / rows.max(1.0)).sqrt().max(1e-8));
            }
        }
        scales
    }

    fn eval(&self, x: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        if let Some(g) = grad.as_deref_mut() {
            g.fill(0.0);
        }
        let mut value = 0.0;
        let mut off = 0;
        for block in &self.blocks {
            let p = block.grid.ncols();
            let m = block.grid.nrows();
            let weight = self.horizon / m as f64;
            let mu = x[off];
            let coeffs = ArrayView1::from(&x[off + 1..off + 1 + p]);

            let mut u1 = block.grid.dot(&coeffs);
            u1 += mu;
            let mut u2 = block.event.dot(&coeffs);
            u2 += mu;

            value += weight * u1.iter().map(|&v| self.link.phi1(v)).sum::<f64>();
            value -= u2.iter().map(|&v| self.link.phi2(v)).sum::<f64>();
            for pb in &block.penalty {
                let c = coeffs.slice(ndarray::s![pb.offset..pb.offset + pb.k.ncols()]);
                value += 0.5 * self.eta * c.dot(&pb.k.dot(&c));
            }

            if let Some(g) = grad.as_deref_mut() {
                let w1 = Array1::from_iter(u1.iter().map(|&v| weight * self.link.dphi1(v)));
                let w2 = Array1::from_iter(u2.iter().map(|&v| self.link.dphi2(v)));
                g[off] = w1.sum() - w2.sum();
                let gc = block.grid.t().dot(&w1) - block.event.t().dot(&w2);
                let gslice = &mut g[off + 1..off + 1 + p];
                for (dst, src) in gslice.iter_mut().zip(gc.iter()) {
                    *dst = *src;
                }
                for pb in &block.penalty {
                    let c = coeffs.slice(ndarray::s![pb.offset..pb.offset + pb.k.ncols()]);
                    let kc = pb.k.dot(&c);
                    for (i, v) in kc.iter().enumerate() {
                        gslice[pb.offset + i] += self.eta * v;
                    }
                }
            }
            off += 1 + p;
        }
        value
    }
}

/// Minimize a design problem in column-scaled variables, mapping the result
/// back to the natural parametrization. The reparametrization leaves the
/// objective values unchanged.
pub(crate) fn minimize_design(
    problem: &DesignProblem,
    x0: &[f64],
    optim: &OptimOptions,
) -> Result<(Vec<f64>, crate::optimizer::OptimDiagnostics)> {
    let scales = problem.column_scales();
    let scaled_x0: Vec<f64> = x0.iter().zip(&scales).map(|(v, c)| v * c).collect();
    let bounds: Vec<Option<f64>> = problem
        .lower_bounds()
        .iter()
        .zip(&scales)
        .map(|(b, c)| b.map(|v| v * c))
        .collect();
    let opts = OptimOptions {
        lower_bounds: bounds,
        ..optim.clone()
    };
    let mut natural = vec![0.0; x0.len()];
    let (xs, diagnostics) = crate::optimizer::minimize(
        |xt, g| {
            for i in 0..xt.len() {
                natural[i] = xt[i] / scales[i];
            }
            let f = problem.value_grad(&natural, g);
            for (gi, c) in g.iter_mut().zip(&scales) {
                *gi /= *c;
            }
            f
        },
        &scaled_x0,
        &opts,
    )?;
    Ok((
        xs.iter().zip(&scales).map(|(v, c)| v / c).collect(),
        diagnostics,
    ))
}

/// Assemble the representer-form design problem from precomputed matrices.
/// With `jittered` set, each Gram penalty block gets the default spectral
/// floor before entering the quadratic form.
pub(crate) fn rkhs_design_problem(
    mats: &PrecomputedMatrices,
    link: &LinkSpec,
    eta: f64,
    jittered: bool,
) -> DesignProblem {
    let d = mats.dims();
    let mut blocks = Vec::with_capacity(d);
    for j in 0..d {
        let p = mats.counts[j] + 1;
        let grid = ndarray::concatenate(Axis(1), &[mats.q[j].view(), mats.b.view()])
            .expect("row counts agree");
        let event = ndarray::concatenate(Axis(1), &[mats.kdata[j].view(), mats.e[j].view()])
            .expect("row counts agree");
        let penalty = (0..d)
            .map(|l| {
                let k = if jittered {
                    spectral_floor(&mats.kfull[j][l], default_jitter(&mats.kfull[j][l]))
                } else {
                    mats.kfull[j][l].clone()
                };
                PenaltyBlock { offset: l * p, k }
            })
            .collect();
        let mut lower = vec![None; 1 + d * p + d];
        lower[0] = Some(0.0);
        blocks.push(DimBlock { grid, event, penalty, lower });
    }
    DesignProblem {
        horizon: mats.horizon,
        link: link_pair(link),
        eta,
        blocks,
    }
}

/// Flatten parameters in the per-dimension layout `(mu_j, a^(j.), b^(j.))`.
pub(crate) fn pack_rkhs(theta: &RkhsParams) -> Vec<f64> {
    let d = theta.dims();
    let mut x = Vec::new();
    for j in 0..d {
        x.push(theta.mu[j]);
        for l in 0..d {
            x.extend_from_slice(&theta.alpha[j][l]);
        }
        x.extend_from_slice(&theta.b[j]);
    }
    x
}

/// Inverse of [`pack_rkhs`].
pub(crate) fn unpack_rkhs(
    x: &[f64],
    kernel: crate::kernel::KernelConfig,
    anchors: EventData,
) -> Result<RkhsParams> {
    let d = anchors.dims();
    let mut mu = Vec::with_capacity(d);
    let mut alpha = Vec::with_capacity(d);
    let mut b = Vec::with_capacity(d);
    let mut off = 0;
    for j in 0..d {
        let p = anchors.count(j) + 1;
        mu.push(x[off].max(0.0));
        off += 1;
        let mut aj = Vec::with_capacity(d);
        for _ in 0..d {
            aj.push(x[off..off + p].to_vec());
            off += p;
        }
        alpha.push(aj);
        b.push(x[off..off + d].to_vec());
        off += d;
    }
    debug_assert_eq!(off, x.len());
    RkhsParams::new(mu, alpha, b, kernel, anchors)
}

fn unpack_gradient(g: &[f64], counts: &[usize]) -> RkhsGradient {
    let d = counts.len();
    let mut mu = Vec::with_capacity(d);
    let mut alpha = Vec::with_capacity(d);
    let mut b = Vec::with_capacity(d);
    let mut off = 0;
    for j in 0..d {
        let p = counts[j] + 1;
        mu.push(g[off]);
        off += 1;
        let mut aj = Vec::with_capacity(d);
        for _ in 0..d {
            aj.push(g[off..off + p].to_vec());
            off += p;
        }
        alpha.push(aj);
        b.push(g[off..off + d].to_vec());
        off += d;
    }
    RkhsGradient { mu, alpha, b }
}

/// Exact negative log-likelihood of a fitted model on (possibly new) events,
/// with the compensator integral approximated on a left-rule Riemann grid of
/// `m_score` nodes. Event intensities below [`LOG_FLOOR`] are floored inside
/// the logarithm; the second return value counts how many were.
pub fn exact_neg_log_likelihood<M: IntensityModel + ?Sized>(
    model: &M,
    events: &EventData,
    m_score: usize,
) -> Result<(f64, usize)> {
    let d = model.dims();
    if events.dims() != d {
        return Err(Error::Shape(format!(
            "model has {d} dimensions, events have {}",
            events.dims()
        )));
    }
    if m_score < 2 {
        return Err(Error::config("scoring grid must have at least 2 nodes"));
    }
    let horizon = events.horizon();
    let a = model.support();
    let mut total = 0.0;
    let mut flagged = 0usize;

    for j in 0..d {
        // compensator on the left-rule grid, with two-pointer active windows
        let mut lo = vec![0usize; d];
        let mut hi = vec![0usize; d];
        let mut integral = 0.0;
        for n in 1..=m_score {
            let tau = (n - 1) as f64 / m_score as f64 * horizon;
            let mut pre = model.baseline(j);
            for l in 0..d {
                let tl = events.times(l);
                while hi[l] < tl.len() && tl[hi[l]] < tau {
                    hi[l] += 1;
                }
                while lo[l] < hi[l] && tau - tl[lo[l]] > a {
                    lo[l] += 1;
                }
                for &ti in &tl[lo[l]..hi[l]] {
                    pre += model.interaction(j, l, tau - ti);
                }
            }
            integral += pre.max(0.0);
        }
        total += horizon / m_score as f64 * integral;

        for &tn in events.times(j) {
            let lam = pre_intensity_for(model, events, j, tn).max(0.0);
            if lam < LOG_FLOOR {
                flagged += 1;
                total -= LOG_FLOOR.ln();
            } else {
                total -= lam.ln();
            }
        }
    }
    Ok((total, flagged))
}

/// Default Riemann grid size for fitting and scoring:
/// `max(1000, 2 max_j N_j)`.
pub fn default_grid_size(events: &EventData) -> usize {
    1000.max(2 * events.max_count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelConfig;
    use crate::oracle;
    use crate::precompute::build_matrices;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_theta(rng: &mut impl Rng, ev: &EventData, kernel: KernelConfig) -> RkhsParams {
        let d = ev.dims();
        let mut theta = RkhsParams::zeros(kernel, ev.clone());
        for j in 0..d {
            theta.mu[j] = rng.random_range(0.0..0.6);
            for l in 0..d {
                theta.b[j][l] = rng.random_range(-0.3..0.3);
                for u in 0..theta.alpha[j][l].len() {
                    theta.alpha[j][l][u] = rng.random_range(-0.3..0.3);
                }
            }
        }
        theta
    }

    #[test]
    fn link_pair_values_at_zero() {
        let omega = 10.0;
        let l2 = 2.0f64.ln() / omega;
        let mle = link_pair(&LinkSpec::new(omega, Criterion::Mle).unwrap());
        assert_eq!(mle.phi1(0.0), l2);
        assert!((mle.phi2(0.0) - l2.ln()).abs() < 1e-14);
        let ls = link_pair(&LinkSpec::new(omega, Criterion::Ls).unwrap());
        assert!((ls.phi1(0.0) - l2 * l2).abs() < 1e-18);
        assert_eq!(ls.phi2(0.0), 2.0 * l2);
    }

    #[test]
    fn link_derivatives_match_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = 1e-6;
        for criterion in [Criterion::Mle, Criterion::Ls] {
            for omega in [1.0, 10.0, 100.0] {
                let pair = link_pair(&LinkSpec::new(omega, criterion).unwrap());
                for _ in 0..20 {
                    let x: f64 = rng.random_range(-2.0..2.0);
                    let fd1 = (pair.phi1(x + h) - pair.phi1(x - h)) / (2.0 * h);
                    let fd2 = (pair.phi2(x + h) - pair.phi2(x - h)) / (2.0 * h);
                    assert!(
                        (fd1 - pair.dphi1(x)).abs() <= 2e-4 * (1.0 + pair.dphi1(x).abs()),
                        "phi1' {criterion:?} omega={omega} x={x}: fd {fd1} vs {}",
                        pair.dphi1(x)
                    );
                    assert!(
                        (fd2 - pair.dphi2(x)).abs() <= 2e-4 * (1.0 + pair.dphi2(x).abs()),
                        "phi2' {criterion:?} omega={omega} x={x}: fd {fd2} vs {}",
                        pair.dphi2(x)
                    );
                }
            }
        }
    }

    #[test]
    fn objective_at_zero_parameters_closed_form() {
        let ev = EventData::new(2, 8.0, vec![vec![1.0, 3.0, 6.0], vec![2.0]]).unwrap();
        let kernel = KernelConfig { gamma: 1.0, support: 2.0 };
        let mats = build_matrices(&ev, &kernel, 16).unwrap();
        let omega = 10.0;
        let link = LinkSpec::mle(omega).unwrap();
        let cfg = ObjectiveConfig::new(link, 1.0, &mats).unwrap();
        let theta = RkhsParams::zeros(kernel, ev.clone());
        let got = objective_value(&theta, &cfg).unwrap();
        let l2 = 2.0f64.ln() / omega;
        let want = 2.0 * 8.0 * l2 - ev.total_count() as f64 * l2.ln();
        assert!((got - want).abs() <= 1e-10 * (1.0 + want.abs()));
    }

    #[test]
    fn matrix_form_matches_direct_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for trial in 0..6 {
            let d = 1 + trial % 3;
            let ev = oracle::random_instance(&mut rng, d, 5, 7.0);
            let kernel = KernelConfig {
                gamma: [1.0, 10.0, 3.0][trial % 3],
                support: 2.0,
            };
            let m = 11;
            let mats = build_matrices(&ev, &kernel, m).unwrap();
            let theta = random_theta(&mut rng, &ev, kernel);
            let eta = 0.7;
            for criterion in [Criterion::Mle, Criterion::Ls] {
                let link = LinkSpec::new(25.0, criterion).unwrap();
                let cfg = ObjectiveConfig::new(link, eta, &mats).unwrap();
                let got = objective_value(&theta, &cfg).unwrap();
                let want = oracle::direct_objective(&theta, &link, eta, m);
                assert!(
                    (got - want).abs() <= 1e-8 * (1.0 + want.abs()),
                    "{criterion:?}: matrix {got} vs loops {want}"
                );
            }
        }
    }

    #[test]
    fn eta_scaling_is_linear_in_penalty() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ev = oracle::random_instance(&mut rng, 2, 5, 6.0);
        let kernel = KernelConfig { gamma: 2.0, support: 1.5 };
        let mats = build_matrices(&ev, &kernel, 10).unwrap();
        let theta = random_theta(&mut rng, &ev, kernel);
        let link = LinkSpec::mle(50.0).unwrap();
        let eta = 0.9;
        let f1 = objective_value(&theta, &ObjectiveConfig::new(link, eta, &mats).unwrap()).unwrap();
        let f2 =
            objective_value(&theta, &ObjectiveConfig::new(link, 2.0 * eta, &mats).unwrap()).unwrap();
        // penalty at eta
        let mut quad = 0.0;
        for j in 0..2 {
            for l in 0..2 {
                let a = ndarray::Array1::from(theta.alpha[j][l].clone());
                quad += a.dot(&mats.kfull[j][l].dot(&a));
            }
        }
        assert!((f2 - f1 - 0.5 * eta * quad).abs() <= 1e-9 * (1.0 + f1.abs()));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let ev = oracle::random_instance(&mut rng, 2, 5, 6.0);
        let kernel = KernelConfig { gamma: 5.0, support: 2.0 };
        let mats = build_matrices(&ev, &kernel, 9).unwrap();
        for criterion in [Criterion::Mle, Criterion::Ls] {
            let link = LinkSpec::new(20.0, criterion).unwrap();
            let cfg = ObjectiveConfig::new(link, 0.4, &mats).unwrap();
            let theta = random_theta(&mut rng, &ev, kernel);
            let x = pack_rkhs(&theta);
            let problem = rkhs_design_problem(&mats, &link, 0.4, false);
            let mut g = vec![0.0; x.len()];
            problem.value_grad(&x, &mut g);
            let fd = oracle::fd_gradient(|y| problem.value(y), &x, 1e-6);
            for (i, (&gi, &fi)) in g.iter().zip(fd.iter()).enumerate() {
                assert!(
                    (gi - fi).abs() <= 1e-5 * (1.0 + fi.abs()),
                    "{criterion:?} coordinate {i}: analytic {gi} vs fd {fi}"
                );
            }
        }
    }

    #[test]
    fn gradient_struct_regularizer_vanishes_at_zero_alpha() {
        let ev = EventData::new(1, 5.0, vec![vec![1.0, 2.0]]).unwrap();
        let kernel = KernelConfig { gamma: 1.0, support: 1.0 };
        let mats = build_matrices(&ev, &kernel, 8).unwrap();
        let link = LinkSpec::mle(10.0).unwrap();
        let mut theta = RkhsParams::zeros(kernel, ev);
        theta.mu[0] = 0.3;
        let g_small = objective_gradient(
            &theta,
            &ObjectiveConfig::new(link, 1e-3, &mats).unwrap(),
        )
        .unwrap();
        let g_large = objective_gradient(
            &theta,
            &ObjectiveConfig::new(link, 1e3, &mats).unwrap(),
        )
        .unwrap();
        // with alpha = 0 the penalty gradient is exactly zero, so eta is inert
        assert_eq!(g_small.alpha, g_large.alpha);
        assert_eq!(g_small.mu, g_large.mu);
    }

    #[test]
    fn ls_and_mle_gradients_differ() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ev = oracle::random_instance(&mut rng, 2, 4, 5.0);
        let kernel = KernelConfig { gamma: 1.0, support: 1.0 };
        let mats = build_matrices(&ev, &kernel, 8).unwrap();
        let theta = random_theta(&mut rng, &ev, kernel);
        let g1 = objective_gradient(
            &theta,
            &ObjectiveConfig::new(LinkSpec::mle(10.0).unwrap(), 0.5, &mats).unwrap(),
        )
        .unwrap();
        let g2 = objective_gradient(
            &theta,
            &ObjectiveConfig::new(LinkSpec::new(10.0, Criterion::Ls).unwrap(), 0.5, &mats).unwrap(),
        )
        .unwrap();
        assert_ne!(g1.mu, g2.mu);
    }

    #[test]
    fn shape_mismatch_detected() {
        let ev1 = EventData::new(1, 5.0, vec![vec![1.0]]).unwrap();
        let ev2 = EventData::new(1, 5.0, vec![vec![1.0, 2.0]]).unwrap();
        let kernel = KernelConfig { gamma: 1.0, support: 1.0 };
        let mats = build_matrices(&ev2, &kernel, 8).unwrap();
        let theta = RkhsParams::zeros(kernel, ev1);
        let cfg = ObjectiveConfig::new(LinkSpec::mle(10.0).unwrap(), 1.0, &mats).unwrap();
        assert!(matches!(objective_value(&theta, &cfg), Err(Error::Shape(_))));
    }

    #[test]
    fn midpoint_convexity_for_mle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ev = oracle::random_instance(&mut rng, 2, 6, 7.0);
        let kernel = KernelConfig { gamma: 2.0, support: 2.0 };
        let mats = build_matrices(&ev, &kernel, 12).unwrap();
        let link = LinkSpec::mle(30.0).unwrap();
        let problem = rkhs_design_problem(&mats, &link, 0.8, false);
        let n = problem.n_params();
        for _ in 0..10 {
            let x1: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
            let x2: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
            let mid: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| 0.5 * (a + b)).collect();
            let fm = problem.value(&mid);
            let avg = 0.5 * (problem.value(&x1) + problem.value(&x2));
            assert!(
                fm <= avg + 1e-10 * (1.0 + avg.abs()),
                "midpoint convexity violated: {fm} > {avg}"
            );
        }
    }

    #[test]
    fn homogeneous_poisson_likelihood_closed_form() {
        let ev = EventData::new(2, 10.0, vec![vec![1.0, 4.0, 7.5], vec![2.0, 9.0]]).unwrap();
        let kernel = KernelConfig { gamma: 1.0, support: 1.0 };
        let mu = 0.8;
        let mut theta = RkhsParams::zeros(kernel, ev.clone());
        theta.mu = vec![mu, mu];
        let (got, flags) = exact_neg_log_likelihood(&theta, &ev, 5000).unwrap();
        let want = 2.0 * mu * 10.0 - ev.total_count() as f64 * mu.ln();
        assert_eq!(flags, 0);
        assert!((got - want).abs() <= 1e-10 * want.abs());
    }

    #[test]
    fn zero_intensity_events_are_floored_and_flagged() {
        let ev = EventData::new(1, 5.0, vec![vec![1.0, 2.0]]).unwrap();
        let kernel = KernelConfig { gamma: 1.0, support: 1.0 };
        let theta = RkhsParams::zeros(kernel, ev.clone()); // mu = 0 so every event has zero intensity
        let (value, flags) = exact_neg_log_likelihood(&theta, &ev, 1000).unwrap();
        assert_eq!(flags, 2);
        assert!(value.is_finite());
        assert!((value - (0.0 - 2.0 * LOG_FLOOR.ln())).abs() < 1e-9);
    }

    #[test]
    fn scoring_grid_refinement_stays_within_one_percent() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let ev = oracle::random_instance(&mut rng, 2, 8, 10.0);
        let kernel = KernelConfig { gamma: 2.0, support: 2.0 };
        let theta = random_theta(&mut rng, &ev, kernel);
        let m = default_grid_size(&ev);
        let (a, _) = exact_neg_log_likelihood(&theta, &ev, m).unwrap();
        let (b, _) = exact_neg_log_likelihood(&theta, &ev, 2 * m).unwrap();
        assert!((a - b).abs() <= 0.01 * b.abs().max(1.0), "a={a} b={b}");
    }

    #[test]
    fn scoring_dims_mismatch_is_shape_error() {
        let ev1 = EventData::new(1, 5.0, vec![vec![1.0]]).unwrap();
        let ev2 = EventData::new(2, 5.0, vec![vec![1.0], vec![]]).unwrap();
        let theta = RkhsParams::zeros(KernelConfig { gamma: 1.0, support: 1.0 }, ev1);
        assert!(matches!(
            exact_neg_log_likelihood(&theta, &ev2, 100),
            Err(Error::Shape(_))
        ));
    }
}
