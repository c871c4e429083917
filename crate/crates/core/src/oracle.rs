//! Reference implementations backing the test suites.
//!
//! Everything in this module is deliberately written along a different path
//! than the production code: brute-force nested sums instead of windowed
//! sums, panel quadrature instead of closed forms, series/continued-fraction
//! evaluation instead of rational approximation. Tests compare the two paths.
//!
//! Not part of the public API surface; exposed so integration and acceptance
//! suites can reuse one set of oracles.

#![doc(hidden)]

use crate::events::EventData;
use crate::kernel::{gauss_kernel, KernelConfig};
use crate::model::{LinkSpec, RkhsParams};
use crate::objective::link_pair;

/// Maclaurin-series / continued-fraction evaluation of erf, accurate to
/// well below 1e-13 everywhere. 60 series terms are used below the switch
/// point; a Lentz continued fraction for erfc above it.
pub fn erf_reference(x: f64) -> f64 {
    const SQRT_PI: f64 = 1.772_453_850_905_516;
    let y = x.abs();
    if y <= 3.0 {
        // erf(y) = (2/sqrt(pi)) sum_{n>=0} (-1)^n y^(2n+1) / (n! (2n+1))
        let mut term = y;
        let mut sum = 0.0;
        for n in 0..60 {
            sum += term / (2 * n + 1) as f64;
            term *= -y * y / (n + 1) as f64;
        }
        let r = 2.0 / SQRT_PI * sum;
        return if x < 0.0 { -r } else { r };
    }
    // erfc(y) = exp(-y^2)/sqrt(pi) * 1/(y + (1/2)/(y + 1/(y + (3/2)/(y + ...))))
    // evaluated with the modified Lentz algorithm.
    let tiny = 1e-300;
    let mut f = y;
    let mut c = y;
    let mut d = 0.0;
    for k in 1..200 {
        let a = k as f64 / 2.0;
        d = y + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = y + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    let erfc = (-y * y).exp() / SQRT_PI / f;
    let r = 1.0 - erfc;
    if x < 0.0 {
        -r
    } else {
        r
    }
}

const GL8_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL8_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Composite 8-point Gauss-Legendre integration with panel width at most
/// `max_panel`. The integrand must be smooth on `[a, b]`.
pub fn integrate_smooth(f: impl Fn(f64) -> f64, a: f64, b: f64, max_panel: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = ((b - a) / max_panel).ceil().max(1.0) as usize;
    let h = (b - a) / n as f64;
    let mut total = 0.0;
    for p in 0..n {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let half = 0.5 * h;
        let mut panel = 0.0;
        for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
            panel += w * f(mid + half * x);
        }
        total += panel * half;
    }
    total
}

/// Panel integration split at the given interior breakpoints (where the
/// integrand may be discontinuous or non-smooth).
pub fn integrate_with_breaks(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    max_panel: f64,
) -> f64 {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(|u, v| u.partial_cmp(v).unwrap());
    pts.dedup();
    let mut total = 0.0;
    for w in pts.windows(2) {
        total += integrate_smooth(&f, w[0], w[1], max_panel);
    }
    total
}

/// Panel width fine enough for Gaussian integrands at inverse squared
/// length-scale `gamma`.
pub fn gauss_panel(gamma: f64) -> f64 {
    (0.25 / gamma.sqrt()).min(0.25)
}

/// Brute-force `s(x, y)` over all event pairs with explicit indicators.
pub fn s_ell_loop(x: f64, y: f64, events: &[f64], cfg: &KernelConfig) -> f64 {
    let mut sum = 0.0;
    for &ti in events {
        let wx = x - ti;
        if !(wx > 0.0 && wx <= cfg.support) {
            continue;
        }
        for &tv in events {
            let wy = y - tv;
            if wy > 0.0 && wy <= cfg.support {
                sum += gauss_kernel(wx, wy, cfg);
            }
        }
    }
    sum
}

/// Brute-force `q_u(x)`.
pub fn q_ujl_loop(x: f64, t_u: f64, events: &[f64], cfg: &KernelConfig) -> f64 {
    let mut sum = 0.0;
    for &tv in events {
        let w = t_u - tv;
        if w > 0.0 && w <= cfg.support {
            sum += gauss_kernel(x, w, cfg);
        }
    }
    sum
}

/// Quadrature of `t -> s(x, t)` over `[0, T]`, splitting panels at the
/// indicator breakpoints `T_v` and `T_v + A`.
pub fn int_s_quad(x: f64, horizon: f64, events: &[f64], cfg: &KernelConfig) -> f64 {
    let mut breaks = Vec::with_capacity(2 * events.len());
    for &t in events {
        breaks.push(t);
        breaks.push(t + cfg.support);
    }
    integrate_with_breaks(
        |t| s_ell_loop(x, t, events, cfg),
        0.0,
        horizon,
        &breaks,
        gauss_panel(cfg.gamma),
    )
}

/// Quadrature of `sum_v integral k(x, u) du` over `u in (0, c_v]`.
pub fn r_ell_quad(x: f64, horizon: f64, events: &[f64], cfg: &KernelConfig) -> f64 {
    let mut sum = 0.0;
    for &tv in events {
        let c = (horizon - tv).min(cfg.support).max(0.0);
        sum += integrate_smooth(|u| gauss_kernel(x, u, cfg), 0.0, c, gauss_panel(cfg.gamma));
    }
    sum
}

/// Two-dimensional integral of `s` over `[0, T]^2`, reduced per event pair to
/// a one-dimensional integral through the substitution `s = u - w`:
/// `int_0^ci int_0^cv k(u - w) du dw = int e^{-g s^2} L(s) ds` where `L` is
/// the (piecewise-linear) overlap length. Independent of the closed forms.
pub fn double_int_s_quad(horizon: f64, events: &[f64], cfg: &KernelConfig) -> f64 {
    let gamma = cfg.gamma;
    let mut total = 0.0;
    for &ti in events {
        let ci = (horizon - ti).min(cfg.support).max(0.0);
        for &tv in events {
            let cv = (horizon - tv).min(cfg.support).max(0.0);
            if ci == 0.0 || cv == 0.0 {
                continue;
            }
            let overlap = |s: f64| (ci - s).min(cv) - (-s).max(0.0);
            let f = |s: f64| {
                let l = overlap(s);
                if l > 0.0 {
                    (-gamma * s * s).exp() * l
                } else {
                    0.0
                }
            };
            let breaks = [0.0, ci - cv];
            total += integrate_with_breaks(f, -cv, ci, &breaks, gauss_panel(gamma));
        }
    }
    total
}

/// The approximated objective evaluated by its displayed definition: nested
/// loops over grid points and events with pointwise evaluation of the
/// representer functions, plus the penalty from pointwise Gram entries.
pub fn direct_objective(theta: &RkhsParams, link: &LinkSpec, eta: f64, m: usize) -> f64 {
    use crate::kernel::{double_int_s, int_s, q_ujl_at, r_ell_at, s_ell};

    let anchors = theta.anchors();
    let d = anchors.dims();
    let horizon = anchors.horizon();
    let cfg = &theta.kernel;
    let pair = link_pair(link);

    // h_{jl}(x) by its definition
    let h_at = |j: usize, l: usize, x: f64| -> f64 {
        let a = &theta.alpha[j][l];
        let mut v = a[0] * r_ell_at(x, horizon, anchors.times(l), cfg);
        for (u, &t_u) in anchors.times(j).iter().enumerate() {
            v += a[u + 1] * q_ujl_at(x, t_u, anchors.times(l), cfg);
        }
        v
    };

    let pre = |j: usize, t: f64| -> f64 {
        let mut acc = theta.mu[j];
        for l in 0..d {
            for &ti in anchors.times(l) {
                let w = t - ti;
                if w > 0.0 && w <= cfg.support {
                    acc += h_at(j, l, w) + theta.b[j][l];
                }
            }
        }
        acc
    };

    let mut value = 0.0;
    for j in 0..d {
        let mut grid_term = 0.0;
        for n in 1..=m {
            let tau = (n - 1) as f64 / m as f64 * horizon;
            grid_term += pair.phi1(pre(j, tau));
        }
        value += horizon / m as f64 * grid_term;
        for &tn in anchors.times(j) {
            value -= pair.phi2(pre(j, tn));
        }
    }

    // penalty via pointwise Gram entries
    for j in 0..d {
        let tj = anchors.times(j);
        for l in 0..d {
            let tl = anchors.times(l);
            let a = &theta.alpha[j][l];
            let n = tj.len();
            let gram = |r: usize, c: usize| -> f64 {
                match (r, c) {
                    (0, 0) => double_int_s(horizon, tl, cfg),
                    (0, u) => int_s(tj[u - 1], horizon, tl, cfg),
                    (r, 0) => int_s(tj[r - 1], horizon, tl, cfg),
                    (r, u) => s_ell(tj[r - 1], tj[u - 1], tl, cfg),
                }
            };
            let mut quad = 0.0;
            for r in 0..=n {
                for c in 0..=n {
                    quad += a[r] * a[c] * gram(r, c);
                }
            }
            value += 0.5 * eta * quad;
        }
    }
    value
}

/// Central finite-difference gradient with per-coordinate step
/// `h_i = rel_step * max(1, |x_i|)`.
pub fn fd_gradient(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], rel_step: f64) -> Vec<f64> {
    let mut grad = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let h = rel_step * x[i].abs().max(1.0);
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        grad[i] = (fp - fm) / (2.0 * h);
    }
    grad
}

/// Deterministic small random instance generator for oracle comparisons.
pub fn random_instance(
    rng: &mut impl rand::Rng,
    dims: usize,
    max_events_per_dim: usize,
    horizon: f64,
) -> EventData {
    let mut times = Vec::with_capacity(dims);
    for _ in 0..dims {
        let n = rng.random_range(0..=max_events_per_dim);
        let mut seq: Vec<f64> = (0..n)
            .map(|_| rng.random_range(0.001..=1.0) * horizon)
            .collect();
        seq.sort_by(|a, b| a.partial_cmp(b).unwrap());
        seq.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        times.push(seq);
    }
    EventData::new(dims, horizon, times).expect("generated instance must be valid")
}
