//! Gaussian reproducing kernel and the aggregated kernel sums with closed-form
//! integrals.
//!
//! The kernel is `k(x, y) = exp(-gamma (x - y)^2)` and interaction functions
//! have bounded support `[0, A]`. For a sorted event sequence `T_1 < ... < T_N`
//! of one dimension, the workhorse is
//!
//! ```text
//! s(x, y) = sum_{i,v} k(x - T_i, y - T_v) 1{0 < x - T_i <= A} 1{0 < y - T_v <= A},
//! ```
//!
//! whose single and double integrals over the observation window `[0, T]`
//! reduce to the scaled error function `erf_g(x) = erf(sqrt(g) x) / sqrt(g)`
//! and its antiderivative `G_g(x) = x erf_g(x) + (exp(-g x^2) - 1) / (g sqrt(pi))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SQRT_PI: f64 = 1.772_453_850_905_516;

/// Gaussian kernel parameters: inverse squared length-scale and the support
/// bound of the interaction functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    /// Inverse squared length-scale, `gamma > 0`.
    pub gamma: f64,
    /// Interaction support bound `A > 0`, in time units.
    pub support: f64,
}

impl KernelConfig {
    pub fn new(gamma: f64, support: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::config(format!("gamma must be positive, got {gamma}")));
        }
        if !(support > 0.0) || !support.is_finite() {
            return Err(Error::config(format!("support must be positive, got {support}")));
        }
        Ok(KernelConfig { gamma, support })
    }
}

/// `k(x, y) = exp(-gamma (x - y)^2)`, bounded by 1.
#[inline]
pub fn gauss_kernel(x: f64, y: f64, cfg: &KernelConfig) -> f64 {
    let d = x - y;
    (-cfg.gamma * d * d).exp()
}

// Rational Chebyshev approximation of erf/erfc after W. J. Cody,
// "Rational Chebyshev approximation for the error function" (1969);
// coefficients from the NETLIB SPECFUN CALERF routine. Relative accuracy
// is a few ulps over the whole range.

const ERF_A: [f64; 5] = [
    3.161_123_743_870_565_6e0,
    1.138_641_541_510_501_56e2,
    3.774_852_376_853_020_2e2,
    3.209_377_589_138_469_47e3,
    1.857_777_061_846_031_53e-1,
];
const ERF_B: [f64; 4] = [
    2.360_129_095_234_412_09e1,
    2.440_246_379_344_441_73e2,
    1.282_616_526_077_372_28e3,
    2.844_236_833_439_170_62e3,
];
const ERF_C: [f64; 9] = [
    5.641_884_969_886_700_9e-1,
    8.883_149_794_388_375_94e0,
    6.611_919_063_714_162_95e1,
    2.986_351_381_974_001_31e2,
    8.819_522_212_417_690_9e2,
    1.712_047_612_634_070_58e3,
    2.051_078_377_826_071_47e3,
    1.230_339_354_797_997_25e3,
    2.153_115_354_744_038_46e-8,
];
const ERF_D: [f64; 8] = [
    1.574_492_611_070_983_47e1,
    1.176_939_508_913_124_99e2,
    5.371_811_018_620_098_58e2,
    1.621_389_574_566_690_19e3,
    3.290_799_235_733_459_63e3,
    4.362_619_090_143_247_16e3,
    3.439_367_674_143_721_64e3,
    1.230_339_354_803_749_42e3,
];
const ERF_P: [f64; 6] = [
    3.053_266_349_612_323_44e-1,
    3.603_448_999_498_044_39e-1,
    1.257_817_261_112_292_46e-1,
    1.608_378_514_874_227_66e-2,
    6.587_491_615_298_378_03e-4,
    1.631_538_713_730_209_78e-2,
];
const ERF_Q: [f64; 5] = [
    2.568_520_192_289_822_42e0,
    1.872_952_849_923_460_47e0,
    5.279_051_029_514_284_12e-1,
    6.051_834_131_244_131_91e-2,
    2.335_204_976_268_691_85e-3,
];
const FRAC_1_SQRT_PI: f64 = 5.641_895_835_477_562_9e-1;

/// Gauss error function, accurate to a few ulps.
pub fn erf(x: f64) -> f64 {
    let y = x.abs();
    if y <= 0.468_75 {
        let ysq = if y > 1.11e-16 { y * y } else { 0.0 };
        let mut num = ERF_A[4] * ysq;
        let mut den = ysq;
        for i in 0..3 {
            num = (num + ERF_A[i]) * ysq;
            den = (den + ERF_B[i]) * ysq;
        }
        return x * (num + ERF_A[3]) / (den + ERF_B[3]);
    }
    let r = erfc_positive(y);
    let res = (0.5 - r) + 0.5;
    if x < 0.0 {
        -res
    } else {
        res
    }
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x.abs() <= 0.468_75 {
        return 1.0 - erf(x);
    }
    if x < 0.0 {
        2.0 - erfc_positive(-x)
    } else {
        erfc_positive(x)
    }
}

/// `erfc(y)` for `y > 0.46875`.
fn erfc_positive(y: f64) -> f64 {
    if y > 26.543 {
        return 0.0;
    }
    let result = if y <= 4.0 {
        let mut num = ERF_C[8] * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + ERF_C[i]) * y;
            den = (den + ERF_D[i]) * y;
        }
        (num + ERF_C[7]) / (den + ERF_D[7])
    } else {
        let ysq = 1.0 / (y * y);
        let mut num = ERF_P[5] * ysq;
        let mut den = ysq;
        for i in 0..4 {
            num = (num + ERF_P[i]) * ysq;
            den = (den + ERF_Q[i]) * ysq;
        }
        let r = ysq * (num + ERF_P[4]) / (den + ERF_Q[4]);
        (FRAC_1_SQRT_PI - r) / y
    };
    // exp(-y^2) split as exp(-ysq^2) exp(-del) for accuracy at large y
    let ysq = (y * 16.0).trunc() / 16.0;
    let del = (y - ysq) * (y + ysq);
    (-ysq * ysq).exp() * (-del).exp() * result
}

/// Scaled error function `erf_g(x) = erf(sqrt(g) x) / sqrt(g)`; odd in `x`,
/// with derivative `(2 / sqrt(pi)) exp(-g x^2)`.
#[inline]
pub fn erf_gamma(x: f64, gamma: f64) -> f64 {
    let s = gamma.sqrt();
    erf(s * x) / s
}

/// Antiderivative of [`erf_gamma`] vanishing at 0:
/// `G_g(x) = x erf_g(x) + (exp(-g x^2) - 1) / (g sqrt(pi))`. Even in `x`.
#[inline]
pub fn g_gamma(x: f64, gamma: f64) -> f64 {
    x * erf_gamma(x, gamma) + ((-gamma * x * x).exp() - 1.0) / (gamma * SQRT_PI)
}

/// Indices of events active at `x`, i.e. with `0 < x - T_i <= A`. The
/// comparisons are the exact scalar indicator tests, so boundary cases
/// (`x - T_i` exactly 0 or exactly `A`) resolve the same way everywhere.
#[inline]
pub(crate) fn active_range(events: &[f64], x: f64, support: f64) -> std::ops::Range<usize> {
    let lo = events.partition_point(|&t| x - t > support);
    let hi = events.partition_point(|&t| x - t > 0.0);
    lo..hi.max(lo)
}

/// `min(T - t, A)` clamped below at zero, the effective upper integration
/// bound contributed by an event at `t`.
#[inline]
pub(crate) fn clamped_support(horizon: f64, t: f64, support: f64) -> f64 {
    (horizon - t).min(support).max(0.0)
}

/// Number of events whose support window lies entirely inside `[0, T]`,
/// i.e. with `T - t >= A`. Events are sorted, so this is a prefix count.
#[inline]
fn full_support_count(events: &[f64], horizon: f64, support: f64) -> usize {
    events.partition_point(|&t| horizon - t >= support)
}

/// Aggregated kernel `s(x, y)`; symmetric in `(x, y)` (bitwise, via a
/// canonical argument order) and zero when no event is active at `x` or `y`.
pub fn s_ell(x: f64, y: f64, events: &[f64], cfg: &KernelConfig) -> f64 {
    let (x, y) = if x <= y { (x, y) } else { (y, x) };
    let wx = active_range(events, x, cfg.support);
    let wy = active_range(events, y, cfg.support);
    let mut sum = 0.0;
    for &ti in &events[wx] {
        let a = x - ti;
        for &tv in &events[wy.clone()] {
            sum += gauss_kernel(a, y - tv, cfg);
        }
    }
    sum
}

/// Pointwise evaluation of the Riesz representer
/// `r(x) = sum_v integral_0^T k(x, t - T_v) 1{0 < t - T_v <= A} dt`,
/// in closed form `(sqrt(pi)/2) sum_v [erf_g(c_v - x) + erf_g(x)]` with
/// `c_v = min(T - T_v, A)`.
pub fn r_ell_at(x: f64, horizon: f64, events: &[f64], cfg: &KernelConfig) -> f64 {
    let n = events.len();
    if n == 0 {
        return 0.0;
    }
    let g = cfg.gamma;
    let n_full = full_support_count(events, horizon, cfg.support);
    let mut sum = n_full as f64 * erf_gamma(cfg.support - x, g);
    for &t in &events[n_full..] {
        sum += erf_gamma(clamped_support(horizon, t, cfg.support) - x, g);
    }
    sum += n as f64 * erf_gamma(x, g);
    0.5 * SQRT_PI * sum
}

/// Closed form of `integral_0^T s(x, t) dt`, equal to the sum of `r` evaluated
/// at the active lags of `x`.
pub fn int_s(x: f64, horizon: f64, events: &[f64], cfg: &KernelConfig) -> f64 {
    let w = active_range(events, x, cfg.support);
    let mut sum = 0.0;
    for &ti in &events[w] {
        sum += r_ell_at(x - ti, horizon, events, cfg);
    }
    sum
}

/// Closed form of `integral_0^T integral_0^T s(t, t') dt dt'`:
/// `(sqrt(pi)/2) sum_{i,v} [2 G_g(c_v) - G_g(c_v - c_i)]`.
pub fn double_int_s(horizon: f64, events: &[f64], cfg: &KernelConfig) -> f64 {
    let n = events.len();
    if n == 0 {
        return 0.0;
    }
    let g = cfg.gamma;
    let n_full = full_support_count(events, horizon, cfg.support);
    let tail: Vec<f64> = events[n_full..]
        .iter()
        .map(|&t| clamped_support(horizon, t, cfg.support))
        .collect();

    let mut sum_g = n_full as f64 * g_gamma(cfg.support, g);
    for &c in &tail {
        sum_g += g_gamma(c, g);
    }

    // sum over (i, v) of G(c_v - c_i): zero for full-full pairs (G(0) = 0),
    // and G is even so full-tail and tail-full pairs coincide.
    let mut cross = 0.0;
    for &c in &tail {
        cross += g_gamma(c - cfg.support, g);
    }
    let mut tail_tail = 0.0;
    for &cv in &tail {
        for &ci in &tail {
            tail_tail += g_gamma(cv - ci, g);
        }
    }
    let pair_sum = 2.0 * n_full as f64 * cross + tail_tail;

    0.5 * SQRT_PI * (2.0 * n as f64 * sum_g - pair_sum)
}

/// Pointwise evaluation of the event-anchored basis function
/// `q_u(x) = sum_v k(x, T_u - T_v) 1{0 < T_u - T_v <= A}`.
pub fn q_ujl_at(x: f64, t_u: f64, events: &[f64], cfg: &KernelConfig) -> f64 {
    let w = active_range(events, t_u, cfg.support);
    let mut sum = 0.0;
    for &tv in &events[w] {
        sum += gauss_kernel(x, t_u - tv, cfg);
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    const CFG1: KernelConfig = KernelConfig { gamma: 1.0, support: 1.0 };

    #[test]
    fn kernel_at_zero_distance_is_one() {
        for g in [0.5, 1.0, 100.0] {
            let cfg = KernelConfig { gamma: g, support: 1.0 };
            assert_eq!(gauss_kernel(2.5, 2.5, &cfg), 1.0);
        }
    }

    #[test]
    fn kernel_unit_distance() {
        assert!((gauss_kernel(1.0, 2.0, &CFG1) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn kernel_symmetric_and_bounded() {
        let cfg = KernelConfig { gamma: 7.0, support: 2.0 };
        for (x, y) in [(0.1, 0.9), (-3.0, 2.0), (5.0, 5.5)] {
            let a = gauss_kernel(x, y, &cfg);
            assert_eq!(a, gauss_kernel(y, x, &cfg));
            assert!(a > 0.0 && a <= 1.0);
        }
    }

    #[test]
    fn erf_matches_series_oracle() {
        let mut x = -6.0;
        while x <= 6.0 {
            let want = oracle::erf_reference(x);
            let got = erf(x);
            assert!(
                (got - want).abs() <= 1e-12 * want.abs().max(1e-3),
                "erf({x}): got {got}, want {want}"
            );
            x += 0.0625;
        }
        assert_eq!(erf(0.0), 0.0);
        assert!((erf(26.0) - 1.0).abs() < 1e-15);
        assert!((erfc(1.3) - (1.0 - erf(1.3))).abs() < 1e-15);
    }

    #[test]
    fn erf_gamma_basics() {
        assert_eq!(erf_gamma(0.0, 3.0), 0.0);
        // saturation
        assert!((erf_gamma(10.0, 1.0) - 1.0).abs() < 1e-12);
        // gamma = 4, x = 0.5 -> erf(1)/2
        let want = 0.5 * erf(1.0);
        assert!((erf_gamma(0.5, 4.0) - want).abs() < 1e-15);
        // odd
        for x in [0.3, 1.7, 4.0] {
            assert_eq!(erf_gamma(-x, 2.0), -erf_gamma(x, 2.0));
        }
    }

    #[test]
    fn erf_gamma_derivative_matches_fd() {
        let h = 1e-5;
        for gamma in [1.0, 10.0, 100.0] {
            for x in [-1.2, -0.3, 0.0, 0.4, 1.5] {
                let fd = (erf_gamma(x + h, gamma) - erf_gamma(x - h, gamma)) / (2.0 * h);
                let want = 2.0 / SQRT_PI * (-gamma * x * x).exp();
                assert!(
                    (fd - want).abs() <= 1e-6 * (1.0 + want.abs()),
                    "gamma={gamma} x={x}: fd={fd} want={want}"
                );
            }
        }
    }

    #[test]
    fn g_gamma_basics() {
        assert_eq!(g_gamma(0.0, 5.0), 0.0);
        for x in [0.2, 1.0, 3.5] {
            assert_eq!(g_gamma(-x, 5.0), g_gamma(x, 5.0));
        }
    }

    #[test]
    fn g_gamma_matches_quadrature_of_erf_gamma() {
        let want = oracle::integrate_smooth(|t| erf_gamma(t, 1.0), 0.0, 0.7, 0.05);
        assert!((g_gamma(0.7, 1.0) - want).abs() < 1e-10);
        let want = oracle::integrate_smooth(|t| erf_gamma(t, 50.0), 0.0, 2.0, 0.02);
        assert!((g_gamma(2.0, 50.0) - want).abs() < 1e-10);
    }

    #[test]
    fn g_gamma_fd_derivative_is_erf_gamma() {
        let h = 1e-5;
        for gamma in [1.0, 10.0, 100.0] {
            for x in [-1.0, 0.1, 0.9, 2.0] {
                let fd = (g_gamma(x + h, gamma) - g_gamma(x - h, gamma)) / (2.0 * h);
                let want = erf_gamma(x, gamma);
                assert!(
                    (fd - want).abs() <= 1e-6 * (1.0 + want.abs()),
                    "gamma={gamma} x={x}"
                );
            }
        }
    }

    #[test]
    fn s_ell_empty_and_single() {
        let cfg = KernelConfig { gamma: 2.0, support: 1.0 };
        assert_eq!(s_ell(0.5, 0.7, &[], &cfg), 0.0);
        // event active at both arguments
        let ev = [1.0];
        let got = s_ell(1.4, 1.9, &ev, &cfg);
        let want = gauss_kernel(0.4, 0.9, &cfg);
        assert_eq!(got, want);
        // no active event at x
        assert_eq!(s_ell(0.5, 1.5, &ev, &cfg), 0.0);
    }

    #[test]
    fn s_ell_matches_brute_force_and_is_symmetric() {
        let cfg = KernelConfig { gamma: 3.0, support: 2.0 };
        let ev = [0.4, 1.1, 2.9];
        for (x, y) in [(1.2, 3.0), (2.0, 2.0), (0.41, 4.8), (3.1, 1.3)] {
            let got = s_ell(x, y, &ev, &cfg);
            let want = oracle::s_ell_loop(x, y, &ev, &cfg);
            assert!((got - want).abs() <= 1e-14 * (1.0 + want.abs()));
            assert_eq!(got, s_ell(y, x, &ev, &cfg));
        }
    }

    #[test]
    fn active_range_boundaries_exact() {
        let ev = [1.0, 2.0, 3.0];
        // x - T = A exactly is active; x - T = 0 is not
        let r = active_range(&ev, 2.0, 1.0);
        assert_eq!(&ev[r], &[1.0]);
        let r = active_range(&ev, 3.0, 1.0);
        assert_eq!(&ev[r], &[2.0]);
    }

    #[test]
    fn int_s_no_events_or_inactive() {
        let cfg = KernelConfig { gamma: 1.0, support: 1.0 };
        assert_eq!(int_s(0.5, 10.0, &[], &cfg), 0.0);
        // single event, x not active
        assert_eq!(int_s(0.5, 10.0, &[2.0], &cfg), 0.0);
    }

    #[test]
    fn int_s_matches_quadrature() {
        let cfg = KernelConfig { gamma: 4.0, support: 2.0 };
        let ev = [0.7, 1.5, 6.2];
        for x in [1.0, 2.2, 6.9] {
            let got = int_s(x, 8.0, &ev, &cfg);
            let want = oracle::int_s_quad(x, 8.0, &ev, &cfg);
            assert!(
                (got - want).abs() <= 1e-8 * (1.0 + want.abs()),
                "x={x}: got {got} want {want}"
            );
        }
    }

    #[test]
    fn double_int_s_empty_and_single() {
        let cfg = KernelConfig { gamma: 2.0, support: 1.5 };
        assert_eq!(double_int_s(5.0, &[], &cfg), 0.0);
        // one event with full support: closed form reduces to one pair term
        let got = double_int_s(10.0, &[1.0], &cfg);
        let want = 0.5 * SQRT_PI * 2.0 * g_gamma(cfg.support, cfg.gamma);
        assert!((got - want).abs() < 1e-14 * want.abs());
        let quad = oracle::double_int_s_quad(10.0, &[1.0], &cfg);
        assert!((got - quad).abs() <= 1e-8 * (1.0 + quad.abs()));
    }

    #[test]
    fn double_int_s_matches_quadrature() {
        let cfg = KernelConfig { gamma: 1.0, support: 2.0 };
        let ev = [0.5, 2.0, 6.5, 7.6];
        let got = double_int_s(8.0, &ev, &cfg);
        let want = oracle::double_int_s_quad(8.0, &ev, &cfg);
        assert!(
            (got - want).abs() <= 1e-6 * (1.0 + want.abs()),
            "got {got} want {want}"
        );
        assert!(got >= 0.0);
    }

    #[test]
    fn r_ell_one_event_midpoint() {
        let cfg = KernelConfig { gamma: 2.0, support: 3.0 };
        // T - T_1 >= A so c = A; r(A/2) = sqrt(pi)/2 * 2 erf_g(A/2)
        let got = r_ell_at(1.5, 10.0, &[1.0], &cfg);
        let want = 0.5 * SQRT_PI * 2.0 * erf_gamma(1.5, 2.0);
        assert!((got - want).abs() < 1e-14 * want.abs());
    }

    #[test]
    fn r_ell_matches_quadrature() {
        let cfg = KernelConfig { gamma: 10.0, support: 2.0 };
        let ev = [0.3, 1.4, 7.1];
        for x in [0.0, 0.6, 1.9, 2.0] {
            let got = r_ell_at(x, 8.0, &ev, &cfg);
            let want = oracle::r_ell_quad(x, 8.0, &ev, &cfg);
            assert!(
                (got - want).abs() <= 1e-8 * (1.0 + want.abs()),
                "x={x}: got {got} want {want}"
            );
        }
        assert_eq!(r_ell_at(0.5, 8.0, &[], &cfg), 0.0);
    }

    #[test]
    fn q_ujl_basics() {
        let cfg = KernelConfig { gamma: 5.0, support: 1.0 };
        let ev = [1.0, 1.5, 4.0];
        // t_u before all events
        assert_eq!(q_ujl_at(0.3, 0.5, &ev, &cfg), 0.0);
        // single active event
        let got = q_ujl_at(0.2, 1.8, &ev, &cfg);
        let want = gauss_kernel(0.2, 0.8, &cfg) + gauss_kernel(0.2, 0.3, &cfg);
        assert!((got - want).abs() < 1e-15);
        // brute force
        let got = q_ujl_at(0.9, 4.6, &ev, &cfg);
        let want = oracle::q_ujl_loop(0.9, 4.6, &ev, &cfg);
        assert_eq!(got, want);
    }
}
