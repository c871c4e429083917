//! Exact simulation of nonlinear Hawkes processes by thinning, the built-in
//! ground-truth kernel library, and time-rescaling goodness-of-fit residuals.
//!
//! The sampler draws candidate times from a piecewise-constant dominating
//! rate and accepts with probability `lambda(t) / lambda_bar`. The dominating
//! rate after each step is
//!
//! ```text
//! lambda_bar = sum_j max(0, mu_j + sum_l n_l * sup g+_{jl}),
//! ```
//!
//! where `n_l` counts the dimension-`l` events in the trailing support window
//! and `sup g+` is a validated upper bound of the positive part of each
//! interaction. Counts cannot grow between candidates and the ReLU link is
//! monotone, so the bound dominates until the next accepted event; a runtime
//! assertion verifies it at every candidate.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::EventData;
use crate::kernel::active_range;
use crate::model::{intensity_for, IntensityModel};

/// Evaluable interaction curve, composable from named primitives. The
/// primitives and combinators are sufficient to express piecewise-defined
/// kernels mixing polynomial, exponential, Gaussian and damped-cosine parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Curve {
    Constant { value: f64 },
    /// `c_0 + c_1 t + c_2 t^2 + ...`
    Polynomial { coeffs: Vec<f64> },
    /// `amplitude * exp(-rate t)`
    ExpDecay { amplitude: f64, rate: f64 },
    /// `amplitude * exp(-rate (t - center)^2)`
    GaussianBump { amplitude: f64, rate: f64, center: f64 },
    /// `amplitude * (1 + cos(angular_freq t)) * exp(-decay t)`
    CosineDamped { amplitude: f64, angular_freq: f64, decay: f64 },
    Sum { terms: Vec<Curve> },
    /// `inner(t - delay)`
    Shift { delay: f64, inner: Box<Curve> },
    /// `inner(t) 1{t <= upto}`
    Truncate { upto: f64, inner: Box<Curve> },
    /// `inner(t) 1{t > from}`
    After { from: f64, inner: Box<Curve> },
}

impl Curve {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Curve::Constant { value } => *value,
            Curve::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c),
            Curve::ExpDecay { amplitude, rate } => amplitude * (-rate * t).exp(),
            Curve::GaussianBump { amplitude, rate, center } => {
                let d = t - center;
                amplitude * (-rate * d * d).exp()
            }
            Curve::CosineDamped { amplitude, angular_freq, decay } => {
                amplitude * (1.0 + (angular_freq * t).cos()) * (-decay * t).exp()
            }
            Curve::Sum { terms } => terms.iter().map(|c| c.eval(t)).sum(),
            Curve::Shift { delay, inner } => inner.eval(t - delay),
            Curve::Truncate { upto, inner } => {
                if t <= *upto {
                    inner.eval(t)
                } else {
                    0.0
                }
            }
            Curve::After { from, inner } => {
                if t > *from {
                    inner.eval(t)
                } else {
                    0.0
                }
            }
        }
    }
}

/// Serializable description of a ground-truth model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruthSpec {
    pub mu: Vec<f64>,
    pub support: f64,
    /// Row `j`, column `l`: effect of dimension-`l` events on dimension `j`.
    pub kernels: Vec<Vec<Curve>>,
}

/// Simulation-side model: baselines and evaluable interaction curves with a
/// validated upper bound on each curve's positive part.
#[derive(Debug, Clone)]
pub struct GroundTruthModel {
    mu: Vec<f64>,
    kernels: Vec<Vec<Curve>>,
    support: f64,
    sup_pos: Vec<Vec<f64>>,
}

const SUP_GRID: usize = 10_000;
const SUP_SAFETY: f64 = 1.05;

impl GroundTruthModel {
    pub fn new(mu: Vec<f64>, kernels: Vec<Vec<Curve>>, support: f64) -> Result<Self> {
        let d = mu.len();
        if d == 0 {
            return Err(Error::config("model needs at least one dimension"));
        }
        if !(support > 0.0) {
            return Err(Error::config(format!("support must be positive, got {support}")));
        }
        if kernels.len() != d || kernels.iter().any(|row| row.len() != d) {
            return Err(Error::config(format!("kernel grid must be {d} x {d}")));
        }
        for (j, &m) in mu.iter().enumerate() {
            if !(m >= 0.0) || !m.is_finite() {
                return Err(Error::config(format!("baseline mu_{j} must be nonnegative")));
            }
        }
        let sup_pos = kernels
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| {
                        let mut peak = 0.0f64;
                        for n in 0..=SUP_GRID {
                            let t = n as f64 / SUP_GRID as f64 * support;
                            peak = peak.max(c.eval(t));
                        }
                        SUP_SAFETY * peak
                    })
                    .collect()
            })
            .collect();
        Ok(GroundTruthModel { mu, kernels, support, sup_pos })
    }

    pub fn from_spec(spec: &GroundTruthSpec) -> Result<Self> {
        Self::new(spec.mu.clone(), spec.kernels.clone(), spec.support)
    }

    pub fn from_spec_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let spec: GroundTruthSpec =
            serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
        Self::from_spec(&spec)
    }

    /// Validated upper bound on `sup_[0,A] max(g_{jl}, 0)`.
    pub fn sup_positive(&self, j: usize, l: usize) -> f64 {
        self.sup_pos[j][l]
    }

    pub fn curve(&self, j: usize, l: usize) -> &Curve {
        &self.kernels[j][l]
    }

    #[cfg(test)]
    pub(crate) fn with_raw_bounds(
        mu: Vec<f64>,
        kernels: Vec<Vec<Curve>>,
        support: f64,
        sup_pos: Vec<Vec<f64>>,
    ) -> Self {
        GroundTruthModel { mu, kernels, support, sup_pos }
    }
}

impl IntensityModel for GroundTruthModel {
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
        self.kernels[j][l].eval(lag)
    }
}

/// The built-in three-dimensional benchmark model: refractory
/// auto-interactions (a negative dip followed by slow recovery) and a mix of
/// delayed exciting and inhibiting cross-interactions, support bound 5.
pub fn builtin_kernels(name: &str) -> Result<GroundTruthModel> {
    match name {
        "paper3d" => {
            let refractory = |decay: f64| Curve::Sum {
                terms: vec![
                    Curve::Truncate {
                        upto: 0.5,
                        inner: Box::new(Curve::Polynomial { coeffs: vec![-1.0, 0.0, 8.0] }),
                    },
                    Curve::After {
                        from: 0.5,
                        inner: Box::new(Curve::Shift {
                            delay: 0.5,
                            inner: Box::new(Curve::ExpDecay { amplitude: 1.0, rate: decay }),
                        }),
                    },
                ],
            };
            let g11 = refractory(2.5);
            let g22 = refractory(1.0);
            let g33 = refractory(1.0);
            let g12 = Curve::GaussianBump { amplitude: 1.0, rate: 10.0, center: 1.0 };
            let g13 = Curve::Sum {
                terms: vec![
                    Curve::GaussianBump { amplitude: -0.6, rate: 3.0, center: 0.0 },
                    Curve::GaussianBump { amplitude: -0.4, rate: 3.0, center: 1.0 },
                ],
            };
            // 2^(-5t) = exp(-5 ln(2) t)
            let g21 = Curve::ExpDecay { amplitude: 1.0, rate: 5.0 * std::f64::consts::LN_2 };
            let g23 = Curve::GaussianBump { amplitude: -1.0, rate: 2.0, center: 3.0 };
            let g31 = Curve::GaussianBump { amplitude: -1.0, rate: 5.0, center: 2.0 };
            let g32 = Curve::CosineDamped {
                amplitude: 0.5,
                angular_freq: std::f64::consts::PI,
                decay: 1.0,
            };
            GroundTruthModel::new(
                vec![0.05, 0.05, 0.05],
                vec![vec![g11, g12, g13], vec![g21, g22, g23], vec![g31, g32, g33]],
                5.0,
            )
        }
        other => Err(Error::config(format!(
            "unknown ground-truth model '{other}' (available: paper3d, or a JSON spec file)"
        ))),
    }
}

/// Simulate by thinning on `[-burn_in, T]`, returning the events in `(0, T]`.
/// The burn-in events feed the history but are discarded from the output.
pub fn simulate_thinning(
    model: &GroundTruthModel,
    horizon: f64,
    burn_in: f64,
    seed: u64,
) -> Result<EventData> {
    if !(horizon > 0.0) {
        return Err(Error::config(format!("horizon must be positive, got {horizon}")));
    }
    if !(burn_in >= 0.0) {
        return Err(Error::config(format!("burn-in must be nonnegative, got {burn_in}")));
    }
    let d = model.dims();
    let a = model.support();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut times: Vec<Vec<f64>> = vec![Vec::new(); d];
    let mut lam = vec![0.0; d];
    let mut s = -burn_in;

    loop {
        // dominating rate from the trailing-window counts at s
        let mut bar = 0.0;
        for j in 0..d {
            let mut m = model.baseline(j);
            for l in 0..d {
                let tl = &times[l];
                let n_window = tl.len() - tl.partition_point(|&t| t <= s - a);
                m += n_window as f64 * model.sup_pos[j][l];
            }
            bar += m.max(0.0);
        }
        if bar <= 0.0 {
            break;
        }

        let u: f64 = rng.random();
        let cand = s + -(1.0 - u).ln() / bar;
        if cand > horizon {
            break;
        }

        let mut total = 0.0;
        for j in 0..d {
            let mut pre = model.baseline(j);
            for l in 0..d {
                let tl = &times[l];
                for i in active_range(tl, cand, a) {
                    pre += model.interaction(j, l, cand - tl[i]);
                }
            }
            lam[j] = pre.max(0.0);
            total += lam[j];
        }
        if total > bar {
            return Err(Error::Simulation(format!(
                "intensity {total} exceeds the dominating rate {bar} at t = {cand}; \
                 a declared positive-part bound is too small"
            )));
        }

        let v: f64 = rng.random();
        if v * bar < total {
            let w = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut dim = d - 1;
            for (j, &lj) in lam.iter().enumerate() {
                acc += lj;
                if w < acc {
                    dim = j;
                    break;
                }
            }
            times[dim].push(cand);
        }
        s = cand;
    }

    let kept: Vec<Vec<f64>> = times
        .into_iter()
        .map(|seq| seq.into_iter().filter(|&t| t > 0.0).collect())
        .collect();
    EventData::new(d, horizon, kept)
}

const GL4_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL4_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_85,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_85,
];

/// Integrate the intensity of dimension `j` over `(t0, t1)`, splitting the
/// panels at the known discontinuity points (event times and event times
/// plus the support bound).
fn compensator_increment<M: IntensityModel + ?Sized>(
    model: &M,
    events: &EventData,
    j: usize,
    t0: f64,
    t1: f64,
    panels_per_unit: usize,
) -> f64 {
    let a = model.support();
    let mut breaks: Vec<f64> = Vec::new();
    for l in 0..events.dims() {
        for &t in events.times(l) {
            if t > t0 && t < t1 {
                breaks.push(t);
            }
            let exit = t + a;
            if exit > t0 && exit < t1 {
                breaks.push(exit);
            }
        }
    }
    breaks.push(t0);
    breaks.push(t1);
    breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
    breaks.dedup();

    let max_panel = 1.0 / panels_per_unit as f64;
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let n = ((hi - lo) / max_panel).ceil().max(1.0) as usize;
        let h = (hi - lo) / n as f64;
        for p in 0..n {
            let mid = lo + (p as f64 + 0.5) * h;
            let half = 0.5 * h;
            let mut panel = 0.0;
            for (x, wgt) in GL4_NODES.iter().zip(GL4_WEIGHTS.iter()) {
                panel += wgt * intensity_for(model, events, j, mid + half * x);
            }
            total += panel * half;
        }
    }
    total
}

/// Time-rescaling residuals `Lambda(T_n) - Lambda(T_{n-1})` per dimension;
/// unit-exponential under the data-generating model.
pub fn time_rescaling_residuals<M: IntensityModel + ?Sized>(
    events: &EventData,
    model: &M,
    panels_per_unit: usize,
) -> Result<Vec<Vec<f64>>> {
    if events.dims() != model.dims() {
        return Err(Error::Shape(format!(
            "model has {} dimensions, events have {}",
            model.dims(),
            events.dims()
        )));
    }
    let mut out = Vec::with_capacity(events.dims());
    for j in 0..events.dims() {
        let mut prev = 0.0;
        let mut res = Vec::with_capacity(events.count(j));
        for &tn in events.times(j) {
            res.push(compensator_increment(model, events, j, prev, tn, panels_per_unit));
            prev = tn;
        }
        out.push(res);
    }
    Ok(out)
}

/// One-sample Kolmogorov-Smirnov test against the unit-exponential law.
/// Returns `(statistic, p_value)` with the finite-sample corrected asymptotic
/// p-value.
pub fn ks_unit_exponential(sample: &[f64]) -> (f64, f64) {
    let n = sample.len();
    if n == 0 {
        return (0.0, 1.0);
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let cdf = 1.0 - (-x).exp();
        d = d.max(cdf - i as f64 / nf).max((i + 1) as f64 / nf - cdf);
    }
    let lambda = (nf.sqrt() + 0.12 + 0.11 / nf.sqrt()) * d;
    (d, kolmogorov_q(lambda))
}

/// Asymptotic Kolmogorov survival function `Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2)`.
fn kolmogorov_q(lambda: f64) -> f64 {
    let a2 = -2.0 * lambda * lambda;
    let mut fac = 2.0;
    let mut sum = 0.0;
    let mut prev = 0.0f64;
    for k in 1..=100 {
        let term = fac * (a2 * (k * k) as f64).exp();
        sum += term;
        if term.abs() <= 0.001 * prev || term.abs() <= 1e-12 * sum.abs() {
            return sum.clamp(0.0, 1.0);
        }
        fac = -fac;
        prev = term.abs();
    }
    1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_curves(d: usize) -> Vec<Vec<Curve>> {
        vec![vec![Curve::Constant { value: 0.0 }; d]; d]
    }

    #[test]
    fn builtin_pointwise_values() {
        let m = builtin_kernels("paper3d").unwrap();
        assert_eq!(m.dims(), 3);
        assert_eq!(m.support(), 5.0);
        assert_eq!(m.baseline(0), 0.05);
        assert!((m.interaction(0, 0, 0.0) - (-1.0)).abs() < 1e-15);
        assert!((m.interaction(0, 1, 1.0) - 1.0).abs() < 1e-15);
        assert!((m.interaction(1, 2, 3.0) - (-1.0)).abs() < 1e-15);
        assert!((m.interaction(1, 0, 0.0) - 1.0).abs() < 1e-12);
        assert!((m.interaction(2, 1, 0.0) - 1.0).abs() < 1e-15);
        // continuity of the refractory kernel at the junction
        assert!((m.interaction(0, 0, 0.5) - 1.0).abs() < 1e-12);
        assert!((m.interaction(1, 1, 0.5) - 1.0).abs() < 1e-12);
        // 2^(-5t) at t = 0.2 is 0.5
        assert!((m.interaction(1, 0, 0.2) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn builtin_sup_bounds_dominate() {
        let m = builtin_kernels("paper3d").unwrap();
        for j in 0..3 {
            for l in 0..3 {
                let mut peak = 0.0f64;
                for n in 0..=2000 {
                    let t = n as f64 / 2000.0 * 5.0;
                    peak = peak.max(m.interaction(j, l, t));
                }
                assert!(m.sup_positive(j, l) >= peak, "({j},{l})");
            }
        }
        // all-negative kernels have zero positive part
        assert_eq!(m.sup_positive(2, 0), 0.0);
        assert_eq!(m.sup_positive(1, 2), 0.0);
    }

    #[test]
    fn unknown_builtin_name_rejected() {
        assert!(matches!(builtin_kernels("nope"), Err(Error::Config(_))));
    }

    #[test]
    fn curve_spec_roundtrip() {
        let m = builtin_kernels("paper3d").unwrap();
        let spec = GroundTruthSpec {
            mu: vec![0.05; 3],
            support: 5.0,
            kernels: (0..3)
                .map(|j| (0..3).map(|l| m.curve(j, l).clone()).collect())
                .collect(),
        };
        let text = serde_json::to_string(&spec).unwrap();
        let back: GroundTruthSpec = serde_json::from_str(&text).unwrap();
        let rebuilt = GroundTruthModel::from_spec(&back).unwrap();
        for j in 0..3 {
            for l in 0..3 {
                for t in [0.0, 0.4, 0.5, 1.7, 5.0] {
                    assert_eq!(rebuilt.interaction(j, l, t), m.interaction(j, l, t));
                }
            }
        }
    }

    #[test]
    fn same_seed_same_trajectory() {
        let m = builtin_kernels("paper3d").unwrap();
        let a = simulate_thinning(&m, 200.0, 50.0, 7).unwrap();
        let b = simulate_thinning(&m, 200.0, 50.0, 7).unwrap();
        assert_eq!(a, b);
        let c = simulate_thinning(&m, 200.0, 50.0, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn poisson_limit_mean_and_exponential_gaps() {
        let mu = 2.0;
        let t = 1000.0;
        let m = GroundTruthModel::new(vec![mu], zero_curves(1), 1.0).unwrap();
        let ev = simulate_thinning(&m, t, 0.0, 123).unwrap();
        let n = ev.count(0) as f64;
        assert!(
            (n - mu * t).abs() <= 3.0 * (mu * t).sqrt(),
            "count {n} too far from {}",
            mu * t
        );
        let times = ev.times(0);
        let mut gaps = Vec::with_capacity(times.len());
        let mut prev = 0.0;
        for &x in times {
            gaps.push(mu * (x - prev));
            prev = x;
        }
        let (_, p) = ks_unit_exponential(&gaps);
        assert!(p > 0.01, "KS p-value {p}");
    }

    #[test]
    fn strong_inhibition_suppresses_counts() {
        let g: Vec<Vec<Curve>> = vec![vec![Curve::Truncate {
            upto: 1.0,
            inner: Box::new(Curve::Constant { value: -5.0 }),
        }]];
        let m = GroundTruthModel::new(vec![1.0], g, 1.0).unwrap();
        let ev = simulate_thinning(&m, 1000.0, 0.0, 5).unwrap();
        // Poisson(1000) first percentile is about 927
        assert!(
            (ev.count(0) as f64) < 1000.0 - 2.326 * 1000.0f64.sqrt(),
            "count {} not suppressed",
            ev.count(0)
        );
    }

    #[test]
    fn bad_declared_bound_triggers_simulation_error() {
        let g: Vec<Vec<Curve>> = vec![vec![Curve::Constant { value: 2.0 }]];
        // declared positive-part bound of zero is a lie for this kernel
        let m = GroundTruthModel::with_raw_bounds(vec![0.5], g, 2.0, vec![vec![0.0]]);
        let err = simulate_thinning(&m, 400.0, 0.0, 1).unwrap_err();
        assert!(matches!(err, Error::Simulation(_)));
    }

    #[test]
    fn homogeneous_residuals_are_scaled_gaps() {
        let mu = 0.8;
        let m = GroundTruthModel::new(vec![mu], zero_curves(1), 1.0).unwrap();
        let ev = EventData::new(1, 10.0, vec![vec![1.0, 2.5, 7.0]]).unwrap();
        let res = time_rescaling_residuals(&ev, &m, 50).unwrap();
        let want = [mu * 1.0, mu * 1.5, mu * 4.5];
        for (got, want) in res[0].iter().zip(want.iter()) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn residuals_pass_ks_under_true_model() {
        let m = builtin_kernels("paper3d").unwrap();
        let ev = simulate_thinning(&m, 2000.0, 0.0, 31).unwrap();
        let res = time_rescaling_residuals(&ev, &m, 50).unwrap();
        let pooled: Vec<f64> = res.into_iter().flatten().collect();
        assert!(pooled.len() > 100);
        let (_, p) = ks_unit_exponential(&pooled);
        assert!(p > 0.01, "KS p-value {p}");
    }

    #[test]
    fn residuals_reject_grossly_wrong_model() {
        let mu = 1.0;
        let m = GroundTruthModel::new(vec![mu], zero_curves(1), 1.0).unwrap();
        let ev = simulate_thinning(&m, 2000.0, 0.0, 9).unwrap();
        let wrong = GroundTruthModel::new(vec![10.0 * mu], zero_curves(1), 1.0).unwrap();
        let res = time_rescaling_residuals(&ev, &wrong, 50).unwrap();
        let (_, p) = ks_unit_exponential(&res[0]);
        assert!(p < 1e-6, "p = {p}");
    }

    #[test]
    fn event_rate_stable_across_seeds() {
        let m = builtin_kernels("paper3d").unwrap();
        let counts: Vec<f64> = (0..10)
            .map(|seed| simulate_thinning(&m, 2000.0, 50.0, seed).unwrap().total_count() as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / counts.len() as f64;
        let sd = (counts.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>()
            / (counts.len() - 1) as f64)
            .sqrt();
        // per-seed counts of this near-critical model are heavily dispersed;
        // the across-seed mean rate is what reproduces within 10%
        let sem = sd / (counts.len() as f64).sqrt();
        assert!(
            sem <= 0.10 * mean,
            "mean-rate standard error {sem} exceeds 10% of mean {mean} (counts {counts:?})"
        );
    }
}
