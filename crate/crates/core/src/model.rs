//! Estimation parameters in representer form, intensity evaluation, and
//! model persistence.
//!
//! A fitted interaction function is `g_{jl} = (h_{jl} + b_{jl}) 1_[0,A]` with
//!
//! ```text
//! h_{jl} = alpha_0^(jl) r_l + sum_u alpha_u^(jl) q_{ujl},
//! ```
//!
//! anchored on the training events. The conditional intensity is the ReLU of
//! the baseline plus the summed interactions of strictly past events; the
//! smoothed objective replaces the ReLU by the softplus
//! `softplus(x) = log(1 + exp(omega x)) / omega`, a smooth upper bound whose
//! gap to the ReLU is at most `log(2) / omega`.

use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::baselines::FeatureBasisModel;
use crate::error::{Error, Result};
use crate::events::EventData;
use crate::kernel::{active_range, erf_gamma, q_ujl_at, r_ell_at, KernelConfig, SQRT_PI};

/// Which contrast the smoothed objective approximates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Negative log-likelihood.
    Mle,
    /// Least-squares contrast.
    Ls,
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Criterion::Mle => write!(f, "mle"),
            Criterion::Ls => write!(f, "ls"),
        }
    }
}

/// Softplus sharpness and criterion choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    /// Softplus sharpness `omega > 0`.
    pub omega: f64,
    pub criterion: Criterion,
}

impl LinkSpec {
    pub fn new(omega: f64, criterion: Criterion) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::config(format!("omega must be positive, got {omega}")));
        }
        Ok(LinkSpec { omega, criterion })
    }

    pub fn mle(omega: f64) -> Result<Self> {
        Self::new(omega, Criterion::Mle)
    }
}

/// `log(1 + exp(omega x)) / omega`, evaluated through overflow-safe branches.
#[inline]
pub fn softplus(x: f64, omega: f64) -> f64 {
    let z = omega * x;
    if z >= 30.0 {
        x + (-z).exp().ln_1p() / omega
    } else if z <= -30.0 {
        z.exp() / omega
    } else {
        z.exp().ln_1p() / omega
    }
}

/// Derivative of [`softplus`] in `x`: the logistic `sigma(omega x)`.
#[inline]
pub fn softplus_prime(x: f64, omega: f64) -> f64 {
    let z = omega * x;
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(softplus(x))`, with the asymptote `omega x - log(omega)` for very
/// negative arguments so the result stays finite where `softplus` underflows.
#[inline]
pub(crate) fn log_softplus(x: f64, omega: f64) -> f64 {
    let z = omega * x;
    if z <= -30.0 {
        z - omega.ln()
    } else {
        let u = if z >= 30.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
        u.ln() - omega.ln()
    }
}

/// Derivative of [`log_softplus`]: `sigma(omega x) / softplus(x)`, with limit
/// `omega` for very negative arguments.
#[inline]
pub(crate) fn log_softplus_prime(x: f64, omega: f64) -> f64 {
    let z = omega * x;
    if z <= -30.0 {
        omega
    } else {
        softplus_prime(x, omega) / softplus(x, omega)
    }
}

/// The estimation parameter: baselines, representer coefficients, offsets,
/// the kernel configuration, and the anchor events that define the basis.
///
/// `alpha[j][l]` has length `N_j + 1`; index 0 weighs the integrated
/// representer `r_l`, index `u >= 1` the event-anchored `q_{ujl}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RkhsParams {
    pub mu: Vec<f64>,
    pub alpha: Vec<Vec<Vec<f64>>>,
    pub b: Vec<Vec<f64>>,
    pub kernel: KernelConfig,
    anchors: EventData,
    #[serde(skip)]
    curves: OnceLock<Vec<Vec<PairCurve>>>,
}

impl PartialEq for RkhsParams {
    fn eq(&self, other: &Self) -> bool {
        self.mu == other.mu
            && self.alpha == other.alpha
            && self.b == other.b
            && self.kernel == other.kernel
            && self.anchors == other.anchors
    }
}

impl RkhsParams {
    pub fn new(
        mu: Vec<f64>,
        alpha: Vec<Vec<Vec<f64>>>,
        b: Vec<Vec<f64>>,
        kernel: KernelConfig,
        anchors: EventData,
    ) -> Result<Self> {
        let d = anchors.dims();
        if mu.len() != d || alpha.len() != d || b.len() != d {
            return Err(Error::Shape(format!(
                "parameter blocks must have {d} rows (got mu {}, alpha {}, b {})",
                mu.len(),
                alpha.len(),
                b.len()
            )));
        }
        for (j, m) in mu.iter().enumerate() {
            if !(*m >= 0.0) {
                return Err(Error::validation(format!("baseline mu_{j} must be nonnegative, got {m}")));
            }
        }
        for j in 0..d {
            if alpha[j].len() != d || b[j].len() != d {
                return Err(Error::Shape(format!("alpha[{j}] and b[{j}] must have {d} columns")));
            }
            let want = anchors.count(j) + 1;
            for l in 0..d {
                if alpha[j][l].len() != want {
                    return Err(Error::Shape(format!(
                        "alpha[{j}][{l}] must have length {want}, got {}",
                        alpha[j][l].len()
                    )));
                }
            }
        }
        Ok(RkhsParams {
            mu,
            alpha,
            b,
            kernel,
            anchors,
            curves: OnceLock::new(),
        })
    }

    /// All-zero parameters anchored on the given events.
    pub fn zeros(kernel: KernelConfig, anchors: EventData) -> Self {
        let d = anchors.dims();
        let alpha = (0..d)
            .map(|j| vec![vec![0.0; anchors.count(j) + 1]; d])
            .collect();
        RkhsParams {
            mu: vec![0.0; d],
            alpha,
            b: vec![vec![0.0; d]; d],
            kernel,
            anchors,
            curves: OnceLock::new(),
        }
    }

    pub fn dims(&self) -> usize {
        self.anchors.dims()
    }

    pub fn anchors(&self) -> &EventData {
        &self.anchors
    }

    fn curves(&self) -> &Vec<Vec<PairCurve>> {
        self.curves.get_or_init(|| {
            let d = self.dims();
            (0..d)
                .map(|j| (0..d).map(|l| PairCurve::build(self, j, l)).collect())
                .collect()
        })
    }
}

/// Argument of the link function: baseline plus summed interactions of the
/// strictly past active events (`0 < t - T_i <= A`, so the intensity is
/// left-continuous at event times). Reference path through the pointwise
/// representer evaluations.
pub fn pre_intensity(theta: &RkhsParams, events: &EventData, j: usize, t: f64) -> f64 {
    let a = theta.kernel.support;
    let mut acc = theta.mu[j];
    for l in 0..theta.dims() {
        let tl = events.times(l);
        for i in active_range(tl, t, a) {
            acc += interaction_value(theta, j, l, t - tl[i]);
        }
    }
    acc
}

/// ReLU-rectified conditional intensity.
pub fn intensity(theta: &RkhsParams, events: &EventData, j: usize, t: f64) -> f64 {
    pre_intensity(theta, events, j, t).max(0.0)
}

/// `h_{jl}(t) + b_{jl}` for a lag `t` in `[0, A]`.
pub fn interaction_at(theta: &RkhsParams, j: usize, l: usize, t: f64) -> Result<f64> {
    if !(0.0..=theta.kernel.support).contains(&t) {
        return Err(Error::Domain(format!(
            "lag {t} outside the interaction support [0, {}]",
            theta.kernel.support
        )));
    }
    Ok(interaction_value(theta, j, l, t))
}

fn interaction_value(theta: &RkhsParams, j: usize, l: usize, t: f64) -> f64 {
    let anchors = &theta.anchors;
    let cfg = &theta.kernel;
    let a = &theta.alpha[j][l];
    let mut v = theta.b[j][l];
    if a[0] != 0.0 {
        v += a[0] * r_ell_at(t, anchors.horizon(), anchors.times(l), cfg);
    }
    for (u, &tu) in anchors.times(j).iter().enumerate() {
        let w = a[u + 1];
        if w != 0.0 {
            v += w * q_ujl_at(t, tu, anchors.times(l), cfg);
        }
    }
    v
}

/// A model exposing per-pair interaction curves; everything downstream
/// (scoring, residuals, L1 errors) is generic over this.
pub trait IntensityModel {
    fn dims(&self) -> usize;
    /// Interaction support bound `A`.
    fn support(&self) -> f64;
    fn baseline(&self, j: usize) -> f64;
    /// `g_{jl}(lag)` for `lag` in `[0, A]`.
    fn interaction(&self, j: usize, l: usize, lag: f64) -> f64;
}

/// Baseline plus summed interactions of the model over the events' strict
/// past, before rectification.
pub fn pre_intensity_for<M: IntensityModel + ?Sized>(
    model: &M,
    events: &EventData,
    j: usize,
    t: f64,
) -> f64 {
    let a = model.support();
    let mut acc = model.baseline(j);
    for l in 0..model.dims() {
        let tl = events.times(l);
        for i in active_range(tl, t, a) {
            acc += model.interaction(j, l, t - tl[i]);
        }
    }
    acc
}

/// ReLU intensity of a generic model.
pub fn intensity_for<M: IntensityModel + ?Sized>(
    model: &M,
    events: &EventData,
    j: usize,
    t: f64,
) -> f64 {
    pre_intensity_for(model, events, j, t).max(0.0)
}

impl IntensityModel for RkhsParams {
    fn dims(&self) -> usize {
        self.anchors.dims()
    }

    fn support(&self) -> f64 {
        self.kernel.support
    }

    fn baseline(&self, j: usize) -> f64 {
        self.mu[j]
    }

    fn interaction(&self, j: usize, l: usize, lag: f64) -> f64 {
        self.curves()[j][l].eval(lag)
    }
}

/// One fitted interaction curve in precomputed form: the integrated
/// representer reduced to grouped erf terms, the event-anchored part to a
/// sorted list of Gaussian bumps queried within an effective radius.
#[derive(Debug, Clone)]
struct PairCurve {
    offset: f64,
    alpha0: f64,
    gamma: f64,
    support: f64,
    n_events: f64,
    n_full: f64,
    tail_c: Vec<f64>,
    centers: Vec<f64>,
    weights: Vec<f64>,
    radius: f64,
}

impl PairCurve {
    fn build(theta: &RkhsParams, j: usize, l: usize) -> Self {
        let anchors = &theta.anchors;
        let cfg = &theta.kernel;
        let tl = anchors.times(l);
        let horizon = anchors.horizon();

        let n_full = tl.partition_point(|&t| horizon - t >= cfg.support);
        let tail_c: Vec<f64> = tl[n_full..]
            .iter()
            .map(|&t| (horizon - t).min(cfg.support).max(0.0))
            .collect();

        let alpha = &theta.alpha[j][l];
        let mut pairs: Vec<(f64, f64)> = Vec::new();
        for (u, &tu) in anchors.times(j).iter().enumerate() {
            let w = alpha[u + 1];
            if w == 0.0 {
                continue;
            }
            for i in active_range(tl, tu, cfg.support) {
                pairs.push((tu - tl[i], w));
            }
        }
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        PairCurve {
            offset: theta.b[j][l],
            alpha0: alpha[0],
            gamma: cfg.gamma,
            support: cfg.support,
            n_events: tl.len() as f64,
            n_full: n_full as f64,
            tail_c,
            centers: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
            // exp(-gamma r^2) < 1e-18 beyond the radius
            radius: (41.5 / cfg.gamma).sqrt(),
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let mut v = self.offset;
        if self.alpha0 != 0.0 && self.n_events > 0.0 {
            let g = self.gamma;
            let mut r = self.n_full * erf_gamma(self.support - x, g);
            for &c in &self.tail_c {
                r += erf_gamma(c - x, g);
            }
            r += self.n_events * erf_gamma(x, g);
            v += self.alpha0 * 0.5 * SQRT_PI * r;
        }
        if !self.centers.is_empty() {
            let lo = self.centers.partition_point(|&z| z < x - self.radius);
            for i in lo..self.centers.len() {
                let z = self.centers[i];
                if z > x + self.radius {
                    break;
                }
                let d = x - z;
                v += self.weights[i] * (-self.gamma * d * d).exp();
            }
        }
        v
    }
}

/// A fitted model of either family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Model {
    Rkhs(RkhsParams),
    Basis(FeatureBasisModel),
}

impl IntensityModel for Model {
    fn dims(&self) -> usize {
        match self {
            Model::Rkhs(m) => m.dims(),
            Model::Basis(m) => m.dims(),
        }
    }

    fn support(&self) -> f64 {
        match self {
            Model::Rkhs(m) => m.support(),
            Model::Basis(m) => m.support(),
        }
    }

    fn baseline(&self, j: usize) -> f64 {
        match self {
            Model::Rkhs(m) => m.baseline(j),
            Model::Basis(m) => m.baseline(j),
        }
    }

    fn interaction(&self, j: usize, l: usize, lag: f64) -> f64 {
        match self {
            Model::Rkhs(m) => m.interaction(j, l, lag),
            Model::Basis(m) => m.interaction(j, l, lag),
        }
    }
}

/// A model together with the link it was fitted under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub model: Model,
    /// Link used at fit time; `None` for models never fitted (e.g. hand-built).
    pub link: Option<LinkSpec>,
}

const MODEL_FORMAT: &str = "hawkes-rkhs-model";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    #[serde(flatten)]
    saved: SavedModel,
}

/// Serialize a model to versioned JSON.
pub fn save_model(saved: &SavedModel, path: &Path) -> Result<()> {
    let file = ModelFile {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        saved: saved.clone(),
    };
    let text = serde_json::to_string_pretty(&file).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

/// Load a model from versioned JSON, checking format and version.
pub fn load_model(path: &Path) -> Result<SavedModel> {
    let text = fs::read_to_string(path)?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
    if file.format != MODEL_FORMAT {
        return Err(Error::Format(format!("unexpected file format '{}'", file.format)));
    }
    if file.version != MODEL_VERSION {
        return Err(Error::Format(format!(
            "unsupported model version {} (expected {MODEL_VERSION})",
            file.version
        )));
    }
    Ok(file.saved)
}
