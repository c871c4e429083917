//! Simulation and RKHS-based nonparametric estimation of nonlinear
//! multivariate Hawkes processes.
//!
//! The model: a `d`-variate point process with conditional intensities
//!
//! ```text
//! lambda_j(t) = max(0, mu_j + sum_l sum_i g_{jl}(t - T_i^(l)))
//! ```
//!
//! where each interaction function `g_{jl} = (h_{jl} + b_{jl}) 1_[0,A]` may
//! excite or inhibit, and `h_{jl}` lives in the RKHS of the Gaussian kernel
//! `exp(-gamma (x - y)^2)`. The ReLU link makes inhibition well defined but
//! the plain likelihood intractable for kernel methods; estimation minimizes
//! a smoothed objective where the compensator integral is replaced by a
//! left-rule Riemann sum over `M` nodes and the ReLU by a softplus of
//! sharpness `omega`, plus a ridge penalty `(eta/2) sum ||h_{jl}||^2`. A
//! representer argument reduces each `h_{jl}` to a finite combination of
//! data-anchored functions, so the objective and its gradient are matrix
//! expressions in closed form (Gaussian-kernel integrals reduce to the error
//! function).
//!
//! Modules:
//! - [`events`]: event-sequence data model and I/O;
//! - [`kernel`]: Gaussian kernel sums and their closed-form integrals;
//! - [`precompute`]: grid and matrix assembly;
//! - [`model`]: parameters, intensities, softplus links, persistence;
//! - [`objective`]: the smoothed objective, gradients, exact scoring;
//! - [`optimizer`]: bound-constrained limited-memory quasi-Newton;
//! - [`simulate`]: thinning sampler, ground-truth curves, residuals;
//! - [`baselines`]: exponential / Gaussian-basis / Bernstein competitors;
//! - [`fit`]: the representer-model fit driver;
//! - [`evaluate`]: L1 metrics, grid search, sweeps, horizon study.

pub mod baselines;
pub mod error;
pub mod evaluate;
pub mod events;
pub mod fit;
pub mod kernel;
pub mod model;
pub mod objective;
pub mod optimizer;
pub mod oracle;
pub mod precompute;
pub mod simulate;

pub use error::{Error, Result};
pub use events::{concat_recordings, load_events, restrict_window, save_events, EventData, EventFormat};
pub use kernel::KernelConfig;
pub use model::{
    interaction_at, intensity, load_model, pre_intensity, save_model, Criterion, IntensityModel,
    LinkSpec, Model, RkhsParams, SavedModel,
};
pub use objective::{
    default_grid_size, exact_neg_log_likelihood, link_pair, objective_gradient, objective_value,
    ObjectiveConfig,
};
pub use optimizer::{minimize, OptimDiagnostics, OptimOptions, Termination};
pub use simulate::{
    builtin_kernels, ks_unit_exponential, simulate_thinning, time_rescaling_residuals, Curve,
    GroundTruthModel, GroundTruthSpec,
};
