//! Sublinear expectations over finite ambiguity sets and the one-dimensional
//! maximal distribution.
//!
//! - [`scenario`]: families of discrete measures, `E^[f] = max_P E_P[f]`, capacities.
//! - [`maximal`]: `M[mu_lo, mu_hi]`, grid maxima with Lipschitz certificates,
//!   Dirac representation, convolution stability.
//! - [`joint`]: sequential independence, indicator approximations, point capacities.
//! - [`lln_sim`]: Monte-Carlo law of large numbers and its `1/n` rate bound.
//! - [`mle`]: likelihood, the minimax estimator `(min, max)` and its brute-force oracle.
//! - [`envelope`]: rolling-window upper/lower variance envelope from a time series.
//!
//! All values are immutable after construction and every operation is pure,
//! so everything here is `Send + Sync`.

pub mod axioms;
pub mod catalog;
pub mod envelope;
mod error;
pub mod func;
pub mod joint;
pub mod lln_sim;
pub mod maximal;
pub mod mle;
mod numeric;
pub mod scenario;

pub use error::{Error, Result};
pub use func::{BoundedLipschitzFn, MultiLipschitzFn};
pub use joint::{asymmetry_probe, indicator_approx, JointSpec, Marginal};
pub use maximal::{GridSpec, MaximalDist};
pub use numeric::{exact_dot, exact_sum};
pub use scenario::{DiscreteMeasure, ScenarioFamily};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
