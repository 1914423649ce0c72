//! Computing with upper semicontinuous (usc) stochastic processes.
//!
//! The crate is organised bottom-up:
//!
//! * [`ext`]: the extended real line `[-inf, +inf]` with a total order.
//! * [`grid`]: functions sampled on finite rectangular grids, hypograph
//!   hit-tests and a hypo-convergence checker.
//! * [`quantile`]: right-continuous quantile functions of analytic and
//!   empirical distribution functions.
//! * [`gev`]: generalized extreme-value cdf, quantile, norming constants and
//!   parameter recovery.
//! * [`transform`]: pointwise transforms `U(s, x)` that map usc functions to
//!   usc functions, including marginal standardization.
//! * [`scenario`]: exact symbolic trajectories with a decidable usc test and
//!   a gallery of counterexamples.
//! * [`maxstable`]: exact simulation of simple max-stable usc fields and
//!   capacity functional checks.

pub mod error;
pub mod ext;
pub mod gev;
pub mod grid;
pub mod maxstable;
pub mod quantile;
pub mod rng;
pub mod scenario;
pub mod stats;
pub mod transform;

pub use error::{Error, Result};
pub use ext::ExtReal;
pub use gev::{GevParams, ThetaField};
pub use grid::{CompactProbe, Domain, GridField, ProbePart, Rect};
pub use maxstable::{MaxStableSampler, SpectralModel};
pub use quantile::RcCdf;
pub use scenario::{GalleryEntry, GalleryId, Realization, Scenario};
pub use transform::{MarginFamily, PointwiseMap, SFn};
