//! Rejection-free elliptical slice sampling for multivariate normal
//! distributions truncated to a polytope `{x : Ax <= b}`.
//!
//! Each Markov step forms the ellipse `theta -> x cos(theta) + nu sin(theta)`
//! through the current point and a fresh normal draw, computes the angles
//! where the ellipse meets the polytope, and samples the next point uniformly
//! from the arcs that stay inside. The arc construction sorts the
//! per-constraint left endpoints and takes a cumulative max of the right
//! endpoints, so a step costs `O(m d + m log m)` for `m` constraints in `d`
//! dimensions. A brute-force intersector and a likelihood-testing baseline
//! back the same contract for testing and benchmarking.
//!
//! General normals `N(mu, Sigma)` reduce to the standard one by whitening the
//! polytope with the Cholesky factor of `Sigma` and mapping samples back.
//!
//! ```
//! use nalgebra::{DMatrix, DVector};
//! use polyess::polytope::Polytope;
//! use polyess::sampler::{chain_rng, run_chain, Precision, SamplerConfig};
//!
//! // The standard normal restricted to -1 <= x <= 3.
//! let poly = Polytope::new(
//!     DMatrix::from_column_slice(2, 1, &[1.0, -1.0]),
//!     DVector::from_column_slice(&[3.0, 1.0]),
//! )
//! .unwrap();
//! let cfg = SamplerConfig::new(Precision::Double)
//!     .with_seed(7)
//!     .with_burn_in(100);
//! let mut rng = chain_rng(cfg.seed, 0);
//! let x0 = DVector::from_column_slice(&[0.5]);
//! let (samples, stats) = run_chain(&poly, &x0, 500, &cfg, &mut rng).unwrap();
//! assert_eq!(samples.nrows(), 500);
//! assert_eq!(stats.rejections, 0);
//! ```

pub mod angles;
pub mod bench;
mod error;
pub mod intervals;
pub mod oracles;
pub mod polytope;
mod real;
pub mod sampler;

pub use error::{Error, Result};
pub use real::Real;
