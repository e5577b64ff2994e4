//! Adversarial lower bounds for numerical integration on the unit cube.
//!
//! Given any finite set of sample nodes, this crate constructs smooth
//! "fooling" integrands that vanish at every node while keeping a provably
//! large integral, and turns them into certified worst-case error lower
//! bounds for every cubature rule that samples at those nodes:
//!
//! * [`geometry`]: point sets, exact nearest-node distances, ball volumes
//!   in log-space and uniform ball sampling.
//! * [`fooling`]: the base ramp function and its iterated ball-convolution
//!   smoothings, evaluated by seeded Monte Carlo with exact fast paths.
//! * [`bounds`]: closed-form information-complexity bounds behind a
//!   name-keyed strategy registry, all evaluated in log-space.
//! * [`estimate`]: Monte Carlo measures and integrals, plus the `attack`
//!   pipeline that certifies a lower bound against a concrete node set.
//! * [`verify`]: statistical checks for the smoothing construction's
//!   claimed properties (vanishing, Lipschitz budgets, integral
//!   preservation, derivative bounds).
//! * [`rules`]: node-set generators and the on-disk point format.
//!
//! Every sampling routine derives its ChaCha stream from a master seed and
//! the evaluation site, so results are bit-for-bit reproducible for any
//! thread count.

pub mod bounds;
pub mod error;
pub mod estimate;
pub mod fooling;
pub mod geometry;
pub mod rules;
pub mod seeding;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
