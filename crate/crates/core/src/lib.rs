//! Gini indexes of multivariate elliptical and scale-mixture-of-elliptical
//! risks.
//!
//! The crate is organised bottom-up:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`matrix`] | symmetric matrices, PSD / Loewner checks, centering, ε-shift feasibility, PSD square roots |
//! | [`elliptical`] | radial and mixing laws, sphere and radius sampling, elliptical and scale-mixture sampling |
//! | [`gini`] | pairwise, order-statistic and permutation-maximum forms of the Gini index, supermodularity defects |
//! | [`ordering`] | dispersion condition classifier, ordering predictions, empirical `st` / `icx` tests, experiments |
//! | [`tail`] | permutation coefficient matrix, exact Gaussian large-deviation rate, tail identity checks |
//!
//! All randomness is explicit: sampling functions either take an `Rng` or a
//! 64-bit master seed from which per-block streams are derived (see
//! [`stream`]).

pub mod elliptical;
pub mod error;
pub mod gini;
pub mod matrix;
pub mod ordering;
pub mod quad;
pub mod stats;
pub mod stream;
pub mod tail;

pub use error::{Error, Result};
pub use matrix::SymMatrix;
