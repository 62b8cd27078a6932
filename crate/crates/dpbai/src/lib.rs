//! Fixed-confidence best arm identification for Bernoulli bandits under
//! ε-global differential privacy.
//!
//! The crate is layered bottom up: [`scalar`] special functions, the signed
//! private [`divergences`], pairwise [`transport`] costs, the
//! characteristic-time [`oracle`], the geometric private estimator
//! [`gpe`], sampling [`policies`], [`stopping`] rules, Monte Carlo checks of
//! the tail bounds in [`concentration`], and the experiment [`harness`].

pub mod concentration;
pub mod divergences;
pub mod error;
pub mod gpe;
pub mod harness;
pub mod oracle;
pub mod policies;
pub mod scalar;
pub mod stopping;
pub mod transport;

pub use error::{DomainError, Result};
