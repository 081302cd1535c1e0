//! Simulation and verification toolkit for critical controlled branching
//! processes (CBPs) and the Feller-type diffusion that arises as their
//! scaling limit.
//!
//! The crate is split along the natural seams of the problem:
//!
//! - [`cbp`]: offspring and control laws, the A1/A2 contracts, trajectory
//!   simulation and the closed-form moment formulas.
//! - [`scaling`]: the scaled step process `W_n`, martingale differences and
//!   the random step process built from them.
//! - [`diffusion`]: exact and Euler–Maruyama sampling of
//!   `dW = α dt + √(σ²/m · W⁺) d𝒲`.
//! - [`diagnostics`]: Monte Carlo checks of moment identities, the
//!   Lindeberg-type conditions and marginal convergence `W_n(t) → W(t)`.
//!
//! All randomness is drawn from [`rng::SimRng`] streams keyed by a master
//! seed and a stream index, so every study is reproducible and independent
//! of the number of worker threads.

pub mod cbp;
pub mod diagnostics;
pub mod diffusion;
mod error;
pub mod rng;
pub mod scaling;
pub mod stats;
pub mod variates;

pub use error::{Error, Result};
