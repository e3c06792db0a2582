//! Periodic-response analysis for forced, damped, nonlinear mechanical systems.
//!
//! The crate answers two questions about systems of the form
//! `M q̈ + C q̇ + S(q) = f(t)` with `T`-periodic forcing:
//!
//! 1. Can a periodic response be certified to exist (or to not exist)
//!    a priori, before any numerics? See [`existence`].
//! 2. What does that response look like? Harmonic balance ([`hb`]),
//!    numerical continuation ([`continuation`]) and Floquet stability
//!    analysis ([`floquet`]) compute it.
//!
//! The core is `no_std` + `alloc`; file formats and the CLI live in the
//! companion `perorbit` crate.

#![cfg_attr(not(test), no_std)]
extern crate alloc;

pub mod continuation;
pub mod existence;
pub mod floquet;
pub mod hb;
pub mod model;
pub mod ode;

pub use model::{ForcingSignal, MechanicalSystem, Nonlinearity};
