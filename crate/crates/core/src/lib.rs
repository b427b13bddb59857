//! Quantum-mechanical and stochastic models of the atomic Kapitza-Dirac
//! momentum spectrum.
//!
//! Two rival descriptions of an atom crossing a detuned standing light wave
//! are implemented side by side:
//!
//! * [`qm_model`]: the two-level diffraction picture, whose line intensities
//!   are squared Bessel functions `J_n(tau)^2` plus order `gamma^2` odd lines.
//! * [`stochastic_model`]: a single-step Markov scattering picture in which
//!   the standing-wave phase `zeta` is a hidden variable, together with the
//!   coupled even/odd extension that produces half-integral lines.
//!
//! [`montecarlo`] simulates the Markov processes directly and serves as an
//! independent check of the closed forms; [`analysis`] holds the cross-model
//! tools (velocity smoothing, moments, inversion of characteristic
//! functions, the monotonicity discriminator and comparison metrics).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod montecarlo;
pub mod numerics;
pub mod qm_model;
pub mod spectrum;
pub mod stochastic_model;

pub use error::{Error, Result};
pub use spectrum::{HalfIndex, Line, ModelTag, Parity, Spectrum};
