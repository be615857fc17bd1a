//! Quantum-noise simulator for a coupled-cavity gravitational-wave
//! interferometer with an internal parametric amplifier.
//!
//! An optical parametric amplifier placed in the signal-extraction cavity
//! squeezes the quantum noise at high sideband frequencies at exactly the
//! rate the cavity linewidth suppresses the signal, expanding the detection
//! bandwidth without touching the low-frequency sensitivity. This crate
//! computes the resulting quantum-noise-limited strain sensitivity at three
//! model fidelities and evaluates the astrophysical payoff:
//!
//! - [`twomode`]: closed-form coupled-oscillator model (sensitivity,
//!   bandwidth, quantum Cramer-Rao bound);
//! - [`exactcavity`]: exact single-quadrature mirror-chain solution, valid
//!   to arbitrary frequency including free-spectral-range effects;
//! - [`fullmodel`]: full two-photon transfer-matrix plant with internal and
//!   readout losses, radiation pressure, external squeezing and filter
//!   cavities;
//! - [`budget`]: per-vacuum-source noise decomposition, loss/gain sweeps and
//!   optimal-gain search;
//! - [`astro`]: Monte-Carlo detectability study of neutron-star post-merger
//!   remnants against a noise curve.
//!
//! Start from a [`detector::DetectorConfig`] preset and an operating gain,
//! then ask each model for a spectrum (see the `examples/` directory for one
//! runnable example per capability). The `qexpander` binary exposes the same
//! operations as subcommands emitting CSV or JSON.

pub mod astro;
pub mod budget;
pub mod cliconfig;
pub mod detector;
pub mod exactcavity;
pub mod fullmodel;
pub mod quad;
pub mod spectrum;
pub mod twomode;

pub use detector::{ConfigError, DetectorConfig, C_LIGHT, HBAR};
pub use fullmodel::{ModelError, ReadoutConfig};
pub use spectrum::Spectrum;
