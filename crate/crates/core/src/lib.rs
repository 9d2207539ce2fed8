//! Quantum-walk encodings of Markov chains on a dense statevector simulator.
//!
//! The crate is organised bottom-up:
//!
//! * [`markov`]: classical kernels, stationary measures and discriminants.
//! * [`statevector`]: dense amplitudes, gate application, sampling.
//! * [`circuit`]: gate-level IR, control/inverse, native transpilation.
//! * [`spue`]: symmetric projected unitary encodings and qubitized walks.
//! * [`algorithms`]: phase estimation, stationary-state preparation, QAE.
//! * [`noise`]: Pauli trajectory noise.
//! * [`experiments`]: end-to-end experiment runner and CLI.

pub mod algorithms;
pub mod circuit;
pub mod error;
pub mod experiments;
pub mod markov;
pub mod noise;
pub mod numerics;
pub mod spue;
pub mod statevector;

pub use error::{Error, Result};
