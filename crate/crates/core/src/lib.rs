//! Temporal-mode quantum information toolkit.
//!
//! Discretized temporal-mode (TM) bases, engineered photon-pair sources and
//! their Schmidt structure, quantum pulse gates (QPGs) as unitaries on a
//! truncated register, gate compilation, QPG tomography, mutually unbiased
//! bases with qudit BB84, and Type-I fusion of TM qubits.

pub mod basis;
pub mod error;
pub mod fusion;
pub mod gates;
pub mod linalg;
pub mod mub;
pub mod pdc;
pub mod qkd;
pub mod qpg;
pub mod rng;
pub mod states;
pub mod tomography;

pub use error::{Result, TmError};
