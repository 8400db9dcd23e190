//! Numerical model of a photon-photon quantum gate built from Rydberg EIT.
//!
//! The crate is organised bottom-up:
//!
//! - [`eit`]: complex susceptibility of the ladder EIT medium and its
//!   propagation map to optical depth, phase and transmission.
//! - [`blockade`]: van der Waals shift of the two-photon resonance, blockade
//!   radii and the conditional optical depth / phase of a target photon.
//! - [`optimizer`]: the operating point that reaches a conditional π phase
//!   with vanishing conditional optical depth, in closed form and by grid search.
//! - [`visibility`]: loss of target visibility from the random storage position.
//! - [`gate`]: two-qubit polarization algebra, fidelities, Stokes observables
//!   and efficiency bookkeeping.
//! - [`tomography`]: Poissonian coincidence simulation and linear-inversion
//!   state reconstruction.
//!
//! [`config`], [`export`] and [`repro`] back the `rydpol` command-line tool.
//! All angular frequencies are stored in rad/s, lengths in metres.

pub mod blockade;
pub mod config;
pub mod eit;
mod error;
pub mod export;
pub mod gate;
pub mod numeric;
pub mod optimizer;
pub mod repro;
pub mod tomography;
pub mod units;
pub mod visibility;

pub use error::{Error, Result};
