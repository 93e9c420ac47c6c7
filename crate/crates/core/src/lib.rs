//! IRS-aided MISO downlink power minimization with discrete reflect phase shifts.
//!
//! An access point with `M` antennas serves a single-antenna user, assisted by
//! an intelligent reflecting surface (IRS) of `N` passive elements whose phase
//! shifts are restricted to `2^b` equally spaced levels. The library provides:
//!
//! - [`model`]: channel composition, receive SNR, MRT beamforming, required
//!   transmit power;
//! - [`chansim`]: path-loss geometry and seeded Rayleigh-fading channel draws;
//! - [`solver`]: alternating optimization over discrete phases, the continuous
//!   benchmark, quantized initialization, and an exhaustive-search oracle;
//! - [`analysis`]: the closed-form quantization-loss factor `eta(b)` and its
//!   Monte Carlo verification;
//! - [`experiments`]: paired-draw benchmark sweeps with CSV/JSON output;
//! - [`cli`]: the `irsim` command-line front end.

pub mod analysis;
pub mod chansim;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod model;
pub mod solver;
pub mod units;

pub use error::{Error, Result};
pub use model::{Beamformer, ChannelRealization, LinkBudget, PhaseResolution, PhaseShiftVector};
