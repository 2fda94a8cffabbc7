//! Spectrum sensing simulation toolkit.
//!
//! The crate models the classic two-hypothesis sensing problem
//! (`H0`: noise only, `H1`: primary signal plus noise) and provides:
//!
//! - [`signals`]: primary-user waveforms, AWGN, and a block Rayleigh multipath channel.
//! - [`spectral`]: radix-2 FFT, periodogram, and Welch PSD estimation.
//! - [`energy`]: energy detector with exact CFAR threshold and equal-error threshold search.
//! - [`wavelet`]: multiscale wavelet product edge detection over the PSD and occupancy maps.
//! - [`integrate`]: the narrowband/wideband router that picks one detector per observation.
//! - [`harness`]: deterministic, parallel Monte Carlo experiments (Pd vs SNR, ROC, fading, CFAR).
//! - [`cli`]: configuration, IQ recordings, CSV export and the `specsense` command.
//!
//! All randomness flows through [`signals::SimRng`], so every result is a pure
//! function of its inputs and seed.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(a < b)` also rejects NaN

pub mod cli;
pub mod energy;
pub mod error;
pub mod harness;
pub mod integrate;
pub mod signals;
pub mod spectral;
pub mod wavelet;

pub use error::{Error, Result};
pub use num_complex::Complex64;
