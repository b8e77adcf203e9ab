//! Optomechanical Raman-ratio thermometry.
//!
//! The ratio of Stokes to anti-Stokes Raman sidebands scattered off a
//! mechanical mode measures its occupation directly, `n = 1 / (R - 1)`, with
//! no knowledge of coupling rates, detection efficiency or gain. This crate
//! contains everything needed to simulate and invert that measurement:
//!
//! * [`physics`]: occupation/temperature relations, optical damping,
//!   backaction and the damped steady state of a mode.
//! * [`spectrum`]: the two-window heterodyne spectrum model and its
//!   statistically faithful periodogram realisation.
//! * [`fit`]: Lorentzian peak fitting, background estimation and band
//!   integration on periodograms.
//! * [`thermometry`]: sideband-ratio estimators, heterodyne calibration,
//!   extrapolation of the physical temperature and error propagation.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![deny(rust_2018_idioms)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
pub mod fit;
pub mod physics;
pub mod rng;
pub mod spectrum;
pub mod thermometry;

pub use error::{Error, Result};
