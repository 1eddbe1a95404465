//! Benford-similarity analysis of audio spectra.
//!
//! The library tests whether the leading digits of short-time magnitude
//! spectra follow the first-digit law, extracts the 11-dimensional BenS
//! (Benford similarity) feature vector from utterances, and trains and
//! evaluates a kernel SVM that separates Benford-conforming voiced audio
//! from non-conforming noise under leave-one-speaker-out cross-validation.
//!
//! Start from the runnable programs in `examples/` for each capability; the
//! `bens` binary exposes the same workflow as subcommands.

pub mod audio_io;
pub mod benford;
pub mod classify;
pub mod cli;
pub mod datagen;
pub mod error;
pub mod features;
pub mod manifest;
pub mod seed;
pub mod spectral;

pub use error::{Error, ErrorClass, Result};
