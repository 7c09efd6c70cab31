//! Process-matrix validation, classification and single-shot discrimination.
//!
//! The crate is organized bottom-up:
//!
//! - [`tensor`]: labelled dense operators, partial traces, spectral helpers;
//! - [`networks`]: Choi matrices, link products, non-signalling channels, combs;
//! - [`process`]: process matrices, the validity projector and the causal classes;
//! - [`sdp`]: an interior-point solver for Hermitian semidefinite programs;
//! - [`discrimination`]: optimal success probability, distances to classes,
//!   adaptive testers, strategy realization and the base norm;
//! - [`protocols`]: an explicit perfect-discrimination protocol between causal orders;
//! - [`cone`]: sampling checks of the cone duality behind the base norm;
//! - [`cli`]: the `pmdisc` command-line front end.

pub mod cli;
pub mod cone;
pub mod discrimination;
pub mod error;
pub mod io;
pub mod networks;
pub mod process;
pub mod protocols;
pub mod random;
pub mod sdp;
pub mod tensor;

pub use error::{Error, Result};
