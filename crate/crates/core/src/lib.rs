//! Microwave-loss analysis for superconducting coplanar-waveguide resonators.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: modified Bessel functions and a bounded Levenberg-Marquardt solver.
//! - [`mbcore`]: superconducting gap, Mattis-Bardeen conductivity, thermal
//!   quasiparticle density and surface impedance.
//! - [`lossmodel`]: TLS and quasiparticle loss channels, loss budgets and the
//!   density extraction that inverts the quasiparticle loss model.
//! - [`resfit`]: notch-type S21 model, resonance fitting, photon number and
//!   coupling/loss regime labels.
//! - [`synth`]: forward simulator producing synthetic sweeps with known truth.
//! - [`pipeline`]: configuration, ingestion (CSV and Touchstone), batch
//!   analysis and report emission.

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod error;
pub mod lossmodel;
pub mod mbcore;
pub mod numfmt;
pub mod numerics;
pub mod pipeline;
pub mod resfit;
pub mod synth;

pub use error::{Error, Result};

/// Crate version, stamped into report provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
