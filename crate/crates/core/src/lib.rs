//! Phase and fringe-visibility model of a separated-arm ⁷Li atom
//! interferometer exposed to electric and magnetic fields.
//!
//! The crate is organised bottom-up:
//!
//! - [`hyperfine`]: hyperfine-Zeeman level structure, magnetic moments and
//!   detected sublevel populations.
//! - [`geometry`]: sampled longitudinal profiles, capacitor defect grids and
//!   trajectory weights.
//! - [`phases`]: every phase-shift contribution (Sagnac, Stark, Zeeman,
//!   Aharonov-Casher, He-McKellar-Wilkens, Aharonov-Bohm).
//! - [`averaging`]: velocity, trajectory and sublevel averaging that turns
//!   per-atom phases into a complex fringe visibility.
//! - [`dynamics`]: force identities for an induced dipole in static fields.
//! - [`scenario`]: config-driven scan runner, two-coil fitter, CSV/JSON output.
//! - [`verification`]: independent reference computations and the acceptance
//!   checks exposed by `hmw check`.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod averaging;
pub mod constants;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod hyperfine;
pub mod phases;
pub mod quadrature;
pub mod scenario;
pub mod verification;

pub use error::{Error, Result};
