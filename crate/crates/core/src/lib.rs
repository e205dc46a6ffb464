//! Two-mode coupled-mode theory for photon–photon coupling-induced
//! transparency (CIT) and absorption (CIA).
//!
//! The crate is organised bottom-up:
//!
//! * [`params`] – the raw parameter model and the derived effective quantities.
//! * [`grid`] – evenly spaced frequency axes.
//! * [`spectrum`] – complex mode amplitudes, S21 and dispersion maps.
//! * [`eigen`] – the non-Hermitian 2×2 coupling matrix, continuity-tracked
//!   eigenbranches, regime classification and phase diagrams.
//! * [`oracle`] – a time-domain integrator of the driven mode equations, used
//!   as an independent check on the closed-form transmission.
//! * [`fitting`] – peak extraction, branch datasets and coupling fits.
//! * [`geometry`] – a lumped-LC surrogate for resonator geometry.
//! * [`config`], [`export`], [`presets`] – key–value configs and CSV emission.
//!
//! Batch entry points accept an [`Execution`] policy. With the `parallel`
//! feature (default) the parallel policy runs on rayon; without it every
//! policy evaluates sequentially. Results are identical either way.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod eigen;
mod error;
mod exec;
pub mod export;
pub mod fitting;
pub mod geometry;
pub mod grid;
pub mod linalg;
pub mod optimize;
pub mod oracle;
pub mod params;
pub mod presets;
pub mod spectrum;

pub use num_complex::Complex64 as C64;

pub use error::{Error, ErrorClass, Result};
pub use exec::Execution;
pub use grid::FrequencyGrid;
pub use params::{effective_params, EffectiveParams, SystemParams};
