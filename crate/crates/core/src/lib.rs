//! Inverse mask design for one-dimensional matter-wave lithography.
//!
//! The forward model propagates a plane wave through a binary slit mask in the
//! Fraunhofer regime, including the phase imprinted by atom–wall dispersion
//! forces and the effective narrowing of each opening. On top of it sit a
//! single-slit lookup table, a random-mask dataset generator and a genetic
//! solver that searches for a mask reproducing a target intensity pattern.

pub mod config;
pub mod dataset;
pub mod error;
pub mod files;
pub mod forward;
pub mod ga;
pub mod geometry;
pub mod grid;
pub mod mask;
pub mod physics;
pub mod plot;
pub mod quadrature;
pub mod spectrum;
pub mod table;

pub mod cli;

pub use error::{Error, ErrorKind, Result};
pub use forward::{abs_deviation, error_mse, field, fitness, forward, Propagator};
pub use geometry::{GeometryConfig, Mode};
pub use grid::{DetectorGrid, IntensityPattern, Normalization, WaveField};
pub use mask::{mask_to_openings, Mask, SlitOpening};
pub use table::SlitTable;
