//! Geodesic ray transforms on spherically symmetric manifolds with radial,
//! piecewise smooth wave speeds, and generalized Abel transforms with
//! singular kernels.

pub mod error;
pub mod funk;
pub mod geodesics;
pub mod abel;
pub mod cli;
pub mod grid;
pub mod transforms;
pub mod quadrature;
pub mod wave_speed;

pub use error::{Error, Result};
pub use grid::GridFunction;
pub use wave_speed::{HerglotzReport, Segment, WaveSpeed};
