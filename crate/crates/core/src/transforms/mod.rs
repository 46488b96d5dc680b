//! Geodesic ray transforms of functions on the annulus, mode by mode.

mod averages;
pub(crate) mod field;
mod forward;
mod inversion;

pub use averages::{
    pbrt_direct, pbrt_forward, pbrt_forward_with, periodic_index, periodic_index_with, planar_average,
    planar_average_3d,
};
pub use field::{fourier_decompose, fourier_synthesize, FourierField, PolarSamples};
pub use forward::{
    attenuation_e, attenuation_lambda, mode_forward, mode_forward_at, mode_forward_attenuated,
    mode_forward_attenuated_at, read_sinograms_csv, sinograms, tip_grid, write_sinograms_csv,
    xray_forward, AttenuationProfile, Sinogram,
};
pub use inversion::{
    a0_invert, brt_circle_average, xray_invert_modes, xray_invert_modes_with, InversionOptions,
};

/// Default number of tips in a sinogram.
pub const DEFAULT_TIPS: usize = 512;
