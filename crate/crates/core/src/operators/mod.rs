//! Harmonic-analysis operators on uniform grids.

pub mod convolve;
pub mod kernels;
pub mod maximal;
pub mod potential;
pub mod spectral;
pub mod time;

pub use kernels::{grad_heat_kernel_defect, grad_heat_sweep};
pub use maximal::{distinct_radii, geometric_radii, maximal_function, radial_majorant_defect};
pub use potential::{riesz_potential_1d, riesz_potential_at, riesz_potential_direct};
pub use spectral::{
    derivative, gradient, heat_convolve, heat_convolve_vector, leray_project, riesz_transform,
    spectral_divergence, tensor_divergence, SpectralWorkspace,
};
pub use time::{duhamel_force, DuhamelStream, TimeGrid};
