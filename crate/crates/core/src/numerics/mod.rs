//! Special functions and quadrature used by the model modules.

pub mod bessel;
pub mod fourier;
pub mod quadrature;
pub mod smoothing;

pub use bessel::{bessel_i_scaled, bessel_j, bessel_j_signed, bessel_j_table};
pub use fourier::{coefficient_at, fourier_coefficients};
pub use quadrature::{quad, quad_with, AdaptiveOptions, Integrand, QuadratureRule};
pub use smoothing::{
    gaussian_smooth, gaussian_smooth_inverse_root, gaussian_smooth_with, SmoothingOptions,
    DEFAULT_SIGMA_REL,
};
