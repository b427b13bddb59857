//! Gaussian averaging over transit times.
//!
//! The kernel has standard deviation `sigma = sigma_rel * tau`, is truncated
//! at `tau +/- width * sigma`, clipped at zero, and renormalised over the
//! window that remains. Renormalisation means constants map to themselves
//! exactly.

use super::quadrature::{quad_with, AdaptiveOptions, QuadratureRule};
use crate::error::{Error, Result};

/// The relative transit-time spread of the reference atomic beam.
pub const DEFAULT_SIGMA_REL: f64 = 0.025;

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingOptions {
    /// Truncation half-width in units of sigma.
    pub width: f64,
    pub rule: QuadratureRule,
    pub adaptive: AdaptiveOptions,
}

impl Default for SmoothingOptions {
    fn default() -> Self {
        Self {
            width: 5.0,
            rule: QuadratureRule::standard(),
            adaptive: AdaptiveOptions {
                rel_tol: 1e-11,
                ..AdaptiveOptions::default()
            },
        }
    }
}

/// Truncated Gaussian window around `tau`.
#[derive(Debug, Clone, Copy)]
struct Window {
    tau: f64,
    sigma: f64,
    lo: f64,
    hi: f64,
}

impl Window {
    fn new(tau: f64, sigma_rel: f64, width: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::Domain {
                what: "gaussian_smooth: tau",
                value: tau,
            });
        }
        if !(sigma_rel > 0.0) || !sigma_rel.is_finite() {
            return Err(Error::Domain {
                what: "gaussian_smooth: sigma_rel",
                value: sigma_rel,
            });
        }
        let sigma = sigma_rel * tau;
        Ok(Self {
            tau,
            sigma,
            lo: (tau - width * sigma).max(0.0),
            hi: tau + width * sigma,
        })
    }

    fn kernel(&self, t: f64) -> f64 {
        let z = (t - self.tau) / self.sigma;
        (-0.5 * z * z).exp()
    }

    fn mass(&self, opts: &SmoothingOptions) -> Result<f64> {
        quad_with(
            |t| self.kernel(t),
            self.lo,
            self.hi,
            &opts.rule,
            &opts.adaptive,
        )
    }
}

/// Velocity-averaged value of `g` at mean transit time `tau`.
pub fn gaussian_smooth<F: Fn(f64) -> f64>(g: F, tau: f64, sigma_rel: f64) -> Result<f64> {
    gaussian_smooth_with(g, tau, sigma_rel, &SmoothingOptions::default())
}

pub fn gaussian_smooth_with<F: Fn(f64) -> f64>(
    g: F,
    tau: f64,
    sigma_rel: f64,
    opts: &SmoothingOptions,
) -> Result<f64> {
    let w = Window::new(tau, sigma_rel, opts.width)?;
    let num = quad_with(
        |t| g(t) * w.kernel(t),
        w.lo,
        w.hi,
        &opts.rule,
        &opts.adaptive,
    )?;
    Ok(num / w.mass(opts)?)
}

/// Smoothed `1 / sqrt(t^2 - n^2)` (zero for `t <= |n|`).
///
/// The square-root singularity at `t = |n|` is removed with the substitution
/// `t = |n| cosh u`, under which `dt / sqrt(t^2 - n^2) = du`.
pub fn gaussian_smooth_inverse_root(n: f64, tau: f64, sigma_rel: f64) -> Result<f64> {
    gaussian_smooth_inverse_root_with(n, tau, sigma_rel, &SmoothingOptions::default())
}

pub fn gaussian_smooth_inverse_root_with(
    n: f64,
    tau: f64,
    sigma_rel: f64,
    opts: &SmoothingOptions,
) -> Result<f64> {
    let w = Window::new(tau, sigma_rel, opts.width)?;
    let m = n.abs();
    if m >= w.hi {
        return Ok(0.0);
    }
    let num = if m == 0.0 {
        quad_with(|t| w.kernel(t) / t, w.lo, w.hi, &opts.rule, &opts.adaptive)?
    } else {
        let u_lo = (w.lo.max(m) / m).acosh();
        let u_hi = (w.hi / m).acosh();
        quad_with(
            |u: f64| w.kernel(m * u.cosh()),
            u_lo,
            u_hi,
            &opts.rule,
            &opts.adaptive,
        )?
    };
    Ok(num / w.mass(opts)?)
}
