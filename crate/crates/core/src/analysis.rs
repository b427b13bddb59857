//! Cross-model tools: velocity averaging, the classical limit, moments,
//! characteristic-function inversion, the monotonicity discriminator, and
//! spectrum comparison.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::fourier::{coefficient_at, fourier_coefficients};
use crate::numerics::smoothing::{
    gaussian_smooth, gaussian_smooth_inverse_root, DEFAULT_SIGMA_REL,
};
use crate::qm_model::{allowed_order, PhysicalContext};
use crate::spectrum::{HalfIndex, ModelTag, Spectrum};

/// Relative spread of transit times in the beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityProfile {
    sigma_rel: f64,
}

impl VelocityProfile {
    pub const MAX_SIGMA_REL: f64 = 0.2;

    pub fn new(sigma_rel: f64) -> Result<Self> {
        if !(sigma_rel > 0.0 && sigma_rel <= Self::MAX_SIGMA_REL) {
            return Err(Error::Domain {
                what: "VelocityProfile: sigma_rel",
                value: sigma_rel,
            });
        }
        Ok(Self { sigma_rel })
    }

    pub fn sigma_rel(&self) -> f64 {
        self.sigma_rel
    }
}

impl Default for VelocityProfile {
    fn default() -> Self {
        Self {
            sigma_rel: DEFAULT_SIGMA_REL,
        }
    }
}

/// Velocity-averaged intensity of line `k` at mean transit time `tau`.
pub fn smooth_spectrum<F>(
    intensity_fn: F,
    k: HalfIndex,
    tau: f64,
    profile: VelocityProfile,
) -> Result<f64>
where
    F: Fn(HalfIndex, f64) -> f64,
{
    gaussian_smooth(|t| intensity_fn(k, t), tau, profile.sigma_rel)
}

/// [`smooth_spectrum`] over a set of lines, evaluated in parallel.
pub fn smoothed_spectrum<F, I>(
    intensity_fn: F,
    ks: I,
    tau: f64,
    profile: VelocityProfile,
    model: ModelTag,
) -> Result<Spectrum>
where
    F: Fn(HalfIndex, f64) -> f64 + Sync,
    I: IntoIterator<Item = HalfIndex>,
{
    let ks: Vec<HalfIndex> = ks.into_iter().collect();
    let values: Vec<f64> = ks
        .par_iter()
        .map(|&k| smooth_spectrum(&intensity_fn, k, tau, profile))
        .collect::<Result<_>>()?;
    let mut out = Spectrum::new(tau, model);
    for (k, v) in ks.into_iter().zip(values) {
        out.insert(k, v);
    }
    Ok(out)
}

/// Arcsine density `1 / (pi sqrt(tau^2 - p^2))` of the deterministic
/// momentum `tau sin 2 zeta` under a uniform phase; zero for `|p| > tau`.
///
/// Requires `tau > 0`; returns NaN otherwise. At `|p| = tau` the edge rule of
/// the large-tau line formulas applies.
pub fn classical_density(p: f64, tau: f64) -> f64 {
    if !(tau > 0.0) {
        return f64::NAN;
    }
    match allowed_order(p, tau) {
        None => 0.0,
        Some(m) => 1.0 / (PI * (tau * tau - m * m).sqrt()),
    }
}

/// Velocity-averaged [`classical_density`] at integral momentum `n`.
pub fn smoothed_classical(n: f64, tau: f64, profile: VelocityProfile) -> Result<f64> {
    Ok(gaussian_smooth_inverse_root(n, tau, profile.sigma_rel)? / PI)
}

/// Which lattice of lines a characteristic function lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    /// Integral lines only; period `2 pi`.
    Integer,
    /// Half-integral lines too; period `4 pi`.
    Half,
}

impl Support {
    pub fn period(self) -> f64 {
        match self {
            Support::Integer => 2.0 * PI,
            Support::Half => 4.0 * PI,
        }
    }
}

/// Characteristic function sampled uniformly over one period.
#[derive(Debug, Clone, PartialEq)]
pub struct CharFnSamples {
    pub support: Support,
    pub values: Vec<Complex64>,
}

impl CharFnSamples {
    pub fn sample<F: Fn(f64) -> Complex64>(f: F, support: Support, count: usize) -> Self {
        let p = support.period();
        let values = (0..count).map(|j| f(p * j as f64 / count as f64)).collect();
        Self { support, values }
    }
}

/// Largest departure of `F(0)` from 1 accepted by [`invert_charfn`].
pub const CHARFN_NORMALIZATION_TOL: f64 = 1e-8;
/// Most negative coefficient treated as rounding and clamped to zero.
pub const INVERSION_NEGATIVE_FLOOR: f64 = -1e-8;

/// Lines `|k| <= kmax` recovered from sampled characteristic-function values
/// by discrete Fourier transform.
pub fn invert_charfn(samples: &CharFnSamples, tau: f64, kmax: i64) -> Result<Spectrum> {
    let f0 = *samples
        .values
        .first()
        .ok_or_else(|| Error::InvalidInput("no characteristic-function samples".into()))?;
    if (f0 - 1.0).norm() > CHARFN_NORMALIZATION_TOL {
        return Err(Error::NotNormalized { value: f0.re });
    }
    let coeffs = fourier_coefficients(&samples.values);
    let nyquist = (samples.values.len() / 2) as i64 - 1;
    let mut out = Spectrum::new(tau, ModelTag::Inverted);
    let (stride, limit) = match samples.support {
        Support::Integer => (2, (kmax / 2).min(nyquist)),
        Support::Half => (1, kmax.min(nyquist)),
    };
    for m in -limit..=limit {
        let v = coefficient_at(&coeffs, m).re;
        let k = m * stride;
        if v < INVERSION_NEGATIVE_FLOOR {
            return Err(Error::NonPhysical { k, value: v });
        }
        out.insert(HalfIndex::new(k), v.max(0.0));
    }
    Ok(out)
}

/// `sum_k (k/2)^order rho_k`.
pub fn moments(spectrum: &Spectrum, order: u32) -> f64 {
    spectrum
        .iter()
        .map(|(k, l)| k.n().powi(order as i32) * l.intensity)
        .sum()
}

/// Mean line `-i F'(0)` from Richardson-extrapolated central differences.
pub fn charfn_mean<F: Fn(f64) -> Complex64>(f: F, h: f64) -> f64 {
    let d = |h: f64| (f(h) - f(-h)) / (2.0 * h);
    let r = (4.0 * d(0.5 * h) - d(h)) / 3.0;
    r.im
}

/// Second moment `-F''(0)` from Richardson-extrapolated central differences.
pub fn charfn_second_moment<F: Fn(f64) -> Complex64>(f: F, h: f64) -> f64 {
    let f0 = f(0.0);
    let d = |h: f64| (f(h) - 2.0 * f0 + f(-h)) / (h * h);
    let r = (4.0 * d(0.5 * h) - d(h)) / 3.0;
    -r.re
}

/// Relative rise in `tau^-n rho_n` between neighbouring grid points
/// reported as a violation.
pub const ASCENT_TOL: f64 = 1e-10;
/// Coarsest grid accepted by [`monotonicity_check`].
pub const MAX_GRID_STEP: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct Ascent {
    pub tau_from: f64,
    pub tau_to: f64,
    /// `g(tau_to) - g(tau_from)` with `g = tau^-n rho_n`.
    pub rise: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub n: i64,
    pub points: usize,
    pub ascents: Vec<Ascent>,
}

impl MonotonicityReport {
    pub fn pass(&self) -> bool {
        self.ascents.is_empty()
    }
}

/// Checks that `tau^-n rho_n(tau)` decreases along `tau_grid`.
///
/// A step counts as an ascent when the rise exceeds [`ASCENT_TOL`] times
/// the magnitude of the earlier value.
pub fn monotonicity_check<F: Fn(f64) -> f64>(
    intensity_fn: F,
    n: i64,
    tau_grid: &[f64],
) -> Result<MonotonicityReport> {
    if tau_grid.len() < 2 {
        return Err(Error::InvalidInput("grid needs at least two points".into()));
    }
    if !(tau_grid[0] > 0.0) {
        return Err(Error::Domain {
            what: "monotonicity_check: grid start",
            value: tau_grid[0],
        });
    }
    for w in tau_grid.windows(2) {
        let step = w[1] - w[0];
        if !(step > 0.0) || step > MAX_GRID_STEP * (1.0 + 1e-9) {
            return Err(Error::InvalidInput(format!(
                "grid step {step} at tau={} must be positive and at most {MAX_GRID_STEP}",
                w[0]
            )));
        }
    }
    let m = n.unsigned_abs() as i32;
    let g: Vec<f64> = tau_grid
        .iter()
        .map(|&t| intensity_fn(t) / t.powi(m))
        .collect();
    let ascents = g
        .windows(2)
        .zip(tau_grid.windows(2))
        .filter_map(|(v, t)| {
            let rise = v[1] - v[0];
            (rise > ASCENT_TOL * v[0].abs()).then_some(Ascent {
                tau_from: t[0],
                tau_to: t[1],
                rise,
            })
        })
        .collect();
    Ok(MonotonicityReport {
        n,
        points: tau_grid.len(),
        ascents,
    })
}

/// Uniform grid `step, 2 step, ..., <= tau_max`.
pub fn tau_grid(tau_max: f64, step: f64) -> Vec<f64> {
    let count = (tau_max / step + 1e-9).floor() as usize;
    (1..=count).map(|i| i as f64 * step).collect()
}

/// Deflection of line `k`: `(k/2) 2 h / (lambda M v)` radians.
pub fn deflection_angle(k: HalfIndex, ctx: &PhysicalContext) -> f64 {
    k.n() * ctx.deflection_unit()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// `sum_k |a_k - b_k|`.
    L1,
    /// `max_k |a_k - b_k|` divided by the larger peak of the two spectra.
    /// The peak is taken over the full spectra even when the compared
    /// window is restricted.
    Sup,
    /// Reduced chi-square of `b` about `a`.
    Chi2,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::L1 => "l1",
            Metric::Sup => "sup",
            Metric::Chi2 => "chi2",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Metric::L1),
            "sup" => Ok(Metric::Sup),
            "chi2" => Ok(Metric::Chi2),
            _ => Err(Error::InvalidInput(format!("unknown metric {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareOptions {
    pub tol: f64,
    /// Restrict the comparison to `|k| <= max_abs_k`.
    pub max_abs_k: Option<i64>,
    /// Smallest expected count `a_k N` for a line to enter the chi-square.
    pub min_expected: f64,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            tol: 0.02,
            max_abs_k: None,
            min_expected: 20.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub k: HalfIndex,
    pub a: f64,
    pub b: f64,
    pub diff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub metric: Metric,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
    /// Lines entering the chi-square; `None` for the other metrics.
    pub dof: Option<usize>,
    pub residuals: Vec<Residual>,
}

/// Compares `b` against reference `a` over the union of their supports.
///
/// For the chi-square, each line uses `b`'s standard error when it has one
/// and the binomial error of `a` with `b`'s sample count otherwise, and only
/// lines with at least `min_expected` expected counts contribute. The
/// reported value is chi-square per line used.
pub fn compare_spectra(
    a: &Spectrum,
    b: &Spectrum,
    metric: Metric,
    opts: &CompareOptions,
) -> Result<ComparisonReport> {
    let scale = a.tau.abs().max(b.tau.abs()).max(1.0);
    if !((a.tau - b.tau).abs() <= 1e-12 * scale) {
        return Err(Error::IncompatibleTau { a: a.tau, b: b.tau });
    }
    let mut ks: Vec<HalfIndex> = a.labels().chain(b.labels()).collect();
    ks.sort();
    ks.dedup();
    if let Some(m) = opts.max_abs_k {
        ks.retain(|k| k.k().abs() <= m);
    }
    let residuals: Vec<Residual> = ks
        .iter()
        .map(|&k| {
            let (x, y) = (a.intensity(k), b.intensity(k));
            Residual {
                k,
                a: x,
                b: y,
                diff: y - x,
            }
        })
        .collect();

    let (value, dof) = match metric {
        Metric::L1 => (residuals.iter().map(|r| r.diff.abs()).sum(), None),
        Metric::Sup => {
            let peak = a.peak().max(b.peak());
            let worst = residuals.iter().map(|r| r.diff.abs()).fold(0.0, f64::max);
            (if worst == 0.0 { 0.0 } else { worst / peak }, None)
        }
        Metric::Chi2 => {
            let n = b.samples.ok_or_else(|| {
                Error::InvalidInput("chi2 needs a sampled spectrum as the second input".into())
            })? as f64;
            let mut chi2 = 0.0;
            let mut used = 0usize;
            for r in &residuals {
                if r.a * n < opts.min_expected {
                    continue;
                }
                let se = b
                    .line(r.k)
                    .and_then(|l| l.stderr)
                    .filter(|s| *s > 0.0)
                    .unwrap_or_else(|| (r.a * (1.0 - r.a) / n).sqrt());
                chi2 += (r.diff / se).powi(2);
                used += 1;
            }
            if used == 0 {
                return Err(Error::InvalidInput(
                    "no line reaches the expected-count threshold".into(),
                ));
            }
            (chi2 / used as f64, Some(used))
        }
    };
    Ok(ComparisonReport {
        metric,
        value,
        tol: opts.tol,
        pass: value <= opts.tol,
        dof,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quadrature::{quad, QuadratureRule};
    use crate::qm_model::{qm0_charfn, qm0_intensity, qm0_spectrum};
    use crate::spectrum::{half_window, integer_window};
    use crate::stochastic_model::{
        stoch0_asymptotic, stoch0_charfn, stoch0_intensity, stoch0_spectrum,
    };

    #[test]
    fn profile_bounds() {
        assert!(VelocityProfile::new(0.0).is_err());
        assert!(VelocityProfile::new(0.25).is_err());
        assert!(VelocityProfile::new(0.2).is_ok());
        assert_eq!(VelocityProfile::default().sigma_rel(), 0.025);
    }

    #[test]
    fn smoothing_tau_independent_spectrum() {
        let f = |k: HalfIndex, _t: f64| 1.0 / (1.0 + k.n().abs());
        for k in half_window(6) {
            let v = smooth_spectrum(f, k, 3.0, VelocityProfile::default()).unwrap();
            assert!((v - f(k, 0.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn smoothing_preserves_normalization_and_symmetry() {
        let p = VelocityProfile::new(0.1).unwrap();
        let s = smoothed_spectrum(
            |k, t| stoch0_intensity(k.k() / 2, t),
            integer_window(40),
            5.0,
            p,
            ModelTag::Stoch0,
        )
        .unwrap();
        assert!((s.total() - 1.0).abs() < 1e-6);
        assert_eq!(s.asymmetry(), 0.0);
    }

    #[test]
    fn classical_density_examples() {
        assert!((classical_density(0.0, 50.0) - 1.0 / (50.0 * PI)).abs() < 1e-17);
        assert!((classical_density(0.0, 50.0) - 0.0063662).abs() < 1e-7);
        assert_eq!(classical_density(51.0, 50.0), 0.0);
        // p = tau sin u removes the edge singularity
        let rule = QuadratureRule::standard();
        let tau = 7.0;
        let total: f64 = quad(
            |u: f64| classical_density(tau * u.sin(), tau) * tau * u.cos(),
            -0.5 * PI,
            0.5 * PI,
            &rule,
        )
        .unwrap();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn classical_equals_stochastic_asymptote() {
        for n in -49..=49 {
            let a = classical_density(n as f64, 50.0);
            let b = stoch0_asymptotic(n, 50.0);
            assert!((a - b).abs() <= 1e-12 * a);
        }
    }

    #[test]
    fn smoothed_classical_matches_combined_prefactor_form() {
        // (1 / (pi sigma sqrt(2 pi))) int exp(-(t-tau)^2 / 2 sigma^2) / sqrt(t^2 - n^2) dt
        let tau = 50.0;
        let sigma = 0.025 * tau;
        let n: f64 = 30.0;
        let rule = QuadratureRule::standard();
        let lo = (tau - 8.0 * sigma) / n;
        let hi = (tau + 8.0 * sigma) / n;
        let integral: f64 = quad(
            |u: f64| (-(n * u.cosh() - tau).powi(2) / (2.0 * sigma * sigma)).exp(),
            lo.acosh(),
            hi.acosh(),
            &rule,
        )
        .unwrap();
        let combined = integral / (PI * sigma * (2.0 * PI).sqrt());
        let ours = smoothed_classical(n, tau, VelocityProfile::default()).unwrap();
        assert!(((ours - combined) / combined).abs() < 1e-5);
    }

    #[test]
    fn invert_constant_is_point_mass() {
        let s = CharFnSamples::sample(|_| Complex64::new(1.0, 0.0), Support::Half, 64);
        let spectrum = invert_charfn(&s, 0.0, 20).unwrap();
        assert!((spectrum.intensity(HalfIndex::ZERO) - 1.0).abs() < 1e-15);
        assert!(spectrum
            .iter()
            .all(|(k, l)| k.k() == 0 || l.intensity < 1e-15));
    }

    #[test]
    fn invert_recovers_bessel_and_stochastic_lines() {
        let s = CharFnSamples::sample(|t| qm0_charfn(t, 3.0), Support::Integer, 512);
        let spectrum = invert_charfn(&s, 3.0, 60).unwrap();
        for n in -20..=20 {
            let d = spectrum.intensity(HalfIndex::integer(n)) - qm0_intensity(n, 3.0);
            assert!(d.abs() < 1e-8);
        }
        let s = CharFnSamples::sample(|t| stoch0_charfn(t, 3.0), Support::Integer, 512);
        let spectrum = invert_charfn(&s, 3.0, 60).unwrap();
        for n in -20..=20 {
            let d = spectrum.intensity(HalfIndex::integer(n)) - stoch0_intensity(n, 3.0);
            assert!(d.abs() < 1e-8);
        }
    }

    #[test]
    fn invert_rejects_inconsistent_input() {
        let s = CharFnSamples::sample(|_| Complex64::new(0.5, 0.0), Support::Integer, 16);
        assert!(matches!(
            invert_charfn(&s, 0.0, 4),
            Err(Error::NotNormalized { .. })
        ));
        // F = 1.5 - 0.5 cos(theta) is normalised but has lines of -1/4
        let s = CharFnSamples::sample(
            |t| Complex64::new(1.5 - 0.5 * t.cos(), 0.0),
            Support::Integer,
            16,
        );
        assert!(matches!(
            invert_charfn(&s, 0.0, 4),
            Err(Error::NonPhysical { .. })
        ));
    }

    #[test]
    fn moment_examples() {
        for &tau in &[1.0, 3.0, 10.0] {
            let q = qm0_spectrum(tau, 60);
            assert!(moments(&q, 1).abs() < 1e-14);
            assert!((moments(&q, 2) - tau * tau / 2.0).abs() < 1e-9);
            let s = stoch0_spectrum(tau, 80);
            assert!((moments(&s, 2) - (tau * tau / 2.0 + tau)).abs() < 1e-9);
        }
    }

    #[test]
    fn charfn_moments_match_summation() {
        let tau = 3.0;
        let s = stoch0_spectrum(tau, 60);
        let fd = charfn_second_moment(|t| stoch0_charfn(t, tau), 1e-3);
        assert!((fd - moments(&s, 2)).abs() < 1e-5);
        let m1 = charfn_mean(|t| s.char_fn(t), 1e-3);
        assert!(m1.abs() < 1e-12);
        let fd = charfn_second_moment(|t| qm0_charfn(t, tau), 1e-3);
        assert!((fd - tau * tau / 2.0).abs() < 1e-6);
    }

    #[test]
    fn monotonicity_examples() {
        let grid = tau_grid(10.0, 0.01);
        assert_eq!(grid.len(), 1000);
        let r = monotonicity_check(|t| stoch0_intensity(0, t), 0, &grid).unwrap();
        assert!(r.pass());
        let r = monotonicity_check(|t| stoch0_intensity(3, t), 3, &grid).unwrap();
        assert!(r.pass());
        let r = monotonicity_check(|t| qm0_intensity(0, t), 0, &grid).unwrap();
        assert!(!r.pass());
        let first = &r.ascents[0];
        assert!(first.tau_from > 2.39 && first.tau_from < 2.41);
    }

    #[test]
    fn monotonicity_grid_validation() {
        assert!(monotonicity_check(|t| t, 0, &[0.1, 0.2]).is_err());
        assert!(monotonicity_check(|t| t, 0, &[0.0, 0.01]).is_err());
        assert!(monotonicity_check(|t| t, 0, &[0.1]).is_err());
    }

    #[test]
    fn deflection_examples() {
        let ctx = PhysicalContext::sodium_d_line();
        assert_eq!(deflection_angle(HalfIndex::ZERO, &ctx), 0.0);
        let one = deflection_angle(HalfIndex::integer(1), &ctx);
        assert!((one - 5.893e-5).abs() < 1e-8);
        let four = deflection_angle(HalfIndex::new(8), &ctx);
        assert!((four - 2.357e-4).abs() < 1e-7);
    }

    #[test]
    fn compare_identical_and_incompatible() {
        let a = stoch0_spectrum(3.0, 20);
        for m in [Metric::L1, Metric::Sup] {
            let r = compare_spectra(&a, &a, m, &CompareOptions::default()).unwrap();
            assert_eq!(r.value, 0.0);
            assert!(r.pass);
        }
        let b = stoch0_spectrum(3.1, 20);
        assert!(matches!(
            compare_spectra(&a, &b, Metric::L1, &CompareOptions::default()),
            Err(Error::IncompatibleTau { .. })
        ));
        assert!(compare_spectra(&a, &a, Metric::Chi2, &CompareOptions::default()).is_err());
        assert_eq!("SUP".parse::<Metric>().unwrap(), Metric::Sup);
        assert!("max".parse::<Metric>().is_err());
    }

    #[test]
    fn compare_zero_fills_union() {
        let mut a = Spectrum::new(1.0, ModelTag::Qm0);
        a.insert(HalfIndex::new(0), 1.0);
        let mut b = Spectrum::new(1.0, ModelTag::Qm0);
        b.insert(HalfIndex::new(2), 1.0);
        let r = compare_spectra(&a, &b, Metric::L1, &CompareOptions::default()).unwrap();
        assert_eq!(r.value, 2.0);
        assert_eq!(r.residuals.len(), 2);
        let opts = CompareOptions {
            max_abs_k: Some(0),
            ..CompareOptions::default()
        };
        let r = compare_spectra(&a, &b, Metric::Sup, &opts).unwrap();
        assert_eq!(r.residuals.len(), 1);
        assert_eq!(r.value, 1.0);
    }

    #[test]
    fn unsmoothed_models_differ_at_bessel_zero() {
        let tau = 2.404825557695773;
        let a = qm0_spectrum(tau, 20);
        let b = stoch0_spectrum(tau, 20);
        let r = compare_spectra(&a, &b, Metric::Sup, &CompareOptions::default()).unwrap();
        assert!(!r.pass);
        let centre = r.residuals.iter().find(|x| x.k == HalfIndex::ZERO).unwrap();
        assert!(centre.a < 1e-12 && centre.b > 0.17);
    }
}
