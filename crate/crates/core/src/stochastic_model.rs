//! Markov scattering model: a single-step walk on the integral lines driven
//! by phase-dependent rates, and its extension with half-integral lines.
//!
//! The hidden phase `zeta` is uniform on `(-pi/2, pi/2]` and is averaged out
//! of every spectrum returned here.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::bessel::{j_table, ln_factorial, ln_gamma_half};
use crate::numerics::fourier::{coefficient_at, fourier_coefficients};
use crate::numerics::quadrature::{quad_with, AdaptiveOptions, QuadratureRule};
use crate::qm_model::allowed_order;
use crate::spectrum::{half_window, integer_window, HalfIndex, ModelTag, Parity, Spectrum};

/// Up and down jump rates per unit `tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePair {
    pub alpha: f64,
    pub beta: f64,
}

impl RatePair {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        for (what, v) in [("RatePair: alpha", alpha), ("RatePair: beta", beta)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Domain { what, value: v });
            }
        }
        Ok(Self { alpha, beta })
    }

    pub fn total(&self) -> f64 {
        self.alpha + self.beta
    }

    /// The same process with the direction of every jump reversed.
    pub fn swapped(&self) -> Self {
        Self {
            alpha: self.beta,
            beta: self.alpha,
        }
    }
}

/// `alpha = (1 + sin 2 zeta) / 2`, `beta = (1 - sin 2 zeta) / 2`.
pub fn concrete_rates(zeta: f64) -> RatePair {
    let s = (2.0 * zeta).sin();
    RatePair {
        alpha: 0.5 * (1.0 + s),
        beta: 0.5 * (1.0 - s),
    }
}

/// Sum of a positive series given `ln t_0` and `ln(t_{r+1} / t_r)`, carried
/// out relative to the largest term so that neither tail under- nor
/// overflows. Returns `(ln t_r)` for every retained term.
fn log_terms<R: Fn(u64) -> f64>(ln_first: f64, ln_ratio: R) -> Vec<f64> {
    const CUTOFF: f64 = 46.0; // e^-46 ~ 1e-20
    const MAX_TERMS: u64 = 1_000_000;
    let mut out = vec![ln_first];
    let mut cur = ln_first;
    let mut peak = ln_first;
    for r in 0..MAX_TERMS {
        let step = ln_ratio(r);
        if step == f64::NEG_INFINITY {
            break;
        }
        cur += step;
        peak = peak.max(cur);
        out.push(cur);
        if step < 0.0 && cur < peak - CUTOFF {
            break;
        }
    }
    out
}

fn log_sum(terms: &[f64]) -> f64 {
    let peak = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return 0.0;
    }
    let s: f64 = terms.iter().map(|l| (l - peak).exp()).sum();
    (peak + s.ln()).exp()
}

/// `P_n(tau)` for the walk with fixed rates, by the series
/// `exp(-(a+b) tau) sum_r (a tau)^(n+r) (b tau)^r / (r! (n+r)!)`, with
/// `P_{-n}(a, b) = P_n(b, a)`.
pub fn occupation_prob(n: i64, tau: f64, rates: RatePair) -> f64 {
    if n < 0 {
        return occupation_prob(-n, tau, rates.swapped());
    }
    if !(tau > 0.0) || rates.total() == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let a = rates.alpha * tau;
    let b = rates.beta * tau;
    if a == 0.0 && n > 0 {
        return 0.0;
    }
    let nu = n as u64;
    let n_ln_a = if n == 0 { 0.0 } else { nu as f64 * a.ln() };
    let ln_first = -(a + b) + n_ln_a - ln_factorial(nu);
    if b == 0.0 || a == 0.0 {
        return ln_first.exp();
    }
    let ln_ab = a.ln() + b.ln();
    let terms = log_terms(ln_first, |r| {
        ln_ab - ((r + 1) as f64).ln() - ((nu + r + 1) as f64).ln()
    });
    log_sum(&terms)
}

/// `ln` of the terms `exp(-tau) Gamma(r+1/2) Gamma(n+r+1/2) tau^(n+2r) /
/// (pi r! (n+r)! (n+2r)!)` of the phase-averaged series, `n >= 0`, `tau > 0`.
fn stoch0_log_terms(n: u64, tau: f64) -> Vec<f64> {
    let ln_tau = tau.ln();
    let ln_first = -tau - PI.ln() + ln_gamma_half(0) + ln_gamma_half(n) + n as f64 * ln_tau
        - 2.0 * ln_factorial(n);
    log_terms(ln_first, |r| {
        let (r, n) = (r as f64, n as f64);
        (r + 0.5).ln() + (n + r + 0.5).ln() + 2.0 * ln_tau
            - (r + 1.0).ln()
            - (n + r + 1.0).ln()
            - (n + 2.0 * r + 1.0).ln()
            - (n + 2.0 * r + 2.0).ln()
    })
}

/// Phase-averaged line intensity `rho_n^S(tau)` from its series in powers of
/// `tau`.
pub fn stoch0_intensity(n: i64, tau: f64) -> f64 {
    let m = n.unsigned_abs();
    if !(tau > 0.0) {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    log_sum(&stoch0_log_terms(m, tau))
}

/// `rho_n^S = (1/pi) int_{-pi/2}^{pi/2} P_n(tau; zeta) d zeta` by adaptive
/// quadrature, an independent route to [`stoch0_intensity`].
///
/// The reflection `P_n(zeta) = P_{-n}(zeta + pi/2)` folds the range onto
/// `[0, pi/2]` as `(1/pi) int_0^{pi/2} (P_n + P_{-n})`; the half-range
/// integral of `P_n` alone equals `rho_n^S` only for `n = 0`.
pub fn stoch0_intensity_quadrature(n: i64, tau: f64) -> Result<f64> {
    let opts = AdaptiveOptions {
        rel_tol: 1e-12,
        abs_tol: 1e-16,
        ..AdaptiveOptions::default()
    };
    let rule = QuadratureRule::standard();
    let v = quad_with(
        |z: f64| occupation_prob(n, tau, concrete_rates(z)),
        -FRAC_PI_2,
        FRAC_PI_2,
        &rule,
        &opts,
    )?;
    Ok(v / PI)
}

/// Value and first two `tau` derivatives of a line intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Coefficient of `tau^(n+2r)` in the phase-averaged series without the
/// `exp(-tau)` factor.
fn stoch0_coefficient(n: u64, r: u64) -> f64 {
    (ln_gamma_half(r) + ln_gamma_half(n + r)
        - PI.ln()
        - ln_factorial(r)
        - ln_factorial(n + r)
        - ln_factorial(n + 2 * r))
    .exp()
}

/// `rho_n^S` and its `tau` derivatives by term-wise differentiation of the
/// series: with `rho = exp(-tau) S`, `rho' = exp(-tau)(S' - S)` and
/// `rho'' = exp(-tau)(S'' - 2 S' + S)`.
pub fn stoch0_jet(n: i64, tau: f64) -> Jet {
    let m = n.unsigned_abs();
    if !(tau > 0.0) {
        // only powers tau^0, tau^1, tau^2 of S survive at the origin
        let s0 = if m == 0 { 1.0 } else { 0.0 };
        let s1 = if m == 1 {
            stoch0_coefficient(1, 0)
        } else {
            0.0
        };
        let s2 = match m {
            0 => 2.0 * stoch0_coefficient(0, 1),
            2 => 2.0 * stoch0_coefficient(2, 0),
            _ => 0.0,
        };
        return Jet {
            value: s0,
            d1: s1 - s0,
            d2: s2 - 2.0 * s1 + s0,
        };
    }
    let terms = stoch0_log_terms(m, tau);
    let peak = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
    for (r, l) in terms.iter().enumerate() {
        let w = (l - peak).exp();
        let p = (m + 2 * r as u64) as f64;
        let a = p / tau;
        v += w;
        d1 += w * (a - 1.0);
        d2 += w * (a * (p - 1.0) / tau - 2.0 * a + 1.0);
    }
    let scale = peak.exp();
    Jet {
        value: v * scale,
        d1: d1 * scale,
        d2: d2 * scale,
    }
}

/// `F_S(theta) = exp(-tau (1 - cos theta)) J_0(tau sin theta)`.
pub fn stoch0_charfn(theta: f64, tau: f64) -> Complex64 {
    let j0 = j_table(0, tau * theta.sin())[0];
    Complex64::new((-tau * (1.0 - theta.cos())).exp() * j0, 0.0)
}

/// Large-tau form `1 / (pi sqrt(tau^2 - n^2))` for `|n| < tau`, zero beyond;
/// at `|n| = tau` the order is moved just inside the allowed region.
///
/// Requires `tau > 0`; returns NaN otherwise.
pub fn stoch0_asymptotic(n: i64, tau: f64) -> f64 {
    if !(tau > 0.0) {
        return f64::NAN;
    }
    match allowed_order(n as f64, tau) {
        None => 0.0,
        Some(m) => 1.0 / (PI * (tau * tau - m * m).sqrt()),
    }
}

/// `rho_n^S` for `|n| <= nmax`.
pub fn stoch0_spectrum(tau: f64, nmax: i64) -> Spectrum {
    Spectrum::from_fn(tau, ModelTag::Stoch0, integer_window(nmax), |k| {
        stoch0_intensity(k.k() / 2, tau)
    })
}

/// Smallest `nmax >= 10` for which the phase-averaged lines beyond `nmax`
/// carry less than `eps` in total. The phase-averaged walk spreads wider
/// than the diffraction lines, so the bound serves both models.
pub fn support_radius(tau: f64, eps: f64) -> i64 {
    let tau = tau.max(0.0);
    let mut lines = Vec::new();
    let mut n = 0i64;
    loop {
        let v = stoch0_intensity(n, tau);
        lines.push(v);
        if (n as f64 > tau && v < 1e-30 * eps) || v == 0.0 && n > 0 {
            break;
        }
        n += 1;
    }
    let mut tail = 0.0;
    let mut radius = lines.len() as i64 - 1;
    for (i, v) in lines.iter().enumerate().rev() {
        if 2.0 * (tail + v) >= eps {
            radius = i as i64;
            break;
        }
        tail += v;
        radius = i as i64 - 1;
    }
    radius.max(10)
}

fn check_coupling(what: &'static str, gamma: f64, max: f64) -> Result<()> {
    if !(gamma > 0.0) || !(gamma <= max) || (max == 1.0 && gamma == 1.0) {
        return Err(Error::Domain { what, value: gamma });
    }
    Ok(())
}

fn check_tau(what: &'static str, tau: f64) -> Result<()> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::Domain { what, value: tau });
    }
    Ok(())
}

/// `f_1 + f_2` for the coupled walk at one phase.
///
/// The pair `(f_1, f_2)` of generating functions over lower-state and
/// upper-state lines obeys `f' = M f` with
/// `M = [[-2, 2 A / gamma^2], [2 cos(theta/2), -2 / gamma^2]]` and
/// `A = cos(theta/2) + i sin(theta/2) sin 2 zeta`. The initial vector is
/// `(1, 0)` for an atom entering in the lower state and `(0, 1)` for the
/// upper state; in both cases the walk starts at `k = 0`.
///
/// `exp(M tau)` is evaluated as
/// `exp(s tau) [cosh(q tau) I + sinh(q tau)/q (M - s I)]` with `s` the mean
/// eigenvalue and `q` half their difference, which stays finite when the
/// eigenvalues coalesce.
pub fn coupled_charfn_at_phase(
    theta: f64,
    tau: f64,
    gamma: f64,
    zeta: f64,
    initial: Parity,
) -> Result<Complex64> {
    check_coupling("coupled_charfn_at_phase: gamma", gamma, 1.0)?;
    check_tau("coupled_charfn_at_phase: tau", tau)?;
    Ok(coupled_phase_unchecked(theta, tau, gamma, zeta, initial))
}

fn coupled_phase_unchecked(
    theta: f64,
    tau: f64,
    gamma: f64,
    zeta: f64,
    initial: Parity,
) -> Complex64 {
    let g2 = gamma * gamma;
    let inv_g2 = 1.0 / g2;
    let (sh, ch) = (0.5 * theta).sin_cos();
    let s2z = (2.0 * zeta).sin();
    let a = Complex64::new(ch, sh * s2z);
    let s = -1.0 - inv_g2;
    let x = Complex64::new(theta.cos(), theta.sin() * s2z);
    let q = (1.0 + 2.0 * g2 * x + g2 * g2).sqrt() * inv_g2;

    let qt = q * tau;
    let (cosh_part, sinh_part) = if qt.norm() < 1e-3 {
        let e = (s * tau).exp();
        let q2 = qt * qt;
        (e * (1.0 + q2 * 0.5), e * tau * (1.0 + q2 / 6.0))
    } else {
        let up = ((s + q) * tau).exp();
        let down = ((s - q) * tau).exp();
        (0.5 * (up + down), 0.5 * (up - down) / q)
    };

    // sum of the components of (M - s I) v
    let shifted = match initial {
        Parity::Even => Complex64::new(-2.0 - s + 2.0 * ch, 0.0),
        Parity::Odd => 2.0 * inv_g2 * a - 2.0 * inv_g2 - s,
    };
    cosh_part + sinh_part * shifted
}

/// Numerical settings for [`coupled_spectrum_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledOptions {
    /// Samples of the characteristic function over one `4 pi` period.
    pub samples: usize,
    /// Largest `|k|` reported; defaults to a window holding all but about
    /// `1e-12` of the mass.
    pub kmax: Option<i64>,
    pub quadrature: AdaptiveOptions,
}

impl Default for CoupledOptions {
    fn default() -> Self {
        Self {
            samples: 8192,
            kmax: None,
            quadrature: AdaptiveOptions {
                rel_tol: 1e-12,
                abs_tol: 1e-14,
                ..AdaptiveOptions::default()
            },
        }
    }
}

/// Lowest acceptable total over the reported window.
pub const COUPLED_MASS_FLOOR: f64 = 1.0 - 1e-4;
/// Most negative Fourier coefficient treated as rounding and clamped to zero.
pub const COUPLED_NEGATIVE_FLOOR: f64 = -1e-9;

/// Phase average `(1/pi) int_{-pi/2}^{pi/2} (f_1 + f_2) d zeta`.
pub fn coupled_charfn(theta: f64, tau: f64, gamma: f64, initial: Parity) -> Result<Complex64> {
    coupled_charfn_with(
        theta,
        tau,
        gamma,
        initial,
        &CoupledOptions::default().quadrature,
    )
}

fn coupled_charfn_with(
    theta: f64,
    tau: f64,
    gamma: f64,
    initial: Parity,
    opts: &AdaptiveOptions,
) -> Result<Complex64> {
    check_coupling("coupled_charfn: gamma", gamma, 1.0)?;
    check_tau("coupled_charfn: tau", tau)?;
    let rule = QuadratureRule::standard();
    let v: Complex64 = quad_with(
        |z| coupled_phase_unchecked(theta, tau, gamma, z, initial),
        -FRAC_PI_2,
        FRAC_PI_2,
        &rule,
        opts,
    )?;
    Ok(v / PI)
}

/// Line intensities of the coupled walk, obtained by inverting the
/// phase-averaged characteristic function over `theta in [0, 4 pi)`.
pub fn coupled_spectrum(tau: f64, gamma: f64, initial: Parity) -> Result<Spectrum> {
    coupled_spectrum_with(tau, gamma, initial, &CoupledOptions::default())
}

pub fn coupled_spectrum_with(
    tau: f64,
    gamma: f64,
    initial: Parity,
    opts: &CoupledOptions,
) -> Result<Spectrum> {
    check_coupling("coupled_spectrum: gamma", gamma, 0.3)?;
    check_tau("coupled_spectrum: tau", tau)?;
    if opts.samples < 4 {
        return Err(Error::InvalidInput(
            "need at least 4 samples per period".into(),
        ));
    }
    let n = opts.samples;
    let samples: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|j| {
            let theta = 4.0 * PI * j as f64 / n as f64;
            coupled_charfn_with(theta, tau, gamma, initial, &opts.quadrature)
        })
        .collect::<Result<_>>()?;
    let coeffs = fourier_coefficients(&samples);

    let nyquist = (n / 2) as i64 - 1;
    let kmax = opts
        .kmax
        .unwrap_or_else(|| 2 * (support_radius(tau, 1e-12) + 2) + 1)
        .min(nyquist);
    let mut out = Spectrum::new(tau, ModelTag::Coupled);
    for k in half_window(kmax) {
        let v = coefficient_at(&coeffs, k.k()).re;
        if v < COUPLED_NEGATIVE_FLOOR {
            return Err(Error::NonPhysical { k: k.k(), value: v });
        }
        out.insert(k, v.max(0.0));
    }
    let total = out.total();
    if total < COUPLED_MASS_FLOOR {
        return Err(Error::Truncation {
            total,
            required: COUPLED_MASS_FLOOR,
        });
    }
    Ok(out)
}

/// Emitted when the order-gamma^2 expansion is used outside
/// `gamma^2 < tau < gamma^-2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeWarning {
    pub tau: f64,
    pub gamma: f64,
}

impl std::fmt::Display for RegimeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let g2 = self.gamma * self.gamma;
        write!(
            f,
            "tau = {} lies outside the expansion regime ({}, {}) for gamma = {}",
            self.tau,
            g2,
            1.0 / g2,
            self.gamma
        )
    }
}

/// Result of [`coupled_spectrum_approx`].
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxSpectrum {
    pub spectrum: Spectrum,
    pub warning: Option<RegimeWarning>,
}

/// Order-gamma^2 lines of the coupled walk for an atom entering in the
/// lower state.
///
/// Even lines `rho_n^0 (1 - gamma^2) - gamma^2 (2 tau + 1)/2 rho_n^0' -
/// gamma^2 tau / 2 rho_n^0''` built on the phase-averaged single-step lines,
/// odd lines `(gamma^2/2)(rho_n + rho_{n+1})`, and the short-time
/// corrections `gamma^2 exp(-2 tau_0) (1/2, -1/2, 1/4)` on `|n| = 0, 1/2, 1`
/// with `tau_0 = (1 + gamma^2) tau / gamma^2`. The corrections sum to zero;
/// the whole spectrum sums to `1 - gamma^4`.
pub fn coupled_spectrum_approx(tau: f64, gamma: f64) -> Result<ApproxSpectrum> {
    check_coupling("coupled_spectrum_approx: gamma", gamma, 0.3)?;
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Domain {
            what: "coupled_spectrum_approx: tau",
            value: tau,
        });
    }
    let g2 = gamma * gamma;
    let nmax = support_radius(tau, 1e-12) + 1;
    let even: Vec<f64> = (0..=nmax + 1)
        .map(|n| {
            let j = stoch0_jet(n, tau);
            j.value * (1.0 - g2) - 0.5 * g2 * (2.0 * tau + 1.0) * j.d1 - 0.5 * g2 * tau * j.d2
        })
        .collect();
    let even_at = |n: i64| even[n.unsigned_abs() as usize];

    let tau0 = (1.0 + g2) * tau / g2;
    let fast = g2 * (-2.0 * tau0).exp();
    let correction = |k: i64| match k.abs() {
        0 => 0.5 * fast,
        1 => -0.5 * fast,
        2 => 0.25 * fast,
        _ => 0.0,
    };

    let spectrum = Spectrum::from_fn(
        tau,
        ModelTag::CoupledApprox,
        half_window(2 * nmax + 1),
        |k: HalfIndex| {
            let base = if k.is_even() {
                even_at(k.k() / 2)
            } else {
                let n = (k.k() - 1).div_euclid(2);
                0.5 * g2 * (even_at(n) + even_at(n + 1))
            };
            base + correction(k.k())
        },
    );
    let warning = (tau < g2 || tau > 1.0 / g2).then_some(RegimeWarning { tau, gamma });
    Ok(ApproxSpectrum { spectrum, warning })
}
