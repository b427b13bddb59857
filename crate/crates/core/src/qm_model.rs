//! Two-level diffraction model of the atom in a detuned standing wave.
//!
//! Everything is expressed through the dimensionless transit time
//! `tau = t0 * gamma^2 * Delta / 2` and the coupling ratio
//! `gamma = Omega_R / Delta`. The free-evolution phase factors
//! `exp(+-i omega t0 / 2)` multiply both amplitudes by a unit phase and are
//! dropped throughout; only magnitudes of Fourier coefficients are physical.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::bessel::{j_table, signed_from_table};
use crate::spectrum::{half_window, integer_window, HalfIndex, ModelTag, Spectrum};

/// Largest gamma for which the order-gamma^2 line formulas are trusted.
pub const ORDER2_GAMMA_LIMIT: f64 = 0.25;

/// Dimensionless model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub tau: f64,
    pub gamma: f64,
}

impl ModelParams {
    /// `gamma = 0` is accepted and selects the pure diffraction limit.
    pub fn new(tau: f64, gamma: f64) -> Result<Self> {
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::Domain {
                what: "ModelParams: tau",
                value: tau,
            });
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::Domain {
                what: "ModelParams: gamma",
                value: gamma,
            });
        }
        Ok(Self { tau, gamma })
    }

    /// `tau_n = (1 + gamma^2) tau / gamma^2 + n pi / 2`.
    pub fn phase_time(&self, n: i64) -> f64 {
        let g2 = self.gamma * self.gamma;
        (1.0 + g2) * self.tau / g2 + n as f64 * FRAC_PI_2
    }

    /// Whether the order-gamma^2 expansion is in its regime of validity.
    pub fn order2_valid(&self) -> bool {
        self.gamma <= ORDER2_GAMMA_LIMIT
    }
}

/// Laboratory quantities behind the dimensionless parameters.
///
/// The detuning is taken positive (`Delta = omega0 - omega > 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalContext {
    /// Laser angular frequency (rad/s).
    pub omega: f64,
    /// Atomic resonance angular frequency (rad/s).
    pub omega0: f64,
    /// Detuning (rad/s).
    pub delta: f64,
    /// Resonant Rabi frequency (rad/s).
    pub rabi: f64,
    /// Transit duration (s).
    pub t0: f64,
    /// Laser wavelength (m).
    pub lambda: f64,
    /// Atomic mass (kg).
    pub mass: f64,
    /// Longitudinal beam speed (m/s).
    pub speed: f64,
    /// Planck's constant (J s).
    pub planck: f64,
}

pub const PLANCK: f64 = 6.626_070_15e-34;
const SPEED_OF_LIGHT: f64 = 299_792_458.0;

impl PhysicalContext {
    /// Sodium beam at 10^3 m/s crossing a D-line laser (589 nm).
    ///
    /// The Rabi frequency and transit time are illustrative: a 20 MHz Rabi
    /// frequency detuned by five times that, and a 0.1 mm laser waist.
    pub fn sodium_d_line() -> Self {
        let lambda = 589e-9;
        let omega = 2.0 * PI * SPEED_OF_LIGHT / lambda;
        let rabi = 2.0 * PI * 20e6;
        let delta = 5.0 * rabi;
        Self {
            omega,
            omega0: omega + delta,
            delta,
            rabi,
            t0: 1e-4 / 1e3,
            lambda,
            mass: 3.818e-26,
            speed: 1e3,
            planck: PLANCK,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.rabi / self.delta
    }

    pub fn tau(&self) -> f64 {
        let g = self.gamma();
        self.t0 * g * g * self.delta / 2.0
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        ModelParams::new(self.tau(), self.gamma())
    }

    /// Keeps the detuning and optical constants, and sets the Rabi frequency
    /// and transit time that realise `params`.
    pub fn with_model_params(&self, params: &ModelParams) -> Result<Self> {
        if params.gamma == 0.0 || !(self.delta > 0.0) {
            return Err(Error::InvalidInput(
                "need gamma > 0 and a positive detuning to recover a transit time".into(),
            ));
        }
        let rabi = params.gamma * self.delta;
        let t0 = 2.0 * params.tau / (params.gamma * params.gamma * self.delta);
        Ok(Self { rabi, t0, ..*self })
    }

    /// Angular spacing `2h / (lambda M v)` between adjacent integral lines.
    pub fn deflection_unit(&self) -> f64 {
        2.0 * self.planck / (self.lambda * self.mass * self.speed)
    }
}

/// Upper and lower internal-state amplitudes at one standing-wave phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudePair {
    pub upper: Complex64,
    pub lower: Complex64,
}

impl AmplitudePair {
    pub fn ground() -> Self {
        Self {
            upper: Complex64::new(0.0, 0.0),
            lower: Complex64::new(1.0, 0.0),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.upper.norm_sqr() + self.lower.norm_sqr()
    }

    /// Largest componentwise distance to `other`.
    pub fn max_deviation(&self, other: &AmplitudePair) -> f64 {
        (self.upper - other.upper)
            .norm()
            .max((self.lower - other.lower).norm())
    }
}

/// Closed-form state at the end of the transit for an atom entering in the
/// lower state at phase `zeta`.
///
/// When the effective frequency `Omega = sqrt(Delta^2/4 + Omega_R^2 cos^2 zeta)`
/// vanishes the atom is uncoupled and the initial state is returned.
pub fn exact_amplitudes(zeta: f64, ctx: &PhysicalContext) -> Result<AmplitudePair> {
    for (what, v) in [
        ("exact_amplitudes: zeta", zeta),
        ("exact_amplitudes: delta", ctx.delta),
        ("exact_amplitudes: rabi", ctx.rabi),
    ] {
        if !v.is_finite() {
            return Err(Error::Domain { what, value: v });
        }
    }
    if !(ctx.t0 >= 0.0) || !ctx.t0.is_finite() {
        return Err(Error::Domain {
            what: "exact_amplitudes: t0",
            value: ctx.t0,
        });
    }
    let c = zeta.cos();
    let big_omega = (0.25 * ctx.delta * ctx.delta + ctx.rabi * ctx.rabi * c * c).sqrt();
    if big_omega == 0.0 {
        return Ok(AmplitudePair::ground());
    }
    let (s, co) = (big_omega * ctx.t0).sin_cos();
    Ok(AmplitudePair {
        upper: Complex64::new(0.0, -(ctx.rabi / big_omega) * c * s),
        lower: Complex64::new(co, (ctx.delta / (2.0 * big_omega)) * s),
    })
}

/// Amplitudes expanded to order gamma^2 at fixed `tau`.
pub fn expanded_amplitudes(zeta: f64, params: &ModelParams) -> Result<AmplitudePair> {
    if params.gamma == 0.0 {
        return Err(Error::Domain {
            what: "expanded_amplitudes: gamma",
            value: 0.0,
        });
    }
    let g = params.gamma;
    let c = zeta.cos();
    let omega_prime = 1.0 / (g * g) + 1.0 + (2.0 * zeta).cos();
    let phase = omega_prime * params.tau;
    let s = phase.sin();
    Ok(AmplitudePair {
        upper: Complex64::new(0.0, -2.0 * g * c * s),
        lower: Complex64::from_polar(1.0, phase) - Complex64::new(0.0, 2.0 * g * g * c * c * s),
    })
}

/// `J_n(tau)^2`, the diffraction lines at vanishing gamma.
pub fn qm0_intensity(n: i64, tau: f64) -> f64 {
    let j = j_table(n.unsigned_abs() as u32, tau)[n.unsigned_abs() as usize];
    j * j
}

/// Line intensity to order gamma^2, even and odd lines.
///
/// Even `k = 2n`:
/// `J_n^2 (1 - 2 gamma^2 sin^2 tau_n) + gamma^2 J_n J_n' sin 2 tau_n`;
/// odd `k = 2n + 1`:
/// `gamma^2 (J_n sin tau_n + J_{n+1} cos tau_n)^2`.
///
/// The truncation can leave even lines slightly negative, by order
/// `gamma^2 J_n`, where `J_n^2` itself is tiny (small `tau`, `n >= 1`).
pub fn qm_intensity(k: HalfIndex, params: &ModelParams) -> f64 {
    let nmax = k.k().unsigned_abs() / 2 + 2;
    let table = j_table(nmax as u32, params.tau);
    qm_line(k, params, &table)
}

fn qm_line(k: HalfIndex, params: &ModelParams, table: &[f64]) -> f64 {
    let j = |n: i64| signed_from_table(table, n);
    let g2 = params.gamma * params.gamma;
    if k.is_even() {
        let n = k.k() / 2;
        let jn = j(n);
        if g2 == 0.0 {
            return jn * jn;
        }
        let jp = 0.5 * (j(n - 1) - j(n + 1));
        let tn = params.phase_time(n);
        let s = tn.sin();
        jn * jn * (1.0 - 2.0 * g2 * s * s) + g2 * jn * jp * (2.0 * tn).sin()
    } else {
        if g2 == 0.0 {
            return 0.0;
        }
        let n = (k.k() - 1).div_euclid(2);
        let tn = params.phase_time(n);
        let a = j(n) * tn.sin() + j(n + 1) * tn.cos();
        g2 * a * a
    }
}

/// Lines with the fast phases `tau_n` averaged out:
/// `J_n^2 (1 - gamma^2)` on even lines and
/// `(gamma^2 / 2)(J_n^2 + J_{n+1}^2)` on odd lines.
pub fn qm_smoothed_intensity(k: HalfIndex, params: &ModelParams) -> f64 {
    let nmax = k.k().unsigned_abs() / 2 + 2;
    let table = j_table(nmax as u32, params.tau);
    qm_smoothed_line(k, params, &table)
}

fn qm_smoothed_line(k: HalfIndex, params: &ModelParams, table: &[f64]) -> f64 {
    let j2 = |n: i64| signed_from_table(table, n).powi(2);
    let g2 = params.gamma * params.gamma;
    if k.is_even() {
        j2(k.k() / 2) * (1.0 - g2)
    } else {
        let n = (k.k() - 1).div_euclid(2);
        0.5 * g2 * (j2(n) + j2(n + 1))
    }
}

/// `F_Q0(theta) = J_0(2 tau sin(theta / 2))`.
pub fn qm0_charfn(theta: f64, tau: f64) -> Complex64 {
    Complex64::new(j_table(0, 2.0 * tau * (0.5 * theta).sin())[0], 0.0)
}

/// `F_Q(theta) = F_Q0(theta) [1 + gamma^2 (cos(theta/2) - 1)]`, the
/// characteristic function of [`qm_smoothed_intensity`].
pub fn qm_charfn(theta: f64, params: &ModelParams) -> Complex64 {
    let g2 = params.gamma * params.gamma;
    qm0_charfn(theta, params.tau) * (1.0 + g2 * ((0.5 * theta).cos() - 1.0))
}

/// Relative offset used to step off the turning point `|n| = tau`.
pub(crate) const TURNING_POINT_OFFSET: f64 = 1e-9;

/// `|n|` clamped just inside the classically allowed region, or `None` when
/// the line lies outside it.
pub(crate) fn allowed_order(n: f64, tau: f64) -> Option<f64> {
    let m = n.abs();
    if m > tau {
        None
    } else if m == tau {
        Some(tau * (1.0 - TURNING_POINT_OFFSET))
    } else {
        Some(m)
    }
}

/// Large-tau form of `J_n(tau)^2`:
/// `(2/pi) (tau^2 - n^2)^(-1/2) cos^2[sqrt(tau^2 - n^2) - beta |n| - pi/4]`
/// with `beta = acos(|n| / tau)`, and zero for `|n| > tau`.
///
/// Requires `tau > 0`; returns NaN otherwise.
pub fn qm0_asymptotic(n: i64, tau: f64) -> f64 {
    if !(tau > 0.0) {
        return f64::NAN;
    }
    match allowed_order(n as f64, tau) {
        None => 0.0,
        Some(m) => {
            let root = (tau * tau - m * m).sqrt();
            let beta = (m / tau).acos();
            let c = (root - beta * m - FRAC_PI_4).cos();
            2.0 / (PI * root) * c * c
        }
    }
}

/// `J_n(tau)^2` for `|n| <= nmax`.
pub fn qm0_spectrum(tau: f64, nmax: i64) -> Spectrum {
    let table = j_table(nmax.unsigned_abs() as u32, tau);
    Spectrum::from_fn(tau, ModelTag::Qm0, integer_window(nmax), |k| {
        signed_from_table(&table, k.k() / 2).powi(2)
    })
}

/// Order-gamma^2 lines for `|k| <= 2 nmax + 1`.
pub fn qm_spectrum(params: &ModelParams, nmax: i64) -> Spectrum {
    let table = j_table(nmax.unsigned_abs() as u32 + 2, params.tau);
    Spectrum::from_fn(params.tau, ModelTag::Qm, half_window(2 * nmax + 1), |k| {
        qm_line(k, params, &table)
    })
}

/// Fast-phase-averaged lines for `|k| <= 2 nmax + 1`.
pub fn qm_smoothed_spectrum(params: &ModelParams, nmax: i64) -> Spectrum {
    let table = j_table(nmax.unsigned_abs() as u32 + 2, params.tau);
    Spectrum::from_fn(
        params.tau,
        ModelTag::QmAveraged,
        half_window(2 * nmax + 1),
        |k| qm_smoothed_line(k, params, &table),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::bessel::bessel_j;

    fn ctx_for(tau: f64, gamma: f64) -> PhysicalContext {
        let base = PhysicalContext {
            delta: 1.0,
            ..PhysicalContext::sodium_d_line()
        };
        base.with_model_params(&ModelParams::new(tau, gamma).unwrap())
            .unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(-1.0, 0.2).is_err());
        assert!(ModelParams::new(1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, -0.1).is_err());
        assert!(ModelParams::new(f64::NAN, 0.2).is_err());
        let p = ModelParams::new(3.0, 0.2).unwrap();
        assert!(p.order2_valid());
        assert!(!ModelParams::new(3.0, 0.3).unwrap().order2_valid());
        assert!((p.phase_time(0) - 26.0 * 3.0).abs() < 1e-12);
    }

    #[test]
    fn context_round_trip() {
        let ctx = PhysicalContext::sodium_d_line();
        let p = ctx.model_params().unwrap();
        let back = ctx.with_model_params(&p).unwrap();
        assert!((back.gamma() - p.gamma).abs() < 1e-12);
        assert!((back.tau() - p.tau).abs() < 1e-12);
        let q = ModelParams::new(4.2, 0.13).unwrap();
        let c = ctx.with_model_params(&q).unwrap();
        assert!((c.tau() - 4.2).abs() < 1e-12 && (c.gamma() - 0.13).abs() < 1e-12);
    }

    #[test]
    fn exact_amplitude_examples() {
        let mut ctx = ctx_for(2.0, 0.2);
        ctx.t0 = 0.0;
        let a = exact_amplitudes(0.3, &ctx).unwrap();
        assert_eq!(a.upper.norm(), 0.0);
        assert!((a.lower - Complex64::new(1.0, 0.0)).norm() < 1e-15);

        let ctx = ctx_for(2.0, 0.2);
        let a = exact_amplitudes(FRAC_PI_2, &ctx).unwrap();
        assert!(a.upper.norm() < 1e-15);

        // resonant pi pulse
        let ctx = PhysicalContext {
            delta: 0.0,
            rabi: 1.0,
            t0: FRAC_PI_2,
            ..PhysicalContext::sodium_d_line()
        };
        let a = exact_amplitudes(0.0, &ctx).unwrap();
        assert!((a.upper.norm() - 1.0).abs() < 1e-15);
        assert!(a.lower.norm() < 1e-15);

        // fully uncoupled
        let ctx = PhysicalContext {
            delta: 0.0,
            rabi: 0.0,
            ..ctx
        };
        let a = exact_amplitudes(FRAC_PI_2, &ctx).unwrap();
        assert_eq!(a, AmplitudePair::ground());
    }

    #[test]
    fn exact_amplitudes_unitary() {
        for &(tau, gamma) in &[(0.5, 0.1), (3.0, 0.2), (6.0, 0.3)] {
            let ctx = ctx_for(tau, gamma);
            for i in 0..=64 {
                let zeta = -FRAC_PI_2 + PI * i as f64 / 64.0;
                let a = exact_amplitudes(zeta, &ctx).unwrap();
                assert!((a.norm_sqr() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn expanded_initial_state_and_small_gamma_limit() {
        let p = ModelParams::new(0.0, 0.2).unwrap();
        let a = expanded_amplitudes(0.4, &p).unwrap();
        assert!(a.max_deviation(&AmplitudePair::ground()) < 1e-15);

        // removing the tau/gamma^2 phase leaves exp(2 i tau cos^2 zeta)
        let gamma = 1e-3;
        let tau = 1.7;
        let p = ModelParams::new(tau, gamma).unwrap();
        for &zeta in &[-1.2, -0.3, 0.0, 0.8] {
            let a = expanded_amplitudes(zeta, &p).unwrap();
            let stripped = a.lower * Complex64::from_polar(1.0, -tau / (gamma * gamma));
            let want = Complex64::from_polar(1.0, 2.0 * tau * zeta.cos().powi(2));
            assert!((stripped - want).norm() < 1e-5);
        }
        assert!(expanded_amplitudes(0.1, &ModelParams::new(1.0, 0.0).unwrap()).is_err());
    }

    #[test]
    fn qm0_examples() {
        assert_eq!(qm0_intensity(0, 0.0), 1.0);
        assert_eq!(qm0_intensity(2, 0.0), 0.0);
        let j = bessel_j(1, 2.0).unwrap();
        assert!((qm0_intensity(1, 2.0) - j * j).abs() < 1e-15);
        assert!((qm0_intensity(1, 2.0) - 0.33261).abs() < 1e-5);
        assert_eq!(qm0_intensity(-3, 4.0), qm0_intensity(3, 4.0));
        let s = qm0_spectrum(10.0, 60);
        assert!((s.total() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn qm_intensity_limits_and_symmetry() {
        let p0 = ModelParams::new(3.0, 0.0).unwrap();
        for n in -5..=5 {
            assert_eq!(
                qm_intensity(HalfIndex::integer(n), &p0),
                qm0_intensity(n, 3.0)
            );
            assert_eq!(qm_intensity(HalfIndex::new(2 * n + 1), &p0), 0.0);
        }
        let p = ModelParams::new(3.0, 0.2).unwrap();
        for k in 0..30 {
            let a = qm_intensity(HalfIndex::new(k), &p);
            let b = qm_intensity(HalfIndex::new(-k), &p);
            assert!((a - b).abs() < 1e-14, "k={k}");
        }
        // small gamma approaches the Bessel lines
        let p = ModelParams::new(3.0, 1e-4).unwrap();
        assert!((qm_intensity(HalfIndex::integer(2), &p) - qm0_intensity(2, 3.0)).abs() < 1e-7);
    }

    #[test]
    fn qm_lines_sum_to_one() {
        let p = ModelParams::new(3.0, 0.2).unwrap();
        let s = qm_spectrum(&p, 40);
        assert!((s.total() - 1.0).abs() < 5e-4);
    }

    #[test]
    fn smoothed_examples() {
        let p0 = ModelParams::new(3.0, 0.0).unwrap();
        assert_eq!(qm_smoothed_intensity(HalfIndex::new(1), &p0), 0.0);
        assert_eq!(
            qm_smoothed_intensity(HalfIndex::integer(2), &p0),
            qm0_intensity(2, 3.0)
        );
        let p = ModelParams::new(3.0, 0.2).unwrap();
        let j0 = bessel_j(0, 3.0).unwrap();
        let j1 = bessel_j(1, 3.0).unwrap();
        let want = 0.02 * (j0 * j0 + j1 * j1);
        let got = qm_smoothed_intensity(HalfIndex::new(1), &p);
        assert!((got - want).abs() < 1e-15);
        assert!((got - 0.003652).abs() < 5e-7);
        let s = qm_smoothed_spectrum(&p, 40);
        assert!((s.total() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn charfn_examples() {
        let p = ModelParams::new(3.0, 0.2).unwrap();
        assert!((qm_charfn(0.0, &p) - 1.0).norm() < 1e-15);
        let p0 = ModelParams::new(2.5, 0.0).unwrap();
        let want = bessel_j(0, 5.0).unwrap();
        assert!((qm_charfn(PI, &p0).re - want).abs() < 1e-15);
    }

    #[test]
    fn asymptotic_examples() {
        assert_eq!(qm0_asymptotic(60, 50.0), 0.0);
        let direct = 2.0 / (50.0 * PI) * (50.0 - FRAC_PI_4).cos().powi(2);
        assert!((qm0_asymptotic(0, 50.0) - direct).abs() < 1e-16);
        let exact = qm0_intensity(0, 50.0);
        assert!(((direct - exact) / exact).abs() < 0.05);
        let edge = qm0_asymptotic(50, 50.0);
        assert!(edge.is_finite() && edge >= 0.0);
        assert!(qm0_asymptotic(0, 0.0).is_nan());

        // average over one period of the cos^2 factor is (1/pi)/tau
        let samples = 2000;
        let mean: f64 = (0..samples)
            .map(|i| {
                let t = 50.0 + PI * i as f64 / samples as f64;
                qm0_asymptotic(0, t) * t / 50.0
            })
            .sum::<f64>()
            / samples as f64;
        assert!((mean - 1.0 / (50.0 * PI)).abs() < 1e-6);
    }
}
