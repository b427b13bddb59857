//! Integer-order Bessel functions of the first kind, ordinary and modified.

use crate::error::{Error, Result};

/// Rescale threshold for the backward recurrences.
const BIG: f64 = 1e250;

/// Bessel function `J_n(x)` of nonnegative integer order.
///
/// Uses Miller's backward recurrence normalised by `J_0 + 2 sum J_2k = 1`,
/// which is stable for all orders and arguments. Negative `x` is handled with
/// `J_n(-x) = (-1)^n J_n(x)`; negative orders are available through
/// [`bessel_j_signed`].
pub fn bessel_j(n: u32, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain {
            what: "bessel_j",
            value: x,
        });
    }
    Ok(j_table(n, x)[n as usize])
}

/// `J_n(x)` for any integer order, using `J_{-n} = (-1)^n J_n`.
pub fn bessel_j_signed(n: i64, x: f64) -> Result<f64> {
    let v = bessel_j(n.unsigned_abs() as u32, x)?;
    Ok(if n < 0 && n % 2 != 0 { -v } else { v })
}

/// `[J_0(x), J_1(x), ..., J_nmax(x)]` from a single backward sweep.
pub fn bessel_j_table(nmax: u32, x: f64) -> Result<Vec<f64>> {
    if !x.is_finite() {
        return Err(Error::Domain {
            what: "bessel_j_table",
            value: x,
        });
    }
    Ok(j_table(nmax, x))
}

/// Backward recurrence without argument checks. Non-finite `x` yields NaN.
pub(crate) fn j_table(nmax: u32, x: f64) -> Vec<f64> {
    let len = nmax as usize + 1;
    if !x.is_finite() {
        return vec![f64::NAN; len];
    }
    let mut out = vec![0.0; len];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();

    // Start far enough above both the highest order and the turning point
    // that the arbitrary seed has decayed below rounding.
    let nm = nmax as f64;
    let start_order = (nm + 20.0 + (40.0 * nm).sqrt()).max(ax + 20.0 + 12.0 * ax.cbrt());
    let mut m = start_order.ceil() as usize;
    if m % 2 == 1 {
        m += 1;
    }

    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-300; // J_k, arbitrary seed
    let mut norm = 0.0;
    let two_over_x = 2.0 / ax;
    for k in (1..=m).rev() {
        // J_{k-1} = (2k/x) J_k - J_{k+1}
        let prev = k as f64 * two_over_x * cur - next;
        next = cur;
        cur = prev;
        let order = k - 1;
        if order < len {
            out[order] = cur;
        }
        if order % 2 == 0 && order > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > BIG {
            cur /= BIG;
            next /= BIG;
            norm /= BIG;
            for v in out.iter_mut() {
                *v /= BIG;
            }
        }
    }
    norm += cur; // J_0 term
    for (order, v) in out.iter_mut().enumerate() {
        *v /= norm;
        if x < 0.0 && order % 2 == 1 {
            *v = -*v;
        }
    }
    out
}

/// Signed-order lookup into a table produced by [`j_table`].
pub(crate) fn signed_from_table(table: &[f64], n: i64) -> f64 {
    let idx = n.unsigned_abs() as usize;
    let v = table.get(idx).copied().unwrap_or(0.0);
    if n < 0 && n % 2 != 0 {
        -v
    } else {
        v
    }
}

/// Exponentially scaled modified Bessel function `exp(-x) I_n(x)`.
///
/// The power series is used for `x <= 20`, where no term can overflow;
/// otherwise Miller's backward recurrence normalised by
/// `I_0 + 2 sum I_k = exp(x)`.
pub fn bessel_i_scaled(n: u32, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            what: "bessel_i_scaled",
            value: x,
        });
    }
    if x == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    if x <= 20.0 {
        Ok(i_scaled_series(n, x))
    } else {
        Ok(i_scaled_miller(n, x))
    }
}

fn i_scaled_series(n: u32, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let nf = n as f64;
    for k in 0..1000 {
        let kf = k as f64;
        term *= q / ((kf + 1.0) * (nf + kf + 1.0));
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    let log_prefactor = -x + nf * (0.5 * x).ln() - ln_factorial(n as u64);
    (log_prefactor + sum.ln()).exp()
}

fn i_scaled_miller(n: u32, x: f64) -> f64 {
    let start = n as f64 + 30.0 + (80.0 * x).sqrt();
    let m = start.ceil() as u32;
    let two_over_x = 2.0 / x;
    let mut next = 0.0;
    let mut cur = 1e-300;
    let mut norm = 0.0;
    let mut wanted = 0.0;
    for k in (1..=m).rev() {
        // I_{k-1} = (2k/x) I_k + I_{k+1}
        let prev = k as f64 * two_over_x * cur + next;
        next = cur;
        cur = prev;
        let order = k - 1;
        if order == n {
            wanted = cur;
        }
        if order > 0 {
            norm += 2.0 * cur;
        }
        if cur > BIG {
            cur /= BIG;
            next /= BIG;
            norm /= BIG;
            wanted /= BIG;
        }
    }
    norm += cur;
    wanted / norm
}

/// `ln(n!)` by direct summation; exact enough for the orders used here.
pub fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `ln Gamma(m + 1/2)` for nonnegative integer `m`, from
/// `Gamma(m + 1/2) = sqrt(pi) (2m)! / (4^m m!)`.
pub fn ln_gamma_half(m: u64) -> f64 {
    0.5 * std::f64::consts::PI.ln() + ln_factorial(2 * m) - m as f64 * 4f64.ln() - ln_factorial(m)
}

#[cfg(test)]
// reference values keep the digits the oracle printed
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    /// Power series for J_n, exact to rounding for moderate x.
    fn j_series(n: u32, x: f64) -> f64 {
        let q = -0.25 * x * x;
        let mut term = (0.5 * x).powi(n as i32) / (1..=n).map(|k| k as f64).product::<f64>();
        let mut sum = term;
        for k in 0..200 {
            let kf = k as f64;
            term *= q / ((kf + 1.0) * (n as f64 + kf + 1.0));
            sum += term;
        }
        sum
    }

    /// Bisection for the first zero of the series J_0.
    fn j0_first_zero() -> f64 {
        let (mut lo, mut hi) = (2.0, 3.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if j_series(0, mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn j_at_origin() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(3, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn j0_zero_matches_bracketing_oracle() {
        let root = j0_first_zero();
        assert!((root - 2.404826).abs() < 1e-6);
        assert!(bessel_j(0, 2.404826).unwrap().abs() < 1e-6);
        assert!(bessel_j(0, root).unwrap().abs() < 1e-14);
    }

    #[test]
    fn j1_at_one() {
        let oracle = j_series(1, 1.0);
        assert!((oracle - 0.4400505857).abs() < 1e-10);
        assert!((bessel_j(1, 1.0).unwrap() - oracle).abs() < 1e-15);
    }

    #[test]
    fn j_agrees_with_series_on_grid() {
        for n in [0u32, 1, 2, 5, 10, 25] {
            for &x in &[0.1, 0.5, 1.0, 2.5, 4.0, 7.0, 10.0] {
                let diff = (bessel_j(n, x).unwrap() - j_series(n, x)).abs();
                assert!(diff < 1e-12, "n={n} x={x} diff={diff}");
            }
        }
    }

    #[test]
    fn j_large_argument_frozen_values() {
        // reference values from a 40-digit evaluation
        let cases = [
            (0u32, 50.0, 0.055_812_327_669_251_815),
            (1, 50.0, -0.097_511_828_125_175_138),
            (40, 50.0, -0.138_176_281_201_161_43),
            (0, 200.0, -0.015_437_439_930_565_092),
            (100, 200.0, 0.009_333_214_186_557_587),
            (100, 10.0, 6.597_316_064_155_381e-89),
        ];
        for (n, x, want) in cases {
            let got = bessel_j(n, x).unwrap();
            assert!(
                (got - want).abs() < 1e-12,
                "n={n} x={x} got={got} want={want}"
            );
        }
    }

    #[test]
    fn j_negative_argument_and_order() {
        let a = bessel_j(3, 2.0).unwrap();
        assert!((bessel_j(3, -2.0).unwrap() + a).abs() < 1e-16);
        assert!((bessel_j_signed(-3, 2.0).unwrap() + a).abs() < 1e-16);
        assert!((bessel_j_signed(-2, 2.0).unwrap() - bessel_j(2, 2.0).unwrap()).abs() < 1e-16);
    }

    #[test]
    fn j_rejects_non_finite() {
        assert!(bessel_j(0, f64::NAN).is_err());
        assert!(bessel_j(0, f64::INFINITY).is_err());
    }

    #[test]
    fn j_recurrence_residual() {
        for &x in &[0.3, 1.0, 3.0, 9.5, 30.0, 120.0] {
            let t = bessel_j_table(60, x).unwrap();
            for n in 1..60 {
                let r = t[n - 1] + t[n + 1] - 2.0 * n as f64 / x * t[n];
                assert!(r.abs() < 1e-10, "x={x} n={n} r={r}");
            }
        }
    }

    #[test]
    fn j_squared_normalisation() {
        for &tau in &[0.5, 3.0, 10.0, 50.0] {
            let nmax = (tau + 40.0) as u32;
            let t = bessel_j_table(nmax, tau).unwrap();
            let s: f64 = t[0] * t[0] + 2.0 * t[1..].iter().map(|v| v * v).sum::<f64>();
            assert!((s - 1.0).abs() < 1e-10, "tau={tau} s={s}");
        }
    }

    /// e^{-x} I_n(x) from the plain series, valid for small x.
    fn i_scaled_oracle(n: u32, x: f64) -> f64 {
        let mut term = (0.5 * x).powi(n as i32) / (1..=n).map(|k| k as f64).product::<f64>();
        let mut sum = term;
        for k in 0..300 {
            let kf = k as f64;
            term *= 0.25 * x * x / ((kf + 1.0) * (n as f64 + kf + 1.0));
            sum += term;
        }
        (-x).exp() * sum
    }

    #[test]
    fn i_scaled_examples() {
        assert_eq!(bessel_i_scaled(0, 0.0).unwrap(), 1.0);
        let v = bessel_i_scaled(0, 1.0).unwrap();
        assert!((v - i_scaled_oracle(0, 1.0)).abs() < 1e-15);
        assert!((v - 0.4657596076).abs() < 1e-10);
        assert!(bessel_i_scaled(5, 1.0).unwrap() <= bessel_i_scaled(4, 1.0).unwrap());
        assert!(bessel_i_scaled(0, -1.0).is_err());
    }

    #[test]
    fn i_scaled_branches_agree() {
        // the series and the recurrence overlap around the switch point
        for n in [0u32, 1, 3, 10, 40] {
            for &x in &[15.0, 20.0, 25.0] {
                let s = i_scaled_series(n, x);
                let m = i_scaled_miller(n, x);
                assert!(((s - m) / s).abs() < 1e-12, "n={n} x={x} s={s} m={m}");
            }
            for &x in &[0.2, 2.0, 8.0] {
                let got = bessel_i_scaled(n, x).unwrap();
                let want = i_scaled_oracle(n, x);
                assert!(((got - want) / want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn i_scaled_large_argument_frozen() {
        // e^{-x} I_n(x) from a 40-digit evaluation
        let cases = [
            (0u32, 100.0, 0.039_944_379_299_096_683),
            (10, 100.0, 0.024_176_682_718_258_828),
            (2, 500.0, 0.017_774_395_092_741_575),
        ];
        for (n, x, want) in cases {
            let got = bessel_i_scaled(n, x).unwrap();
            assert!(((got - want) / want).abs() < 1e-10, "n={n} x={x} got={got}");
        }
    }

    #[test]
    fn i_scaled_in_unit_interval_and_monotone() {
        for &x in &[0.01, 0.7, 5.0, 19.9, 20.1, 60.0, 250.0] {
            let mut last = f64::INFINITY;
            for n in 0..30 {
                let v = bessel_i_scaled(n, x).unwrap();
                assert!(v > 0.0 && v <= 1.0);
                assert!(v <= last, "x={x} n={n}");
                last = v;
            }
        }
    }

    #[test]
    fn gamma_half_integers() {
        assert!((ln_gamma_half(0).exp() - std::f64::consts::PI.sqrt()).abs() < 1e-14);
        // Gamma(5/2) = 3 sqrt(pi) / 4
        let want = 0.75 * std::f64::consts::PI.sqrt();
        assert!((ln_gamma_half(2).exp() - want).abs() < 1e-14);
    }
}
