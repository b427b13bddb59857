//! Discrete Fourier coefficients of periodic samples.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// `c_k = (1/N) sum_j f_j exp(-2 pi i j k / N)` for `k = 0..N`.
///
/// With `f_j = F(j P / N)` sampled over one period `P`, `c_k` approximates
/// the Fourier coefficient of `F` at frequency `k` (and `k - N` for the upper
/// half of the output, by aliasing).
pub fn fourier_coefficients(samples: &[Complex64]) -> Vec<Complex64> {
    let n = samples.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

/// Coefficient for a signed frequency from the output of
/// [`fourier_coefficients`].
pub fn coefficient_at(coeffs: &[Complex64], k: i64) -> Complex64 {
    let n = coeffs.len() as i64;
    coeffs[k.rem_euclid(n) as usize]
}
