//! Orthonormal Haar transform with the coefficient ordering
//! `[scaling, coarsest detail, ..., finest details]`.

use std::f64::consts::FRAC_1_SQRT_2;

/// Forward transform of a power-of-two length signal.
pub(crate) fn forward(signal: &[f64]) -> Vec<f64> {
    let n = signal.len();
    debug_assert!(n.is_power_of_two());
    let mut out = signal.to_vec();
    let mut tmp = vec![0.0; n];
    let mut len = n;
    while len > 1 {
        let half = len / 2;
        for i in 0..half {
            let (a, b) = (out[2 * i], out[2 * i + 1]);
            tmp[i] = (a + b) * FRAC_1_SQRT_2;
            tmp[half + i] = (a - b) * FRAC_1_SQRT_2;
        }
        out[..len].copy_from_slice(&tmp[..len]);
        len = half;
    }
    out
}

/// Inverse of [`forward`].
pub(crate) fn inverse(coefficients: &[f64]) -> Vec<f64> {
    let n = coefficients.len();
    debug_assert!(n.is_power_of_two());
    let mut out = coefficients.to_vec();
    let mut tmp = vec![0.0; n];
    let mut len = 1;
    while len < n {
        for i in 0..len {
            let (s, d) = (out[i], out[len + i]);
            tmp[2 * i] = (s + d) * FRAC_1_SQRT_2;
            tmp[2 * i + 1] = (s - d) * FRAC_1_SQRT_2;
        }
        len *= 2;
        out[..len].copy_from_slice(&tmp[..len]);
    }
    out
}
