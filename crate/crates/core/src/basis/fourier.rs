use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::func::SamplingGrid;

/// Value of the `j`-th (0-based) Fourier basis function at `t`.
///
/// Ordering: constant, then `cos(2 pi k s)`, `sin(2 pi k s)` for k = 1, 2, ...
/// where `s` rescales the interval to `[0, 1]`. Every function has unit
/// L2 norm on the original interval.
pub(crate) fn basis_value(j: usize, t: f64, lo: f64, len: f64) -> f64 {
    let s = (t - lo) / len;
    if j == 0 {
        return 1.0 / len.sqrt();
    }
    let k = j.div_ceil(2) as f64;
    let amp = (2.0 / len).sqrt();
    if j % 2 == 1 {
        amp * (2.0 * PI * k * s).cos()
    } else {
        amp * (2.0 * PI * k * s).sin()
    }
}

pub(crate) fn table(grid: &SamplingGrid, dimension: usize) -> Vec<Vec<f64>> {
    let (lo, hi) = grid.interval();
    (0..dimension)
        .map(|j| {
            grid.abscissae()
                .iter()
                .map(|&t| basis_value(j, t, lo, hi - lo))
                .collect()
        })
        .collect()
}

/// Quadrature coefficients on a uniform grid via one FFT.
///
/// With trapezoid weights the two end samples share the weight of one
/// periodic sample, so the quadrature sums are exactly the DFT of the
/// periodized sequence `((u_0 + u_last) / 2, u_1, ..., u_{m-2})`.
pub(crate) fn project_fft(grid: &SamplingGrid, values: &[f64], dimension: usize) -> Vec<f64> {
    let m = values.len();
    let period = m - 1;
    let (lo, hi) = grid.interval();
    let len = hi - lo;
    let h = len / period as f64;

    let mut buf: Vec<Complex<f64>> = values[..period].iter().map(|&v| Complex::new(v, 0.0)).collect();
    buf[0].re = 0.5 * (values[0] + values[m - 1]);
    let fft = FftPlanner::new().plan_fft_forward(period);
    fft.process(&mut buf);

    let amp = (2.0 / len).sqrt();
    (0..dimension)
        .map(|j| {
            if j == 0 {
                return h * buf[0].re / len.sqrt();
            }
            let k = j.div_ceil(2) % period;
            if j % 2 == 1 {
                h * amp * buf[k].re
            } else {
                -h * amp * buf[k].im
            }
        })
        .collect()
}
