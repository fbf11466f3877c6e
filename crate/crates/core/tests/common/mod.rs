#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fsvm::{Label, LabeledDataset, SampledFunction, SamplingGrid};

/// Maximum of the soft-margin dual found by enumerating every assignment of
/// each variable to `{0, C, free}` and solving the equality-constrained
/// stationarity system on the free set. Exponential in `n`; meant for
/// `n <= 8`.
pub fn brute_force_dual(gram: &DMatrix<f64>, y: &[f64], c: f64) -> f64 {
    let n = y.len();
    let q = DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * gram[(i, j)]);
    let objective = |a: &[f64]| {
        let av = DVector::from_column_slice(a);
        a.iter().sum::<f64>() - 0.5 * (av.transpose() * &q * &av)[(0, 0)]
    };
    let mut best = f64::NEG_INFINITY;
    let mut state = vec![0u8; n];
    loop {
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        let feasible = if free.is_empty() {
            alpha.iter().zip(y).map(|(a, y)| a * y).sum::<f64>().abs() < 1e-12
        } else {
            // [Q_FF  y_F] [a_F]   [1 - Q_FB a_B]
            // [y_F'  0  ] [ b ] = [ -y_B' a_B   ]
            let k = free.len();
            let mut m = DMatrix::zeros(k + 1, k + 1);
            let mut rhs = DVector::zeros(k + 1);
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    m[(r, s)] = q[(i, j)];
                }
                m[(r, k)] = y[i];
                m[(k, r)] = y[i];
                rhs[r] = 1.0 - (0..n).filter(|j| state[*j] == 1).map(|j| q[(i, j)] * c).sum::<f64>();
            }
            rhs[k] = -(0..n).filter(|j| state[*j] == 1).map(|j| y[j] * c).sum::<f64>();
            let svd = m.clone().svd(true, true);
            match svd.solve(&rhs, 1e-10) {
                Ok(sol) if (&m * &sol - &rhs).norm() < 1e-8 * (1.0 + rhs.norm()) => {
                    for (r, &i) in free.iter().enumerate() {
                        alpha[i] = sol[r];
                    }
                    free.iter().all(|&i| alpha[i] >= -1e-12 && alpha[i] <= c + 1e-12)
                }
                _ => false,
            }
        };
        if feasible {
            let clipped: Vec<f64> = alpha.iter().map(|a| a.clamp(0.0, c)).collect();
            best = best.max(objective(&clipped));
        }
        // next assignment in base 3
        let mut pos = 0;
        loop {
            if pos == n {
                return best;
            }
            state[pos] += 1;
            if state[pos] < 3 {
                break;
            }
            state[pos] = 0;
            pos += 1;
        }
    }
}

/// Random points in `R^dim` with labels of both classes.
pub fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<Label>) {
    loop {
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let labels: Vec<Label> = (0..n)
            .map(|_| if rng.random::<bool>() { Label::Positive } else { Label::Negative })
            .collect();
        if labels.contains(&Label::Positive) && labels.contains(&Label::Negative) {
            return (pts, labels);
        }
    }
}

/// Grid whose quadrature inner product is the Euclidean one on `dim` points.
pub fn euclidean_grid(dim: usize) -> Arc<SamplingGrid> {
    Arc::new(SamplingGrid::with_weights((0..dim).map(|i| i as f64).collect(), vec![1.0; dim]).unwrap())
}

pub fn points_dataset(pts: &[Vec<f64>], labels: &[Label]) -> LabeledDataset {
    let grid = euclidean_grid(pts[0].len());
    LabeledDataset::from_rows(grid, pts.to_vec(), labels.to_vec()).unwrap()
}

/// Smooth random curve: a few random low-frequency harmonics plus a
/// polynomial trend.
pub fn random_curve(rng: &mut ChaCha8Rng, grid: &Arc<SamplingGrid>) -> SampledFunction {
    let a: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
    SampledFunction::from_fn(grid.clone(), |t| {
        a[0] + a[1] * t
            + a[2] * t * t
            + a[3] * (3.0 * t).sin()
            + a[4] * (7.0 * t + a[5]).cos()
    })
    .unwrap()
}

/// Rough random curve: iid uniform samples.
pub fn rough_curve(rng: &mut ChaCha8Rng, grid: &Arc<SamplingGrid>) -> SampledFunction {
    let v = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    SampledFunction::new(grid.clone(), v).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
