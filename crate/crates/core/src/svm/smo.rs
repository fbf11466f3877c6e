//! Sequential minimal optimization for the soft-margin dual
//!
//! ```text
//! max_a  sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij
//! s.t.   sum_i a_i y_i = 0,  0 <= a_i <= C
//! ```
//!
//! Working pairs are chosen as the maximal violating pair; ties go to the
//! lowest index, which makes the iterate sequence deterministic.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::Label;

/// Curvature used when a pair has non-positive second derivative.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop when the maximal pairwise KKT violation drops below this.
    pub tol: f64,
    /// Maximal number of pair updates.
    pub max_iterations: u64,
    /// Accepted negative eigenvalue of the Gram, relative to its trace.
    pub psd_slack: f64,
    /// Run the eigenvalue check before solving.
    pub check_psd: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-3,
            max_iterations: 10_000_000,
            psd_slack: 1e-8,
            check_psd: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    /// Dual objective at `alphas`.
    pub objective: f64,
    pub iterations: u64,
    /// `max_{I_up} -y G - min_{I_low} -y G`, clamped at zero.
    pub kkt_violation: f64,
}

/// Checks symmetry and the relaxed positive semidefiniteness of a Gram.
pub fn check_gram(gram: &DMatrix<f64>, psd_slack: f64) -> Result<()> {
    let n = gram.nrows();
    if gram.ncols() != n {
        return Err(Error::Config(format!(
            "gram matrix is {}x{}, expected a square matrix",
            n,
            gram.ncols()
        )));
    }
    if let Some(p) = gram.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { position: p });
    }
    let scale = gram.amax().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..i {
            if (gram[(i, j)] - gram[(j, i)]).abs() > 1e-10 * scale {
                return Err(Error::Config(format!(
                    "gram matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let trace = gram.trace().abs();
    let min_eigenvalue = gram
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let slack = psd_slack * trace;
    if min_eigenvalue < -slack {
        return Err(Error::NotPsd {
            min_eigenvalue,
            slack,
        });
    }
    Ok(())
}

/// Solves the dual for a precomputed Gram.
pub fn solve_dual(
    gram: &DMatrix<f64>,
    labels: &[Label],
    c: f64,
    options: &SolverOptions,
) -> Result<DualSolution> {
    let n = labels.len();
    if gram.nrows() != n || gram.ncols() != n {
        return Err(Error::Config(format!(
            "gram matrix is {}x{} for {n} labels",
            gram.nrows(),
            gram.ncols()
        )));
    }
    if n < 2 {
        return Err(Error::DegenerateTraining(format!(
            "need at least two examples, got {n}"
        )));
    }
    if !labels.contains(&Label::Positive) || !labels.contains(&Label::Negative) {
        return Err(Error::DegenerateTraining(
            "training labels contain a single class".into(),
        ));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Config(format!("C must be positive and finite, got {c}")));
    }
    if options.check_psd {
        check_gram(gram, options.psd_slack)?;
    }

    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    let mut alpha = vec![0.0; n];
    // gradient of 1/2 a'Qa - e'a
    let mut grad = vec![-1.0; n];
    let mut iterations = 0u64;

    loop {
        let (pair, violation) = select_pair(&y, &alpha, &grad, c);
        let Some((i, j)) = pair.filter(|_| violation >= options.tol) else {
            return Ok(finish(&y, alpha, &grad, c, iterations, violation.max(0.0)));
        };
        if iterations >= options.max_iterations {
            let best = finish(&y, alpha, &grad, c, iterations, violation);
            return Err(Error::Convergence {
                iterations,
                violation,
                best: Box::new(best),
            });
        }
        iterations += 1;

        let q_ij = y[i] * y[j] * gram[(i, j)];
        let (q_ii, q_jj) = (gram[(i, i)], gram[(j, j)]);
        let (old_i, old_j) = (alpha[i], alpha[j]);

        if y[i] != y[j] {
            let quad = positive(q_ii + q_jj + 2.0 * q_ij);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = positive(q_ii + q_jj - 2.0 * q_ij);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (d_i, d_j) = (alpha[i] - old_i, alpha[j] - old_j);
        for (k, g) in grad.iter_mut().enumerate() {
            *g += y[k] * (y[i] * gram[(i, k)] * d_i + y[j] * gram[(j, k)] * d_j);
        }
    }
}

fn positive(q: f64) -> f64 {
    if q > 0.0 {
        q
    } else {
        TAU
    }
}

fn in_up(y: f64, a: f64, c: f64) -> bool {
    (y > 0.0 && a < c) || (y < 0.0 && a > 0.0)
}

fn in_low(y: f64, a: f64, c: f64) -> bool {
    (y > 0.0 && a > 0.0) || (y < 0.0 && a < c)
}

/// Maximal violating pair and the violation `m - M`.
fn select_pair(y: &[f64], alpha: &[f64], grad: &[f64], c: f64) -> (Option<(usize, usize)>, f64) {
    let mut up: Option<(usize, f64)> = None;
    let mut low: Option<(usize, f64)> = None;
    for t in 0..y.len() {
        let v = -y[t] * grad[t];
        if in_up(y[t], alpha[t], c) && up.is_none_or(|(_, best)| v > best) {
            up = Some((t, v));
        }
        if in_low(y[t], alpha[t], c) && low.is_none_or(|(_, best)| v < best) {
            low = Some((t, v));
        }
    }
    match (up, low) {
        (Some((i, m)), Some((j, big_m))) => (Some((i, j)), m - big_m),
        _ => (None, 0.0),
    }
}

fn finish(
    y: &[f64],
    alpha: Vec<f64>,
    grad: &[f64],
    c: f64,
    iterations: u64,
    violation: f64,
) -> DualSolution {
    let objective = 0.5
        * alpha
            .iter()
            .zip(grad)
            .map(|(a, g)| a * (1.0 - g))
            .sum::<f64>();
    let bias = compute_bias(y, &alpha, grad, c);
    DualSolution {
        alphas: alpha,
        bias,
        objective,
        iterations,
        kkt_violation: violation,
    }
}

/// Mean of `y_i - sum_j a_j y_j K_ij` over free vectors, else the midpoint of
/// the interval of biases compatible with the bound vectors.
fn compute_bias(y: &[f64], alpha: &[f64], grad: &[f64], c: f64) -> f64 {
    // -y_i G_i = y_i - sum_j a_j y_j K_ij
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    for i in 0..y.len() {
        let r = -y[i] * grad[i];
        let a = alpha[i];
        if a > 0.0 && a < c {
            free_sum += r;
            free_count += 1;
        } else if (a <= 0.0) == (y[i] > 0.0) {
            lower = lower.max(r);
        } else {
            upper = upper.min(r);
        }
    }
    if free_count > 0 {
        return free_sum / free_count as f64;
    }
    match (lower.is_finite(), upper.is_finite()) {
        (true, true) => 0.5 * (lower + upper),
        (true, false) => lower,
        (false, true) => upper,
        (false, false) => 0.0,
    }
}

/// Dual objective `sum a - 1/2 a'Qa` evaluated from scratch.
pub fn dual_objective(gram: &DMatrix<f64>, labels: &[Label], alphas: &[f64]) -> f64 {
    let n = labels.len();
    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alphas[i] * alphas[j] * y[i] * y[j] * gram[(i, j)];
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

/// Primal objective `1/2 ||w||^2 + C sum_i hinge_i` for the kernel expansion
/// `w = sum_j a_j y_j phi(x_j)` with bias `b`.
pub fn primal_objective(gram: &DMatrix<f64>, labels: &[Label], alphas: &[f64], bias: f64, c: f64) -> f64 {
    let n = labels.len();
    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    let mut w2 = 0.0;
    let mut hinge = 0.0;
    for i in 0..n {
        let mut f = bias;
        for j in 0..n {
            let k = alphas[j] * y[j] * gram[(i, j)];
            f += k;
            w2 += alphas[i] * y[i] * k;
        }
        hinge += (1.0 - y[i] * f).max(0.0);
    }
    0.5 * w2 + c * hinge
}
