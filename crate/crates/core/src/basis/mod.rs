//! Projections onto finite-dimensional function subspaces.
//!
//! Three families are available:
//!
//! - **Fourier**: constant, then `(cos 2 pi k s, sin 2 pi k s)` pairs with
//!   increasing `k`, where `s` maps the sampled interval onto `[0, 1]`.
//!   On uniform grids the trapezoid rule makes this system exactly
//!   orthonormal for `d < grid length`, and coefficients can be computed
//!   with an FFT.
//! - **Haar wavelet**: scaling function first, then details from coarsest to
//!   finest. Basis functions are the rows of the orthonormal Haar matrix
//!   divided by `sqrt(w_k)`, which makes them orthonormal under the
//!   quadrature inner product on dyadic grids.
//! - **B-spline**: least-squares coefficients in a clamped cubic B-spline
//!   basis. The basis is not orthonormal; [`Projector::metric`] returns its
//!   Gram matrix so that `<P u, P v> = c_u^T G c_v`.
//!
//! # Non-dyadic grids (Haar)
//!
//! When the grid length is not a power of two, the quadrature mean is
//! removed, the weighted residual `sqrt(w) * (u - mean)` is zero-padded
//! symmetrically to the next power of two and transformed. The scaling
//! coefficient slot then carries `mean * sqrt(mu(R))`, and the full
//! dimension is the padded length. On reconstruction the
//! dropped scaling part of the residual is recovered from the requirement
//! that the padded samples vanish, so the full-length round trip is exact.
//! Coefficient energy is then bounded by, but not equal to, `||u||^2`.

mod fourier;
mod haar;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::{LabeledDataset, SampledFunction, SamplingGrid};
use crate::spline::{SplineFitter, CUBIC};

/// Family of basis functions, without the dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum BasisFamily {
    Fourier,
    HaarWavelet,
    Bspline {
        #[serde(default = "default_degree")]
        degree: usize,
    },
}

fn default_degree() -> usize {
    CUBIC
}

impl BasisFamily {
    pub fn cubic_bspline() -> Self {
        BasisFamily::Bspline { degree: CUBIC }
    }

    /// Whether the first `d` coefficients of a higher-dimensional projection
    /// equal the `d`-dimensional projection.
    pub fn is_nested(&self) -> bool {
        !matches!(self, BasisFamily::Bspline { .. })
    }
}

impl std::fmt::Display for BasisFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BasisFamily::Fourier => write!(f, "fourier"),
            BasisFamily::HaarWavelet => write!(f, "haar_wavelet"),
            BasisFamily::Bspline { degree } => write!(f, "bspline(degree={degree})"),
        }
    }
}

/// A basis family together with the subspace dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisSpec {
    #[serde(flatten)]
    pub family: BasisFamily,
    pub dimension: usize,
}

impl BasisSpec {
    pub fn new(family: BasisFamily, dimension: usize) -> Self {
        BasisSpec { family, dimension }
    }

    pub fn fourier(dimension: usize) -> Self {
        Self::new(BasisFamily::Fourier, dimension)
    }

    pub fn haar(dimension: usize) -> Self {
        Self::new(BasisFamily::HaarWavelet, dimension)
    }

    pub fn bspline(dimension: usize) -> Self {
        Self::new(BasisFamily::cubic_bspline(), dimension)
    }

    /// Checks the spec against a grid of `grid_len` points.
    pub fn validate(&self, grid_len: usize) -> Result<()> {
        let d = self.dimension;
        if d == 0 {
            return Err(Error::Config("basis dimension must be at least 1".into()));
        }
        let max = match self.family {
            BasisFamily::HaarWavelet => grid_len.next_power_of_two(),
            _ => grid_len,
        };
        if d > max {
            return Err(Error::Config(format!(
                "{} basis of dimension {d} exceeds the maximum {max} for a grid of {grid_len} points",
                self.family
            )));
        }
        if let BasisFamily::Bspline { degree } = self.family {
            if d < degree + 1 {
                return Err(Error::Config(format!(
                    "B-spline dimension {d} is below degree + 1 = {}",
                    degree + 1
                )));
            }
        }
        Ok(())
    }
}

/// Coordinates of a projected function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientVector {
    pub basis: BasisSpec,
    pub coefficients: Vec<f64>,
}

impl CoefficientVector {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn euclidean_norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone)]
enum Engine {
    Fourier { table: Vec<Vec<f64>>, fft: bool },
    Haar(HaarEngine),
    Bspline(Box<SplineFitter>),
}

#[derive(Debug, Clone)]
struct HaarEngine {
    sqrt_weights: Vec<f64>,
    padded_len: usize,
    pad_left: usize,
    sqrt_mass: f64,
}

/// Evaluation tables for one (basis, grid) pair. Build once, project many.
#[derive(Debug, Clone)]
pub struct Projector {
    spec: BasisSpec,
    grid: SamplingGrid,
    engine: Engine,
}

impl Projector {
    pub fn new(spec: BasisSpec, grid: &SamplingGrid) -> Result<Self> {
        spec.validate(grid.len())?;
        let engine = match spec.family {
            BasisFamily::Fourier => Engine::Fourier {
                table: fourier::table(grid, spec.dimension),
                fft: grid.is_uniform(1e-9),
            },
            BasisFamily::HaarWavelet => {
                let m = grid.len();
                let padded_len = m.next_power_of_two();
                Engine::Haar(HaarEngine {
                    sqrt_weights: grid.weights().iter().map(|w| w.sqrt()).collect(),
                    padded_len,
                    pad_left: (padded_len - m) / 2,
                    sqrt_mass: grid.total_mass().sqrt(),
                })
            }
            BasisFamily::Bspline { degree } => {
                Engine::Bspline(Box::new(SplineFitter::new(grid, spec.dimension, degree)?))
            }
        };
        Ok(Projector {
            spec,
            grid: grid.clone(),
            engine,
        })
    }

    pub fn spec(&self) -> &BasisSpec {
        &self.spec
    }

    /// Gram matrix of the basis under the quadrature inner product, or `None`
    /// for the orthonormal families.
    pub fn metric(&self) -> Option<&DMatrix<f64>> {
        match &self.engine {
            Engine::Bspline(f) => Some(f.gram()),
            _ => None,
        }
    }

    fn check(&self, u: &SampledFunction) -> Result<()> {
        if crate::func::same_grid(u.grid(), &self.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch(
                "function is not sampled on the projector's grid".into(),
            ))
        }
    }

    /// Coefficients `<u, Psi_j>`, j = 1..d.
    pub fn project(&self, u: &SampledFunction) -> Result<CoefficientVector> {
        self.check(u)?;
        let coefficients = match &self.engine {
            Engine::Fourier { fft: true, .. } => {
                fourier::project_fft(&self.grid, u.values(), self.spec.dimension)
            }
            Engine::Fourier { table, .. } => direct(&self.grid, table, u.values()),
            Engine::Haar(h) => self.haar_project(h, u)?,
            Engine::Bspline(f) => f.fit_coefficients(u.values()),
        };
        Ok(CoefficientVector {
            basis: self.spec,
            coefficients,
        })
    }

    /// Fourier coefficients by direct quadrature against the sampled basis,
    /// bypassing the FFT.
    pub fn project_direct(&self, u: &SampledFunction) -> Result<CoefficientVector> {
        self.check(u)?;
        match &self.engine {
            Engine::Fourier { table, .. } => Ok(CoefficientVector {
                basis: self.spec,
                coefficients: direct(&self.grid, table, u.values()),
            }),
            _ => self.project(u),
        }
    }

    fn haar_project(&self, h: &HaarEngine, u: &SampledFunction) -> Result<Vec<f64>> {
        let d = self.spec.dimension;
        let m = self.grid.len();
        let values = u.values();
        if h.padded_len == m {
            let v: Vec<f64> = values.iter().zip(&h.sqrt_weights).map(|(x, s)| x * s).collect();
            let mut c = haar::forward(&v);
            c.truncate(d);
            return Ok(c);
        }
        let mean = crate::func::mean(u)?;
        let mut v = vec![0.0; h.padded_len];
        for k in 0..m {
            v[h.pad_left + k] = h.sqrt_weights[k] * (values[k] - mean);
        }
        let mut c = haar::forward(&v);
        c[0] = mean * h.sqrt_mass;
        c.truncate(d);
        Ok(c)
    }

    /// Evaluates `sum_j c_j Psi_j` on the grid.
    pub fn reconstruct(&self, c: &CoefficientVector) -> Result<Vec<f64>> {
        if c.len() != self.spec.dimension {
            return Err(Error::Config(format!(
                "{} coefficients for a basis of dimension {}",
                c.len(),
                self.spec.dimension
            )));
        }
        let m = self.grid.len();
        let coeffs = &c.coefficients;
        Ok(match &self.engine {
            Engine::Fourier { table, .. } => {
                let mut out = vec![0.0; m];
                for (row, cj) in table.iter().zip(coeffs) {
                    for (o, r) in out.iter_mut().zip(row) {
                        *o += cj * r;
                    }
                }
                out
            }
            Engine::Haar(h) => {
                let mut full = vec![0.0; h.padded_len];
                full[..coeffs.len()].copy_from_slice(coeffs);
                if h.padded_len == m {
                    let v = haar::inverse(&full);
                    v.iter().zip(&h.sqrt_weights).map(|(x, s)| x / s).collect()
                } else {
                    let mean = full[0] / h.sqrt_mass;
                    full[0] = 0.0;
                    let mut v = haar::inverse(&full);
                    // the padded samples of the residual are zero: recover the
                    // residual's scaling coefficient from them
                    let pads: Vec<f64> = (0..h.padded_len)
                        .filter(|&i| i < h.pad_left || i >= h.pad_left + m)
                        .map(|i| v[i])
                        .collect();
                    let shift = pads.iter().sum::<f64>() / pads.len() as f64;
                    for x in v.iter_mut() {
                        *x -= shift;
                    }
                    (0..m)
                        .map(|k| v[h.pad_left + k] / h.sqrt_weights[k] + mean)
                        .collect()
                }
            }
            Engine::Bspline(f) => {
                let cv = nalgebra::DVector::from_column_slice(coeffs);
                (f.design() * cv).iter().copied().collect()
            }
        })
    }

    /// Sampled `j`-th basis function (0-based).
    pub fn basis_function(&self, j: usize) -> Result<Vec<f64>> {
        if j >= self.spec.dimension {
            return Err(Error::Config(format!(
                "basis index {j} out of range for dimension {}",
                self.spec.dimension
            )));
        }
        let mut e = vec![0.0; self.spec.dimension];
        e[j] = 1.0;
        self.reconstruct(&CoefficientVector {
            basis: self.spec,
            coefficients: e,
        })
    }
}

fn direct(grid: &SamplingGrid, table: &[Vec<f64>], values: &[f64]) -> Vec<f64> {
    table
        .iter()
        .map(|row| crate::func::weighted_dot(grid.weights(), row, values))
        .collect()
}

/// Convenience wrapper: builds a [`Projector`] and projects one function.
pub fn project(u: &SampledFunction, basis: BasisSpec) -> Result<CoefficientVector> {
    Projector::new(basis, u.grid())?.project(u)
}

/// Convenience wrapper around [`Projector::reconstruct`].
pub fn reconstruct(c: &CoefficientVector, grid: &SamplingGrid) -> Result<Vec<f64>> {
    Projector::new(c.basis, grid)?.reconstruct(c)
}

/// Mean leave-one-point-out squared reconstruction error of the cubic spline
/// fit with `dimension` basis functions, over every function of `dataset`.
///
/// Uses the exact deletion identity of linear smoothers,
/// `u_k - s_{-k}(t_k) = (u_k - s(t_k)) / (1 - h_kk)`. Returns `None` when the
/// dimension is infeasible on the grid.
pub fn spline_loo_error(dataset: &LabeledDataset, dimension: usize) -> Option<f64> {
    let grid = dataset.grid();
    if dimension < CUBIC + 1 || dimension + 1 > grid.len() {
        return None;
    }
    let fitter = SplineFitter::new(grid, dimension, CUBIC).ok()?;
    let leverage = fitter.leverages();
    if leverage.iter().any(|h| !(*h < 1.0 - 1e-8)) {
        return None;
    }
    let mut total = 0.0;
    for f in dataset.functions() {
        let smooth = fitter.smooth(f.values());
        for ((u, s), h) in f.values().iter().zip(&smooth).zip(&leverage) {
            let r = (u - s) / (1.0 - h);
            total += r * r;
        }
    }
    Some(total / (dataset.len() * grid.len()) as f64)
}

/// Picks the spline dimension with the smallest leave-one-point-out
/// reconstruction error, labels ignored.
///
/// Errors within `1e-9` relative (plus an absolute floor of `1e-12` times the
/// mean squared sample value) of the best are treated as ties and resolved
/// toward the smaller dimension.
pub fn select_spline_dimension(dataset: &LabeledDataset, candidates: &[usize]) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::Config("no candidate spline dimension".into()));
    }
    if dataset.is_empty() {
        return Err(Error::Config("cannot select a spline dimension on an empty dataset".into()));
    }
    let scale = dataset
        .functions()
        .iter()
        .flat_map(|f| f.values())
        .map(|v| v * v)
        .sum::<f64>()
        / (dataset.len() * dataset.grid().len()) as f64;

    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let scored: Vec<(usize, f64)> = sorted
        .iter()
        .filter_map(|&d| spline_loo_error(dataset, d).map(|e| (d, e)))
        .collect();
    let best = scored
        .iter()
        .map(|&(_, e)| e)
        .fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Err(Error::Config(format!(
            "no feasible spline dimension among {candidates:?} for a grid of {} points",
            dataset.grid().len()
        )));
    }
    let slack = best * 1e-9 + scale * 1e-12;
    Ok(scored
        .iter()
        .find(|&&(_, e)| e <= best + slack)
        .map(|&(d, _)| d)
        .expect("the minimum is attained"))
}
