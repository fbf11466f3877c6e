//! Clamped B-splines on uniform interior knots, weighted least-squares fits
//! and analytic derivatives.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::func::SamplingGrid;

/// Polynomial degree of the splines used throughout the crate.
pub const CUBIC: usize = 3;

/// B-spline basis of a given degree with clamped (multiplicity `degree + 1`)
/// boundary knots and uniformly spaced interior knots.
#[derive(Debug, Clone, PartialEq)]
pub struct BSplineBasis {
    degree: usize,
    knots: Vec<f64>,
}

impl BSplineBasis {
    /// Basis with `dimension` functions on `[lo, hi]`.
    ///
    /// Requires `dimension >= degree + 1`; the number of interior knots is
    /// `dimension - degree - 1`.
    pub fn clamped_uniform(lo: f64, hi: f64, dimension: usize, degree: usize) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Config(format!("invalid spline interval [{lo}, {hi}]")));
        }
        if dimension < degree + 1 {
            return Err(Error::Config(format!(
                "spline dimension {dimension} is below degree + 1 = {}",
                degree + 1
            )));
        }
        let interior = dimension - degree - 1;
        let mut knots = Vec::with_capacity(dimension + degree + 1);
        knots.extend(std::iter::repeat_n(lo, degree + 1));
        for k in 1..=interior {
            knots.push(lo + (hi - lo) * k as f64 / (interior + 1) as f64);
        }
        knots.extend(std::iter::repeat_n(hi, degree + 1));
        Ok(BSplineBasis { degree, knots })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dimension(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Boundary of the spline domain.
    pub fn interval(&self) -> (f64, f64) {
        (self.knots[self.degree], self.knots[self.dimension()])
    }

    fn span(&self, x: f64) -> usize {
        let n = self.dimension();
        let p = self.degree;
        if x >= self.knots[n] {
            // last non-empty span
            let mut mu = n - 1;
            while mu > p && self.knots[mu] >= self.knots[n] {
                mu -= 1;
            }
            return mu;
        }
        if x <= self.knots[p] {
            return p;
        }
        // largest mu in [p, n-1] with knots[mu] <= x
        let (mut lo, mut hi) = (p, n);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.knots[mid] <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Evaluates the `degree + 1` possibly non-zero basis functions at `x`.
    /// Returns the index of the first of them.
    pub fn eval_nonzero(&self, x: f64, out: &mut [f64]) -> usize {
        let p = self.degree;
        debug_assert!(out.len() > p);
        let (lo, hi) = self.interval();
        let x = x.clamp(lo, hi);
        let mu = self.span(x);
        let t = &self.knots;

        // Cox-de Boor triangle, in place
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        out[0] = 1.0;
        for j in 1..=p {
            left[j] = x - t[mu + 1 - j];
            right[j] = t[mu + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = if denom != 0.0 { out[r] / denom } else { 0.0 };
                out[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            out[j] = saved;
        }
        mu - p
    }

    /// Dense `abscissae.len() x dimension` collocation matrix.
    pub fn design_matrix(&self, abscissae: &[f64]) -> DMatrix<f64> {
        let n = self.dimension();
        let mut m = DMatrix::zeros(abscissae.len(), n);
        let mut buf = vec![0.0; self.degree + 1];
        for (row, &x) in abscissae.iter().enumerate() {
            let first = self.eval_nonzero(x, &mut buf);
            for (k, v) in buf.iter().enumerate() {
                m[(row, first + k)] = *v;
            }
        }
        m
    }
}

/// A spline curve: basis plus coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Spline {
    basis: BSplineBasis,
    coefficients: Vec<f64>,
}

impl Spline {
    pub fn new(basis: BSplineBasis, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != basis.dimension() {
            return Err(Error::Config(format!(
                "spline has {} coefficients for a basis of dimension {}",
                coefficients.len(),
                basis.dimension()
            )));
        }
        Ok(Spline { basis, coefficients })
    }

    pub fn basis(&self) -> &BSplineBasis {
        &self.basis
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut buf = vec![0.0; self.basis.degree + 1];
        let first = self.basis.eval_nonzero(x, &mut buf);
        buf.iter()
            .zip(&self.coefficients[first..])
            .map(|(b, c)| b * c)
            .sum()
    }

    /// First derivative, as a spline of one degree less on the same knots
    /// (with the outer knots dropped). The derivative of a degree-0 spline is
    /// zero.
    pub fn derivative(&self) -> Spline {
        let p = self.basis.degree;
        if p == 0 {
            return Spline {
                basis: self.basis.clone(),
                coefficients: vec![0.0; self.coefficients.len()],
            };
        }
        let t = &self.basis.knots;
        let c = &self.coefficients;
        let coefficients = (0..c.len() - 1)
            .map(|i| {
                let span = t[i + p + 1] - t[i + 1];
                if span > 0.0 {
                    p as f64 * (c[i + 1] - c[i]) / span
                } else {
                    0.0
                }
            })
            .collect();
        let basis = BSplineBasis {
            degree: p - 1,
            knots: t[1..t.len() - 1].to_vec(),
        };
        Spline { basis, coefficients }
    }

    pub fn nth_derivative(&self, order: usize) -> Spline {
        (0..order).fold(self.clone(), |s, _| s.derivative())
    }
}

/// Quadrature-weighted least-squares spline fitter for one grid and one
/// basis. Everything that depends only on the grid is factored once.
///
/// Minimizes `sum_k w_k (u_k - s(t_k))^2`, which makes the fit the orthogonal
/// projection onto the spline space under the quadrature inner product.
#[derive(Debug, Clone)]
pub struct SplineFitter {
    basis: BSplineBasis,
    design: DMatrix<f64>,
    weights: Vec<f64>,
    gram: DMatrix<f64>,
    cholesky: Cholesky<f64, Dyn>,
}

impl SplineFitter {
    pub fn new(grid: &SamplingGrid, dimension: usize, degree: usize) -> Result<Self> {
        Self::with_points(grid.abscissae(), grid.weights(), grid.interval(), dimension, degree)
    }

    pub(crate) fn with_points(
        abscissae: &[f64],
        weights: &[f64],
        interval: (f64, f64),
        dimension: usize,
        degree: usize,
    ) -> Result<Self> {
        if dimension > abscissae.len() {
            return Err(Error::Config(format!(
                "spline dimension {dimension} exceeds the {} sample points (under-determined fit)",
                abscissae.len()
            )));
        }
        let basis = BSplineBasis::clamped_uniform(interval.0, interval.1, dimension, degree)?;
        let design = basis.design_matrix(abscissae);
        let n = design.ncols();
        let mut gram = DMatrix::zeros(n, n);
        for (row, &w) in weights.iter().enumerate() {
            for i in 0..n {
                let bi = design[(row, i)];
                if bi == 0.0 {
                    continue;
                }
                for j in 0..n {
                    gram[(i, j)] += w * bi * design[(row, j)];
                }
            }
        }
        let cholesky = gram.clone().cholesky().ok_or_else(|| {
            Error::Config(format!(
                "spline basis of dimension {dimension} is not identifiable on this grid"
            ))
        })?;
        Ok(SplineFitter {
            basis,
            design,
            weights: weights.to_vec(),
            gram,
            cholesky,
        })
    }

    pub fn basis(&self) -> &BSplineBasis {
        &self.basis
    }

    pub fn dimension(&self) -> usize {
        self.basis.dimension()
    }

    /// Gram matrix of the basis under the quadrature inner product.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    /// Least-squares coefficients of `values`.
    pub fn fit_coefficients(&self, values: &[f64]) -> Vec<f64> {
        let weighted = DVector::from_iterator(
            values.len(),
            values.iter().zip(&self.weights).map(|(v, w)| v * w),
        );
        let rhs = self.design.tr_mul(&weighted);
        self.cholesky.solve(&rhs).iter().copied().collect()
    }

    pub fn fit(&self, values: &[f64]) -> Spline {
        Spline {
            basis: self.basis.clone(),
            coefficients: self.fit_coefficients(values),
        }
    }

    /// Fitted values at the sample points.
    pub fn smooth(&self, values: &[f64]) -> Vec<f64> {
        let c = DVector::from_vec(self.fit_coefficients(values));
        (&self.design * c).iter().copied().collect()
    }

    /// Diagonal of the hat matrix `H = B G^-1 B^T W`.
    pub fn leverages(&self) -> Vec<f64> {
        (0..self.design.nrows())
            .map(|k| {
                let row = self.design.row(k).transpose();
                let solved = self.cholesky.solve(&row);
                self.weights[k] * row.dot(&solved)
            })
            .collect()
    }

    /// Derivative of the fitted spline, sampled at `abscissae`.
    pub fn derivative_at(&self, values: &[f64], order: usize, abscissae: &[f64]) -> Vec<f64> {
        let d = self.fit(values).nth_derivative(order);
        abscissae.iter().map(|&x| d.eval(x)).collect()
    }
}
