//! Base kernels, functional kernels `Q(u, v) = K(P(u), P(v))` and Gram
//! matrices.
//!
//! A [`FunctionalKernel`] is a pipeline: transforms applied left to right,
//! then an optional projection, then a base kernel. [`PreparedKernel`] binds a
//! kernel to a grid and maps each curve to a feature vector whose inner
//! product (quadrature for raw curves, Euclidean for coefficients) is the
//! `L2` inner product of the transformed curves.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisSpec, Projector};
use crate::error::{Error, Result};
use crate::func::{self, SampledFunction, SamplingGrid, TransformTolerances};
use crate::spline::SplineFitter;

/// Lower clamp of the Gaussian exponent.
pub const GAUSSIAN_EXPONENT_FLOOR: f64 = -700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseKernel {
    /// `<u, v>`
    Linear,
    /// `exp(-sigma * ||u - v||^2)`
    Gaussian { sigma: f64 },
    /// `(1 + <u, v>)^degree`
    Polynomial { degree: u32 },
}

impl BaseKernel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BaseKernel::Gaussian { sigma } if !(sigma > 0.0 && sigma.is_finite()) => Err(
                Error::Config(format!("gaussian sigma must be positive, got {sigma}")),
            ),
            BaseKernel::Polynomial { degree: 0 } => {
                Err(Error::Config("polynomial degree must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, BaseKernel::Gaussian { .. })
    }

    /// Evaluates the kernel on two feature vectors under `metric`.
    pub fn eval(&self, metric: &Metric, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            BaseKernel::Linear => metric.inner(a, b),
            BaseKernel::Polynomial { degree } => (1.0 + metric.inner(a, b)).powi(degree as i32),
            BaseKernel::Gaussian { sigma } => {
                let d2 = metric.squared_distance(a, b);
                (-sigma * d2).max(GAUSSIAN_EXPONENT_FLOOR).exp()
            }
        }
    }
}

impl std::fmt::Display for BaseKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BaseKernel::Linear => write!(f, "linear"),
            BaseKernel::Gaussian { sigma } => write!(f, "gaussian(sigma={sigma})"),
            BaseKernel::Polynomial { degree } => write!(f, "polynomial(degree={degree})"),
        }
    }
}

/// Inner product on feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    Euclidean,
    /// Diagonal weights, i.e. the quadrature rule of a grid.
    Quadrature(Arc<Vec<f64>>),
}

impl Metric {
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Metric::Quadrature(w) => func::weighted_dot(w, a, b),
        }
    }

    pub fn squared_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
            Metric::Quadrature(w) => w
                .iter()
                .zip(a.iter().zip(b))
                .map(|(w, (x, y))| w * ((x - y) * (x - y)))
                .sum(),
        }
    }
}

/// A curve-to-curve transformation applied before projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Transform {
    Center,
    Normalize,
    /// Derivative of a least-squares cubic spline fit.
    Derivative { order: usize, spline_dimension: usize },
}

impl std::fmt::Display for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Transform::Center => write!(f, "center"),
            Transform::Normalize => write!(f, "normalize"),
            Transform::Derivative {
                order,
                spline_dimension,
            } => write!(f, "d{order}(spline {spline_dimension})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalKernel {
    #[serde(default)]
    pub transforms: Vec<Transform>,
    #[serde(default)]
    pub projection: Option<BasisSpec>,
    pub base: BaseKernel,
}

impl FunctionalKernel {
    /// Base kernel on the raw curves.
    pub fn plain(base: BaseKernel) -> Self {
        FunctionalKernel {
            transforms: Vec::new(),
            projection: None,
            base,
        }
    }

    pub fn with_transform(mut self, t: Transform) -> Self {
        self.transforms.push(t);
        self
    }

    pub fn with_projection(mut self, basis: BasisSpec) -> Self {
        self.projection = Some(basis);
        self
    }

    /// Spline fit, derivative of `order`, then `base`.
    pub fn on_derivative(base: BaseKernel, order: usize, spline_dimension: usize) -> Self {
        Self::plain(base).with_transform(Transform::Derivative {
            order,
            spline_dimension,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        for t in &self.transforms {
            if let Transform::Derivative {
                order,
                spline_dimension,
            } = *t
            {
                if !(1..=2).contains(&order) {
                    return Err(Error::Config(format!(
                        "derivative order must be 1 or 2, got {order}"
                    )));
                }
                if spline_dimension < order + 4 {
                    return Err(Error::Config(format!(
                        "derivative of order {order} needs a spline dimension of at least {}, got {spline_dimension}",
                        order + 4
                    )));
                }
            }
        }
        if let Some(p) = &self.projection {
            if p.dimension == 0 {
                return Err(Error::Config("projection dimension must be at least 1".into()));
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for FunctionalKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for t in &self.transforms {
            write!(f, "{t} -> ")?;
        }
        if let Some(p) = &self.projection {
            write!(f, "{}[{}] -> ", p.family, p.dimension)?;
        }
        write!(f, "{}", self.base)
    }
}

#[derive(Debug, Clone)]
enum Stage {
    Center,
    Normalize,
    Derivative { order: usize, fitter: Box<SplineFitter> },
}

/// A [`FunctionalKernel`] bound to a grid, with every grid-dependent table
/// built once.
#[derive(Debug, Clone)]
pub struct PreparedKernel {
    spec: FunctionalKernel,
    grid: Arc<SamplingGrid>,
    stages: Vec<Stage>,
    projector: Option<Projector>,
    /// Upper Cholesky factor `R` of a non-orthonormal basis Gram, `G = R^T R`.
    factor: Option<DMatrix<f64>>,
    metric: Metric,
    tolerances: TransformTolerances,
}

impl PreparedKernel {
    pub fn new(spec: &FunctionalKernel, grid: &Arc<SamplingGrid>) -> Result<Self> {
        spec.validate()?;
        let stages = spec
            .transforms
            .iter()
            .map(|t| {
                Ok(match *t {
                    Transform::Center => Stage::Center,
                    Transform::Normalize => Stage::Normalize,
                    Transform::Derivative {
                        order,
                        spline_dimension,
                    } => Stage::Derivative {
                        order,
                        fitter: Box::new(func::derivative_fitter(grid, order, spline_dimension)?),
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let projector = spec
            .projection
            .map(|b| Projector::new(b, grid))
            .transpose()?;
        let factor = match projector.as_ref().and_then(|p| p.metric()) {
            Some(g) => {
                let chol = g.clone().cholesky().ok_or_else(|| {
                    Error::Config("basis Gram matrix is not positive definite".into())
                })?;
                Some(chol.l().transpose())
            }
            None => None,
        };
        let metric = if projector.is_some() {
            Metric::Euclidean
        } else {
            Metric::Quadrature(Arc::new(grid.weights().to_vec()))
        };
        Ok(PreparedKernel {
            spec: spec.clone(),
            grid: grid.clone(),
            stages,
            projector,
            factor,
            metric,
            tolerances: TransformTolerances::default(),
        })
    }

    pub fn spec(&self) -> &FunctionalKernel {
        &self.spec
    }

    pub fn grid(&self) -> &Arc<SamplingGrid> {
        &self.grid
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    /// Applies the transform chain only.
    pub fn transform(&self, u: &SampledFunction) -> Result<SampledFunction> {
        if !func::same_grid(u.grid(), &self.grid) {
            return Err(Error::GridMismatch(format!(
                "function has {} samples, kernel grid has {}",
                u.len(),
                self.grid.len()
            )));
        }
        let mut cur = u.clone();
        for stage in &self.stages {
            cur = match stage {
                Stage::Center => func::center(&cur)?,
                Stage::Normalize => func::normalize_with(&cur, &self.tolerances)?,
                Stage::Derivative { order, fitter } => {
                    func::spline_derivative_with(fitter, &cur, *order)?
                }
            };
        }
        Ok(cur)
    }

    /// Feature vector of one curve.
    pub fn embed(&self, u: &SampledFunction) -> Result<Vec<f64>> {
        let t = self.transform(u)?;
        match &self.projector {
            None => Ok(t.into_values()),
            Some(p) => {
                let c = p.project(&t)?.coefficients;
                Ok(match &self.factor {
                    None => c,
                    Some(r) => {
                        let v = r * nalgebra::DVector::from_vec(c);
                        v.iter().copied().collect()
                    }
                })
            }
        }
    }

    /// Feature vectors of a batch; errors carry the offending index.
    pub fn embed_all(&self, xs: &[SampledFunction]) -> Result<Vec<Vec<f64>>> {
        xs.par_iter()
            .enumerate()
            .map(|(i, x)| self.embed(x).map_err(|e| e.at_index(i)))
            .collect()
    }

    pub fn eval_features(&self, a: &[f64], b: &[f64]) -> f64 {
        self.spec.base.eval(&self.metric, a, b)
    }

    pub fn eval(&self, u: &SampledFunction, v: &SampledFunction) -> Result<f64> {
        let a = self.embed(u).map_err(|e| e.at_index(0))?;
        let b = self.embed(v).map_err(|e| e.at_index(1))?;
        Ok(self.eval_features(&a, &b))
    }
}

/// `Q(u, v)` for a single pair.
pub fn kernel_eval(q: &FunctionalKernel, u: &SampledFunction, v: &SampledFunction) -> Result<f64> {
    PreparedKernel::new(q, u.grid())?.eval(u, v)
}

/// Gram matrix of `xs`. Each input is transformed and projected once.
pub fn gram_matrix(q: &FunctionalKernel, xs: &[SampledFunction]) -> Result<DMatrix<f64>> {
    let first = xs
        .first()
        .ok_or_else(|| Error::Config("gram matrix of an empty set".into()))?;
    let prepared = PreparedKernel::new(q, first.grid())?;
    let features = prepared.embed_all(xs)?;
    Ok(features_gram(&q.base, prepared.metric(), &features))
}

/// Symmetric Gram matrix of already embedded features. Only the upper
/// triangle is computed; the lower one is mirrored.
pub fn features_gram(base: &BaseKernel, metric: &Metric, features: &[Vec<f64>]) -> DMatrix<f64> {
    let n = features.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i..n)
                .map(|j| base.eval(metric, &features[i], &features[j]))
                .collect()
        })
        .collect();
    let mut g = DMatrix::zeros(n, n);
    for (i, row) in rows.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            g[(i, i + off)] = v;
            g[(i + off, i)] = v;
        }
    }
    g
}

/// `K[i][j] = k(rows[i], cols[j])`.
pub fn features_cross(
    base: &BaseKernel,
    metric: &Metric,
    rows: &[Vec<f64>],
    cols: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    rows.par_iter()
        .map(|r| cols.iter().map(|c| base.eval(metric, r, c)).collect())
        .collect()
}
