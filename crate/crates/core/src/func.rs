//! Sampled functions, quadrature inner products and functional transforms.
//!
//! A curve is stored as its values on a [`SamplingGrid`]. Integrals against
//! the sampling measure are approximated with trapezoid weights, so
//! `<u, v> = sum_k w_k u_k v_k` for every pair of curves sharing a grid.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spline::{SplineFitter, CUBIC};

/// Abscissae of the sampling points and their quadrature weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingGrid {
    abscissae: Vec<f64>,
    weights: Vec<f64>,
}

impl SamplingGrid {
    /// Grid with trapezoid weights: `w_k = (t_{k+1} - t_{k-1}) / 2`, the end
    /// points getting half of their single neighbouring interval.
    pub fn new(abscissae: Vec<f64>) -> Result<Self> {
        check_abscissae(&abscissae)?;
        let n = abscissae.len();
        let weights = (0..n)
            .map(|k| {
                let left = if k > 0 { abscissae[k] - abscissae[k - 1] } else { 0.0 };
                let right = if k + 1 < n { abscissae[k + 1] - abscissae[k] } else { 0.0 };
                0.5 * (left + right)
            })
            .collect();
        Ok(SamplingGrid { abscissae, weights })
    }

    /// `n` equally spaced points covering `[lo, hi]`, end points included.
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 || !(lo < hi) {
            return Err(Error::InvalidGrid(format!(
                "uniform grid needs n >= 2 and lo < hi (got n={n}, [{lo}, {hi}])"
            )));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let abscissae = (0..n)
            .map(|k| if k + 1 == n { hi } else { lo + step * k as f64 })
            .collect();
        Self::new(abscissae)
    }

    /// Grid with caller-provided quadrature weights.
    pub fn with_weights(abscissae: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        check_abscissae(&abscissae)?;
        if weights.len() != abscissae.len() {
            return Err(Error::InvalidGrid(format!(
                "{} weights for {} abscissae",
                weights.len(),
                abscissae.len()
            )));
        }
        if let Some(k) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidGrid(format!("weight {k} is not a positive number")));
        }
        Ok(SamplingGrid { abscissae, weights })
    }

    pub fn len(&self) -> usize {
        self.abscissae.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissae.is_empty()
    }

    pub fn abscissae(&self) -> &[f64] {
        &self.abscissae
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Total quadrature mass, the discrete counterpart of `mu(R)`.
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.abscissae[0], self.abscissae[self.len() - 1])
    }

    /// True when consecutive spacings agree to `rel_tol` of the mean spacing.
    pub fn is_uniform(&self, rel_tol: f64) -> bool {
        let (lo, hi) = self.interval();
        let h = (hi - lo) / (self.len() - 1) as f64;
        self.abscissae
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= rel_tol * h)
    }

    /// Quadrature of the sampled values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }
}

fn check_abscissae(abscissae: &[f64]) -> Result<()> {
    if abscissae.len() < 2 {
        return Err(Error::InvalidGrid("a grid needs at least two points".into()));
    }
    if let Some(k) = abscissae.iter().position(|t| !t.is_finite()) {
        return Err(Error::InvalidGrid(format!("abscissa {k} is not finite")));
    }
    if let Some(k) = abscissae.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(format!(
            "abscissae must be strictly increasing (positions {k} and {})",
            k + 1
        )));
    }
    Ok(())
}

/// A curve observed on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: Arc<SamplingGrid>,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: Arc<SamplingGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(position) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { position });
        }
        Ok(SampledFunction { grid, values })
    }

    /// Samples `f` at the grid abscissae.
    pub fn from_fn(grid: Arc<SamplingGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.abscissae().iter().map(|&t| f(t)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<SamplingGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.grid.clone(), values)
    }
}

pub(crate) fn same_grid(a: &SamplingGrid, b: &SamplingGrid) -> bool {
    std::ptr::eq(a, b) || a == b
}

fn check_same_grid(u: &SampledFunction, v: &SampledFunction) -> Result<()> {
    if same_grid(&u.grid, &v.grid) {
        Ok(())
    } else {
        Err(Error::GridMismatch(
            "functions are sampled on different grids".into(),
        ))
    }
}

/// Class label of a training example.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Negative => -1.0,
            Label::Positive => 1.0,
        }
    }

    /// `+1` for non-negative values, so that a zero decision maps to the
    /// positive class.
    pub fn from_decision(value: f64) -> Label {
        if value >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

impl TryFrom<i8> for Label {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Label::Positive),
            -1 => Ok(Label::Negative),
            other => Err(format!("label must be -1 or +1, got {other}")),
        }
    }
}

impl From<Label> for i8 {
    fn from(l: Label) -> i8 {
        match l {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", i8::from(*self))
    }
}

/// Labelled curves on one shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    grid: Arc<SamplingGrid>,
    functions: Vec<SampledFunction>,
    labels: Vec<Label>,
}

impl LabeledDataset {
    pub fn new(
        grid: Arc<SamplingGrid>,
        functions: Vec<SampledFunction>,
        labels: Vec<Label>,
    ) -> Result<Self> {
        if functions.len() != labels.len() {
            return Err(Error::Config(format!(
                "{} functions but {} labels",
                functions.len(),
                labels.len()
            )));
        }
        if let Some(i) = functions.iter().position(|f| !same_grid(f.grid(), &grid)) {
            return Err(Error::GridMismatch(format!(
                "function {i} is not sampled on the dataset grid"
            )));
        }
        Ok(LabeledDataset {
            grid,
            functions,
            labels,
        })
    }

    /// Builds a dataset from raw rows of values.
    pub fn from_rows(grid: Arc<SamplingGrid>, rows: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self> {
        let functions = rows
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                SampledFunction::new(grid.clone(), r).map_err(|e| match e {
                    Error::NonFinite { position } => Error::Parse {
                        line: i + 1,
                        message: format!("non-finite value in column {}", position + 1),
                    },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid, functions, labels)
    }

    pub fn grid(&self) -> &Arc<SamplingGrid> {
        &self.grid
    }

    pub fn functions(&self) -> &[SampledFunction] {
        &self.functions
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// Sub-dataset made of the given indices, in that order.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            grid: self.grid.clone(),
            functions: indices.iter().map(|&i| self.functions[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn has_both_classes(&self) -> bool {
        self.count(Label::Positive) > 0 && self.count(Label::Negative) > 0
    }
}

/// Quadrature inner product `sum_k w_k u_k v_k`.
///
/// The product `u_k * v_k` is formed before weighting so that the result is
/// exactly symmetric in its arguments.
pub fn inner_product(u: &SampledFunction, v: &SampledFunction) -> Result<f64> {
    check_same_grid(u, v)?;
    let s = weighted_dot(u.grid.weights(), &u.values, &v.values);
    if s.is_finite() {
        Ok(s)
    } else {
        Err(Error::NonFinite { position: 0 })
    }
}

pub(crate) fn weighted_dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a.iter().zip(b)).map(|(w, (x, y))| w * (x * y)).sum()
}

pub fn norm(u: &SampledFunction) -> Result<f64> {
    Ok(inner_product(u, u)?.max(0.0).sqrt())
}

/// Quadrature mean `(1 / mu(R)) * integral of u`.
pub fn mean(u: &SampledFunction) -> Result<f64> {
    let mass = u.grid.total_mass();
    if !(mass > 0.0) {
        return Err(Error::Config("grid has zero total quadrature mass".into()));
    }
    Ok(u.grid.integrate(&u.values) / mass)
}

/// Subtracts the quadrature mean.
pub fn center(u: &SampledFunction) -> Result<SampledFunction> {
    let m = mean(u)?;
    u.with_values(u.values.iter().map(|v| v - m).collect())
}

/// Numerical thresholds used by the transforms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformTolerances {
    /// `normalize` fails when `||C(u)|| <= degenerate_norm * ||u||`.
    pub degenerate_norm: f64,
}

impl Default for TransformTolerances {
    fn default() -> Self {
        TransformTolerances {
            degenerate_norm: 1e-12,
        }
    }
}

/// `C(u) / ||C(u)||`, with the default tolerances.
pub fn normalize(u: &SampledFunction) -> Result<SampledFunction> {
    normalize_with(u, &TransformTolerances::default())
}

pub fn normalize_with(u: &SampledFunction, tol: &TransformTolerances) -> Result<SampledFunction> {
    let c = center(u)?;
    let nc = norm(&c)?;
    let nu = norm(u)?;
    if !(nc > tol.degenerate_norm * nu) || nc == 0.0 {
        return Err(Error::DegenerateFunction {
            index: None,
            reason: "function is constant, its centered version has zero norm".into(),
        });
    }
    c.with_values(c.values.iter().map(|v| v / nc).collect())
}

/// Derivative of order 1 or 2 of a least-squares cubic B-spline fit with
/// `dimension` basis functions, evaluated on the original grid.
pub fn spline_derivative(u: &SampledFunction, order: usize, dimension: usize) -> Result<SampledFunction> {
    let fitter = derivative_fitter(u.grid(), order, dimension)?;
    spline_derivative_with(&fitter, u, order)
}

pub(crate) fn derivative_fitter(grid: &SamplingGrid, order: usize, dimension: usize) -> Result<SplineFitter> {
    if !(1..=2).contains(&order) {
        return Err(Error::Config(format!("derivative order must be 1 or 2, got {order}")));
    }
    SplineFitter::new(grid, dimension, CUBIC)
}

pub(crate) fn spline_derivative_with(
    fitter: &SplineFitter,
    u: &SampledFunction,
    order: usize,
) -> Result<SampledFunction> {
    let d = fitter.derivative_at(u.values(), order, u.grid().abscissae());
    u.with_values(d)
}
