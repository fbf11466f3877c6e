use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::smo::{solve_dual, DualSolution, SolverOptions};
use crate::error::{Error, Result};
use crate::func::{Label, LabeledDataset, SampledFunction, SamplingGrid};
use crate::kernel::{features_gram, FunctionalKernel, PreparedKernel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportVector {
    /// Transformed (and projected) representation of the training curve.
    pub features: Vec<f64>,
    pub label: Label,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub c: f64,
    pub seed: Option<u64>,
    pub training_size: usize,
    pub iterations: u64,
    pub kkt_violation: f64,
}

/// Trained classifier `x -> sign(sum_i a_i y_i Q(x_i, x) + b)`.
#[derive(Debug, Clone)]
pub struct SvmModel {
    prepared: PreparedKernel,
    support: Vec<SupportVector>,
    bias: f64,
    meta: TrainingMeta,
}

impl SvmModel {
    /// Trains on `data` with a fresh Gram matrix.
    pub fn train(
        kernel: &FunctionalKernel,
        data: &LabeledDataset,
        c: f64,
        options: &SolverOptions,
    ) -> Result<SvmModel> {
        let prepared = PreparedKernel::new(kernel, data.grid())?;
        let features = prepared.embed_all(data.functions())?;
        let gram = features_gram(&kernel.base, prepared.metric(), &features);
        let solution = solve_dual(&gram, data.labels(), c, options)?;
        Ok(Self::from_solution(prepared, &features, data.labels(), &solution, c))
    }

    /// Keeps the examples with a positive weight.
    pub fn from_solution(
        prepared: PreparedKernel,
        features: &[Vec<f64>],
        labels: &[Label],
        solution: &DualSolution,
        c: f64,
    ) -> SvmModel {
        let support = solution
            .alphas
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > 0.0)
            .map(|(i, &alpha)| SupportVector {
                features: features[i].clone(),
                label: labels[i],
                alpha,
            })
            .collect();
        SvmModel {
            prepared,
            support,
            bias: solution.bias,
            meta: TrainingMeta {
                c,
                seed: None,
                training_size: labels.len(),
                iterations: solution.iterations,
                kkt_violation: solution.kkt_violation,
            },
        }
    }

    /// Reassembles a model from its stored parts, rebuilding the kernel
    /// tables for `grid`.
    pub fn from_parts(
        kernel: &FunctionalKernel,
        grid: Arc<SamplingGrid>,
        support: Vec<SupportVector>,
        bias: f64,
        meta: TrainingMeta,
    ) -> Result<SvmModel> {
        let prepared = PreparedKernel::new(kernel, &grid)?;
        if let Some(i) = support.iter().position(|s| !(s.alpha > 0.0)) {
            return Err(Error::Integrity(format!(
                "support vector {i} has non-positive weight"
            )));
        }
        Ok(SvmModel {
            prepared,
            support,
            bias,
            meta,
        })
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.meta.seed = seed;
        self
    }

    pub fn kernel(&self) -> &FunctionalKernel {
        self.prepared.spec()
    }

    pub fn grid(&self) -> &Arc<SamplingGrid> {
        self.prepared.grid()
    }

    pub fn support(&self) -> &[SupportVector] {
        &self.support
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn meta(&self) -> &TrainingMeta {
        &self.meta
    }

    /// Decision value for an already embedded curve.
    pub fn decision_from_features(&self, z: &[f64]) -> f64 {
        self.support
            .iter()
            .map(|s| s.alpha * s.label.sign() * self.prepared.eval_features(&s.features, z))
            .sum::<f64>()
            + self.bias
    }

    pub fn decision_value(&self, x: &SampledFunction) -> Result<f64> {
        let z = self.prepared.embed(x)?;
        Ok(self.decision_from_features(&z))
    }

    /// Sign of the decision value; zero maps to `+1`.
    pub fn predict(&self, x: &SampledFunction) -> Result<Label> {
        Ok(Label::from_decision(self.decision_value(x)?))
    }

    pub fn decision_values(&self, xs: &[SampledFunction]) -> Result<Vec<f64>> {
        let zs = self.prepared.embed_all(xs)?;
        Ok(zs.iter().map(|z| self.decision_from_features(z)).collect())
    }

    pub fn predict_all(&self, xs: &[SampledFunction]) -> Result<Vec<Label>> {
        Ok(self
            .decision_values(xs)?
            .into_iter()
            .map(Label::from_decision)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::BaseKernel;

    fn two_point() -> (LabeledDataset, SvmModel) {
        let grid = Arc::new(SamplingGrid::with_weights(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap());
        // curves (1, 0) and (-1, 0): inner products are x_i x_j
        let ds = LabeledDataset::from_rows(
            grid,
            vec![vec![1.0, 0.0], vec![-1.0, 0.0]],
            vec![Label::Positive, Label::Negative],
        )
        .unwrap();
        let m = SvmModel::train(&FunctionalKernel::plain(BaseKernel::Linear), &ds, 10.0, &SolverOptions::default())
            .unwrap();
        (ds, m)
    }

    #[test]
    fn two_point_decision_is_identity() {
        let (ds, m) = two_point();
        let x0 = SampledFunction::new(ds.grid().clone(), vec![0.0, 0.0]).unwrap();
        assert!(m.decision_value(&x0).unwrap().abs() < 1e-12);
        assert_eq!(m.predict(&x0).unwrap(), Label::Positive);
        let x = SampledFunction::new(ds.grid().clone(), vec![0.3, 5.0]).unwrap();
        assert!((m.decision_value(&x).unwrap() - 0.3).abs() < 1e-8);
        let neg = SampledFunction::new(ds.grid().clone(), vec![-0.3, 0.0]).unwrap();
        assert_eq!(m.predict(&neg).unwrap(), Label::Negative);
    }

    #[test]
    fn free_support_vectors_sit_on_the_margin() {
        let (ds, m) = two_point();
        for (f, l) in ds.functions().iter().zip(ds.labels()) {
            let v = m.decision_value(f).unwrap();
            assert!((l.sign() * v - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn empty_support_gives_bias() {
        let grid = Arc::new(SamplingGrid::uniform(0.0, 1.0, 4).unwrap());
        let meta = TrainingMeta { c: 1.0, seed: None, training_size: 0, iterations: 0, kkt_violation: 0.0 };
        let m = SvmModel::from_parts(&FunctionalKernel::plain(BaseKernel::Linear), grid.clone(), vec![], -0.25, meta)
            .unwrap();
        let x = SampledFunction::from_fn(grid, |t| t).unwrap();
        assert_eq!(m.decision_value(&x).unwrap(), -0.25);
        assert_eq!(m.predict(&x).unwrap(), Label::Negative);
    }
}
