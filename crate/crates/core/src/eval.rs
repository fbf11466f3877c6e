//! Experiment protocols around [`select`](crate::select::select): leave-one-out
//! over the whole procedure, a fixed learning/test split, repeated random
//! splits and k-fold cross-validation. Also the synthetic sinusoid family
//! and the paired t-test used to compare two kernels run on the same splits.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::func::{Label, LabeledDataset, SampledFunction, SamplingGrid};
use crate::select::{select, CandidateGrid, CandidateOutcome, SplitParams, SplitPolicy, SplitRule};
use crate::svm::SolverOptions;

/// Variance floor of the paired t-test.
pub const T_TEST_VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Protocol {
    /// Each example in turn is the test set; selection runs on the rest.
    LeaveOneOut,
    /// The first `training` examples learn, the rest test.
    FixedSplit { training: usize },
    /// `count` seeded permutations, each split into `training` learning
    /// examples and the rest for testing.
    RepeatedSplits { count: usize, training: usize, seed: u64 },
    /// Seeded k-fold cross-validation.
    KFold { folds: usize, seed: u64 },
}

/// Outer protocol plus the inner split used by selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    #[serde(flatten)]
    pub protocol: Protocol,
    pub inner: SplitParams,
}

impl ProtocolSpec {
    /// Leave-one-out with the first `l` remaining examples training.
    pub fn leave_one_out(l: usize) -> Self {
        ProtocolSpec {
            protocol: Protocol::LeaveOneOut,
            inner: SplitParams::first(l),
        }
    }

    /// Repeated splits with a seeded random inner split of `inner_training`.
    pub fn repeated_splits(count: usize, training: usize, inner_training: usize, seed: u64) -> Self {
        ProtocolSpec {
            protocol: Protocol::RepeatedSplits { count, training, seed },
            inner: SplitParams {
                rule: SplitRule::Fixed {
                    training: inner_training,
                },
                policy: SplitPolicy::SeededShuffle,
                seed,
            },
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        match self.protocol {
            Protocol::LeaveOneOut if n < 3 => bad(format!("leave-one-out needs at least 3 examples, got {n}")),
            Protocol::FixedSplit { training } | Protocol::RepeatedSplits { training, .. }
                if training == 0 || training >= n =>
            {
                bad(format!("learning size {training} must lie in [1, {}]", n.saturating_sub(1)))
            }
            Protocol::RepeatedSplits { count: 0, .. } => bad("repeated splits need a count of at least 1".into()),
            Protocol::KFold { folds, .. } if folds < 2 || folds > n => {
                bad(format!("k-fold needs 2 <= k <= {n}, got {folds}"))
            }
            _ => Ok(()),
        }
    }

    /// Number of runs the protocol performs on `n` examples.
    pub fn run_count(&self, n: usize) -> usize {
        match self.protocol {
            Protocol::LeaveOneOut => n,
            Protocol::FixedSplit { .. } => 1,
            Protocol::RepeatedSplits { count, .. } => count,
            Protocol::KFold { folds, .. } => folds,
        }
    }
}

/// One outer run: selection on the learning part, test on the rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub test_size: usize,
    /// Misclassified test examples.
    pub mistakes: usize,
    /// `mistakes / test_size`, absent for excluded runs.
    pub error: Option<f64>,
    pub selected: Option<CandidateOutcome>,
    /// Why the run was excluded: no candidate trained.
    pub excluded: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub n: usize,
    pub mean_difference: f64,
    /// Statistic with the variance floored at [`T_TEST_VARIANCE_FLOOR`].
    pub statistic: f64,
    /// Statistic with the sample variance, absent when it is not finite.
    pub raw_statistic: Option<f64>,
    pub p_value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub protocol: ProtocolSpec,
    pub mean_error: f64,
    pub runs: Vec<RunRecord>,
    pub excluded: usize,
    #[serde(default)]
    pub comparison: Option<TTest>,
    /// Not part of the payload; written with the run metadata.
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Equality of the payload; the wall time is ignored.
impl PartialEq for EvaluationReport {
    fn eq(&self, other: &Self) -> bool {
        self.protocol == other.protocol
            && self.mean_error == other.mean_error
            && self.runs == other.runs
            && self.excluded == other.excluded
            && self.comparison == other.comparison
    }
}

impl EvaluationReport {
    /// Errors of the runs that were not excluded.
    pub fn errors(&self) -> Vec<f64> {
        self.runs.iter().filter_map(|r| r.error).collect()
    }

    /// Paired t-test against `other` over runs kept in both reports.
    pub fn compare(&self, other: &EvaluationReport) -> Result<TTest> {
        if self.runs.len() != other.runs.len() {
            return Err(Error::Config(format!(
                "cannot pair {} runs with {} runs",
                self.runs.len(),
                other.runs.len()
            )));
        }
        let (a, b): (Vec<f64>, Vec<f64>) = self
            .runs
            .iter()
            .zip(&other.runs)
            .filter_map(|(x, y)| Some((x.error?, y.error?)))
            .unzip();
        paired_t_test(&a, &b)
    }

    /// Plain-text table: one row per run, then the mean.
    pub fn render(&self, title: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{title}");
        let _ = writeln!(out, "{:>5}  {:>6}  {:>9}  selected", "run", "test", "error(%)");
        for r in &self.runs {
            let err = r.error.map_or("excluded".to_string(), |e| format!("{:.2}", 100.0 * e));
            let sel = r
                .selected
                .as_ref()
                .map_or(String::new(), |s| format!("d={} {} C={}", s.dimension, s.kernel, s.c));
            let _ = writeln!(out, "{:>5}  {:>6}  {:>9}  {sel}", r.run, r.test_size, err);
        }
        let _ = writeln!(out, "mean error: {:.2}% over {} runs ({} excluded)", 100.0 * self.mean_error, self.runs.len() - self.excluded, self.excluded);
        if let Some(t) = &self.comparison {
            let _ = writeln!(out, "paired t-test: t = {:.4}, p = {:.3e} (n = {})", t.statistic, t.p_value, t.n);
        }
        out
    }
}

/// Renders several reports as one summary table, one row per report.
pub fn render_summary(rows: &[(&str, &EvaluationReport)]) -> String {
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(6).max(6);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>9}  {:>5}", "kernel", "error(%)", "runs");
    for (name, r) in rows {
        let _ = writeln!(out, "{:<width$}  {:>9.2}  {:>5}", name, 100.0 * r.mean_error, r.runs.len() - r.excluded);
    }
    out
}

/// Independent 64-bit seed for sub-task `index` of `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng.next_u64()
}

fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
}

fn run_once(
    run: usize,
    grid: &CandidateGrid,
    learn: &LabeledDataset,
    test: &LabeledDataset,
    inner: &SplitParams,
    solver: &SolverOptions,
) -> Result<RunRecord> {
    let mut record = RunRecord {
        run,
        test_size: test.len(),
        mistakes: 0,
        error: None,
        selected: None,
        excluded: None,
    };
    let selection = match select(grid, learn, inner, solver) {
        Ok(s) => s,
        Err(e @ Error::AllCandidatesFailed { .. }) => {
            record.excluded = Some(format!("{}: {e}", e.code()));
            return Ok(record);
        }
        Err(e) => return Err(e),
    };
    let predicted = selection.model.predict_all(test.functions())?;
    record.mistakes = predicted.iter().zip(test.labels()).filter(|(p, t)| p != t).count();
    record.error = Some(record.mistakes as f64 / test.len() as f64);
    record.selected = Some(selection.chosen_outcome().clone());
    Ok(record)
}

/// Runs `protocol` on `data`. Runs execute concurrently and are reported in
/// run order.
pub fn evaluate(
    data: &LabeledDataset,
    grid: &CandidateGrid,
    protocol: &ProtocolSpec,
    solver: &SolverOptions,
) -> Result<EvaluationReport> {
    let start = Instant::now();
    let n = data.len();
    protocol.validate(n)?;
    // (learning indices, test indices, inner split) per run
    let plans: Vec<(Vec<usize>, Vec<usize>, SplitParams)> = match protocol.protocol {
        Protocol::LeaveOneOut => (0..n)
            .map(|i| {
                let learn = (0..n).filter(|&j| j != i).collect();
                (learn, vec![i], protocol.inner)
            })
            .collect(),
        Protocol::FixedSplit { training } => {
            vec![((0..training).collect(), (training..n).collect(), protocol.inner)]
        }
        Protocol::RepeatedSplits { count, training, seed } => (0..count)
            .map(|r| {
                let mut order = permutation(n, derive_seed(seed, r as u64));
                let test = order.split_off(training);
                let inner = protocol.inner.with_seed(derive_seed(protocol.inner.seed, r as u64));
                (order, test, inner)
            })
            .collect(),
        Protocol::KFold { folds, seed } => {
            let order = permutation(n, seed);
            (0..folds)
                .map(|f| {
                    let (lo, hi) = (f * n / folds, (f + 1) * n / folds);
                    let test: Vec<usize> = order[lo..hi].to_vec();
                    let learn: Vec<usize> = order[..lo].iter().chain(&order[hi..]).copied().collect();
                    let inner = protocol.inner.with_seed(derive_seed(protocol.inner.seed, f as u64));
                    (learn, test, inner)
                })
                .collect()
        }
    };

    let runs = plans
        .par_iter()
        .enumerate()
        .map(|(r, (learn, test, inner))| {
            run_once(r, grid, &data.subset(learn), &data.subset(test), inner, solver)
        })
        .collect::<Result<Vec<_>>>()?;

    let errors: Vec<f64> = runs.iter().filter_map(|r| r.error).collect();
    if errors.is_empty() {
        return Err(Error::DegenerateTraining(
            "every run was excluded because no candidate trained".into(),
        ));
    }
    let mean_error = errors.iter().sum::<f64>() / errors.len() as f64;
    Ok(EvaluationReport {
        protocol: *protocol,
        mean_error,
        excluded: runs.len() - errors.len(),
        runs,
        comparison: None,
        wall_time: start.elapsed(),
    })
}

/// Leave-one-out over the whole selection procedure. The inner split uses
/// the first `l` remaining examples in stored order.
pub fn run_leave_one_out(
    data: &LabeledDataset,
    grid: &CandidateGrid,
    inner_training: usize,
    solver: &SolverOptions,
) -> Result<EvaluationReport> {
    evaluate(data, grid, &ProtocolSpec::leave_one_out(inner_training), solver)
}

/// `count` seeded learning/test splits with `training` learning examples and
/// a seeded random inner split of `inner_training`.
pub fn run_repeated_splits(
    data: &LabeledDataset,
    grid: &CandidateGrid,
    count: usize,
    training: usize,
    inner_training: usize,
    seed: u64,
    solver: &SolverOptions,
) -> Result<EvaluationReport> {
    let spec = ProtocolSpec::repeated_splits(count, training, inner_training, seed);
    evaluate(data, grid, &spec, solver)
}

/// Two-sided paired t-test of `a` against `b`.
///
/// The variance of the differences is floored at
/// [`T_TEST_VARIANCE_FLOOR`], so identical vectors give `p = 1` and a
/// constant nonzero shift gives a vanishing `p`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::Config(format!(
            "paired samples differ in length: {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::Config(format!("paired t-test needs at least 2 pairs, got {n}")));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let nf = n as f64;
    let mean = diffs.iter().sum::<f64>() / nf;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (nf - 1.0);
    let raw = mean / (var / nf).sqrt();
    let statistic = mean / (var.max(T_TEST_VARIANCE_FLOOR) / nf).sqrt();
    let dist = StudentsT::new(0.0, 1.0, nf - 1.0)
        .map_err(|e| Error::Config(format!("t distribution: {e}")))?;
    let p_value = (2.0 * dist.cdf(-statistic.abs())).min(1.0);
    Ok(TTest {
        n,
        mean_difference: mean,
        statistic,
        raw_statistic: raw.is_finite().then_some(raw),
        p_value,
    })
}

/// The two-class sinusoid family: class `+1` curves are
/// `sin(pi * f_pos * t)`, class `-1` curves `sin(pi * f_neg * t)` on
/// `[0, 1]`, each centered by its quadrature mean so that the constant
/// coefficient carries no class information. Independent Gaussian noise is
/// added at every sample. Classes are drawn with equal probability and each
/// label is flipped with probability `label_noise`, which is then the Bayes
/// error when the clean curves are separable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    #[serde(default = "default_frequencies")]
    pub frequencies: (f64, f64),
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub label_noise: f64,
    pub n: usize,
    pub grid_len: usize,
}

fn default_frequencies() -> (f64, f64) {
    (2.0, 3.0)
}

impl SyntheticSpec {
    pub fn sinusoids(n: usize, grid_len: usize, noise: f64, label_noise: f64) -> Self {
        SyntheticSpec {
            frequencies: default_frequencies(),
            noise,
            label_noise,
            n,
            grid_len,
        }
    }

    pub fn grid(&self) -> Result<SamplingGrid> {
        SamplingGrid::uniform(0.0, 1.0, self.grid_len)
    }

    /// The noise-free curve of `label` sampled on `grid`.
    pub fn prototype(&self, label: Label, grid: &SamplingGrid) -> Vec<f64> {
        let f = match label {
            Label::Positive => self.frequencies.0,
            Label::Negative => self.frequencies.1,
        };
        let raw: Vec<f64> = grid.abscissae().iter().map(|&t| (PI * f * t).sin()).collect();
        let mean = grid.integrate(&raw) / grid.total_mass();
        raw.into_iter().map(|v| v - mean).collect()
    }

    pub fn bayes_error(&self) -> f64 {
        self.label_noise
    }
}

/// Draws a dataset from `spec`; identical seeds give identical datasets.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<LabeledDataset> {
    if spec.n == 0 {
        return Err(Error::Config("synthetic sample size must be positive".into()));
    }
    if !(spec.noise >= 0.0 && spec.noise.is_finite()) {
        return Err(Error::Config(format!("noise must be nonnegative, got {}", spec.noise)));
    }
    if !(0.0..=1.0).contains(&spec.label_noise) {
        return Err(Error::Config(format!(
            "label noise must lie in [0, 1], got {}",
            spec.label_noise
        )));
    }
    let grid = Arc::new(spec.grid()?);
    let prototypes = [
        spec.prototype(Label::Positive, &grid),
        spec.prototype(Label::Negative, &grid),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut functions = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let class = if rng.random::<bool>() { Label::Positive } else { Label::Negative };
        let proto = &prototypes[usize::from(class == Label::Negative)];
        let values = proto
            .iter()
            .map(|&v| if spec.noise > 0.0 { v + spec.noise * normal.sample(&mut rng) } else { v })
            .collect();
        functions.push(SampledFunction::new(grid.clone(), values)?);
        let flip = rng.random::<f64>() < spec.label_noise;
        labels.push(match (class, flip) {
            (l, false) => l,
            (Label::Positive, true) => Label::Negative,
            (Label::Negative, true) => Label::Positive,
        });
    }
    LabeledDataset::new(grid, functions, labels)
}
