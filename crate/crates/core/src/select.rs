//! Penalized split-sample model selection.
//!
//! The sample is split into a training part of size `l` and a validation
//! part of size `N - l`. Every candidate `a = (d, K, C)` is trained on the
//! first part and scored on the second by
//!
//! ```text
//! score(a) = validation_error(a) + lambda_d / sqrt(N - l)
//! ```
//!
//! The candidate with the smallest score wins. Exact ties go to the smaller
//! projection dimension, then the smaller `C`, then the earlier declaration.
//! The returned model is the winner trained on the training part only.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisFamily, BasisSpec};
use crate::error::{Error, ErrorCategory, Result};
use crate::func::{Label, LabeledDataset};
use crate::kernel::{features_gram, BaseKernel, FunctionalKernel, Metric, PreparedKernel, Transform};
use crate::svm::{check_gram, solve_dual, DualSolution, SolverOptions, SvmModel};

/// Largest tail term `|J_d| exp(-2 lambda_d^2)` accepted past the d-cap.
pub const SUMMABILITY_TAIL_LIMIT: f64 = 1e-6;

/// One point `(d, K, C)` of the search space. The dimension is read from the
/// kernel's projection; `0` means the kernel does not project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub kernel: FunctionalKernel,
    pub c: f64,
}

impl Candidate {
    pub fn new(kernel: FunctionalKernel, c: f64) -> Self {
        Candidate { kernel, c }
    }

    pub fn dimension(&self) -> usize {
        self.kernel.projection.map_or(0, |p| p.dimension)
    }
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d={} {} C={}", self.dimension(), self.kernel, self.c)
    }
}

/// Penalty `lambda_d` as a function of the projection dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Penalty {
    /// `0` for `d <= threshold`, `high` above.
    Step { threshold: usize, high: f64 },
    Constant { value: f64 },
    /// `(from_d, lambda)` entries: the value of the last entry with
    /// `from_d <= d` applies, `0` below the first entry.
    Table { entries: Vec<(usize, f64)> },
}

impl Default for Penalty {
    fn default() -> Self {
        Penalty::Step {
            threshold: 100,
            high: 1000.0,
        }
    }
}

impl Penalty {
    pub fn lambda(&self, d: usize) -> f64 {
        match self {
            Penalty::Step { threshold, high } => {
                if d <= *threshold {
                    0.0
                } else {
                    *high
                }
            }
            Penalty::Constant { value } => *value,
            Penalty::Table { entries } => entries
                .iter()
                .filter(|(from, _)| *from <= d)
                .max_by_key(|(from, _)| *from)
                .map_or(0.0, |(_, v)| *v),
        }
    }

    /// Dimension beyond which the schedule is constant.
    fn last_breakpoint(&self) -> usize {
        match self {
            Penalty::Step { threshold, .. } => *threshold,
            Penalty::Constant { .. } => 0,
            Penalty::Table { entries } => entries.iter().map(|(d, _)| *d).max().unwrap_or(0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |v: f64| !(v >= 0.0 && v.is_finite());
        let invalid = match self {
            Penalty::Step { high, .. } => bad(*high),
            Penalty::Constant { value } => bad(*value),
            Penalty::Table { entries } => entries.iter().any(|(_, v)| bad(*v)),
        };
        if invalid {
            return Err(Error::Config("penalties must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

/// The finite search space, in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateGrid {
    candidates: Vec<Candidate>,
    penalty: Penalty,
    /// Truncation of the dimension range used by the summability check.
    d_cap: Option<usize>,
}

impl CandidateGrid {
    pub fn new(candidates: Vec<Candidate>, penalty: Penalty) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::Config("candidate grid is empty".into()));
        }
        penalty.validate()?;
        for c in &candidates {
            c.kernel.validate()?;
            if !(c.c > 0.0 && c.c.is_finite()) {
                return Err(Error::Config(format!(
                    "C must be positive and finite, got {}",
                    c.c
                )));
            }
        }
        Ok(CandidateGrid {
            candidates,
            penalty,
            d_cap: None,
        })
    }

    pub fn with_d_cap(mut self, cap: Option<usize>) -> Self {
        self.d_cap = cap;
        self
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn penalty(&self) -> &Penalty {
        &self.penalty
    }

    pub fn d_cap(&self) -> Option<usize> {
        self.d_cap
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Sorted distinct dimensions.
    pub fn dimensions(&self) -> Vec<usize> {
        let mut ds: Vec<usize> = self.candidates.iter().map(Candidate::dimension).collect();
        ds.sort_unstable();
        ds.dedup();
        ds
    }

    /// Distinct kernels of dimension `d`, i.e. `J_d`.
    pub fn kernels_at(&self, d: usize) -> Vec<&FunctionalKernel> {
        let mut out: Vec<&FunctionalKernel> = Vec::new();
        for c in self.candidates.iter().filter(|c| c.dimension() == d) {
            if !out.contains(&&c.kernel) {
                out.push(&c.kernel);
            }
        }
        out
    }
}

/// A block of the grid document: one transform chain and projection family,
/// crossed with dimensions, base kernels and `C` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelBlock {
    #[serde(default)]
    pub transforms: Vec<Transform>,
    #[serde(default)]
    pub projection: Option<BasisFamily>,
    /// Projection dimensions; ignored without a projection.
    #[serde(default)]
    pub dimensions: Vec<usize>,
    pub kernels: Vec<BaseKernel>,
    /// Overrides the grid-wide `C` values for this block.
    #[serde(default)]
    pub c_grid: Option<Vec<f64>>,
}

/// Human-written description of a [`CandidateGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub blocks: Vec<KernelBlock>,
    #[serde(default)]
    pub c_grid: Vec<f64>,
    #[serde(default)]
    pub penalty: Penalty,
    #[serde(default)]
    pub d_cap: Option<usize>,
}

impl GridSpec {
    /// Expands blocks in order: block, dimension, kernel, `C`.
    pub fn expand(&self) -> Result<CandidateGrid> {
        let mut out = Vec::new();
        for (b, block) in self.blocks.iter().enumerate() {
            let cs = block.c_grid.as_ref().unwrap_or(&self.c_grid);
            if cs.is_empty() {
                return Err(Error::Config(format!("block {b} has no C values")));
            }
            if block.kernels.is_empty() {
                return Err(Error::Config(format!("block {b} has no kernels")));
            }
            let specs: Vec<Option<BasisSpec>> = match block.projection {
                None => vec![None],
                Some(family) => {
                    if block.dimensions.is_empty() {
                        return Err(Error::Config(format!(
                            "block {b} projects but lists no dimensions"
                        )));
                    }
                    block
                        .dimensions
                        .iter()
                        .map(|&d| Some(BasisSpec::new(family, d)))
                        .collect()
                }
            };
            for spec in &specs {
                for base in &block.kernels {
                    let kernel = FunctionalKernel {
                        transforms: block.transforms.clone(),
                        projection: *spec,
                        base: *base,
                    };
                    for &c in cs {
                        out.push(Candidate::new(kernel.clone(), c));
                    }
                }
            }
        }
        Ok(CandidateGrid::new(out, self.penalty.clone())?.with_d_cap(self.d_cap))
    }
}

/// How the training size `l` depends on the sample size `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum SplitRule {
    Fixed { training: usize },
    /// `l = round(fraction * N)`.
    Fraction { fraction: f64 },
    /// `l = round(N^exponent)`.
    Power { exponent: f64 },
}

impl SplitRule {
    /// Training size for a sample of `n`, clamped to `[1, n - 1]`.
    pub fn training_size(&self, n: usize) -> Result<usize> {
        if n < 2 {
            return Err(Error::Config(format!(
                "cannot split a sample of size {n}"
            )));
        }
        let l = match *self {
            SplitRule::Fixed { training } => {
                if training == 0 || training >= n {
                    return Err(Error::Config(format!(
                        "training size {training} must lie in [1, {}]",
                        n - 1
                    )));
                }
                training
            }
            SplitRule::Fraction { fraction } => {
                if !(fraction > 0.0 && fraction < 1.0) {
                    return Err(Error::Config(format!(
                        "training fraction must lie in (0, 1), got {fraction}"
                    )));
                }
                (fraction * n as f64).round() as usize
            }
            SplitRule::Power { exponent } => {
                if !(exponent > 0.0 && exponent < 1.0) {
                    return Err(Error::Config(format!(
                        "training exponent must lie in (0, 1), got {exponent}"
                    )));
                }
                (n as f64).powf(exponent).round() as usize
            }
        };
        Ok(l.clamp(1, n - 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitPolicy {
    /// The first `l` examples in stored order train.
    #[default]
    FirstL,
    /// A seeded permutation decides.
    SeededShuffle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitParams {
    #[serde(flatten)]
    pub rule: SplitRule,
    #[serde(default)]
    pub policy: SplitPolicy,
    #[serde(default)]
    pub seed: u64,
}

impl SplitParams {
    pub fn first(training: usize) -> Self {
        SplitParams {
            rule: SplitRule::Fixed { training },
            policy: SplitPolicy::FirstL,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: LabeledDataset,
    pub validation: LabeledDataset,
    pub train_indices: Vec<usize>,
    pub validation_indices: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Splits `data` into `l` training and `N - l` validation examples.
pub fn split_sample(data: &LabeledDataset, l: usize, policy: SplitPolicy, seed: u64) -> Result<Split> {
    let n = data.len();
    if l == 0 || l >= n {
        return Err(Error::Config(format!(
            "training size {l} must lie in [1, {}] for a sample of {n}",
            n.saturating_sub(1)
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    if policy == SplitPolicy::SeededShuffle {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let validation_indices = order.split_off(l);
    let train_indices = order;
    let train = data.subset(&train_indices);
    let validation = data.subset(&validation_indices);
    let mut warnings = Vec::new();
    for (name, part) in [("training", &train), ("validation", &validation)] {
        if !part.has_both_classes() {
            warnings.push(format!("{name} part of the split contains a single class"));
        }
    }
    Ok(Split {
        train,
        validation,
        train_indices,
        validation_indices,
        warnings,
    })
}

/// Misclassification rate of `model` on `data`.
pub fn empirical_error(model: &SvmModel, data: &LabeledDataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Config("empirical error of an empty dataset".into()));
    }
    let predicted = model.predict_all(data.functions())?;
    Ok(misclassified(&predicted, data.labels()) as f64 / data.len() as f64)
}

fn misclassified(predicted: &[Label], truth: &[Label]) -> usize {
    predicted.iter().zip(truth).filter(|(p, t)| p != t).count()
}

/// One row of the selection table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateOutcome {
    pub index: usize,
    pub dimension: usize,
    pub kernel: FunctionalKernel,
    pub c: f64,
    pub penalty: f64,
    pub validation_error: Option<f64>,
    pub score: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SelectionResult {
    /// Index of the winner in the grid and in `table`.
    pub chosen: usize,
    pub candidate: Candidate,
    pub model: SvmModel,
    pub table: Vec<CandidateOutcome>,
    pub training_size: usize,
    pub validation_size: usize,
    pub warnings: Vec<String>,
}

impl SelectionResult {
    pub fn chosen_outcome(&self) -> &CandidateOutcome {
        &self.table[self.chosen]
    }

    pub fn report(&self) -> SelectionReport {
        SelectionReport {
            chosen: self.chosen,
            candidate: self.candidate.clone(),
            training_size: self.training_size,
            validation_size: self.validation_size,
            warnings: self.warnings.clone(),
            table: self.table.clone(),
        }
    }
}

/// Serializable view of a [`SelectionResult`] without the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub chosen: usize,
    pub candidate: Candidate,
    pub training_size: usize,
    pub validation_size: usize,
    pub warnings: Vec<String>,
    pub table: Vec<CandidateOutcome>,
}

/// Warnings about the hypotheses of the consistency result.
#[derive(Debug, Clone, PartialEq)]
pub enum GridWarning {
    NoUniversalKernel { dimension: usize },
    SmallC { dimension: usize, max_c: f64 },
    PenaltyNotSummable { cap: usize, tail_term: f64 },
    SplitGrowth(String),
}

impl fmt::Display for GridWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridWarning::NoUniversalKernel { dimension } => {
                write!(f, "no universal kernel (gaussian) among the kernels of dimension {dimension}")
            }
            GridWarning::SmallC { dimension, max_c } => {
                write!(f, "largest C at dimension {dimension} is {max_c}, not above 1")
            }
            GridWarning::PenaltyNotSummable { cap, tail_term } => write!(
                f,
                "penalty not summable: tail term |J_d| exp(-2 lambda_d^2) past d = {cap} is {tail_term:e}"
            ),
            GridWarning::SplitGrowth(msg) => write!(f, "split growth condition: {msg}"),
        }
    }
}

/// Checks the grid against the hypotheses of the consistency theorem. The
/// split-rate conditions are only checked when `schedule` is given.
pub fn validate_grid(grid: &CandidateGrid, schedule: Option<&SplitRule>) -> Vec<GridWarning> {
    let mut warnings = Vec::new();
    let dims = grid.dimensions();
    for &d in &dims {
        if !grid.kernels_at(d).iter().any(|k| k.base.is_gaussian()) {
            warnings.push(GridWarning::NoUniversalKernel { dimension: d });
        }
        let max_c = grid
            .candidates
            .iter()
            .filter(|c| c.dimension() == d)
            .map(|c| c.c)
            .fold(f64::NEG_INFINITY, f64::max);
        if max_c <= 1.0 {
            warnings.push(GridWarning::SmallC { dimension: d, max_c });
        }
    }

    // The grid is extended past its largest dimension with as many kernels
    // as it has there; the penalty beyond the cap decides summability.
    let d_max = *dims.last().unwrap_or(&0);
    let cap = grid
        .d_cap
        .unwrap_or_else(|| d_max.max(grid.penalty.last_breakpoint()));
    let lambda = grid.penalty.lambda(cap + 1);
    let tail_term = grid.kernels_at(d_max).len() as f64 * (-2.0 * lambda * lambda).exp();
    if tail_term > SUMMABILITY_TAIL_LIMIT {
        warnings.push(GridWarning::PenaltyNotSummable { cap, tail_term });
    }

    match schedule {
        Some(SplitRule::Fixed { .. }) => warnings.push(GridWarning::SplitGrowth(
            "a fixed training size does not grow with N".into(),
        )),
        Some(SplitRule::Fraction { .. }) => warnings.push(GridWarning::SplitGrowth(
            "l log(N - l) / (N - l) does not vanish when l is a fixed fraction of N".into(),
        )),
        Some(SplitRule::Power { .. }) | None => {}
    }
    warnings
}

/// Embedding shared by candidates that differ only in the base kernel, `C`
/// or, for nested bases, the dimension.
#[derive(Debug, Clone, PartialEq)]
struct EmbeddingKey {
    transforms: Vec<Transform>,
    projection: Option<BasisSpec>,
}

impl EmbeddingKey {
    fn of(kernel: &FunctionalKernel) -> Self {
        // nested families are embedded once at the largest dimension
        let projection = kernel.projection.map(|p| {
            if p.family.is_nested() {
                BasisSpec::new(p.family, 0)
            } else {
                p
            }
        });
        EmbeddingKey {
            transforms: kernel.transforms.clone(),
            projection,
        }
    }
}

struct Embedded {
    train: Vec<Vec<f64>>,
    validation: Vec<Vec<f64>>,
    metric: Metric,
}

fn embed_key(
    key: &EmbeddingKey,
    max_dim: usize,
    split: &Split,
) -> Result<Embedded> {
    let projection = key.projection.map(|p| {
        if p.family.is_nested() {
            BasisSpec::new(p.family, max_dim)
        } else {
            p
        }
    });
    let spec = FunctionalKernel {
        transforms: key.transforms.clone(),
        projection,
        base: BaseKernel::Linear,
    };
    let prepared = PreparedKernel::new(&spec, split.train.grid())?;
    Ok(Embedded {
        train: prepared.embed_all(split.train.functions())?,
        validation: prepared.embed_all(split.validation.functions())?,
        metric: prepared.metric().clone(),
    })
}

fn truncated(features: &[Vec<f64>], d: usize, nested: bool) -> Vec<Vec<f64>> {
    if nested {
        features.iter().map(|f| f[..d].to_vec()).collect()
    } else {
        features.to_vec()
    }
}

struct Trained {
    error: f64,
    solution: DualSolution,
}

/// Category and `"CODE: message"` of a candidate failure.
type Failure = (ErrorCategory, String);

fn failure(e: &Error) -> Failure {
    (e.category(), format!("{}: {e}", e.code()))
}

type Outcome = std::result::Result<Trained, Failure>;

/// Runs the penalized split-sample procedure.
pub fn select(
    grid: &CandidateGrid,
    data: &LabeledDataset,
    split: &SplitParams,
    solver: &SolverOptions,
) -> Result<SelectionResult> {
    let l = split.rule.training_size(data.len())?;
    let parts = split_sample(data, l, split.policy, split.seed)?;
    select_on_split(grid, &parts, solver)
}

/// [`select`] on an already split sample.
pub fn select_on_split(grid: &CandidateGrid, parts: &Split, solver: &SolverOptions) -> Result<SelectionResult> {
    let candidates = &grid.candidates;
    let n_val = parts.validation.len();
    if parts.train.is_empty() || n_val == 0 {
        return Err(Error::Config("both sides of the split must be non-empty".into()));
    }
    let sqrt_val = (n_val as f64).sqrt();

    // embedding keys and, per key, the largest dimension requested
    let mut keys: Vec<(EmbeddingKey, usize)> = Vec::new();
    let mut key_of = Vec::with_capacity(candidates.len());
    for c in candidates {
        let key = EmbeddingKey::of(&c.kernel);
        let d = c.dimension();
        match keys.iter().position(|(k, _)| *k == key) {
            Some(i) => {
                keys[i].1 = keys[i].1.max(d);
                key_of.push(i);
            }
            None => {
                keys.push((key, d));
                key_of.push(keys.len() - 1);
            }
        }
    }
    let embedded: Vec<Result<Embedded>> = keys
        .par_iter()
        .map(|(k, d)| embed_key(k, *d, parts))
        .collect();

    // Gram groups: same embedding, dimension and base kernel
    let mut groups: Vec<(usize, usize, BaseKernel, Vec<usize>)> = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        let (k, d, base) = (key_of[i], c.dimension(), c.kernel.base);
        match groups
            .iter_mut()
            .find(|g| g.0 == k && g.1 == d && g.2 == base)
        {
            Some(g) => g.3.push(i),
            None => groups.push((k, d, base, vec![i])),
        }
    }

    let group_results: Vec<Vec<(usize, Outcome)>> = groups
        .par_iter()
        .map(|(k, d, base, members)| {
            let emb = match &embedded[*k] {
                Ok(e) => e,
                Err(e) => return members.iter().map(|&i| (i, Err(failure(e)))).collect(),
            };
            let nested = keys[*k].0.projection.is_some_and(|p| p.family.is_nested());
            let train = truncated(&emb.train, *d, nested);
            let validation = truncated(&emb.validation, *d, nested);
            train_group(base, &emb.metric, &train, &validation, parts, members, candidates, solver)
        })
        .collect();

    let mut trained: Vec<Option<Outcome>> = (0..candidates.len()).map(|_| None).collect();
    for (i, r) in group_results.into_iter().flatten() {
        trained[i] = Some(r);
    }

    let mut table = Vec::with_capacity(candidates.len());
    let mut causes = Vec::new();
    let mut all_convergence = true;
    for (i, c) in candidates.iter().enumerate() {
        let d = c.dimension();
        let penalty = grid.penalty.lambda(d);
        let mut row = CandidateOutcome {
            index: i,
            dimension: d,
            kernel: c.kernel.clone(),
            c: c.c,
            penalty,
            validation_error: None,
            score: None,
            failure: None,
        };
        match trained[i].as_ref().expect("every candidate belongs to a group") {
            Ok(t) => {
                row.validation_error = Some(t.error);
                row.score = Some(t.error + penalty / sqrt_val);
            }
            Err((category, cause)) => {
                all_convergence &= *category == ErrorCategory::Convergence;
                causes.push(format!("candidate {i} ({c}): {cause}"));
                row.failure = Some(cause.clone());
            }
        }
        table.push(row);
    }

    let chosen = table
        .iter()
        .filter_map(|r| r.score.map(|s| (s, r)))
        .min_by(|(sa, a), (sb, b)| {
            sa.total_cmp(sb)
                .then(a.dimension.cmp(&b.dimension))
                .then(a.c.total_cmp(&b.c))
                .then(a.index.cmp(&b.index))
        })
        .map(|(_, r)| r.index);
    let Some(chosen) = chosen else {
        return Err(Error::AllCandidatesFailed {
            causes,
            convergence: all_convergence,
        });
    };

    let candidate = candidates[chosen].clone();
    let solution = match trained[chosen].take() {
        Some(Ok(t)) => t.solution,
        _ => unreachable!("the chosen candidate trained"),
    };
    let prepared = PreparedKernel::new(&candidate.kernel, parts.train.grid())?;
    let features = prepared.embed_all(parts.train.functions())?;
    let model = SvmModel::from_solution(prepared, &features, parts.train.labels(), &solution, candidate.c);

    let mut warnings = parts.warnings.clone();
    warnings.extend(
        table
            .iter()
            .filter_map(|r| r.failure.as_ref().map(|f| format!("candidate {} excluded: {f}", r.index))),
    );
    Ok(SelectionResult {
        chosen,
        candidate,
        model,
        table,
        training_size: parts.train.len(),
        validation_size: n_val,
        warnings,
    })
}

#[allow(clippy::too_many_arguments)]
fn train_group(
    base: &BaseKernel,
    metric: &Metric,
    train: &[Vec<f64>],
    validation: &[Vec<f64>],
    parts: &Split,
    members: &[usize],
    candidates: &[Candidate],
    solver: &SolverOptions,
) -> Vec<(usize, Outcome)> {
    let labels = parts.train.labels();
    let gram = features_gram(base, metric, train);
    if solver.check_psd {
        if let Err(e) = check_gram(&gram, solver.psd_slack) {
            return members.iter().map(|&i| (i, Err(failure(&e)))).collect();
        }
    }
    let opts = SolverOptions {
        check_psd: false,
        ..*solver
    };
    let cross: Vec<Vec<f64>> = validation
        .iter()
        .map(|z| train.iter().map(|x| base.eval(metric, x, z)).collect())
        .collect();
    members
        .iter()
        .map(|&i| {
            let c = candidates[i].c;
            let r = solve_dual(&gram, labels, c, &opts).map_err(|e| failure(&e)).map(|solution| {
                let predicted: Vec<Label> = cross
                    .iter()
                    .map(|row| {
                        let f = solution
                            .alphas
                            .iter()
                            .zip(labels)
                            .zip(row)
                            .filter(|((a, _), _)| **a > 0.0)
                            .map(|((a, y), k)| a * y.sign() * k)
                            .sum::<f64>()
                            + solution.bias;
                        Label::from_decision(f)
                    })
                    .collect();
                Trained {
                    error: misclassified(&predicted, parts.validation.labels()) as f64
                        / predicted.len() as f64,
                    solution,
                }
            });
            (i, r)
        })
        .collect()
}

/// Replaces the `sigma` of every Gaussian kernel in `spec` by each value of
/// `sigmas`, keeping other kernels.
pub fn override_sigmas(spec: &mut GridSpec, sigmas: &[f64]) {
    for block in &mut spec.blocks {
        let mut kernels = Vec::new();
        let mut replaced = false;
        for k in &block.kernels {
            if k.is_gaussian() {
                if !replaced {
                    kernels.extend(sigmas.iter().map(|&sigma| BaseKernel::Gaussian { sigma }));
                    replaced = true;
                }
            } else {
                kernels.push(*k);
            }
        }
        block.kernels = kernels;
    }
}

/// Replaces the dimension list of every projecting block.
pub fn override_dimensions(spec: &mut GridSpec, dims: &[usize]) {
    for block in spec.blocks.iter_mut().filter(|b| b.projection.is_some()) {
        block.dimensions = dims.to_vec();
    }
}

/// Replaces every `C` list.
pub fn override_c_grid(spec: &mut GridSpec, cs: &[f64]) {
    spec.c_grid = cs.to_vec();
    for block in &mut spec.blocks {
        block.c_grid = None;
    }
}
