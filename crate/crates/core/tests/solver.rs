mod common;

use proptest::prelude::*;

use fsvm::basis::BasisFamily;
use fsvm::eval::{generate_synthetic, SyntheticSpec};
use fsvm::kernel::{features_gram, Metric};
use fsvm::select::{select, GridSpec, KernelBlock, Penalty, SplitParams, SplitPolicy, SplitRule};
use fsvm::svm::{dual_objective, primal_objective, solve_dual};
use fsvm::{BaseKernel, FunctionalKernel, Label, SolverOptions, SvmModel};

fn tight() -> SolverOptions {
    SolverOptions {
        tol: 1e-9,
        ..SolverOptions::default()
    }
}

fn base_kernel(gaussian: bool) -> BaseKernel {
    if gaussian {
        BaseKernel::Gaussian { sigma: 0.7 }
    } else {
        BaseKernel::Linear
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn smo_matches_exhaustive_oracle(seed in any::<u64>(), n in 2usize..8, gaussian in any::<bool>(), c in prop::sample::select(vec![0.1, 1.0, 10.0])) {
        let (pts, labels) = common::random_points(&mut common::rng(seed), n, 2);
        let gram = features_gram(&base_kernel(gaussian), &Metric::Euclidean, &pts);
        let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
        let sol = solve_dual(&gram, &labels, c, &tight()).unwrap();
        let oracle = common::brute_force_dual(&gram, &y, c);
        let got = dual_objective(&gram, &labels, &sol.alphas);
        prop_assert!((got - oracle).abs() <= 1e-6 * oracle.abs().max(1e-9), "smo {} oracle {}", got, oracle);
        prop_assert!(sol.alphas.iter().all(|a| (0.0..=c).contains(a)));
        let balance: f64 = sol.alphas.iter().zip(&y).map(|(a, y)| a * y).sum();
        prop_assert!(balance.abs() < 1e-9 * (1.0 + c));
    }

    #[test]
    fn strong_duality_holds(seed in any::<u64>(), n in 4usize..30, gaussian in any::<bool>(), c in 0.05f64..50.0) {
        let (pts, labels) = common::random_points(&mut common::rng(seed), n, 3);
        let gram = features_gram(&base_kernel(gaussian), &Metric::Euclidean, &pts);
        let sol = solve_dual(&gram, &labels, c, &tight()).unwrap();
        let dual = dual_objective(&gram, &labels, &sol.alphas);
        let primal = primal_objective(&gram, &labels, &sol.alphas, sol.bias, c);
        prop_assert!(primal >= dual - 1e-9 * (1.0 + dual.abs()));
        prop_assert!(primal - dual <= 1e-5 * (1.0 + primal.abs()), "primal {} dual {}", primal, dual);
    }

    /// The weight vector and the optimal value are unique; the bias can
    /// range over an interval of equally optimal values, so only its
    /// optimality is compared.
    #[test]
    fn training_is_permutation_equivariant(seed in any::<u64>(), n in 4usize..20, gaussian in any::<bool>()) {
        let mut rng = common::rng(seed);
        let (pts, labels) = common::random_points(&mut rng, n, 3);
        let (probe, _) = common::random_points(&mut rng, 10, 3);
        let mut order: Vec<usize> = (0..n).collect();
        order.reverse();
        order.rotate_left(seed as usize % n);
        let permuted: Vec<Vec<f64>> = order.iter().map(|&i| pts[i].clone()).collect();
        let permuted_labels: Vec<Label> = order.iter().map(|&i| labels[i]).collect();

        let base = base_kernel(gaussian);
        let kernel = FunctionalKernel::plain(base);
        let a = SvmModel::train(&kernel, &common::points_dataset(&pts, &labels), 1.0, &tight()).unwrap();
        let b = SvmModel::train(&kernel, &common::points_dataset(&permuted, &permuted_labels), 1.0, &tight()).unwrap();
        let probe = common::points_dataset(&probe, &[Label::Positive; 10]);
        let fa = a.decision_values(probe.functions()).unwrap();
        let fb = b.decision_values(probe.functions()).unwrap();
        for (x, y) in fa.iter().zip(&fb) {
            let (x, y) = (x - a.bias(), y - b.bias());
            prop_assert!((x - y).abs() <= 1e-4 * (1.0 + x.abs()), "{} vs {}", x, y);
        }

        let gram = features_gram(&base, &Metric::Euclidean, &pts);
        let sol = solve_dual(&gram, &labels, 1.0, &tight()).unwrap();
        let optimum = dual_objective(&gram, &labels, &sol.alphas);
        for bias in [a.bias(), b.bias()] {
            let primal = primal_objective(&gram, &labels, &sol.alphas, bias, 1.0);
            prop_assert!(primal - optimum <= 1e-5 * (1.0 + optimum.abs()), "bias {} gives {} above {}", bias, primal, optimum);
        }
    }
}

fn fourier_grid(penalty: Penalty, dims: std::ops::RangeInclusive<usize>) -> fsvm::select::CandidateGrid {
    GridSpec {
        blocks: vec![KernelBlock {
            transforms: vec![],
            projection: Some(BasisFamily::Fourier),
            dimensions: dims.collect(),
            kernels: vec![BaseKernel::Gaussian { sigma: 0.5 }, BaseKernel::Gaussian { sigma: 5.0 }],
            c_grid: None,
        }],
        c_grid: vec![0.1, 1.0, 10.0],
        penalty,
        d_cap: None,
    }
    .expand()
    .unwrap()
}

fn shuffled(seed: u64) -> SplitParams {
    SplitParams {
        rule: SplitRule::Fraction { fraction: 0.5 },
        policy: SplitPolicy::SeededShuffle,
        seed,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn selection_minimizes_penalized_score(seed in any::<u64>(), lambda in 0.0f64..3.0) {
        let data = generate_synthetic(&SyntheticSpec::sinusoids(40, 32, 1.0, 0.1), seed).unwrap();
        let entries = (1..=8).map(|d| (d, lambda * d as f64)).collect();
        let grid = fourier_grid(Penalty::Table { entries }, 1..=8);
        let r = select(&grid, &data, &shuffled(seed), &SolverOptions::default()).unwrap();
        let sqrt_val = (r.validation_size as f64).sqrt();
        let best = r.chosen_outcome();
        let best_score = best.score.unwrap();
        for row in &r.table {
            let (Some(err), Some(score)) = (row.validation_error, row.score) else { continue };
            prop_assert!((score - (err + row.penalty / sqrt_val)).abs() < 1e-12);
            prop_assert!(best_score <= score);
            if score == best_score {
                prop_assert!((best.dimension, best.c, best.index) <= (row.dimension, row.c, row.index));
            }
        }
    }

    #[test]
    fn heavier_penalty_never_picks_a_larger_dimension(seed in any::<u64>()) {
        let data = generate_synthetic(&SyntheticSpec::sinusoids(40, 32, 1.5, 0.1), seed).unwrap();
        let mut previous = usize::MAX;
        for k in [0.0, 0.2, 1.0, 5.0] {
            let entries = (1..=8).map(|d| (d, k * d as f64)).collect();
            let grid = fourier_grid(Penalty::Table { entries }, 1..=8);
            let r = select(&grid, &data, &shuffled(seed), &SolverOptions::default()).unwrap();
            let d = r.candidate.dimension();
            prop_assert!(d <= previous, "penalty scale {} chose d = {} after {}", k, d, previous);
            previous = d;
        }
    }

    #[test]
    fn selection_is_reproducible(seed in any::<u64>()) {
        let data = generate_synthetic(&SyntheticSpec::sinusoids(30, 32, 1.0, 0.1), seed).unwrap();
        let grid = fourier_grid(Penalty::default(), 1..=5);
        let a = select(&grid, &data, &shuffled(seed), &SolverOptions::default()).unwrap();
        let b = select(&grid, &data, &shuffled(seed), &SolverOptions::default()).unwrap();
        prop_assert_eq!(a.report(), b.report());
    }
}
