//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Criteria 6 and 7 need the Tecator and yes/no datasets. They are looked
//! up through `FSVM_TECATOR` / `FSVM_YESNO`, then `data/tecator.txt` and
//! `data/yesno.csv` under the workspace root, and skipped when absent.

mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use fsvm::basis::{select_spline_dimension, BasisSpec, CoefficientVector, Projector};
use fsvm::eval::{evaluate, generate_synthetic, Protocol, ProtocolSpec, SyntheticSpec};
use fsvm::func::{norm, spline_derivative};
use fsvm::io::{
    decode_model, encode_model, load_dataset, write_csv, DatasetDescriptor, DatasetFormat, GridDecl,
};
use fsvm::kernel::{features_gram, gram_matrix, Metric};
use fsvm::select::{
    select, CandidateGrid, GridSpec, KernelBlock, Penalty, SplitParams, SplitPolicy, SplitRule,
};
use fsvm::svm::{dual_objective, solve_dual, SolverOptions};
use fsvm::{BaseKernel, FunctionalKernel, Label, LabeledDataset, SampledFunction, SamplingGrid, SvmModel, Transform};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn budget(outcome: Outcome, elapsed: Duration, limit: Duration) -> Outcome {
    match outcome {
        Outcome::Pass(d) if elapsed > limit => Outcome::Fail(format!(
            "{d}; runtime {:.1} s exceeds {:.0} s",
            elapsed.as_secs_f64(),
            limit.as_secs_f64()
        )),
        other => other,
    }
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn locate(var: &str, default: &str) -> Option<PathBuf> {
    std::env::var_os(var)
        .map(PathBuf::from)
        .or_else(|| Some(workspace_root().join(default)))
        .filter(|p| p.is_file())
}

fn criterion_1() -> Outcome {
    let mut rng = common::rng(2024);
    let opts = SolverOptions::default();
    let (mut worst_gap, mut worst_kkt) = (0.0f64, 0.0f64);
    let mut count = 0;
    for p in 0..25 {
        let n = 2 + p % 7;
        let dim = 1 + p % 3;
        let (pts, labels) = common::random_points(&mut rng, n, dim);
        let base = if p % 2 == 0 {
            BaseKernel::Linear
        } else {
            BaseKernel::Gaussian {
                sigma: [0.1, 1.0, 10.0][p % 3],
            }
        };
        let c = [0.1, 1.0, 10.0][(p / 2) % 3];
        let gram = features_gram(&base, &Metric::Euclidean, &pts);
        let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
        let sol = match solve_dual(&gram, &labels, c, &opts) {
            Ok(s) => s,
            Err(e) => return Outcome::Fail(format!("problem {p}: {e}")),
        };
        let oracle = common::brute_force_dual(&gram, &y, c);
        let smo = dual_objective(&gram, &labels, &sol.alphas);
        worst_gap = worst_gap.max((smo - oracle).abs() / oracle.abs().max(1e-12));
        worst_kkt = worst_kkt.max(sol.kkt_violation);
        count += 1;
    }
    check(
        worst_gap <= 1e-4 && worst_kkt <= 1e-3,
        format!("{count} problems, max relative objective gap {worst_gap:.2e}, max KKT violation {worst_kkt:.2e}"),
    )
}

fn criterion_2() -> Outcome {
    let grid = common::euclidean_grid(2);
    let data = LabeledDataset::from_rows(
        grid,
        vec![vec![1.0, 0.0], vec![-1.0, 0.0]],
        vec![Label::Positive, Label::Negative],
    )
    .unwrap();
    let gram = gram_matrix(&FunctionalKernel::plain(BaseKernel::Linear), data.functions()).unwrap();
    let sol = solve_dual(&gram, data.labels(), 10.0, &SolverOptions::default()).unwrap();
    let err = (sol.alphas[0] - 0.5).abs().max((sol.alphas[1] - 0.5).abs()).max(sol.bias.abs());
    check(
        err <= 1e-8,
        format!("alpha = ({}, {}), b = {}", sol.alphas[0], sol.alphas[1], sol.bias),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = common::rng(3);
    let mut worst = [0.0f64; 5]; // parseval, bessel excess, haar round trip, idempotence, fft
    for m in [64usize, 128, 256] {
        let grid = Arc::new(SamplingGrid::uniform(0.0, 1.0, m).unwrap());
        let haar = Projector::new(BasisSpec::haar(m), &grid).unwrap();
        let fourier_full = Projector::new(BasisSpec::fourier(m - 1), &grid).unwrap();
        let fourier_small = Projector::new(BasisSpec::fourier(15), &grid).unwrap();
        let spline = Projector::new(BasisSpec::bspline(20), &grid).unwrap();
        for k in 0..100 {
            let u = if k % 2 == 0 {
                common::random_curve(&mut rng, &grid)
            } else {
                common::rough_curve(&mut rng, &grid)
            };
            let energy = norm(&u).unwrap().powi(2);

            let c = haar.project(&u).unwrap();
            let coef_energy: f64 = c.coefficients.iter().map(|x| x * x).sum();
            worst[0] = worst[0].max((coef_energy - energy).abs() / energy);
            let back = haar.reconstruct(&c).unwrap();
            let rt = back.iter().zip(u.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            worst[2] = worst[2].max(rt);

            for p in [&fourier_full, &fourier_small] {
                let c = p.project(&u).unwrap();
                let e: f64 = c.coefficients.iter().map(|x| x * x).sum();
                worst[1] = worst[1].max((e - energy) / energy);
                let direct = p.project_direct(&u).unwrap();
                let gap = c
                    .coefficients
                    .iter()
                    .zip(&direct.coefficients)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                worst[4] = worst[4].max(gap);
                worst[3] = worst[3].max(idempotence_gap(p, &c, &grid));
            }

            let c = spline.project(&u).unwrap();
            let g = spline.metric().unwrap();
            let cv = nalgebra::DVector::from_column_slice(&c.coefficients);
            let e = (cv.transpose() * g * &cv)[(0, 0)];
            worst[1] = worst[1].max((e - energy) / energy);
            worst[3] = worst[3].max(idempotence_gap(&spline, &c, &grid));
        }
    }
    check(
        worst[0] <= 1e-6 && worst[1] <= 1e-9 && worst[2] <= 1e-9 && worst[3] <= 1e-9 && worst[4] <= 1e-8,
        format!(
            "300 curves; Parseval {:.1e}, Bessel excess {:.1e}, Haar round trip {:.1e}, idempotence {:.1e}, FFT vs direct {:.1e}",
            worst[0], worst[1], worst[2], worst[3], worst[4]
        ),
    )
}

/// `|| project(reconstruct(c)) - c ||_inf`, relative to `|| c ||_inf`.
fn idempotence_gap(p: &Projector, c: &CoefficientVector, grid: &Arc<SamplingGrid>) -> f64 {
    let values = p.reconstruct(c).unwrap();
    let again = p.project(&SampledFunction::new(grid.clone(), values).unwrap()).unwrap();
    let scale = c.coefficients.iter().map(|x| x.abs()).fold(1e-300, f64::max);
    again
        .coefficients
        .iter()
        .zip(&c.coefficients)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / scale
}

fn criterion_4() -> Outcome {
    let grid = Arc::new(SamplingGrid::uniform(0.0, 1.0, 201).unwrap());
    let square = SampledFunction::from_fn(grid.clone(), |t| t * t).unwrap();
    let d2 = spline_derivative(&square, 2, 20).unwrap();
    let interior = |i: usize| (10..=190).contains(&i);
    let max_err = d2
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| interior(*i))
        .map(|(_, v)| (v - 2.0).abs())
        .fold(0.0, f64::max);

    let two_pi = 2.0 * std::f64::consts::PI;
    let wave = SampledFunction::from_fn(grid.clone(), |t| (two_pi * t).sin()).unwrap();
    let d2w = spline_derivative(&wave, 2, 40).unwrap();
    let exact = SampledFunction::from_fn(grid.clone(), |t| -two_pi * two_pi * (two_pi * t).sin()).unwrap();
    let diff = d2w.with_values(d2w.values().iter().zip(exact.values()).map(|(a, b)| a - b).collect()).unwrap();
    let rel = norm(&diff).unwrap() / norm(&exact).unwrap();
    check(
        max_err < 1e-6 && rel < 0.01,
        format!("t^2: interior max error {max_err:.2e}; sin(2 pi t): relative L2 error {rel:.2e}"),
    )
}

fn sinusoid_grid() -> CandidateGrid {
    GridSpec {
        blocks: vec![KernelBlock {
            transforms: vec![],
            projection: Some(fsvm::basis::BasisFamily::Fourier),
            dimensions: (1..=10).collect(),
            kernels: [0.1, 1.0, 10.0].iter().map(|&sigma| BaseKernel::Gaussian { sigma }).collect(),
            c_grid: None,
        }],
        c_grid: vec![0.1, 1.0, 10.0],
        penalty: Penalty::default(),
        d_cap: None,
    }
    .expand()
    .unwrap()
}

fn criterion_5() -> Outcome {
    const RHO: f64 = 0.05;
    let sizes = [50usize, 100, 200, 400];
    let seeds = 20u64;
    let grid = sinusoid_grid();
    let split = SplitParams {
        rule: SplitRule::Fraction { fraction: 0.5 },
        policy: SplitPolicy::FirstL,
        seed: 0,
    };
    let opts = SolverOptions::default();
    let mut means = Vec::new();
    for &n in &sizes {
        let mut total = 0.0;
        for s in 0..seeds {
            let spec = SyntheticSpec::sinusoids(n, 64, 0.5, RHO);
            let train = generate_synthetic(&spec, 1000 * s + n as u64).unwrap();
            let test = generate_synthetic(&SyntheticSpec { n: 1000, ..spec }, 7_000_000 + s).unwrap();
            let r = match select(&grid, &train, &split, &opts) {
                Ok(r) => r,
                Err(e) => return Outcome::Fail(format!("N = {n}, seed {s}: {e}")),
            };
            total += fsvm::select::empirical_error(&r.model, &test).unwrap();
        }
        means.push(total / seeds as f64);
    }
    let last = *means.last().unwrap();
    let monotone = means.windows(2).all(|w| w[1] <= w[0] + 0.02);
    let detail = sizes
        .iter()
        .zip(&means)
        .map(|(n, e)| format!("N={n}: {:.2}%", 100.0 * e))
        .collect::<Vec<_>>()
        .join(", ");
    check(
        (last - RHO).abs() <= 0.05 && monotone,
        format!("mean test error over {seeds} seeds: {detail}"),
    )
}

/// Gaussian widths spread around the median squared distance of the
/// embedded curves.
fn sigma_grid(kernel: &FunctionalKernel, data: &LabeledDataset) -> Vec<f64> {
    let lin = FunctionalKernel {
        base: BaseKernel::Linear,
        ..kernel.clone()
    };
    let g = gram_matrix(&lin, data.functions()).unwrap();
    let mut d2: Vec<f64> = Vec::new();
    for i in 0..g.nrows() {
        for j in 0..i {
            d2.push(g[(i, i)] + g[(j, j)] - 2.0 * g[(i, j)]);
        }
    }
    d2.sort_by(f64::total_cmp);
    let med = d2[d2.len() / 2].max(1e-300);
    [0.01, 0.1, 1.0, 10.0, 100.0].iter().map(|f| f / med).collect()
}

fn kernel_grid(kernel: FunctionalKernel, sigmas: Option<Vec<f64>>, cs: &[f64]) -> CandidateGrid {
    let kernels = match sigmas {
        Some(s) => s.into_iter().map(|sigma| BaseKernel::Gaussian { sigma }).collect(),
        None => vec![kernel.base],
    };
    GridSpec {
        blocks: vec![KernelBlock {
            transforms: kernel.transforms.clone(),
            projection: kernel.projection.map(|p| p.family),
            dimensions: kernel.projection.map(|p| vec![p.dimension]).unwrap_or_default(),
            kernels,
            c_grid: None,
        }],
        c_grid: cs.to_vec(),
        penalty: Penalty::default(),
        d_cap: None,
    }
    .expand()
    .unwrap()
}

fn criterion_6() -> Outcome {
    let Some(path) = locate("FSVM_TECATOR", "data/tecator.txt") else {
        return Outcome::Skip("Tecator data not found (set FSVM_TECATOR)".into());
    };
    let desc = DatasetDescriptor {
        path,
        format: DatasetFormat::Tecator { fat_threshold: 20.0 },
        grid: Some(GridDecl::Interval([850.0, 1050.0])),
    };
    let data = match load_dataset(&desc) {
        Ok(d) => d,
        Err(e) => return Outcome::Fail(format!("cannot load Tecator data: {e}")),
    };
    let dims: Vec<usize> = (8..=40).collect();
    let spline_dim = match select_spline_dimension(&data, &dims) {
        Ok(d) => d,
        Err(e) => return Outcome::Fail(format!("spline dimension selection failed: {e}")),
    };
    let cs = [0.1, 1.0, 10.0, 100.0, 1000.0, 10000.0];
    let d2 = FunctionalKernel::plain(BaseKernel::Gaussian { sigma: 1.0 }).with_transform(Transform::Derivative {
        order: 2,
        spline_dimension: spline_dim,
    });
    let raw = FunctionalKernel::plain(BaseKernel::Gaussian { sigma: 1.0 });
    let linear = FunctionalKernel::plain(BaseKernel::Linear);
    let protocol = ProtocolSpec::repeated_splits(50, 120, 60, 6);
    let opts = SolverOptions::default();
    let run = |k: &FunctionalKernel, gaussian: bool| {
        let sig = gaussian.then(|| sigma_grid(k, &data));
        evaluate(&data, &kernel_grid(k.clone(), sig, &cs), &protocol, &opts)
    };
    let (r_d2, r_raw, r_lin) = match (run(&d2, true), run(&raw, true), run(&linear, false)) {
        (Ok(a), Ok(b), Ok(c)) => (a, b, c),
        (a, b, c) => {
            let e = [a.err(), b.err(), c.err()].into_iter().flatten().next().unwrap();
            return Outcome::Fail(format!("evaluation failed: {e}"));
        }
    };
    let t = match r_raw.compare(&r_d2) {
        Ok(t) => t,
        Err(e) => return Outcome::Fail(format!("t-test failed: {e}")),
    };
    let (e2, er, el) = (r_d2.mean_error, r_raw.mean_error, r_lin.mean_error);
    check(
        e2 <= 0.045 && e2 < er && (0.015..=0.055).contains(&el) && t.p_value < 0.01,
        format!(
            "spline dimension {spline_dim}; Gaussian on second derivatives {:.2}%, Gaussian raw {:.2}%, linear {:.2}%, p = {:.2e}",
            100.0 * e2,
            100.0 * er,
            100.0 * el,
            t.p_value
        ),
    )
}

fn criterion_7() -> Outcome {
    let Some(path) = locate("FSVM_YESNO", "data/yesno.csv") else {
        return Outcome::Skip("yes/no data not found (set FSVM_YESNO)".into());
    };
    let data = match load_dataset(&DatasetDescriptor::csv(path)) {
        Ok(d) => d,
        Err(e) => return Outcome::Fail(format!("cannot load yes/no data: {e}")),
    };
    let inner = SplitParams {
        rule: SplitRule::Fraction { fraction: 0.5 },
        policy: SplitPolicy::FirstL,
        seed: 0,
    };
    let protocol = ProtocolSpec {
        protocol: Protocol::KFold { folds: 10, seed: 7 },
        inner,
    };
    let cs = [0.1, 1.0, 10.0, 100.0, 1000.0];
    let probe = FunctionalKernel::plain(BaseKernel::Gaussian { sigma: 1.0 }).with_projection(BasisSpec::fourier(20));
    let projected = GridSpec {
        blocks: vec![KernelBlock {
            transforms: vec![],
            projection: Some(fsvm::basis::BasisFamily::Fourier),
            dimensions: (1..=100).collect(),
            kernels: sigma_grid(&probe, &data)
                .into_iter()
                .map(|sigma| BaseKernel::Gaussian { sigma })
                .collect(),
            c_grid: None,
        }],
        c_grid: cs.to_vec(),
        penalty: Penalty::default(),
        d_cap: None,
    }
    .expand()
    .unwrap();
    let direct = kernel_grid(FunctionalKernel::plain(BaseKernel::Linear), None, &cs);
    let opts = SolverOptions::default();
    let (gp, lin) = match (
        evaluate(&data, &projected, &protocol, &opts),
        evaluate(&data, &direct, &protocol, &opts),
    ) {
        (Ok(a), Ok(b)) => (a.mean_error, b.mean_error),
        (a, b) => {
            let e = [a.err(), b.err()].into_iter().flatten().next().unwrap();
            return Outcome::Fail(format!("evaluation failed: {e}"));
        }
    };
    check(
        gp <= 0.16 && lin >= gp + 0.10,
        format!(
            "10-fold error: projected Gaussian {:.1}%, direct linear {:.1}%",
            100.0 * gp,
            100.0 * lin
        ),
    )
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let data = generate_synthetic(&SyntheticSpec::sinusoids(80, 32, 0.4, 0.05), 8).unwrap();
    let csv_path = dir.path().join("curves.csv");
    let mut buf = Vec::new();
    write_csv(&data, &mut buf).unwrap();
    std::fs::write(&csv_path, buf).unwrap();
    let config = r#"
        [dataset]
        path = "curves.csv"
        format = "csv_rows"

        [grid]
        c_grid = [0.1, 1.0, 10.0]

        [[grid.blocks]]
        projection = { family = "fourier" }
        dimensions = [1, 2, 3, 4, 5]
        kernels = [{ kind = "gaussian", sigma = 0.5 }, { kind = "gaussian", sigma = 5.0 }]

        [[grid.blocks]]
        transforms = [{ op = "center" }]
        kernels = [{ kind = "linear" }]

        [protocol]
        kind = "repeated_splits"
        count = 6
        training = 50
        seed = 0
        inner = { rule = "fixed", training = 25, policy = "seeded_shuffle" }
    "#;
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(&cfg_path, config).unwrap();
    let mut payloads = Vec::new();
    for (k, threads) in ["1", "4"].iter().enumerate() {
        let out = dir.path().join(format!("run{k}"));
        let status = Command::new(env!("CARGO_BIN_EXE_fsvm"))
            .args(["evaluate", "--config"])
            .arg(&cfg_path)
            .args(["--seed", "42", "--threads", threads, "--out"])
            .arg(&out)
            .output()
            .unwrap();
        if !status.status.success() {
            return Outcome::Fail(format!(
                "evaluate exited with {:?}: {}",
                status.status.code(),
                String::from_utf8_lossy(&status.stderr).trim()
            ));
        }
        payloads.push(std::fs::read(out.join("evaluate.jsonl")).unwrap());
    }
    check(
        payloads[0] == payloads[1] && !payloads[0].is_empty(),
        format!("two runs (1 and 4 threads) wrote {} and {} payload bytes, identical: {}", payloads[0].len(), payloads[1].len(), payloads[0] == payloads[1]),
    )
}

fn criterion_9() -> Outcome {
    let data = generate_synthetic(&SyntheticSpec::sinusoids(60, 64, 0.3, 0.0), 9).unwrap();
    let probes = generate_synthetic(&SyntheticSpec::sinusoids(100, 64, 1.0, 0.0), 90).unwrap();
    let kernels = [
        FunctionalKernel::plain(BaseKernel::Gaussian { sigma: 0.7 }),
        FunctionalKernel::plain(BaseKernel::Gaussian { sigma: 2.0 }).with_projection(BasisSpec::fourier(7)),
        FunctionalKernel::plain(BaseKernel::Polynomial { degree: 2 }).with_projection(BasisSpec::bspline(12)),
        FunctionalKernel::plain(BaseKernel::Gaussian { sigma: 1.0 })
            .with_transform(Transform::Center)
            .with_transform(Transform::Normalize)
            .with_projection(BasisSpec::haar(16)),
        FunctionalKernel::on_derivative(BaseKernel::Linear, 1, 12),
    ];
    let mut checked = 0;
    for k in &kernels {
        let model = SvmModel::train(k, &data, 1.0, &SolverOptions::default()).unwrap();
        let back = match encode_model(&model).and_then(|b| decode_model(&b)) {
            Ok(m) => m,
            Err(e) => return Outcome::Fail(format!("{k}: {e}")),
        };
        let a = model.decision_values(probes.functions()).unwrap();
        let b = back.decision_values(probes.functions()).unwrap();
        if a.iter().zip(&b).any(|(x, y)| x.to_bits() != y.to_bits()) {
            return Outcome::Fail(format!("{k}: decision values changed after reload"));
        }
        checked += a.len();
    }
    check(true, format!("{} kernels, {checked} decision values bit-identical", kernels.len()))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome, u64);
    let criteria: [Criterion; 9] = [
        ("solver correctness", criterion_1, 10),
        ("analytic fixture", criterion_2, 10),
        ("projection correctness", criterion_3, 5),
        ("transform correctness", criterion_4, 2),
        ("consistency trend", criterion_5, 600),
        ("Tecator reproduction", criterion_6, 1800),
        ("speech reproduction", criterion_7, 7200),
        ("determinism", criterion_8, 600),
        ("model persistence", criterion_9, 600),
    ];
    let mut failed = 0;
    for (i, (name, f, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = budget(f(), start.elapsed(), Duration::from_secs(*limit));
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("criterion {} ({name}): {tag}: {detail} [{secs:.2} s]", i + 1);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
