use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use fsvm::eval::{self, generate_synthetic, SyntheticSpec};
use fsvm::io::{
    self, load_dataset, load_model, read_csv_table, save_model, write_csv, write_report, DatasetDescriptor,
    ReportMeta, RunConfig,
};
use fsvm::select::{self, override_c_grid, override_dimensions, override_sigmas};
use fsvm::{Error, ErrorCategory, LabeledDataset, Result};

#[derive(Parser)]
#[command(name = "fsvm", version, about = "Support vector machines for functional data")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random choice of the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "FSVM_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Overrides {
    /// Generic CSV dataset, replacing the config's dataset.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Comma-separated C values.
    #[arg(long, value_delimiter = ',')]
    c_grid: Option<Vec<f64>>,
    /// Comma-separated Gaussian sigma values.
    #[arg(long, value_delimiter = ',')]
    sigma_grid: Option<Vec<f64>>,
    /// Projection dimensions: `lo..hi` (inclusive) or a comma-separated list.
    #[arg(long)]
    d_range: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run model selection and write the chosen model.
    Train(Overrides),
    /// Run model selection and write the full candidate table and the model.
    Select(Overrides),
    /// Run the configured evaluation protocol.
    Evaluate(Overrides),
    /// Predict labels of curves with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// Generic CSV of curves on the model's grid.
        #[arg(long)]
        data: PathBuf,
        /// The file has no label column.
        #[arg(long)]
        unlabeled: bool,
    },
    /// Write a synthetic two-class sinusoid dataset as CSV.
    Synth {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 64)]
        grid_len: usize,
        /// Standard deviation of the pointwise Gaussian noise.
        #[arg(long, default_value_t = 0.2)]
        noise: f64,
        /// Label flip probability.
        #[arg(long, default_value_t = 0.0)]
        label_noise: f64,
        /// Destination file; defaults to `synth.csv` in the output directory.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Pretty-print a model file or a report.
    Inspect { path: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("error[E_USAGE]: {}", first.trim_start_matches("error: "));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.code());
            ExitCode::from(match e.category() {
                ErrorCategory::Usage => 1,
                ErrorCategory::Data => 2,
                ErrorCategory::Convergence => 3,
            })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed.or(cfg.seed) {
        cfg.apply_seed(seed);
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("fsvm-out"));

    match cli.command {
        Command::Train(o) => run_selection(&mut cfg, &o, &out, "train"),
        Command::Select(o) => run_selection(&mut cfg, &o, &out, "select"),
        Command::Evaluate(o) => run_evaluate(&mut cfg, &o, &out),
        Command::Predict { model, data, unlabeled } => run_predict(&model, &data, unlabeled, &out, cfg.seed),
        Command::Synth {
            n,
            grid_len,
            noise,
            label_noise,
            file,
        } => {
            let spec = SyntheticSpec::sinusoids(n, grid_len, noise, label_noise);
            let data = generate_synthetic(&spec, cfg.seed.unwrap_or(0))?;
            let path = file.unwrap_or_else(|| out.join("synth.csv"));
            let mut buf = Vec::new();
            write_csv(&data, &mut buf)?;
            io::atomic_write(&path, &buf)?;
            println!("wrote {} curves to {}", data.len(), path.display());
            Ok(())
        }
        Command::Inspect { path } => inspect(&path),
    }
}

fn parse_d_range(text: &str) -> Result<Vec<usize>> {
    let bad = || Error::Config(format!("cannot parse dimension range '{text}'"));
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        Ok((lo..=hi).collect())
    } else {
        text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
    }
}

fn apply_overrides(cfg: &mut RunConfig, o: &Overrides) -> Result<()> {
    if let Some(path) = &o.data {
        cfg.dataset = Some(DatasetDescriptor::csv(path));
    }
    let grid = cfg
        .grid
        .as_mut()
        .ok_or_else(|| Error::Config("no candidate grid: pass --config with a [grid] section".into()))?;
    if let Some(cs) = &o.c_grid {
        override_c_grid(grid, cs);
    }
    if let Some(s) = &o.sigma_grid {
        override_sigmas(grid, s);
    }
    if let Some(d) = &o.d_range {
        override_dimensions(grid, &parse_d_range(d)?);
    }
    Ok(())
}

fn load(cfg: &RunConfig) -> Result<LabeledDataset> {
    let desc = cfg.dataset()?;
    load_dataset(desc).map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", desc.path.display()))),
        other => other,
    })
}

fn run_selection(cfg: &mut RunConfig, o: &Overrides, out: &Path, name: &str) -> Result<()> {
    apply_overrides(cfg, o)?;
    let (grid, grid_warnings) = cfg.checked_grid()?;
    let data = load(cfg)?;
    let start = Instant::now();
    let mut result = select::select(&grid, &data, &cfg.split, &cfg.solver.options())?;
    let wall = start.elapsed();
    result.warnings.splice(0..0, grid_warnings.iter().map(|w| w.to_string()));
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }

    let model = result.model.clone().with_seed(cfg.seed);
    let model_path = out.join("model.fsvm");
    save_model(&model, &model_path)?;

    let report = result.report();
    let mut lines = io::selection_lines(&report)?;
    if name == "train" {
        lines.truncate(1);
    }
    let chosen = result.chosen_outcome();
    let mut table = format!(
        "selected candidate {}: {}\nvalidation error {:.2}%  score {:.6}  split {}/{}\n",
        result.chosen,
        result.candidate,
        100.0 * chosen.validation_error.unwrap_or(f64::NAN),
        chosen.score.unwrap_or(f64::NAN),
        result.training_size,
        result.validation_size
    );
    if name == "select" {
        table.push_str(&render_candidates(&report.table));
    }
    write_report(out, name, &lines, &table, &ReportMeta::now(name, wall, cfg.seed))?;
    print!("{table}");
    println!("model written to {}", model_path.display());
    Ok(())
}

fn render_candidates(rows: &[select::CandidateOutcome]) -> String {
    let mut s = format!("{:>5}  {:>5}  {:>10}  {:>9}  {:>10}  kernel\n", "index", "d", "C", "error(%)", "score");
    for r in rows {
        let (err, score) = match (r.validation_error, r.score) {
            (Some(e), Some(sc)) => (format!("{:.2}", 100.0 * e), format!("{sc:.6}")),
            _ => ("failed".into(), "-".into()),
        };
        s.push_str(&format!(
            "{:>5}  {:>5}  {:>10}  {:>9}  {:>10}  {}\n",
            r.index, r.dimension, r.c, err, score, r.kernel
        ));
    }
    s
}

fn run_evaluate(cfg: &mut RunConfig, o: &Overrides, out: &Path) -> Result<()> {
    apply_overrides(cfg, o)?;
    let (grid, grid_warnings) = cfg.checked_grid()?;
    for w in &grid_warnings {
        eprintln!("warning: {w}");
    }
    let protocol = cfg.protocol()?;
    let data = load(cfg)?;
    let report = eval::evaluate(&data, &grid, &protocol, &cfg.solver.options())?;
    let lines = io::evaluation_lines(&report)?;
    let table = report.render(&format!("evaluation of {} candidates on {} curves", grid.len(), data.len()));
    write_report(out, "evaluate", &lines, &table, &ReportMeta::now("evaluate", report.wall_time, cfg.seed))?;
    print!("{table}");
    Ok(())
}

fn run_predict(model_path: &Path, data_path: &Path, unlabeled: bool, out: &Path, seed: Option<u64>) -> Result<()> {
    let start = Instant::now();
    let model = load_model(model_path)?;
    let table = read_csv_table(std::fs::File::open(data_path)?, !unlabeled)?;
    let grid = model.grid();
    let width = table.rows.first().map_or(0, Vec::len);
    if width != grid.len() {
        return Err(Error::GridMismatch(format!(
            "curves have {width} samples, the model grid has {}",
            grid.len()
        )));
    }
    if let Some(t) = &table.abscissae {
        if t.as_slice() != grid.abscissae() {
            return Err(Error::GridMismatch("curve abscissae differ from the model grid".into()));
        }
    }
    let curves = table
        .rows
        .iter()
        .zip(&table.lines)
        .map(|(r, &line)| {
            fsvm::SampledFunction::new(grid.clone(), r.clone()).map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let decisions = model.decision_values(&curves)?;
    let mut csv = String::from("index,decision,label\n");
    for (i, d) in decisions.iter().enumerate() {
        csv.push_str(&format!("{i},{d},{}\n", fsvm::Label::from_decision(*d)));
    }
    let pred_path = out.join("predictions.csv");
    io::atomic_write(&pred_path, csv.as_bytes())?;
    println!("wrote {} predictions to {}", decisions.len(), pred_path.display());

    if !unlabeled {
        let truth = table.mapped_labels(None)?;
        let mistakes = decisions
            .iter()
            .zip(&truth)
            .filter(|(d, t)| fsvm::Label::from_decision(**d) != **t)
            .count();
        let error = mistakes as f64 / truth.len().max(1) as f64;
        let line = serde_json::json!({
            "record": "prediction",
            "curves": truth.len(),
            "mistakes": mistakes,
            "error": error,
        })
        .to_string();
        let text = format!("test error: {:.2}% ({mistakes} of {})\n", 100.0 * error, truth.len());
        write_report(out, "predict", &[line], &text, &ReportMeta::now("predict", start.elapsed(), seed))?;
        print!("{text}");
    }
    Ok(())
}

fn inspect(path: &Path) -> Result<()> {
    let bytes = std::fs::read(path)?;
    if io::is_model_file(&bytes) {
        let m = io::decode_model(&bytes)?;
        println!("model format version {}", io::FORMAT_VERSION);
        println!("kernel:          {}", m.kernel());
        println!("grid:            {} points on [{}, {}]", m.grid().len(), m.grid().interval().0, m.grid().interval().1);
        println!("support vectors: {}", m.support().len());
        println!("bias:            {}", m.bias());
        let meta = m.meta();
        println!("C:               {}", meta.c);
        println!("training size:   {}", meta.training_size);
        println!("iterations:      {}", meta.iterations);
        println!("KKT violation:   {:e}", meta.kkt_violation);
        if let Some(s) = meta.seed {
            println!("seed:            {s}");
        }
        return Ok(());
    }
    let text = String::from_utf8(bytes).map_err(|_| Error::Config(format!("{} is neither a model nor a report", path.display())))?;
    for (k, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let value: serde_json::Value = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: k + 1,
            message: e.to_string(),
        })?;
        println!(
            "{}",
            serde_json::to_string_pretty(&value).map_err(|e| Error::Serialization(e.to_string()))?
        );
    }
    Ok(())
}
