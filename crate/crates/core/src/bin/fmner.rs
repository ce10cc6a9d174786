//! Command-line front end: prepare, stats, train, predict, eval, sweep-k and
//! pr-curve.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fmner::corpus::{corpus_stats, format_stats_table, read_candidates};
use fmner::error::{Error, Result};
use fmner::eval::{format_report, sweep_tsv};
use fmner::pipeline;
use fmner::{LossKind, TrainConfig};

#[derive(Parser, Debug)]
#[command(
    name = "fmner",
    version,
    about = "Factorization-machine classifier for unknown named entities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract candidates from column files and drop dev/test candidates seen in training.
    Prepare(PrepareArgs),
    /// Print per-tag token (type) counts of candidate files.
    Stats(StatsArgs),
    /// Fit the feature space and train a one-vs-all model.
    Train(TrainArgs),
    /// Write predicted tags and per-label scores.
    Predict(ModelArgs),
    /// Write precision/recall/F1 reports and the confusion matrix.
    Eval(EvalArgs),
    /// Dev-set micro F1 for a list of factor dimensions.
    SweepK(SweepArgs),
    /// Write per-tag precision-recall curves.
    PrCurve(ModelArgs),
}

#[derive(Args, Debug)]
struct PrepareArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    dev: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    token_col: usize,
    #[arg(long, default_value_t = 3)]
    tag_col: usize,
    /// Output directory for the candidate files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    dev: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum LossArg {
    Hinge,
    Logistic,
}

#[derive(Args, Debug, Clone)]
struct TrainFlags {
    /// Factorization dimension; 0 trains a linear model.
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    #[arg(long, default_value_t = 0.0)]
    reg_w0: f64,
    #[arg(long, default_value_t = 1e-4)]
    reg_w: f64,
    #[arg(long, default_value_t = 1e-4)]
    reg_v: f64,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    init_sd: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = LossArg::Hinge)]
    loss: LossArg,
    #[arg(long)]
    no_shuffle: bool,
}

impl TrainFlags {
    fn config(&self) -> Result<TrainConfig> {
        let cfg = TrainConfig {
            k: self.k,
            learning_rate: self.lr,
            reg_w0: self.reg_w0,
            reg_w: self.reg_w,
            reg_v: self.reg_v,
            epochs: self.epochs,
            init_sd: self.init_sd,
            seed: self.seed,
            shuffle: !self.no_shuffle,
            loss: match self.loss {
                LossArg::Hinge => LossKind::Hinge,
                LossArg::Logistic => LossKind::Logistic,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Training candidates file.
    #[arg(long)]
    train: PathBuf,
    /// Read --train as sparse text with a `.labels` sidecar instead of
    /// candidates; only the model file is written.
    #[arg(long, conflicts_with = "export_sparse")]
    sparse: bool,
    #[command(flatten)]
    flags: TrainFlags,
    /// Also write the vectorized training set in sparse text format (with a
    /// `.labels` sidecar).
    #[arg(long)]
    export_sparse: Option<PathBuf>,
    /// Output directory for model.fmova and features.txt.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// One-vs-all model file.
    #[arg(long)]
    model: PathBuf,
    /// Feature-space file; defaults to features.txt beside the model.
    #[arg(long)]
    features: Option<PathBuf>,
    /// Candidates file to score.
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

impl ModelArgs {
    fn features(&self) -> PathBuf {
        self.features.clone().unwrap_or_else(|| {
            self.model
                .parent()
                .unwrap_or(Path::new("."))
                .join(pipeline::FEATURES_FILE)
        })
    }
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Also write per-tag precision-recall curves.
    #[arg(long)]
    pr_curves: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    dev: PathBuf,
    /// Comma-separated factor dimensions.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,5,10,20,40")]
    k_values: Vec<usize>,
    #[command(flatten)]
    flags: TrainFlags,
    /// Output file for `k<TAB>F1` rows.
    #[arg(long)]
    out: PathBuf,
}

fn require_inputs<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Result<()> {
    for p in paths {
        if !p.is_file() {
            return Err(Error::Config(format!(
                "input file not found: {}",
                p.display()
            )));
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prepare(a) => {
            require_inputs(
                [a.train.as_path()]
                    .into_iter()
                    .chain(a.dev.as_deref())
                    .chain(a.test.as_deref()),
            )?;
            let mut eval = Vec::new();
            if let Some(d) = &a.dev {
                eval.push(("dev", d.as_path()));
            }
            if let Some(t) = &a.test {
                eval.push(("test", t.as_path()));
            }
            let prepared = pipeline::prepare(&a.train, &eval, a.token_col, a.tag_col, &a.out)?;
            print!("{}", prepared.stats_table());
        }
        Command::Stats(a) => {
            let named: Vec<(&str, &Path)> =
                [("train", &a.train), ("dev", &a.dev), ("test", &a.test)]
                    .into_iter()
                    .filter_map(|(n, p)| p.as_deref().map(|p| (n, p)))
                    .collect();
            if named.is_empty() {
                return Err(Error::Config(
                    "give at least one of --train, --dev, --test".into(),
                ));
            }
            require_inputs(named.iter().map(|(_, p)| *p))?;
            let stats = named
                .iter()
                .map(|(n, p)| Ok((*n, corpus_stats(&read_candidates(p)?))))
                .collect::<Result<Vec<_>>>()?;
            let cols: Vec<_> = stats.iter().map(|(n, s)| (*n, s)).collect();
            print!("{}", format_stats_table(&cols));
        }
        Command::Train(a) => {
            let cfg = a.flags.config()?;
            require_inputs([a.train.as_path()])?;
            if a.sparse {
                let m = pipeline::train_sparse_to_dir(&a.train, &cfg, &a.out)?;
                println!(
                    "trained {} labels over {} columns (k = {}) -> {}",
                    m.labels().len(),
                    m.n(),
                    cfg.k,
                    a.out.display()
                );
                return Ok(());
            }
            let t = pipeline::train_to_dir(&a.train, &cfg, &a.out)?;
            if let Some(path) = &a.export_sparse {
                let data = pipeline::vectorize(&t.space, &read_candidates(&a.train)?)?;
                fmner::sparse_text::write_multiclass(path, &data)?;
            }
            println!(
                "trained {} labels over {} features (k = {}) -> {}",
                t.model.labels().len(),
                t.space.len(),
                cfg.k,
                a.out.display()
            );
        }
        Command::Predict(a) => {
            let features = a.features();
            require_inputs([a.model.as_path(), features.as_path(), a.test.as_path()])?;
            let (model, space) = pipeline::load_model(&a.model, &features)?;
            let cands = read_candidates(&a.test)?;
            let preds = pipeline::predict(&model, &space, &cands)?;
            pipeline::write_text(&a.out, &pipeline::predictions_tsv(&model, &cands, &preds))?;
        }
        Command::Eval(a) => {
            let m = &a.model;
            let features = m.features();
            require_inputs([m.model.as_path(), features.as_path(), m.test.as_path()])?;
            let (model, space) = pipeline::load_model(&m.model, &features)?;
            let cands = read_candidates(&m.test)?;
            let report = pipeline::evaluate_candidates(&model, &space, &cands)?;
            pipeline::write_report(&report, &m.out)?;
            if a.pr_curves {
                let curves = pipeline::pr_curves(&model, &space, &cands)?;
                pipeline::write_pr_curves(&curves, &m.out)?;
            }
            print!("{}", format_report(&report));
        }
        Command::SweepK(a) => {
            let cfg = a.flags.config()?;
            require_inputs([a.train.as_path(), a.dev.as_path()])?;
            let train = read_candidates(&a.train)?;
            let dev = read_candidates(&a.dev)?;
            let points = pipeline::sweep(&train, &dev, &a.k_values, &cfg)?;
            let text = sweep_tsv(&points);
            pipeline::write_text(&a.out, &text)?;
            print!("{text}");
        }
        Command::PrCurve(a) => {
            let features = a.features();
            require_inputs([a.model.as_path(), features.as_path(), a.test.as_path()])?;
            let (model, space) = pipeline::load_model(&a.model, &features)?;
            let cands = read_candidates(&a.test)?;
            let curves = pipeline::pr_curves(&model, &space, &cands)?;
            for p in pipeline::write_pr_curves(&curves, &a.out)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
