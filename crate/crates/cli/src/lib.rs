//! The `adresparse` command line.
//!
//! [`run`] parses arguments, executes one subcommand and returns the process
//! exit code: 0 on success, 1 for usage errors, 2 when input data or a
//! configuration is invalid.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use adresparse::data::{
    default_schema, entity_histogram, generate_dataset, parse_conll, split_dataset, write_conll, AddressSample,
    TagSchema,
};
use adresparse::encoding::{build_vocab, Vocabulary};
use adresparse::evalmetrics::evaluate;
use adresparse::hpo::{run_study_with_progress, LrScale, SearchSpace, StudyConfig, TrialConfig};
use adresparse::model::{export_representations, init_model, predict_tags, variant, HeadConfig, HeadKind, ModelBundle, Representations};
use adresparse::optim::OptimizerKind;
use adresparse::report::{
    pca_projection, plot_head_comparison, plot_label_histogram, plot_pca_scatter, run_comparison, ComparisonTable,
    DataSource, ExperimentManifest,
};
use adresparse::trainer::{train, TrainConfig};
use adresparse::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "adresparse", version, about = "Turkish address parsing: data, training, tuning and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic corpus split into train/validation/test CoNLL files.
    Generate(GenerateArgs),
    /// Train one model with fixed hyperparameters.
    Train(TrainArgs),
    /// Random-search the hyperparameters of one variant and head.
    Hpo(HpoArgs),
    /// Score predictions (or a checkpoint) against gold tags.
    Evaluate(EvaluateArgs),
    /// Tune and test every variant/head pair named in a manifest.
    Compare(CompareArgs),
    /// Draw SVG charts.
    Plot(PlotArgs),
}

#[derive(Args, Debug)]
struct SchemaArg {
    /// Tag schema file (one entity type per line, `*` marks single-token types).
    #[arg(long)]
    schema: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1248)]
    size: usize,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    schema: SchemaArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum HeadArg {
    Linear,
    Mlp,
}

impl From<HeadArg> for HeadKind {
    fn from(h: HeadArg) -> Self {
        match h {
            HeadArg::Linear => HeadKind::Linear,
            HeadArg::Mlp => HeadKind::Mlp,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OptimizerArg {
    #[value(name = "adamw")]
    AdamW,
    #[value(name = "rmsprop")]
    RmsProp,
    Sgd,
}

impl From<OptimizerArg> for OptimizerKind {
    fn from(o: OptimizerArg) -> Self {
        match o {
            OptimizerArg::AdamW => OptimizerKind::AdamW,
            OptimizerArg::RmsProp => OptimizerKind::RmsProp,
            OptimizerArg::Sgd => OptimizerKind::Sgd,
        }
    }
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    validation: PathBuf,
    /// Encoder size: base, distil or small.
    #[arg(long, default_value = "base")]
    variant: String,
    #[arg(long, value_enum, default_value_t = HeadArg::Mlp)]
    head: HeadArg,
    #[arg(long, default_value_t = 10)]
    max_epochs: usize,
    #[arg(long, default_value_t = 2)]
    patience: usize,
    /// Root directory for run outputs.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    #[command(flatten)]
    schema: SchemaArg,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    #[arg(long, value_enum, default_value_t = OptimizerArg::AdamW)]
    optimizer: OptimizerArg,
    #[arg(long, default_value_t = 1e-2)]
    weight_decay: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Name of the run directory under `<out>/<variant>_<head>/`.
    #[arg(long, default_value = "manual")]
    trial_id: String,
}

#[derive(Args, Debug)]
struct HpoArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 40)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    master_seed: u64,
    /// Sample the learning rate uniformly instead of log-uniformly.
    #[arg(long)]
    linear_lr: bool,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Gold CoNLL file.
    #[arg(long)]
    gold: PathBuf,
    /// Predicted CoNLL file with the same tokens.
    #[arg(long, conflicts_with = "checkpoint")]
    pred: Option<PathBuf>,
    /// Checkpoint to predict with (needs `--vocab`).
    #[arg(long, requires = "vocab")]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Manifest of the experiment; its training and validation files are
    /// refused as gold data.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Directory for eval.csv and eval.md.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Row label in the markdown table.
    #[arg(long, default_value = "model")]
    name: String,
    #[command(flatten)]
    schema: SchemaArg,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long)]
    manifest: PathBuf,
}

#[derive(Args, Debug)]
struct PlotArgs {
    #[command(subcommand)]
    chart: Chart,
}

#[derive(Subcommand, Debug)]
enum Chart {
    /// Entity-type frequencies of a CoNLL file.
    Histogram {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        schema: SchemaArg,
    },
    /// Per-token accuracy of LINEAR vs MLP heads from a comparison CSV.
    Heads {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// PCA scatter of token representations, from a representation CSV or
    /// from a checkpoint applied to a CoNLL file.
    Pca {
        #[arg(long, conflicts_with_all = ["checkpoint", "data"])]
        representations: Option<PathBuf>,
        #[arg(long, requires_all = ["vocab", "data"])]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        vocab: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the representations as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        schema: SchemaArg,
    },
}

/// Parse `args` (including the program name) and run the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Generate(a) => generate(a),
        Command::Train(a) => train_cmd(a),
        Command::Hpo(a) => hpo(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Compare(a) => compare(a),
        Command::Plot(a) => plot(a),
    }
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        Error::Parse { line, column, message } => Error::Parse {
            line,
            column,
            message: format!("{message} (in {})", path.display()),
        },
        other => Error::Config(format!("{}: {other}", path.display())),
    }
}

fn load_schema(arg: &SchemaArg) -> Result<TagSchema> {
    match &arg.schema {
        Some(p) => fs::read_to_string(p)
            .map_err(Error::from)
            .and_then(|t| TagSchema::parse(&t))
            .map_err(|e| with_path(p, e)),
        None => Ok(default_schema()),
    }
}

fn read_conll(path: &Path, schema: &TagSchema) -> Result<Vec<AddressSample>> {
    fs::read(path)
        .map_err(Error::from)
        .and_then(|b| parse_conll(&b, schema))
        .map_err(|e| with_path(path, e))
}

fn read_vocab(path: &Path) -> Result<Vocabulary> {
    fs::read_to_string(path)
        .map_err(Error::from)
        .and_then(|t| Vocabulary::parse(&t))
        .map_err(|e| with_path(path, e))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, bytes).map_err(|e| with_path(path, e.into()))
}

fn histogram_csv(hist: &[(String, usize)]) -> String {
    let mut out = String::from("entity,count\n");
    for (name, count) in hist {
        out.push_str(&format!("{name},{count}\n"));
    }
    out
}

fn generate(a: GenerateArgs) -> Result<()> {
    let schema = load_schema(&a.schema)?;
    let data = generate_dataset(a.seed, a.size, &schema)?;
    let splits = split_dataset(&data, a.seed)?;
    for (name, part) in [("train", &splits.train), ("validation", &splits.validation), ("test", &splits.test)] {
        write(&a.out.join(format!("{name}.conll")), write_conll(part, &schema))?;
    }
    let hist = entity_histogram(&data, &schema);
    write(&a.out.join("label_histogram.csv"), histogram_csv(&hist))?;
    write(&a.out.join("label_histogram.svg"), plot_label_histogram(&hist)?)?;
    println!(
        "wrote {} samples to {}: train {}, validation {}, test {}",
        data.len(),
        a.out.display(),
        splits.train.len(),
        splits.validation.len(),
        splits.test.len()
    );
    Ok(())
}

struct Prepared {
    schema: TagSchema,
    train: Vec<AddressSample>,
    validation: Vec<AddressSample>,
    vocab: Vocabulary,
    run_dir: PathBuf,
}

fn prepare(m: &ModelArgs) -> Result<Prepared> {
    let schema = load_schema(&m.schema)?;
    let train = read_conll(&m.train, &schema)?;
    let validation = read_conll(&m.validation, &schema)?;
    let vocab = build_vocab(&train, 1)?;
    let head: HeadKind = m.head.into();
    let run_dir = m.out.join(format!("{}_{}", m.variant, head.as_str()));
    write(&run_dir.join("vocab.tsv"), vocab.to_text())?;
    Ok(Prepared {
        schema,
        train,
        validation,
        vocab,
        run_dir,
    })
}

fn encoder(name: &str) -> Result<adresparse::model::EncoderConfig> {
    variant(name).ok_or_else(|| Error::Config(format!("unknown variant `{name}` (expected base, distil or small)")))
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let m = &a.model;
    let enc = encoder(&m.variant)?;
    let p = prepare(m)?;
    let trial = TrialConfig {
        learning_rate: a.lr,
        batch_size: a.batch_size,
        optimizer: a.optimizer.into(),
        weight_decay: a.weight_decay,
        trial_seed: a.seed,
    };
    let tc = TrainConfig::new(trial).with_max_epochs(m.max_epochs).with_patience(m.patience);
    let model = init_model(&enc, &HeadConfig::of_kind(m.head.into()), &p.schema, &p.vocab, a.seed)?;
    let out = train(model, &p.train, &p.validation, &p.vocab, &p.schema, &tc)?;
    let dir = p.run_dir.join(&a.trial_id);
    write(&dir.join("train_log.csv"), out.log.to_csv())?;
    write(
        &dir.join("best.ckpt"),
        adresparse::model::save_checkpoint(&out.model, Some(&out.optimizer)),
    )?;
    for e in &out.log.epochs {
        println!(
            "epoch {:2}  train {:.4}  val {:.4}  lr {:.3e}  {:.1}s",
            e.epoch, e.train_loss, e.val_loss, e.lr, e.wall_time
        );
    }
    println!(
        "best epoch {} (val {:.4}); checkpoint {}",
        out.log.best_epoch,
        out.log.best_val_loss(),
        dir.join("best.ckpt").display()
    );
    Ok(())
}

fn hpo(a: HpoArgs) -> Result<()> {
    let m = &a.model;
    let enc = encoder(&m.variant)?;
    let p = prepare(m)?;
    let mut space = SearchSpace::default();
    if a.linear_lr {
        space.lr_scale = LrScale::Linear;
    }
    let mut study = StudyConfig::new(a.master_seed).with_trials(a.trials).with_max_epochs(m.max_epochs);
    study.patience = m.patience;
    let splits = adresparse::data::DatasetSplits {
        train: p.train,
        validation: p.validation,
        test: Vec::new(),
    };
    let result = run_study_with_progress(
        &enc,
        &HeadConfig::of_kind(m.head.into()),
        &splits,
        &p.vocab,
        &p.schema,
        &space,
        &study,
        |t| match t.best_val_loss() {
            Some(l) => eprintln!("trial {:2}  {}  best val {l:.4}", t.index, t.config),
            None => eprintln!("trial {:2}  {}  failed", t.index, t.config),
        },
    )?;
    write(&p.run_dir.join("study.csv"), result.to_csv())?;
    let ckpt = p.run_dir.join(format!("trial-{}", result.best_trial)).join("best.ckpt");
    write(&ckpt, adresparse::model::save_checkpoint(&result.best_model, None))?;
    let best = &result.trials[result.best_trial];
    println!("best trial {}: {} (val {:.4})", best.index, best.config, best.best_val_loss().unwrap_or(f64::NAN));
    println!("checkpoint {}", ckpt.display());
    Ok(())
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (fs::canonicalize(a), fs::canonicalize(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<()> {
    let schema = load_schema(&a.schema)?;
    if let Some(manifest) = &a.manifest {
        let m = ExperimentManifest::load(manifest)?;
        if m.non_test_paths().iter().any(|p| same_file(p, &a.gold)) {
            return Err(Error::Config(format!(
                "{} holds training or validation data in {}; only the test split may be scored",
                a.gold.display(),
                manifest.display()
            )));
        }
    }
    let gold = read_conll(&a.gold, &schema)?;
    let pred: Vec<Vec<adresparse::data::TagId>> = match (&a.pred, &a.checkpoint, &a.vocab) {
        (Some(p), None, _) => {
            let pred = read_conll(p, &schema)?;
            if pred.len() != gold.len() || gold.iter().zip(&pred).any(|(g, p)| g.tokens() != p.tokens()) {
                return Err(Error::Alignment(format!(
                    "{} and {} do not contain the same token sequences",
                    a.gold.display(),
                    p.display()
                )));
            }
            pred.iter().map(|s| s.tags().to_vec()).collect()
        }
        (None, Some(ck), Some(v)) => {
            let model = ModelBundle::load(ck).map_err(|e| with_path(ck, e))?;
            let vocab = read_vocab(v)?;
            model.check_vocab(&vocab)?;
            predict_tags(&model, &gold, &vocab, &schema)?
        }
        _ => return Err(Error::Config("pass either --pred or --checkpoint with --vocab".into())),
    };
    let gold_tags: Vec<&[adresparse::data::TagId]> = gold.iter().map(|s| s.tags()).collect();
    let report = evaluate(&gold_tags, &pred, &schema)?;
    let md = report.to_markdown(&a.name);
    if let Some(out) = &a.out {
        write(&out.join("eval.csv"), report.to_csv())?;
        write(&out.join("eval.md"), &md)?;
    }
    print!("{md}");
    Ok(())
}

fn compare(a: CompareArgs) -> Result<()> {
    let m = ExperimentManifest::load(&a.manifest)?;
    let schema = m.load_schema()?;
    let splits = m.load_splits(&schema)?;
    if let DataSource::Generated { .. } = m.data {
        let dir = m.output_dir.join("data");
        write(&dir.join("train.conll"), write_conll(&splits.train, &schema))?;
        write(&dir.join("validation.conll"), write_conll(&splits.validation, &schema))?;
        write(&dir.join("test.conll"), write_conll(&splits.test, &schema))?;
    }
    let vocab = build_vocab(&splits.train, 1)?;
    write(&m.output_dir.join("vocab.tsv"), vocab.to_text())?;
    let cmp = run_comparison(
        &m.variants,
        &m.heads,
        &splits,
        &vocab,
        &schema,
        &m.space,
        &m.study,
        |v, h, t| match t.best_val_loss() {
            Some(l) => eprintln!("{v}/{} trial {:2}  {}  best val {l:.4}", h.as_str(), t.index, t.config),
            None => eprintln!("{v}/{} trial {:2}  {}  failed", h.as_str(), t.index, t.config),
        },
    )?;
    cmp.write_artifacts(&m.output_dir)?;
    print!("{}", cmp.table.to_markdown());
    println!("artifacts in {}", m.output_dir.display());
    Ok(())
}

fn plot(a: PlotArgs) -> Result<()> {
    match a.chart {
        Chart::Histogram { data, out, schema } => {
            let schema = load_schema(&schema)?;
            let samples = read_conll(&data, &schema)?;
            let hist: Vec<(String, usize)> =
                entity_histogram(&samples, &schema).into_iter().filter(|(_, c)| *c > 0).collect();
            write(&out, plot_label_histogram(&hist)?)?;
        }
        Chart::Heads { table, out } => {
            let text = fs::read_to_string(&table).map_err(|e| with_path(&table, e.into()))?;
            let table_data = ComparisonTable::parse_csv(&text).map_err(|e| with_path(&table, e))?;
            write(&out, plot_head_comparison(&table_data)?)?;
        }
        Chart::Pca {
            representations,
            checkpoint,
            vocab,
            data,
            out,
            csv,
            schema,
        } => {
            let schema = load_schema(&schema)?;
            let reps = match (representations, checkpoint, vocab, data) {
                (Some(r), ..) => {
                    let text = fs::read_to_string(&r).map_err(|e| with_path(&r, e.into()))?;
                    Representations::parse_csv(&text, &schema).map_err(|e| with_path(&r, e))?
                }
                (None, Some(ck), Some(v), Some(d)) => {
                    let model = ModelBundle::load(&ck).map_err(|e| with_path(&ck, e))?;
                    let vocab = read_vocab(&v)?;
                    model.check_vocab(&vocab)?;
                    export_representations(&model, &read_conll(&d, &schema)?, &vocab, &schema)?
                }
                _ => return Err(Error::Config("pass --representations or --checkpoint, --vocab and --data".into())),
            };
            if let Some(path) = csv {
                write(&path, reps.to_csv(&schema))?;
            }
            let projection = pca_projection(&reps.values, reps.rows(), reps.d_model)?;
            write(&out, plot_pca_scatter(&projection, &reps.tags, &schema)?)?;
        }
    }
    Ok(())
}
