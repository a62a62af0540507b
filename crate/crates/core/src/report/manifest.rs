use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;

use crate::data::{default_schema, generate_dataset, parse_conll, split_dataset, DatasetSplits, TagSchema};
use crate::error::{Error, Result};
use crate::hpo::{LrScale, SearchSpace, StudyConfig};
use crate::model::{variant, EncoderConfig, HeadKind, VARIANTS};
use crate::optim::OptimizerKind;

/// Where the samples come from.
#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    /// Synthetic corpus, split with the same seed.
    Generated { seed: u64, size: usize },
    /// Pre-split CoNLL files.
    Files {
        train: PathBuf,
        validation: PathBuf,
        test: PathBuf,
    },
}

/// Everything a comparison run depends on.
///
/// ```text
/// [data]
/// seed = 42
/// size = 1248
///
/// [study]
/// variants = small, distil, base
/// heads = linear, mlp
/// n_trials = 40
/// master_seed = 7
///
/// [output]
/// dir = runs
/// ```
///
/// `[data]` may instead name `train`, `validation` and `test` CoNLL files and
/// an optional `schema` file. An optional `[search]` section overrides the
/// search space (`lr_min`, `lr_max`, `lr_scale`, `batch_sizes`, `optimizers`,
/// `weight_decays`). Relative paths are resolved against the manifest's
/// directory.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentManifest {
    pub schema: Option<PathBuf>,
    pub data: DataSource,
    pub variants: Vec<EncoderConfig>,
    pub heads: Vec<HeadKind>,
    pub space: SearchSpace,
    pub study: StudyConfig,
    pub output_dir: PathBuf,
}

const KEYS: [(&str, &[&str]); 4] = [
    ("data", &["schema", "seed", "size", "train", "validation", "test"]),
    ("study", &["variants", "heads", "n_trials", "master_seed", "max_epochs", "patience"]),
    ("search", &["lr_min", "lr_max", "lr_scale", "batch_sizes", "optimizers", "weight_decays"]),
    ("output", &["dir"]),
];

struct Sections<'a>(&'a Ini);

impl Sections<'_> {
    fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.0.section(Some(section)).and_then(|p| p.get(key))
    }

    fn parse<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        self.get(section, key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Manifest(format!("[{section}] {key}: cannot parse `{v}`")))
            })
            .transpose()
    }

    fn list<T>(&self, section: &str, key: &str, f: impl Fn(&str) -> Option<T>) -> Result<Option<Vec<T>>> {
        self.get(section, key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| f(s).ok_or_else(|| Error::Manifest(format!("[{section}] {key}: unknown value `{s}`"))))
                    .collect()
            })
            .transpose()
    }
}

impl ExperimentManifest {
    /// Parse manifest text; relative paths are joined onto `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| {
            Error::Manifest(format!("line {}, column {}: {}", e.line, e.col, e.msg))
        })?;
        for (section, props) in ini.iter() {
            let Some(name) = section else {
                if props.is_empty() {
                    continue;
                }
                return Err(Error::Manifest("keys must appear inside a [section]".into()));
            };
            let allowed = KEYS
                .iter()
                .find(|(s, _)| *s == name)
                .ok_or_else(|| Error::Manifest(format!("unknown section [{name}]")))?
                .1;
            if let Some((key, _)) = props.iter().find(|(k, _)| !allowed.contains(k)) {
                return Err(Error::Manifest(format!("[{name}] unknown key `{key}`")));
            }
        }
        let s = Sections(&ini);
        let path = |key: &str| s.get("data", key).map(|p| base_dir.join(p));

        let data = match (path("train"), path("validation"), path("test")) {
            (Some(train), Some(validation), Some(test)) => DataSource::Files {
                train,
                validation,
                test,
            },
            (None, None, None) => DataSource::Generated {
                seed: s.parse("data", "seed")?.unwrap_or(42),
                size: s.parse("data", "size")?.unwrap_or(1248),
            },
            _ => {
                return Err(Error::Manifest(
                    "[data] needs all of train, validation and test, or none".into(),
                ))
            }
        };

        let variants = s
            .list("study", "variants", variant)?
            .unwrap_or_else(|| VARIANTS.iter().map(|v| variant(v).expect("registered")).collect());
        let heads = s
            .list("study", "heads", HeadKind::parse)?
            .unwrap_or_else(|| vec![HeadKind::Linear, HeadKind::Mlp]);
        if variants.is_empty() || heads.is_empty() {
            return Err(Error::Manifest("[study] variants and heads must not be empty".into()));
        }

        let mut study = StudyConfig::new(s.parse("study", "master_seed")?.unwrap_or(0));
        if let Some(n) = s.parse("study", "n_trials")? {
            study.n_trials = n;
        }
        if let Some(n) = s.parse("study", "max_epochs")? {
            study.max_epochs = n;
        }
        if let Some(n) = s.parse("study", "patience")? {
            study.patience = n;
        }
        if study.n_trials == 0 || study.max_epochs == 0 || study.patience == 0 {
            return Err(Error::Manifest("[study] n_trials, max_epochs and patience must be >= 1".into()));
        }

        let mut space = SearchSpace::default();
        if let Some(v) = s.parse("search", "lr_min")? {
            space.lr_min = v;
        }
        if let Some(v) = s.parse("search", "lr_max")? {
            space.lr_max = v;
        }
        if let Some(v) = s.get("search", "lr_scale") {
            space.lr_scale = match v {
                "log" => LrScale::Log,
                "linear" => LrScale::Linear,
                _ => return Err(Error::Manifest(format!("[search] lr_scale: expected log or linear, got `{v}`"))),
            };
        }
        if let Some(v) = s.list("search", "batch_sizes", |x| x.parse().ok())? {
            space.batch_sizes = v;
        }
        if let Some(v) = s.list("search", "optimizers", OptimizerKind::parse)? {
            space.optimizers = v;
        }
        if let Some(v) = s.list("search", "weight_decays", |x| x.parse().ok())? {
            space.weight_decays = v;
        }
        space.validate().map_err(|e| Error::Manifest(format!("[search] {e}")))?;

        Ok(Self {
            schema: path("schema"),
            data,
            variants,
            heads,
            space,
            study,
            output_dir: base_dir.join(s.get("output", "dir").unwrap_or("runs")),
        })
    }

    /// Read and parse a manifest file, then check that every input path
    /// exists.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let manifest = Self::parse(&text, base)?;
        for p in manifest.input_paths() {
            if !p.is_file() {
                return Err(Error::Manifest(format!("{} does not exist", p.display())));
            }
        }
        Ok(manifest)
    }

    pub fn input_paths(&self) -> Vec<&Path> {
        let mut out: Vec<&Path> = self.schema.iter().map(PathBuf::as_path).collect();
        if let DataSource::Files { train, validation, test } = &self.data {
            out.extend([train.as_path(), validation.as_path(), test.as_path()]);
        }
        out
    }

    /// Paths that hold training or validation samples, which must never be
    /// scored.
    pub fn non_test_paths(&self) -> Vec<PathBuf> {
        match &self.data {
            DataSource::Files { train, validation, .. } => vec![train.clone(), validation.clone()],
            DataSource::Generated { .. } => vec![
                self.output_dir.join("data").join("train.conll"),
                self.output_dir.join("data").join("validation.conll"),
            ],
        }
    }

    pub fn load_schema(&self) -> Result<TagSchema> {
        match &self.schema {
            Some(p) => TagSchema::parse(&std::fs::read_to_string(p)?),
            None => Ok(default_schema()),
        }
    }

    pub fn load_splits(&self, schema: &TagSchema) -> Result<DatasetSplits> {
        match &self.data {
            DataSource::Generated { seed, size } => split_dataset(&generate_dataset(*seed, *size, schema)?, *seed),
            DataSource::Files { train, validation, test } => {
                let read = |p: &Path| -> Result<_> { parse_conll(&std::fs::read(p)?, schema) };
                Ok(DatasetSplits {
                    train: read(train)?,
                    validation: read(validation)?,
                    test: read(test)?,
                })
            }
        }
    }
}
