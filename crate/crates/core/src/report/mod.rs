//! Comparison tables, SVG charts, PCA of token representations, and the
//! experiment manifest that drives a full comparison run.

mod manifest;
mod pca;
mod plot;

pub use manifest::{DataSource, ExperimentManifest};
pub use pca::{orient, pca_projection, symmetric_eigen, PcaProjection};
pub use plot::{plot_head_comparison, plot_label_histogram, plot_pca_scatter};

use std::fmt::Write;
use std::fs;
use std::path::{Path, PathBuf};

use crate::data::{DatasetSplits, TagId, TagSchema};
use crate::encoding::Vocabulary;
use crate::error::{Error, Result};
use crate::evalmetrics::{evaluate, markdown_table, EvalReport};
use crate::hpo::{run_study_with_progress, SearchSpace, StudyConfig, StudyResult, TrialRecord};
use crate::model::{predict_tags, EncoderConfig, HeadConfig, HeadKind};

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub variant: String,
    pub head: HeadKind,
    pub parameters: usize,
    /// Macro precision, recall, F1, then per-sample and per-token accuracy,
    /// all as fractions.
    pub metrics: [f64; 5],
}

impl ComparisonRow {
    pub fn from_report(variant: &str, head: HeadKind, parameters: usize, report: &EvalReport) -> Self {
        Self {
            variant: variant.to_string(),
            head,
            parameters,
            metrics: report.headline(),
        }
    }

    pub fn name(&self) -> String {
        format!("{}_{}", self.variant, self.head.as_str().to_uppercase())
    }

    pub fn token_accuracy(&self) -> f64 {
        self.metrics[4]
    }
}

/// One row per trained (variant, head) pair, scored on the test split.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "model,variant,head,parameters,precision_macro,recall_macro,f1_macro,accuracy_per_sample,accuracy_per_token\n",
        );
        for r in &self.rows {
            let _ = write!(out, "{},{},{},{}", r.name(), r.variant, r.head.as_str(), r.parameters);
            for v in r.metrics {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    /// Read back the output of [`ComparisonTable::to_csv`].
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        lines.next().ok_or(Error::EmptyInput)?;
        let mut rows = Vec::new();
        for (i, line) in lines {
            let bad = |column: usize, message: String| Error::Parse {
                line: i + 1,
                column,
                message,
            };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 9 {
                return Err(bad(1, format!("expected 9 fields, found {}", fields.len())));
            }
            let head = HeadKind::parse(fields[2]).ok_or_else(|| bad(3, format!("unknown head `{}`", fields[2])))?;
            let parameters = fields[3]
                .parse()
                .map_err(|_| bad(4, format!("bad parameter count `{}`", fields[3])))?;
            let mut metrics = [0.0; 5];
            for (k, m) in metrics.iter_mut().enumerate() {
                *m = fields[4 + k]
                    .parse()
                    .map_err(|_| bad(5 + k, format!("bad number `{}`", fields[4 + k])))?;
            }
            rows.push(ComparisonRow {
                variant: fields[1].to_string(),
                head,
                parameters,
                metrics,
            });
        }
        Ok(Self { rows })
    }

    pub fn to_markdown(&self) -> String {
        let rows: Vec<(String, [f64; 5])> = self.rows.iter().map(|r| (r.name(), r.metrics)).collect();
        let mut out = markdown_table(&rows);
        if let Ok(obs) = self.observations() {
            out.push('\n');
            out.push_str(&obs);
        }
        out
    }

    /// `(variant, linear, mlp)` per-token accuracies in first-appearance
    /// order. Every variant must have both heads.
    pub fn paired_token_accuracy(&self) -> Result<Vec<(String, f64, f64)>> {
        if self.rows.is_empty() {
            return Err(Error::Pairing("comparison table is empty".into()));
        }
        let mut variants: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !variants.contains(&r.variant.as_str()) {
                variants.push(&r.variant);
            }
        }
        variants
            .into_iter()
            .map(|v| {
                let find = |h: HeadKind| {
                    self.rows
                        .iter()
                        .find(|r| r.variant == v && r.head == h)
                        .map(ComparisonRow::token_accuracy)
                        .ok_or_else(|| Error::Pairing(format!("variant `{v}` has no {} row", h.as_str())))
                };
                Ok((v.to_string(), find(HeadKind::Linear)?, find(HeadKind::Mlp)?))
            })
            .collect()
    }

    /// Plain-text notes on how the MLP head compares with the linear head.
    /// Descriptive only; nothing here is a pass/fail judgement.
    pub fn observations(&self) -> Result<String> {
        let pairs = self.paired_token_accuracy()?;
        let params = |v: &str| {
            self.rows
                .iter()
                .filter(|r| r.variant == v && r.head == HeadKind::Linear)
                .map(|r| r.parameters)
                .next()
                .unwrap_or(0)
        };
        let mut out = String::from("Observations (per-token accuracy on the test split):\n\n");
        for (v, linear, mlp) in &pairs {
            let verdict = if mlp > linear {
                "MLP higher"
            } else if mlp < linear {
                "LINEAR higher"
            } else {
                "equal"
            };
            let _ = writeln!(
                out,
                "- {v} ({} parameters): MLP {mlp:.3} vs LINEAR {linear:.3}, {verdict} by {:.3}",
                params(v),
                (mlp - linear).abs()
            );
        }
        if pairs.len() > 1 {
            let largest = pairs.iter().map(|(v, ..)| params(v)).max().unwrap_or(0);
            let smaller: Vec<_> = pairs.iter().filter(|(v, ..)| params(v) < largest).collect();
            let wins = smaller.iter().filter(|(_, l, m)| m > l).count();
            let _ = writeln!(
                out,
                "\nAmong the {} variants smaller than the largest, the MLP head scored higher in {wins}.",
                smaller.len()
            );
        }
        Ok(out)
    }
}

/// Output of one (variant, head) study.
#[derive(Clone, Debug)]
pub struct ComparisonRun {
    pub variant: String,
    pub head: HeadKind,
    pub study: StudyResult,
    /// Scores of the best trial's model on the test split.
    pub report: EvalReport,
}

#[derive(Clone, Debug)]
pub struct Comparison {
    pub table: ComparisonTable,
    pub runs: Vec<ComparisonRun>,
}

impl Comparison {
    /// Write the table (`comparison.md`, `comparison.csv`), the head chart
    /// (`head_comparison.svg`) and, per run, `study.csv`, `eval.csv` and the
    /// best checkpoint under `<variant>_<head>/trial-<k>/best.ckpt`.
    /// Returns the written paths in order.
    pub fn write_artifacts(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut put = |path: PathBuf, bytes: &[u8]| -> Result<()> {
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(&path, bytes)?;
            written.push(path);
            Ok(())
        };
        put(dir.join("comparison.md"), self.table.to_markdown().as_bytes())?;
        put(dir.join("comparison.csv"), self.table.to_csv().as_bytes())?;
        put(dir.join("head_comparison.svg"), plot_head_comparison(&self.table)?.as_bytes())?;
        for run in &self.runs {
            let run_dir = dir.join(format!("{}_{}", run.variant, run.head.as_str()));
            put(run_dir.join("study.csv"), run.study.to_csv().as_bytes())?;
            put(run_dir.join("eval.csv"), run.report.to_csv().as_bytes())?;
            put(
                run_dir.join(format!("trial-{}", run.study.best_trial)).join("best.ckpt"),
                &crate::model::save_checkpoint(&run.study.best_model, None),
            )?;
        }
        Ok(written)
    }
}

/// Tune every (variant, head) pair on the train and validation splits and
/// score each winner on the test split only.
#[allow(clippy::too_many_arguments)]
pub fn run_comparison<P>(
    variants: &[EncoderConfig],
    heads: &[HeadKind],
    splits: &DatasetSplits,
    vocab: &Vocabulary,
    schema: &TagSchema,
    space: &SearchSpace,
    study: &StudyConfig,
    progress: P,
) -> Result<Comparison>
where
    P: Fn(&str, HeadKind, &TrialRecord) + Sync,
{
    let gold: Vec<&[TagId]> = splits.test.iter().map(|s| s.tags()).collect();
    let mut table = ComparisonTable::default();
    let mut runs = Vec::new();
    for enc in variants {
        for &head in heads {
            let result = run_study_with_progress(
                enc,
                &HeadConfig::of_kind(head),
                splits,
                vocab,
                schema,
                space,
                study,
                |t| progress(&enc.variant_name, head, t),
            )?;
            let pred = predict_tags(&result.best_model, &splits.test, vocab, schema)?;
            let report = evaluate(&gold, &pred, schema)?;
            table.rows.push(ComparisonRow::from_report(
                &enc.variant_name,
                head,
                result.best_model.parameter_count(),
                &report,
            ));
            runs.push(ComparisonRun {
                variant: enc.variant_name.clone(),
                head,
                study: result,
                report,
            });
        }
    }
    Ok(Comparison { table, runs })
}
