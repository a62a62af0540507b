//! Token-level confusion matrix, per-sample and per-token accuracy, and
//! macro precision, recall and F1 over every tag of the schema.

use crate::data::{TagId, TagSchema};
use crate::error::{Error, Result};

/// Square count matrix, rows are gold tags and columns predicted tags.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    n: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            counts: vec![0; n * n],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, gold: usize, pred: usize) -> u64 {
        self.counts[gold * self.n + pred]
    }

    pub fn add(&mut self, gold: usize, pred: usize) {
        self.counts[gold * self.n + pred] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i * self.n..(i + 1) * self.n].iter().sum()
    }

    pub fn column_sum(&self, j: usize) -> u64 {
        (0..self.n).map(|i| self.get(i, j)).sum()
    }

    pub fn tp(&self, i: usize) -> u64 {
        self.get(i, i)
    }

    pub fn fp(&self, i: usize) -> u64 {
        self.column_sum(i) - self.get(i, i)
    }

    pub fn fn_(&self, i: usize) -> u64 {
        self.row_sum(i) - self.get(i, i)
    }

    /// Element-wise sum, for merging shards.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Shape(format!("{}×{} vs {}×{}", self.n, self.n, other.n, other.n)));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }
}

fn check_aligned<G: AsRef<[TagId]>, P: AsRef<[TagId]>>(gold: &[G], pred: &[P]) -> Result<()> {
    if gold.len() != pred.len() {
        return Err(Error::Alignment(format!(
            "{} gold sequences vs {} predicted",
            gold.len(),
            pred.len()
        )));
    }
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        let (g, p) = (g.as_ref(), p.as_ref());
        if g.len() != p.len() {
            return Err(Error::Alignment(format!(
                "sequence {i}: {} gold tags vs {} predicted",
                g.len(),
                p.len()
            )));
        }
    }
    Ok(())
}

pub fn confusion<G: AsRef<[TagId]>, P: AsRef<[TagId]>>(
    gold: &[G],
    pred: &[P],
    schema: &TagSchema,
) -> Result<ConfusionMatrix> {
    check_aligned(gold, pred)?;
    let n = schema.tag_count();
    let mut cm = ConfusionMatrix::new(n);
    for (g, p) in gold.iter().zip(pred) {
        for (&g, &p) in g.as_ref().iter().zip(p.as_ref()) {
            if g.index() >= n || p.index() >= n {
                return Err(Error::UnknownTag(format!("tag id {}", g.0.max(p.0))));
            }
            cm.add(g.index(), p.index());
        }
    }
    Ok(cm)
}

/// Percentage of sequences whose every tag is correct.
pub fn sample_accuracy<G: AsRef<[TagId]>, P: AsRef<[TagId]>>(gold: &[G], pred: &[P]) -> Result<f64> {
    check_aligned(gold, pred)?;
    if gold.is_empty() {
        return Err(Error::EmptyEval);
    }
    let correct = gold.iter().zip(pred).filter(|(g, p)| g.as_ref() == p.as_ref()).count();
    Ok(100.0 * correct as f64 / gold.len() as f64)
}

/// Percentage of correct tags pooled over all sequences.
pub fn token_accuracy<G: AsRef<[TagId]>, P: AsRef<[TagId]>>(gold: &[G], pred: &[P]) -> Result<f64> {
    check_aligned(gold, pred)?;
    let mut total = 0usize;
    let mut correct = 0usize;
    for (g, p) in gold.iter().zip(pred) {
        total += g.as_ref().len();
        correct += g.as_ref().iter().zip(p.as_ref()).filter(|(a, b)| a == b).count();
    }
    if total == 0 {
        return Err(Error::EmptyEval);
    }
    Ok(100.0 * correct as f64 / total as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TagScore {
    pub tag: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold occurrences.
    pub support: u64,
    /// Set when the corresponding denominator was zero and the score
    /// defaulted to 0.
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f1_undefined: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MacroScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_tag: Vec<TagScore>,
}

fn ratio(num: f64, den: f64) -> (f64, bool) {
    if den == 0.0 {
        (0.0, true)
    } else {
        (num / den, false)
    }
}

/// Per-tag scores and their unweighted means over all tags of `schema`,
/// including tags that never occur.
pub fn macro_scores(cm: &ConfusionMatrix, schema: &TagSchema) -> Result<MacroScores> {
    let n = schema.tag_count();
    if cm.size() != n {
        return Err(Error::Shape(format!("confusion matrix is {0}×{0}, schema has {n} tags", cm.size())));
    }
    let mut per_tag = Vec::with_capacity(n);
    for (i, tag) in schema.tags().iter().enumerate() {
        let tp = cm.tp(i) as f64;
        let (precision, precision_undefined) = ratio(tp, tp + cm.fp(i) as f64);
        let (recall, recall_undefined) = ratio(tp, tp + cm.fn_(i) as f64);
        let (f1, f1_undefined) = ratio(2.0 * precision * recall, precision + recall);
        per_tag.push(TagScore {
            tag: tag.clone(),
            precision,
            recall,
            f1,
            support: cm.row_sum(i),
            precision_undefined,
            recall_undefined,
            f1_undefined,
        });
    }
    let mean = |f: fn(&TagScore) -> f64| per_tag.iter().map(f).sum::<f64>() / n as f64;
    Ok(MacroScores {
        precision: mean(|s| s.precision),
        recall: mean(|s| s.recall),
        f1: mean(|s| s.f1),
        per_tag,
    })
}

/// All five metrics for one (gold, prediction) pairing.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    /// Percentage.
    pub sample_accuracy: f64,
    /// Percentage.
    pub token_accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub per_tag: Vec<TagScore>,
    pub confusion: ConfusionMatrix,
    pub sample_count: usize,
    pub token_count: u64,
    /// Number of tags the macro means are taken over.
    pub label_count: usize,
}

pub fn evaluate<G: AsRef<[TagId]>, P: AsRef<[TagId]>>(
    gold: &[G],
    pred: &[P],
    schema: &TagSchema,
) -> Result<EvalReport> {
    let confusion = confusion(gold, pred, schema)?;
    let sample_accuracy = sample_accuracy(gold, pred)?;
    let token_accuracy = token_accuracy(gold, pred)?;
    let scores = macro_scores(&confusion, schema)?;
    Ok(EvalReport {
        sample_accuracy,
        token_accuracy,
        macro_precision: scores.precision,
        macro_recall: scores.recall,
        macro_f1: scores.f1,
        per_tag: scores.per_tag,
        sample_count: gold.len(),
        token_count: confusion.total(),
        label_count: schema.tag_count(),
        confusion,
    })
}

pub const TABLE_HEADER: [&str; 5] = [
    "Precision (macro)",
    "Recall (macro)",
    "F1 (macro)",
    "Accuracy (Per Sample)",
    "Accuracy (Per Token)",
];

impl EvalReport {
    /// The five headline values as fractions in table column order.
    pub fn headline(&self) -> [f64; 5] {
        [
            self.macro_precision,
            self.macro_recall,
            self.macro_f1,
            self.sample_accuracy / 100.0,
            self.token_accuracy / 100.0,
        ]
    }

    /// One row per tag followed by `macro`, `per_sample` and `per_token`
    /// summary rows. Accuracies are percentages.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,precision,recall,f1,accuracy,support,undefined\n");
        for s in &self.per_tag {
            let undefined: Vec<&str> = [
                (s.precision_undefined, "precision"),
                (s.recall_undefined, "recall"),
                (s.f1_undefined, "f1"),
            ]
            .iter()
            .filter(|(u, _)| *u)
            .map(|(_, n)| *n)
            .collect();
            out.push_str(&format!(
                "{},{},{},{},,{},{}\n",
                s.tag,
                s.precision,
                s.recall,
                s.f1,
                s.support,
                undefined.join(";")
            ));
        }
        out.push_str(&format!(
            "macro,{},{},{},,{},\n",
            self.macro_precision, self.macro_recall, self.macro_f1, self.label_count
        ));
        out.push_str(&format!("per_sample,,,,{},{},\n", self.sample_accuracy, self.sample_count));
        out.push_str(&format!("per_token,,,,{},{},\n", self.token_accuracy, self.token_count));
        out
    }

    /// A markdown table with a single row labelled `name`.
    pub fn to_markdown(&self, name: &str) -> String {
        markdown_table(&[(name.to_string(), self.headline())])
    }
}

/// Markdown table with the five headline columns, values to three decimals.
pub fn markdown_table(rows: &[(String, [f64; 5])]) -> String {
    let mut out = format!("| Model | {} |\n", TABLE_HEADER.join(" | "));
    out.push_str("|---|---:|---:|---:|---:|---:|\n");
    for (name, values) in rows {
        let cells: Vec<String> = values.iter().map(|v| format!("{v:.3}")).collect();
        out.push_str(&format!("| {name} | {} |\n", cells.join(" | ")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::default_schema;

    fn tags(schema: &TagSchema, names: &[&str]) -> Vec<TagId> {
        names.iter().map(|n| schema.tag_id(n).unwrap()).collect()
    }

    #[test]
    fn worked_examples() {
        let gold: Vec<Vec<TagId>> = (0..10).map(|_| vec![TagId(1), TagId(2)]).collect();
        let mut pred = gold.clone();
        pred[0][1] = TagId(0);
        pred[5][0] = TagId(0);
        assert_eq!(sample_accuracy(&gold, &pred).unwrap(), 80.0);

        let gold = vec![vec![TagId(1); 10]];
        let mut pred = gold.clone();
        for p in &mut pred[0][5..] {
            *p = TagId(0);
        }
        assert_eq!(token_accuracy(&gold, &pred).unwrap(), 50.0);
    }

    #[test]
    fn single_confusion() {
        let schema = default_schema();
        let cm = confusion(&[tags(&schema, &["B-CITY"])], &[tags(&schema, &["O"])], &schema).unwrap();
        let city = schema.tag_id("B-CITY").unwrap().index();
        assert_eq!(cm.get(city, 0), 1);
        assert_eq!(cm.fp(0), 1);
        assert_eq!(cm.fn_(city), 1);
        assert_eq!(cm.total(), 1);
    }

    #[test]
    fn two_tag_toy() {
        let schema = TagSchema::parse("A*\n").unwrap();
        // tags: O, B-A. Treat B-A as "A" and O as "B".
        let (a, b) = (1, 0);
        let mut cm = ConfusionMatrix::new(2);
        cm.add(a, a);
        cm.add(a, b);
        cm.add(b, b);
        cm.add(b, b);
        let s = macro_scores(&cm, &schema).unwrap();
        let (sa, sb) = (&s.per_tag[a], &s.per_tag[b]);
        assert_eq!((sa.precision, sa.recall), (1.0, 0.5));
        assert!((sa.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((sb.precision - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(sb.recall, 1.0);
        assert!((sb.f1 - 0.8).abs() < 1e-15);
        assert!((s.f1 - (2.0 / 3.0 + 0.8) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_report() {
        let schema = default_schema();
        let gold: Vec<Vec<TagId>> = vec![(0..25).map(TagId).collect()];
        let r = evaluate(&gold, &gold, &schema).unwrap();
        assert_eq!(r.headline(), [1.0; 5]);
        assert!(r.per_tag.iter().all(|s| !s.f1_undefined));
    }

    #[test]
    fn absent_tags_count_as_zero() {
        let schema = default_schema();
        let gold = vec![vec![TagId::OUTSIDE; 3]];
        let r = evaluate(&gold, &gold, &schema).unwrap();
        assert!((r.macro_f1 - 1.0 / 25.0).abs() < 1e-15);
        assert!(r.per_tag[1].precision_undefined && r.per_tag[1].recall_undefined);
    }

    #[test]
    fn errors() {
        let schema = default_schema();
        let empty: Vec<Vec<TagId>> = vec![];
        assert!(matches!(sample_accuracy(&empty, &empty), Err(Error::EmptyEval)));
        assert!(matches!(token_accuracy(&[Vec::<TagId>::new()], &[vec![]]), Err(Error::EmptyEval)));
        assert!(matches!(
            confusion(&[vec![TagId(0)]], &[vec![]], &schema),
            Err(Error::Alignment(_))
        ));
        assert!(matches!(
            confusion(&[vec![TagId(0)]], &[vec![TagId(0)], vec![]], &schema),
            Err(Error::Alignment(_))
        ));
    }

    #[test]
    fn csv_and_markdown_shapes() {
        let schema = default_schema();
        let gold = vec![tags(&schema, &["B-CITY", "O"])];
        let pred = vec![tags(&schema, &["B-CITY", "B-CITY"])];
        let r = evaluate(&gold, &pred, &schema).unwrap();
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 1 + 25 + 3);
        assert!(csv.contains("\nper_token,,,,50,2,\n"));
        let md = r.to_markdown("x");
        assert!(md.starts_with("| Model | Precision (macro) |"));
        assert!(md.contains("| x | "));
    }
}
