//! Naive reference implementations used to cross-check the library.

use adresparse::data::TagId;
use rand::Rng;

/// The five headline metrics computed by direct tallies over token pairs,
/// without a confusion matrix: macro precision, recall, F1 (fractions) and
/// per-sample, per-token accuracy (percentages).
pub fn brute_force_metrics(gold: &[Vec<TagId>], pred: &[Vec<TagId>], n_tags: usize) -> [f64; 5] {
    let pairs: Vec<(u16, u16)> = gold
        .iter()
        .zip(pred)
        .flat_map(|(g, p)| g.iter().zip(p).map(|(a, b)| (a.0, b.0)))
        .collect();

    let mut p_sum = 0.0;
    let mut r_sum = 0.0;
    let mut f_sum = 0.0;
    for t in 0..n_tags as u16 {
        let tp = pairs.iter().filter(|&&(g, p)| g == t && p == t).count() as f64;
        let predicted = pairs.iter().filter(|&&(_, p)| p == t).count() as f64;
        let actual = pairs.iter().filter(|&&(g, _)| g == t).count() as f64;
        let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
        let recall = if actual > 0.0 { tp / actual } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        p_sum += precision;
        r_sum += recall;
        f_sum += f1;
    }

    let mut perfect = 0;
    for (g, p) in gold.iter().zip(pred) {
        let mut ok = true;
        for i in 0..g.len() {
            if g[i] != p[i] {
                ok = false;
            }
        }
        if ok {
            perfect += 1;
        }
    }
    let correct = pairs.iter().filter(|(g, p)| g == p).count();
    let n = n_tags as f64;
    [
        p_sum / n,
        r_sum / n,
        f_sum / n,
        100.0 * perfect as f64 / gold.len() as f64,
        100.0 * correct as f64 / pairs.len() as f64,
    ]
}

/// Count of `(gold, pred)` occurrences by linear scan.
pub fn tally(gold: &[Vec<TagId>], pred: &[Vec<TagId>], g: u16, p: u16) -> u64 {
    let mut n = 0;
    for (gs, ps) in gold.iter().zip(pred) {
        for i in 0..gs.len() {
            if gs[i].0 == g && ps[i].0 == p {
                n += 1;
            }
        }
    }
    n
}

/// Random gold sequences and predictions that agree with probability
/// `agreement` per token, drawing tags from the first `used` of `n_tags`.
pub fn random_instance<R: Rng>(rng: &mut R, n_tags: usize) -> (Vec<Vec<TagId>>, Vec<Vec<TagId>>) {
    let used = rng.gen_range(1..=n_tags);
    let agreement: f64 = rng.gen_range(0.0..1.0);
    let samples = rng.gen_range(1..=30);
    let mut gold = Vec::with_capacity(samples);
    let mut pred = Vec::with_capacity(samples);
    for _ in 0..samples {
        let len = rng.gen_range(1..=12);
        let g: Vec<TagId> = (0..len).map(|_| TagId(rng.gen_range(0..used) as u16)).collect();
        let p: Vec<TagId> = g
            .iter()
            .map(|&t| {
                if rng.gen_bool(agreement) {
                    t
                } else {
                    TagId(rng.gen_range(0..n_tags) as u16)
                }
            })
            .collect();
        gold.push(g);
        pred.push(p);
    }
    (gold, pred)
}

/// Compare the library against [`brute_force_metrics`] on `instances`
/// random cases over `schema`. Returns the largest absolute difference.
pub fn metrics_equivalence(instances: usize, seed: u64, schema: &adresparse::data::TagSchema) -> Result<f64, String> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = schema.tag_count();
    let mut worst: f64 = 0.0;
    for case in 0..instances {
        let (gold, pred) = random_instance(&mut rng, n);
        let report = adresparse::evalmetrics::evaluate(&gold, &pred, schema).map_err(|e| e.to_string())?;
        let lib = [
            report.macro_precision,
            report.macro_recall,
            report.macro_f1,
            report.sample_accuracy,
            report.token_accuracy,
        ];
        let oracle = brute_force_metrics(&gold, &pred, n);
        for (k, (a, b)) in lib.iter().zip(&oracle).enumerate() {
            let diff = (a - b).abs();
            worst = worst.max(diff);
            if diff > 1e-12 {
                return Err(format!("instance {case}, metric {k}: library {a} vs oracle {b}"));
            }
        }
    }
    Ok(worst)
}
