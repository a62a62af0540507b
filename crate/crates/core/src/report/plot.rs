//! Hand-written SVG 1.1 charts. Output depends only on the input values.

use std::fmt::Write;

use super::{ComparisonTable, PcaProjection};
use crate::data::{TagId, TagSchema};
use crate::error::{Error, Result};
use crate::model::HeadKind;

const PALETTE: [&str; 16] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
    "#9c755f", "#bab0ac", "#1f77b4", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn open(width: f64, height: f64, title: &str) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        width / 2.0,
        escape(title)
    )
}

/// Bar chart of `(label, count)` pairs, tallest first. Equal counts keep
/// label order.
pub fn plot_label_histogram(hist: &[(String, usize)]) -> Result<String> {
    if hist.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut bars = hist.to_vec();
    bars.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let max = bars[0].1.max(1) as f64;

    let (left, top, plot_h, bar_w, gap) = (60.0, 40.0, 300.0, 28.0, 8.0);
    let width = left + bars.len() as f64 * (bar_w + gap) + 20.0;
    let height = top + plot_h + 110.0;
    let mut svg = open(width, height, "Label frequencies");
    let base = top + plot_h;
    let _ = writeln!(
        svg,
        "<line x1=\"{left}\" y1=\"{top}\" x2=\"{left}\" y2=\"{base}\" stroke=\"black\"/>\n\
         <line x1=\"{left}\" y1=\"{base}\" x2=\"{:.1}\" y2=\"{base}\" stroke=\"black\"/>",
        width - 10.0
    );
    for (i, (label, count)) in bars.iter().enumerate() {
        let h = plot_h * *count as f64 / max;
        let x = left + gap / 2.0 + i as f64 * (bar_w + gap);
        let cx = x + bar_w / 2.0;
        let _ = writeln!(
            svg,
            "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"{bar_w}\" height=\"{h:.1}\" fill=\"{}\"><title>{}: {count}</title></rect>\n\
             <text x=\"{cx:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"10\">{count}</text>\n\
             <text x=\"{cx:.1}\" y=\"{:.1}\" text-anchor=\"end\" transform=\"rotate(-60 {cx:.1} {:.1})\">{}</text>",
            base - h,
            PALETTE[0],
            escape(label),
            base - h - 4.0,
            base + 14.0,
            base + 14.0,
            escape(label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Grouped bars of per-token accuracy, LINEAR then MLP for each variant in
/// table order.
pub fn plot_head_comparison(table: &ComparisonTable) -> Result<String> {
    let groups = table.paired_token_accuracy()?;
    let (left, top, plot_h, bar_w, group_gap) = (60.0, 40.0, 300.0, 30.0, 30.0);
    let group_w = 2.0 * bar_w + group_gap;
    let width = left + groups.len() as f64 * group_w + 140.0;
    let height = top + plot_h + 60.0;
    let base = top + plot_h;
    let mut svg = open(width, height, "Per-token accuracy by head");
    for tick in 0..=5 {
        let v = tick as f64 / 5.0;
        let y = base - v * plot_h;
        let _ = writeln!(
            svg,
            "<line x1=\"{left}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#dddddd\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{v:.1}</text>",
            width - 130.0,
            left - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        "<line x1=\"{left}\" y1=\"{top}\" x2=\"{left}\" y2=\"{base}\" stroke=\"black\"/>"
    );
    for (g, (name, linear, mlp)) in groups.iter().enumerate() {
        let x0 = left + group_gap / 2.0 + g as f64 * group_w;
        for (k, (head, value)) in [(HeadKind::Linear, linear), (HeadKind::Mlp, mlp)].iter().enumerate() {
            let v = value.clamp(0.0, 1.0);
            let h = v * plot_h;
            let x = x0 + k as f64 * bar_w;
            let _ = writeln!(
                svg,
                "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"{bar_w}\" height=\"{h:.1}\" fill=\"{}\"><title>{} {}: {v:.3}</title></rect>",
                base - h,
                PALETTE[k],
                escape(name),
                head.as_str().to_uppercase()
            );
        }
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            x0 + bar_w,
            base + 16.0,
            escape(name)
        );
    }
    let lx = width - 120.0;
    for (k, label) in ["LINEAR", "MLP"].iter().enumerate() {
        let y = top + 10.0 + 20.0 * k as f64;
        let _ = writeln!(
            svg,
            "<rect x=\"{lx:.1}\" y=\"{y:.1}\" width=\"12\" height=\"12\" fill=\"{}\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\">{label}</text>",
            PALETTE[k],
            lx + 18.0,
            y + 11.0
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Scatter of projected token representations, coloured by entity type
/// (`O` tokens form their own group).
pub fn plot_pca_scatter(projection: &PcaProjection, tags: &[TagId], schema: &TagSchema) -> Result<String> {
    if tags.len() != projection.coords.len() {
        return Err(Error::Shape(format!(
            "{} tags for {} projected points",
            tags.len(),
            projection.coords.len()
        )));
    }
    let group = |t: TagId| schema.entity_of(t).map_or(0, |e| e + 1);
    let names: Vec<String> = std::iter::once("O".to_string())
        .chain(schema.entity_types().iter().cloned())
        .collect();

    let (size, margin) = (480.0, 40.0);
    let width = size + 2.0 * margin + 160.0;
    let height = size + 2.0 * margin;
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for [x, y] in &projection.coords {
        xmin = xmin.min(*x);
        xmax = xmax.max(*x);
        ymin = ymin.min(*y);
        ymax = ymax.max(*y);
    }
    let span = |lo: f64, hi: f64| if hi > lo { hi - lo } else { 1.0 };
    let (sx, sy) = (span(xmin, xmax), span(ymin, ymax));

    let mut svg = open(width, height, "Token representations (PCA)");
    let _ = writeln!(
        svg,
        "<rect x=\"{margin}\" y=\"{margin}\" width=\"{size}\" height=\"{size}\" fill=\"none\" stroke=\"black\"/>\n\
         <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">PC1</text>\n\
         <text x=\"12\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 12 {:.1})\">PC2</text>",
        margin + size / 2.0,
        height - 8.0,
        margin + size / 2.0,
        margin + size / 2.0
    );
    for ([x, y], &tag) in projection.coords.iter().zip(tags) {
        let px = margin + (x - xmin) / sx * size;
        let py = margin + size - (y - ymin) / sy * size;
        let _ = writeln!(
            svg,
            "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"2.5\" fill=\"{}\" fill-opacity=\"0.7\"/>",
            PALETTE[group(tag) % PALETTE.len()]
        );
    }
    let mut present: Vec<usize> = tags.iter().map(|&t| group(t)).collect();
    present.sort_unstable();
    present.dedup();
    let lx = margin * 2.0 + size;
    for (row, g) in present.iter().enumerate() {
        let y = margin + 16.0 * row as f64;
        let _ = writeln!(
            svg,
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"5\" fill=\"{}\"/>\n<text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            lx + 5.0,
            y + 5.0,
            PALETTE[g % PALETTE.len()],
            lx + 16.0,
            y + 9.0,
            escape(&names[*g])
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_bars_are_sorted() {
        let hist = vec![("A".to_string(), 3), ("B".to_string(), 9), ("C".to_string(), 5)];
        let svg = plot_label_histogram(&hist).unwrap();
        let b = svg.find("<title>B").unwrap();
        let c = svg.find("<title>C").unwrap();
        let a = svg.find("<title>A").unwrap();
        assert!(b < c && c < a);
        assert_eq!(svg, plot_label_histogram(&hist).unwrap());
    }

    #[test]
    fn single_bar_and_empty() {
        let svg = plot_label_histogram(&[("POI".to_string(), 4)]).unwrap();
        assert_eq!(svg.matches("<rect x=").count(), 1);
        assert!(matches!(plot_label_histogram(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn labels_are_escaped() {
        let svg = plot_label_histogram(&[("<&>".to_string(), 1)]).unwrap();
        assert!(svg.contains("&lt;&amp;&gt;"));
    }
}
