//! Result tables, summaries and SVG charts.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use myotype::corpus::{key_name, CharSet};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub condition: String,
    pub fold: usize,
    pub accuracy: f64,
    pub converged: bool,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub condition: String,
    pub folds: usize,
    pub mean: f64,
    /// Sample standard deviation across folds (0 for a single fold).
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub converged_folds: usize,
}

impl ResultTable {
    /// Conditions in first-seen order.
    pub fn conditions(&self) -> Vec<String> {
        let mut seen: Vec<String> = Vec::new();
        for r in &self.rows {
            if !seen.contains(&r.condition) {
                seen.push(r.condition.clone());
            }
        }
        seen
    }

    pub fn accuracies(&self, condition: &str) -> Vec<f64> {
        self.rows.iter().filter(|r| r.condition == condition).map(|r| r.accuracy).collect()
    }

    pub fn summary(&self) -> Vec<SummaryRow> {
        self.conditions()
            .into_iter()
            .map(|c| {
                let rows: Vec<&ResultRow> = self.rows.iter().filter(|r| r.condition == c).collect();
                let acc: Vec<f64> = rows.iter().map(|r| r.accuracy).collect();
                let n = acc.len();
                let mean = acc.iter().sum::<f64>() / n as f64;
                let std = if n > 1 {
                    (acc.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
                } else {
                    0.0
                };
                SummaryRow {
                    condition: c,
                    folds: n,
                    mean,
                    std,
                    min: acc.iter().copied().fold(f64::INFINITY, f64::min),
                    max: acc.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    converged_folds: rows.iter().filter(|r| r.converged).count(),
                }
            })
            .collect()
    }

    pub fn mean(&self, condition: &str) -> Option<f64> {
        self.summary().into_iter().find(|s| s.condition == condition).map(|s| s.mean)
    }

    pub fn extend(&mut self, other: ResultTable) {
        self.rows.extend(other.rows);
    }
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn results_csv(t: &ResultTable) -> Result<String> {
    to_csv(&t.rows)
}

pub fn summary_csv(t: &ResultTable) -> Result<String> {
    to_csv(&t.summary())
}

pub fn read_results(path: &Path) -> Result<ResultTable> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<ResultRow>, _>>()?;
    Ok(ResultTable { rows })
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn svg_open(s: &mut String, title: &str) {
    writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, xml_escape(title)).unwrap();
}

fn axes(s: &mut String, x_label: &str, y_label: &str) {
    let (x0, y0, x1) = (LEFT, H - BOTTOM, W - RIGHT);
    writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#).unwrap();
    writeln!(s, r#"<line x1="{x0}" y1="{TOP}" x2="{x0}" y2="{y0}" stroke="black"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 15.0, xml_escape(x_label)).unwrap();
    writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        (TOP + y0) / 2.0,
        (TOP + y0) / 2.0,
        xml_escape(y_label)
    )
    .unwrap();
}

/// Mean accuracy per condition with ±1 standard deviation error bars. With
/// `line`, points are joined in condition order (sweeps); otherwise bars.
pub fn accuracy_svg(summary: &[SummaryRow], title: &str, x_label: &str, line: bool) -> String {
    let mut s = String::new();
    svg_open(&mut s, title);
    axes(&mut s, x_label, "holdout character accuracy");
    let plot_h = H - BOTTOM - TOP;
    let y_of = |v: f64| H - BOTTOM - v.clamp(0.0, 1.0) * plot_h;
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let y = y_of(v);
        writeln!(s, r##"<line x1="{}" y1="{y}" x2="{LEFT}" y2="{y}" stroke="black"/><text x="{}" y="{}" text-anchor="end">{v:.1}</text>"##, LEFT - 5.0, LEFT - 8.0, y + 4.0).unwrap();
    }
    let n = summary.len().max(1) as f64;
    let step = (W - LEFT - RIGHT) / n;
    let xs: Vec<f64> = (0..summary.len()).map(|i| LEFT + step * (i as f64 + 0.5)).collect();
    if line && summary.len() > 1 {
        let pts: Vec<String> = summary.iter().zip(&xs).map(|(r, x)| format!("{x:.2},{:.2}", y_of(r.mean))).collect();
        writeln!(s, r##"<polyline points="{}" fill="none" stroke="#1f77b4" stroke-width="2"/>"##, pts.join(" ")).unwrap();
    }
    for (r, &x) in summary.iter().zip(&xs) {
        let y = y_of(r.mean);
        if line {
            writeln!(s, r##"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="#1f77b4"/>"##).unwrap();
        } else {
            let bw = step * 0.6;
            writeln!(s, r##"<rect x="{:.2}" y="{y:.2}" width="{bw:.2}" height="{:.2}" fill="#1f77b4"/>"##, x - bw / 2.0, H - BOTTOM - y).unwrap();
        }
        let (lo, hi) = (y_of(r.mean - r.std), y_of(r.mean + r.std));
        writeln!(
            s,
            r#"<path d="M{x:.2},{lo:.2}V{hi:.2}M{:.2},{lo:.2}H{:.2}M{:.2},{hi:.2}H{:.2}" stroke="black" fill="none"/>"#,
            x - 5.0,
            x + 5.0,
            x - 5.0,
            x + 5.0
        )
        .unwrap();
        writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, H - BOTTOM + 16.0, xml_escape(&r.condition)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Relative frequency of every key in the labels, log-scaled, most frequent
/// first.
pub fn char_frequency_svg(labels: &[Vec<char>], cs: &CharSet) -> Result<String> {
    let mut counts = vec![0usize; cs.len()];
    for l in labels {
        for &c in l {
            if let Some(i) = cs.index_of(c) {
                counts[i] += 1;
            }
        }
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        bail!("no labelled keystrokes to plot");
    }
    let mut order: Vec<usize> = (0..cs.len()).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    let mut s = String::new();
    svg_open(&mut s, &format!("key frequency ({total} keystrokes)"));
    axes(&mut s, "key", "relative frequency (log)");
    let min_exp = -5.0f64;
    let plot_h = H - BOTTOM - TOP;
    let y_of = |f: f64| H - BOTTOM - ((f.log10() - min_exp) / -min_exp).clamp(0.0, 1.0) * plot_h;
    for e in (min_exp as i32)..=0 {
        let y = y_of(10f64.powi(e));
        writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">1e{e}</text>"#, LEFT - 8.0, y + 4.0).unwrap();
    }
    let step = (W - LEFT - RIGHT) / cs.len() as f64;
    for (slot, &i) in order.iter().enumerate() {
        if counts[i] == 0 {
            continue;
        }
        let f = counts[i] as f64 / total as f64;
        let x = LEFT + step * slot as f64;
        let y = y_of(f);
        writeln!(s, r##"<rect x="{:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="#ff7f0e"/>"##, x + 1.0, step - 2.0, H - BOTTOM - y).unwrap();
        let name = key_name(cs.chars()[i]);
        let label = if name.chars().count() > 1 { name[..2].to_string() } else { name };
        writeln!(s, r#"<text x="{:.2}" y="{}" text-anchor="middle" font-size="9">{}</text>"#, x + step / 2.0, H - BOTTOM + 12.0, xml_escape(&label)).unwrap();
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Writes `results.csv`, `summary.csv` and `accuracy.svg` into `dir`.
pub fn emit_report(table: &ResultTable, dir: &Path, title: &str, x_label: &str, line: bool) -> Result<()> {
    if table.rows.is_empty() {
        bail!("empty result table");
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let write = |name: &str, body: String| fs::write(dir.join(name), body).with_context(|| format!("writing {name}"));
    write("results.csv", results_csv(table)?)?;
    write("summary.csv", summary_csv(table)?)?;
    write("accuracy.svg", accuracy_svg(&table.summary(), title, x_label, line))?;
    Ok(())
}
