//! Report records, text tables, two-column plot data and SVG plots.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use plotters::prelude::*;
use regxplain_core::eval::{AucRow, EvalReport};
use serde::{Deserialize, Serialize};

use crate::format::to_line;

/// One machine-readable measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub metric: String,
    pub dataset: String,
    pub explainer: String,
    pub seed: u64,
    pub value: f64,
}

impl Record {
    pub fn new(metric: impl Into<String>, dataset: &str, explainer: &str, seed: u64, value: f64) -> Self {
        Self {
            metric: metric.into(),
            dataset: dataset.into(),
            explainer: explainer.into(),
            seed,
            value,
        }
    }
}

/// The non-default fields of a report as records.
pub fn report_records(r: &EvalReport, dataset: &str, explainer: &str, seed: u64) -> Vec<Record> {
    let mut out = Vec::new();
    let fields = [
        ("rmse_gy", r.rmse_gy),
        ("rmse_sy", r.rmse_sy),
        ("rmse_gs", r.rmse_gs),
        ("cos_ge", r.cos_ge),
        ("cos_gm", r.cos_gm),
        ("euc_ge", r.euc_ge),
        ("euc_gm", r.euc_gm),
        ("rmse_pe", r.rmse_pe),
        ("rmse_pm", r.rmse_pm),
    ];
    for (name, v) in fields {
        out.push(Record::new(name, dataset, explainer, seed, v));
    }
    for (pair, rr, p) in &r.pearson {
        out.push(Record::new(format!("pearson_r:{pair}"), dataset, explainer, seed, *rr));
        out.push(Record::new(format!("pearson_p:{pair}"), dataset, explainer, seed, *p));
    }
    out
}

/// One record per line; non-finite values are rejected.
pub fn write_records(path: &Path, records: &[Record]) -> Result<()> {
    let mut f = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for r in records {
        writeln!(f, "{}", to_line(r)?)?;
    }
    f.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<Record>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(k, l)| serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), k + 1)))
        .collect()
}

/// Plain-text table with a header row; columns are left-aligned.
pub fn text_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut s = String::new();
    let line = |s: &mut String, cells: &mut dyn Iterator<Item = &str>| {
        let parts: Vec<String> = cells.zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(s, "{}", parts.join("  ").trim_end());
    };
    line(&mut s, &mut header.iter().copied());
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    let _ = writeln!(s, "{}", rule.join("  "));
    for r in rows {
        line(&mut s, &mut r.iter().map(String::as_str));
    }
    s
}

/// `label  mean ± std  n` rows.
pub fn auc_table(title: &str, rows: &[AucRow]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.label.clone(),
                format!("{:.4}", r.mean),
                format!("{:.4}", r.std),
                r.aucs.len().to_string(),
            ]
        })
        .collect();
    format!("{title}\n{}", text_table(&["variant", "auc_mean", "auc_std", "seeds"], &body))
}

/// Shift and repair fields of a report as a two-column table.
pub fn eval_table(title: &str, r: &EvalReport) -> String {
    let mut rows = vec![
        vec!["auc_mean".into(), format!("{:.4}", r.auc_mean)],
        vec!["auc_std".into(), format!("{:.4}", r.auc_std)],
        vec!["rmse(f(G), Y)".into(), format!("{:.4}", r.rmse_gy)],
        vec!["rmse(f(G*), Y)".into(), format!("{:.4}", r.rmse_sy)],
        vec!["rmse(f(G), f(G*))".into(), format!("{:.4}", r.rmse_gs)],
        vec!["cos(v_g, v_e)".into(), format!("{:.4}", r.cos_ge)],
        vec!["cos(v_g, v_m)".into(), format!("{:.4}", r.cos_gm)],
        vec!["euc(v_g, v_e)".into(), format!("{:.4}", r.euc_ge)],
        vec!["euc(v_g, v_m)".into(), format!("{:.4}", r.euc_gm)],
        vec!["rmse(p_g, p_e)".into(), format!("{:.4}", r.rmse_pe)],
        vec!["rmse(p_g, p_m)".into(), format!("{:.4}", r.rmse_pm)],
    ];
    for (pair, rr, p) in &r.pearson {
        rows.push(vec![format!("pearson {pair}"), format!("r={rr:.4} p={p:.3e}")]);
    }
    format!("{title}\n{}", text_table(&["metric", "value"], &rows))
}

/// Whitespace-separated `x y` lines.
pub fn write_two_column(path: &Path, points: &[(f64, f64)]) -> Result<()> {
    let mut f = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for (x, y) in points {
        writeln!(f, "{x:.16e} {y:.16e}")?;
    }
    f.flush()?;
    Ok(())
}

pub fn read_two_column(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
            anyhow::bail!("{}:{}: expected two columns", path.display(), k + 1);
        };
        out.push((a.parse()?, b.parse()?));
    }
    Ok(out)
}

/// A named point series.
pub struct Series<'a> {
    pub name: &'a str,
    pub points: &'a [(f64, f64)],
}

const PALETTE: [RGBColor; 4] = [RGBColor(31, 119, 180), RGBColor(214, 39, 40), RGBColor(44, 160, 44), RGBColor(148, 103, 189)];

fn bounds(series: &[Series<'_>]) -> ((f64, f64), (f64, f64)) {
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return ((0.0, 1.0), (0.0, 1.0));
    }
    let pad = |a: f64, b: f64| {
        let d = if b > a { 0.05 * (b - a) } else { 0.5 };
        (a - d, b + d)
    };
    (pad(x0, x1), pad(y0, y1))
}

/// Scatter plot of one or more series to an SVG file.
pub fn render_scatter(path: &Path, title: &str, x_desc: &str, y_desc: &str, series: &[Series<'_>]) -> Result<()> {
    let root = SVGBackend::new(path, (720, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| anyhow::anyhow!("{e}"))?;
    let ((x0, x1), (y0, y1)) = bounds(series);
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 18))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(56)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    chart
        .configure_mesh()
        .x_desc(x_desc)
        .y_desc(y_desc)
        .draw()
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        chart
            .draw_series(s.points.iter().map(|&p| Circle::new(p, 2, color.filled())))
            .map_err(|e| anyhow::anyhow!("{e}"))?
            .label(s.name)
            .legend(move |(x, y)| Circle::new((x, y), 3, color.filled()));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    root.present().map_err(|e| anyhow::anyhow!("{e}"))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_alignment() {
        let t = text_table(&["a", "bb"], &[vec!["xxx".into(), "1".into()]]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "a    bb");
        assert_eq!(lines[1], "---  --");
        assert_eq!(lines[2], "xxx  1");
    }

    #[test]
    fn two_column_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.txt");
        let pts = vec![(1.0, 0.1 + 0.2), (2.5, -1e-300)];
        write_two_column(&p, &pts).unwrap();
        assert_eq!(read_two_column(&p).unwrap(), pts);
    }

    #[test]
    fn records_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.jsonl");
        let recs = vec![Record::new("auc", "triangles", "grad", 3, 0.123_456_789_012_345_67)];
        write_records(&p, &recs).unwrap();
        assert_eq!(read_records(&p).unwrap(), recs);
    }
}
