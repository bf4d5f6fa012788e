//! `report`: turn result tables into an accuracy table, coverage-gap and
//! efficiency charts with beta-binomial reference bounds, and per-district
//! box plots, each as a standalone SVG plus its underlying CSV.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::BetaBinomialRef;
use crate::experiment::runner::{
    read_csv, write_csv, AccuracySummaryRow, DistrictRow, RunMeta, RunPaths, SummaryRow,
};
use crate::experiment::svg::{series_color, LinearScale, SvgCanvas};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundedSummaryRow {
    pub model: String,
    pub score: String,
    pub scheme: String,
    pub n_seeds: usize,
    pub coverage: f64,
    pub coverage_gap: f64,
    pub mean_width: f64,
    pub relative_efficiency: f64,
    pub n_infinite_total: usize,
    pub gap_lower_bound: f64,
    pub gap_upper_bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoxStatRow {
    pub model: String,
    pub score: String,
    pub scheme: String,
    pub n_districts: usize,
    pub whisker_low: f64,
    pub quartile1: f64,
    pub median: f64,
    pub quartile3: f64,
    pub whisker_high: f64,
    pub reference_quartile1: f64,
    pub reference_quartile3: f64,
}

/// Build every report artifact from a results directory. Returns the
/// written paths.
pub fn run_report(results_dir: &Path) -> Result<Vec<PathBuf>> {
    let paths = RunPaths::in_dir(results_dir);
    if !paths.summary.exists() {
        return Err(Error::MissingResults(paths.summary.display().to_string()));
    }
    let summary: Vec<SummaryRow> = read_csv(&paths.summary)?;
    if summary.is_empty() {
        return Err(Error::MissingResults(paths.summary.display().to_string()));
    }
    let districts: Vec<DistrictRow> = read_csv(&paths.districts)?;
    let accuracy: Vec<AccuracySummaryRow> = read_csv(&paths.accuracy_summary)?;
    let meta: RunMeta = serde_json::from_str(&std::fs::read_to_string(&paths.meta)?)?;

    let mut written = Vec::new();

    // Coverage-gap bounds: the 5%/95% beta-binomial coverage quantiles
    // shifted by (1 - alpha) because charts display the gap.
    let reference = BetaBinomialRef::new(meta.n_calibration, meta.n_test, meta.alpha)?;
    let gap_low = (1.0 - meta.alpha) - reference.quantile(0.95)?;
    let gap_high = (1.0 - meta.alpha) - reference.quantile(0.05)?;

    let bounded: Vec<BoundedSummaryRow> = summary
        .iter()
        .map(|r| BoundedSummaryRow {
            model: r.model.clone(),
            score: r.score.clone(),
            scheme: r.scheme.clone(),
            n_seeds: r.n_seeds,
            coverage: r.coverage,
            coverage_gap: r.coverage_gap,
            mean_width: r.mean_width,
            relative_efficiency: r.relative_efficiency,
            n_infinite_total: r.n_infinite_total,
            gap_lower_bound: gap_low,
            gap_upper_bound: gap_high,
        })
        .collect();

    let gap_csv = results_dir.join("coverage_gap.csv");
    write_csv(&gap_csv, &bounded)?;
    written.push(gap_csv);

    let gap_svg = results_dir.join("coverage_gap.svg");
    std::fs::write(
        &gap_svg,
        metric_chart(&summary, |r| r.coverage_gap, "coverage gap", Some((gap_low, gap_high))),
    )?;
    written.push(gap_svg);

    let eff_csv = results_dir.join("relative_efficiency.csv");
    write_csv(&eff_csv, &summary)?;
    written.push(eff_csv);

    let eff_svg = results_dir.join("relative_efficiency.svg");
    std::fs::write(
        &eff_svg,
        metric_chart(
            &summary,
            |r| r.relative_efficiency,
            "set size (% of price)",
            None,
        ),
    )?;
    written.push(eff_svg);

    let table = results_dir.join("accuracy_table.txt");
    std::fs::write(&table, accuracy_table(&accuracy))?;
    written.push(table);

    // District box plots: one chart per model over (score, scheme) cells.
    let box_stats = district_box_stats(&districts, &meta)?;
    let box_csv = results_dir.join("district_boxplots.csv");
    write_csv(&box_csv, &box_stats)?;
    written.push(box_csv);

    let models: Vec<String> = {
        let mut m: Vec<String> = box_stats.iter().map(|r| r.model.clone()).collect();
        m.sort();
        m.dedup();
        m
    };
    for model in models {
        let rows: Vec<&BoxStatRow> = box_stats.iter().filter(|r| r.model == model).collect();
        let svg_path = results_dir.join(format!("district_boxplot_{model}.svg"));
        std::fs::write(&svg_path, box_chart(&rows, &model))?;
        written.push(svg_path);
    }

    Ok(written)
}

fn accuracy_table(rows: &[AccuracySummaryRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<16} {:>8} {:>8} {:>10} {:>10}", "model", "RMSE", "MdAE", "PER10(%)", "PER20(%)");
    for r in rows {
        let _ = writeln!(
            out,
            "{:<16} {:>8.3} {:>8.3} {:>10.1} {:>10.1}",
            r.model, r.rmse, r.mdae, r.per10, r.per20
        );
    }
    out
}

/// Scatter of one metric per (model, score) group, one colored marker per
/// scheme.
fn metric_chart(
    rows: &[SummaryRow],
    value: impl Fn(&SummaryRow) -> f64,
    y_label: &str,
    bounds: Option<(f64, f64)>,
) -> String {
    let mut groups: Vec<(String, String)> = rows
        .iter()
        .map(|r| (r.model.clone(), r.score.clone()))
        .collect();
    groups.sort();
    groups.dedup();
    let mut schemes: Vec<String> = rows.iter().map(|r| r.scheme.clone()).collect();
    schemes.sort();
    schemes.dedup();

    let (width, height) = (180.0 + 60.0 * groups.len() as f64, 420.0);
    let plot = (70.0, 40.0, width - 130.0, height - 120.0); // x, y, w, h

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for r in rows {
        let v = value(r);
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if let Some((a, b)) = bounds {
        lo = lo.min(a);
        hi = hi.max(b);
    }
    if !lo.is_finite() || !hi.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    let pad = 0.1 * (hi - lo).max(1e-9);
    let y_scale = LinearScale::new((lo - pad, hi + pad), (plot.1 + plot.3, plot.1));

    let mut canvas = SvgCanvas::new(width, height);
    canvas.line(plot.0, plot.1, plot.0, plot.1 + plot.3, "black", 1.0);
    canvas.line(plot.0, plot.1 + plot.3, plot.0 + plot.2, plot.1 + plot.3, "black", 1.0);
    canvas.text(plot.0 - 55.0, plot.1 - 12.0, 11.0, "start", y_label);

    // y ticks
    for i in 0..=4 {
        let v = lo - pad + (hi - lo + 2.0 * pad) * i as f64 / 4.0;
        let y = y_scale.map(v);
        canvas.line(plot.0 - 4.0, y, plot.0, y, "black", 1.0);
        canvas.text(plot.0 - 8.0, y + 3.5, 9.0, "end", &format!("{v:.3}"));
    }

    if let Some((a, b)) = bounds {
        canvas.dashed_line(plot.0, y_scale.map(a), plot.0 + plot.2, y_scale.map(a), "#777777");
        canvas.dashed_line(plot.0, y_scale.map(b), plot.0 + plot.2, y_scale.map(b), "#777777");
    }
    if lo < 0.0 && hi > 0.0 {
        canvas.line(plot.0, y_scale.map(0.0), plot.0 + plot.2, y_scale.map(0.0), "#bbbbbb", 0.6);
    }

    let step = plot.2 / groups.len().max(1) as f64;
    for (gi, (model, score)) in groups.iter().enumerate() {
        let x0 = plot.0 + step * (gi as f64 + 0.5);
        canvas.text_rotated(x0, plot.1 + plot.3 + 14.0, 9.0, &format!("{model}/{score}"));
        for r in rows.iter().filter(|r| &r.model == model && &r.score == score) {
            let v = value(r);
            if !v.is_finite() {
                continue;
            }
            let si = schemes.iter().position(|s| s == &r.scheme).unwrap_or(0);
            let dx = (si as f64 - (schemes.len() as f64 - 1.0) / 2.0) * 7.0;
            canvas.circle(x0 + dx, y_scale.map(v), 3.0, series_color(si));
        }
    }

    // legend
    for (si, scheme) in schemes.iter().enumerate() {
        let y = plot.1 + 14.0 * si as f64;
        canvas.circle(plot.0 + plot.2 + 16.0, y, 3.5, series_color(si));
        canvas.text(plot.0 + plot.2 + 24.0, y + 3.5, 10.0, "start", scheme);
    }

    canvas.render()
}

fn district_box_stats(rows: &[DistrictRow], meta: &RunMeta) -> Result<Vec<BoxStatRow>> {
    // Mean gap per (model, score, scheme, district) over seeds, then box
    // statistics over districts.
    let mut grouped: BTreeMap<(String, String, String), BTreeMap<u32, Vec<f64>>> = BTreeMap::new();
    for r in rows {
        grouped
            .entry((r.model.clone(), r.score.clone(), r.scheme.clone()))
            .or_default()
            .entry(r.district)
            .or_default()
            .push(r.coverage_gap);
    }

    let share = (meta.n_test / meta.n_districts.max(1)).max(1);
    let reference = BetaBinomialRef::new(meta.n_calibration, share, meta.alpha)?;
    let ref_q1 = (1.0 - meta.alpha) - reference.quantile(0.75)?;
    let ref_q3 = (1.0 - meta.alpha) - reference.quantile(0.25)?;

    let mut stats = Vec::new();
    for ((model, score, scheme), per_district) in grouped {
        let mut gaps: Vec<f64> = per_district
            .values()
            .map(|v| v.iter().sum::<f64>() / v.len() as f64)
            .collect();
        gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = |p: f64| -> f64 {
            let h = (gaps.len() - 1) as f64 * p;
            let lo = h.floor() as usize;
            let hi = h.ceil() as usize;
            if lo == hi {
                gaps[lo]
            } else {
                gaps[lo] + (h - lo as f64) * (gaps[hi] - gaps[lo])
            }
        };
        stats.push(BoxStatRow {
            model,
            score,
            scheme,
            n_districts: gaps.len(),
            whisker_low: gaps[0],
            quartile1: q(0.25),
            median: q(0.5),
            quartile3: q(0.75),
            whisker_high: gaps[gaps.len() - 1],
            reference_quartile1: ref_q1,
            reference_quartile3: ref_q3,
        });
    }
    Ok(stats)
}

fn box_chart(rows: &[&BoxStatRow], model: &str) -> String {
    let (width, height) = (140.0 + 46.0 * rows.len() as f64, 420.0);
    let plot = (70.0, 40.0, width - 110.0, height - 130.0);

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for r in rows {
        lo = lo.min(r.whisker_low).min(r.reference_quartile1);
        hi = hi.max(r.whisker_high).max(r.reference_quartile3);
    }
    if !lo.is_finite() {
        lo = -0.1;
        hi = 0.1;
    }
    let pad = 0.15 * (hi - lo).max(1e-9);
    let y = LinearScale::new((lo - pad, hi + pad), (plot.1 + plot.3, plot.1));

    let mut canvas = SvgCanvas::new(width, height);
    canvas.text(plot.0, plot.1 - 18.0, 12.0, "start", &format!("district coverage gaps: {model}"));
    canvas.line(plot.0, plot.1, plot.0, plot.1 + plot.3, "black", 1.0);
    canvas.line(plot.0, plot.1 + plot.3, plot.0 + plot.2, plot.1 + plot.3, "black", 1.0);
    for i in 0..=4 {
        let v = lo - pad + (hi - lo + 2.0 * pad) * i as f64 / 4.0;
        canvas.line(plot.0 - 4.0, y.map(v), plot.0, y.map(v), "black", 1.0);
        canvas.text(plot.0 - 8.0, y.map(v) + 3.5, 9.0, "end", &format!("{v:.3}"));
    }

    if let Some(first) = rows.first() {
        canvas.dashed_line(plot.0, y.map(first.reference_quartile1), plot.0 + plot.2, y.map(first.reference_quartile1), "#777777");
        canvas.dashed_line(plot.0, y.map(first.reference_quartile3), plot.0 + plot.2, y.map(first.reference_quartile3), "#777777");
    }

    let step = plot.2 / rows.len().max(1) as f64;
    for (i, r) in rows.iter().enumerate() {
        let cx = plot.0 + step * (i as f64 + 0.5);
        let half = (step * 0.3).min(14.0);
        canvas.line(cx, y.map(r.whisker_low), cx, y.map(r.quartile1), "black", 1.0);
        canvas.line(cx, y.map(r.quartile3), cx, y.map(r.whisker_high), "black", 1.0);
        canvas.rect(
            cx - half,
            y.map(r.quartile3),
            2.0 * half,
            (y.map(r.quartile1) - y.map(r.quartile3)).max(0.5),
            "#cfe3f3",
            "black",
        );
        canvas.line(cx - half, y.map(r.median), cx + half, y.map(r.median), "black", 1.5);
        canvas.text_rotated(cx, plot.1 + plot.3 + 14.0, 9.0, &format!("{}/{}", r.score, r.scheme));
    }

    canvas.render()
}
