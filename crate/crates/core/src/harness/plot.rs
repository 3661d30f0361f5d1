//! Static SVG charts of a summary table: fidelity vs T and N_fev vs T, one
//! series per (method, M).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use plotters::prelude::*;

use super::aggregate::SummaryRow;
use crate::error::{Error, Result};

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
];

fn series(rows: &[SummaryRow], value: impl Fn(&SummaryRow) -> f64) -> BTreeMap<String, Vec<(f64, f64)>> {
    let mut out: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        out.entry(format!("{} M={}", r.method, r.m))
            .or_default()
            .push((r.t, value(r)));
    }
    for points in out.values_mut() {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    out
}

fn draw(
    path: &Path,
    title: &str,
    y_label: &str,
    data: &BTreeMap<String, Vec<(f64, f64)>>,
    y_range: (f64, f64),
) -> Result<()> {
    let plot_err = |e: &dyn std::fmt::Display| Error::Config(format!("plot {}: {e}", path.display()));
    let (t_min, t_max) = data
        .values()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(t, _)| (lo.min(t), hi.max(t)));
    let (t_min, t_max) = if t_min < t_max { (t_min, t_max) } else { (t_min * 0.5, t_max * 2.0) };

    let root = SVGBackend::new(path, (800, 560)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(44)
        .y_label_area_size(64)
        .build_cartesian_2d((t_min..t_max).log_scale(), y_range.0..y_range.1)
        .map_err(|e| plot_err(&e))?;
    chart
        .configure_mesh()
        .x_desc("annealing time T")
        .y_desc(y_label)
        .draw()
        .map_err(|e| plot_err(&e))?;
    for (i, (name, points)) in data.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(points.iter().copied(), color.stroke_width(2)))
            .map_err(|e| plot_err(&e))?
            .label(name.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
        chart
            .draw_series(points.iter().map(|&p| Circle::new(p, 3, color.filled())))
            .map_err(|e| plot_err(&e))?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| plot_err(&e))?;
    root.present().map_err(|e| plot_err(&e))?;
    Ok(())
}

/// Writes `fidelity_vs_T.svg` and `nfev_vs_T.svg` into `dir`.
pub fn plot_summary(rows: &[SummaryRow], dir: &Path) -> Result<Vec<PathBuf>> {
    if rows.is_empty() {
        return Err(Error::Config("nothing to plot: empty summary".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let fidelity = dir.join("fidelity_vs_T.svg");
    draw(
        &fidelity,
        "Final fidelity",
        "mean fidelity",
        &series(rows, |r| r.mean_fidelity),
        (0.0, 1.0),
    )?;
    let nfev = dir.join("nfev_vs_T.svg");
    let max_nfev = rows.iter().map(|r| r.mean_nfev).fold(1.0, f64::max);
    draw(
        &nfev,
        "Function evaluations",
        "mean N_fev",
        &series(rows, |r| r.mean_nfev),
        (0.0, max_nfev * 1.05),
    )?;
    Ok(vec![fidelity, nfev])
}
