//! Self-contained SVG learning-curve plots: one line per algorithm (mean
//! across seeds) with a min-max band, on a fixed 800x500 canvas.

// Markup is assembled with explicit newlines so the emitted bytes are easy
// to diff; write! with trailing \n is the intended pattern here.
#![allow(clippy::write_with_newline)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};

use crate::metrics::{read_metrics_csv, MetricsRow};

pub const CANVAS_W: f64 = 800.0;
pub const CANVAS_H: f64 = 500.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 160.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 50.0;

const PALETTE: [&str; 9] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Reward,
    Cost,
    CostRate,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Reward, Metric::Cost, Metric::CostRate];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Reward => "reward",
            Metric::Cost => "cost",
            Metric::CostRate => "cost_rate",
        }
    }

    pub fn axis_label(self) -> &'static str {
        match self {
            Metric::Reward => "J_r (mean episode return)",
            Metric::Cost => "M_c (mean episodic cost)",
            Metric::CostRate => "rho_c (cost rate)",
        }
    }

    fn pick(self, row: &MetricsRow) -> f64 {
        match self {
            Metric::Reward => row.j_r,
            Metric::Cost => row.m_c,
            Metric::CostRate => row.rho_c,
        }
    }
}

struct Series {
    label: String,
    mean: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

/// Render the metric-vs-epoch chart for a set of per-seed CSV files grouped
/// by algorithm, and write it as a self-contained SVG.
pub fn emit_plot(
    groups: &[(String, Vec<PathBuf>)],
    metric: Metric,
    out_path: &Path,
) -> Result<PathBuf> {
    if groups.is_empty() || groups.iter().all(|(_, paths)| paths.is_empty()) {
        bail!("no CSV inputs to plot");
    }

    let mut series = Vec::new();
    for (label, paths) in groups {
        let mut per_seed: Vec<Vec<f64>> = Vec::new();
        for path in paths {
            let rows = read_metrics_csv(path)?;
            if rows.is_empty() {
                bail!("empty CSV {}", path.display());
            }
            per_seed.push(rows.iter().map(|r| metric.pick(r)).collect());
        }
        let epochs = per_seed.iter().map(Vec::len).min().unwrap_or(0);
        if epochs == 0 {
            bail!("algorithm {label} has no rows");
        }
        let mut mean = Vec::with_capacity(epochs);
        let mut lo = Vec::with_capacity(epochs);
        let mut hi = Vec::with_capacity(epochs);
        for e in 0..epochs {
            let values: Vec<f64> = per_seed.iter().map(|s| s[e]).collect();
            mean.push(values.iter().sum::<f64>() / values.len() as f64);
            lo.push(values.iter().cloned().fold(f64::INFINITY, f64::min));
            hi.push(values.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        }
        series.push(Series {
            label: label.clone(),
            mean,
            lo,
            hi,
        });
    }

    let max_epoch = series.iter().map(|s| s.mean.len()).max().unwrap() - 1;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in &series {
        for v in s.lo.iter().chain(&s.hi) {
            y_min = y_min.min(*v);
            y_max = y_max.max(*v);
        }
    }
    if !(y_min.is_finite() && y_max.is_finite()) {
        bail!("non-finite values in plot data");
    }
    if (y_max - y_min).abs() < 1e-12 {
        y_min -= 1.0;
        y_max += 1.0;
    } else {
        let pad = 0.05 * (y_max - y_min);
        y_min -= pad;
        y_max += pad;
    }

    let plot_w = CANVAS_W - MARGIN_L - MARGIN_R;
    let plot_h = CANVAS_H - MARGIN_T - MARGIN_B;
    let x_of = |epoch: usize| {
        MARGIN_L + plot_w * (epoch as f64) / (max_epoch.max(1) as f64)
    };
    let y_of = |v: f64| MARGIN_T + plot_h * (1.0 - (v - y_min) / (y_max - y_min));

    let mut svg = String::new();
    write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{CANVAS_W}\" height=\"{CANVAS_H}\" viewBox=\"0 0 {CANVAS_W} {CANVAS_H}\">\n"
    )?;
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // Axes.
    write!(
        svg,
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        MARGIN_L,
        MARGIN_T + plot_h,
        MARGIN_L + plot_w,
        MARGIN_T + plot_h
    )?;
    write!(
        svg,
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        MARGIN_L,
        MARGIN_T,
        MARGIN_L,
        MARGIN_T + plot_h
    )?;

    // Ticks and labels.
    for i in 0..=4 {
        let frac = i as f64 / 4.0;
        let x = MARGIN_L + plot_w * frac;
        let epoch = (max_epoch as f64 * frac).round() as usize;
        write!(
            svg,
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
            MARGIN_T + plot_h,
            MARGIN_T + plot_h + 5.0
        )?;
        write!(
            svg,
            "<text x=\"{x:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">{epoch}</text>\n",
            MARGIN_T + plot_h + 20.0
        )?;

        let y = MARGIN_T + plot_h * (1.0 - frac);
        let value = y_min + (y_max - y_min) * frac;
        write!(
            svg,
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"black\"/>\n",
            MARGIN_L - 5.0,
            MARGIN_L
        )?;
        write!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">{value:.4}</text>\n",
            MARGIN_L - 8.0,
            y + 4.0
        )?;
    }
    write!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\">epoch</text>\n",
        MARGIN_L + plot_w / 2.0,
        CANVAS_H - 10.0
    )?;
    write!(
        svg,
        "<text x=\"18\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2})\">{}</text>\n",
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0,
        metric.axis_label()
    )?;

    for (idx, s) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let n = s.mean.len();
        if n > 1 {
            // Min-max band.
            let mut band = String::from("M");
            for (e, v) in s.hi.iter().enumerate() {
                write!(band, " {:.2} {:.2}", x_of(e), y_of(*v))?;
            }
            for (e, v) in s.lo.iter().enumerate().rev() {
                write!(band, " L {:.2} {:.2}", x_of(e), y_of(*v))?;
            }
            band.push_str(" Z");
            write!(
                svg,
                "<path d=\"{band}\" fill=\"{color}\" fill-opacity=\"0.15\" stroke=\"none\"/>\n"
            )?;
        }
        // Mean line.
        let mut points = String::new();
        for (e, v) in s.mean.iter().enumerate() {
            write!(points, "{:.2},{:.2} ", x_of(e), y_of(*v))?;
        }
        write!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
            points.trim_end()
        )?;
        // Legend entry.
        let ly = MARGIN_T + 16.0 * idx as f64 + 8.0;
        write!(
            svg,
            "<line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            MARGIN_L + plot_w + 12.0,
            MARGIN_L + plot_w + 34.0
        )?;
        write!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\">{}</text>\n",
            MARGIN_L + plot_w + 40.0,
            ly + 4.0,
            s.label
        )?;
    }

    svg.push_str("</svg>\n");
    std::fs::write(out_path, svg)?;
    Ok(out_path.to_path_buf())
}
