//! Static SVG plots: wealth curves for one ledger and MC tails against bounds.

use std::path::Path;

use plotters::prelude::*;
use thiserror::Error;

use crate::game::{Ledger, Series};
use crate::rational;
use crate::simulate::SimSummary;

#[derive(Debug, Error)]
#[error("plot {path}: {message}")]
pub struct PlotError {
    pub path: String,
    pub message: String,
}

fn err(path: &Path) -> impl Fn(String) -> PlotError + '_ {
    move |message| PlotError { path: path.display().to_string(), message }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    let pad = ((hi - lo) * 0.05).max(0.5);
    (lo - pad, hi + pad)
}

/// Gross and net wealth against `t`.
pub fn plot_ledger(ledger: &Ledger, path: &Path) -> Result<(), PlotError> {
    let e = err(path);
    let curve = |s: Series| -> Vec<(f64, f64)> {
        ledger.series(s).unwrap_or_default().iter().enumerate().map(|(t, v)| (t as f64, rational::to_f64(v))).collect()
    };
    let (w, n) = (curve(Series::Gross), curve(Series::Net));
    let ys = w.iter().chain(&n).map(|p| p.1);
    let (lo, hi) = padded(ys.clone().fold(f64::INFINITY, f64::min), ys.fold(f64::NEG_INFINITY, f64::max));
    let root = SVGBackend::new(path, (720, 420)).into_drawing_area();
    root.fill(&WHITE).map_err(|x| e(x.to_string()))?;
    let mut chart = ChartBuilder::on(&root)
        .margin(12)
        .x_label_area_size(32)
        .y_label_area_size(48)
        .build_cartesian_2d(0f64..(ledger.rounds().max(1) as f64), lo..hi)
        .map_err(|x| e(x.to_string()))?;
    chart.configure_mesh().x_desc("t").draw().map_err(|x| e(x.to_string()))?;
    chart.draw_series(LineSeries::new(w, &BLUE)).map_err(|x| e(x.to_string()))?.label("W");
    chart.draw_series(LineSeries::new(n, &RED)).map_err(|x| e(x.to_string()))?.label("N");
    root.present().map_err(|x| e(x.to_string()))
}

/// Empirical `Pr(sup >= x)` and, when present, the certificate bound.
pub fn plot_tail(summary: &SimSummary, path: &Path) -> Result<(), PlotError> {
    let e = err(path);
    let xs: Vec<f64> = summary.tail.iter().map(|t| rational::to_f64(&t.x)).collect();
    let (x_lo, x_hi) =
        (xs.iter().copied().fold(f64::INFINITY, f64::min), xs.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    let (x_lo, x_hi) = if x_lo.is_finite() { padded(x_lo, x_hi) } else { (0.0, 1.0) };
    let root = SVGBackend::new(path, (720, 420)).into_drawing_area();
    root.fill(&WHITE).map_err(|x| e(x.to_string()))?;
    let mut chart = ChartBuilder::on(&root)
        .margin(12)
        .x_label_area_size(32)
        .y_label_area_size(48)
        .build_cartesian_2d(x_lo..x_hi, 0f64..1.05)
        .map_err(|x| e(x.to_string()))?;
    chart.configure_mesh().x_desc("x").draw().map_err(|x| e(x.to_string()))?;
    let mut pts: Vec<(f64, f64)> = xs.iter().zip(&summary.tail).map(|(x, t)| (*x, t.empirical)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    chart.draw_series(LineSeries::new(pts.clone(), &BLUE)).map_err(|x| e(x.to_string()))?;
    chart.draw_series(pts.iter().map(|p| Circle::new(*p, 2, BLUE.filled()))).map_err(|x| e(x.to_string()))?;
    let mut bound: Vec<(f64, f64)> =
        xs.iter().zip(&summary.tail).filter_map(|(x, t)| t.bound.map(|b| (*x, b.min(1.05)))).collect();
    if !bound.is_empty() {
        bound.sort_by(|a, b| a.0.total_cmp(&b.0));
        chart.draw_series(LineSeries::new(bound, &RED)).map_err(|x| e(x.to_string()))?;
    }
    root.present().map_err(|x| e(x.to_string()))
}
