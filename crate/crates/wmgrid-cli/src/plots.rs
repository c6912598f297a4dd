//! Static SVG figures drawn from the run artifacts.

use std::path::Path;

use plotters::prelude::*;

use crate::artifacts::{SignalTable, WindowRow};

const COLORS: [RGBColor; 4] = [RGBColor(31, 119, 180), RGBColor(214, 39, 40), RGBColor(44, 160, 44), RGBColor(148, 103, 189)];

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
    dashed: bool,
}

fn bounds(series: &[Series]) -> ((f64, f64), (f64, f64)) {
    let mut x = (f64::INFINITY, f64::NEG_INFINITY);
    let mut y = (f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for &(a, b) in &s.points {
            if a.is_finite() && b.is_finite() {
                x = (x.0.min(a), x.1.max(a));
                y = (y.0.min(b), y.1.max(b));
            }
        }
    }
    if !x.0.is_finite() {
        return ((0.0, 1.0), (0.0, 1.0));
    }
    if x.1 <= x.0 {
        x.1 = x.0 + 1.0;
    }
    let pad = ((y.1 - y.0).abs() * 0.05).max(f64::MIN_POSITIVE.sqrt());
    (x, (y.0 - pad, y.1 + pad))
}

fn draw(path: &Path, title: &str, y_label: &str, series: &[Series]) -> anyhow::Result<()> {
    let root = SVGBackend::new(path, (900, 480)).into_drawing_area();
    root.fill(&WHITE)?;
    let ((x0, x1), (y0, y1)) = bounds(series);
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(x0..x1, y0..y1)?;
    chart
        .configure_mesh()
        .x_desc("time [s]")
        .y_desc(y_label)
        .y_label_formatter(&|v| format!("{v:.2e}"))
        .draw()?;
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let style = ShapeStyle::from(&color).stroke_width(1);
        if s.dashed {
            chart
                .draw_series(DashedLineSeries::new(s.points.iter().copied(), 6, 4, style))?
                .label(s.label.clone())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color));
        } else {
            chart
                .draw_series(LineSeries::new(s.points.iter().copied(), style))?
                .label(s.label.clone())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color));
        }
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()?;
    root.present()?;
    Ok(())
}

/// Reported bus-voltage deviation of every DGU.
pub fn voltage_plot(path: &Path, signals: &SignalTable) -> anyhow::Result<()> {
    let time = signals.column("time").unwrap_or_default();
    let mut series = Vec::new();
    for i in 1.. {
        let Some(v) = signals.column(&format!("actual_v_{i}")) else {
            break;
        };
        series.push(Series {
            label: format!("dV DGU{i}"),
            points: time.iter().copied().zip(v).collect(),
            dashed: false,
        });
    }
    draw(path, "Voltage deviation", "dV [pu]", &series)
}

/// `chi1` per window end time with its threshold.
pub fn chi1_plot(path: &Path, windows: &[WindowRow], thresholds: &[(usize, f64)]) -> anyhow::Result<()> {
    let mut dgus: Vec<usize> = windows.iter().map(|w| w.dgu).collect();
    dgus.sort_unstable();
    dgus.dedup();
    let (t0, t1) = windows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), w| (a.min(w.time), b.max(w.time)));
    let mut series = Vec::new();
    for d in &dgus {
        series.push(Series {
            label: format!("chi1 DGU{d}"),
            points: windows.iter().filter(|w| w.dgu == *d).map(|w| (w.time, w.chi1)).collect(),
            dashed: false,
        });
    }
    for (d, th) in thresholds {
        if dgus.contains(d) && t0.is_finite() {
            series.push(Series {
                label: format!("threshold DGU{d}"),
                points: vec![(t0, *th), (t1, *th)],
                dashed: true,
            });
        }
    }
    draw(path, "Attack indicator chi1", "chi1", &series)
}
