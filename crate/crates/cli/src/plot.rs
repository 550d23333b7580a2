//! Loss-curve SVG: median line and interquartile band per estimator.

use std::fmt::Write as _;

use frechet_core::evaluation::SweepResult;

use crate::error::{CliError, CliResult};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 3] = ["#1f77b4", "#d62728", "#2ca02c"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PlotOptions {
    pub log_x: bool,
    pub log_y: bool,
}

struct Axis {
    log: bool,
    lo: f64,
    hi: f64,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let t: Vec<f64> = values
            .filter(|v| !log || *v > 0.0)
            .map(|v| if log { v.log10() } else { v })
            .collect();
        let mut lo = t.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut hi = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            let pad = if lo.abs() > 0.0 { lo.abs() * 0.1 } else { 1.0 };
            (lo, hi) = (lo - pad, hi + pad);
        }
        Axis { log, lo, hi }
    }

    /// Fraction along the axis, `None` for values a log axis cannot show.
    fn frac(&self, v: f64) -> Option<f64> {
        let t = if self.log {
            if v <= 0.0 {
                return None;
            }
            v.log10()
        } else {
            v
        };
        Some((t - self.lo) / (self.hi - self.lo))
    }

    fn value_at(&self, frac: f64) -> f64 {
        let t = self.lo + frac * (self.hi - self.lo);
        if self.log {
            10f64.powf(t)
        } else {
            t
        }
    }
}

fn px(x: f64) -> String {
    format!("{x:.2}")
}

/// Renders the sweep as a standalone SVG document. Output is a pure
/// function of the result and options.
pub fn render_svg(result: &SweepResult, opts: PlotOptions) -> CliResult<String> {
    let cells = result.aggregates();
    if cells.iter().all(|c| c.completed == 0) {
        return Err(CliError::Runtime("no completed losses to plot".into()));
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let xa = Axis::new(result.n_grid.iter().map(|&n| n as f64), opts.log_x);
    let ya = Axis::new(
        cells.iter().flat_map(|c| [c.q1, c.median, c.q3]).flatten(),
        opts.log_y,
    );
    let sx = |v: f64| xa.frac(v).map(|f| LEFT + f * plot_w);
    let sy = |v: f64| ya.frac(v).map(|f| TOP + (1.0 - f) * plot_h);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = WIDTH,
        h = HEIGHT
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        px(LEFT),
        px(TOP),
        px(plot_w),
        px(plot_h)
    );
    for &n in &result.n_grid {
        if let Some(x) = sx(n as f64) {
            let _ = writeln!(
                s,
                r#"<line x1="{x}" y1="{y0}" x2="{x}" y2="{y1}" stroke="black"/><text x="{x}" y="{ty}" text-anchor="middle">{n}</text>"#,
                x = px(x),
                y0 = px(TOP + plot_h),
                y1 = px(TOP + plot_h + 5.0),
                ty = px(TOP + plot_h + 18.0),
            );
        }
    }
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let y = TOP + (1.0 - f) * plot_h;
        let _ = writeln!(
            s,
            r#"<line x1="{x0}" y1="{y}" x2="{x1}" y2="{y}" stroke="black"/><text x="{tx}" y="{ty}" text-anchor="end">{label:.2e}</text>"#,
            x0 = px(LEFT - 5.0),
            x1 = px(LEFT),
            y = px(y),
            tx = px(LEFT - 8.0),
            ty = px(y + 4.0),
            label = ya.value_at(f),
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">n{}</text>"#,
        px(LEFT + plot_w / 2.0),
        px(HEIGHT - 10.0),
        if opts.log_x { " (log)" } else { "" }
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{y}" text-anchor="middle" transform="rotate(-90 16 {y})">{}loss{}</text>"#,
        result.metric.as_str().to_string() + " ",
        if opts.log_y { " (log)" } else { "" },
        y = px(TOP + plot_h / 2.0),
    );

    for (k, &est) in result.estimators.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<(f64, f64, f64, f64)> = cells
            .iter()
            .filter(|c| c.estimator == est)
            .filter_map(|c| {
                let x = sx(c.n as f64)?;
                Some((x, sy(c.median?)?, sy(c.q1?)?, sy(c.q3?)?))
            })
            .collect();
        let _ = writeln!(s, r#"<g id="series-{est}" class="series">"#);
        if !pts.is_empty() {
            let band: Vec<String> = pts
                .iter()
                .map(|p| format!("{},{}", px(p.0), px(p.3)))
                .chain(pts.iter().rev().map(|p| format!("{},{}", px(p.0), px(p.2))))
                .collect();
            let _ = writeln!(
                s,
                r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
                band.join(" ")
            );
            let line: Vec<String> = pts
                .iter()
                .map(|p| format!("{},{}", px(p.0), px(p.1)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                line.join(" ")
            );
            for p in &pts {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{}" cy="{}" r="3" fill="{color}"/>"#,
                    px(p.0),
                    px(p.1)
                );
            }
        }
        let ly = TOP + 10.0 + 20.0 * k as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{est}</text>"#,
            px(lx),
            px(lx + 25.0),
            px(lx + 32.0),
            px(ly + 4.0),
            y = px(ly),
        );
        let _ = writeln!(s, "</g>");
    }
    let _ = writeln!(s, "</svg>");
    Ok(s)
}
