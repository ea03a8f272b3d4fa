//! Minimal SVG line charts.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Axis {
    label: String,
    log: bool,
}

impl Axis {
    pub fn linear(label: &str) -> Self {
        Self { label: label.to_string(), log: false }
    }

    pub fn log(label: &str) -> Self {
        Self { label: label.to_string(), log: true }
    }

    /// Non-positive values on a log axis map to NaN and are drawn on the
    /// bottom edge.
    fn map(&self, v: f64) -> f64 {
        if self.log {
            if v > 0.0 { v.log10() } else { f64::NAN }
        } else {
            v
        }
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn tick_label(v: f64, log: bool) -> String {
    if log {
        format!("1e{}", v.round() as i64)
    } else if v.abs() >= 1e4 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{v:.0}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn line_chart(title: &str, series: &[Series], x_axis: Axis, y_axis: Axis) -> String {
    let (x0, x1) = range(series.iter().flat_map(|s| s.points.iter().map(|p| x_axis.map(p.0))));
    let (mut y0, mut y1) = range(series.iter().flat_map(|s| s.points.iter().map(|p| y_axis.map(p.1))));
    if y_axis.log {
        y0 = y0.floor();
        y1 = y1.ceil().max(y0 + 1.0);
    }
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| MARGIN_TOP + (1.0 - (y - y0) / (y1 - y0)) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );

    let ticks = 5;
    for i in 0..=ticks {
        let fx = x0 + (x1 - x0) * i as f64 / ticks as f64;
        let px = sx(fx);
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.1}" y1="{:.1}" x2="{px:.1}" y2="{:.1}" stroke="black"/><text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            MARGIN_TOP + plot_h,
            MARGIN_TOP + plot_h + 5.0,
            MARGIN_TOP + plot_h + 18.0,
            tick_label(fx, x_axis.log)
        );
    }
    let y_ticks: Vec<f64> = if y_axis.log {
        let step = ((y1 - y0) / 6.0).ceil().max(1.0);
        (0..).map(|i| y0 + step * i as f64).take_while(|&v| v <= y1 + 1e-9).collect()
    } else {
        (0..=ticks).map(|i| y0 + (y1 - y0) * i as f64 / ticks as f64).collect()
    };
    for fy in y_ticks {
        let py = sy(fy);
        let _ = writeln!(
            svg,
            r##"<line x1="{MARGIN_LEFT}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="#dddddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            MARGIN_LEFT + plot_w,
            MARGIN_LEFT - 6.0,
            py + 4.0,
            tick_label(fy, y_axis.log)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 10.0,
        escape(&x_axis.label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        escape(&y_axis.label)
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| {
                let my = y_axis.map(y);
                format!("{:.2},{:.2}", sx(x_axis.map(x)), sy(if my.is_finite() { my } else { y0 }))
            })
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
            pts.join(" "),
            escape(&s.label)
        );
    }
    // Legends get crowded quickly; show at most eight entries.
    for (i, s) in series.iter().take(PALETTE.len()).enumerate() {
        let y = MARGIN_TOP + 14.0 + 16.0 * i as f64;
        let x = MARGIN_LEFT + plot_w - 110.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            y - 4.0,
            x + 18.0,
            y - 4.0,
            PALETTE[i],
            x + 24.0,
            y,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}
