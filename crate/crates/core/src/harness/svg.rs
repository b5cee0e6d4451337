//! Minimal log-log line plots written as standalone SVG.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 60.0;
const COLORS: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Straight line `y = anchor_y (x / anchor_x)^slope` drawn dashed.
#[derive(Debug, Clone, PartialEq)]
pub struct GuideLine {
    pub label: String,
    pub slope: f64,
    pub anchor: (f64, f64),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LogLogPlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<(String, Vec<f64>, Vec<f64>)>,
    pub guides: Vec<GuideLine>,
}

fn decade_ticks(lo: f64, hi: f64) -> Vec<f64> {
    (lo.floor() as i32..=hi.ceil() as i32).map(f64::from).filter(|e| *e >= lo && *e <= hi).collect()
}

impl LogLogPlot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), ..Default::default() }
    }

    /// Adds a series; nonpositive points are dropped.
    pub fn series(mut self, name: &str, xs: &[f64], ys: &[f64]) -> Self {
        let (x, y) = xs.iter().zip(ys).filter(|(x, y)| **x > 0.0 && **y > 0.0).map(|(x, y)| (*x, *y)).unzip();
        self.series.push((name.into(), x, y));
        self
    }

    pub fn guide(mut self, label: &str, slope: f64, anchor: (f64, f64)) -> Self {
        self.guides.push(GuideLine { label: label.into(), slope, anchor });
        self
    }

    fn bounds(&self) -> Option<(f64, f64, f64, f64)> {
        let xs = self.series.iter().flat_map(|s| s.1.iter());
        let ys = self.series.iter().flat_map(|s| s.2.iter());
        let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
        for x in xs {
            x0 = x0.min(x.log10());
            x1 = x1.max(x.log10());
        }
        let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
        for y in ys {
            y0 = y0.min(y.log10());
            y1 = y1.max(y.log10());
        }
        if !(x0.is_finite() && y0.is_finite()) {
            return None;
        }
        let pad = |a: f64, b: f64| if b - a < 1e-9 { (a - 0.5, b + 0.5) } else { (a, b) };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        Some((x0, x1, y0, y1))
    }

    pub fn to_svg(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, esc(&self.title));
        let Some((x0, x1, y0, y1)) = self.bounds() else {
            s.push_str("</svg>\n");
            return s;
        };
        let (pw, ph) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
        let px = |lx: f64| MARGIN + (lx - x0) / (x1 - x0) * pw;
        let py = |ly: f64| HEIGHT - MARGIN - (ly - y0) / (y1 - y0) * ph;
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for e in decade_ticks(x0, x1) {
            let x = px(e);
            let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{MARGIN}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/>"##, HEIGHT - MARGIN);
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{e}</text>"#, HEIGHT - MARGIN + 16.0);
        }
        for e in decade_ticks(y0, y1) {
            let y = py(e);
            let _ = writeln!(s, r##"<line x1="{MARGIN}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##, WIDTH - MARGIN);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"#, MARGIN - 6.0, y + 4.0);
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 15.0, esc(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            esc(&self.y_label)
        );
        let mut legend = Vec::new();
        for (i, (name, xs, ys)) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let pts: Vec<String> =
                xs.iter().zip(ys).map(|(x, y)| format!("{:.2},{:.2}", px(x.log10()), py(y.log10()))).collect();
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
            legend.push((name.clone(), color, false));
        }
        for (i, g) in self.guides.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let (ax, ay) = (g.anchor.0.log10(), g.anchor.1.log10());
            let ly = |lx: f64| ay + g.slope * (lx - ax);
            let (mut a, mut b) = (x0, x1);
            // Clip to the vertical range of the panel.
            for (lx, keep_low) in [(x0, true), (x1, false)] {
                let v = ly(lx);
                if v > y1 || v < y0 {
                    let target = if v > y1 { y1 } else { y0 };
                    let cut = ax + (target - ay) / g.slope;
                    if keep_low { a = cut.max(x0) } else { b = cut.min(x1) }
                }
            }
            if a < b {
                let _ = writeln!(
                    s,
                    r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-dasharray="6 4"/>"#,
                    px(a),
                    py(ly(a)),
                    px(b),
                    py(ly(b))
                );
            }
            legend.push((g.label.clone(), color, true));
        }
        for (i, (label, color, dashed)) in legend.iter().enumerate() {
            let y = MARGIN + 16.0 + 16.0 * i as f64;
            let x = WIDTH - MARGIN - 190.0;
            let dash = if *dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(s, r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}"{dash}/>"#, x + 24.0);
            let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, x + 30.0, y + 4.0, esc(label));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn esc(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_series_and_guides() {
        let xs: Vec<f64> = (1..=50).map(|k| f64::from(k) * 10.0).collect();
        let ys: Vec<f64> = xs.iter().map(|t| t.powf(-0.5)).collect();
        let svg = LogLogPlot::new("decay <L2>", "t", "norm")
            .series("L2", &xs, &ys)
            .guide("slope -0.5", -0.5, (10.0, 10f64.powf(-0.5)))
            .to_svg();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.contains("decay &lt;L2&gt;"));
    }

    #[test]
    fn empty_plot_is_valid() {
        let svg = LogLogPlot::new("empty", "t", "v").series("zero", &[1.0], &[0.0]).to_svg();
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
