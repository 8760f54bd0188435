//! Minimal deterministic SVG line charts for the report figures.
//!
//! Output is plain text assembled with fixed-precision formatting, so a
//! rerun over identical data produces byte-identical files.

use std::fmt::Write;

pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub points: Vec<(f64, f64)>,
}

pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Log10 y axis; values are clamped to `log_floor` first.
    pub log_y: bool,
    pub log_floor: f64,
    pub series: Vec<Series>,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

impl Chart {
    pub fn render(&self) -> String {
        let (x0, x1) = self.x_range();
        let (y0, y1) = self.y_range();
        let plot_w = WIDTH - MARGIN_L - MARGIN_R;
        let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
        let px = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * plot_w;
        let py = |y: f64| {
            let v = if self.log_y {
                self.to_log(y)
            } else {
                y
            };
            MARGIN_T + (y1 - v) / (y1 - y0) * plot_h
        };

        let mut out = String::new();
        let _ = write!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = write!(
            out,
            r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/><text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );

        // Frame.
        let _ = write!(
            out,
            r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w:.1}" height="{plot_h:.1}" fill="none" stroke="black"/>"#
        );

        // X ticks: 6 evenly spaced.
        for k in 0..=5 {
            let x = x0 + (x1 - x0) * k as f64 / 5.0;
            let sx = px(x);
            let _ = write!(
                out,
                r#"<line x1="{sx:.1}" y1="{:.1}" x2="{sx:.1}" y2="{:.1}" stroke="black"/><text x="{sx:.1}" y="{:.1}" text-anchor="middle">{x:.2}</text>"#,
                MARGIN_T + plot_h,
                MARGIN_T + plot_h + 5.0,
                MARGIN_T + plot_h + 20.0
            );
        }
        // Y ticks: decades when log, 5 linear steps otherwise.
        if self.log_y {
            let lo = y0.ceil() as i64;
            let hi = y1.floor() as i64;
            for d in lo..=hi {
                let sy = MARGIN_T + (y1 - d as f64) / (y1 - y0) * plot_h;
                let _ = write!(
                    out,
                    r#"<line x1="{:.1}" y1="{sy:.1}" x2="{MARGIN_L}" y2="{sy:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">1e{d}</text>"#,
                    MARGIN_L - 5.0,
                    MARGIN_L - 8.0,
                    sy + 4.0
                );
            }
        } else {
            for k in 0..=5 {
                let y = y0 + (y1 - y0) * k as f64 / 5.0;
                let sy = MARGIN_T + (y1 - y) / (y1 - y0) * plot_h;
                let _ = write!(
                    out,
                    r#"<line x1="{:.1}" y1="{sy:.1}" x2="{MARGIN_L}" y2="{sy:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{y:.2}</text>"#,
                    MARGIN_L - 5.0,
                    MARGIN_L - 8.0,
                    sy + 4.0
                );
            }
        }

        // Axis labels.
        let _ = write!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text><text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            MARGIN_L + plot_w / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label),
            MARGIN_T + plot_h / 2.0,
            MARGIN_T + plot_h / 2.0,
            escape(&self.y_label)
        );

        // Series and legend.
        for (k, s) in self.series.iter().enumerate() {
            let mut path = String::new();
            for &(x, y) in &s.points {
                let _ = write!(path, "{:.2},{:.2} ", px(x), py(y));
            }
            let _ = write!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                path.trim_end(),
                s.color
            );
            let ly = MARGIN_T + 14.0 + 16.0 * k as f64;
            let _ = write!(
                out,
                r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="1.5"/><text x="{:.1}" y="{:.1}">{}</text>"#,
                MARGIN_L + plot_w - 150.0,
                MARGIN_L + plot_w - 120.0,
                s.color,
                MARGIN_L + plot_w - 114.0,
                ly + 4.0,
                escape(&s.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }

    fn to_log(&self, y: f64) -> f64 {
        y.max(self.log_floor).log10()
    }

    fn x_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in &self.series {
            for &(x, _) in &s.points {
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
        if !(lo < hi) {
            (lo.min(0.0), lo.min(0.0) + 1.0)
        } else {
            (lo, hi)
        }
    }

    fn y_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in &self.series {
            for &(_, y) in &s.points {
                let v = if self.log_y { self.to_log(y) } else { y };
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !(lo < hi) {
            (lo - 0.5, lo + 0.5)
        } else {
            (lo, hi)
        }
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
