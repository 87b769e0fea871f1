//! SVG figures: series overlays with detected/ground-truth markers, training
//! loss curves and the confusion matrix.
//!
//! Marker elements carry ids `det-<n>` (detected, red) and `gt-<n>` (ground
//! truth, green) so they can be counted in the output.

use std::fmt::Write as _;

use crate::evaluation::ConfusionMatrix;
use crate::training::TrainLog;

const W: f64 = 960.0;
const H: f64 = 360.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Formats a coordinate with two decimals so output is stable.
fn c(v: f64) -> String {
    format!("{v:.2}")
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        let (y0, y1) = if y1 > y0 { (y0, y1) } else { (y0 - 1.0, y0 + 1.0) };
        let x1 = if x1 > x0 { x1 } else { x0 + 1.0 };
        Frame { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, esc(title));
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (l, r, t, b) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(
        out,
        r##"<g id="axes" stroke="#444" fill="none"><line x1="{l}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{l}" y1="{t}" x2="{l}" y2="{b}"/></g>"##
    );
    for k in 0..=4 {
        let xv = f.x0 + (f.x1 - f.x0) * k as f64 / 4.0;
        let yv = f.y0 + (f.y1 - f.y0) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text class="xtick" x="{}" y="{}" text-anchor="middle">{}</text>"#,
            c(f.px(xv)),
            b + 16.0,
            xv.round()
        );
        let _ = writeln!(
            out,
            r#"<text class="ytick" x="{}" y="{}" text-anchor="end">{:.2}</text>"#,
            l - 6.0,
            c(f.py(yv) + 4.0),
            yv
        );
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, esc(xlabel));
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        esc(ylabel)
    );
}

fn polyline(out: &mut String, f: &Frame, pts: impl Iterator<Item = (f64, f64)>, color: &str, id: &str) {
    let mut d = String::new();
    for (x, y) in pts {
        if y.is_finite() {
            let _ = write!(d, "{},{} ", c(f.px(x)), c(f.py(y)));
        }
    }
    let _ = writeln!(
        out,
        r#"<polyline id="{id}" fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
        d.trim_end()
    );
}

/// A half-open span `[start, end)` of sample indices.
pub type Span = (usize, usize);

/// Series overlay. Detected spans are drawn as red bands along the top of
/// the plot area, ground-truth spans as green bands along the bottom. With
/// `range`, only samples in `[from, to]` are shown and markers are clipped.
pub fn series_svg(title: &str, values: &[f64], detected: &[Span], truth: &[Span], range: Option<(usize, usize)>) -> String {
    let n = values.len();
    let (from, to) = range.unwrap_or((0, n.saturating_sub(1)));
    let to = to.min(n.saturating_sub(1));
    let shown: Vec<(f64, f64)> = (from..=to.max(from))
        .filter(|&i| i < n)
        .map(|i| (i as f64, values[i]))
        .collect();
    let lo = shown.iter().map(|p| p.1).filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min);
    let hi = shown.iter().map(|p| p.1).filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 1.0) };
    let pad = (hi - lo).max(1e-9) * 0.08;
    let f = Frame::new(from as f64, to as f64, lo - pad, hi + pad);

    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &f, "sample", "normalized consumption");
    let band_h = 8.0;
    let draw = |out: &mut String, spans: &[Span], prefix: &str, color: &str, y: f64| {
        let mut k = 0;
        for &(s, e) in spans {
            let s = s.max(from);
            let e = e.min(to + 1);
            if s >= e {
                continue;
            }
            let x0 = f.px(s as f64);
            let x1 = f.px(e as f64 - 1.0).max(x0 + 2.0);
            let _ = writeln!(
                out,
                r#"<rect id="{prefix}-{k}" x="{}" y="{y}" width="{}" height="{band_h}" fill="{color}" fill-opacity="0.75"/>"#,
                c(x0),
                c(x1 - x0)
            );
            let _ = writeln!(
                out,
                r#"<rect class="{prefix}-shade" x="{}" y="{TOP}" width="{}" height="{}" fill="{color}" fill-opacity="0.08"/>"#,
                c(x0),
                c(x1 - x0),
                H - TOP - BOTTOM
            );
            k += 1;
        }
    };
    draw(&mut out, detected, "det", "#d62728", TOP - band_h - 2.0);
    draw(&mut out, truth, "gt", "#2ca02c", H - BOTTOM + 2.0);
    polyline(&mut out, &f, shown.into_iter(), "#1f77b4", "series");
    let _ = writeln!(
        out,
        r##"<g id="legend"><rect x="{}" y="6" width="10" height="10" fill="#d62728"/><text x="{}" y="15">detected</text><rect x="{}" y="6" width="10" height="10" fill="#2ca02c"/><text x="{}" y="15">ground truth</text></g>"##,
        W - 230.0,
        W - 216.0,
        W - 140.0,
        W - 126.0
    );
    out.push_str("</svg>\n");
    out
}

/// Per-iteration discriminator and generator losses.
pub fn loss_svg(log: &TrainLog) -> String {
    let it = &log.iterations;
    let x1 = it.last().map_or(1.0, |r| r.iteration as f64);
    let x0 = it.first().map_or(0.0, |r| r.iteration as f64);
    let vals = it.iter().flat_map(|r| [r.d_loss as f64, r.g_loss as f64]).filter(|v| v.is_finite());
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (lo, hi) = if lo.is_finite() { (lo.min(0.0), hi) } else { (0.0, 1.0) };
    let f = Frame::new(x0, x1, lo, hi * 1.05);
    let mut out = String::new();
    header(&mut out, "Training losses");
    axes(&mut out, &f, "iteration", "loss");
    polyline(&mut out, &f, it.iter().map(|r| (r.iteration as f64, r.d_loss as f64)), "#1f77b4", "d-loss");
    polyline(&mut out, &f, it.iter().map(|r| (r.iteration as f64, r.g_loss as f64)), "#ff7f0e", "g-loss");
    let _ = writeln!(
        out,
        r##"<g id="legend"><rect x="{}" y="6" width="10" height="10" fill="#1f77b4"/><text x="{}" y="15">discriminator</text><rect x="{}" y="6" width="10" height="10" fill="#ff7f0e"/><text x="{}" y="15">generator</text></g>"##,
        W - 250.0,
        W - 236.0,
        W - 140.0,
        W - 126.0
    );
    out.push_str("</svg>\n");
    out
}

/// 2x2 confusion matrix heat map (rows actual, columns predicted).
pub fn confusion_svg(cm: &ConfusionMatrix) -> String {
    let cells = [
        ("anomalous", "anomalous", cm.tp),
        ("anomalous", "normal", cm.fn_),
        ("normal", "anomalous", cm.fp),
        ("normal", "normal", cm.tn),
    ];
    let max = cells.iter().map(|c| c.2).max().unwrap_or(0).max(1) as f64;
    let size = 120.0;
    let (ox, oy) = (200.0, 70.0);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="520" height="360" viewBox="0 0 520 360" font-family="sans-serif" font-size="13">"#
    );
    out.push_str("<rect width=\"520\" height=\"360\" fill=\"white\"/>\n");
    out.push_str("<text x=\"260\" y=\"30\" text-anchor=\"middle\" font-size=\"15\">Confusion matrix</text>\n");
    for (i, (actual, predicted, n)) in cells.iter().enumerate() {
        let (r, col) = (i / 2, i % 2);
        let shade = 0.15 + 0.8 * (*n as f64 / max);
        let x = ox + col as f64 * size;
        let y = oy + r as f64 * size;
        let _ = writeln!(
            out,
            r##"<rect id="cell-{actual}-{predicted}" x="{x}" y="{y}" width="{size}" height="{size}" fill="#1f77b4" fill-opacity="{shade:.3}" stroke="#333"/>"##
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="18">{n}</text>"#,
            x + size / 2.0,
            y + size / 2.0 + 6.0
        );
    }
    for (k, name) in ["anomalous", "normal"].iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{name}</text>"#,
            ox + size * (k as f64 + 0.5),
            oy - 8.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end">{name}</text>"#,
            ox - 8.0,
            oy + size * (k as f64 + 0.5) + 4.0
        );
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">predicted</text>"#, ox + size, oy + 2.0 * size + 30.0);
    let _ = writeln!(
        out,
        r#"<text x="60" y="{}" text-anchor="middle" transform="rotate(-90 60 {})">actual</text>"#,
        oy + size,
        oy + size
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(svg: &str, prefix: &str) -> usize {
        svg.matches(&format!("id=\"{prefix}-")).count()
    }

    #[test]
    fn no_detections_no_markers() {
        let v: Vec<f64> = (0..100).map(|i| (i as f64 * 0.3).sin()).collect();
        let svg = series_svg("b", &v, &[], &[], None);
        assert_eq!(count(&svg, "det"), 0);
        assert!(svg.contains("id=\"series\""));
    }

    #[test]
    fn one_marker_per_span() {
        let v = vec![0.0; 300];
        let svg = series_svg("b", &v, &[(0, 60), (120, 180), (240, 300)], &[(120, 180)], None);
        assert_eq!(count(&svg, "det"), 3);
        assert_eq!(count(&svg, "gt"), 1);
        assert_eq!(svg, series_svg("b", &v, &[(0, 60), (120, 180), (240, 300)], &[(120, 180)], None));
    }

    #[test]
    fn zoomed_axis_spans_requested_range() {
        let v: Vec<f64> = (0..600).map(|i| i as f64).collect();
        let svg = series_svg("b", &v, &[(0, 60), (300, 360)], &[], Some((200, 400)));
        assert!(svg.contains(">200</text>") && svg.contains(">400</text>"));
        assert_eq!(count(&svg, "det"), 1);
    }

    #[test]
    fn confusion_cells() {
        let svg = confusion_svg(&ConfusionMatrix { tp: 3, fp: 1, fn_: 2, tn: 9 });
        assert_eq!(count(&svg, "cell"), 4);
        assert!(svg.contains(">9</text>"));
    }
}
