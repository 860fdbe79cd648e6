//! Minimal SVG writers for scatter plots and line charts.

use std::fmt::Write;

use border_peel::experiments::{LemmaReport, SweepReport};
use border_peel::{PeelingTrace, PointSet};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 48.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
    "#bcbd22", "#7f7f7f",
];
pub const NOISE_COLOR: &str = "#000000";

/// Maps data coordinates into the plotting area.
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    left: f64,
    top: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64), left: f64, top: f64, width: f64, height: f64) -> Self {
        let pad = |(lo, hi): (f64, f64)| {
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 1.0, hi + 1.0)
            }
        };
        Self {
            x: pad(x),
            y: pad(y),
            left,
            top,
            width,
            height,
        }
    }

    fn px(&self, v: f64) -> f64 {
        self.left + (v - self.x.0) / (self.x.1 - self.x.0) * self.width
    }

    fn py(&self, v: f64) -> f64 {
        self.top + self.height - (v - self.y.0) / (self.y.1 - self.y.0) * self.height
    }

    fn axes(&self, out: &mut String, x_label: &str, y_label: &str) {
        let (l, t, r, b) = (
            self.left,
            self.top,
            self.left + self.width,
            self.top + self.height,
        );
        let _ = writeln!(
            out,
            r##"<rect x="{l:.2}" y="{t:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#444"/>"##,
            self.width, self.height
        );
        let _ = writeln!(
            out,
            r#"<text x="{l:.2}" y="{:.2}" font-size="10">{}</text>"#,
            b + 14.0,
            fmt_tick(self.x.0)
        );
        let _ = writeln!(
            out,
            r#"<text x="{r:.2}" y="{:.2}" font-size="10" text-anchor="end">{}</text>"#,
            b + 14.0,
            fmt_tick(self.x.1)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{b:.2}" font-size="10" text-anchor="end">{}</text>"#,
            l - 4.0,
            fmt_tick(self.y.0)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{}</text>"#,
            l - 4.0,
            t + 10.0,
            fmt_tick(self.y.1)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
            (l + r) / 2.0,
            b + 30.0,
            escape(x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
            l - 30.0,
            (t + b) / 2.0,
            l - 30.0,
            (t + b) / 2.0,
            escape(y_label)
        );
    }
}

fn fmt_tick(v: f64) -> String {
    format!("{v:.3}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn header(title: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="20" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    out
}

pub fn cluster_color(label: i64) -> &'static str {
    if label < 0 {
        NOISE_COLOR
    } else {
        PALETTE[label as usize % PALETTE.len()]
    }
}

/// First two coordinates of each point; 1-D data is drawn on a line.
fn plane(points: &PointSet) -> Vec<(f64, f64)> {
    (0..points.len())
        .map(|i| {
            let p = points.point(i);
            (p[0], p.get(1).copied().unwrap_or(0.0))
        })
        .collect()
}

fn scatter_frame(xy: &[(f64, f64)]) -> Frame {
    let bounds = |f: fn(&(f64, f64)) -> f64| {
        xy.iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
    };
    Frame::new(
        bounds(|p| p.0),
        bounds(|p| p.1),
        MARGIN,
        MARGIN,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN,
    )
}

/// One circle per point, filled with `colors[i]`.
pub fn scatter(points: &PointSet, colors: &[&str], radii: &[f64], title: &str) -> String {
    let xy = plane(points);
    let frame = scatter_frame(&xy);
    let mut out = header(title);
    frame.axes(&mut out, "x0", if points.dim() > 1 { "x1" } else { "" });
    for (i, (x, y)) in xy.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="{}" fill="{}"/>"#,
            frame.px(*x),
            frame.py(*y),
            radii[i],
            colors[i]
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn clusters(points: &PointSet, labels: &[i64], title: &str) -> String {
    let colors: Vec<&str> = labels.iter().map(|&l| cluster_color(l)).collect();
    scatter(points, &colors, &vec![2.5; points.len()], title)
}

/// Snapshot of iteration `t` (1-based): earlier layers faded, the current
/// border layer highlighted, the remaining active points in gray.
pub fn peel_snapshot(points: &PointSet, trace: &PeelingTrace, t: usize) -> String {
    let n = points.len();
    let mut colors = vec!["#555555"; n];
    let mut radii = vec![2.5; n];
    for rec in &trace.iterations[..t - 1] {
        for &p in &rec.peeled {
            colors[p] = "#dddddd";
            radii[p] = 1.5;
        }
    }
    for &p in &trace.iterations[t - 1].peeled {
        colors[p] = "#d62728";
        radii[p] = 3.0;
    }
    let rec = &trace.iterations[t - 1];
    scatter(
        points,
        &colors,
        &radii,
        &format!(
            "iteration {t}: {} of {} active points peeled",
            rec.peeled.len(),
            rec.active_before
        ),
    )
}

fn line_chart_frame(
    series: &[Vec<(f64, f64)>],
    left: f64,
    top: f64,
    width: f64,
    height: f64,
) -> Frame {
    let all = series.iter().flatten();
    let (mut x, mut y) = (
        (f64::INFINITY, f64::NEG_INFINITY),
        (f64::INFINITY, f64::NEG_INFINITY),
    );
    for &(a, b) in all {
        if b.is_finite() {
            x = (x.0.min(a), x.1.max(a));
            y = (y.0.min(b), y.1.max(b));
        }
    }
    Frame::new(x, y, left, top, width, height)
}

fn polyline(out: &mut String, frame: &Frame, pts: &[(f64, f64)], color: &str) {
    let coords: Vec<String> = pts
        .iter()
        .filter(|p| p.1.is_finite())
        .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
        coords.join(" ")
    );
}

fn legend(out: &mut String, x: f64, y: f64, entries: &[(&str, String)]) {
    for (i, (color, text)) in entries.iter().enumerate() {
        let yy = y + 14.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{x:.2}" y="{:.2}" width="10" height="10" fill="{color}"/>"#,
            yy - 9.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{yy:.2}" font-size="11">{}</text>"#,
            x + 14.0,
            escape(text)
        );
    }
}

/// Empirical per-bin means as markers, the closed form as two curves (bin
/// average and centre value).
pub fn lemma(report: &LemmaReport) -> String {
    let empirical: Vec<(f64, f64)> = report
        .bins
        .iter()
        .map(|b| (b.center, b.empirical))
        .collect();
    let analytic: Vec<(f64, f64)> = report.bins.iter().map(|b| (b.center, b.analytic)).collect();
    let center: Vec<(f64, f64)> = report
        .bins
        .iter()
        .map(|b| (b.center, b.analytic_center))
        .collect();
    let frame = line_chart_frame(
        &[empirical.clone(), analytic.clone(), center.clone()],
        MARGIN + 20.0,
        MARGIN,
        WIDTH - 2.0 * MARGIN - 20.0,
        HEIGHT - 2.0 * MARGIN,
    );
    let mut out = header(&format!(
        "initial density influence, n = {}, {} trials",
        report.n, report.trials
    ));
    frame.axes(&mut out, "x", "mean b");
    polyline(&mut out, &frame, &analytic, PALETTE[1]);
    polyline(&mut out, &frame, &center, PALETTE[2]);
    for &(x, y) in empirical.iter().filter(|p| p.1.is_finite()) {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
            frame.px(x),
            frame.py(y),
            PALETTE[0]
        );
    }
    legend(
        &mut out,
        WIDTH - 2.0 * MARGIN - 90.0,
        MARGIN + 16.0,
        &[
            (PALETTE[0], "empirical".into()),
            (PALETTE[1], "closed form, bin mean".into()),
            (PALETTE[2], "closed form, centre".into()),
        ],
    );
    out.push_str("</svg>\n");
    out
}

/// ARI and AMI panels against the threshold offset, one line per peel
/// fraction, with one-standard-deviation bars.
pub fn sweep(report: &SweepReport) -> String {
    let mut fractions: Vec<f64> = report.cells.iter().map(|c| c.peel_fraction).collect();
    fractions.sort_by(f64::total_cmp);
    fractions.dedup();
    let mut out = header("score versus threshold offset");
    let panel_w = (WIDTH - 3.0 * MARGIN) / 2.0;
    for (p, (name, pick)) in [
        (
            "ARI",
            (|c: &border_peel::experiments::SweepCell| (c.ari_mean, c.ari_std))
                as fn(&_) -> (f64, f64),
        ),
        ("AMI", |c| (c.ami_mean, c.ami_std)),
    ]
    .into_iter()
    .enumerate()
    {
        let series: Vec<Vec<(f64, f64)>> = fractions
            .iter()
            .map(|&f| {
                report
                    .cells
                    .iter()
                    .filter(|c| c.peel_fraction == f)
                    .flat_map(|c| {
                        let (m, s) = pick(c);
                        [(c.lambda_offset, m - s), (c.lambda_offset, m + s)]
                    })
                    .collect()
            })
            .collect();
        let frame = line_chart_frame(
            &series,
            MARGIN + p as f64 * (panel_w + MARGIN),
            MARGIN,
            panel_w,
            HEIGHT - 2.0 * MARGIN - 30.0,
        );
        frame.axes(&mut out, "threshold offset", name);
        for (s, &f) in fractions.iter().enumerate() {
            let color = PALETTE[s % PALETTE.len()];
            let mut line = Vec::new();
            for c in report.cells.iter().filter(|c| c.peel_fraction == f) {
                let (m, sd) = pick(c);
                let x = frame.px(c.lambda_offset);
                let _ = writeln!(
                    out,
                    r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{color}"/>"#,
                    frame.py(m - sd),
                    frame.py(m + sd)
                );
                line.push((c.lambda_offset, m));
            }
            polyline(&mut out, &frame, &line, color);
        }
    }
    let entries: Vec<(&str, String)> = fractions
        .iter()
        .enumerate()
        .map(|(s, f)| (PALETTE[s % PALETTE.len()], format!("peel fraction {f}")))
        .collect();
    legend(&mut out, MARGIN, HEIGHT - 28.0, &entries);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_circle_per_point() {
        let points = PointSet::from_rows(&[[0.0, 0.0], [1.0, 2.0], [3.0, -1.0]]).unwrap();
        let svg = clusters(&points, &[0, -1, 1], "t");
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains(&format!(r#"fill="{NOISE_COLOR}""#)));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn degenerate_extent_stays_finite() {
        let points = PointSet::from_scalars(&[2.0, 2.0]).unwrap();
        let svg = clusters(&points, &[0, 0], "flat");
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }

    #[test]
    fn titles_are_escaped() {
        assert!(header("a < b & c").contains("a &lt; b &amp; c"));
    }
}
