//! Minimal hand-written SVG emitters: a two-class scatter and ROC
//! polylines. Output bytes are a pure function of the inputs (no
//! timestamps), so identical runs emit identical files.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 50.0;

const POSITIVE_COLOR: &str = "#d62728";
const NEGATIVE_COLOR: &str = "#1f77b4";
const CURVE_COLORS: [&str; 7] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
];

fn fmt(v: f64) -> String {
    format!("{v:.3}")
}

/// Scatter plot of 2-D points with a positive/negative class flag.
pub fn scatter_svg(points: &[(f64, f64, bool)], title: &str) -> String {
    let (mut lo_x, mut hi_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut lo_y, mut hi_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y, _) in points {
        lo_x = lo_x.min(x);
        hi_x = hi_x.max(x);
        lo_y = lo_y.min(y);
        hi_y = hi_y.max(y);
    }
    if points.is_empty() || lo_x == hi_x {
        lo_x -= 1.0;
        hi_x += 1.0;
    }
    if points.is_empty() || lo_y == hi_y {
        lo_y -= 1.0;
        hi_y += 1.0;
    }
    let sx = |x: f64| MARGIN + (x - lo_x) / (hi_x - lo_x) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - lo_y) / (hi_y - lo_y) * (HEIGHT - 2.0 * MARGIN);

    let mut out = svg_open();
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">{}</text>",
        fmt(WIDTH / 2.0),
        title
    );
    frame(&mut out);
    for &(x, y, positive) in points {
        let color = if positive { POSITIVE_COLOR } else { NEGATIVE_COLOR };
        let _ = writeln!(
            out,
            "<circle cx=\"{}\" cy=\"{}\" r=\"2\" fill=\"{}\" fill-opacity=\"0.7\"/>",
            fmt(sx(x)),
            fmt(sy(y)),
            color
        );
    }
    legend_entry(&mut out, 0, POSITIVE_COLOR, "positive");
    legend_entry(&mut out, 1, NEGATIVE_COLOR, "negative");
    out.push_str("</svg>\n");
    out
}

/// ROC chart: one polyline per (label, curve points, auc) triple plus the
/// chance diagonal.
pub fn roc_svg(curves: &[(String, Vec<(f64, f64)>, f64)]) -> String {
    let sx = |x: f64| MARGIN + x * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - y * (HEIGHT - 2.0 * MARGIN);
    let mut out = svg_open();
    frame(&mut out);
    let _ = writeln!(
        out,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#999999\" stroke-dasharray=\"4 4\"/>",
        fmt(sx(0.0)),
        fmt(sy(0.0)),
        fmt(sx(1.0)),
        fmt(sy(1.0))
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">false positive rate</text>",
        fmt(WIDTH / 2.0),
        fmt(HEIGHT - 12.0)
    );
    let _ = writeln!(
        out,
        "<text x=\"16\" y=\"{}\" transform=\"rotate(-90 16 {})\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">true positive rate</text>",
        fmt(HEIGHT / 2.0),
        fmt(HEIGHT / 2.0)
    );
    for (i, (label, points, auc)) in curves.iter().enumerate() {
        let color = CURVE_COLORS[i % CURVE_COLORS.len()];
        let path: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{},{}", fmt(sx(x)), fmt(sy(y))))
            .collect();
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>",
            color,
            path.join(" ")
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{}\">{} (AUC={:.3})</text>",
            fmt(MARGIN + 12.0),
            fmt(MARGIN + 18.0 + 16.0 * i as f64),
            color,
            label,
            auc
        );
    }
    out.push_str("</svg>\n");
    out
}

fn svg_open() -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
        WIDTH as usize, HEIGHT as usize, WIDTH as usize, HEIGHT as usize
    )
}

fn frame(out: &mut String) {
    let _ = writeln!(
        out,
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333333\"/>",
        fmt(MARGIN),
        fmt(MARGIN),
        fmt(WIDTH - 2.0 * MARGIN),
        fmt(HEIGHT - 2.0 * MARGIN)
    );
}

fn legend_entry(out: &mut String, slot: usize, color: &str, label: &str) {
    let y = MARGIN + 18.0 + 16.0 * slot as f64;
    let _ = writeln!(
        out,
        "<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"{}\"/>",
        fmt(WIDTH - MARGIN - 90.0),
        fmt(y - 4.0),
        color
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
        fmt(WIDTH - MARGIN - 80.0),
        fmt(y),
        label
    );
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scatter_is_deterministic_and_wellformed() {
        let pts = vec![(0.0, 0.0, true), (1.0, 2.0, false), (-1.0, 0.5, true)];
        let a = scatter_svg(&pts, "projection");
        let b = scatter_svg(&pts, "projection");
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.ends_with("</svg>\n"));
        assert_eq!(a.matches("<circle").count(), 3 + 2); // points + legend
    }

    #[test]
    fn roc_contains_labels_and_auc() {
        let curves = vec![(
            "logistic-regression".to_string(),
            vec![(0.0, 0.0), (0.2, 0.9), (1.0, 1.0)],
            0.85,
        )];
        let svg = roc_svg(&curves);
        assert!(svg.contains("logistic-regression (AUC=0.850)"));
        assert!(svg.contains("<polyline"));
    }
}
