//! Self-contained log-log SVG for rate reports.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// One polyline; `dashed` marks series built from singular solutions.
pub struct Series<'a> {
    pub label: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub dashed: bool,
}

fn decades(lo: f64, hi: f64) -> (f64, f64) {
    let (a, b) = (lo.log10().floor(), hi.log10().ceil());
    if b > a { (a, b) } else { (a - 1.0, b + 1.0) }
}

/// Points with a non-positive coordinate are skipped.
pub fn loglog(title: &str, xlabel: &str, series: &[Series]) -> String {
    let pts = || series.iter().flat_map(|s| s.x.iter().zip(s.y)).filter(|(x, y)| **x > 0.0 && **y > 0.0);
    let fold = |f: fn(f64, f64) -> f64, init: f64, pick: fn((&f64, &f64)) -> f64| pts().map(pick).fold(init, f);
    let (x0, x1) = decades(fold(f64::min, f64::INFINITY, |p| *p.0), fold(f64::max, 0.0, |p| *p.0));
    let (y0, y1) = decades(fold(f64::min, f64::INFINITY, |p| *p.1), fold(f64::max, 0.0, |p| *p.1));
    let px = |v: f64| MARGIN + (v.log10() - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let py = |v: f64| H - MARGIN - (v.log10() - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">{title}</text>\n",
        W / 2.0
    );
    let (l, r, t, b) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
    let _ = writeln!(s, "<path d=\"M{l} {t} L{l} {b} L{r} {b}\" fill=\"none\" stroke=\"black\"/>");
    if x0.is_finite() && y0.is_finite() {
        for k in x0 as i32..=x1 as i32 {
            let x = px(10f64.powi(k));
            let _ = writeln!(s, "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">1e{k}</text>", b + 16.0);
        }
        for k in y0 as i32..=y1 as i32 {
            let y = py(10f64.powi(k));
            let _ = writeln!(s, "<text x=\"{:.2}\" y=\"{y:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e{k}</text>", l - 6.0);
        }
    }
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{xlabel}</text>", W / 2.0, H - 16.0);
    for (k, ser) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let d: Vec<String> = ser
            .x
            .iter()
            .zip(ser.y)
            .filter(|(x, y)| **x > 0.0 && **y > 0.0)
            .enumerate()
            .map(|(i, (x, y))| format!("{}{:.2} {:.2}", if i == 0 { "M" } else { "L" }, px(*x), py(*y)))
            .collect();
        if d.is_empty() {
            continue;
        }
        let dash = if ser.dashed { " stroke-dasharray=\"6 4\"" } else { "" };
        let _ = writeln!(s, "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash}/>", d.join(" "));
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{color}\">{}</text>",
            r - 120.0,
            t + 16.0 * (k as f64 + 1.0),
            ser.label
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emits_one_path_per_series() {
        let x = [1e2, 1e3, 1e4];
        let svg = loglog("t", "lambda", &[
            Series { label: "a", x: &x, y: &[1.0, 2.0, 4.0], dashed: false },
            Series { label: "b", x: &x, y: &[1e-3, 0.0, 1e-5], dashed: true },
        ]);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("stroke-width=\"1.5\"").count(), 2);
        assert_eq!(svg.matches("stroke-dasharray").count(), 1);
        assert!(!svg.contains("NaN"));
    }
}
