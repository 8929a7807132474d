use std::fmt::Write;

use super::{aroc, RocCurve};

/// `threshold,fp_per_image,tp_rate` rows followed by `AROC=<value>`.
pub fn roc_csv(curve: &RocCurve) -> String {
    let mut s = String::from("threshold,fp_per_image,tp_rate\n");
    for p in &curve.points {
        let _ = writeln!(s, "{:?},{:?},{:?}", p.threshold, p.fp_per_image, p.tp_rate);
    }
    let _ = writeln!(s, "AROC={:?}", aroc(curve));
    s
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Polyline plot of one or more curves on `[0, U] x [0, 1]`.
pub fn roc_svg(curves: &[(&str, &RocCurve)]) -> String {
    let (w, h, m) = (480.0, 360.0, 48.0);
    let u = curves
        .iter()
        .map(|(_, c)| c.u)
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let px = |x: f64| m + x / u * (w - 2.0 * m);
    let py = |y: f64| h - m - y * (h - 2.0 * m);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{:.1},{:.1} V{:.1} H{:.1}" fill="none" stroke="black"/>"#,
        px(0.0),
        py(1.0),
        py(0.0),
        px(u)
    );
    for i in 0..=5 {
        let x = u * i as f64 / 5.0;
        let y = i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{x:.0}</text>"#,
            px(x),
            py(0.0) + 16.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{y:.1}</text>"#,
            px(0.0) - 6.0,
            py(y) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">false positives per image</text>"#,
        w / 2.0,
        h - 8.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" transform="rotate(-90 14 {:.1})" text-anchor="middle">detection rate</text>"#,
        h / 2.0,
        h / 2.0
    );
    for (i, (name, c)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        for (k, p) in c.points.iter().enumerate() {
            let _ = write!(
                d,
                "{}{:.1},{:.1} ",
                if k == 0 { "M" } else { "L" },
                px(p.fp_per_image),
                py(p.tp_rate)
            );
        }
        if let Some(last) = c.points.last() {
            let _ = write!(d, "L{:.1},{:.1}", px(c.u), py(last.tp_rate));
        }
        let _ = writeln!(
            s,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            d.trim_end()
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}">{} ({:.3})</text>"#,
            px(0.0) + 8.0,
            py(1.0) + 14.0 * (i as f64 + 1.0),
            escape(name),
            aroc(c)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
