//! Minimal static SVG charts: line curves and a heat-mapped matrix.

use std::fmt::Write as _;

pub struct Series<'a> {
    pub name: &'a str,
    pub color: &'a str,
    pub values: &'a [f64],
}

const W: f64 = 640.0;
const H: f64 = 360.0;
const PAD: f64 = 48.0;

/// Line chart of several series against their index (1-based, e.g. epochs).
pub fn line_chart(title: &str, x_label: &str, series: &[Series]) -> String {
    let n = series.iter().map(|s| s.values.len()).max().unwrap_or(0);
    let finite = series.iter().flat_map(|s| s.values.iter().copied()).filter(|v| v.is_finite());
    let (mut lo, mut hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        hi = lo + 1.0;
    }
    let x = |i: usize| PAD + (W - 2.0 * PAD) * if n > 1 { i as f64 / (n - 1) as f64 } else { 0.5 };
    let y = |v: f64| H - PAD - (H - 2.0 * PAD) * (v - lo) / (hi - lo);

    let mut s = header(W, H);
    writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(title)).unwrap();
    writeln!(
        s,
        r#"<path d="M{PAD} {PAD} V{} H{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD
    )
    .unwrap();
    for (v, label) in [(lo, lo), (hi, hi)] {
        writeln!(s, r#"<text x="{}" y="{}" text-anchor="end" font-size="11">{label:.3}</text>"#, PAD - 4.0, y(v) + 4.0).unwrap();
    }
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{} (1..{n})</text>"#, W / 2.0, H - 12.0, escape(x_label)).unwrap();
    for (k, ser) in series.iter().enumerate() {
        let pts: Vec<String> = ser
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(i, &v)| format!("{:.2},{:.2}", x(i), y(v)))
            .collect();
        writeln!(s, r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#, ser.color, pts.join(" ")).unwrap();
        let ly = PAD + 14.0 * k as f64;
        writeln!(
            s,
            r#"<text x="{}" y="{ly}" font-size="11" fill="{}">{}</text>"#,
            W - PAD - 110.0,
            ser.color,
            escape(ser.name)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Heat map of a row-normalized matrix with numeric cell labels.
pub fn matrix_chart(title: &str, labels: &[usize], m: &[Vec<f64>]) -> String {
    let c = labels.len().max(1);
    let cell = (480.0 / c as f64).clamp(12.0, 48.0);
    let (w, h) = (PAD * 2.0 + cell * c as f64, PAD * 2.0 + cell * c as f64 + 20.0);
    let mut s = header(w, h);
    writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title)).unwrap();
    for (i, row) in m.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let shade = (255.0 * (1.0 - v.clamp(0.0, 1.0))) as u8;
            let (x, y) = (PAD + cell * j as f64, PAD + cell * i as f64);
            writeln!(
                s,
                r#"<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="rgb({shade},{shade},255)" stroke="white"/>"#
            )
            .unwrap();
            if cell >= 24.0 {
                let fg = if v > 0.5 { "white" } else { "black" };
                writeln!(
                    s,
                    r#"<text x="{}" y="{}" text-anchor="middle" font-size="9" fill="{fg}">{v:.2}</text>"#,
                    x + cell / 2.0,
                    y + cell / 2.0 + 3.0
                )
                .unwrap();
            }
        }
    }
    for (k, l) in labels.iter().enumerate() {
        let mid = PAD + cell * (k as f64 + 0.5);
        writeln!(s, r#"<text x="{mid}" y="{}" text-anchor="middle" font-size="10">{l}</text>"#, PAD - 4.0).unwrap();
        writeln!(s, r#"<text x="{}" y="{}" text-anchor="end" font-size="10">{l}</text>"#, PAD - 4.0, mid + 3.0).unwrap();
    }
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="11">rows: true L, columns: predicted L</text>"#, w / 2.0, h - 10.0).unwrap();
    s.push_str("</svg>\n");
    s
}

fn header(w: f64, h: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
