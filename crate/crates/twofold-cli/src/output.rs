//! Deterministic output writers: the stamped CSV format and self-contained
//! SVG polyline plots. Floats print through Rust's shortest round-trip
//! formatting, so identical inputs give byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

/// FNV-1a over the raw config bytes; stamped into every output header so a
/// file can be traced back to the exact configuration that produced it.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// CSV buffer with the version/hash header line and RFC 4180 quoting.
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(config_hash: u64) -> Self {
        let mut buf = String::new();
        let _ = writeln!(
            buf,
            "# twofold {} config_hash={config_hash:016x}",
            env!("CARGO_PKG_VERSION")
        );
        Csv { buf }
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        let mut first = true;
        for f in fields {
            if !first {
                self.buf.push(',');
            }
            first = false;
            self.buf.push_str(&quote(f.as_ref()));
        }
        self.buf.push('\n');
    }

    pub fn write_to(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, &self.buf)
    }
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// One polyline with a legend label.
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Point and line markers drawn over the data.
pub enum Annotation {
    Dot { x: f64, y: f64, label: String },
    VLine { x: f64, label: String },
    HLine { y: f64 },
}

const PALETTE: [&str; 5] = ["#1f6feb", "#d1242f", "#1a7f37", "#8250df", "#bf5b16"];
const W: f64 = 800.0;
const H: f64 = 560.0;
const ML: f64 = 72.0;
const MR: f64 = 20.0;
const MT: f64 = 34.0;
const MB: f64 = 52.0;

/// Renders a complete SVG 1.1 document: axes with tick labels, one colored
/// polyline per series, a legend when there are several, and the requested
/// annotations.
pub fn render_plot(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    series: &[Series],
    notes: &[Annotation],
) -> String {
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for s in series {
        for &(x, y) in &s.points {
            xs.push(x);
            ys.push(y);
        }
    }
    for n in notes {
        match n {
            Annotation::Dot { x, y, .. } => {
                xs.push(*x);
                ys.push(*y);
            }
            Annotation::VLine { x, .. } => xs.push(*x),
            Annotation::HLine { y } => ys.push(*y),
        }
    }
    let (x0, x1) = padded_range(&xs);
    let (y0, y1) = padded_range(&ys);
    let px = |x: f64| ML + (x - x0) / (x1 - x0) * (W - ML - MR);
    let py = |y: f64| H - MB - (y - y0) / (y1 - y0) * (H - MT - MB);

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(out, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");

    // Grid and tick labels.
    for t in ticks(x0, x1) {
        let x = px(t.0);
        let _ = writeln!(
            out,
            "<line x1=\"{x:.2}\" y1=\"{MT}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#dddddd\"/>",
            H - MB
        );
        let _ = writeln!(
            out,
            "<text x=\"{x:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
            H - MB + 18.0,
            t.1
        );
    }
    for t in ticks(y0, y1) {
        let y = py(t.0);
        let _ = writeln!(
            out,
            "<line x1=\"{ML}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#dddddd\"/>",
            W - MR
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">{}</text>",
            ML - 6.0,
            y + 4.0,
            t.1
        );
    }
    let _ = writeln!(
        out,
        "<rect x=\"{ML}\" y=\"{MT}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>",
        W - ML - MR,
        H - MT - MB
    );

    // Annotations under the data.
    for n in notes {
        match n {
            Annotation::HLine { y } => {
                let yy = py(*y);
                let _ = writeln!(
                    out,
                    "<line x1=\"{ML}\" y1=\"{yy:.2}\" x2=\"{:.2}\" y2=\"{yy:.2}\" stroke=\"#888888\" stroke-dasharray=\"6 3\"/>",
                    W - MR
                );
            }
            Annotation::VLine { x, label } => {
                let xx = px(*x);
                let _ = writeln!(
                    out,
                    "<line x1=\"{xx:.2}\" y1=\"{MT}\" x2=\"{xx:.2}\" y2=\"{:.2}\" stroke=\"#888888\" stroke-dasharray=\"6 3\"/>",
                    H - MB
                );
                let _ = writeln!(
                    out,
                    "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
                    xx + 4.0,
                    MT + 14.0,
                    escape(label)
                );
            }
            Annotation::Dot { .. } => {}
        }
    }

    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut pts = String::new();
        for &(x, y) in &s.points {
            let _ = write!(pts, "{:.2},{:.2} ", px(x), py(y));
        }
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            pts.trim_end()
        );
    }

    for n in notes {
        if let Annotation::Dot { x, y, label } = n {
            let (xx, yy) = (px(*x), py(*y));
            let _ = writeln!(out, "<circle cx=\"{xx:.2}\" cy=\"{yy:.2}\" r=\"4\" fill=\"black\"/>");
            let _ = writeln!(
                out,
                "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
                xx + 6.0,
                yy - 6.0,
                escape(label)
            );
        }
    }

    if series.len() > 1 {
        for (k, s) in series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let y = MT + 16.0 + 18.0 * k as f64;
            let x = W - MR - 150.0;
            let _ = writeln!(
                out,
                "<line x1=\"{x:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>",
                x + 24.0
            );
            let _ = writeln!(
                out,
                "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
                x + 30.0,
                y + 4.0,
                escape(&s.label)
            );
        }
    }

    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>",
        (ML + W - MR) / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
        (ML + W - MR) / 2.0,
        H - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        "<text x=\"16\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">{}</text>",
        (MT + H - MB) / 2.0,
        (MT + H - MB) / 2.0,
        escape(ylabel)
    );
    out.push_str("</svg>\n");
    out
}

fn padded_range(vals: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in vals {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Tick positions at a 1/2/5 step giving four to nine labels, with labels
/// printed at the step's own decimal count so they stay exact.
fn ticks(lo: f64, hi: f64) -> Vec<(f64, String)> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| span / s <= 9.0)
        .unwrap_or(10.0 * mag);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let mut out = Vec::new();
    let mut k = (lo / step).ceil() as i64;
    while (k as f64) * step <= hi + 1e-9 * step {
        let t = k as f64 * step;
        out.push((t, format!("{t:.decimals$}")));
        k += 1;
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
