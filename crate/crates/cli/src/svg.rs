//! Hand-rolled static SVG fan charts: a shaded quantile band, the ensemble
//! mean, and the deterministic reference as a dashed line. No external
//! resources, fixed-precision coordinates, byte-identical across runs.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 44.0;
const MARGIN_B: f64 = 56.0;

/// One chart's data: calendar years on the x axis, the band edges, the
/// ensemble mean, and optionally the deterministic path. All slices share
/// one length.
pub struct FanChart<'a> {
    pub title: &'a str,
    pub years: &'a [f64],
    pub lower: &'a [f64],
    pub upper: &'a [f64],
    pub mean: &'a [f64],
    pub reference: Option<&'a [f64]>,
}

impl FanChart<'_> {
    pub fn render(&self) -> String {
        let n = self.years.len();
        assert!(
            n == self.lower.len() && n == self.upper.len() && n == self.mean.len(),
            "fan chart series lengths disagree"
        );
        if let Some(r) = self.reference {
            assert!(n == r.len(), "fan chart reference length disagrees");
        }

        let (x0, x1) = span(self.years);
        let mut ymin = f64::INFINITY;
        let mut ymax = f64::NEG_INFINITY;
        for series in [self.lower, self.upper, self.mean]
            .into_iter()
            .chain(self.reference)
        {
            for &v in series {
                ymin = ymin.min(v);
                ymax = ymax.max(v);
            }
        }
        let pad = if ymax > ymin {
            (ymax - ymin) * 0.06
        } else {
            (ymax.abs() * 0.1).max(0.5)
        };
        let (y0, y1) = (ymin - pad, ymax + pad);

        let px = |v: f64| MARGIN_L + (v - x0) / (x1 - x0).max(f64::MIN_POSITIVE) * plot_w();
        let py = |v: f64| HEIGHT - MARGIN_B - (v - y0) / (y1 - y0) * plot_h();

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="Helvetica, Arial, sans-serif">"#
        );
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="26" text-anchor="middle" font-size="16">{}</text>"#,
            MARGIN_L + plot_w() / 2.0,
            escape(self.title)
        );

        // Horizontal gridlines and y tick labels.
        let ticks = nice_ticks(y0, y1);
        let step = if ticks.len() > 1 { ticks[1] - ticks[0] } else { 1.0 };
        for &v in &ticks {
            let y = py(v);
            let _ = writeln!(
                s,
                r##"<line x1="{MARGIN_L}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e4e4e4" stroke-width="1"/>"##,
                WIDTH - MARGIN_R
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"#,
                MARGIN_L - 7.0,
                y + 3.5,
                fmt_tick(v, step)
            );
        }

        // The band: upper edge left to right, lower edge back. A zero-width
        // band degenerates onto the mean line, which is fine.
        let mut d = String::from("M");
        for (i, &yr) in self.years.iter().enumerate() {
            let _ = write!(d, " {:.2},{:.2}", px(yr), py(self.upper[i]));
        }
        for i in (0..n).rev() {
            let _ = write!(d, " {:.2},{:.2}", px(self.years[i]), py(self.lower[i]));
        }
        d.push_str(" Z");
        let _ = writeln!(s, r##"<path d="{d}" fill="#c9c9c9"/>"##);

        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#1a1a1a" stroke-width="1.6"/>"##,
            polyline(self.years, self.mean, px, py)
        );
        if let Some(reference) = self.reference {
            let _ = writeln!(
                s,
                r##"<polyline points="{}" fill="none" stroke="#333333" stroke-width="1.4" stroke-dasharray="7 4"/>"##,
                polyline(self.years, reference, px, py)
            );
        }

        // Axes. The x axis ticks every data period (5 years apart); labels
        // every fifth tick.
        let _ = writeln!(
            s,
            r#"<line x1="{MARGIN_L}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="1"/>"#,
            HEIGHT - MARGIN_B,
            WIDTH - MARGIN_R,
            HEIGHT - MARGIN_B
        );
        let _ = writeln!(
            s,
            r#"<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{:.2}" stroke="black" stroke-width="1"/>"#,
            HEIGHT - MARGIN_B
        );
        for (i, &yr) in self.years.iter().enumerate() {
            let x = px(yr);
            let major = i % 5 == 0;
            let len = if major { 6.0 } else { 3.0 };
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black" stroke-width="1"/>"#,
                HEIGHT - MARGIN_B,
                HEIGHT - MARGIN_B + len
            );
            if major {
                let _ = writeln!(
                    s,
                    r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="11">{}</text>"#,
                    HEIGHT - MARGIN_B + 19.0,
                    fmt_tick(yr, 1.0)
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">year</text>"#,
            MARGIN_L + plot_w() / 2.0,
            HEIGHT - 14.0
        );

        // Legend, top right.
        let lx = WIDTH - MARGIN_R - 150.0;
        let _ = writeln!(s, r##"<rect x="{lx:.2}" y="{:.2}" width="18" height="10" fill="#c9c9c9"/>"##, MARGIN_T + 2.0);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11">95% band</text>"#,
            lx + 24.0,
            MARGIN_T + 11.0
        );
        let _ = writeln!(
            s,
            r##"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#1a1a1a" stroke-width="1.6"/>"##,
            MARGIN_T + 24.0,
            lx + 18.0,
            MARGIN_T + 24.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11">mean</text>"#,
            lx + 24.0,
            MARGIN_T + 28.0
        );
        if self.reference.is_some() {
            let _ = writeln!(
                s,
                r##"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#333333" stroke-width="1.4" stroke-dasharray="7 4"/>"##,
                MARGIN_T + 41.0,
                lx + 18.0,
                MARGIN_T + 41.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-size="11">deterministic</text>"#,
                lx + 24.0,
                MARGIN_T + 45.0
            );
        }

        s.push_str("</svg>\n");
        s
    }
}

fn plot_w() -> f64 {
    WIDTH - MARGIN_L - MARGIN_R
}

fn plot_h() -> f64 {
    HEIGHT - MARGIN_T - MARGIN_B
}

fn span(xs: &[f64]) -> (f64, f64) {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn polyline(xs: &[f64], ys: &[f64], px: impl Fn(f64) -> f64, py: impl Fn(f64) -> f64) -> String {
    let mut out = String::new();
    for (i, &x) in xs.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{:.2},{:.2}", px(x), py(ys[i]));
    }
    out
}

/// Round tick positions covering [lo, hi]: a 1/2/5 decade step chosen to
/// yield about six ticks.
fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let range = (hi - lo).max(f64::MIN_POSITIVE);
    let raw = range / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| range / s <= 6.5)
        .unwrap_or(10.0 * mag);
    let mut v = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while v <= hi + 1e-9 * step {
        // Snap near-zero accumulations onto zero exactly.
        out.push(if v.abs() < step * 1e-9 { 0.0 } else { v });
        v += step;
    }
    out
}

/// Tick label with just enough decimals for the step size.
fn fmt_tick(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 {
        0
    } else {
        (-step.log10().floor()) as usize
    };
    format!("{v:.decimals$}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
