//! Self-contained SVG rendering of failure-probability curves.

use std::collections::BTreeMap;
use std::fmt::Write;

use tracking_qec::{PointEstimate, ProtocolKind, ThresholdEstimate};

const W: f64 = 820.0;
const H: f64 = 560.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 230.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;

type SeriesKey = (ProtocolKind, bool, u32, u32);

/// A vertical marker, e.g. a threshold with its label.
#[derive(Debug, Clone)]
pub struct Marker {
    pub sigma: f64,
    pub label: String,
}

impl Marker {
    pub fn from_threshold(t: &ThresholdEstimate, label: &str) -> Self {
        Self {
            sigma: t.sigma_star,
            label: format!("{label} {:.3}", t.sigma_star),
        }
    }
}

fn color(kind: ProtocolKind, analog: bool) -> &'static str {
    match (kind, analog) {
        (ProtocolKind::Conventional, false) => "#1f4e9c",
        (ProtocolKind::Conventional, true) => "#4a90d9",
        (ProtocolKind::Tracking, false) => "#b2182b",
        (ProtocolKind::Tracking, true) => "#ef6548",
    }
}

fn dash(level: u32) -> &'static str {
    match level {
        1 => "",
        2 => "8 4",
        3 => "8 3 2 3",
        4 => "2 3",
        _ => "12 3 2 3 2 3",
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Number of distinct series the rows would be drawn as.
pub fn series_count(rows: &[PointEstimate]) -> usize {
    group(rows).len()
}

fn group(rows: &[PointEstimate]) -> BTreeMap<SeriesKey, Vec<&PointEstimate>> {
    let mut m: BTreeMap<SeriesKey, Vec<&PointEstimate>> = BTreeMap::new();
    for r in rows {
        m.entry((r.protocol, r.analog, r.cycles, r.level))
            .or_default()
            .push(r);
    }
    for v in m.values_mut() {
        v.sort_by(|a, b| a.sigma_total.total_cmp(&b.sigma_total));
    }
    m
}

/// Renders a log-y plot of `p_fail` against `sigma_total`.
///
/// Each (protocol, analog, cycles, level) is one series. Points with no
/// failures are drawn as open downward triangles at the upper end of their
/// interval.
pub fn render(rows: &[PointEstimate], markers: &[Marker]) -> Result<String, String> {
    if rows.is_empty() {
        return Err("no rows to plot".into());
    }
    let series = group(rows);
    let (mut xmin, mut xmax) = (f64::MAX, f64::MIN);
    let mut ymin = f64::MAX;
    for r in rows {
        xmin = xmin.min(r.sigma_total);
        xmax = xmax.max(r.sigma_total);
        for v in [r.p_fail, r.ci_low, r.ci_high] {
            if v > 0.0 {
                ymin = ymin.min(v);
            }
        }
    }
    for m in markers {
        xmin = xmin.min(m.sigma);
        xmax = xmax.max(m.sigma);
    }
    if xmax - xmin < 1e-9 {
        xmin -= 0.05;
        xmax += 0.05;
    }
    let pad = 0.03 * (xmax - xmin);
    let (xmin, xmax) = (xmin - pad, xmax + pad);
    if ymin == f64::MAX {
        ymin = 1e-3;
    }
    let dec_lo = ymin.log10().floor().min(-1.0) as i32;
    let dec_hi = 0i32;

    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - xmin) / (xmax - xmin) * pw;
    let sy = |y: f64| {
        let l = y.max(10f64.powi(dec_lo)).log10();
        TOP + (dec_hi as f64 - l) / (dec_hi - dec_lo) as f64 * ph
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );

    // y decades and minor ticks
    for d in dec_lo..=dec_hi {
        let y = sy(10f64.powi(d));
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            LEFT + pw
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
        if d < dec_hi {
            for k in 2..10 {
                let y = sy(k as f64 * 10f64.powi(d));
                let _ = writeln!(
                    s,
                    r#"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/>"#,
                    LEFT + 4.0
                );
            }
        }
    }

    // x ticks at a round step
    let raw = (xmax - xmin) / 8.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&st| st >= raw)
        .unwrap_or(10.0 * mag);
    let mut t = (xmin / step).ceil() * step;
    while t <= xmax + 1e-12 {
        let x = sx(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            TOP + ph,
            TOP + ph - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + ph + 18.0,
            trim_float(t)
        );
        t += step;
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">total noise standard deviation</text>"#,
        LEFT + pw / 2.0,
        H - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">failure probability</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );

    for m in markers {
        let x = sx(m.sigma);
        let _ = writeln!(
            s,
            r#"<g class="threshold"><line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="5 4"/><text x="{:.2}" y="{:.2}" fill="gray">{}</text></g>"#,
            TOP + ph,
            x + 3.0,
            TOP + 12.0,
            esc(&m.label)
        );
    }

    for (i, ((kind, analog, cycles, level), pts)) in series.iter().enumerate() {
        let c = color(*kind, *analog);
        let _ = writeln!(
            s,
            r#"<g class="series" data-protocol="{kind}" data-analog="{analog}" data-cycles="{cycles}" data-level="{level}">"#
        );
        let line: Vec<String> = pts
            .iter()
            .filter(|p| p.failures > 0)
            .map(|p| format!("{:.2},{:.2}", sx(p.sigma_total), sy(p.p_fail)))
            .collect();
        if line.len() > 1 {
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{c}" stroke-width="1.6" stroke-dasharray="{}" points="{}"/>"#,
                dash(*level),
                line.join(" ")
            );
        }
        for p in pts {
            let x = sx(p.sigma_total);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{c}"/>"#,
                sy(p.ci_low),
                sy(p.ci_high)
            );
            if p.failures > 0 {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{x:.2}" cy="{:.2}" r="3" fill="{c}"/>"#,
                    sy(p.p_fail)
                );
            } else {
                let y = sy(p.ci_high);
                let _ = writeln!(
                    s,
                    r#"<path class="upper-bound" d="M {:.2} {:.2} L {:.2} {:.2} L {x:.2} {:.2} Z" fill="white" stroke="{c}"/>"#,
                    x - 4.0,
                    y - 3.0,
                    x + 4.0,
                    y - 3.0,
                    y + 4.0
                );
            }
        }
        let _ = writeln!(s, "</g>");

        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<g class="legend-entry"><line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{c}" stroke-width="1.6" stroke-dasharray="{}"/><text x="{:.2}" y="{:.2}">{kind} {} n={cycles} l={level}</text></g>"#,
            lx + 30.0,
            dash(*level),
            lx + 36.0,
            ly + 4.0,
            if *analog { "analog" } else { "digital" }
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn trim_float(x: f64) -> String {
    let s = format!("{x:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}
