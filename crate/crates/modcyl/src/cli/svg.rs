//! Hand-written SVG: kernel heatmaps, spectral histograms, convergence
//! plots. Coordinates are printed with fixed precision and all iteration is
//! ordered, so the bytes depend only on the input.

use super::output::{KernelTable, Part};
use crate::oracle::convergence_order;
use std::fmt::Write as _;

const PANEL: f64 = 260.0;
const MARGIN: f64 = 48.0;
const GAP: f64 = 36.0;
const MAX_BINS: usize = 64;
/// Decades of magnitude shown before a cell fades to white.
const DECADES: f64 = 4.0;

fn header(s: &mut String, w: f64, h: f64, title: &str) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{w:.0}" height="{h:.0}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title));
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn part_color(p: Part) -> (u8, u8, u8) {
    match p {
        Part::Smooth => (27, 120, 55),
        Part::Pv => (33, 102, 172),
        Part::Delta => (230, 97, 1),
        Part::DeltaPrime => (178, 24, 43),
        Part::Mirror => (118, 42, 131),
    }
}

/// Blend the part colour toward white by `t ∈ [0, 1]`, 1 being full colour.
fn shade(p: Part, t: f64) -> String {
    let (r, g, b) = part_color(p);
    let mix = |c: u8| (255.0 - (255.0 - c as f64) * t.clamp(0.0, 1.0)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(r), mix(g), mix(b))
}

/// 2×2 grid of `(a, b)` panels, one `<g>` layer per part present. Rows are
/// binned to at most 64 cells per axis, keeping the largest magnitude.
pub fn heatmap(t: &KernelTable) -> String {
    let ell = t.ell;
    let bins = t.n.clamp(1, MAX_BINS);
    let cell = PANEL / bins as f64;
    let w = 2.0 * PANEL + GAP + 2.0 * MARGIN + 120.0;
    let h = 2.0 * PANEL + GAP + 2.0 * MARGIN + 20.0;
    let mut s = String::new();
    let mut title = match t.parameter {
        Some(p) => format!("{} ({}, {} = {p})", t.object, t.state, param_name(&t.object)),
        None => format!("{} ({})", t.object, t.state),
    };
    if t.circumference.is_finite() {
        let _ = write!(title, " on L = {}, ell = {ell}", t.circumference);
    }
    header(&mut s, w, h, &title);
    let origin = |a: u8, b: u8| {
        (
            MARGIN + (b - 1) as f64 * (PANEL + GAP),
            MARGIN + 20.0 + (a - 1) as f64 * (PANEL + GAP),
        )
    };
    let bin = |v: f64| (((v + ell) / (2.0 * ell) * bins as f64).floor() as isize).clamp(0, bins as isize - 1) as usize;

    for a in 1..=2u8 {
        for b in 1..=2u8 {
            let (ox, oy) = origin(a, b);
            let _ = writeln!(
                s,
                r##"<rect x="{ox:.2}" y="{oy:.2}" width="{PANEL:.2}" height="{PANEL:.2}" fill="none" stroke="#444"/>"##
            );
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">({a},{b})</text>"#, ox + PANEL / 2.0, oy - 6.0);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">y</text>"#, ox + PANEL / 2.0, oy + PANEL + 14.0);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">x</text>"#, ox - 6.0, oy + PANEL / 2.0);
        }
    }

    let present = t.parts();
    for &part in &present {
        let mut grid = vec![0.0f64; 4 * bins * bins];
        for r in t.rows.iter().filter(|r| r.part == part) {
            let m = r.re.hypot(r.im);
            if !m.is_finite() {
                continue;
            }
            let k = (((r.a - 1) as usize * 2 + (r.b - 1) as usize) * bins + bin(r.x)) * bins + bin(r.y);
            grid[k] = grid[k].max(m);
        }
        let peak = grid.iter().cloned().fold(0.0, f64::max);
        let _ = writeln!(s, r#"<g id="layer-{}" class="part-layer">"#, part.tag());
        for a in 1..=2u8 {
            for b in 1..=2u8 {
                let (ox, oy) = origin(a, b);
                for i in 0..bins {
                    for j in 0..bins {
                        let m = grid[(((a - 1) as usize * 2 + (b - 1) as usize) * bins + i) * bins + j];
                        if m <= 0.0 || peak <= 0.0 {
                            continue;
                        }
                        let level = 1.0 + (m / peak).log10() / DECADES;
                        if level <= 0.0 {
                            continue;
                        }
                        let _ = writeln!(
                            s,
                            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                            ox + j as f64 * cell,
                            oy + i as f64 * cell,
                            cell,
                            cell,
                            shade(part, level)
                        );
                    }
                }
            }
        }
        let _ = writeln!(s, "</g>");
    }

    let lx = MARGIN + 2.0 * PANEL + GAP + 16.0;
    let _ = writeln!(s, r#"<g id="legend">"#);
    for (k, &part) in present.iter().enumerate() {
        let y = MARGIN + 20.0 + k as f64 * 18.0;
        let _ = writeln!(s, r#"<rect x="{lx:.2}" y="{y:.2}" width="12" height="12" fill="{}"/>"#, shade(part, 1.0));
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 18.0, y + 10.0, part.tag());
    }
    let _ = writeln!(
        s,
        r#"<text x="{lx:.2}" y="{:.2}">|k|, {DECADES:.0} decades</text>"#,
        MARGIN + 30.0 + present.len() as f64 * 18.0
    );
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

fn param_name(object: &str) -> &'static str {
    if object == "jump" {
        "mu"
    } else {
        "t"
    }
}

/// Linear map of `[lo, hi]` onto `[a, b]`.
fn lin(v: f64, lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    if hi == lo {
        (a + b) / 2.0
    } else {
        a + (v - lo) / (hi - lo) * (b - a)
    }
}

/// One histogram bin: its `μ`-range and the bin-averaged densities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub discrete: f64,
    pub analytic: f64,
}

/// Bars for the eigenvector density, a polyline for the analytic density.
pub fn spectral_histogram(bins: &[HistogramBin], title: &str) -> String {
    let (w, h) = (720.0, 420.0);
    let (x0, x1, y0, y1) = (64.0, w - 24.0, h - 56.0, 40.0);
    let mut s = String::new();
    header(&mut s, w, h, title);
    let top = bins.iter().flat_map(|b| [b.discrete, b.analytic]).filter(|v| v.is_finite()).fold(0.0, f64::max);
    let bot = bins.iter().flat_map(|b| [b.discrete, b.analytic]).filter(|v| v.is_finite()).fold(0.0, f64::min);
    let (top, bot) = if top == bot { (1.0, 0.0) } else { (top, bot) };
    let n = bins.len().max(1) as f64;
    let bw = (x1 - x0) / n;
    let yv = |v: f64| lin(v, bot, top, y0, y1);
    let _ = writeln!(s, r##"<line x1="{x0:.2}" y1="{:.2}" x2="{x1:.2}" y2="{:.2}" stroke="#444"/>"##, yv(0.0), yv(0.0));
    let _ = writeln!(s, r##"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}" stroke="#444"/>"##);
    let _ = writeln!(s, r#"<g id="discrete">"#);
    for (k, b) in bins.iter().enumerate() {
        let (ya, yb) = (yv(0.0), yv(b.discrete));
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#9ecae1" stroke="#3182bd"/>"##,
            x0 + k as f64 * bw,
            ya.min(yb),
            bw,
            (ya - yb).abs()
        );
    }
    let _ = writeln!(s, "</g>");
    let pts: Vec<String> = bins
        .iter()
        .enumerate()
        .map(|(k, b)| format!("{:.2},{:.2}", x0 + (k as f64 + 0.5) * bw, yv(b.analytic)))
        .collect();
    let _ = writeln!(s, r##"<polyline id="analytic" points="{}" fill="none" stroke="#d62728" stroke-width="2"/>"##, pts.join(" "));
    for (k, b) in bins.iter().enumerate() {
        if k % 4 == 0 || k + 1 == bins.len() {
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{:.2}</text>"#, x0 + k as f64 * bw, y0 + 16.0, b.lo);
        }
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">mu</text>"#, (x0 + x1) / 2.0, y0 + 36.0);
    let _ = writeln!(s, r#"<text x="16" y="{:.2}" transform="rotate(-90 16 {:.2})" text-anchor="middle">bin-averaged dE/dmu</text>"#, (y0 + y1) / 2.0, (y0 + y1) / 2.0);
    let _ = writeln!(s, r##"<text x="{:.2}" y="56" fill="#3182bd" text-anchor="end">eigenvectors</text>"##, x1);
    let _ = writeln!(s, r##"<text x="{:.2}" y="72" fill="#d62728" text-anchor="end">analytic</text>"##, x1);
    s.push_str("</svg>\n");
    s
}

/// One error-vs-N curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub n: Vec<usize>,
    pub error: Vec<f64>,
}

/// Least-squares slope of `ln error` against `ln N` over the positive points.
pub fn fitted_slope(c: &Curve) -> Option<f64> {
    let finite: Vec<f64> = c.error.iter().map(|&e| if e.is_finite() { e } else { 0.0 }).collect();
    let order = convergence_order(&c.n, &finite);
    order.is_finite().then_some(-order)
}

const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Log-log error-vs-N curves, each labelled with its fitted slope.
pub fn convergence(curves: &[Curve], title: &str) -> String {
    let (w, h) = (720.0, 440.0);
    let (x0, x1, y0, y1) = (72.0, 460.0, h - 56.0, 40.0);
    let mut s = String::new();
    header(&mut s, w, h, title);
    let ns = curves.iter().flat_map(|c| c.n.iter().map(|&n| (n as f64).log10()));
    let (nlo, nhi) = ns.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let es = curves.iter().flat_map(|c| c.error.iter().filter(|e| **e > 0.0 && e.is_finite()).map(|e| e.log10()));
    let (elo, ehi) = es.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (nlo, nhi) = if nlo.is_finite() { (nlo - 0.05, nhi + 0.05) } else { (1.0, 3.0) };
    let (elo, ehi) = if elo.is_finite() { (elo.floor(), ehi.ceil().max(elo.floor() + 1.0)) } else { (-6.0, 0.0) };
    let xv = |n: f64| lin(n.log10(), nlo, nhi, x0, x1);
    let yv = |e: f64| lin(e.log10(), elo, ehi, y0, y1);
    let _ = writeln!(s, r##"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#444"/>"##, x1 - x0, y0 - y1);
    for d in (elo as i64)..=(ehi as i64) {
        let y = lin(d as f64, elo, ehi, y0, y1);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"#, x0 - 4.0, y + 4.0);
    }
    let mut ticks: Vec<usize> = curves.iter().flat_map(|c| c.n.iter().copied()).collect();
    ticks.sort_unstable();
    ticks.dedup();
    for n in ticks {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{n}</text>"#, xv(n as f64), y0 + 16.0);
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">N</text>"#, (x0 + x1) / 2.0, y0 + 36.0);
    let _ = writeln!(s, r#"<text x="16" y="{:.2}" transform="rotate(-90 16 {:.2})" text-anchor="middle">error</text>"#, (y0 + y1) / 2.0, (y0 + y1) / 2.0);
    for (k, c) in curves.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = c
            .n
            .iter()
            .zip(&c.error)
            .filter(|(_, e)| **e > 0.0 && e.is_finite())
            .map(|(&n, &e)| format!("{:.2},{:.2}", xv(n as f64), yv(e)))
            .collect();
        let _ = writeln!(s, r#"<g class="curve">"#);
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.join(" "));
        for p in &pts {
            let (px, py) = p.split_once(',').unwrap();
            let _ = writeln!(s, r#"<circle cx="{px}" cy="{py}" r="2.5" fill="{color}"/>"#);
        }
        let slope = match fitted_slope(c) {
            Some(v) => format!("slope {v:.2}"),
            None => "slope n/a".into(),
        };
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" fill="{color}">{} ({slope})</text>"#,
            x1 + 12.0,
            y1 + 12.0 + k as f64 * 15.0,
            escape(&c.label)
        );
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    s
}
