//! CSV, JSON and SVG renderings of results.
//!
//! CSV uses a header row, `\n` line endings and 17 significant digits for
//! reals, so files are byte-identical whenever the numbers are.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::modecount::ModeCountProfile;
use crate::modetree::{ModeSpaceMatrix, ModeTree};
use crate::silverman::LevelPoint;

/// A real with 17 significant digits.
pub fn real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn opt_real(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

/// Header plus rows; fields are written as given.
pub fn csv<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let fields: Vec<String> = row.into_iter().collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// `label,alpha,pi_hat,std_err` for one or more labelled curves.
pub fn level_curve_csv(curves: &[(String, Vec<LevelPoint>)]) -> String {
    csv(
        &["kernel", "alpha", "pi_hat", "std_err"],
        curves.iter().flat_map(|(label, pts)| {
            pts.iter()
                .map(move |p| vec![label.clone(), real(p.alpha), real(p.pi_hat), real(p.std_err)])
        }),
    )
}

/// `replicate,log_ratio`; absent ratios leave the field empty.
pub fn log_ratio_csv(values: &[Option<f64>]) -> String {
    csv(
        &["replicate", "log_ratio"],
        values
            .iter()
            .enumerate()
            .map(|(i, v)| vec![i.to_string(), opt_real(*v)]),
    )
}

/// First column `h` (descending), then one column per `theta`.
pub fn mode_space_csv(m: &ModeSpaceMatrix) -> String {
    let mut header = vec!["h".to_string()];
    header.extend(m.theta_grid.iter().map(|&t| real(t)));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    csv(
        &header,
        (0..m.h_grid.len()).rev().map(|i| {
            std::iter::once(real(m.h_grid[i]))
                .chain(m.counts[i].iter().map(usize::to_string))
                .collect::<Vec<_>>()
        }),
    )
}

pub fn mode_tree_edges_csv(t: &ModeTree) -> String {
    csv(
        &["track_id", "parent_id", "h_birth", "h_death"],
        t.tracks().iter().map(|tr| {
            vec![
                tr.id.to_string(),
                tr.parent.map(|p| p.to_string()).unwrap_or_default(),
                real(tr.birth),
                real(tr.death),
            ]
        }),
    )
}

pub fn mode_tree_paths_csv(t: &ModeTree) -> String {
    csv(
        &["track_id", "h", "location"],
        t.tracks().iter().flat_map(|tr| {
            tr.path
                .iter()
                .map(move |&(h, x)| vec![tr.id.to_string(), real(h), real(x)])
        }),
    )
}

/// Grid counts followed by the refined transitions.
pub fn profile_csv(p: &ModeCountProfile) -> String {
    csv(
        &["h", "count"],
        p.h_grid()
            .iter()
            .zip(p.counts())
            .map(|(&h, &c)| vec![real(h), c.to_string()]),
    )
}

pub fn transitions_csv(p: &ModeCountProfile) -> String {
    csv(
        &["h", "h_lo", "h_hi", "count_below", "count_above"],
        p.transitions().iter().map(|t| {
            vec![
                real(t.h),
                real(t.bracket.0),
                real(t.bracket.1),
                t.below.to_string(),
                t.above.to_string(),
            ]
        }),
    )
}

/// `x,y` pairs.
pub fn curve_csv(x_name: &str, y_name: &str, points: &[(f64, f64)]) -> String {
    csv(&[x_name, y_name], points.iter().map(|&(x, y)| vec![real(x), real(y)]))
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;

/// Affine map of a data range onto a pixel range.
#[derive(Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    p0: f64,
    p1: f64,
}

impl Axis {
    fn new(lo: f64, hi: f64, p0: f64, p1: f64) -> Self {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        Self { lo, hi, p0, p1 }
    }

    fn map(&self, v: f64) -> f64 {
        self.p0 + (v - self.lo) / (self.hi - self.lo) * (self.p1 - self.p0)
    }
}

fn svg_open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn frame(s: &mut String, x: Axis, y: Axis, x_label: &str, y_label: &str, y_tick: impl Fn(f64) -> String) {
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = x.lo + t * (x.hi - x.lo);
        let yv = y.lo + t * (y.hi - y.lo);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.3}</text>"#,
            x.map(xv),
            HEIGHT - MARGIN + 16.0,
            xv
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            MARGIN - 4.0,
            y.map(yv) + 4.0,
            y_tick(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
}

fn polyline(s: &mut String, pts: impl Iterator<Item = (f64, f64)>, stroke: &str, width: f64) {
    let coords: Vec<String> = pts.map(|(a, b)| format!("{a:.2},{b:.2}")).collect();
    if coords.len() >= 2 {
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{stroke}" stroke-width="{width}" points="{}"/>"#,
            coords.join(" ")
        );
    } else if let Some(c) = coords.first() {
        let (a, b) = c.split_once(',').expect("pair");
        let _ = writeln!(s, r#"<circle cx="{a}" cy="{b}" r="1.5" fill="{stroke}"/>"#);
    }
}

/// Tracks as polylines: location across, `log h` up.
pub fn mode_tree_svg(t: &ModeTree, title: &str) -> String {
    let xs = t.tracks().iter().flat_map(|tr| tr.path.iter().map(|p| p.1));
    let (xlo, xhi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let g = t.h_grid();
    let (hlo, hhi) = (g[g.len() - 1].ln(), g[0].ln());
    let pad = 0.05 * (xhi - xlo).max(1e-9);
    let x = Axis::new(xlo - pad, xhi + pad, MARGIN, WIDTH - MARGIN);
    let y = Axis::new(hlo, hhi, HEIGHT - MARGIN, MARGIN);
    let mut s = svg_open(title);
    frame(&mut s, x, y, "location", "bandwidth h (log scale)", |v| {
        format!("{:.3}", v.exp())
    });
    for tr in t.tracks() {
        polyline(
            &mut s,
            tr.path.iter().map(|&(h, l)| (x.map(l), y.map(h.ln()))),
            "black",
            1.2,
        );
        if let (Some(p), Some(&(h, l))) = (tr.parent, tr.path.first()) {
            // connector from the parent at the bandwidth where the track appears
            if let Some(&(_, pl)) = t.tracks()[p].path.iter().find(|q| q.0 == h) {
                polyline(
                    &mut s,
                    [(x.map(pl), y.map(h.ln())), (x.map(l), y.map(h.ln()))].into_iter(),
                    "grey",
                    0.8,
                );
            }
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Greyscale cells, darker for more modes (6 and above share one shade).
pub fn mode_space_svg(m: &ModeSpaceMatrix, title: &str) -> String {
    let (t0, t1) = (m.theta_grid[0], m.theta_grid[m.theta_grid.len() - 1]);
    let (h0, h1) = (m.h_grid[0], m.h_grid[m.h_grid.len() - 1]);
    let x = Axis::new(t0, t1, MARGIN, WIDTH - MARGIN);
    let y = Axis::new(h0, h1, HEIGHT - MARGIN, MARGIN);
    let cw = (WIDTH - 2.0 * MARGIN) / m.theta_grid.len() as f64;
    let ch = (HEIGHT - 2.0 * MARGIN) / m.h_grid.len() as f64;
    let mut s = svg_open(title);
    for (i, row) in m.counts.iter().enumerate() {
        let py = HEIGHT - MARGIN - (i + 1) as f64 * ch;
        // merge equal neighbours into one rectangle
        let mut j = 0;
        while j < row.len() {
            let c = row[j];
            let start = j;
            while j < row.len() && row[j] == c {
                j += 1;
            }
            let shade = 255 - (c.clamp(1, 6) - 1) * 45;
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="rgb({shade},{shade},{shade})"/>"#,
                MARGIN + start as f64 * cw,
                py,
                (j - start) as f64 * cw + 0.05,
                ch + 0.05
            );
        }
    }
    frame(&mut s, x, y, "theta", "bandwidth h", |v| format!("{v:.3}"));
    for c in 1..=6 {
        let shade = 255 - (c - 1) * 45;
        let px = WIDTH - MARGIN + 8.0;
        let py = MARGIN + (c - 1) as f64 * 18.0;
        let _ = writeln!(
            s,
            r#"<rect x="{px}" y="{py}" width="12" height="12" fill="rgb({shade},{shade},{shade})" stroke="black"/>"#
        );
        let label = if c == 6 { "6+".to_string() } else { c.to_string() };
        let _ = writeln!(s, r#"<text x="{}" y="{}">{label}</text>"#, px + 15.0, py + 10.0);
    }
    s.push_str("</svg>\n");
    s
}

/// One or more labelled curves on shared axes, optionally with the line `y = x`.
pub fn curves_svg(
    series: &[(String, Vec<(f64, f64)>)],
    title: &str,
    x_label: &str,
    y_label: &str,
    diagonal: bool,
) -> String {
    let all = series.iter().flat_map(|(_, p)| p.iter().copied());
    let (mut xlo, mut xhi, mut ylo, mut yhi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (a, b) in all.filter(|p| p.0.is_finite() && p.1.is_finite()) {
        xlo = xlo.min(a);
        xhi = xhi.max(a);
        ylo = ylo.min(b);
        yhi = yhi.max(b);
    }
    if !xlo.is_finite() {
        (xlo, xhi, ylo, yhi) = (0.0, 1.0, 0.0, 1.0);
    }
    if diagonal {
        xlo = xlo.min(ylo);
        ylo = xlo;
        xhi = xhi.max(yhi);
        yhi = xhi;
    }
    let x = Axis::new(xlo, xhi, MARGIN, WIDTH - MARGIN);
    let y = Axis::new(ylo, yhi, HEIGHT - MARGIN, MARGIN);
    let mut s = svg_open(title);
    frame(&mut s, x, y, x_label, y_label, |v| format!("{v:.3}"));
    if diagonal {
        polyline(
            &mut s,
            [(x.map(xlo), y.map(xlo)), (x.map(xhi), y.map(xhi))].into_iter(),
            "#bbbbbb",
            1.0,
        );
    }
    let dashes = ["", "6,3", "2,2", "8,3,2,3", "1,4"];
    for (k, (label, pts)) in series.iter().enumerate() {
        let coords: Vec<String> = pts
            .iter()
            .map(|&(a, b)| format!("{:.2},{:.2}", x.map(a), y.map(b)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="black" stroke-width="1.3" stroke-dasharray="{}" points="{}"/>"#,
            dashes[k % dashes.len()],
            coords.join(" ")
        );
        let ly = MARGIN + 14.0 + 16.0 * k as f64;
        let lx = MARGIN + 10.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="black" stroke-dasharray="{}"/>"#,
            lx + 24.0,
            dashes[k % dashes.len()]
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            lx + 30.0,
            ly + 4.0,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}
