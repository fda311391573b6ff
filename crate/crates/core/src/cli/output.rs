//! CSV and SVG writers.

use std::fmt::Write as _;

use crate::wave::{GluedZ, Profile};

pub fn profile_csv(profile: &Profile) -> String {
    let mut out = String::from("t,u,z,phi\n");
    for p in &profile.points {
        let _ = writeln!(out, "{},{},{},{}", p.t, p.u, p.z, p.phi);
    }
    out
}

/// Parses the rows written by [`profile_csv`].
pub fn read_profile_csv(text: &str) -> Result<Vec<[f64; 4]>, String> {
    let mut lines = text.lines();
    if lines.next() != Some("t,u,z,phi") {
        return Err("missing header t,u,z,phi".into());
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let v: Vec<f64> = line
                .split(',')
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|e| format!("row {}: {e}", i + 1))?;
            v.try_into()
                .map_err(|_| format!("row {}: expected 4 columns", i + 1))
        })
        .collect()
}

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 320.0;
const MARGIN: f64 = 48.0;

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() || !hi.is_finite() {
        (0.0, 1.0)
    } else if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// One framed line plot with its axis ranges printed at the corners.
fn panel(out: &mut String, x0: f64, title: &str, xlabel: &str, ylabel: &str, pts: &[(f64, f64)]) {
    let (xmin, xmax) = extent(pts.iter().map(|p| p.0));
    let (ymin, ymax) = extent(pts.iter().map(|p| p.1));
    let left = x0 + MARGIN;
    let top = MARGIN;
    let w = PANEL_W - 1.5 * MARGIN;
    let h = PANEL_H - 2.0 * MARGIN;
    let sx = |x: f64| left + (x - xmin) / (xmax - xmin) * w;
    let sy = |y: f64| top + h - (y - ymin) / (ymax - ymin) * h;

    let _ = writeln!(
        out,
        r##"<rect x="{left:.2}" y="{top:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="#444"/>"##
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{title}</text>"#,
        left + w / 2.0,
        top - 16.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{xlabel}</text>"#,
        left + w / 2.0,
        top + h + 34.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 {:.2} {:.2})">{ylabel}</text>"#,
        left - 30.0,
        top + h / 2.0,
        left - 30.0,
        top + h / 2.0
    );
    for (x, y, anchor, v) in [
        (left, top + h + 16.0, "start", xmin),
        (left + w, top + h + 16.0, "end", xmax),
    ] {
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" font-size="10">{v:.4}</text>"#
        );
    }
    for (y, v) in [(top + h, ymin), (top + 8.0, ymax)] {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{y:.2}" text-anchor="end" font-size="10">{v:.4}</text>"#,
            left - 4.0
        );
    }
    let mut path = String::new();
    for (i, &(x, y)) in pts.iter().enumerate() {
        let _ = write!(
            path,
            "{}{:.2},{:.2}",
            if i == 0 { "M" } else { " L" },
            sx(x),
            sy(y)
        );
    }
    let _ = writeln!(
        out,
        r##"<path d="{path}" fill="none" stroke="#1f5fa8" stroke-width="1.5"/>"##
    );
}

/// `u(t)` on the left and `z(u)` on the right.
pub fn profile_svg(title: &str, profile: Option<&Profile>, glued: &GluedZ) -> String {
    let mut out = String::new();
    let width = 2.0 * PANEL_W;
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{PANEL_H}" viewBox="0 0 {width} {PANEL_H}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="14" text-anchor="middle" font-size="12">{}</text>"#,
        PANEL_W,
        escape(title)
    );
    let ut: Vec<(f64, f64)> =
        profile.map_or_else(Vec::new, |p| p.points.iter().map(|q| (q.t, q.u)).collect());
    panel(&mut out, 0.0, "profile", "t", "u", &ut);
    let zu: Vec<(f64, f64)> = glued
        .pieces
        .iter()
        .flat_map(|s| s.samples.iter().map(|q| (q.u, q.z)))
        .collect();
    panel(
        &mut out,
        PANEL_W,
        "first-order reduction",
        "u",
        "z",
        &thin(&zu, 4000),
    );
    out.push_str("</svg>\n");
    out
}

/// Every `n`-th point so that at most about `max` remain, keeping both ends.
fn thin(pts: &[(f64, f64)], max: usize) -> Vec<(f64, f64)> {
    if pts.len() <= max {
        return pts.to_vec();
    }
    let step = pts.len().div_ceil(max);
    let mut v: Vec<_> = pts.iter().step_by(step).copied().collect();
    if let Some(&last) = pts.last() {
        v.push(last);
    }
    v
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wave::{ProfilePoint, Tail};

    fn profile() -> Profile {
        Profile {
            points: vec![
                ProfilePoint {
                    t: -1.0,
                    u: 0.9,
                    z: -0.1,
                    phi: -0.1,
                },
                ProfilePoint {
                    t: 0.0,
                    u: 0.5,
                    z: -0.25,
                    phi: -0.25,
                },
                ProfilePoint {
                    t: 1.5,
                    u: 0.125,
                    z: -0.1,
                    phi: -0.1,
                },
            ],
            u_ref: 0.5,
            tail_at_one: Tail::Asymptotic,
            tail_at_zero: Tail::Asymptotic,
            exponent_at_one: 1.0,
            exponent_at_zero: 1.0,
        }
    }

    #[test]
    fn csv_round_trips() {
        let p = profile();
        let rows = read_profile_csv(&profile_csv(&p)).unwrap();
        assert_eq!(rows.len(), 3);
        for (r, q) in rows.iter().zip(&p.points) {
            assert_eq!(*r, [q.t, q.u, q.z, q.phi]);
        }
    }

    #[test]
    fn csv_without_header_is_rejected() {
        assert!(read_profile_csv("1,2,3,4\n").is_err());
    }

    #[test]
    fn thinning_keeps_the_ends() {
        let pts: Vec<_> = (0..10_001).map(|i| (i as f64, 0.0)).collect();
        let t = thin(&pts, 100);
        assert!(t.len() <= 102);
        assert_eq!(t.first(), pts.first());
        assert_eq!(t.last(), pts.last());
    }

    #[test]
    fn degenerate_extent_is_widened() {
        assert_eq!(extent([2.0, 2.0].into_iter()), (1.5, 2.5));
        assert_eq!(extent(std::iter::empty()), (0.0, 1.0));
    }
}
