//! Minimal SVG rendering of vortex paths.

use std::fmt::Write as _;

use nalgebra::DVector;

use crate::domain::DomainModel;

const SIZE: f64 = 600.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// One polyline per vortex, plus the boundary of the disk or half-plane
/// when it falls inside the view.
pub fn render(states: &[DVector<f64>], domain: &DomainModel) -> String {
    let n = states.first().map_or(0, |s| s.len() / 2);
    let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for z in states {
        for k in 0..n {
            lo_x = lo_x.min(z[2 * k]);
            hi_x = hi_x.max(z[2 * k]);
            lo_y = lo_y.min(z[2 * k + 1]);
            hi_y = hi_y.max(z[2 * k + 1]);
        }
    }
    if !lo_x.is_finite() {
        (lo_x, hi_x, lo_y, hi_y) = (-1.0, 1.0, -1.0, 1.0);
    }
    let span = (hi_x - lo_x).max(hi_y - lo_y).max(1e-12) * 1.2;
    let (cx, cy) = (0.5 * (lo_x + hi_x), 0.5 * (lo_y + hi_y));
    let scale = SIZE / span;
    let px = |x: f64| (x - cx) * scale + SIZE / 2.0;
    let py = |y: f64| SIZE / 2.0 - (y - cy) * scale;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    match domain {
        DomainModel::UnitDisk => {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.3}" cy="{:.3}" r="{:.3}" fill="none" stroke="black" stroke-width="1"/>"#,
                px(0.0),
                py(0.0),
                scale
            );
        }
        DomainModel::HalfPlane => {
            let _ = writeln!(
                out,
                r#"<line x1="0" y1="{y:.3}" x2="{SIZE}" y2="{y:.3}" stroke="black" stroke-width="1"/>"#,
                y = py(0.0)
            );
        }
        _ => {}
    }
    for k in 0..n {
        let color = COLORS[k % COLORS.len()];
        let mut points = String::new();
        for z in states {
            let _ = write!(points, "{:.3},{:.3} ", px(z[2 * k]), py(z[2 * k + 1]));
        }
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            points.trim_end()
        );
        if let Some(z) = states.first() {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.3}" cy="{:.3}" r="3" fill="{color}"/>"#,
                px(z[2 * k]),
                py(z[2 * k + 1])
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_one_path_per_vortex() {
        let states = vec![DVector::from_vec(vec![0.1, 0.0, -0.1, 0.0]), DVector::from_vec(vec![0.0, 0.1, 0.0, -0.1])];
        let svg = render(&states, &DomainModel::UnitDisk);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("<circle cx=\"300.000\""));
        assert!(svg.ends_with("</svg>\n"));
    }
}
