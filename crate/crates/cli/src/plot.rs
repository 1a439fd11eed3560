//! Standalone SVG scatter plots of 2-D embeddings.

use std::fmt::Write;

use ndarray::{Array1, Array2};

use mforge_core::{Error, Result};

pub const SIZE: f64 = 640.0;
pub const MARGIN: f64 = 24.0;
pub const RADIUS: f64 = 2.5;
/// Fill used when no labels are given.
pub const SINGLE_COLOR: &str = "#3b528b";

/// Viridis sampled at nine evenly spaced stops.
const VIRIDIS: [[u8; 3]; 9] = [
    [68, 1, 84],
    [71, 44, 122],
    [59, 81, 139],
    [44, 113, 142],
    [33, 144, 141],
    [39, 173, 129],
    [92, 200, 99],
    [170, 220, 50],
    [253, 231, 37],
];

/// Hex color for `t` in `[0, 1]`, interpolated along the ramp.
pub fn ramp(t: f64) -> String {
    let t = if t.is_finite() {
        t.clamp(0.0, 1.0)
    } else {
        0.0
    };
    let pos = t * (VIRIDIS.len() - 1) as f64;
    let i = (pos.floor() as usize).min(VIRIDIS.len() - 2);
    let f = pos - i as f64;
    let c: Vec<u8> = (0..3)
        .map(|a| {
            let lo = VIRIDIS[i][a] as f64;
            let hi = VIRIDIS[i + 1][a] as f64;
            (lo + f * (hi - lo)).round() as u8
        })
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn span(v: impl Iterator<Item = f64>) -> (f64, f64) {
    v.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
        (lo.min(x), hi.max(x))
    })
}

/// Renders `points` (N x 2) with optional per-point labels mapped onto the
/// color ramp. Both axes share one scale; y grows upward.
pub fn render_svg(points: &Array2<f64>, labels: Option<&Array1<f64>>) -> Result<String> {
    if points.ncols() != 2 {
        return Err(Error::Parameter(format!(
            "plot needs a 2-column embedding, got {} columns",
            points.ncols()
        )));
    }
    if let Some(l) = labels {
        if l.len() != points.nrows() {
            return Err(Error::Parameter(format!(
                "{} labels for {} points",
                l.len(),
                points.nrows()
            )));
        }
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(
            "embedding contains non-finite coordinates".into(),
        ));
    }
    let (x0, x1) = span(points.column(0).iter().copied());
    let (y0, y1) = span(points.column(1).iter().copied());
    let extent = (x1 - x0).max(y1 - y0);
    let inner = SIZE - 2.0 * MARGIN;
    let scale = if extent > 0.0 { inner / extent } else { 1.0 };
    // Center the data box inside the drawing area.
    let ox = MARGIN + 0.5 * (inner - (x1 - x0) * scale);
    let oy = MARGIN + 0.5 * (inner - (y1 - y0) * scale);
    let colors: Vec<String> = match labels {
        Some(l) => {
            let (lo, hi) = span(l.iter().copied());
            l.iter()
                .map(|&v| ramp(if hi > lo { (v - lo) / (hi - lo) } else { 0.5 }))
                .collect()
        }
        None => vec![SINGLE_COLOR.to_string(); points.nrows()],
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(
        s,
        r##"<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="#ffffff"/>"##
    );
    for (row, color) in points.rows().into_iter().zip(&colors) {
        let cx = ox + (row[0] - x0) * scale;
        let cy = SIZE - (oy + (row[1] - y0) * scale);
        let _ = writeln!(
            s,
            r#"<circle cx="{cx:.3}" cy="{cy:.3}" r="{RADIUS}" fill="{color}"/>"#
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
