use std::io::Write;

use super::sweep::{RateFit, SweepRecord};
use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

/// Log-log scatter of `err_h` against `δ` with the fitted line.
pub fn emit_svg<W: Write>(
    records: &[SweepRecord],
    fit: Option<&RateFit>,
    mut out: W,
) -> Result<()> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.delta > 0.0 && r.err_h > 0.0)
        .map(|r| (r.delta.log10(), r.err_h.log10()))
        .collect();
    if pts.is_empty() {
        return Err(Error::InvalidParameter("no positive points to plot".into()));
    }
    let (mut x0, mut x1) = bounds(pts.iter().map(|p| p.0));
    let (mut y0, mut y1) = bounds(pts.iter().map(|p| p.1));
    x0 = x0.floor();
    x1 = x1.ceil().max(x0 + 1.0);
    y0 = y0.floor();
    y1 = y1.ceil().max(y0 + 1.0);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )?;
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#)?;
    writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    )?;
    for e in (x0 as i64)..=(x1 as i64) {
        let x = sx(e as f64);
        writeln!(
            out,
            r#"<text x="{x:.1}" y="{:.1}" font-size="12" text-anchor="middle">1e{e}</text>"#,
            HEIGHT - MARGIN + 18.0
        )?;
    }
    for e in (y0 as i64)..=(y1 as i64) {
        let y = sy(e as f64);
        writeln!(
            out,
            r#"<text x="{:.1}" y="{y:.1}" font-size="12" text-anchor="end">1e{e}</text>"#,
            MARGIN - 6.0
        )?;
    }
    writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="14" text-anchor="middle">noise level δ</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0
    )?;
    writeln!(
        out,
        r#"<text x="15" y="{:.1}" font-size="14" text-anchor="middle" transform="rotate(-90 15 {:.1})">error</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    )?;
    for (x, y) in &pts {
        writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#,
            sx(*x),
            sy(*y)
        )?;
    }
    if let Some(f) = fit {
        let ln10 = std::f64::consts::LN_10;
        // log10 err = slope·log10 δ + intercept/ln 10
        let line = |x: f64| f.slope * x + f.intercept / ln10;
        writeln!(
            out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="crimson" stroke-width="1.5"/>"#,
            sx(x0),
            sy(line(x0)),
            sx(x1),
            sy(line(x1))
        )?;
        writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="13">slope {:.4}, r² {:.4}</text>"#,
            MARGIN + 10.0,
            MARGIN + 20.0,
            f.slope,
            f.r_squared
        )?;
    }
    writeln!(out, "</svg>")?;
    Ok(())
}

fn bounds(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}
