use std::io::Write;

use sha2::{Digest, Sha256};

use super::sweep::{RateFit, SweepRecord, TrialInfo};
use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 10] = [
    "delta",
    "alpha",
    "bregman_x",
    "err_h",
    "residual",
    "iterations",
    "bound_c_rhs",
    "bound_d_rhs",
    "pass_c",
    "pass_d",
];

#[derive(Clone, Debug, PartialEq)]
pub struct ParsedCsv {
    pub metadata: Vec<(String, String)>,
    pub records: Vec<SweepRecord>,
}

impl ParsedCsv {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

fn opt_bool(v: Option<bool>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `# key=value` metadata lines (fit lines appended), the column header, then
/// one row per record. Floats use the shortest round-tripping form.
pub fn emit_csv<W: Write>(
    records: &[SweepRecord],
    fit: Option<&RateFit>,
    metadata: &[(String, String)],
    mut out: W,
) -> Result<()> {
    if records.is_empty() {
        return Err(Error::InvalidParameter("cannot emit an empty sweep".into()));
    }
    for (k, v) in metadata {
        if k.contains('=') || k.contains('\n') || v.contains('\n') {
            return Err(Error::InvalidParameter(format!(
                "metadata entry `{k}` is not a single key=value line"
            )));
        }
        writeln!(out, "# {k}={v}")?;
    }
    if let Some(f) = fit {
        writeln!(out, "# fit_slope={:?}", f.slope)?;
        writeln!(out, "# fit_intercept={:?}", f.intercept)?;
        writeln!(out, "# fit_r_squared={:?}", f.r_squared)?;
        writeln!(out, "# fit_points={}", f.points_used)?;
    }
    writeln!(out, "{}", CSV_COLUMNS.join(","))?;
    for r in records {
        writeln!(
            out,
            "{:?},{:?},{:?},{:?},{:?},{},{},{},{},{}",
            r.delta,
            r.alpha,
            r.bregman_x,
            r.err_h,
            r.residual,
            r.iterations,
            opt_f64(r.bound_c_rhs),
            opt_f64(r.bound_d_rhs),
            opt_bool(r.pass_c),
            opt_bool(r.pass_d),
        )?;
    }
    Ok(())
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Parse(format!("line {line}: `{s}` is not a number")))
}

fn parse_opt<T, F: Fn(&str) -> Result<T>>(s: &str, f: F) -> Result<Option<T>> {
    if s.is_empty() {
        Ok(None)
    } else {
        f(s).map(Some)
    }
}

pub fn parse_csv(text: &str) -> Result<ParsedCsv> {
    let mut metadata = Vec::new();
    let mut records = Vec::new();
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        if let Some(meta) = line.strip_prefix("# ") {
            if header_seen {
                return Err(Error::Parse(format!(
                    "line {ln}: metadata after the column header"
                )));
            }
            let (k, v) = meta
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {ln}: metadata without `=`")))?;
            metadata.push((k.to_string(), v.to_string()));
            continue;
        }
        if !header_seen {
            if line != CSV_COLUMNS.join(",") {
                return Err(Error::Parse(format!(
                    "line {ln}: unexpected column header `{line}`"
                )));
            }
            header_seen = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != CSV_COLUMNS.len() {
            return Err(Error::Parse(format!(
                "line {ln}: expected 10 columns, found {}",
                f.len()
            )));
        }
        let boolean = |s: &str| match s {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(Error::Parse(format!(
                "line {ln}: `{other}` is not a boolean"
            ))),
        };
        records.push(SweepRecord {
            delta: parse_f64(f[0], ln)?,
            alpha: parse_f64(f[1], ln)?,
            bregman_x: parse_f64(f[2], ln)?,
            err_h: parse_f64(f[3], ln)?,
            residual: parse_f64(f[4], ln)?,
            iterations: f[5]
                .parse()
                .map_err(|_| Error::Parse(format!("line {ln}: bad iteration count `{}`", f[5])))?,
            bound_c_rhs: parse_opt(f[6], |s| parse_f64(s, ln))?,
            bound_d_rhs: parse_opt(f[7], |s| parse_f64(s, ln))?,
            pass_c: parse_opt(f[8], boolean)?,
            pass_d: parse_opt(f[9], boolean)?,
        });
    }
    if !header_seen {
        return Err(Error::Parse("missing column header".into()));
    }
    Ok(ParsedCsv { metadata, records })
}

/// Hex SHA-256 of the CSV text. Wall-clock data lives in the timing file,
/// so identical runs hash identically.
pub fn determinism_hash(csv_text: &str) -> String {
    let digest = Sha256::digest(csv_text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Timing sidecar: `delta,trial,converged,fixed_point_residual,wall_time_s`.
pub fn write_timing<W: Write>(
    records: &[SweepRecord],
    info: &[TrialInfo],
    mut out: W,
) -> Result<()> {
    writeln!(
        out,
        "delta,trial,converged,fixed_point_residual,wall_time_s"
    )?;
    for (r, t) in records.iter().zip(info) {
        writeln!(
            out,
            "{:?},{},{},{:?},{:?}",
            r.delta,
            t.trial,
            t.converged,
            t.fixed_point_residual,
            t.wall_time.as_secs_f64()
        )?;
    }
    Ok(())
}
