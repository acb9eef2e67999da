//! Per-iteration diagnostics.

use std::io::Write;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub objective: f64,
    pub fpr: f64,
    pub primal_res: f64,
    pub dual_res: f64,
}

/// Write `iter,objective,fpr,primal_res,dual_res` rows with a header line.
pub fn write_trace_csv<W: Write>(rows: &[TraceRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "iter,objective,fpr,primal_res,dual_res")?;
    for r in rows {
        writeln!(
            out,
            "{},{:?},{:?},{:?},{:?}",
            r.iter, r.objective, r.fpr, r.primal_res, r.dual_res
        )?;
    }
    Ok(())
}
