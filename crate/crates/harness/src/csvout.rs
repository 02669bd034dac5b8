//! CSV emission with fixed headers.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! given result set always serializes to the same bytes.

use std::io::Write;

use tascl_core::markov::StationaryResult;
use tascl_core::rational::SpeedGain;
use tascl_core::sched::TraceRow;
use tascl_core::{Error, Result};

use crate::bler::BlerPoint;

fn io_err(e: std::io::Error) -> Error {
    Error::Parse(format!("write failed: {e}"))
}

pub const BLER_HEADER: &str =
    "snr_db,frames,errors,crc_fails,bler,crc_fail_rate,ci95,avg_list_terminal,avg_list_sum,truncated";

pub fn write_bler_csv(mut w: impl Write, points: &[BlerPoint]) -> Result<()> {
    writeln!(w, "{BLER_HEADER}").map_err(io_err)?;
    for p in points {
        let terminal = p.avg_list_terminal.map_or(String::new(), |v| v.to_string());
        let summed = p.avg_list_sum.map_or(String::new(), |v| v.to_string());
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            p.snr_db,
            p.frames,
            p.errors,
            p.crc_fails,
            p.bler,
            p.crc_fail_rate,
            p.ci95,
            terminal,
            summed,
            p.truncated
        )
        .map_err(io_err)?;
    }
    Ok(())
}

pub const MARKOV_HEADER: &str = "eps_s,zeta,beta,pr_hazard,pr_overflow,bler_upper,delta";

pub fn write_markov_row(
    mut w: impl Write,
    eps_s: f64,
    zeta: u64,
    beta: SpeedGain,
    res: &StationaryResult,
) -> Result<()> {
    writeln!(
        w,
        "{},{},{},{},{},{},{}",
        eps_s, zeta, beta, res.pr_hazard, res.pr_overflow, res.bler_upper, res.delta_loss
    )
    .map_err(io_err)
}

pub const TRACE_HEADER: &str = "slot,state,buffer_occ,dl_remaining,event";

pub fn write_trace_row(mut w: impl Write, row: &TraceRow) -> Result<()> {
    writeln!(
        w,
        "{},{},{},{},{}",
        row.slot, row.state, row.buffer_occupancy, row.dl_remaining_subslots, row.event
    )
    .map_err(io_err)
}

pub fn write_header(mut w: impl Write, header: &str) -> Result<()> {
    writeln!(w, "{header}").map_err(io_err)
}

/// Reads `(snr_db, value)` pairs back from a BLER CSV, selecting either
/// the `bler` or the `crc_fail_rate` column.
pub fn read_curve_csv(text: &str, use_crc_fail_rate: bool) -> Result<Vec<(f64, f64)>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty CSV".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let snr_idx = cols
        .iter()
        .position(|&c| c == "snr_db")
        .ok_or_else(|| Error::Parse("CSV lacks snr_db column".into()))?;
    let want = if use_crc_fail_rate { "crc_fail_rate" } else { "bler" };
    let val_idx = cols
        .iter()
        .position(|&c| c == want)
        .ok_or_else(|| Error::Parse(format!("CSV lacks {want} column")))?;
    let mut out = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let parse = |i: usize| -> Result<f64> {
            fields
                .get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad CSV field on line {}", lineno + 2)))
        };
        out.push((parse(snr_idx)?, parse(val_idx)?));
    }
    Ok(out)
}
