//! Trace CSV files: `k,gap,step_norm,dist_to_solution,t`.

use std::io::{Read, Write};

use anyhow::{Context, Result};
use gapvi::prox::TraceRecord;
use serde::{Deserialize, Serialize};

pub const HEADER: [&str; 5] = ["k", "gap", "step_norm", "dist_to_solution", "t"];

/// One trace row. A missing distance is written as an empty field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub gap: f64,
    pub step_norm: f64,
    pub dist_to_solution: Option<f64>,
    pub t: f64,
}

impl TraceRow {
    /// Solver records carry `t` only inside the homotopy; elsewhere the
    /// column holds `t_default`.
    pub fn from_record(record: &TraceRecord, t_default: f64) -> Self {
        Self {
            k: record.k,
            gap: record.gap,
            step_norm: record.step_norm,
            dist_to_solution: record.dist_to_solution,
            t: record.t.unwrap_or(t_default),
        }
    }
}

pub fn write_trace<W: Write>(out: W, rows: &[TraceRow]) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    writer.write_record(HEADER)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_trace<R: Read>(input: R) -> Result<Vec<TraceRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    anyhow::ensure!(header == HEADER, "unexpected trace header {header:?}");
    reader
        .deserialize()
        .enumerate()
        .map(|(i, row)| row.with_context(|| format!("trace row {}", i + 1)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_keeps_bits_and_missing_fields() {
        let rows = vec![
            TraceRow { k: 0, gap: 0.08, step_norm: 0.04, dist_to_solution: Some(0.4), t: 0.0 },
            TraceRow { k: 1, gap: 1.0 / 3.0, step_norm: 1e-300, dist_to_solution: None, t: 0.5 },
        ];
        let mut buf = Vec::new();
        write_trace(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("k,gap,step_norm,dist_to_solution,t\n"));
        assert_eq!(read_trace(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn wrong_header_is_rejected() {
        assert!(read_trace("k,gap\n0,1\n".as_bytes()).is_err());
    }
}
