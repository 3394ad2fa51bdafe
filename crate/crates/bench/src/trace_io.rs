//! CSV trace files.

use std::io::{Read, Write};
use std::path::Path;

use compadmm_core::{Trace, TraceRow};

use crate::error::{BenchError, Result};

pub const HEADER: [&str; 7] = [
    "epoch",
    "oracle_calls",
    "objective",
    "objective_gap",
    "bregman_gap",
    "feasibility",
    "wall_ns",
];

fn opt(v: Option<f64>) -> String {
    v.map(|g| g.to_string()).unwrap_or_default()
}

pub fn write_trace_to<W: Write>(trace: &Trace, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in &trace.rows {
        w.write_record([
            r.epoch.to_string(),
            r.oracle_calls.to_string(),
            r.objective.to_string(),
            opt(r.objective_gap),
            opt(r.bregman_gap),
            r.feasibility.to_string(),
            r.wall_ns.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace(trace: &Trace, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| BenchError::io(path, e))?;
    write_trace_to(trace, std::io::BufWriter::new(file)).map_err(|source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_trace_from<R: Read>(input: R, path: &Path) -> Result<Trace> {
    let bad = |msg: String| BenchError::Trace {
        path: path.to_path_buf(),
        msg,
    };
    let csv_err = |source| BenchError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(HEADER) {
        return Err(bad(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut trace = Trace::new(stem, "");
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let field = |k: usize| rec.get(k).unwrap_or("");
        let ctx = |k: usize| format!("row {}: bad {} {:?}", n + 1, HEADER[k], field(k));
        let int = |k: usize| field(k).parse::<u64>().map_err(|_| bad(ctx(k)));
        let float = |k: usize| field(k).parse::<f64>().map_err(|_| bad(ctx(k)));
        let maybe = |k: usize| {
            if field(k).is_empty() {
                Ok(None)
            } else {
                float(k).map(Some)
            }
        };
        trace.rows.push(TraceRow {
            epoch: int(0)?,
            oracle_calls: int(1)?,
            objective: float(2)?,
            objective_gap: maybe(3)?,
            bregman_gap: maybe(4)?,
            feasibility: float(5)?,
            wall_ns: int(6)?,
        });
    }
    Ok(trace)
}

pub fn read_trace(path: &Path) -> Result<Trace> {
    let file = std::fs::File::open(path).map_err(|e| BenchError::io(path, e))?;
    read_trace_from(std::io::BufReader::new(file), path)
}

/// The file contents with the `wall_ns` column blanked.
pub fn without_wall_clock(csv_text: &str) -> String {
    csv_text
        .lines()
        .map(|l| match l.rfind(',') {
            Some(at) => &l[..at],
            None => l,
        })
        .collect::<Vec<_>>()
        .join("\n")
}
