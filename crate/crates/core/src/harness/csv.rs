use std::io::Write;
use std::path::Path;

use super::run::{ExperimentTrace, Record};
use crate::error::{Error, Result};

pub const HEADER: [&str; 6] = ["algorithm", "seed", "episode", "rmspbe", "nnz", "wall_ms"];

/// 17 significant digits, enough to round-trip every `f64`.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(trace: &ExperimentTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Csv {
        line: 0,
        message: e.to_string(),
    };
    w.write_record(HEADER).map_err(io)?;
    for r in &trace.records {
        w.write_record([
            r.algorithm.clone(),
            r.seed.to_string(),
            r.episode.to_string(),
            fmt_float(r.rmspbe),
            r.nnz.to_string(),
            fmt_float(r.wall_ms),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Csv {
        line: 0,
        message: e.to_string(),
    })
}

pub fn to_csv_string(trace: &ExperimentTrace) -> String {
    let mut buf = Vec::new();
    write_csv(trace, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}

/// Writes the trace to `path`, replacing any existing file.
pub fn emit_csv(trace: &ExperimentTrace, path: &Path) -> Result<()> {
    std::fs::write(path, to_csv_string(trace)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Inverse of [`write_csv`]. Requires the exact header.
pub fn parse_csv(text: &str) -> Result<ExperimentTrace> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut rows = reader.records();
    let header = rows.next().ok_or(Error::Csv {
        line: 1,
        message: "missing header".into(),
    })?;
    let header = header.map_err(|e| Error::Csv {
        line: 1,
        message: e.to_string(),
    })?;
    if header.iter().ne(HEADER) {
        return Err(Error::Csv {
            line: 1,
            message: format!("expected header `{}`", HEADER.join(",")),
        });
    }
    let mut records = Vec::new();
    for (i, row) in rows.enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::Csv {
            line,
            message: e.to_string(),
        })?;
        if row.len() != HEADER.len() {
            return Err(Error::Csv {
                line,
                message: format!("expected {} fields, found {}", HEADER.len(), row.len()),
            });
        }
        let bad = |field: &str| Error::Csv {
            line,
            message: format!("cannot parse {field}"),
        };
        records.push(Record {
            algorithm: row[0].to_string(),
            seed: row[1].parse().map_err(|_| bad("seed"))?,
            episode: row[2].parse().map_err(|_| bad("episode"))?,
            rmspbe: row[3].parse().map_err(|_| bad("rmspbe"))?,
            nnz: row[4].parse().map_err(|_| bad("nnz"))?,
            wall_ms: row[5].parse().map_err(|_| bad("wall_ms"))?,
        });
    }
    Ok(ExperimentTrace { records })
}

pub fn read_csv(path: &Path) -> Result<ExperimentTrace> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(&text)
}
