//! CSV output: header row, comma separated, LF line endings.

use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, Result};
use crate::io::write_bytes;

/// Row types written as CSV. `HEADER` must list the struct's fields in order.
pub trait CsvRow: Serialize {
    const HEADER: &'static [&'static str];
}

pub fn to_csv<T: CsvRow>(rows: &[T]) -> Result<String> {
    let encode = |e: csv::Error| CliError::Usage(format!("cannot encode CSV: {e}"));
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(T::HEADER).map_err(encode)?;
    for r in rows {
        w.serialize(r).map_err(encode)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(format!("cannot encode CSV: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV writer emits UTF-8"))
}

pub fn write_csv<T: CsvRow>(path: &Path, rows: &[T]) -> Result<()> {
    write_bytes(path, to_csv(rows)?.as_bytes())
}
