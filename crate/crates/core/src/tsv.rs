//! Minimal tab-separated reader shared by the edge, membership, exemplar and
//! snapshot loaders. Blank lines and `#` comments are ignored; a first line whose
//! `probe_column` field does not parse as a number is treated as a header.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};

pub(crate) struct Row {
    pub line: usize,
    pub fields: Vec<String>,
}

pub(crate) fn read_rows(path: &Path, probe_column: usize) -> Result<Vec<Row>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    let mut first = true;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<String> = trimmed.split('\t').map(|f| f.trim().to_string()).collect();
        if first {
            first = false;
            let numeric = fields
                .get(probe_column)
                .is_some_and(|f| f.parse::<f64>().is_ok());
            if !numeric {
                continue;
            }
        }
        rows.push(Row {
            line: i + 1,
            fields,
        });
    }
    Ok(rows)
}
