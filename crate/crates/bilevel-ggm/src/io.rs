//! CSV and JSON files.
//!
//! Matrices and data sets are written with a `v1..vp` header and 17 significant
//! digits, so a written matrix reads back bit for bit. Edge lists use columns
//! `j,jp` with 1-based indices.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use bilevel_ggm_core::{EdgeSet, SubjectData, SymMatrix};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn finish(path: &Path, mut w: BufWriter<File>) -> CliResult<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn create_dir(path: &Path) -> CliResult<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

fn header(p: usize) -> String {
    (1..=p)
        .map(|j| format!("v{j}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Writes `rows` rows of `p` values each.
pub fn write_table(path: &Path, p: usize, values: &[f64]) -> CliResult<()> {
    let mut w = create(path)?;
    writeln!(w, "{}", header(p)).map_err(|e| CliError::io(path, e))?;
    for row in values.chunks(p.max(1)) {
        let cells: Vec<String> = row.iter().map(|&x| format_f64(x)).collect();
        writeln!(w, "{}", cells.join(",")).map_err(|e| CliError::io(path, e))?;
    }
    finish(path, w)
}

/// Reads a numeric table with a header row; returns `(rows, columns, values)`.
pub fn read_table(path: &Path) -> CliResult<(usize, usize, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let p = rdr.headers().map_err(|e| csv_error(path, e))?.len();
    let mut values = Vec::new();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        if rec.len() != p {
            return Err(CliError::data(
                path,
                format!("row {} has {} fields, expected {p}", rows + 1, rec.len()),
            ));
        }
        for field in rec.iter() {
            let x: f64 = field
                .parse()
                .map_err(|_| CliError::data(path, format!("not a number: {field:?}")))?;
            if !x.is_finite() {
                return Err(CliError::data(path, format!("non-finite value {field:?}")));
            }
            values.push(x);
        }
        rows += 1;
    }
    Ok((rows, p, values))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(path, io),
            _ => unreachable!(),
        }
    } else {
        CliError::data(path, e)
    }
}

pub fn write_matrix(path: &Path, m: &SymMatrix) -> CliResult<()> {
    write_table(path, m.dim(), m.as_slice())
}

pub fn read_matrix(path: &Path) -> CliResult<SymMatrix> {
    let (rows, p, values) = read_table(path)?;
    if rows != p {
        return Err(CliError::data(
            path,
            format!("expected a square matrix, got {rows} x {p}"),
        ));
    }
    SymMatrix::new(p, values).map_err(|e| CliError::data(path, e))
}

pub fn read_subject(path: &Path) -> CliResult<SubjectData> {
    let (n, p, values) = read_table(path)?;
    SubjectData::new(n, p, values).map_err(|e| CliError::data(path, e))
}

pub fn write_edges(path: &Path, edges: &EdgeSet) -> CliResult<()> {
    let mut w = create(path)?;
    let mut out = String::from("j,jp\n");
    for (a, b) in edges.iter() {
        out.push_str(&format!("{},{}\n", a + 1, b + 1));
    }
    w.write_all(out.as_bytes())
        .map_err(|e| CliError::io(path, e))?;
    finish(path, w)
}

pub fn read_edges(path: &Path, p: usize) -> CliResult<EdgeSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut edges = EdgeSet::empty(p);
    for rec in rdr.deserialize::<(usize, usize)>() {
        let (j, jp) = rec.map_err(|e| csv_error(path, e))?;
        if j == 0 || jp == 0 {
            return Err(CliError::data(path, "edge indices are 1-based"));
        }
        edges
            .insert(j - 1, jp - 1)
            .map_err(|e| CliError::data(path, e))?;
    }
    Ok(edges)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::data(path, e))
}

/// Files in `dir` named `<prefix><k><suffix>`, ordered by `k`. Indices must run
/// `1..=K` without gaps.
pub fn indexed_files(dir: &Path, prefix: &str, suffix: &str) -> CliResult<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut found = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| CliError::io(dir, e))?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        let Some(index) = name
            .strip_prefix(prefix)
            .and_then(|rest| rest.strip_suffix(suffix))
        else {
            continue;
        };
        if let Ok(k) = index.parse::<usize>() {
            if index.bytes().all(|c| c.is_ascii_digit()) {
                found.push((k, entry.path()));
            }
        }
    }
    found.sort();
    for (i, (k, path)) in found.iter().enumerate() {
        if *k != i + 1 {
            return Err(CliError::data(
                path,
                format!("expected index {} in {prefix}<k>{suffix} numbering", i + 1),
            ));
        }
    }
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

/// `subject_<k>.csv` files of `dir`, all with the same number of variables.
pub fn read_subjects(dir: &Path) -> CliResult<Vec<SubjectData>> {
    let files = indexed_files(dir, "subject_", ".csv")?;
    if files.is_empty() {
        return Err(CliError::data(dir, "no subject_<k>.csv files"));
    }
    let mut subjects = Vec::with_capacity(files.len());
    for f in &files {
        let s = read_subject(f)?;
        if let Some(first) = subjects.first() {
            let first: &SubjectData = first;
            if s.p() != first.p() {
                return Err(CliError::InconsistentDimensions(format!(
                    "{} has {} variables, {} has {}",
                    f.display(),
                    s.p(),
                    files[0].display(),
                    first.p()
                )));
            }
        }
        subjects.push(s);
    }
    Ok(subjects)
}
