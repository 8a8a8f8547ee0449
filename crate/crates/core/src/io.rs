//! Plain-text formats: headerless numeric CSV for matrices and vectors, long-format
//! `time,dim,value` CSV for sampled curves, and serde helpers for matrices in JSON.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::dynamics::TimeGrid;
use crate::error::{IdentError, Result};

/// Scientific notation with 17 significant digits; reads back to the identical `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut s = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_f64(m[(i, j)])).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

fn parse_field(tok: &str, line: usize) -> Result<f64> {
    tok.trim()
        .parse::<f64>()
        .map_err(|_| IdentError::Parse(format!("line {line}: bad number {:?}", tok.trim())))
}

pub fn matrix_from_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| parse_field(t, k + 1))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(IdentError::Parse(format!(
                    "line {}: expected {} fields, got {}",
                    k + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(IdentError::Parse("empty matrix".into()));
    }
    let (r, c) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_row_iterator(r, c, rows.into_iter().flatten()))
}

/// Reads a vector written either as one row or as one column.
pub fn vector_from_csv(text: &str) -> Result<DVector<f64>> {
    let m = matrix_from_csv(text)?;
    if m.ncols() == 1 {
        Ok(m.column(0).into_owned())
    } else if m.nrows() == 1 {
        Ok(m.row(0).transpose())
    } else {
        Err(IdentError::Parse(format!(
            "expected a vector, got a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )))
    }
}

/// One value per line.
pub fn vector_to_csv(v: &DVector<f64>) -> String {
    v.iter().map(|x| fmt_f64(*x) + "\n").collect()
}

pub fn trajectory_to_csv(grid: &TimeGrid, x: &DMatrix<f64>) -> String {
    let mut s = String::from("time,dim,value\n");
    for (j, &t) in grid.points().iter().enumerate() {
        for i in 0..x.nrows() {
            let _ = writeln!(s, "{},{},{}", fmt_f64(t), i + 1, fmt_f64(x[(i, j)]));
        }
    }
    s
}

/// Parses long-format `time,dim,value` rows (any order) into a grid and a `d × n` matrix.
pub fn trajectory_from_csv(text: &str) -> Result<(TimeGrid, DMatrix<f64>)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| IdentError::Parse("empty trajectory file".into()))?;
    let cols: Vec<String> = header.split(',').map(|h| h.trim().to_lowercase()).collect();
    if cols != ["time", "dim", "value"] {
        return Err(IdentError::Parse(format!(
            "expected header time,dim,value, got {header:?}"
        )));
    }
    let mut entries: Vec<(f64, usize, f64)> = Vec::new();
    for (k, line) in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(IdentError::Parse(format!("line {}: expected 3 fields", k + 1)));
        }
        let t = parse_field(f[0], k + 1)?;
        let dim = f[1]
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&d| d >= 1)
            .ok_or_else(|| IdentError::Parse(format!("line {}: bad dim {:?}", k + 1, f[1])))?;
        entries.push((t, dim, parse_field(f[2], k + 1)?));
    }
    let d = entries.iter().map(|e| e.1).max().unwrap_or(0);
    let mut times: Vec<f64> = entries.iter().map(|e| e.0).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let n = times.len();
    let mut x = DMatrix::from_element(d, n, f64::NAN);
    for (t, dim, v) in entries {
        let j = times.binary_search_by(|p| p.total_cmp(&t)).expect("time present");
        if !x[(dim - 1, j)].is_nan() {
            return Err(IdentError::Parse(format!("duplicate entry at time {t}, dim {dim}")));
        }
        x[(dim - 1, j)] = v;
    }
    if x.iter().any(|v| v.is_nan()) {
        return Err(IdentError::Parse("trajectory has missing (time, dim) entries".into()));
    }
    Ok((TimeGrid::new(times)?, x))
}

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| IdentError::Io(format!("{}: {e}", path.display())))
}

pub fn write_string(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| IdentError::Io(format!("{}: {e}", path.display())))
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    matrix_from_csv(&read_to_string(path)?)
}

pub fn read_vector(path: &Path) -> Result<DVector<f64>> {
    vector_from_csv(&read_to_string(path)?)
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    write_string(path, &matrix_to_csv(m))
}

/// Row lists for a matrix.
pub fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// `#[serde(with = "matrix_rows")]`: a matrix as a list of rows.
pub mod matrix_rows {
    use nalgebra::DMatrix;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(super::rows_of(m))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(D::Error::custom("ragged matrix rows"));
        }
        Ok(DMatrix::from_row_iterator(r, c, rows.into_iter().flatten()))
    }
}

/// `#[serde(with = "extended_f64")]`: non-finite values as the strings `"inf"`, `"-inf"`,
/// `"nan"` so JSON output never silently turns them into `null`.
pub mod extended_f64 {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(D::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}
