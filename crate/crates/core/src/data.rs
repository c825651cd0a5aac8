//! Dense, column-named numeric tables.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{invalid, Error, Result};

/// An `n x d` table of finite doubles with unique column names, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<String>,
    values: Vec<f64>,
    n: usize,
}

impl Dataset {
    pub fn from_rows(columns: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let d = columns.len();
        let mut values = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(invalid(format!(
                    "row {} has {} values, expected {}",
                    i + 1,
                    row.len(),
                    d
                )));
            }
            values.extend_from_slice(row);
        }
        Self::from_row_major(columns, values)
    }

    pub fn from_columns(columns: Vec<String>, data: &[Vec<f64>]) -> Result<Self> {
        if columns.len() != data.len() {
            return Err(invalid("number of names and columns differ"));
        }
        let n = data.first().map_or(0, Vec::len);
        if data.iter().any(|c| c.len() != n) {
            return Err(invalid("columns have different lengths"));
        }
        let d = columns.len();
        let mut values = vec![0.0; n * d];
        for (j, col) in data.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                values[i * d + j] = v;
            }
        }
        Self::from_row_major(columns, values)
    }

    pub fn from_row_major(columns: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let d = columns.len();
        if d == 0 {
            return Err(invalid("dataset needs at least one column"));
        }
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.as_str()) {
                return Err(invalid(format!("duplicate column name `{c}`")));
            }
        }
        if !values.len().is_multiple_of(d) {
            return Err(invalid("value count is not a multiple of the column count"));
        }
        let n = values.len() / d;
        if n == 0 {
            return Err(invalid("dataset needs at least one row"));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Csv {
                row: pos / d + 1,
                column: pos % d + 1,
                message: "value is not finite".into(),
            });
        }
        Ok(Self { columns, values, n })
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn column_indices<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        names.iter().map(|s| self.column_index(s.as_ref())).collect()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_cols();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_cols())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols() + j]
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let j = self.column_index(name)?;
        Ok(self.column_at(j))
    }

    pub fn column_at(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Rows of the named columns, each row as a vector.
    pub fn points<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<Vec<f64>>> {
        let idx = self.column_indices(names)?;
        Ok(self
            .rows()
            .map(|r| idx.iter().map(|&j| r[j]).collect())
            .collect())
    }

    /// New dataset made of the given rows, in the given order (repeats allowed).
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let d = self.n_cols();
        let mut values = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            if i >= self.n {
                return Err(invalid(format!("row index {i} out of range")));
            }
            values.extend_from_slice(self.row(i));
        }
        if values.is_empty() {
            return Err(invalid("row selection is empty"));
        }
        Ok(Self {
            columns: self.columns.clone(),
            values,
            n: indices.len(),
        })
    }

    pub fn slice_rows(&self, range: std::ops::Range<usize>) -> Result<Self> {
        let idx: Vec<usize> = range.collect();
        self.select_rows(&idx)
    }

    /// Appends a column computed row by row.
    pub fn with_column<F>(&self, name: &str, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64,
    {
        let mut columns = self.columns.clone();
        columns.push(name.to_string());
        let d = columns.len();
        let mut values = Vec::with_capacity(self.n * d);
        for r in self.rows() {
            values.extend_from_slice(r);
            values.push(f(r));
        }
        Self::from_row_major(columns, values)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers().map_err(|e| csv_error(&e, 1))?.clone();
        let columns: Vec<String> = headers.iter().map(str::to_string).collect();
        let d = columns.len();
        let mut values = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            // header is row 1
            let row = i + 2;
            let record = record.map_err(|e| csv_error(&e, row))?;
            if record.len() != d {
                return Err(Error::Csv {
                    row,
                    column: record.len().min(d) + 1,
                    message: format!("expected {d} fields, found {}", record.len()),
                });
            }
            for (j, field) in record.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| Error::Csv {
                    row,
                    column: j + 1,
                    message: format!("cannot parse `{field}` as a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Csv {
                        row,
                        column: j + 1,
                        message: "value is not finite".into(),
                    });
                }
                values.push(v);
            }
        }
        if values.is_empty() {
            return Err(Error::Csv {
                row: 2,
                column: 1,
                message: "no data rows".into(),
            });
        }
        Self::from_row_major(columns, values)
    }

    pub fn read_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let map = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
        wtr.write_record(&self.columns).map_err(map)?;
        for r in self.rows() {
            wtr.write_record(r.iter().map(|v| format!("{v}"))).map_err(map)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn csv_error(e: &csv::Error, row: usize) -> Error {
    let row = e
        .position()
        .map(|p| p.line() as usize)
        .filter(|&l| l > 0)
        .unwrap_or(row);
    Error::Csv {
        row,
        column: 1,
        message: e.to_string(),
    }
}
