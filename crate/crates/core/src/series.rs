use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

/// An ordered stretch of `n` observations, each a point in `R^d`.
///
/// Stored row-major. Every entry is finite and `n >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    data: Vec<f64>,
    n: usize,
    d: usize,
}

impl TimeSeries {
    pub fn new(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: data.len() % dim,
            });
        }
        let n = data.len() / dim;
        if n < 2 {
            return Err(Error::SeriesTooShort(n));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(Self { data, n, d: dim })
    }

    pub fn scalar(values: Vec<f64>) -> Result<Self> {
        Self::new(values, 1)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(1, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(data, dim)
    }

    /// Reads headerless CSV: one observation per line, `d` comma-separated reals.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut data = Vec::new();
        let mut dim = None;
        for record in rdr.records() {
            let record = record.map_err(|e| Error::Csv {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            if record.iter().all(str::is_empty) {
                continue;
            }
            let width = *dim.get_or_insert(record.len());
            if record.len() != width {
                return Err(Error::Csv {
                    line,
                    message: format!("expected {width} fields, found {}", record.len()),
                });
            }
            for field in record.iter() {
                let x: f64 = field.parse().map_err(|_| Error::Csv {
                    line,
                    message: format!("not a real number: {field:?}"),
                })?;
                data.push(x);
            }
        }
        Self::new(data, dim.unwrap_or(1))
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    /// Always false; kept for API symmetry with `len`.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Coordinatewise sample mean.
    ///
    /// Accumulated relative to the first observation, so a constant series
    /// returns its value exactly.
    pub fn mean(&self) -> Vec<f64> {
        let origin = self.row(0).to_vec();
        let mut acc = vec![0.0; self.d];
        for row in self.rows() {
            for ((a, x), o) in acc.iter_mut().zip(row).zip(&origin) {
                *a += x - o;
            }
        }
        acc.iter()
            .zip(&origin)
            .map(|(a, o)| o + a / self.n as f64)
            .collect()
    }

    /// Copy of observations `start..start + len`.
    pub fn window(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.n {
            return Err(Error::InvalidParameter(format!(
                "window {start}..{} exceeds series length {}",
                start + len,
                self.n
            )));
        }
        Self::new(
            self.data[start * self.d..(start + len) * self.d].to_vec(),
            self.d,
        )
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.data.iter().map(|&x| f(x)).collect(), self.d)
    }
}
