//! Labelled dense datasets for the logistic problem.
//!
//! Text format: one sample per line, whitespace- or comma-separated
//! features followed by the label (`-1` or `1`). Blank lines and lines
//! starting with `#` are ignored.
//!
//! Binary format (little endian):
//!
//! | offset | size | content                                   |
//! |--------|------|-------------------------------------------|
//! | 0      | 8    | magic `NCGDATA\0`                          |
//! | 8      | 4    | format version (`u32`, currently 1)        |
//! | 12     | 8    | sample count `N` (`u64`)                   |
//! | 20     | 8    | feature count `n` (`u64`)                  |
//! | 28     | ...  | `N` rows of `n + 1` `f64`, label last      |

use std::io::{BufRead, Read, Write};
use std::path::Path;

use rand::Rng;

use crate::error::{NcgError, Result};
use crate::linalg::{standard_normal_vector, Matrix};
use crate::rng::seeded;

pub const BINARY_MAGIC: [u8; 8] = *b"NCGDATA\0";
pub const BINARY_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    /// `N x n`, one sample per row.
    pub features: Matrix,
    pub labels: Vec<f64>,
}

fn data_err(msg: impl Into<String>) -> NcgError {
    NcgError::Dataset(msg.into())
}

impl Dataset {
    pub fn num_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn num_features(&self) -> usize {
        self.features.ncols()
    }

    /// Standard normal features, optionally rescaled to unit row norm, with
    /// labels drawn as `+1` with probability `sigmoid(a' w)` for a planted
    /// standard normal `w`.
    pub fn synthetic(samples: usize, features: usize, seed: u64, unit_rows: bool) -> Self {
        let mut rng = seeded(seed);
        let planted = standard_normal_vector(&mut rng, features);
        let mut x = Matrix::zeros(samples, features);
        let mut labels = Vec::with_capacity(samples);
        for i in 0..samples {
            let mut row = standard_normal_vector(&mut rng, features);
            if unit_rows {
                let norm = row.norm();
                if norm > 0.0 {
                    row /= norm;
                }
            }
            let p = 1.0 / (1.0 + (-row.dot(&planted)).exp());
            labels.push(if rng.random::<f64>() < p { 1.0 } else { -1.0 });
            x.row_mut(i).copy_from(&row.transpose());
        }
        Self { features: x, labels }
    }

    pub fn read_text<R: BufRead>(reader: R) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let values = trimmed
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().map_err(|e| data_err(format!("line {}: {e}", lineno + 1))))
                .collect::<Result<Vec<f64>>>()?;
            if values.len() < 2 {
                return Err(data_err(format!("line {}: need at least one feature and a label", lineno + 1)));
            }
            if let Some(first) = rows.first() {
                if first.len() != values.len() {
                    return Err(data_err(format!(
                        "line {}: {} columns, expected {}",
                        lineno + 1,
                        values.len(),
                        first.len()
                    )));
                }
            }
            rows.push(values);
        }
        Self::from_rows(rows)
    }

    fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(data_err("no samples"));
        }
        let n = rows[0].len() - 1;
        let mut features = Matrix::zeros(rows.len(), n);
        let mut labels = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            for j in 0..n {
                features[(i, j)] = row[j];
            }
            let y = row[n];
            if y != 1.0 && y != -1.0 {
                return Err(data_err(format!("sample {i}: label {y} is not -1 or 1")));
            }
            labels.push(y);
        }
        Ok(Self { features, labels })
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        for i in 0..self.num_samples() {
            let mut line = String::new();
            for j in 0..self.num_features() {
                line.push_str(&format!("{:e} ", self.features[(i, j)]));
            }
            line.push_str(&format!("{}\n", self.labels[i]));
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&BINARY_MAGIC)?;
        w.write_all(&BINARY_VERSION.to_le_bytes())?;
        w.write_all(&(self.num_samples() as u64).to_le_bytes())?;
        w.write_all(&(self.num_features() as u64).to_le_bytes())?;
        for i in 0..self.num_samples() {
            for j in 0..self.num_features() {
                w.write_all(&self.features[(i, j)].to_le_bytes())?;
            }
            w.write_all(&self.labels[i].to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if magic != BINARY_MAGIC {
            return Err(data_err("bad magic"));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != BINARY_VERSION {
            return Err(data_err(format!("unsupported version {version}")));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let samples = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let features = u64::from_le_bytes(b8) as usize;
        if samples == 0 || features == 0 {
            return Err(data_err("empty dataset"));
        }
        let mut rows = Vec::with_capacity(samples);
        for _ in 0..samples {
            let mut row = Vec::with_capacity(features + 1);
            for _ in 0..=features {
                r.read_exact(&mut b8)?;
                row.push(f64::from_le_bytes(b8));
            }
            rows.push(row);
        }
        Self::from_rows(rows)
    }

    /// Reads either format, choosing binary when the file starts with the
    /// magic bytes.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        if bytes.starts_with(&BINARY_MAGIC) {
            Self::read_binary(bytes.as_slice())
        } else {
            Self::read_text(bytes.as_slice())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip_is_exact() {
        let d = Dataset::synthetic(17, 4, 5, false);
        let mut buf = Vec::new();
        d.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 28 + 17 * 5 * 8);
        assert_eq!(Dataset::read_binary(buf.as_slice()).unwrap(), d);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let d = Dataset::synthetic(9, 3, 2, true);
        let mut buf = Vec::new();
        d.write_text(&mut buf).unwrap();
        assert_eq!(Dataset::read_text(buf.as_slice()).unwrap(), d);
    }

    #[test]
    fn text_parsing_accepts_commas_and_comments() {
        let src = "# header\n1.0, 2.0, 1\n\n3 4 -1\n";
        let d = Dataset::read_text(src.as_bytes()).unwrap();
        assert_eq!(d.labels, vec![1.0, -1.0]);
        assert_eq!(d.features[(1, 0)], 3.0);
    }

    #[test]
    fn bad_label_is_rejected() {
        assert!(Dataset::read_text("1 2 0\n".as_bytes()).is_err());
    }

    #[test]
    fn unit_rows_are_normalized() {
        let d = Dataset::synthetic(20, 5, 1, true);
        for i in 0..20 {
            assert!((d.features.row(i).norm() - 1.0).abs() < 1e-14);
        }
    }
}
