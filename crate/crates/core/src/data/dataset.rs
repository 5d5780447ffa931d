use std::io::{Read, Write};
use std::path::Path;

use crate::bits::{BitMatrix, BitVector};
use crate::{Error, Result};

/// `n` labelled points of `{0,1}^d` with responses in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    x: BitMatrix,
    y: Vec<f64>,
}

impl Dataset {
    pub fn new(x: BitMatrix, y: Vec<f64>) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.rows(),
                actual: y.len(),
            });
        }
        if let Some(v) = y.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return Err(Error::InvalidDataset(format!(
                "response {v} outside [-1, 1]"
            )));
        }
        Ok(Self { x, y })
    }

    pub fn from_rows(d: usize, rows: &[BitVector], y: Vec<f64>) -> Result<Self> {
        let mut x = BitMatrix::with_capacity(d, rows.len());
        for r in rows {
            x.push(r)?;
        }
        Self::new(x, y)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    pub fn x(&self) -> &BitMatrix {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        self.x.row(i)
    }

    #[inline]
    pub fn bit(&self, i: usize, coord: usize) -> bool {
        self.x.get(i, coord)
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select(indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
        }
    }

    /// Same features with different responses.
    pub fn with_y(&self, y: Vec<f64>) -> Result<Dataset> {
        Dataset::new(self.x.clone(), y)
    }

    /// Writes `x_1,...,x_d,y` with bits as `0`/`1` and `y` to 17 significant
    /// digits.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let d = self.dim();
        let mut record: Vec<String> = (1..=d).map(|j| format!("x_{j}")).collect();
        record.push("y".into());
        wtr.write_record(&record)?;
        for i in 0..self.len() {
            for (c, field) in record.iter_mut().take(d).enumerate() {
                *field = if self.bit(i, c) { "1" } else { "0" }.into();
            }
            record[d] = format!("{:.16e}", self.y[i]);
            wtr.write_record(&record)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        let d = headers
            .len()
            .checked_sub(1)
            .filter(|&d| d > 0)
            .ok_or_else(|| Error::InvalidDataset("header must be x_1,...,x_d,y".into()))?;
        for (j, h) in headers.iter().enumerate() {
            let expected = if j == d {
                "y".to_string()
            } else {
                format!("x_{}", j + 1)
            };
            if h != expected {
                return Err(Error::InvalidDataset(format!(
                    "header column {} is {h:?}, expected {expected:?}",
                    j + 1
                )));
            }
        }
        let mut x = BitMatrix::new(d);
        let mut y = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let mut v = BitVector::zeros(d);
            for c in 0..d {
                match &rec[c] {
                    "0" => {}
                    "1" => v.set(c, true),
                    other => {
                        return Err(Error::InvalidDataset(format!(
                            "row {}: bit {other:?} in column x_{}",
                            line + 1,
                            c + 1
                        )))
                    }
                }
            }
            x.push(&v)?;
            let val: f64 = rec[d].trim().parse().map_err(|_| {
                Error::InvalidDataset(format!("row {}: bad response {:?}", line + 1, &rec[d]))
            })?;
            y.push(val);
        }
        Self::new(x, y)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        let rows = [
            BitVector::from_bits(&[0, 1, 1]).unwrap(),
            BitVector::from_bits(&[1, 0, 0]).unwrap(),
        ];
        Dataset::from_rows(3, &rows, vec![0.1, -1.0 / 3.0]).unwrap()
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let data = tiny();
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x_1,x_2,x_3,y\n0,1,1,"));
        assert_eq!(Dataset::read_csv(buf.as_slice()).unwrap(), data);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Dataset::read_csv("x_1,z\n0,0.5\n".as_bytes()).is_err());
        assert!(Dataset::read_csv("x_1,y\n2,0.5\n".as_bytes()).is_err());
        assert!(Dataset::read_csv("x_1,y\n1,1.5\n".as_bytes()).is_err());
        let x = BitMatrix::new(2);
        assert!(Dataset::new(x, vec![0.0]).is_err());
    }

    #[test]
    fn select_keeps_order() {
        let data = tiny();
        let s = data.select(&[1, 0, 1]);
        assert_eq!(s.len(), 3);
        assert_eq!(s.y()[0], data.y()[1]);
        assert_eq!(s.row(2), data.row(1));
    }
}
