//! Dense row-stochastic matrices and their CSV debug dump.
//!
//! The dump lists every nonzero entry as `row,col,probability`, one per line,
//! after a `row,col,probability` header. Both the analysis engine and the
//! oracle write the same schema so two dumps can be diffed textually.

use std::fmt::Write as _;

use crate::error::ParseError;

/// Row = current state, column = next state.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    size: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            data: vec![0.0; size * size],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let size = rows.len();
        let mut data = Vec::with_capacity(size * size);
        for row in rows {
            assert_eq!(row.len(), size, "matrix rows must be square");
            data.extend(row);
        }
        Self { size, data }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.size + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.size + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.size..(row + 1) * self.size]
    }

    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        &mut self.data[row * self.size..(row + 1) * self.size]
    }

    /// Largest `|1 - row sum|` over all rows.
    pub fn max_row_defect(&self) -> f64 {
        (0..self.size)
            .map(|i| (1.0 - self.row(i).iter().sum::<f64>()).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest entrywise difference; infinite when the sizes differ.
    pub fn max_abs_diff(&self, other: &TransitionMatrix) -> f64 {
        if self.size != other.size {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Row vector times matrix.
    pub fn left_multiply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.size];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(self.row(i)) {
                *o += vi * p;
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,col,probability\n");
        for i in 0..self.size {
            for (j, &p) in self.row(i).iter().enumerate() {
                if p != 0.0 {
                    let _ = writeln!(out, "{i},{j},{p:e}");
                }
            }
        }
        out
    }

    /// Parse a dump produced by [`TransitionMatrix::to_csv`] for a matrix of
    /// the given size. Entries not listed are zero.
    pub fn from_csv(text: &str, size: usize) -> Result<Self, ParseError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == "row,col,probability" => {}
            _ => return Err(ParseError::new(1, "missing `row,col,probability` header")),
        }
        let mut m = Self::zeros(size);
        let mut seen = vec![false; size * size];
        for (idx, line) in lines {
            let line_no = idx + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let (Some(r), Some(c), Some(p), None) =
                (fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return Err(ParseError::new(line_no, "expected three fields"));
            };
            let r: usize = r
                .trim()
                .parse()
                .map_err(|_| ParseError::new(line_no, "bad row index"))?;
            let c: usize = c
                .trim()
                .parse()
                .map_err(|_| ParseError::new(line_no, "bad column index"))?;
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|_| ParseError::new(line_no, "bad probability"))?;
            if r >= size || c >= size {
                return Err(ParseError::new(line_no, format!("index out of range for size {size}")));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(ParseError::new(line_no, "probability outside [0, 1]"));
            }
            if std::mem::replace(&mut seen[r * size + c], true) {
                return Err(ParseError::new(line_no, "duplicate entry"));
            }
            m.set(r, c, p);
        }
        Ok(m)
    }
}
