//! Real-valued grids shared by the FTLE, spectrum and magnitude stages.

use crate::error::{Error, Result};

/// Row-major real-valued grid.
///
/// `offset` is the (col, row) position of cell (0, 0) inside the lattice the
/// field was derived from, so cropped fields can be mapped back.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    cols: usize,
    rows: usize,
    values: Vec<f64>,
    offset: (usize, usize),
}

impl ScalarField {
    pub fn new(cols: usize, rows: usize, values: Vec<f64>) -> Result<Self> {
        if cols == 0 || rows == 0 {
            return Err(Error::InvalidArgument(
                "scalar field must be non-empty".into(),
            ));
        }
        if values.len() != cols * rows {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {cols}x{rows} field",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("scalar field"));
        }
        Ok(Self {
            cols,
            rows,
            values,
            offset: (0, 0),
        })
    }

    pub fn filled(cols: usize, rows: usize, value: f64) -> Self {
        assert!(cols > 0 && rows > 0 && value.is_finite());
        Self {
            cols,
            rows,
            values: vec![value; cols * rows],
            offset: (0, 0),
        }
    }

    pub fn from_fn(
        cols: usize,
        rows: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(cols * rows);
        for r in 0..rows {
            for c in 0..cols {
                values.push(f(c, r));
            }
        }
        Self::new(cols, rows, values)
    }

    pub(crate) fn from_parts_unchecked(
        cols: usize,
        rows: usize,
        values: Vec<f64>,
        offset: (usize, usize),
    ) -> Self {
        debug_assert_eq!(values.len(), cols * rows);
        Self {
            cols,
            rows,
            values,
            offset,
        }
    }

    pub fn with_offset(mut self, offset: (usize, usize)) -> Self {
        self.offset = offset;
        self
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn offset(&self) -> (usize, usize) {
        self.offset
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = self.values.iter().map(|&v| f(v)).collect();
        Ok(Self::new(self.cols, self.rows, values)?.with_offset(self.offset))
    }

    /// Rounds every value through `f32`, the precision of the on-disk format.
    pub fn quantized(&self) -> Self {
        Self {
            values: self.values.iter().map(|&v| v as f32 as f64).collect(),
            ..self.clone()
        }
    }
}
