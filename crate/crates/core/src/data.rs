//! Datasets and summary-level source estimates.

use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};
use crate::scalar::{norm2, Real};

/// Design matrix plus response. An intercept, when modelled, is a separate
/// unpenalised term and never a column of `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    x: Array2<T>,
    y: Array1<T>,
    has_intercept: bool,
}

impl<T: Real> Dataset<T> {
    pub fn new(x: Array2<T>, y: Array1<T>, has_intercept: bool) -> Result<Self> {
        let (n, p) = x.dim();
        if n == 0 {
            return Err(Error::invalid("no rows"));
        }
        if p == 0 {
            return Err(Error::invalid("no covariate columns"));
        }
        if y.len() != n {
            return Err(Error::invalid(format!(
                "response length {} does not match {} rows",
                y.len(),
                n
            )));
        }
        for ((row, col), v) in x.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::invalid(format!(
                    "non-finite value at row {}, column {}",
                    row + 1,
                    col + 1
                )));
            }
        }
        if let Some(row) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite response at row {}",
                row + 1
            )));
        }
        Ok(Dataset { x, y, has_intercept })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Array2<T> {
        &self.x
    }

    pub fn y(&self) -> &Array1<T> {
        &self.y
    }

    pub fn has_intercept(&self) -> bool {
        self.has_intercept
    }

    pub fn with_intercept(mut self, has_intercept: bool) -> Self {
        self.has_intercept = has_intercept;
        self
    }

    /// Rows in the given order. Indices must be in range; an empty selection
    /// is rejected.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("row selection is empty"));
        }
        Ok(Dataset {
            x: self.x.select(Axis(0), rows),
            y: self.y.select(Axis(0), rows),
            has_intercept: self.has_intercept,
        })
    }
}

/// A pre-trained coefficient vector shared by a source study.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceEstimate<T> {
    pub id: String,
    pub omega_hat: Array1<T>,
    pub intercept_hat: Option<T>,
}

impl<T: Real> SourceEstimate<T> {
    pub fn new(id: impl Into<String>, omega_hat: Array1<T>, intercept_hat: Option<T>) -> Result<Self> {
        let id = id.into();
        if omega_hat.is_empty() {
            return Err(Error::invalid(format!("source {id}: empty coefficient vector")));
        }
        if omega_hat.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("source {id}: non-finite coefficient")));
        }
        if norm2(omega_hat.as_slice().expect("contiguous")) <= T::zero() {
            return Err(Error::ZeroNorm(format!("zero-norm source: {id}")));
        }
        Ok(SourceEstimate {
            id,
            omega_hat,
            intercept_hat,
        })
    }

    pub fn p(&self) -> usize {
        self.omega_hat.len()
    }
}

/// Checks that every source shares the target dimension.
pub fn check_source_dims<T: Real>(sources: &[SourceEstimate<T>], p: usize) -> Result<()> {
    for s in sources {
        if s.p() != p {
            return Err(Error::invalid(format!(
                "length mismatch: {} has {} coefficients, target has {}",
                s.id,
                s.p(),
                p
            )));
        }
    }
    Ok(())
}
