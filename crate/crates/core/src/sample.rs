//! Immutable sample storage with a target/source column layout.

use crate::error::{Error, Result};

/// N joint realizations of a target block and n source blocks.
///
/// Data is stored column-major; each variable owns a group of columns whose
/// widths are fixed. Values are validated finite on construction and the set
/// is immutable afterwards, so it can be shared freely across threads.
#[derive(Debug, Clone)]
pub struct SampleSet {
    n_samples: usize,
    columns: Vec<Vec<f64>>,
    target_cols: Vec<usize>,
    source_cols: Vec<Vec<usize>>,
}

impl SampleSet {
    /// Builds a sample set from columns plus the column groups of the target
    /// and of each source. Groups must be non-empty, disjoint and in range.
    pub fn new(
        columns: Vec<Vec<f64>>,
        target_cols: Vec<usize>,
        source_cols: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::BadLayout("no columns".into()));
        }
        let n_samples = columns[0].len();
        for column in &columns {
            if column.len() != n_samples {
                return Err(Error::BadLayout("columns differ in length".into()));
            }
        }
        for (col, column) in columns.iter().enumerate() {
            for (row, &value) in column.iter().enumerate() {
                if !value.is_finite() {
                    return Err(Error::NonFiniteValue { row, col });
                }
            }
        }
        let mut seen = vec![false; columns.len()];
        let mut claim = |group: &[usize]| -> Result<()> {
            if group.is_empty() {
                return Err(Error::BadLayout("empty column group".into()));
            }
            for &col in group {
                if col >= columns.len() {
                    return Err(Error::BadLayout(format!("column {col} out of range")));
                }
                if seen[col] {
                    return Err(Error::BadLayout(format!("column {col} claimed twice")));
                }
                seen[col] = true;
            }
            Ok(())
        };
        claim(&target_cols)?;
        if source_cols.is_empty() {
            return Err(Error::BadLayout("no source groups".into()));
        }
        for group in &source_cols {
            claim(group)?;
        }
        Ok(SampleSet {
            n_samples,
            columns,
            target_cols,
            source_cols,
        })
    }

    /// Builds a sample set from row-major data laid out target-first, each
    /// source block following in order.
    pub fn from_rows(
        rows: &[f64],
        target_dims: usize,
        source_dims: &[usize],
    ) -> Result<Self> {
        let width = target_dims + source_dims.iter().sum::<usize>();
        if width == 0 || rows.len() % width != 0 {
            return Err(Error::BadLayout(format!(
                "row data of length {} does not tile width {width}",
                rows.len()
            )));
        }
        let n = rows.len() / width;
        let mut columns = vec![Vec::with_capacity(n); width];
        for row in rows.chunks_exact(width) {
            for (col, &value) in row.iter().enumerate() {
                columns[col].push(value);
            }
        }
        let target_cols = (0..target_dims).collect();
        let mut offset = target_dims;
        let mut source_cols = Vec::with_capacity(source_dims.len());
        for &dims in source_dims {
            source_cols.push((offset..offset + dims).collect());
            offset += dims;
        }
        SampleSet::new(columns, target_cols, source_cols)
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_sources(&self) -> usize {
        self.source_cols.len()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, index: usize) -> &[f64] {
        &self.columns[index]
    }

    pub fn target_cols(&self) -> &[usize] {
        &self.target_cols
    }

    pub fn source_cols(&self, source: usize) -> &[usize] {
        &self.source_cols[source]
    }

    /// Column slices of the target block.
    pub fn target_block(&self) -> Vec<&[f64]> {
        self.target_cols.iter().map(|&c| self.column(c)).collect()
    }

    /// Column slices of one source block (0-based source index).
    pub fn source_block(&self, source: usize) -> Vec<&[f64]> {
        self.source_cols[source]
            .iter()
            .map(|&c| self.column(c))
            .collect()
    }

    /// Applies a per-column transformation, keeping the layout.
    pub fn map_columns<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, &[f64]) -> Result<Vec<f64>>,
    {
        let mut columns = Vec::with_capacity(self.columns.len());
        for (index, column) in self.columns.iter().enumerate() {
            columns.push(f(index, column)?);
        }
        SampleSet::new(columns, self.target_cols.clone(), self.source_cols.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_bad_layout() {
        let err = SampleSet::new(
            vec![vec![0.0, f64::NAN]],
            vec![0],
            vec![vec![0]],
        );
        assert!(matches!(err, Err(Error::BadLayout(_))));
        let err = SampleSet::new(
            vec![vec![0.0], vec![f64::INFINITY]],
            vec![0],
            vec![vec![1]],
        );
        assert!(matches!(err, Err(Error::NonFiniteValue { row: 0, col: 1 })));
    }

    #[test]
    fn from_rows_splits_blocks() {
        let rows = [0.0, 1.0, 2.0, 10.0, 11.0, 12.0];
        let set = SampleSet::from_rows(&rows, 1, &[1, 1]).unwrap();
        assert_eq!(set.n_samples(), 2);
        assert_eq!(set.n_sources(), 2);
        assert_eq!(set.column(0), &[0.0, 10.0]);
        assert_eq!(set.source_block(1)[0], &[2.0, 12.0]);
    }
}
