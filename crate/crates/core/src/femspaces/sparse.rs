use nalgebra as na;
use serde::{Deserialize, Serialize};

/// Real sparse matrix stored by rows.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SparseMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            rows: vec![Vec::new(); nrows],
        }
    }

    /// Sets entry `(i, j)`, replacing any previous value.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        match self.rows[i].binary_search_by_key(&j, |e| e.0) {
            Ok(k) => self.rows[i][k].1 = v,
            Err(k) => self.rows[i].insert(k, (j, v)),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .binary_search_by_key(&j, |e| e.0)
            .map_or(0.0, |k| self.rows[i][k].1)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|(j, v)| v * x[*j]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> na::DMatrix<f64> {
        let mut m = na::DMatrix::zeros(self.nrows, self.ncols);
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, v) in r {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Dense restriction to the listed rows and columns.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> na::DMatrix<f64> {
        let mut m = na::DMatrix::zeros(rows.len(), cols.len());
        for (i, &r) in rows.iter().enumerate() {
            for &(j, v) in &self.rows[r] {
                if let Ok(k) = cols.binary_search(&j) {
                    m[(i, k)] = v;
                }
            }
        }
        m
    }
}
