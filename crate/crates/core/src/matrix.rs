use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Relative asymmetry tolerated on ingest before the input is rejected.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Dense real symmetric matrix. Symmetry holds exactly: every constructor
/// either mirrors one triangle or symmetrizes the input.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    data: DMatrix<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(m: usize) -> Self {
        SymmetricMatrix {
            data: DMatrix::zeros(m, m),
        }
    }

    pub fn identity(m: usize) -> Self {
        SymmetricMatrix {
            data: DMatrix::identity(m, m),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut s = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            s.data[(i, i)] = d;
        }
        s
    }

    /// Builds a matrix from `f(i, j)` evaluated on the lower triangle.
    pub fn from_lower_fn(m: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let v = f(i, j);
                data[(i, j)] = v;
                data[(j, i)] = v;
            }
        }
        SymmetricMatrix { data }
    }

    /// Ingests a full square matrix, replacing it by `(M + Mᵀ)/2`.
    pub fn from_dmatrix(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::InvalidInput(format!(
                "matrix is {}x{}, expected square",
                data.nrows(),
                data.ncols()
            )));
        }
        let m = data.nrows();
        let mut max_abs: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                let v = data[(i, j)];
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                max_abs = max_abs.max(v.abs());
            }
        }
        for i in 0..m {
            for j in 0..i {
                if (data[(i, j)] - data[(j, i)]).abs() > SYMMETRY_TOL * max_abs {
                    return Err(Error::InvalidInput(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self::from_lower_fn(m, |i, j| 0.5 * (data[(i, j)] + data[(j, i)])))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != m) {
            return Err(Error::InvalidInput(format!(
                "row of length {} in a {m}-row matrix",
                r.len()
            )));
        }
        Self::from_dmatrix(DMatrix::from_fn(m, m, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[(i, j)] = v;
        self.data[(j, i)] = v;
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_dmatrix(self) -> DMatrix<f64> {
        self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// `max(1, largest |entry|)`.
    pub fn scale(&self) -> f64 {
        self.max_abs().max(1.0)
    }

    pub fn check_finite(&self) -> Result<()> {
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                if !self.get(i, j).is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    /// Principal submatrix on `indices`, in the given order.
    pub fn principal_submatrix(&self, indices: &[usize]) -> SymmetricMatrix {
        Self::from_lower_fn(indices.len(), |a, b| self.get(indices[a], indices[b]))
    }

    pub fn add(&self, other: &SymmetricMatrix) -> SymmetricMatrix {
        SymmetricMatrix {
            data: &self.data + &other.data,
        }
    }

    pub fn scaled(&self, c: f64) -> SymmetricMatrix {
        SymmetricMatrix {
            data: &self.data * c,
        }
    }

    /// Largest `|a_ij - b_ij|` divided by `max(1, largest |entry| of either)`.
    pub fn max_rel_diff(&self, other: &SymmetricMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim());
        let scale = self.scale().max(other.scale());
        (&self.data - &other.data).amax() / scale
    }

    /// First off-diagonal entry at a non-edge of `g` exceeding
    /// `threshold · max(1, largest |entry|)` in magnitude.
    pub fn pattern_violation(&self, g: &Graph, threshold: f64) -> Option<(usize, usize, f64)> {
        let limit = threshold * self.scale();
        for i in 0..self.dim() {
            for j in 0..i {
                if !g.has_edge(i, j) && self.get(i, j).abs() > limit {
                    return Some((j, i, self.get(i, j)));
                }
            }
        }
        None
    }

    /// Copy with every non-edge entry set to exactly zero.
    pub fn project_pattern(&self, g: &Graph) -> SymmetricMatrix {
        Self::from_lower_fn(self.dim(), |i, j| {
            if i == j || g.has_edge(i, j) {
                self.get(i, j)
            } else {
                0.0
            }
        })
    }

    /// Symmetric permutation `P Σ Pᵀ` with new index `k` = old `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> SymmetricMatrix {
        self.principal_submatrix(order)
    }
}
